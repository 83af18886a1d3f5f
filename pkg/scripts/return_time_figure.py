#!/usr/bin/env python3
"""Regenerate the return-time figure data: classical (u = 0) curve plus
perturbed curves for a range of uncertainty scales.

Writes return_time.csv and return_time.svg into --out (default out/return_time).
"""

import sys

from gravmoments.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/return_time"
    sys.exit(
        main(
            [
                "return-time",
                "--u=1e-5,1e-3,1e-1,1",
                "--eps-grid=-0.9:-0.1:17",
                "--abscissa=kinetic",
                "--svg",
                "--out",
                out,
            ]
        )
    )
