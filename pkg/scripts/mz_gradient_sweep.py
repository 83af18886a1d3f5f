#!/usr/bin/env python3
"""Mach-Zehnder arm separation and phase difference versus field gradient.

In a uniform field the arms close and the propagation-phase difference
vanishes; a gradient opens the arms linearly and brings the width sector
into the recombination phase.
"""

import sys

from gravmoments.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/mz"
    grads = ",".join(f"{g:g}" for g in (0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2))
    sys.exit(
        main(
            [
                "interferometer",
                "--pulse-spacing=1.0",
                "--hbar-k=2.0",
                "--g=2.0",
                f"--gradient={grads}",
                "--s0=0.5",
                "--svg",
                "--out",
                out,
            ]
        )
    )
