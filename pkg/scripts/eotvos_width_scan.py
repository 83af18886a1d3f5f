#!/usr/bin/env python3
"""Eotvos parameter across packet widths for terrestrial field parameters,
plus the width bound implied by a 1e-11 g differential-acceleration
resolution.
"""

import sys

from gravmoments import width_bound_from_eta
from gravmoments.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/eotvos"
    widths = ",".join(f"{10.0**k:g}" for k in range(-10, 1))
    code = main(["eotvos", "--g=10", "--d2g=1e-12", f"--width={widths}", "--svg", "--out", out])
    s_max = width_bound_from_eta(10.0, 1e-12, 5e-12)
    print(f"width bound for eta_max = 5e-12 (1e-11 g resolution, averaged): s <= {s_max:g} m")
    sys.exit(code)
