"""Map the observed blow-up/boundedness boundary across the limiter
exponent and compare against the theoretical threshold (N-2)/(2(N-1)).

Usage: python scripts/regime_boundary.py [outdir] [n_alpha]
"""

import sys
from pathlib import Path

from fluxks.cli import cmd_sweep

TEMPLATE = {
    "dim": 3,
    "radius": 1.0,
    "k_f": 1.0,
    "lambda": 1.0,
    "mu": 0.1,
    "k": 1.1,
    "profile": "peaked-exponential",
    "m0": 5.0,
    "concentration": 400.0,
    "solver": "primal",
    "nodes": 121,
    "grading": 2.0,
    "t_end": 1.0,
    "dt_max": 1e-3,
    "u_stop": 3e7,
}


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/regime_boundary")
    n_alpha = int(sys.argv[2]) if len(sys.argv) > 2 else 7
    lo, hi = 0.05, 0.45
    values = [lo + (hi - lo) * i / (n_alpha - 1) for i in range(n_alpha)]
    sweep = {"template": TEMPLATE, "axes": [{"name": "alpha", "values": values}]}
    cmd_sweep(sweep, out, workers=1, quiet=False)
    print(f"theoretical threshold alpha = {(3 - 2) / (2 * (3 - 1))}")
    print((out / "regime_map.csv").read_text())


if __name__ == "__main__":
    main()
