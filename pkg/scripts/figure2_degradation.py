"""LASSO error with AR(1) errors against the same draw with iid errors.

Both arms share the design, coefficients, innovations and one penalty
level chosen by the hold-out oracle (coefficient error on an independent
sample of the same size).

    python scripts/figure2_degradation.py --out runs/fig2
"""
import argparse
import sys
from pathlib import Path

from whitelasso.cli import main as cli
from whitelasso.mc import results_csv, run_degradation


def _csv_list(text, kind):
    return tuple(kind(v) for v in text.split(","))


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/fig2"))
    ap.add_argument("--n", default=",".join(str(n) for n in range(50, 501, 50)))
    ap.add_argument("--p", type=int, default=128)
    ap.add_argument("--rho", default="0,0.5,0.9,0.99")
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--grid-len", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    res = run_degradation(_csv_list(args.n, int), args.p, _csv_list(args.rho, float), args.reps,
                          base_seed=args.seed, grid_len=args.grid_len)
    path = args.out / "degradation.csv"
    path.write_text(results_csv(res))
    return cli(["plot", str(path), "-o", str(args.out / "svg")])


if __name__ == "__main__":
    sys.exit(run())
