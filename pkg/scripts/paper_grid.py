"""Full simulation grid: errors and sign recovery vs n for every (p, rho).

Desk scale by default (200 replications, p = 128).  ``--reps 1000 --p
128,256,512`` gives the full-size grid; expect hours on one core.

    python scripts/paper_grid.py --out runs/grid
"""
import argparse
import sys
from pathlib import Path

from whitelasso.cli import main as cli


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/grid"))
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--p", default="128")
    ap.add_argument("--rho", default="0,0.5,0.9,0.99")
    ap.add_argument("--n", default=",".join(str(n) for n in range(50, 501, 50)))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    results = args.out / "results.csv"
    code = cli(["mc-run", "--n", args.n, "--p", args.p, "--rho", args.rho,
                "--reps", str(args.reps), "--seed", str(args.seed),
                "--threads", str(args.threads), "-o", str(results),
                "--dump-reps", str(args.out / "reps.csv")])
    if code:
        return code
    for y in ("mean_l2_scaled", "mean_linf", "sign_rate"):
        code = cli(["plot", str(results), "--y", y, "--panel-by-p", "-o", str(args.out / "svg")])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
