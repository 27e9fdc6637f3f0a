"""Growth of the cumulative error variance ||Psi||_F^2 in n.

Stationary starts grow linearly with slope a^2; a fixed unit start grows
roughly quadratically at first and linearly once the AR memory is spent.
Writes the curves as CSV and a simple SVG.

    python scripts/figure1_frobenius.py --out runs/fig1
"""
import argparse
import sys
from pathlib import Path

from whitelasso.cli import main as cli


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/fig1"))
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--rho", default="0.5,0.9,0.99")
    ap.add_argument("--init", default="stationary,1,10")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "frobenius.csv"
    code = cli(["frobenius", "--n", str(args.n), "--rho", args.rho, "--init", args.init,
                "-o", str(csv_path)])
    if code:
        return code
    _svg(csv_path, args.out / "frobenius.svg")
    return 0


def _svg(csv_path: Path, out: Path) -> None:
    # reuse the results-chart renderer: one "estimator" series per curve, one panel
    lines = csv_path.read_text().splitlines()
    names = lines[0].split(",")[1:]
    rows = ["estimator,n,rho,mean_linf"]
    for line in lines[1:]:
        t, *vals = line.split(",")
        rows += [f"{name},{t},all,{v}" for name, v in zip(names, vals)]
    from whitelasso.plot import ChartSpec, render
    spec = ChartSpec(y="mean_linf", bands=False, y_label="F_t = sum of Var[eps_k]",
                     title="cumulative error variance")
    out.write_text(render("\n".join(rows) + "\n", spec)["all"])


if __name__ == "__main__":
    sys.exit(run())
