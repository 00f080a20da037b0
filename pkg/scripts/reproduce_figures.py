"""Write the CSV data behind each comparison figure into one directory.

Every file is produced through the command-line verbs, so the same data can be
regenerated one verb at a time with ``phi-spectral``.
"""

import argparse
import sys
from pathlib import Path

from phi_spectral.cli import main as cli_main

# (file stem, argv for the CLI)
JOBS = [
    ("fig1.1_abs_cheb_n100", ["error-curve", "--kind", "interior_abs", "--lambda", "1", "--alpha", "-0.5", "--beta", "-0.5", "--n", "100"]),
    ("fig1.2_abs_leg_n100", ["error-curve", "--kind", "interior_abs", "--lambda", "1", "--n", "100"]),
    ("fig1.3_hat_vs_best_lam0.5", ["remez-compare", "--lambda", "0.5", "--nrange", "8:128"]),
    ("fig1.4_interior", ["rate-table", "--figure", "1.4"]),
    ("fig1.5_rates", ["rate-table", "--figure", "1.5"]),
    ("fig16_maxnorm", ["rate-table", "--figure", "16"]),
    ("fig44_xi", ["xi-sweep", "--a", "0.1", "--lambda", "0.5", "--alpha", "0.5", "--beta", "0.4", "--n", "2000"]),
    ("fig51_hat_vs_best_lam2", ["remez-compare", "--lambda", "2", "--nrange", "8:128"]),
    ("fig51_weighted", ["rate-table", "--figure", "51"]),
    ("fig61_boundary", ["rate-table", "--figure", "61"]),
    ("fig61_f1_coeffs", ["coeffs", "--kind", "boundary_right", "--lambda", "0.5", "--nmax", "4096"]),
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", nargs="?", default="figures")
    ap.add_argument("--only", help="substring of the file stem")
    args = ap.parse_args(argv)

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    worst = 0
    for stem, cmd in JOBS:
        if args.only and args.only not in stem:
            continue
        path = out / f"{stem}.csv"
        code = cli_main(cmd + ["--out", str(path)])
        print(f"{'ok  ' if code == 0 else f'exit {code}'} {path}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
