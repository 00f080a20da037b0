"""Run the rate-claim suite and write the report CSV.

    python scripts/run_claims.py --out claims.csv --filter maxnorm
"""

import argparse
import sys

from phi_spectral.rate_analysis import claim_suite, reports_to_csv, run_claims


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="CSV path (default: no file)")
    ap.add_argument("--filter", default="", help="substring of the claim id or a tag")
    args = ap.parse_args(argv)

    claims = [c for c in claim_suite() if args.filter in c.id or args.filter in c.tags]
    if not claims:
        print(f"no claim matches {args.filter!r}", file=sys.stderr)
        return 2
    reports = run_claims(claims)
    for r in reports:
        print(r.line())
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} claims passed")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(reports_to_csv(reports))
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
