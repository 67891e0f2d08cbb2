"""Vehicle: covariance eigenvalues, trace and determinant per step for ours, Plain and LQR.

Prints a table in the layout of the method comparison (values x 1e-3 for
eigenvalues and trace, x 1e-6 for the determinant) and writes
results/vehicle_table.csv.
"""
import csv

from _common import parser, run_methods

METHODS = ["synthesized", "plain", "lqr"]


def main():
    args = parser(__doc__, 10**6).parse_args()
    reps = run_methods("vehicle", METHODS, args)
    path = args.out / "vehicle_table.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "method", "lambda_max", "lambda_min", "trace", "det"])
        for k in range(1, len(reps["plain"].metrics)):
            for m in METHODS:
                r = reps[m].metrics[k]
                w.writerow([k, m, r["lambda_max"], r["lambda_min"], r["trace"], r["det"]])
    print(f"wrote {path}\n")
    print(f"{'k':>2} " + " ".join(f"{m:>24}" for m in METHODS))
    print(f"{'':>2} " + " ".join(f"{'tr(1e-3)  det(1e-6)':>24}" for _ in METHODS))
    for k in range(1, len(reps["plain"].metrics)):
        cells = [f"{reps[m].metrics[k]['trace'] * 1e3:11.4f}{reps[m].metrics[k]['det'] * 1e6:13.5f}" for m in METHODS]
        print(f"{k:>2} " + " ".join(cells))


if __name__ == "__main__":
    main()
