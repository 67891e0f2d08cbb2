"""1D system: per-step mean and standard deviation under the synthesized controller and Plain.

Writes results/oned_spread.csv with one row per step, the data behind a
mean +- std band plot.
"""
import csv
import math

from _common import parser, run_methods

from cfsteer.scenario import load_scenario


def main():
    args = parser(__doc__, 10**6).parse_args()
    reps = run_methods("oned", ["synthesized", "plain"], args)
    nominal = load_scenario("oned").nominal_states
    path = args.out / "oned_spread.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "nominal", "mean_ours", "std_ours", "mean_plain", "std_plain"])
        for k, (a, b) in enumerate(zip(reps["synthesized"].empirical, reps["plain"].empirical)):
            w.writerow([k, nominal[k][0], a["mean"][0], math.sqrt(a["covariance"][0][0]),
                        b["mean"][0], math.sqrt(b["covariance"][0][0])])
    print(f"wrote {path}")
    g = [e["G"][0][0] for e in reps["synthesized"].gains]
    print("synthesized gains:", " ".join(f"{v:.3f}" for v in g))


if __name__ == "__main__":
    main()
