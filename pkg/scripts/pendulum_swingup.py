"""Pendulum swing-up: covariance trace and 98% ellipses per step for ours, Plain and LQR."""
from _common import parser, run_methods

METHODS = ["synthesized", "plain", "lqr"]


def main():
    args = parser(__doc__, 10**6).parse_args()
    reps = run_methods("pendulum", METHODS, args)
    print(f"\n{'k':>2} " + " ".join(f"{m:>12}" for m in METHODS) + "   ellipse axes (ours)")
    for k in range(len(reps["plain"].metrics)):
        tr = " ".join(f"{reps[m].metrics[k]['trace']:12.5f}" for m in METHODS)
        ax = reps["synthesized"].ellipses[k]["semi_axes"]
        print(f"{k:>2} {tr}   {ax[0]:.4f} x {ax[1]:.4f}")


if __name__ == "__main__":
    main()
