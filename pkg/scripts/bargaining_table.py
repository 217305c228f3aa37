"""Exact versus approximate bargaining fractions for a small partner.

    python scripts/bargaining_table.py --n1 100000 --beta 0.7
"""

import argparse

from oligoshare.data_impact import CostModel, FirmProfile
from oligoshare.duopoly import bargaining_closed_form, bargaining_exact


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n1", type=int, default=100_000)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--ratio", type=float, default=0.01, help="b / (1 - a)")
    args = ap.parse_args()

    model = CostModel(args.a, args.ratio * (1 - args.a), args.beta)
    print(f"{'gamma':>6} {'n2':>8} {'exact l1':>12} {'approx l1':>12} {'exact l2':>9}")
    for gamma in (0.2, 0.5, 0.8):
        for frac in (0.5, 0.1, 0.01, 0.001):
            n2 = max(1, int(args.n1 * frac))
            p1, p2 = FirmProfile(0, args.n1, model), FirmProfile(1, n2, model)
            ex = bargaining_exact(p1, p2, gamma)
            cf = bargaining_closed_form(p1, p2, gamma)
            print(f"{gamma:6.2f} {n2:8d} {ex.lambda1:12.6g} {cf.lambda1:12.6g} {ex.lambda2:9.4f}")


if __name__ == "__main__":
    main()
