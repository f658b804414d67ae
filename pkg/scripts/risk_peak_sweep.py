"""Check on random planner outputs that the conditional risk peaks at a = 1."""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from ipram import build_ifpr  # noqa: E402
from ipram.planner import psi  # noqa: E402
from ipram.risk import check_appendix_criterion, odds_from_matrix, r1_profile, sigma_coeffs  # noqa: E402
from sweeps import planner_cases  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    worst_gap, worst_res, fails = -np.inf, np.inf, 0
    for freq, plan in planner_cases(args.cases, seed=args.seed, perturbing_only=True):
        m = build_ifpr(freq, plan)
        odds = odds_from_matrix(m, freq, plan.target_index)
        prof = r1_profile(odds)
        fails += int(np.argmax(prof)) != 0
        worst_gap = max(worst_gap, prof[0] - psi(freq.counts[plan.target_index], plan.theta))
        sigma = sigma_coeffs(odds)
        worst_res = min(worst_res, min(check_appendix_criterion(odds, a, sigma)
                                       for a in range(1, sigma.degree + 1)))
    print(f"{args.cases} plans: argmax != 1 in {fails}; max R1(1) - psi = {worst_gap:.2e}; "
          f"min criterion residual = {worst_res:.3e}")


if __name__ == "__main__":
    main()
