#!/usr/bin/env python3
"""Convergence study for the ten-bank splitting benchmark: run the dynamics
from the (0.3, 0.7) start across many seeds and tabulate the terminals.

Usage: python scripts/seed_convergence.py [--seeds 100]
"""

import argparse
import collections
import sys

import numpy as np

from grouprisk.equilibrium import fictitious_play_overlap
from grouprisk.errors import NotConverged
from grouprisk.fixtures import EXAMPLE_42_EQUILIBRIUM, EXAMPLE_42_W0, example_42_market
from grouprisk.overlap import WeightMatrix


def main(argv=None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=100)
    args = ap.parse_args(argv)

    market = example_42_market()
    ref = WeightMatrix(EXAMPLE_42_EQUILIBRIUM).canonical().w
    w0 = WeightMatrix(EXAMPLE_42_W0)
    counter: collections.Counter = collections.Counter()
    hits = 0
    for seed in range(args.seeds):
        try:
            res = fictitious_play_overlap(market, 2, w0, seed)
        except NotConverged:
            counter["(not converged)"] += 1
            continue
        w = res.terminal.canonical().w
        if np.max(np.abs(w - ref)) <= 0.01:
            hits += 1
        counter[str(np.round(w, 2).tolist())] += 1
    print(f"published matrix reached in {hits}/{args.seeds} seeds")
    for key, cnt in counter.most_common():
        print(f"{cnt:4d}  {key}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
