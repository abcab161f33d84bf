"""Scan the pulse/modulation alignment t0 and report the best and worst offsets.

Writes a CSV of eps_1..eps_lmax and eps_total per t0 for each phase alphabet.

    python3 scripts/alignment_scan.py --step 0.02 --out results/alignment
"""
import argparse
from pathlib import Path

import numpy as np

from pulsecorr.correlations import LTIPhaseSource, correlation_strengths, scan_alignment
from pulsecorr.lti import TABLE_I
from pulsecorr.modulation import BB84_PHASES, THREE_STATE_PHASES
from pulsecorr.waveform import write_table_csv

ALPHABETS = {"bb84": (BB84_PHASES, "0X"), "three_state": (THREE_STATE_PHASES, "0Y")}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=20.0, help="pulse width in ns")
    ap.add_argument("--step", type=float, default=0.02, help="t0 grid step in ns")
    ap.add_argument("--l-max", type=int, default=4)
    ap.add_argument("--out", type=Path, default=Path("results/alignment"))
    args = ap.parse_args(argv)

    grid = np.round(np.arange(0.0, args.T + 1e-9, args.step), 10)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, (alphabet, steady) in ALPHABETS.items():
        src = LTIPhaseSource(TABLE_I, alphabet, args.T, steady)
        sel = scan_alignment(src, grid, "eps_total", l_max=args.l_max, history_len=args.l_max)
        cols = [[] for _ in range(args.l_max)]
        for t0 in grid:
            for r in correlation_strengths(src, t0, args.l_max, history_len=args.l_max):
                cols[r.l - 1].append(r.eps)
        total = np.sum(cols, axis=0)
        header = ["t0_ns"] + [f"eps_{l}" for l in range(1, args.l_max + 1)] + ["eps_total"]
        write_table_csv(args.out / f"scan_{name}.csv", header, [grid, *cols, total])
        print(f"{name:12s} t0_best = {sel.t0_best:.2f} ns   t0_worst = {sel.t0_worst:.2f} ns")


if __name__ == "__main__":
    main()
