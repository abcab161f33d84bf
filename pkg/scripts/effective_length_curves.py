"""Effective correlation length versus block size N for phase and intensity bounds.

    python3 scripts/effective_length_curves.py --out results/l_e.csv
"""
import argparse
import math
from pathlib import Path

import numpy as np

from pulsecorr.bounds import DELTA_MAX, effective_length_scan, security_constants
from pulsecorr.lti import TABLE_I, decay_envelope
from pulsecorr.waveform import write_table_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=20.0)
    ap.add_argument("--t0-phase", type=float, default=16.2)
    ap.add_argument("--t0-intensity", type=float, default=16.6)
    ap.add_argument("--mu0", type=float, default=0.3)
    ap.add_argument("--d", type=float, default=1e-10, help="failure probability")
    ap.add_argument("--log10-N", type=float, nargs=2, default=(4.0, 16.0))
    ap.add_argument("--out", type=Path, default=Path("results/l_e.csv"))
    args = ap.parse_args(argv)

    env = decay_envelope(TABLE_I)
    exps = np.arange(args.log10_N[0], args.log10_N[1] + 1e-9, 0.25)
    N = 10.0 ** exps
    columns = {}
    for label, metric, delta, t0, mu0 in (("phase_bb84", "phase", DELTA_MAX["bb84"], args.t0_phase, None),
                                          ("phase_pi", "phase", math.pi, args.t0_phase, None),
                                          ("intensity", "intensity", math.pi, args.t0_intensity, args.mu0)):
        bp = security_constants(env, args.T, metric, delta, t0, mu0)
        columns[label] = [l_e for _, _, l_e in effective_length_scan(bp, N, args.d)]
        print(f"{label:11s} C = {bp.C:.3f}  eps_bar_1 = {bp.eps_bar_1:.3e}  "
              f"l_e(N=1e12) = {columns[label][int(np.argmin(abs(exps - 12)))]}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_table_csv(args.out, ["log10_N", *columns], [exps, *columns.values()])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
