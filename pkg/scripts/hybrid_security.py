"""Hybrid eps_phi at the best and worst alignment and a stand-in key-rate sweep.

The key-rate model is a placeholder for shape checks; absolute rates carry no claim.

    python3 scripts/hybrid_security.py --out results/security
"""
import argparse
import json
from pathlib import Path

import numpy as np

from pulsecorr.bounds import DELTA_MAX, effective_length_closed_form, security_constants
from pulsecorr.correlations import LTIPhaseSource
from pulsecorr.lti import TABLE_I, decay_envelope
from pulsecorr.modulation import BB84_PHASES
from pulsecorr.security import ProtocolParams, eps_phi_total, hybrid_series, key_rate_sweep
from pulsecorr.waveform import write_table_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=20.0)
    ap.add_argument("--t0", type=float, nargs="+", default=(14.2, 16.2))
    ap.add_argument("--l-split", type=int, default=4)
    ap.add_argument("--out", type=Path, default=Path("results/security"))
    args = ap.parse_args(argv)

    env = decay_envelope(TABLE_I)
    src = LTIPhaseSource(TABLE_I, BB84_PHASES, args.T, "0X")
    params = ProtocolParams()
    args.out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for t0 in args.t0:
        bp = security_constants(env, args.T, "phase", DELTA_MAX["bb84"], t0)
        l_e = effective_length_closed_form(bp, params.N_pulses, params.d_failure).l_e
        series = hybrid_series(src, bp, min(args.l_split, l_e), l_e, t0)
        eps = eps_phi_total(series)
        summary[f"{t0:g}"] = {"l_e": l_e, "eps_phi": eps, "series": series.to_dict()}
        rows = key_rate_sweep(eps, np.arange(0.0, 200.0 + 1e-9, 5.0), params)
        write_table_csv(args.out / f"sweep_t0_{t0:g}.csv", ["L_km", "eta", "eps_phi", "rate"], list(zip(*rows)))
        print(f"t0 = {t0:5.2f} ns   l_e = {l_e}   eps_phi = {eps:.3e}")
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
