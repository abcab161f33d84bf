"""Command-line entry point: simulate, characterize, fit, bounds, security.

Every command writes a JSON report ``{config, results, provenance}`` into
``--out`` plus data-only CSV files.  Exit codes: 0 success, 2 configuration
error, 3 data error, 4 numeric or no-fit error.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import DELTA_MAX, delta_max_for, effective_length, effective_length_closed_form, security_constants
from .correlations import (LTIIntensitySource, LTIPhaseSource, WaveformSource, characterize, enumerate_sequences,
                           per_setting_breakdown, scan_alignment, sequence_filename)
from .errors import ConfigError, DataError, PulseCorrError
from .fitting import DEFAULT_FIT_SEQUENCE, fit_three_pole
from .intensity import GaussianProfile, IntensityConfig
from .lti import TABLE_I, TABLE_I_ENVELOPE, DecayEnvelope, ThreePoleParams, decay_envelope
from .modulation import (BB84_PHASES, DECOY_ALPHABET, THREE_STATE_PHASES, PulseTrainConfig, SettingAlphabet,
                         ideal_signal, modulated_signal, waveform_bound_curves)
from .security import (ProtocolParams, eps_phi_total, hybrid_series, key_rate, key_rate_sweep,
                       reference_key_rate)
from .waveform import atomic_write_text, read_waveform_csv, sample_waveform, write_table_csv, write_waveform_csv

log = logging.getLogger("pulsecorr")

ALPHABETS = {"decoy": DECOY_ALPHABET, "three_state": THREE_STATE_PHASES, "bb84": BB84_PHASES}
FORMAT_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """Resolved run parameters; JSON config files override these defaults key by key."""

    filter: dict = field(default_factory=TABLE_I.to_dict)
    bandwidth_scale: float = 1.0
    fit_init: dict | None = None
    alphabet: str | dict = "decoy"
    pulse_width_T: float = 20.0
    steady_setting: str = "V"
    sequence: tuple = DEFAULT_FIT_SEQUENCE
    gain_compensated: bool = True
    sample_dt: float = 0.1
    noise_sigma: float = 0.0
    metric: str = "phase"
    t0: float | None = None
    t0_grid: tuple = (0.0, 20.0, 0.1)  # start, stop, step (ns)
    exclusion: tuple | None = None
    window: float | None = None
    history_len: int = 4
    l_max: int = 4
    objective: str = "eps_total"
    mu0: float = 0.3
    pulse_shape: str = "dirac"
    fwhm: float = 1.0
    integration_dt: float = 2.0
    waveform_kind: str = "voltage"
    protocol: str = "bb84"
    envelope: str | dict = "computed"
    N_pulses: float = 1e12
    d_failure: float = 1e-10
    l_split: int = 4
    l_e: int | None = None
    N_sweep: tuple = (6, 14)  # log10 range for the l_e staircase
    L_grid: tuple = (0.0, 200.0, 5.0)
    protocol_params: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def with_overrides(self, **kw) -> "RunConfig":
        cfg = dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.metric not in ("phase", "intensity"):
            raise ConfigError(f"metric must be phase or intensity, got {self.metric!r}")
        if self.pulse_shape not in ("dirac", "gaussian"):
            raise ConfigError(f"pulse_shape must be dirac or gaussian, got {self.pulse_shape!r}")
        T = self.pulse_width_T
        if not T > 0:
            raise ConfigError("pulse_width_T must be positive")
        if len(self.t0_grid) != 3 or not self.t0_grid[2] > 0:
            raise ConfigError("t0_grid must be [start, stop, step] with step > 0")
        lo, hi = self.t0_grid[0], self.t0_grid[1]
        if not 0 <= lo <= hi <= T:
            raise ConfigError(f"t0 grid [{lo}, {hi}] must lie inside [0, {T}]")
        if self.t0 is not None and not 0 <= self.t0 <= T:
            raise ConfigError(f"t0 = {self.t0} outside [0, {T}]")
        if self.exclusion is not None and (len(self.exclusion) != 2 or not 0 <= self.exclusion[0] < self.exclusion[1] <= T):
            raise ConfigError("exclusion must be [lo, hi] inside [0, T]")
        if not 1 <= self.l_max <= self.history_len:
            raise ConfigError("need 1 <= l_max <= history_len")
        if self.l_e is not None and self.l_split > self.l_e:
            raise ConfigError("l_split must not exceed l_e")
        delta_max_for(self.protocol)
        if not self.bandwidth_scale > 0 or not self.sample_dt > 0 or not self.noise_sigma >= 0:
            raise ConfigError("bandwidth_scale and sample_dt must be positive, noise_sigma non-negative")

    # -- resolved objects ------------------------------------------------------

    def filter_params(self) -> ThreePoleParams:
        try:
            p = ThreePoleParams.from_dict(self.filter)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"filter needs keys G0, nu1_MHz, nu2_MHz, alpha1_rad ({exc})") from None
        return p.scaled(self.bandwidth_scale) if self.bandwidth_scale != 1.0 else p

    def alphabet_obj(self) -> SettingAlphabet:
        if isinstance(self.alphabet, dict):
            return SettingAlphabet.from_dict(self.alphabet)
        try:
            return ALPHABETS[self.alphabet]
        except KeyError:
            raise ConfigError(f"unknown alphabet {self.alphabet!r}; expected one of {sorted(ALPHABETS)}") from None

    def steady(self, alphabet: SettingAlphabet) -> str:
        return self.steady_setting if self.steady_setting in alphabet.ids else alphabet.ids[-1]

    def envelope_obj(self) -> DecayEnvelope:
        if isinstance(self.envelope, dict):
            return DecayEnvelope(float(self.envelope["A"]), float(self.envelope["b_per_us"]))
        if self.envelope == "computed":
            return decay_envelope(self.filter_params())
        if self.envelope == "table":
            return TABLE_I_ENVELOPE
        raise ConfigError(f"envelope must be 'computed', 'table' or {{A, b_per_us}}, got {self.envelope!r}")

    def grid(self) -> np.ndarray:
        start, stop, step = self.t0_grid
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(n), 12)

    def protocol_obj(self) -> ProtocolParams:
        try:
            return ProtocolParams(**{"N_pulses": self.N_pulses, "d_failure": self.d_failure, **self.protocol_params})
        except TypeError as exc:
            raise ConfigError(f"protocol_params: {exc}") from None

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}


# -- helpers -----------------------------------------------------------------

def _report(out: Path, name: str, cfg: RunConfig, results: dict, seed: int) -> Path:
    payload = {
        "config": cfg.to_dict(),
        "results": results,
        "provenance": {"version": __version__, "format_version": FORMAT_VERSION,
                       "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(), "seed": seed},
    }
    path = out / name
    # json writes floats with repr, the shortest string that round-trips exactly
    atomic_write_text(path, json.dumps(payload, indent=2, allow_nan=False) + "\n")
    return path


def _phase_source(cfg: RunConfig, alphabet: SettingAlphabet) -> LTIPhaseSource:
    return LTIPhaseSource(cfg.filter_params(), alphabet, cfg.pulse_width_T, cfg.steady(alphabet))


def _profile(cfg: RunConfig):
    return GaussianProfile(cfg.fwhm) if cfg.pulse_shape == "gaussian" else None


def _model_source(cfg: RunConfig, alphabet: SettingAlphabet):
    ps = _phase_source(cfg, alphabet)
    if cfg.metric == "phase":
        return ps
    profile = _profile(cfg)
    icfg = IntensityConfig(cfg.mu0, cfg.integration_dt) if profile is not None else None
    return LTIIntensitySource(ps, cfg.mu0, profile, icfg)


def load_waveform_dir(path, alphabet: SettingAlphabet) -> dict:
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"waveform directory {path} does not exist")
    out = {}
    for f in sorted(path.glob("seq_*.csv")):
        key = tuple(f.stem[len("seq_"):].split("-"))
        if any(k not in alphabet.ids for k in key):
            log.warning("skipping %s: setting ids outside the alphabet %s", f.name, alphabet.ids)
            continue
        out[key] = read_waveform_csv(f)
    if not out:
        raise DataError(f"no seq_*.csv files in {path}")
    return out


def _dir_source(cfg: RunConfig, alphabet: SettingAlphabet, path):
    wfs = load_waveform_dir(path, alphabet)
    profile = _profile(cfg)
    icfg = IntensityConfig(cfg.mu0, cfg.integration_dt) if profile is not None else None
    src = WaveformSource(wfs, alphabet, cfg.pulse_width_T, cfg.metric, cfg.waveform_kind, cfg.mu0, profile, icfg)
    src.check_complete(cfg.history_len)
    return src


def _delta_max(cfg: RunConfig) -> float:
    return DELTA_MAX["intensity_full_swing"] if cfg.metric == "intensity" else delta_max_for(cfg.protocol)


def _t0(cfg: RunConfig) -> float:
    # best alignment of the reference filter when nothing else is given
    return cfg.t0 if cfg.t0 is not None else 16.2


# -- commands ----------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out: Path, seed: int, all_sequences: bool = False) -> dict:
    alphabet = cfg.alphabet_obj()
    filt = cfg.filter_params()
    T = cfg.pulse_width_T
    steady = cfg.steady(alphabet)
    if all_sequences:
        n = cfg.history_len + 1
        idx = enumerate_sequences(len(alphabet), n)
        pcfg = PulseTrainConfig(T, n, steady)
        count = int(np.ceil((n + 2) * T / cfg.sample_dt)) + 1
        for row in idx:
            seq = tuple(alphabet.ids[i] for i in row)
            wf = sample_waveform(lambda t: modulated_signal(seq, pcfg, alphabet, filt, t, cfg.gain_compensated),
                                 -T, cfg.sample_dt, count)
            write_waveform_csv(out / sequence_filename(seq), wf)
        results = {"files": len(idx), "sequence_length": n}
        _report(out, "simulate.json", cfg, results, seed)
        return results

    seq = tuple(cfg.sequence)
    pcfg = PulseTrainConfig(T, len(seq), steady)
    pcfg.check(alphabet, seq)
    n = int(round((len(seq) + 3) * T / cfg.sample_dt)) + 1
    t = -T + cfg.sample_dt * np.arange(n)
    ideal = ideal_signal(seq, pcfg, alphabet, t)
    y = modulated_signal(seq, pcfg, alphabet, filt, t, cfg.gain_compensated)
    if cfg.noise_sigma > 0:
        y = y + np.random.default_rng(seed).normal(0.0, cfg.noise_sigma, n)
    env = decay_envelope(filt)
    lo, hi = waveform_bound_curves(seq, pcfg, alphabet, env, t, 1.0 if cfg.gain_compensated else filt.gain_G0)
    scale = 1.0 if cfg.gain_compensated else filt.gain_G0
    write_table_csv(out / "ideal.csv", ("time_ns", "value"), [t, scale * ideal])
    write_table_csv(out / "modulated.csv", ("time_ns", "value"), [t, y])
    write_table_csv(out / "bounds.csv", ("time_ns", "lower", "upper"), [t, lo, hi])
    inside = bool(np.all((y >= lo - 1e-12) & (y <= hi + 1e-12))) if cfg.noise_sigma == 0 else None
    # samples on a bin edge sit on the discontinuity of the ideal signal
    off_edge = np.abs(t / T - np.round(t / T)) * T > cfg.sample_dt / 2
    results = {"sequence": list(seq), "samples": n, "envelope": env.to_dict(), "within_bounds": inside,
               "max_deviation_off_edges": float(np.max(np.abs(y - scale * ideal)[off_edge]))}
    _report(out, "simulate.json", cfg, results, seed)
    return results


def cmd_characterize(cfg: RunConfig, out: Path, seed: int, source: str = "model", threads: int = 1) -> dict:
    alphabet = cfg.alphabet_obj()
    if source == "model":
        src = _model_source(cfg, alphabet)
    elif source.startswith("dir:"):
        src = _dir_source(cfg, alphabet, source[4:])
    else:
        raise ConfigError(f"--source must be 'model' or 'dir:<path>', got {source!r}")
    n = cfg.history_len + 1
    idx = enumerate_sequences(len(alphabet), n)
    sequences = ["-".join(alphabet.ids[i] for i in row) for row in idx]
    sel = scan_alignment(src, cfg.grid(), cfg.objective, cfg.l_max, cfg.history_len, cfg.exclusion, cfg.window,
                         threads, cfg.pulse_width_T)
    t0 = cfg.t0 if cfg.t0 is not None else sel.t0_best
    rep = characterize(src, t0, cfg.l_max, cfg.history_len)
    breakdown = per_setting_breakdown(src, range(1, cfg.l_max + 1), t0, cfg.history_len)
    results = {"source": source, "sequence_count": len(sequences), "sequences": sequences,
               "alignment": sel.to_dict(), "report": rep.to_dict(), "per_setting": breakdown}
    _report(out, "characterize.json", cfg, results, seed)
    return results


def cmd_fit(cfg: RunConfig, out: Path, seed: int, waveform_path, sequence=None) -> dict:
    alphabet = cfg.alphabet_obj()
    seq = tuple(sequence) if sequence else tuple(cfg.sequence)
    wf = read_waveform_csv(waveform_path)
    pcfg = PulseTrainConfig(cfg.pulse_width_T, len(seq), cfg.steady(alphabet))
    init = ThreePoleParams.from_dict(cfg.fit_init) if cfg.fit_init else None
    res = fit_three_pole(wf, seq, pcfg, alphabet, init=init, seed=seed)
    results = {"sequence": list(seq), **res.to_dict()}
    _report(out, "fit.json", cfg, results, seed)
    return results


def cmd_bounds(cfg: RunConfig, out: Path, seed: int) -> dict:
    env = cfg.envelope_obj()
    T = cfg.pulse_width_T
    t0 = _t0(cfg)
    results = {"envelope": env.to_dict(), "t0_ns": t0, "metrics": {}}
    rows = {"log10_N": [], "N": []}
    exps = np.arange(cfg.N_sweep[0], cfg.N_sweep[1] + 1)
    rows["log10_N"] = exps.astype(float)
    rows["N"] = 10.0 ** exps
    for metric in ("phase", "intensity"):
        dm = DELTA_MAX["intensity_full_swing"] if metric == "intensity" else delta_max_for(cfg.protocol)
        bp = security_constants(env, T, metric, dm, t0, cfg.mu0 if metric == "intensity" else None)
        le = effective_length(bp.C, bp.eps_bar_1, cfg.N_pulses, cfg.d_failure)
        le_cf = effective_length_closed_form(bp, cfg.N_pulses, cfg.d_failure)
        results["metrics"][metric] = {**bp.to_dict(), "l_e": le.l_e, "l_e_raw": le.raw_value,
                                      "l_e_closed_form_raw": le_cf.raw_value, "N": cfg.N_pulses, "d": cfg.d_failure}
        rows[f"l_e_{metric}"] = [effective_length(bp.C, bp.eps_bar_1, N, cfg.d_failure).l_e for N in rows["N"]]
    header = ("log10_N", "N", "l_e_phase", "l_e_intensity")
    write_table_csv(out / "l_e_staircase.csv", header, [rows[h] for h in header])
    _report(out, "bounds.json", cfg, results, seed)
    return results


def cmd_security(cfg: RunConfig, out: Path, seed: int) -> dict:
    # the phase alphabet follows the protocol whose Delta_max sets the bounds
    alphabet = ALPHABETS[cfg.protocol] if cfg.protocol in ALPHABETS else cfg.alphabet_obj()
    env = cfg.envelope_obj()
    t0 = _t0(cfg)
    params = cfg.protocol_obj()
    bp = security_constants(env, cfg.pulse_width_T, "phase", delta_max_for(cfg.protocol), t0)
    l_e = cfg.l_e if cfg.l_e is not None else effective_length(bp.C, bp.eps_bar_1, params.N_pulses,
                                                                params.d_failure).l_e
    l_split = min(cfg.l_split, l_e)
    src = _phase_source(cfg, alphabet)
    series = hybrid_series(src, bp, l_split, l_e, t0)
    eps_phi = min(1.0, eps_phi_total(series))
    start, stop, step = cfg.L_grid
    L = start + step * np.arange(int(math.floor((stop - start) / step + 1e-9)) + 1)
    sweep = key_rate_sweep(eps_phi, L, params)
    cols = list(zip(*sweep))
    write_table_csv(out / "sweep.csv", ("L_km", "eta", "eps_phi", "rate"), cols)
    results = {"t0_ns": t0, "alphabet": alphabet.to_dict(), "series": series.to_dict(),
               "eps_phi": eps_phi, "bound_params": bp.to_dict(), "protocol": params.to_dict(),
               "key_rate_model": {"name": reference_key_rate.__name__, "stand_in": True,
                                  "note": "smoke-test stand-in; absolute rates carry no claim",
                                  "rate_at_eps_phi_zero_L0": key_rate(0.0, 0.0, params)}}
    _report(out, "eps_report.json", cfg, results, seed)
    return results


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file overriding the default run configuration")
    common.add_argument("--metric", choices=("phase", "intensity"))
    common.add_argument("--t0", type=float, help="point of alignment inside the bin (ns)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pulsecorr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="sample ideal, filtered and bound waveforms")
    s.add_argument("--noise", type=float, help="Gaussian noise sigma added to the modulated trace")
    s.add_argument("--all-sequences", action="store_true",
                   help="write one seq_*.csv per enumerated sequence instead")

    c = sub.add_parser("characterize", parents=[common], help="correlation strengths and alignment scan")
    c.add_argument("--source", default="model", help="'model' or 'dir:<path>' with seq_*.csv files")

    f = sub.add_parser("fit", parents=[common], help="fit the three-pole filter to a waveform CSV")
    f.add_argument("waveform", help="waveform CSV (time_ns,value)")
    f.add_argument("--sequence", help="comma-separated setting ids, e.g. S,V,D,S,V")

    sub.add_parser("bounds", parents=[common], help="exponential bounds and effective lengths")
    sub.add_parser("security", parents=[common], help="hybrid eps_phi and key-rate sweep")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(metric=args.metric, t0=args.t0,
                                 noise_sigma=getattr(args, "noise", None))
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc}") from None
        if args.command == "simulate":
            cmd_simulate(cfg, out, args.seed, args.all_sequences)
        elif args.command == "characterize":
            cmd_characterize(cfg, out, args.seed, args.source, args.threads)
        elif args.command == "fit":
            seq = args.sequence.split(",") if args.sequence else None
            cmd_fit(cfg, out, args.seed, args.waveform, seq)
        elif args.command == "bounds":
            cmd_bounds(cfg, out, args.seed)
        elif args.command == "security":
            cmd_security(cfg, out, args.seed)
    except PulseCorrError as exc:
        print(f"pulsecorr: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"pulsecorr: I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
