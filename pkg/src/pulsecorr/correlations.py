"""Correlation strengths by exhaustive enumeration of setting sequences.

For a history of ``history_len`` rounds the sources are queried on every
sequence of n = history_len + 1 settings; the value of interest is the
round-n output at offset t0 inside its bin.  Order-l strengths compare each
sequence against those differing only in round n - l.

Sequences are enumerated in lexicographic order of alphabet indices, so the
sequence with index vector (i_1, ..., i_n) sits at row sum_k i_k m^(n-k).
All argmax reductions return the earliest row, i.e. ties resolve to the
lexicographically smallest sequence pair.
"""
from __future__ import annotations

import functools
import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError, DomainError, MissingSequenceError
from .intensity import GaussianProfile, IntensityConfig, calibrate, mean_photon_dirac, mean_photon_gaussian
from .lti import step_response
from .modulation import SettingAlphabet, pairwise_phase_difference
from .waveform import Waveform

ENUMERATION_WARN_SIZE = 200_000


# -- pair metrics ------------------------------------------------------------

def phase_epsilon_pair(phi_a, phi_b):
    """1 - |<psi(a)|psi(b)>|^2 for two time-bin qubits."""
    return np.sin((np.asarray(phi_a) - np.asarray(phi_b)) / 2.0) ** 2


def intensity_epsilon_pair(mu_a, mu_b):
    """1 - F for two phase-randomised coherent states."""
    mu_a = np.asarray(mu_a, dtype=float)
    mu_b = np.asarray(mu_b, dtype=float)
    if np.any(mu_a < 0) or np.any(mu_b < 0):
        raise DomainError("mean photon numbers must be non-negative")
    return -np.expm1(-(np.sqrt(mu_a) - np.sqrt(mu_b)) ** 2)


PAIR_METRICS = {"phase": phase_epsilon_pair, "intensity": intensity_epsilon_pair}


def aggregate(epsilons):
    """(eps_correl, eps_qubit, eps_total) for a list of strengths."""
    e = np.asarray(epsilons, dtype=float)
    if np.any(e < 0) or np.any(e > 1):
        raise DomainError("correlation strengths must lie in [0, 1]")
    correl = float(np.sum(e))
    qubit = float(np.sum(np.sqrt(e)) ** 2)
    return correl, qubit, correl + qubit


# -- signal sources ----------------------------------------------------------

@functools.lru_cache(maxsize=16)
def enumerate_sequences(m: int, n: int) -> np.ndarray:
    """All m**n index sequences of length n, lexicographic (read-only, cached)."""
    size = m ** n
    if size > ENUMERATION_WARN_SIZE:
        warnings.warn(f"enumerating {size} sequences ({m}^{n}); cost grows as |alphabet|^(history_len+1)")
    if n == 0:
        return np.zeros((1, 0), dtype=int)
    idx = np.array(list(itertools.product(range(m), repeat=n)), dtype=int)
    idx.setflags(write=False)
    return idx


class LTIPhaseSource:
    """Round-n phase predicted by the filter model, loss-compensated by default."""

    metric = "phase"

    def __init__(self, filt, alphabet: SettingAlphabet, T: float, steady_setting: str, gain_compensated: bool = True):
        self.filt = filt
        self.alphabet = alphabet
        self.T = float(T)
        self.j0 = alphabet.level(steady_setting)
        self.steady_setting = steady_setting
        self.gain_compensated = gain_compensated
        self._cache = (None, None)

    def _jumps(self, idx):
        key, d = self._cache
        if key is not idx:
            lv = self.alphabet.values[idx]
            pad = np.full((lv.shape[0], 1), self.j0)
            d = np.diff(np.hstack([pad, lv, pad]), axis=1)
            self._cache = (idx, d)
        return d

    def levels_at(self, idx, t):
        """Filter output (level units) at absolute times ``t`` for each row of ``idx``."""
        n = idx.shape[1]
        t = np.atleast_1d(np.asarray(t, dtype=float))
        steps = np.stack([step_response(self.filt, t - k * self.T) for k in range(n + 1)])
        G0 = self.filt.gain_G0
        if self.gain_compensated:
            return self.j0 + self._jumps(idx) @ (steps / G0)
        return G0 * self.j0 + self._jumps(idx) @ steps

    def outputs(self, idx, t0):
        n = idx.shape[1]
        y = self.levels_at(idx, (n - 1) * self.T + t0)[:, 0]
        return self.alphabet.to_phase(y)

    def epsilon_shortcut(self, l: int, t0: float) -> float:
        """Closed-form order-l strength, maximised over setting differences."""
        v = self.alphabet.values
        scale = self.alphabet.phase_scale() * (1.0 if self.gain_compensated else self.filt.gain_G0)
        deltas = np.unique(np.abs(v[:, None] - v[None, :]))[1:] * scale
        diffs = [pairwise_phase_difference(d, l, t0, self.filt, self.T) for d in deltas]
        return float(np.max(phase_epsilon_pair(np.array(diffs), 0.0)))


class LTIIntensitySource:
    """Mean photon number after an ideal MZI driven by the model phase.

    Without a profile the laser pulse is treated as a Dirac delta at t0;
    with a Gaussian profile the phase is sampled on a grid of step ``dt``
    around t0 and integrated with the calibrated normalisation.
    """

    metric = "intensity"

    def __init__(self, phase_source: LTIPhaseSource, mu0: float = 0.3, profile: GaussianProfile | None = None,
                 cfg: IntensityConfig | None = None, dt: float = 0.01):
        self.phase_source = phase_source
        self.alphabet = phase_source.alphabet
        self.mu0 = float(mu0)
        self.profile = profile
        self.dt = dt
        if profile is not None:
            cfg = cfg or IntensityConfig(mu0_signal=mu0, integration_width_dt=2 * profile.fwhm)
            self.cfg = calibrate(profile, cfg, dt)

    @property
    def T(self) -> float:
        return self.phase_source.T

    def outputs(self, idx, t0):
        ps = self.phase_source
        n = idx.shape[1]
        centre = (n - 1) * ps.T + t0
        if self.profile is None:
            phi = ps.alphabet.to_phase(ps.levels_at(idx, centre)[:, 0])
            return mean_photon_dirac(phi, self.mu0)
        half = self.cfg.integration_width_dt / 2
        k = int(math.ceil(half / self.dt))
        offsets = np.linspace(-half, half, 2 * k + 1)
        phi = ps.alphabet.to_phase(ps.levels_at(idx, centre + offsets))
        w = self.profile(offsets) * (1.0 + np.sin(phi))
        trap = getattr(np, "trapezoid", None) or np.trapz
        return self.cfg.normalization * trap(w, offsets, axis=1)


def sequence_filename(seq) -> str:
    return "seq_" + "-".join(seq) + ".csv"


class WaveformSource:
    """Measured waveforms keyed by setting tuple, sequence start at t = 0.

    ``kind`` says what the samples are: ``"voltage"`` (drive voltage, mapped to
    phase with the alphabet's half-wave voltage), ``"phase"`` (radians) or
    ``"detector"`` (photodetector trace, intensity metric only).
    """

    def __init__(self, waveforms: dict, alphabet: SettingAlphabet, T: float, metric: str = "phase",
                 kind: str = "voltage", mu0: float = 0.3, profile: GaussianProfile | None = None,
                 cfg: IntensityConfig | None = None, signal_setting: str | None = None):
        if metric not in PAIR_METRICS:
            raise ConfigError(f"unknown metric {metric!r}")
        if kind not in ("voltage", "phase", "detector"):
            raise ConfigError(f"unknown waveform kind {kind!r}")
        if kind == "detector" and (metric != "intensity" or profile is None):
            raise ConfigError("detector traces need the intensity metric and a pulse profile")
        self.waveforms = {tuple(k): v for k, v in waveforms.items()}
        self.alphabet = alphabet
        self.T = float(T)
        self.metric = metric
        self.kind = kind
        self.mu0 = mu0
        self.profile = profile
        self.cfg = cfg
        self.signal_setting = signal_setting
        if profile is not None and self.cfg is None:
            self.cfg = IntensityConfig(mu0_signal=mu0, integration_width_dt=2 * profile.fwhm)
        self._norm_cache = {}

    def check_complete(self, history_len: int) -> None:
        ids = self.alphabet.ids
        missing = [s for s in itertools.product(ids, repeat=history_len + 1) if s not in self.waveforms]
        if missing:
            raise MissingSequenceError(missing)

    def _phase(self, v):
        return self.alphabet.to_phase(v) if self.kind == "voltage" else v

    def _normalization(self, n, t0):
        if self.kind != "detector":
            wf0 = next(iter(self.waveforms.values()))
            return calibrate(self.profile, self.cfg, wf0.dt).normalization
        key = (n, t0)
        if key not in self._norm_cache:
            sig = self.signal_setting or self.alphabet.ids[0]
            ref = self.waveforms.get((sig,) * n)
            if ref is None:
                raise MissingSequenceError([(sig,) * n])
            raw = mean_photon_gaussian(ref, self.profile, (n - 1) * self.T + t0, self.cfg, "detector")
            if not raw > 0:
                raise DataError("signal reference trace integrates to a non-positive value")
            self._norm_cache[key] = self.cfg.normalization * self.mu0 / raw
        return self._norm_cache[key]

    def outputs(self, idx, t0):
        ids = self.alphabet.ids
        n = idx.shape[1]
        keys = [tuple(ids[i] for i in row) for row in idx]
        missing = [k for k in keys if k not in self.waveforms]
        if missing:
            raise MissingSequenceError(missing)
        t = (n - 1) * self.T + t0
        if self.metric == "phase":
            return np.array([float(self._phase(self.waveforms[k].value_at([t])[0])) for k in keys])
        if self.profile is None:
            return np.array([float(mean_photon_dirac(self._phase(self.waveforms[k].value_at([t])[0]), self.mu0))
                             for k in keys])
        cfg = replace(self.cfg, normalization=self._normalization(n, t0))
        kind = "detector" if self.kind == "detector" else "phase"
        out = []
        for k in keys:
            wf = self.waveforms[k]
            if kind == "phase" and self.kind == "voltage":
                wf = Waveform(wf.t_start, wf.dt, self.alphabet.to_phase(wf.samples))
            out.append(mean_photon_gaussian(wf, self.profile, t, cfg, kind))
        return np.array(out)


# -- enumeration -------------------------------------------------------------

@dataclass(frozen=True)
class EpsilonResult:
    l: int
    eps: float
    argmax: tuple  # (sequence, flipped sequence), each a tuple of setting ids


def _check_order(l, history_len):
    if int(l) != l or not 1 <= l <= history_len:
        raise DomainError(f"order l = {l} must satisfy 1 <= l <= history_len = {history_len}")


@functools.lru_cache(maxsize=64)
def _partners(m: int, n: int, l: int) -> np.ndarray:
    """Row indices of the m-1 sequences differing from each row in round n-l."""
    idx = enumerate_sequences(m, n)
    p = n - 1 - l
    digit = idx[:, p][:, None]
    j = np.arange(m - 1)[None, :]
    alt = j + (j >= digit)
    rows = np.arange(idx.shape[0])[:, None]
    out = rows + (alt - digit) * m ** l
    out.setflags(write=False)
    return out


def _order_result(values, idx, ids, m, l, pair, rows=None) -> EpsilonResult:
    partner = _partners(m, idx.shape[1], l)
    if rows is not None:
        partner = partner[rows]
        base = rows
    else:
        base = np.arange(idx.shape[0])
    eps = pair(values[base][:, None], values[partner])
    flat = int(np.argmax(eps))
    i, a = divmod(flat, m - 1)
    seq = tuple(ids[k] for k in idx[base[i]])
    other = tuple(ids[k] for k in idx[partner[i, a]])
    return EpsilonResult(l, float(np.clip(eps[i, a], 0.0, 1.0)), (seq, other))


def correlation_strengths(source, t0: float, l_max: int, history_len: int = 4, final_setting=None) -> list:
    """Order 1..l_max strengths at t0 sharing one enumeration pass."""
    _check_order(l_max, history_len)
    m = len(source.alphabet)
    idx = enumerate_sequences(m, history_len + 1)
    values = np.asarray(source.outputs(idx, t0), dtype=float)
    pair = PAIR_METRICS[source.metric]
    rows = None
    if final_setting is not None:
        rows = np.flatnonzero(idx[:, -1] == source.alphabet.index(final_setting))
    return [_order_result(values, idx, source.alphabet.ids, m, l, pair, rows) for l in range(1, l_max + 1)]


def epsilon_l(source, l: int, t0: float, history_len: int = 4) -> EpsilonResult:
    _check_order(l, history_len)
    return correlation_strengths(source, t0, l, history_len)[l - 1]


def per_setting_breakdown(source, l_range, t0: float, history_len: int = 4) -> dict:
    """Strengths with the emitted (round-n) setting held fixed, per setting id."""
    l_range = list(l_range)
    l_max = max(l_range)
    out = {}
    for sid in source.alphabet.ids:
        res = correlation_strengths(source, t0, l_max, history_len, final_setting=sid)
        out[sid] = [res[l - 1].eps for l in l_range]
    return out


@dataclass(frozen=True)
class CorrelationReport:
    metric: str
    t0: float
    epsilon_l: tuple
    eps_correl: float
    eps_qubit: float
    eps_total: float
    argmax_sequences: tuple = field(default=(), repr=False)

    @classmethod
    def build(cls, metric, t0, results) -> "CorrelationReport":
        eps = tuple(r.eps for r in results)
        correl, qubit, total = aggregate(eps)
        return cls(metric, float(t0), eps, correl, qubit, total, tuple(r.argmax for r in results))

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "t0_ns": self.t0,
            "epsilon_l": list(self.epsilon_l),
            "eps_correl": self.eps_correl,
            "eps_qubit": self.eps_qubit,
            "eps_total": self.eps_total,
            "argmax_sequences": [[list(a), list(b)] for a, b in self.argmax_sequences],
        }


def characterize(source, t0: float, l_max: int, history_len: int = 4) -> CorrelationReport:
    return CorrelationReport.build(source.metric, t0, correlation_strengths(source, t0, l_max, history_len))


@dataclass(frozen=True)
class AlignmentSelection:
    t0_best: float
    t0_worst: float
    scan: tuple  # ((t0, objective), ...)
    objective: str = "eps_total"

    def to_dict(self) -> dict:
        return {"t0_best_ns": self.t0_best, "t0_worst_ns": self.t0_worst, "objective": self.objective,
                "scan": [[t, v] for t, v in self.scan]}


def default_exclusion(T: float) -> tuple:
    return 0.1 * T, 0.9 * T


def scan_alignment(source, t0_grid, objective: str = "eps_total", l_max: int = 4, history_len: int = 4,
                   exclusion=None, window: float | None = None, threads: int = 1, T: float | None = None):
    """Best alignment (objective minimum inside the admissible region) and the
    worst point inside a window centred on it.

    ``exclusion`` is the admissible region (lo, hi); the defaults scale with
    the bin width T as [0.1T, 0.9T] and a window of 0.2T.
    """
    if objective not in ("eps_total", "eps_correl"):
        raise ConfigError(f"unknown objective {objective!r}")
    T = float(T if T is not None else source.T)
    grid = np.asarray(t0_grid, dtype=float)
    if grid.size == 0 or np.any(grid < -1e-12) or np.any(grid > T + 1e-12):
        raise ConfigError(f"t0 grid must be non-empty and inside [0, {T}]")
    lo, hi = exclusion if exclusion is not None else default_exclusion(T)
    window = 0.2 * T if window is None else float(window)
    _check_order(l_max, history_len)

    def evaluate(t0):
        rep = characterize(source, float(t0), l_max, history_len)
        return rep.eps_total if objective == "eps_total" else rep.eps_correl

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = np.array(list(pool.map(evaluate, grid)))
    else:
        values = np.array([evaluate(t) for t in grid])

    tol = 1e-9
    admissible = (grid >= lo - tol) & (grid <= hi + tol)
    if not admissible.any():
        raise ConfigError(f"no grid point inside the admissible region [{lo}, {hi}]")
    ib = int(np.flatnonzero(admissible)[np.argmin(values[admissible])])
    tb = float(grid[ib])
    near = np.abs(grid - tb) <= window / 2 + tol
    iw = int(np.flatnonzero(near)[np.argmax(values[near])])
    return AlignmentSelection(tb, float(grid[iw]), tuple(zip(grid.tolist(), values.tolist())), objective)
