"""Least-squares identification of the three-pole filter from a pulse train.

The model is the raw filter output for a known setting sequence (settles
to G0 * level), fitted over (G0, nu1, nu2, alpha1) by bounded trust-region least squares
from several jittered starts; the start with the lowest residual wins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import CoverageError, DomainError, NoFitError
from .lti import ThreePoleParams, step_response_three_pole
from .modulation import PulseTrainConfig, SettingAlphabet, ideal_signal, jumps, modulated_signal
from .waveform import Waveform, sample_waveform

_ALPHA_EDGE = 1e-6
_LOWER = np.array([1e-6, 1e-3, 1e-3, _ALPHA_EDGE])
_UPPER = np.array([1e3, 1e6, 1e6, math.pi / 2 - _ALPHA_EDGE])

# Fixture sequence with every kind of transition between S, D and V levels.
DEFAULT_FIT_SEQUENCE = ("S", "V", "D", "S", "V")


@dataclass(frozen=True)
class FitResult:
    params: ThreePoleParams
    residual_rms: float
    iterations: int
    converged: bool
    start_index: int = 0

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "residual_rms": self.residual_rms,
                "iterations": self.iterations, "converged": self.converged, "start_index": self.start_index}


def synth_fixture(params: ThreePoleParams, seq, cfg: PulseTrainConfig, alphabet: SettingAlphabet,
                  noise_sigma: float = 0.0, seed: int = 0, dt: float = 0.1,
                  t_start: float | None = None, t_stop: float | None = None) -> Waveform:
    """Sampled raw model output plus seeded zero-mean Gaussian noise.

    The default span runs from one bin before the sequence to two bins after it.
    """
    if noise_sigma < 0:
        raise DomainError(f"noise sigma must be non-negative, got {noise_sigma}")
    T = cfg.pulse_width_T
    t_start = -T if t_start is None else t_start
    t_stop = (cfg.num_pulses_N + 2) * T if t_stop is None else t_stop
    n = int(round((t_stop - t_start) / dt)) + 1
    wf = sample_waveform(lambda t: modulated_signal(seq, cfg, alphabet, params, t), t_start, dt, n)
    if noise_sigma == 0:
        return wf
    rng = np.random.default_rng(seed)
    return Waveform(wf.t_start, wf.dt, wf.samples + rng.normal(0.0, noise_sigma, len(wf)))


def _model(x, t, d, j0, T):
    p = ThreePoleParams(*x)
    y = np.full_like(t, p.gain_G0 * j0)
    for k, dk in enumerate(d):
        if dk != 0.0:
            y += dk * step_response_three_pole(p, t - k * T)
    return y


def initial_guess(waveform: Waveform, seq, cfg: PulseTrainConfig, alphabet: SettingAlphabet) -> ThreePoleParams:
    """Heuristic start: gain from settled levels, ringing frequency from residual peaks."""
    T = cfg.pulse_width_T
    t = waveform.times
    y = waveform.samples
    ideal = ideal_signal(seq, cfg, alphabet, t)
    # late part of each bin is close to settled
    late = ((t % T) > 0.7 * T) & (np.abs(ideal) > 1e-12)
    if late.any():
        G0 = float(np.sum(y[late] * ideal[late]) / np.sum(ideal[late] ** 2))
    else:
        G0 = 1.0
    if not G0 > 0:
        G0 = 1.0
    resid = y - G0 * ideal
    d = jumps(seq, cfg, alphabet)
    nu1 = 150.0
    k = int(np.argmax(np.abs(d)))
    t_edge = k * T
    seg = (t > t_edge) & (t < t_edge + T)
    if seg.sum() > 8:
        r = resid[seg] * np.sign(d[k])
        peaks = np.flatnonzero((r[1:-1] > r[:-2]) & (r[1:-1] >= r[2:])) + 1
        if len(peaks) >= 2:
            period = float(np.mean(np.diff(t[seg][peaks])))
            if period > 0:
                nu1 = 1e3 / period  # ns -> MHz
    nu1 = float(np.clip(nu1, 1.0, 1e5))
    return ThreePoleParams(G0, nu1, nu1 / 2, 1.0)


def fit_three_pole(waveform: Waveform, seq, cfg: PulseTrainConfig, alphabet: SettingAlphabet,
                   init: ThreePoleParams | None = None, n_starts: int = 8, jitter: float = 0.3,
                   seed: int = 0, max_iter: int = 2_000, rtol: float = 1e-12,
                   edge_weight: float | None = None) -> FitResult:
    """Fit (G0, nu1, nu2, alpha1) to ``waveform`` generated by ``seq``.

    Start 0 is ``init`` itself; the others are jittered uniformly by
    +-``jitter`` (relative) with a seeded generator.  ``edge_weight``, when
    given, down-weights samples within 10% of T after each transition.
    """
    cfg.check(alphabet, seq)
    T = cfg.pulse_width_T
    N = cfg.num_pulses_N
    if not waveform.covers(0.0, (N + 1) * T):
        raise CoverageError(f"waveform [{waveform.t_start}, {waveform.t_end}] ns must cover the sequence "
                            f"plus one settling interval [0, {(N + 1) * T}] ns")
    d = jumps(seq, cfg, alphabet)
    y = waveform.samples
    if not np.any(d != 0) or np.ptp(y) == 0:
        raise NoFitError("waveform has no transitions; pole frequencies are unidentifiable")
    if init is None:
        init = initial_guess(waveform, seq, cfg, alphabet)
    t = waveform.times
    j0 = alphabet.level(cfg.steady_setting_j0)
    w = np.ones_like(t)
    if edge_weight is not None:
        for k in range(len(d)):
            w[(t >= k * T) & (t < k * T + 0.1 * T)] = edge_weight
    w = w / w.mean()

    x_init = np.array([init.gain_G0, init.nu1, init.nu2, init.alpha1])
    rng = np.random.default_rng(seed)
    starts = [x_init]
    for _ in range(n_starts - 1):
        starts.append(x_init * (1 + rng.uniform(-jitter, jitter, 4)))
    starts = [np.clip(s, _LOWER * 1.01, _UPPER * 0.99) for s in starts]

    best = None
    sw = np.sqrt(w)
    for i, x0 in enumerate(starts):
        def residual(z, scale=x0):
            return sw * (_model(z * scale, t, d, j0, T) - y)

        try:
            res = least_squares(residual, np.ones(4), bounds=(_LOWER / x0, _UPPER / x0), method="trf",
                                x_scale="jac", ftol=rtol, xtol=rtol, gtol=rtol, max_nfev=max_iter)
        except (DomainError, ValueError):
            continue
        x = res.x * x0
        f = float(np.mean(res.fun ** 2))
        at_bound = np.any(np.isclose(x, _LOWER, rtol=1e-6)) or np.any(np.isclose(x, _UPPER, rtol=1e-6))
        if not np.isfinite(f) or at_bound:
            continue
        if best is None or f < best[0]:
            best = (f, i, x, int(res.nfev), res.status > 0)
    if best is None:
        raise NoFitError("all starts diverged or ended on a parameter bound")
    f, i, x, used, converged = best
    try:
        params = ThreePoleParams(*map(float, x))
    except DomainError as exc:
        raise NoFitError(f"fitted parameters invalid: {exc}", math.sqrt(f)) from None
    resid = _model(x, t, d, j0, T) - y
    return FitResult(params, float(np.sqrt(np.mean(resid ** 2))), used, converged, i)
