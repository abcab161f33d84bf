"""Hybrid correlation series, the aggregate phase security parameter and a key-rate hook.

Short-range orders come from the filter model, long-range orders from the
exponential bounds.  The aggregate is

    eps_phi = (sum_l sqrt(eps_l))^2 + sum_l eps_l,    l = 1..l_e.

Key rates are delegated to a caller-supplied model; :func:`reference_key_rate`
is a stand-in for exercising shapes and contracts only.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .bounds import BoundParams
from .correlations import epsilon_l
from .errors import ConfigError, DomainError, HookContractError

CONSISTENCY_SLACK = 1e-15


@dataclass(frozen=True)
class HybridSeries:
    l_split: int
    model_part: tuple
    bound_part: tuple
    l_e: int

    def __post_init__(self):
        if len(self.model_part) != self.l_split or len(self.model_part) + len(self.bound_part) != self.l_e:
            raise ConfigError(f"series lengths {len(self.model_part)} + {len(self.bound_part)} do not match "
                              f"l_split = {self.l_split}, l_e = {self.l_e}")
        if any(not 0.0 <= e <= 1.0 for e in self.values):
            raise DomainError("series entries must lie in [0, 1]")

    @property
    def values(self) -> tuple:
        return tuple(self.model_part) + tuple(self.bound_part)

    def to_dict(self) -> dict:
        return {"l_split": self.l_split, "l_e": self.l_e, "model_part": list(self.model_part),
                "bound_part": list(self.bound_part)}


@dataclass(frozen=True)
class ProtocolParams:
    N_pulses: float = 1e12
    rep_rate: float = 50e6  # Hz
    f_ec: float = 1.16
    p_dark: float = 1e-8
    channel_loss_exponent: float = 0.02  # eta = 10^(-exponent * L)
    eps_correctness: float = 1e-15
    eps_secrecy: float = 1e-9
    d_failure: float = 1e-10

    def __post_init__(self):
        if not self.N_pulses >= 1:
            raise ConfigError(f"N must be >= 1, got {self.N_pulses}")
        for name in ("p_dark", "eps_correctness", "eps_secrecy", "d_failure"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if not self.rep_rate > 0 or not self.f_ec >= 1 or not self.channel_loss_exponent >= 0:
            raise ConfigError("rep_rate > 0, f_ec >= 1 and a non-negative loss exponent are required")

    def to_dict(self) -> dict:
        return asdict(self)


def hybrid_series(source, bound_params: BoundParams, l_split: int = 4, l_e: int = 6, t0: float | None = None,
                  history_len: int | None = None) -> HybridSeries:
    """Model strengths for l <= l_split followed by bounds up to l_e.

    Sources exposing ``epsilon_shortcut`` are evaluated in closed form;
    others are enumerated with a history of ``max(l_split, 1)`` rounds.
    """
    if not 0 <= l_split <= l_e:
        raise ConfigError(f"need 0 <= l_split <= l_e, got l_split = {l_split}, l_e = {l_e}")
    t0 = bound_params.t0 if t0 is None else float(t0)
    if abs(t0 - bound_params.t0) > 1e-12:
        raise ConfigError(f"bounds were built for t0 = {bound_params.t0}, series requested at {t0}")
    history_len = history_len or max(l_split, 1)
    model = []
    for l in range(1, l_split + 1):
        if hasattr(source, "epsilon_shortcut"):
            e = source.epsilon_shortcut(l, t0)
        else:
            e = epsilon_l(source, l, t0, history_len).eps
        bound = bound_params.bound(l)
        if e > bound + CONSISTENCY_SLACK:
            warnings.warn(f"model eps_{l} = {e:.3e} exceeds its bound {bound:.3e}", RuntimeWarning, stacklevel=2)
        model.append(float(e))
    tail = tuple(min(1.0, bound_params.bound(l)) for l in range(l_split + 1, l_e + 1))
    return HybridSeries(l_split, tuple(model), tail, l_e)


def eps_phi_total(series: HybridSeries) -> float:
    e = np.asarray(series.values, dtype=float)
    return float(np.sum(np.sqrt(e)) ** 2 + np.sum(e))


def channel_yield(L_km: float, params: ProtocolParams) -> tuple:
    """(eta, gain_proxy) with eta = 10^(-exponent L) and gain 1 - (1 - eta)(1 - p_d)."""
    if not L_km >= 0:
        raise DomainError(f"distance must be non-negative, got {L_km}")
    eta = 10.0 ** (-params.channel_loss_exponent * L_km)
    return eta, 1.0 - (1.0 - eta) * (1.0 - params.p_dark)


KeyRateModel = Callable[[float, float, ProtocolParams], float]


def _h2(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def reference_key_rate(eps_phi: float, eta: float, params: ProtocolParams) -> float:
    """STAND-IN asymptotic BB84-style rate, for smoke tests of shapes only.

    Q = 1 - (1 - eta)(1 - p_d), bit error e from dark counts alone, phase
    error e + sqrt(eps_phi) capped at 1/2.  Absolute values carry no claim.
    """
    Q = 1.0 - (1.0 - eta) * (1.0 - params.p_dark)
    e = 0.5 * params.p_dark / Q
    e_ph = min(0.5, e + math.sqrt(eps_phi))
    return max(0.0, Q * (1.0 - _h2(e_ph) - params.f_ec * _h2(e)))


reference_key_rate.is_stand_in = True


def key_rate(eps_phi: float, L_km: float, params: ProtocolParams, model: KeyRateModel = reference_key_rate) -> float:
    """Bits per pulse from ``model(eps_phi, eta, params)``; the contract is a finite value >= 0."""
    if not 0.0 <= eps_phi <= 1.0:
        raise DomainError(f"eps_phi must lie in [0, 1], got {eps_phi}")
    eta, _ = channel_yield(L_km, params)
    rate = model(eps_phi, eta, params)
    try:
        rate = float(rate)
    except (TypeError, ValueError):
        raise HookContractError(f"key-rate model returned a non-number: {rate!r}") from None
    if not math.isfinite(rate) or rate < 0:
        raise HookContractError(f"key-rate model returned {rate}; expected a finite value >= 0")
    return rate


def key_rate_sweep(eps_phi: float, L_grid, params: ProtocolParams, model: KeyRateModel = reference_key_rate) -> list:
    """[(L, eta, eps_phi, rate), ...] over a distance grid."""
    return [(float(L), channel_yield(L, params)[0], eps_phi, key_rate(eps_phi, L, params, model)) for L in L_grid]
