"""Exponential upper bounds on correlation strengths and effective lengths.

Given an envelope |g(t)| <= A exp(-b t), the order-l strengths at alignment
t0 are bounded by a geometric sequence eps_bar_1 * exp(-C (l - 1)), with

    phase:      C = 2bT,  eps_bar_1 = A^2 D^2 exp(-2b t0) (1 + exp(-bT))^2 / 4
    intensity:  C = bT,   eps_bar_1 = mu0 A D exp(-b t0) (1 + exp(-bT)) / 2

where D is the largest setting difference at the flipped round.  Such a
sequence admits an effective correlation length beyond which residual
correlations are negligible up to a failure probability d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError
from .lti import US_PER_NS, DecayEnvelope

DELTA_MAX = {
    "three_state": math.pi,
    "bb84": 3 * math.pi / 2,
    "intensity_full_swing": math.pi,
}
DEFAULT_FAILURE_PROBABILITY = 1e-10


def delta_max_for(protocol) -> float:
    if isinstance(protocol, (int, float)):
        return float(protocol)
    try:
        return DELTA_MAX[protocol]
    except KeyError:
        raise ConfigError(f"unknown protocol {protocol!r}; expected one of {sorted(DELTA_MAX)}") from None


def _check(l, T, t0):
    if int(l) != l or l < 1:
        raise DomainError(f"order l must be a positive integer, got {l}")
    if not T > 0:
        raise DomainError(f"pulse width must be positive, got {T}")
    if not 0 <= t0 <= T:
        raise DomainError(f"t0 = {t0} outside [0, {T}]")


def bound_eps_l_phase(envelope: DecayEnvelope, delta_max: float, T: float, t0: float, l: int) -> float:
    _check(l, T, t0)
    bT = envelope.rate_b * T * US_PER_NS
    bt0 = envelope.rate_b * t0 * US_PER_NS
    return (0.25 * envelope.amplitude_A ** 2 * delta_max ** 2 * math.exp(-2 * bt0)
            * (1 + math.exp(-bT)) ** 2 * math.exp(-2 * bT * (l - 1)))


def bound_eps_l_intensity(envelope: DecayEnvelope, delta_max: float, mu0: float, T: float, t0: float, l: int) -> float:
    _check(l, T, t0)
    if mu0 < 0:
        raise DomainError(f"mu0 must be non-negative, got {mu0}")
    bT = envelope.rate_b * T * US_PER_NS
    bt0 = envelope.rate_b * t0 * US_PER_NS
    return (mu0 / 2 * envelope.amplitude_A * delta_max * math.exp(-bt0)
            * (1 + math.exp(-bT)) * math.exp(-bT * (l - 1)))


@dataclass(frozen=True)
class BoundParams:
    metric: str
    C: float
    eps_bar_1: float
    delta_max: float
    envelope: DecayEnvelope
    T: float
    t0: float
    mu0: float | None = None

    def bound(self, l: int) -> float:
        if self.metric == "phase":
            return bound_eps_l_phase(self.envelope, self.delta_max, self.T, self.t0, l)
        return bound_eps_l_intensity(self.envelope, self.delta_max, self.mu0, self.T, self.t0, l)

    def to_dict(self) -> dict:
        return {"metric": self.metric, "C": self.C, "eps_bar_1": self.eps_bar_1, "delta_max": self.delta_max,
                "envelope": self.envelope.to_dict(), "T_ns": self.T, "t0_ns": self.t0, "mu0": self.mu0}


def security_constants(envelope: DecayEnvelope, T: float, metric: str, delta_max: float, t0: float,
                       mu0: float | None = None) -> BoundParams:
    bT = envelope.rate_b * T * US_PER_NS
    if metric == "phase":
        return BoundParams(metric, 2 * bT, bound_eps_l_phase(envelope, delta_max, T, t0, 1), delta_max,
                           envelope, T, t0)
    if metric == "intensity":
        if mu0 is None:
            raise ConfigError("intensity bounds need mu0")
        return BoundParams(metric, bT, bound_eps_l_intensity(envelope, delta_max, mu0, T, t0, 1), delta_max,
                           envelope, T, t0, mu0)
    raise ConfigError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class EffectiveLength:
    l_e: int
    N: float
    d: float
    raw_value: float

    @classmethod
    def from_raw(cls, raw: float, N, d) -> "EffectiveLength":
        return cls(max(1, math.ceil(raw)), N, d, raw)


def _check_nd(N, d):
    if not N >= 1:
        raise ConfigError(f"number of signals must be >= 1, got {N}")
    if not 0 < d < 1:
        raise ConfigError(f"failure probability must lie in (0, 1), got {d}")


def effective_length(C: float, eps_bar_1: float, N, d: float = DEFAULT_FAILURE_PROBABILITY) -> EffectiveLength:
    """(1/C) ln[N eps_bar_1 / (d^2 (1 - exp(-C/2))^2)], ceiled and clamped to >= 1."""
    _check_nd(N, d)
    if not C > 0:
        raise ConfigError(f"decay constant C must be positive, got {C}")
    denom = d ** 2 * (-math.expm1(-C / 2)) ** 2
    arg = N * eps_bar_1 / denom if denom > 0 else float("nan")
    if not arg > 0 or not math.isfinite(arg):
        raise ConfigError(f"logarithm argument is not positive and finite ({arg}); check eps_bar_1 and C")
    return EffectiveLength.from_raw(math.log(arg) / C, N, d)


def effective_length_closed_form(params: BoundParams, N, d: float = DEFAULT_FAILURE_PROBABILITY) -> EffectiveLength:
    """Same quantity written directly in A, b, T, t0 with the t0 term pulled out."""
    _check_nd(N, d)
    A, D, T = params.envelope.amplitude_A, params.delta_max, params.T
    bT = params.envelope.rate_b * T * US_PER_NS
    if params.metric == "phase":
        arg = N * A ** 2 * D ** 2 * (1 + math.exp(-bT)) ** 2 / (4 * d ** 2 * (-math.expm1(-bT)) ** 2)
        scale = 2 * bT
    else:
        arg = N * params.mu0 * A * D * (1 + math.exp(-bT)) / (2 * d ** 2 * (-math.expm1(-bT / 2)) ** 2)
        scale = bT
    if not arg > 0 or not math.isfinite(arg):
        raise ConfigError(f"logarithm argument is not positive and finite ({arg})")
    return EffectiveLength.from_raw(math.log(arg) / scale - params.t0 / T, N, d)


def effective_length_scan(params: BoundParams, N_range, d: float = DEFAULT_FAILURE_PROBABILITY) -> list:
    """[(N, raw_value, l_e), ...] over an increasing range of N."""
    N_range = list(N_range)
    if not N_range:
        raise ConfigError("N range is empty")
    if any(b <= a for a, b in zip(N_range, N_range[1:])):
        raise ConfigError("N range must be strictly increasing")
    out = []
    for N in N_range:
        le = effective_length(params.C, params.eps_bar_1, N, d)
        out.append((N, le.raw_value, le.l_e))
    return out
