"""Low-pass LTI systems described by their poles.

Units: angular rates are in 10^6 rad/s (rad/us), user-facing frequencies in
MHz (omega = 2*pi*nu), and times in ns.  ``US_PER_NS`` converts between the
two time scales wherever a rate multiplies a time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFilterError, DomainError, ResolutionError
from .waveform import Waveform

US_PER_NS = 1e-3


@dataclass(frozen=True)
class ThreePoleParams:
    """Complex pole pair at radius 2*pi*nu1 and angle pi -/+ alpha1, plus a real pole at -2*pi*nu2."""

    gain_G0: float
    nu1: float
    nu2: float
    alpha1: float

    def __post_init__(self):
        if not (self.nu1 > 0 and self.nu2 > 0):
            raise DomainError(f"pole frequencies must be positive, got nu1={self.nu1}, nu2={self.nu2}")
        if not 0 < self.alpha1 < math.pi / 2:
            raise DomainError(f"alpha1 must lie in (0, pi/2), got {self.alpha1}")
        if not (math.isfinite(self.gain_G0) and self.gain_G0 != 0):
            raise DomainError(f"gain must be finite and non-zero, got {self.gain_G0}")

    @property
    def omega1(self) -> float:
        return 2 * math.pi * self.nu1

    @property
    def omega2(self) -> float:
        return 2 * math.pi * self.nu2

    def as_filter(self) -> "FilterSpec":
        s1 = self.omega1 * complex(math.cos(math.pi - self.alpha1), math.sin(math.pi - self.alpha1))
        return FilterSpec(self.gain_G0, (s1, s1.conjugate(), complex(-self.omega2, 0.0)))

    def scaled(self, factor: float) -> "ThreePoleParams":
        """Same geometry with both pole frequencies multiplied by ``factor``."""
        return ThreePoleParams(self.gain_G0, self.nu1 * factor, self.nu2 * factor, self.alpha1)

    def to_dict(self) -> dict:
        return {"G0": self.gain_G0, "nu1_MHz": self.nu1, "nu2_MHz": self.nu2, "alpha1_rad": self.alpha1}

    @classmethod
    def from_dict(cls, d: dict) -> "ThreePoleParams":
        return cls(float(d["G0"]), float(d["nu1_MHz"]), float(d["nu2_MHz"]), float(d["alpha1_rad"]))


@dataclass(frozen=True)
class FilterSpec:
    """H(s) = G0 * prod_k |s_k| / (s - s_k) with distinct, conjugate-closed poles."""

    gain_G0: float
    poles: tuple

    def __post_init__(self):
        poles = tuple(complex(p) for p in self.poles)
        if not poles:
            raise DomainError("at least one pole is required")
        for p in poles:
            if not p.real < 0:
                raise DomainError(f"pole {p} does not have a negative real part")
        scale = max(abs(p) for p in poles)
        for i, p in enumerate(poles):
            for q in poles[i + 1:]:
                if abs(p - q) <= 1e-12 * scale:
                    raise DegenerateFilterError(f"repeated pole {p} is not supported")
            if abs(p.imag) > 1e-12 * scale:
                if not any(abs(q - p.conjugate()) <= 1e-9 * scale for q in poles):
                    raise DomainError(f"pole {p} lacks its complex conjugate")
        object.__setattr__(self, "poles", poles)

    @property
    def omegas(self) -> np.ndarray:
        return np.abs(np.array(self.poles))


@dataclass(frozen=True)
class DecayEnvelope:
    """|g(t)| <= A exp(-b t); ``rate_b`` in 10^6 s^-1, t in ns."""

    amplitude_A: float
    rate_b: float

    def __post_init__(self):
        if not (self.amplitude_A > 0 and self.rate_b > 0):
            raise DomainError(f"envelope needs A > 0 and b > 0, got {self.amplitude_A}, {self.rate_b}")

    def __call__(self, t):
        return self.amplitude_A * np.exp(-self.rate_b * US_PER_NS * np.asarray(t, dtype=float))

    def to_dict(self) -> dict:
        return {"A": self.amplitude_A, "b_per_us": self.rate_b}


# Optimal filter of the reference experiment and the envelope printed with it.
TABLE_I = ThreePoleParams(gain_G0=0.95, nu1=164.0, nu2=80.0, alpha1=1.26)
TABLE_I_ENVELOPE = DecayEnvelope(amplitude_A=1.60, rate_b=318.7)


def derived_geometry(params: ThreePoleParams) -> tuple[float, float]:
    """Modulus ``r`` and phase ``eta`` of s1 + omega2."""
    w1, w2, a1 = params.omega1, params.omega2, params.alpha1
    x = w2 - w1 * math.cos(a1)
    y = w1 * math.sin(a1)
    r = math.hypot(x, y)
    if r == 0:
        raise DegenerateFilterError("complex pole coincides with the real pole (r = 0)")
    return r, math.atan2(y, x)


def error_function_g(params: ThreePoleParams, t):
    """Normalised deviation of the step response from the ideal step, t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("error function is defined for t >= 0")
    return _g_unchecked(params, t)


def _g_unchecked(params: ThreePoleParams, t):
    w1, w2, a1 = params.omega1, params.omega2, params.alpha1
    r, eta = derived_geometry(params)
    s = np.asarray(t, dtype=float) * US_PER_NS
    pref = w1 * w2 / math.sin(a1)
    real_term = math.sin(eta) / (w2 * r) * np.exp(-w2 * s)
    ring_term = np.exp(-w1 * math.cos(a1) * s) * np.sin(w1 * math.sin(a1) * s + a1 - eta) / (w1 * r)
    return -pref * (real_term + ring_term)


def step_response_three_pole(params: ThreePoleParams, t):
    """Closed-form step response; zero for t < 0."""
    t = np.asarray(t, dtype=float)
    pos = t >= 0
    g = _g_unchecked(params, np.where(pos, t, 0.0))
    return np.where(pos, params.gain_G0 * (1.0 + g), 0.0)


def decay_envelope(params: ThreePoleParams) -> DecayEnvelope:
    w1, w2, a1 = params.omega1, params.omega2, params.alpha1
    sa = math.sin(a1)
    if sa == 0:
        raise DegenerateFilterError("sin(alpha1) = 0: real double pole")
    r, eta = derived_geometry(params)
    A = (w1 * w2 / sa) * (math.sin(eta) / (w2 * r) + 1.0 / (w1 * r))
    b = min(w2, w1 * math.cos(a1))
    return DecayEnvelope(A, b)


def residues(filt: FilterSpec) -> np.ndarray:
    """Partial-fraction coefficients c_k of H(s)/(G0 s) at each pole."""
    poles = np.array(filt.poles)
    k = np.prod(np.abs(poles))
    out = np.empty(len(poles), dtype=complex)
    for i, p in enumerate(poles):
        others = np.delete(poles, i)
        out[i] = k / (p * np.prod(p - others))
    return out


def step_response_general(filt: FilterSpec, t, return_complex: bool = False):
    """G0 * sum_k c_k (exp(s_k t) - 1) for t >= 0, zero before."""
    t = np.asarray(t, dtype=float)
    c = residues(filt)
    poles = np.array(filt.poles)
    s = np.where(t >= 0, t, 0.0)[..., None] * US_PER_NS
    total = filt.gain_G0 * np.sum(c * (np.exp(poles * s) - 1.0), axis=-1)
    total = np.where(t >= 0, total, 0.0)
    return total if return_complex else total.real


def error_function_general(filt: FilterSpec, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("error function is defined for t >= 0")
    return step_response_general(filt, t) / filt.gain_G0 - 1.0


def max_oracle_step(filt: FilterSpec) -> float:
    """Largest admissible oracle step in ns: 1 / (50 max|s_k|)."""
    return 1.0 / (50.0 * float(np.max(filt.omegas)) * US_PER_NS)


def step_response_oracle(filt: FilterSpec, t_end: float, dt: float | None = None) -> Waveform:
    """Fixed-step RK4 integration of the cascade realisation under a unit step.

    States follow x_1' = s_1 x_1 + |s_1| u and x_k' = s_k x_k + |s_k| x_{k-1};
    the output is G0 * Re(x_n).  Samples are at t = 0, dt, 2dt, ... <= t_end.
    """
    limit = max_oracle_step(filt)
    if dt is None:
        dt = limit
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if dt > limit * (1 + 1e-12):
        raise ResolutionError(f"dt = {dt} ns exceeds 1/(50 max|s|) = {limit:.4g} ns")
    if t_end <= 0:
        return Waveform(0.0, dt, np.empty(0))
    n_steps = int(math.floor(t_end / dt + 1e-9))
    poles = np.array(filt.poles)
    n = len(poles)
    M = np.diag(poles).astype(complex)
    for k in range(1, n):
        M[k, k - 1] = abs(poles[k])
    B = np.zeros(n, dtype=complex)
    B[0] = abs(poles[0])

    h = dt * US_PER_NS

    def rhs(x):
        return M @ x + B

    x = np.zeros(n, dtype=complex)
    out = np.empty(n_steps + 1)
    out[0] = 0.0
    # the RK4 update is affine for a linear system: x <- P x + q
    eye = np.eye(n, dtype=complex)
    P = np.empty_like(M)
    q = np.empty(n, dtype=complex)
    for j in range(n):
        e = eye[:, j]
        k1 = M @ e
        k2 = M @ (e + 0.5 * h * k1)
        k3 = M @ (e + 0.5 * h * k2)
        k4 = M @ (e + h * k3)
        P[:, j] = e + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * h * k1)
    k3 = rhs(x + 0.5 * h * k2)
    k4 = rhs(x + h * k3)
    q[:] = h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    for i in range(1, n_steps + 1):
        x = P @ x + q
        out[i] = x[-1].real
    return Waveform(0.0, dt, filt.gain_G0 * out)


def step_response(filt, t):
    """Dispatch on filter representation."""
    if isinstance(filt, ThreePoleParams):
        return step_response_three_pole(filt, t)
    return step_response_general(filt, t)


def error_function(filt, t):
    if isinstance(filt, ThreePoleParams):
        return error_function_g(filt, t)
    return error_function_general(filt, t)
