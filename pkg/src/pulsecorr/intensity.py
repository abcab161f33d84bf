"""Mach-Zehnder interference, mean photon numbers and Poissonian fidelity."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .waveform import Waveform

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class GaussianProfile:
    """Normalised temporal profile of the laser pulses."""

    fwhm: float  # ns

    def __post_init__(self):
        if not self.fwhm > 0:
            raise DomainError(f"FWHM must be positive, got {self.fwhm}")

    @property
    def sigma(self) -> float:
        return self.fwhm * FWHM_TO_SIGMA

    def __call__(self, t):
        s = self.sigma
        t = np.asarray(t, dtype=float)
        return np.exp(-0.5 * (t / s) ** 2) / (s * math.sqrt(2 * math.pi))


@dataclass(frozen=True)
class IntensityConfig:
    mu0_signal: float = 0.3
    integration_width_dt: float = 2.0  # ns, 2 x FWHM for the reference 1 ns pulses
    normalization: float = 1.0

    def __post_init__(self):
        if not self.mu0_signal > 0:
            raise DomainError(f"mu0 must be positive, got {self.mu0_signal}")
        if not self.integration_width_dt > 0:
            raise DomainError(f"integration width must be positive, got {self.integration_width_dt}")


def interfere(I_in, phi):
    """Balanced-MZI output intensity for relative phase ``phi``."""
    I_in = np.asarray(I_in, dtype=float)
    if np.any(I_in < 0):
        raise DomainError("input intensity must be non-negative")
    return I_in / 2.0 * (1.0 + np.sin(phi))


def mean_photon_dirac(phi_at_t0, mu0: float):
    """mu0 (1 + sin phi) / 2, written as mu0 sin^2(phi/2 + pi/4) to stay accurate near vacuum."""
    if not mu0 >= 0:
        raise DomainError(f"mu0 must be non-negative, got {mu0}")
    return mu0 * np.sin(np.asarray(phi_at_t0, dtype=float) / 2.0 + math.pi / 4) ** 2


def _window_integral(wf: Waveform, integrand, t0: float, half: float) -> float:
    lo, hi = t0 - half, t0 + half
    if not wf.covers(lo, hi):
        raise DomainError(f"integration window [{lo:.6g}, {hi:.6g}] ns exceeds waveform support "
                          f"[{wf.t_start:.6g}, {wf.t_end:.6g}] ns")
    t = wf.times
    inner = (t > lo + 1e-12) & (t < hi - 1e-12)
    tt = np.concatenate([[lo], t[inner], [hi]])
    vv = np.concatenate([wf.value_at([lo]), wf.samples[inner], wf.value_at([hi])])
    return float(_trapezoid(integrand(tt, vv), tt))


def mean_photon_gaussian(waveform: Waveform, profile: GaussianProfile, t0: float, cfg: IntensityConfig,
                         kind: str = "phase") -> float:
    """Windowed overlap of the pulse profile with the modulation.

    ``kind="phase"`` integrates f(t - t0) (1 + sin phi(t)); ``kind="detector"``
    integrates f(t - t0) V(t) for a photodetector trace.  The result is
    scaled by ``cfg.normalization``.
    """
    half = cfg.integration_width_dt / 2.0
    if kind == "phase":
        def integrand(t, v):
            return profile(t - t0) * (1.0 + np.sin(v))
    elif kind == "detector":
        def integrand(t, v):
            return profile(t - t0) * v
    else:
        raise DomainError(f"unknown waveform kind {kind!r}")
    return cfg.normalization * _window_integral(waveform, integrand, t0, half)


def calibrate(profile: GaussianProfile, cfg: IntensityConfig, dt: float, signal_value: float = math.pi / 2,
              kind: str = "phase") -> IntensityConfig:
    """Return ``cfg`` with the normalisation that maps a steady signal-level pulse to mu0."""
    half = cfg.integration_width_dt / 2.0
    n = int(math.ceil(2 * half / dt)) + 3
    flat = Waveform(-half - dt, dt, np.full(n, float(signal_value)))
    raw = mean_photon_gaussian(flat, profile, 0.0, replace(cfg, normalization=1.0), kind)
    if not raw > 0:
        raise DomainError("signal level integrates to zero; cannot calibrate")
    return replace(cfg, normalization=cfg.mu0_signal / raw)


def poisson_fidelity(mu1, mu2, mode: str = "closed_form", n_max: int = 100):
    """Classical fidelity (squared Bhattacharyya overlap) of two Poisson laws."""
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    if np.any(mu1 < 0) or np.any(mu2 < 0):
        raise DomainError("mean photon numbers must be non-negative")
    if mode == "closed_form":
        return np.exp(-(np.sqrt(mu1) - np.sqrt(mu2)) ** 2)
    if mode != "truncated_series":
        raise DomainError(f"unknown fidelity mode {mode!r}")
    n = np.arange(int(n_max) + 1)
    g = np.sqrt(mu1 * mu2)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_terms = n * np.log(g) - gammaln(n + 1)
    log_terms = np.where((g == 0) & (n == 0), 0.0, log_terms)
    overlap = np.exp(-(mu1 + mu2) / 2.0) * np.sum(np.exp(log_terms), axis=-1)
    return overlap ** 2
