"""Ideal and filter-distorted modulation signals for setting sequences.

A sequence of N settings occupies half-open bins [(k-1)T, kT), k = 1..N,
embedded in a steady background at setting ``j0``.  By linearity the output
is a sum of step responses weighted by the jumps between consecutive levels:

    y(t) = G0*j0 + sum_{k=1}^{N+1} (j_k - j_{k-1}) * step(t - (k-1)T),

with j_0 = j_{N+1} = j0.  In gain-compensated mode the settings are
pre-divided by G0 so the output settles to the nominal levels themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .lti import DecayEnvelope, ThreePoleParams, error_function, step_response

SettingSequence = tuple  # of setting ids


def voltage_to_phase(V, Vpi: float):
    """Phase introduced by a biased phase modulator: pi*V/Vpi + pi."""
    if not Vpi > 0:
        raise DomainError(f"half-wave voltage must be positive, got {Vpi}")
    return np.asarray(V, dtype=float) / Vpi * math.pi + math.pi


@dataclass(frozen=True)
class SettingAlphabet:
    """Ordered setting ids and their levels.

    Levels are voltages when ``half_wave_voltage_Vpi`` is set and phases
    (rad) otherwise; :meth:`to_phase` maps either kind to radians.
    """

    levels: tuple  # ((setting_id, level), ...)
    half_wave_voltage_Vpi: float | None = None

    def __post_init__(self):
        levels = tuple((str(k), float(v)) for k, v in (self.levels.items() if isinstance(self.levels, dict) else self.levels))
        ids = [k for k, _ in levels]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate setting ids in {ids}")
        if len({v for _, v in levels}) < 2:
            raise ConfigError("an alphabet needs at least two distinct levels")
        if self.half_wave_voltage_Vpi is not None and not self.half_wave_voltage_Vpi > 0:
            raise ConfigError("half-wave voltage must be positive")
        object.__setattr__(self, "levels", levels)

    @property
    def ids(self) -> tuple:
        return tuple(k for k, _ in self.levels)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.levels])

    def __len__(self):
        return len(self.levels)

    def level(self, setting_id) -> float:
        for k, v in self.levels:
            if k == setting_id:
                return v
        raise ConfigError(f"unknown setting id {setting_id!r}; alphabet is {self.ids}")

    def index(self, setting_id) -> int:
        try:
            return self.ids.index(setting_id)
        except ValueError:
            raise ConfigError(f"unknown setting id {setting_id!r}; alphabet is {self.ids}") from None

    def to_phase(self, level):
        if self.half_wave_voltage_Vpi is None:
            return np.asarray(level, dtype=float)
        return voltage_to_phase(level, self.half_wave_voltage_Vpi)

    def phase_scale(self) -> float:
        """d(phase)/d(level)."""
        return 1.0 if self.half_wave_voltage_Vpi is None else math.pi / self.half_wave_voltage_Vpi

    def max_phase_difference(self) -> float:
        v = self.values
        return float((v.max() - v.min()) * self.phase_scale())

    def to_dict(self) -> dict:
        return {"levels": dict(self.levels), "v_pi": self.half_wave_voltage_Vpi}

    @classmethod
    def from_dict(cls, d: dict) -> "SettingAlphabet":
        return cls(tuple(d["levels"].items()), d.get("v_pi"))


# Signal / decoy / vacuum drive voltages of the reference setup (Vpi = 6 V).
DECOY_ALPHABET = SettingAlphabet((("S", -3.0), ("D", 0.0), ("V", 3.0)), 6.0)
THREE_STATE_PHASES = SettingAlphabet((("0Y", math.pi / 2), ("1X", math.pi), ("1Y", 3 * math.pi / 2)))
BB84_PHASES = SettingAlphabet((("0X", 0.0), ("0Y", math.pi / 2), ("1X", math.pi), ("1Y", 3 * math.pi / 2)))


@dataclass(frozen=True)
class PulseTrainConfig:
    pulse_width_T: float  # ns; 100% duty cycle, so also the period
    num_pulses_N: int
    steady_setting_j0: str

    def __post_init__(self):
        if not self.pulse_width_T > 0:
            raise ConfigError(f"pulse width must be positive, got {self.pulse_width_T}")
        if int(self.num_pulses_N) < 1:
            raise ConfigError(f"need at least one pulse, got {self.num_pulses_N}")

    def check(self, alphabet: SettingAlphabet, seq: Sequence | None = None) -> None:
        alphabet.index(self.steady_setting_j0)
        if seq is not None:
            if len(seq) != self.num_pulses_N:
                raise ConfigError(f"sequence has {len(seq)} settings, expected {self.num_pulses_N}")
            for s in seq:
                alphabet.index(s)


def _levels(seq, cfg: PulseTrainConfig, alphabet: SettingAlphabet):
    cfg.check(alphabet, seq)
    j0 = alphabet.level(cfg.steady_setting_j0)
    return j0, np.array([alphabet.level(s) for s in seq])


def jumps(seq, cfg: PulseTrainConfig, alphabet: SettingAlphabet) -> np.ndarray:
    """Level jumps at t = (k-1)T for k = 1..N+1 (head, interior, tail)."""
    j0, lv = _levels(seq, cfg, alphabet)
    full = np.concatenate([[j0], lv, [j0]])
    return np.diff(full)


def ideal_signal(seq, cfg: PulseTrainConfig, alphabet: SettingAlphabet, t):
    j0, lv = _levels(seq, cfg, alphabet)
    t = np.asarray(t, dtype=float)
    k = np.floor(t / cfg.pulse_width_T).astype(int)
    inside = (k >= 0) & (k < len(lv))
    return np.where(inside, lv[np.clip(k, 0, len(lv) - 1)], j0)


def modulated_signal(seq, cfg: PulseTrainConfig, alphabet: SettingAlphabet, filt, t, gain_compensated: bool = False):
    """Filter output for ``seq`` in level units.

    By default the raw output is returned (settles to G0 * level), which is
    what an instrument records.  With ``gain_compensated`` the settings are
    the loss-compensated ones and the output settles to the nominal levels.
    """
    j0, _ = _levels(seq, cfg, alphabet)
    d = jumps(seq, cfg, alphabet)
    t = np.asarray(t, dtype=float)
    T = cfg.pulse_width_T
    G0 = filt.gain_G0
    total = np.zeros_like(t) + (j0 if gain_compensated else G0 * j0)
    for k, dk in enumerate(d):
        if dk != 0.0:
            total = total + dk * step_response(filt, t - k * T)
    if gain_compensated:
        total = j0 + (total - j0) / G0
    return total


def pairwise_phase_difference(delta_setting: float, l: int, t0: float, filt, T: float) -> float:
    """Output change at t0 inside the last bin when round N-l changes by ``delta_setting``.

    ``delta_setting`` is the difference of the loss-compensated settings.
    """
    if int(l) != l or l < 1:
        raise DomainError(f"correlation order must be a positive integer, got {l}")
    if not 0 <= t0 <= T:
        raise DomainError(f"t0 = {t0} outside [0, {T}]")
    g = error_function(filt, np.array([t0 + l * T, t0 + (l - 1) * T]))
    return float(delta_setting * (g[0] - g[1]))


def waveform_bound_curves(seq, cfg: PulseTrainConfig, alphabet: SettingAlphabet, envelope: DecayEnvelope, t, gain_G0: float = 1.0):
    """Lower/upper curves around the ideal signal from the per-jump envelope.

    ``gain_G0`` scales the settings (j' = G0 j); pass the filter gain to bound
    a raw :func:`modulated_signal`, or 1 for the gain-compensated one.
    """
    t = np.asarray(t, dtype=float)
    centre = gain_G0 * ideal_signal(seq, cfg, alphabet, t)
    d = np.abs(gain_G0 * jumps(seq, cfg, alphabet))
    width = np.zeros_like(t)
    for k, dk in enumerate(d):
        tk = t - k * cfg.pulse_width_T
        width = width + np.where(tk >= 0, dk * envelope(np.maximum(tk, 0.0)), 0.0)
    return centre - width, centre + width
