"""Uniformly sampled waveforms and their CSV representation.

Canonical CSV: header ``time_ns,value``, one sample per row, strictly
increasing and uniformly spaced time.  A headerless two-column file is
accepted as a fallback.
"""
from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DomainError

HEADER = ("time_ns", "value")


@dataclass(frozen=True)
class Waveform:
    t_start: float
    dt: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if samples.ndim != 1:
            raise DomainError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise DomainError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(len(self.samples))

    @property
    def t_end(self) -> float:
        return self.t_start + self.dt * (len(self.samples) - 1)

    def covers(self, t_lo, t_hi, slack=1e-9) -> bool:
        return len(self) > 0 and self.t_start <= t_lo + slack and self.t_end >= t_hi - slack

    def value_at(self, t):
        """Linear interpolation; raises outside the sampled span."""
        t = np.asarray(t, dtype=float)
        if len(self) == 0 or np.any(t < self.t_start - 1e-9) or np.any(t > self.t_end + 1e-9):
            raise DomainError(f"time outside waveform support [{self.t_start}, {self.t_end}]")
        # index arithmetic instead of np.interp: exact on grid points
        pos = (t - self.t_start) / self.dt
        i = np.clip(np.floor(pos + 1e-9).astype(int), 0, max(len(self) - 2, 0))
        frac = np.clip(pos - i, 0.0, 1.0)
        if len(self) == 1:
            return np.full_like(t, self.samples[0])
        out = self.samples[i] * (1.0 - frac) + self.samples[np.minimum(i + 1, len(self) - 1)] * frac
        exact = np.abs(frac) < 1e-12
        return np.where(exact, self.samples[i], out)

    @classmethod
    def from_arrays(cls, times, values, rtol=1e-6) -> "Waveform":
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(times) != len(values):
            raise DataError("time and value columns differ in length")
        if len(times) == 0:
            raise DataError("empty waveform")
        if len(times) == 1:
            return cls(times[0], 1.0, values)
        steps = np.diff(times)
        if np.any(steps <= 0):
            row = int(np.argmax(steps <= 0)) + 2
            raise DataError(f"time not strictly increasing at sample {row}")
        dt = (times[-1] - times[0]) / (len(times) - 1)
        dev = np.abs(times - (times[0] + dt * np.arange(len(times))))
        if np.max(dev) > rtol * dt + 1e-12:
            row = int(np.argmax(dev)) + 1
            raise DataError(f"non-uniform sampling near sample {row}")
        return cls(float(times[0]), float(dt), values)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table_csv(path, header, columns) -> None:
    """Write equal-length columns under ``header`` atomically."""
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_waveform_csv(path, wf: Waveform) -> None:
    write_table_csv(path, HEADER, [wf.times, wf.samples])


def read_waveform_csv(path) -> Waveform:
    path = Path(path)
    times, values = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and tuple(c.strip() for c in row) == HEADER:
                continue
            if len(row) != 2:
                raise DataError(f"{path.name}: row {lineno}: expected 2 columns, got {len(row)}")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    raise DataError(f"{path.name}: row 1: unrecognised header {row!r}") from None
                raise DataError(f"{path.name}: row {lineno}: cannot parse {row!r}") from None
            if not (math.isfinite(t) and math.isfinite(v)):
                raise DataError(f"{path.name}: row {lineno}: non-finite value")
            times.append(t)
            values.append(v)
    try:
        return Waveform.from_arrays(times, values)
    except DataError as exc:
        raise DataError(f"{path.name}: {exc}") from None


def sample_waveform(generator, t_start: float, dt: float, n_samples: int) -> Waveform:
    """Sample a vectorised signal ``generator(t)`` on a uniform grid."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    t = t_start + dt * np.arange(int(n_samples))
    values = np.asarray(generator(t), dtype=float) if n_samples else np.empty(0)
    return Waveform(float(t_start), float(dt), np.broadcast_to(values, t.shape).copy())
