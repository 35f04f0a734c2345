"""Cosine-ramp pulse envelope with a flat top."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .floquet import DriveConfig


@dataclass(frozen=True)
class PulseEnvelope:
    """Rise / plateau / fall envelope with peak amplitude ``a_max``.

    The rise is ``a_max (1 - cos(pi t / t_rise)) / 2``, the fall mirrors it.
    """

    a_max: float
    t_rise: float
    t_plateau: float
    t_fall: float

    def __post_init__(self):
        vals = (self.a_max, self.t_rise, self.t_plateau, self.t_fall)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidInputError("pulse parameters must be finite")
        if self.a_max < 0 or min(self.t_rise, self.t_plateau, self.t_fall) < 0:
            raise InvalidInputError("pulse amplitude and durations must be non-negative")

    @property
    def t_total(self) -> float:
        return self.t_rise + self.t_plateau + self.t_fall

    @property
    def fall_start(self) -> float:
        return self.t_rise + self.t_plateau

    def rise_only(self) -> PulseEnvelope:
        return replace(self, t_plateau=0.0, t_fall=0.0)

    def fall_only(self) -> PulseEnvelope:
        return replace(self, t_rise=0.0, t_plateau=0.0)


def envelope(p: PulseEnvelope, t):
    """Envelope value ``A(t)``; zero outside ``[0, t_total]``.

    Accepts scalars or arrays.  Use :func:`envelope_checked` to also get the
    out-of-range flag.
    """
    t = np.asarray(t, dtype=float)
    tr, t2, tot = p.t_rise, p.t_rise + p.t_plateau, p.t_total
    with np.errstate(divide="ignore", invalid="ignore"):
        rise = 0.5 * p.a_max * (1 - np.cos(np.pi * t / tr))
        fall = 0.5 * p.a_max * (1 + np.cos(np.pi * (t - t2) / p.t_fall))
    out = np.select(
        [(t < 0) | (t > tot) | (tot == 0), t < tr, t <= t2],
        [0.0, rise, p.a_max],
        default=fall,
    )
    return out if out.ndim else float(out)


def envelope_checked(p: PulseEnvelope, t: float) -> tuple[float, bool]:
    """Return ``(A(t), in_range)``."""
    inside = 0.0 <= t <= p.t_total
    return (float(envelope(p, t)) if inside else 0.0), inside


def envelope_derivative(p: PulseEnvelope, t):
    """Exact ``dA/dt`` of the envelope.

    Raises:
        InvalidInputError: when ``t`` lies on a zero-length edge, where the
            derivative only exists as a distribution.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    tr, tp, tf = p.t_rise, p.t_plateau, p.t_fall
    t2 = tr + tp
    if (tr == 0 and np.any(t == 0)) or (tf == 0 and np.any(t == t2) and p.a_max > 0):
        raise InvalidInputError("sudden edge: derivative is distributional")
    if tr > 0:
        m = (t >= 0) & (t <= tr)
        out[m] = 0.5 * np.pi * p.a_max / tr * np.sin(np.pi * t[m] / tr)
    if tf > 0:
        m = (t > t2) & (t <= t2 + tf)
        out[m] = -0.5 * np.pi * p.a_max / tf * np.sin(np.pi * (t[m] - t2) / tf)
    return out if out.ndim else float(out)


def drive_field(cfg: DriveConfig, p: PulseEnvelope, t):
    """Coefficient of ``sx`` in the drive term: ``A(t) cos(omega t + phi)``."""
    return envelope(p, t) * np.cos(cfg.omega * np.asarray(t, dtype=float) + cfg.phi)


def _round_half_up(x: float, step: float) -> float:
    q = x / step
    # ties round up; the epsilon absorbs binary representation noise
    return math.floor(q + 0.5 + 1e-9) * step


def quantize(p: PulseEnvelope, resolution: float, min_edge: float = 0.0) -> PulseEnvelope:
    """Round edge and plateau durations to a hardware time grid.

    Each duration is rounded to the nearest multiple of ``resolution`` (ties
    round up); rise and fall times are then raised to at least ``min_edge``.
    """
    if resolution <= 0:
        raise InvalidInputError("resolution must be positive")
    tr = max(_round_half_up(p.t_rise, resolution), min_edge)
    tf = max(_round_half_up(p.t_fall, resolution), min_edge)
    tp = _round_half_up(p.t_plateau, resolution)
    return replace(p, t_rise=tr, t_plateau=tp, t_fall=tf)
