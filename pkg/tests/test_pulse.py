import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fiesta import DriveConfig, InvalidInputError, PulseEnvelope, drive_field, envelope, envelope_derivative, quantize
from fiesta.pulse import envelope_checked

P = PulseEnvelope(0.3, 1.2, 2.5, 0.8)
pulses = st.builds(
    PulseEnvelope,
    st.floats(0.01, 2.0),
    st.floats(0.1, 5.0),
    st.floats(0.0, 5.0),
    st.floats(0.1, 5.0),
)


def test_envelope_landmarks():
    assert envelope(P, 0.0) == 0.0
    assert abs(envelope(P, P.t_rise / 2) - P.a_max / 2) < 1e-15
    assert abs(envelope(P, P.fall_start + P.t_fall / 2) - P.a_max / 2) < 1e-15
    assert envelope(P, P.t_rise) == P.a_max
    assert envelope(P, P.fall_start) == P.a_max
    assert abs(envelope(P, P.t_total)) < 1e-15


def test_out_of_range_flag():
    assert envelope_checked(P, -0.1) == (0.0, False)
    assert envelope_checked(P, P.t_total + 1e-9) == (0.0, False)
    val, ok = envelope_checked(P, 1.0)
    assert ok and val > 0


def test_derivative_examples():
    assert envelope_derivative(P, 0.0) == 0.0
    assert envelope_derivative(P, P.t_rise + 1.0) == 0.0
    mid = P.fall_start + P.t_fall / 2
    assert abs(envelope_derivative(P, mid) + math.pi * P.a_max / (2 * P.t_fall)) < 1e-14


def test_derivative_matches_arccos_form():
    # dA/dt on the fall written through A itself
    t = P.fall_start + np.linspace(0.05, 0.95, 7) * P.t_fall
    a = envelope(P, t)
    alt = -math.pi * P.a_max / (2 * P.t_fall) * np.sin(np.arccos(2 * a / P.a_max - 1))
    assert np.allclose(envelope_derivative(P, t), alt, atol=1e-12)


@given(pulses, st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_derivative_finite_difference(p, frac):
    t = frac * p.t_total
    h = 1e-6
    if min(abs(t - b) for b in (0, p.t_rise, p.fall_start, p.t_total)) < 2 * h:
        return
    fd = (envelope(p, t + h) - envelope(p, t - h)) / (2 * h)
    scale = p.a_max * math.pi / (2 * min(p.t_rise, p.t_fall))
    assert abs(fd - envelope_derivative(p, t)) <= 1e-6 * scale


@given(pulses)
@settings(max_examples=30, deadline=None)
def test_total_variation(p):
    pts = [p.t_rise, p.fall_start]
    var, _ = quad(lambda t: abs(envelope_derivative(p, t)), 0, p.t_total, points=pts, limit=200, epsabs=1e-13)
    assert abs(var - 2 * p.a_max) < 1e-9 * max(1, p.a_max)


@given(st.floats(0.01, 2.0), st.floats(0.1, 5.0), st.floats(0.0, 5.0), st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_symmetry(a, tr, tp, frac):
    p = PulseEnvelope(a, tr, tp, tr)
    t = frac * p.t_total
    assert abs(envelope(p, t) - envelope(p, p.t_total - t)) < 1e-12


def test_drive_field():
    cfg = DriveConfig(1, 1, 0.0)
    p = PulseEnvelope(0.4, 1.0, 20.0, 1.0)
    t = 2 * math.pi * 2
    assert drive_field(cfg, p, 0.0) == 0.0
    assert abs(drive_field(cfg, p, t) - 0.4) < 1e-15
    assert abs(drive_field(DriveConfig(1, 1, math.pi / 2), p, t)) < 1e-15


def test_quantize_examples():
    p = PulseEnvelope(1.0, 0.0695, 0.361, 0.09)
    q = quantize(p, 0.040, 0.080)
    assert abs(q.t_rise - 0.080) < 1e-15
    assert abs(q.t_plateau - 0.360) < 1e-15
    assert abs(q.t_fall - 0.080) < 1e-15
    assert q.a_max == p.a_max
    exact = PulseEnvelope(1.0, 0.12, 0.4, 0.16)
    q2 = quantize(exact, 0.04, 0.08)
    assert np.allclose([q2.t_rise, q2.t_plateau, q2.t_fall], [0.12, 0.4, 0.16], rtol=0, atol=1e-15)


def test_quantize_ties_round_up():
    q = quantize(PulseEnvelope(1.0, 0.1, 0.02, 0.1), 0.04, 0.0)
    assert abs(q.t_plateau - 0.04) < 1e-15
    assert abs(q.t_rise - 0.12) < 1e-15


@given(pulses, st.floats(0.01, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_quantize_properties(p, res, min_edge):
    q = quantize(p, res, min_edge)
    for t in (q.t_plateau,):
        assert abs(t / res - round(t / res)) < 1e-9
    assert q.t_rise >= min_edge and q.t_fall >= min_edge
    assert abs(q.t_plateau - p.t_plateau) <= res / 2 + 1e-12


def test_quantize_rejects_resolution():
    with pytest.raises(InvalidInputError):
        quantize(P, 0.0, 0.1)


def test_invalid_pulse():
    with pytest.raises(InvalidInputError):
        PulseEnvelope(-1.0, 1, 1, 1)
    with pytest.raises(InvalidInputError):
        PulseEnvelope(1.0, math.nan, 1, 1)


def test_sudden_edge_derivative_rejected():
    with pytest.raises(InvalidInputError):
        envelope_derivative(PulseEnvelope(1.0, 0.0, 1.0, 1.0), 0.0)


def test_zero_plateau_allowed():
    p = PulseEnvelope(0.5, 1.0, 0.0, 1.0)
    assert envelope(p, 1.0) == 0.5
