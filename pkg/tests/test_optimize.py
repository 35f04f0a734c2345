import math

import numpy as np
import pytest

from fiesta import (
    BracketError,
    DriveConfig,
    NoiseModel,
    PulseEnvelope,
    RotationTarget,
    WindowError,
    apt_transition_amplitude,
    calibrate_amplitude,
    dynamical_phase,
    exact_transition_amplitude,
    find_optimal_edge_time,
    optimize_gate,
    propagator,
    pulse_gate_fidelity,
    sweep_edge_transitions,
    sweep_gate_fidelity,
)
from fiesta.optimize import edge_amplitude
from fiesta.propagation import frame_rotation

from conftest import OMEGA_PHYS, T1_NS

W = OMEGA_PHYS
PS = 1e-3  # ns
NOISE = NoiseModel.amplitude_damping(T1_NS)
PHYS = DriveConfig(W, W, 0.0)


def rotation_angle(cfg, p):
    U = frame_rotation(cfg.omega, p.t_total) @ propagator(cfg, p, 0.0, p.t_total)
    U = U / np.sqrt(np.linalg.det(U))
    return 2 * math.acos(min(1.0, abs(np.trace(U).real) / 2))


@pytest.fixture(scope="module")
def gates():
    out = {}
    for name, target in (("x", RotationTarget.rx(math.pi / 2)), ("y", RotationTarget.ry(math.pi / 2))):
        out[name] = optimize_gate(PHYS, target, NOISE)
        out[name + "_q"] = optimize_gate(PHYS, target, NOISE, constraints=(40 * PS, 80 * PS))
    return out


class TestEdgeTimes:
    def test_rise_zero_phase(self, resonant):
        assert abs(find_optimal_edge_time(resonant, 0.25, "rise") - 1.0) < 0.15

    def test_rise_quadrature_phase(self):
        cfg = DriveConfig(1, 1, -math.pi / 2)
        assert abs(find_optimal_edge_time(cfg, 0.25, "rise") - 2.6) < 0.15 * 2.6

    def test_weak_amplitude_dependence(self, resonant):
        t = [find_optimal_edge_time(resonant, a, "rise") for a in (0.25, 0.5, 1.0)]
        assert (max(t) - min(t)) / min(t) < 0.25

    def test_fall_zero_phase(self, resonant):
        assert abs(find_optimal_edge_time(resonant, 0.25, "fall", 0.0) - 1.0) < 0.15

    def test_no_minimum_in_window(self, resonant):
        with pytest.raises(WindowError):
            find_optimal_edge_time(resonant, 0.25, "rise", search_window=(0.2, 0.5), n_coarse=7)


class TestCalibration:
    def test_zero_target(self, resonant):
        assert calibrate_amplitude(resonant, 1, 5.3, 1, 0.0, 0.0) == 0.0

    def test_x_tuple(self, resonant):
        a = calibrate_amplitude(resonant, 1.0, 5.30, 1.0, 0.0, math.pi / 2)
        assert abs(a - 0.249) / 0.249 < 0.01
        theta = dynamical_phase(resonant, PulseEnvelope(a, 1.0, 5.30, 1.0))
        assert abs(theta - math.pi / 2) < 1e-6

    def test_y_tuple(self):
        cfg = DriveConfig(1, 1, -math.pi / 2)
        a = calibrate_amplitude(cfg, 2.6, 4.27, 1.0, -math.pi / 2, math.pi / 2)
        assert abs(a - 0.270) / 0.270 < 0.01

    def test_unreachable_target(self, resonant):
        with pytest.raises(BracketError):
            calibrate_amplitude(resonant, 1.0, 1.0, 1.0, 0.0, 50.0, bracket=(0.0, 0.5))


class TestEdgeSweep:
    def test_single_point_matches_direct(self, resonant):
        res = sweep_edge_transitions(resonant, [0.5], [1.3], "rise", method="both")
        p = PulseEnvelope(0.5, 1.3, 0, 0)
        assert abs(res.columns["apt"][0, 0] - abs(apt_transition_amplitude(resonant, p, "rise"))) < 1e-12
        assert abs(res.columns["exact"][0, 0] - abs(exact_transition_amplitude(resonant, p, "rise"))) < 1e-12
        assert res.shape == (1, 1) and res.values.size == 1

    def test_rise_valley(self, resonant):
        amps = np.array([0.05, 0.25, 0.5, 1.0])
        ts = np.linspace(0.2, 10, 50)
        res = sweep_edge_transitions(resonant, amps, ts, "rise")
        assert res.values.shape == (4, 50) and np.all(res.values >= 0)
        for row in res.values[1:]:
            i = next(i for i in range(1, 49) if row[i] < row[i - 1] and row[i] <= row[i + 1])
            assert 0.8 <= ts[i] <= 1.3

    def test_fall_map_periodic_in_phase(self, resonant):
        ts = np.linspace(0.3, 3.0, 10)
        phis = np.linspace(-math.pi, math.pi, 9)
        res = sweep_edge_transitions(resonant, [0.25], ts, "fall", phi_eff=np.concatenate([phis, phis + 2 * math.pi]))
        v = res.values[0]
        assert np.allclose(v[:, :9], v[:, 9:], atol=1e-9)
        assert np.argmin(v[:, 0]) == np.argmin(v[:, 8])

    def test_failures_recorded(self, resonant):
        res = sweep_edge_transitions(resonant, [0.5], [0.0, 1.0], "rise", method="apt")
        assert math.isnan(res.values[0, 0]) and res.status[0, 0] != "ok"
        assert res.status[0, 1] == "ok" and res.values[0, 1] >= 0

    def test_empty_grid(self, resonant):
        with pytest.raises(ValueError):
            sweep_edge_transitions(resonant, [], [1.0], "rise")

    def test_parallel_matches_serial(self, resonant):
        a = sweep_edge_transitions(resonant, [0.25, 0.5], [0.8, 1.6], "rise", method="apt")
        b = sweep_edge_transitions(resonant, [0.25, 0.5], [0.8, 1.6], "rise", method="apt", workers=2)
        assert np.array_equal(a.values, b.values)


class TestFidelitySweep:
    def test_single_point(self):
        p = PulseEnvelope(0.25 * W, 1 / W, 2.2 / W, 1 / W)
        res = sweep_gate_fidelity(PHYS, p, NOISE)
        theta = dynamical_phase(PHYS, p)
        assert abs(res.values.item() - pulse_gate_fidelity(PHYS, p, RotationTarget(0.0, theta), NOISE)) < 1e-12

    def test_oscillation_tracks_fall_minima(self):
        tp = np.arange(0, 63) * 0.1 / W
        base = PulseEnvelope(0.25 * W, 1 / W, 0.0, 1 / W)
        f = sweep_gate_fidelity(PHYS, base, NOISE, t_plateau=tp).values.reshape(-1)
        n = np.array([edge_amplitude(PHYS, 0.25 * W, 1 / W, "fall", W * (1 / W + t)) for t in tp])
        assert f.max() - f.min() > 1e-3
        peaks = [tp[i] * W for i in range(1, len(tp) - 1) if f[i] > f[i - 1] and f[i] >= f[i + 1]]
        dips = [tp[i] * W for i in range(1, len(tp) - 1) if n[i] < n[i - 1] and n[i] <= n[i + 1]]
        assert peaks
        for pk in peaks:
            assert min(abs(pk - d) for d in dips) <= 0.15

    def test_long_fall_suppresses_oscillation(self):
        tp = np.arange(0, 63, 3) * 0.1 / W
        short = sweep_gate_fidelity(PHYS, PulseEnvelope(0.25 * W, 1 / W, 0, 1 / W), NOISE, t_plateau=tp).values
        long = sweep_gate_fidelity(PHYS, PulseEnvelope(0.25 * W, 1 / W, 0, 5 / W), NOISE, t_plateau=tp).values
        assert np.ptp(long) < 0.1 * np.ptp(short)

    def test_long_fall_limited_by_relaxation(self):
        # residual infidelity comparable to the relaxation-only loss over the pulse
        p = PulseEnvelope(0.25 * W, 1 / W, 2.0 / W, 5 / W)
        target = RotationTarget(0.0, dynamical_phase(PHYS, p))
        noisy = pulse_gate_fidelity(PHYS, p, target, NOISE)
        closed = pulse_gate_fidelity(PHYS, p, target)
        assert (1 - closed) < (closed - noisy)

    def test_angle_sweep(self):
        base = PulseEnvelope(0.25 * W, 1 / W, 5.3 / W, 1 / W)
        res = sweep_gate_fidelity(PHYS, base, NOISE, thetas=[math.pi / 4, math.pi / 2])
        assert res.values.shape == (2,) and np.all(res.values > 0.99)
        assert np.all(res.status == "ok")

    def test_values_are_fidelities(self):
        res = sweep_gate_fidelity(PHYS, PulseEnvelope(0.25 * W, 1 / W, 0, 1 / W), NOISE,
                                  t_plateau=[1 / W, 2 / W], amplitudes=[0.1 * W, 0.5 * W])
        assert res.values.shape == (2, 2)
        assert np.all((res.values >= 0) & (res.values <= 1))

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            sweep_gate_fidelity(PHYS, PulseEnvelope(0.25 * W, 1 / W, 0, 1 / W), NOISE, t_plateau=[])


class TestOptimizeGate:
    def test_x_fidelity(self, gates):
        assert abs(gates["x"].gate_fidelity - 0.99983) < 1e-4

    def test_y_fidelity(self, gates):
        assert abs(gates["y"].gate_fidelity - 0.99986) < 1e-4

    def test_x_parameters(self, gates):
        p = gates["x"].pulse
        assert abs(p.t_rise * W - 1.0) < 0.25
        assert abs(p.t_fall * W - 1.0) < 0.25
        assert abs(p.t_plateau * W - 5.30) < 0.25 * 5.30
        assert abs(p.a_max / W - 0.249) / 0.249 < 0.05

    def test_y_parameters(self, gates):
        p = gates["y"].pulse
        assert abs(p.t_rise * W - 2.6) < 0.25 * 2.6
        assert abs(p.t_fall * W - 1.0) < 0.25
        assert abs(p.t_plateau * W - 4.27) < 0.25 * 4.27
        assert abs(p.a_max / W - 0.270) / 0.270 < 0.05

    def test_constrained_x(self, gates):
        g = gates["x_q"]
        assert abs(g.gate_fidelity - 0.99962) < 3e-4
        assert np.allclose([g.pulse.t_rise, g.pulse.t_fall, g.pulse.t_plateau], [0.08, 0.08, 0.36], atol=1e-12)
        assert abs(g.pulse.a_max / (2 * math.pi) - 0.5674) / 0.5674 < 0.01

    def test_constrained_y(self, gates):
        g = gates["y_q"]
        assert abs(g.gate_fidelity - 0.99972) < 3e-4
        assert np.allclose([g.pulse.t_rise, g.pulse.t_fall, g.pulse.t_plateau], [0.20, 0.08, 0.28], atol=1e-12)
        assert abs(g.pulse.a_max / (2 * math.pi) - 0.6223) / 0.6223 < 0.01

    def test_self_consistency(self, gates):
        for g in gates.values():
            cfg = PHYS.with_phase(g.phi)
            target = RotationTarget(g.phi, math.pi / 2)
            assert abs(pulse_gate_fidelity(cfg, g.pulse, target, NOISE) - g.gate_fidelity) < 1e-6

    def test_quantization_monotone(self, gates):
        for k in ("x", "y"):
            assert gates[k + "_q"].gate_fidelity <= gates[k].gate_fidelity + 1e-6
            q = gates[k + "_q"].pulse
            for t in (q.t_rise, q.t_plateau, q.t_fall):
                assert abs(t / 0.04 - round(t / 0.04)) < 1e-9
            assert min(q.t_rise, q.t_fall) >= 0.08 - 1e-12

    def test_angle_prediction(self, gates):
        for g in gates.values():
            assert abs(rotation_angle(PHYS.with_phase(g.phi), g.pulse) - g.predicted_theta) < 0.02

    def test_zero_angle(self):
        g = optimize_gate(PHYS, RotationTarget.rx(0.0))
        assert g.pulse.a_max == 0 and g.pulse.t_total == 0
        assert abs(g.gate_fidelity - 1) < 1e-12
