"""Exact Schrödinger and Lindblad propagation of the driven qubit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np
from scipy.integrate import solve_ivp

from .branches import get_branches
from .errors import InvalidInputError, NumericError
from .floquet import DriveConfig, SX, SZ, fold_quasienergy
from .pulse import PulseEnvelope

Edge = Literal["rise", "fall"]

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, 1 -> 0 decay


def as_state(psi, tol: float = 1e-8) -> np.ndarray:
    """Validate a normalized two-component state vector."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,) or not np.all(np.isfinite(psi)):
        raise InvalidInputError("state must be a finite 2-vector")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise InvalidInputError("state must be normalized")
    return psi


def as_density_matrix(rho, tol: float = 1e-8) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, positive."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2) or not np.all(np.isfinite(rho)):
        raise InvalidInputError("density matrix must be a finite 2x2 array")
    if np.linalg.norm(rho - rho.conj().T) > 1e-9:
        raise InvalidInputError("density matrix must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidInputError("density matrix must have unit trace")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise InvalidInputError("density matrix must be positive semidefinite")
    return rho


@dataclass(frozen=True)
class NoiseModel:
    """Lindblad channels as ``(operator, rate)`` pairs."""

    channels: tuple = field(default_factory=tuple)

    def __post_init__(self):
        chans = []
        for op, rate in self.channels:
            op = np.asarray(op, dtype=complex)
            if op.shape != (2, 2):
                raise InvalidInputError("Lindblad operators must be 2x2")
            if not math.isfinite(rate) or rate < 0:
                raise InvalidInputError("Lindblad rates must be finite and non-negative")
            chans.append((op, float(rate)))
        object.__setattr__(self, "channels", tuple(chans))

    @classmethod
    def amplitude_damping(cls, t1: float) -> NoiseModel:
        """Energy relaxation ``|1> -> |0>`` with lifetime ``t1``."""
        if not t1 > 0:
            raise InvalidInputError("T1 must be positive")
        return cls(((SIGMA_MINUS, 1.0 / t1),))


def amplitude_function(p: PulseEnvelope) -> Callable[[float], float]:
    """Fast scalar version of the envelope for integrator callbacks."""
    a, tr, t2, tf = p.a_max, p.t_rise, p.t_rise + p.t_plateau, p.t_fall
    tot = p.t_total

    def amp(t: float) -> float:
        if t < 0 or t > tot:
            return 0.0
        if t < tr:
            return 0.5 * a * (1 - math.cos(math.pi * t / tr))
        if t <= t2:
            return a
        return 0.5 * a * (1 + math.cos(math.pi * (t - t2) / tf))

    return amp


def _max_step(cfg: DriveConfig) -> float:
    return cfg.period / 40


def _integrate(rhs, y0, t0, t1, rtol, atol, max_step):
    if t1 == t0:
        return np.array(y0, dtype=complex)
    res = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol, max_step=max_step)
    if not res.success:
        t_fail = res.t[-1] if res.t.size else t0
        raise NumericError(f"integration failed at t={t_fail:.6g}: {res.message}")
    return res.y[:, -1]


def _hamiltonian_coeffs(cfg: DriveConfig, amp: Callable[[float], float]):
    half = 0.5 * cfg.delta
    om, phi = cfg.omega, cfg.phi

    def h(t):
        return amp(t) * math.cos(om * t + phi)

    return half, h


def propagate_schrodinger(
    cfg: DriveConfig,
    p: PulseEnvelope | Callable[[float], float],
    psi0,
    t0: float,
    t1: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> np.ndarray:
    """Integrate ``i d psi/dt = H(t) psi`` from ``t0`` to ``t1``.

    ``psi0`` may also be a ``(2, k)`` array of column states, which are
    propagated together.  The norm is not renormalized.  Integration backwards
    in time (``t1 < t0``) is allowed.

    Arguments:
        p: Pulse envelope, or any scalar function ``A(t)``.
    """
    amp = amplitude_function(p) if isinstance(p, PulseEnvelope) else p
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape[0] != 2:
        raise InvalidInputError("state must have two components")
    shape = psi0.shape
    half, h = _hamiltonian_coeffs(cfg, amp)

    def rhs(t, y):
        y = y.reshape(shape)
        hx = h(t)
        return (-1j * np.stack([-half * y[0] + hx * y[1], hx * y[0] + half * y[1]])).reshape(-1)

    out = _integrate(rhs, psi0.reshape(-1), t0, t1, rtol, atol, _max_step(cfg))
    return out.reshape(shape)


def propagator(cfg: DriveConfig, p, t0: float, t1: float, rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Time-evolution operator ``U(t1, t0)``."""
    return propagate_schrodinger(cfg, p, np.eye(2, dtype=complex), t0, t1, rtol, atol)


def monodromy(cfg: DriveConfig, amplitude: float, rtol: float = 1e-12, atol: float = 1e-13) -> np.ndarray:
    """One-period propagator ``U(T, 0)`` at constant amplitude."""
    if not math.isfinite(amplitude) or amplitude < 0:
        raise InvalidInputError("amplitude must be finite and non-negative")
    U = propagator(cfg, lambda t: amplitude, 0.0, cfg.period, rtol, atol)
    dev = np.linalg.norm(U.conj().T @ U - np.eye(2))
    if dev > 1e-9:
        raise NumericError(f"monodromy unitarity deviation {dev:.2e}")
    return U


def monodromy_quasienergies(cfg: DriveConfig, amplitude: float) -> np.ndarray:
    """Sorted quasienergies in ``[-omega, 0)`` from the monodromy eigenphases."""
    U = monodromy(cfg, amplitude)
    lam = np.linalg.eigvals(U)
    eps = -np.angle(lam) / cfg.period
    return np.sort([fold_quasienergy(float(e), cfg.omega)[0] for e in eps])


def _dissipator_terms(noise: NoiseModel):
    terms = []
    for L, k in noise.channels:
        if k > 0:
            LdL = L.conj().T @ L
            terms.append((L, L.conj().T, LdL, k))
    return terms


def propagate_lindblad(
    cfg: DriveConfig,
    p: PulseEnvelope | Callable[[float], float],
    rho0,
    noise: NoiseModel,
    t0: float,
    t1: float,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> np.ndarray:
    """Integrate the Lindblad master equation from ``t0`` to ``t1``.

    ``rho0`` may be a single density matrix or a stack of shape ``(k, 2, 2)``;
    a stack is integrated as one system.

    Raises:
        NumericError: if a trace drifts by more than 1e-6.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    stack = rho0.reshape(-1, 2, 2)
    for r in stack:
        as_density_matrix(r)
    amp = amplitude_function(p) if isinstance(p, PulseEnvelope) else p
    half, h = _hamiltonian_coeffs(cfg, amp)
    terms = _dissipator_terms(noise)
    H0 = -half * SZ
    shape = stack.shape

    def rhs(t, y):
        rho = y.reshape(shape)
        H = H0 + h(t) * SX
        d = -1j * (H @ rho - rho @ H)
        for L, Ld, LdL, k in terms:
            d += k * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
        return d.reshape(-1)

    out = _integrate(rhs, stack.reshape(-1), t0, t1, rtol, atol, _max_step(cfg)).reshape(shape)
    drift = np.max(np.abs(np.trace(out, axis1=1, axis2=2) - 1.0))
    if drift > 1e-6:
        raise NumericError(f"trace drift {drift:.2e} exceeds 1e-6")
    out = 0.5 * (out + np.conj(np.swapaxes(out, 1, 2)))
    return out.reshape(rho0.shape)


def frame_rotation(omega: float, t: float) -> np.ndarray:
    """``R(t) = exp(-i omega t sz / 2)``; rotating-frame states are ``R(t) psi``."""
    return np.diag([np.exp(-0.5j * omega * t), np.exp(0.5j * omega * t)])


def to_rotating_frame(obj, omega: float, t: float) -> np.ndarray:
    """Map a lab-frame state vector or density matrix into the rotating frame."""
    R = frame_rotation(omega, t)
    obj = np.asarray(obj, dtype=complex)
    if obj.shape == (2,):
        return R @ obj
    return R @ obj @ R.conj().T


def rotating_frame_hamiltonian(cfg: DriveConfig, amplitude: float, t: float) -> np.ndarray:
    """``R H R^dag + i (dR/dt) R^dag`` at time ``t``."""
    H = -0.5 * cfg.delta * SZ + amplitude * math.cos(cfg.omega * t + cfg.phi) * SX
    R = frame_rotation(cfg.omega, t)
    return R @ H @ R.conj().T + 0.5 * cfg.omega * SZ


def exact_transition_amplitude(cfg: DriveConfig, p: PulseEnvelope, edge: Edge, N: int = 50) -> complex:
    """``c~_1`` at the end of a single edge from exact propagation.

    The rise starts in the ``A -> 0+`` lower mode at ``t = 0``; the fall starts
    in the lower mode at the plateau amplitude with the drive phase the carrier
    has at the start of the fall.  The returned amplitude is taken with respect
    to the Floquet modes at the end of the edge, with dynamical phases stripped.
    """
    duration, cfg_e = edge_setup(cfg, p, edge)
    if duration <= 0:
        raise InvalidInputError(f"{edge} edge has zero duration")
    if p.a_max == 0:
        return 0j
    br = get_branches(cfg, p.a_max, N)
    a_start, a_end = (0.0, p.a_max) if edge == "rise" else (p.a_max, 0.0)
    u0 = br.solution(a_start, cfg_e.phi)
    psi0 = u0.mode(0, 0.0)
    amp = edge_profile(p, edge)
    psi = propagate_schrodinger(cfg_e, amp, psi0, 0.0, duration)
    end = br.solution(a_end, cfg_e.phi)
    # c~_1 = exp(i int eps_1) <u_1|psi>; only its modulus and relative phase are used
    return complex(np.exp(1j * edge_phase(br, p, edge, 1)) * np.vdot(end.mode(1, duration), psi))


def edge_setup(cfg: DriveConfig, p: PulseEnvelope, edge: Edge) -> tuple[float, DriveConfig]:
    """Duration of an edge and the drive config seen from the edge's own clock."""
    if edge == "rise":
        return p.t_rise, cfg
    if edge == "fall":
        return p.t_fall, cfg.with_phase(cfg.phi + cfg.omega * p.fall_start)
    raise InvalidInputError(f"unknown edge {edge!r}")


def edge_profile(p: PulseEnvelope, edge: Edge) -> Callable[[float], float]:
    """Envelope of one edge as a function of time from the edge start."""
    if edge == "rise":
        return amplitude_function(replace(p, t_plateau=0.0, t_fall=0.0))
    fall = amplitude_function(replace(p, t_rise=0.0, t_plateau=0.0))
    return fall


def edge_phase(br, p: PulseEnvelope, edge: Edge, j: int) -> float:
    """``int eps_j dt`` over one edge, from the spline table (Gauss-Legendre)."""
    duration, _ = edge_setup(br.cfg, p, edge)
    x, w = np.polynomial.legendre.leggauss(64)
    t = 0.5 * duration * (x + 1)
    amp = edge_profile(p, edge)
    a = np.array([amp(ti) for ti in t])
    eps = br.quasienergies_interp(a)[:, j]
    return float(0.5 * duration * w @ eps)
