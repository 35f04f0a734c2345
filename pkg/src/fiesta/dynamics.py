"""Dynamics in the instantaneous Floquet basis and first-order adiabatic perturbation theory."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .branches import get_branches
from .errors import ConvergenceWarning, IllConditionedWarning, InvalidInputError, NumericError
from .floquet import DEFAULT_TRUNCATION, SX, SY, DriveConfig, FloquetSolution, shift_copy, track_branches
from .propagation import Edge, amplitude_function, as_state, edge_setup
from .pulse import PulseEnvelope


@dataclass(frozen=True)
class FloquetAmplitudes:
    """Coefficients of a state in the instantaneous Floquet basis.

    Attributes:
        c_tilde: ``(c~_0, c~_1)`` with the dynamical phases stripped.
        phase_integrals: ``(int eps_0 dt, int eps_1 dt)`` used for stripping.
        t: Time at which the decomposition was made.
    """

    c_tilde: np.ndarray
    phase_integrals: tuple[float, float]
    t: float

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.c_tilde) ** 2


def decompose_state(state, sol: FloquetSolution, t: float, phase_integrals=(0.0, 0.0)) -> FloquetAmplitudes:
    """Expand ``state`` on the Floquet modes of ``sol`` evaluated at time ``t``.

    ``c~_j = exp(i phase_integrals[j]) <u_j(t)|state>``.
    """
    psi = as_state(state)
    modes = sol.modes(t)
    ph = np.asarray(phase_integrals, dtype=float)
    c_tilde = np.exp(1j * ph) * (modes.conj().T @ psi)
    return FloquetAmplitudes(c_tilde=c_tilde, phase_integrals=(float(ph[0]), float(ph[1])), t=float(t))


def _quad(f, a, b, rtol):
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, epsrel=rtol, epsabs=1e-14, limit=200)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"phase quadrature did not converge: {exc}") from exc
    return val


def dynamical_phase(
    cfg: DriveConfig,
    p: PulseEnvelope,
    t: float | None = None,
    rtol: float = 1e-9,
    N: int = DEFAULT_TRUNCATION,
) -> float:
    """Rotation angle ``int_0^t (eps_1 - eps_0) dt'`` along the pulse.

    The quasienergy difference is the exact one, on branches followed from
    ``A -> 0+``.  ``t`` defaults to the end of the pulse.
    """
    t = p.t_total if t is None else float(t)
    if p.a_max == 0 or t <= 0:
        return 0.0
    t = min(t, p.t_total)
    br = get_branches(cfg, p.a_max, N)
    amp = amplitude_function(p)

    def gap(s):
        return br.gap(min(amp(s), br.a_max))

    tr, t2 = p.t_rise, p.fall_start
    total = _quad(gap, 0.0, min(t, tr), rtol)
    if t > tr:
        total += br.gap(p.a_max) * (min(t, t2) - tr)
    if t > t2:
        total += _quad(gap, t2, t, rtol)
    return float(total)


def derivative_coupling(
    cfg: DriveConfig,
    amplitude: float,
    dA: float | None = None,
    N: int = DEFAULT_TRUNCATION,
    m_window: int = 20,
) -> np.ndarray:
    """Finite-difference couplings ``D[k, j, m] = <<u_k^{(m)}|d_A u_j>>``.

    ``u_k^{(m)}`` is the Fourier copy with coefficients ``u_{k, n+m}``; the
    result depends only on the index difference, so ``m`` runs over
    ``-m_window..m_window`` (stored at ``m + m_window``).  Modes at
    ``A +- dA/2`` are aligned to those at ``A`` (parallel transport).
    """
    dA = 1e-4 * cfg.omega if dA is None else dA
    if dA <= 0 or amplitude - dA / 2 < 0:
        raise InvalidInputError("need dA > 0 and amplitude >= dA/2")
    br = get_branches(cfg, amplitude + dA, N)
    mid = br.solution(amplitude)
    gap = abs(mid.gap) % cfg.omega
    if min(gap, cfg.omega - gap) < 100 * dA:
        warnings.warn(
            f"quasienergies nearly degenerate at A={amplitude:.6g}; gauge alignment may fail",
            IllConditionedWarning,
            stacklevel=2,
        )
    lo = track_branches(mid, br.solution(amplitude - dA / 2))
    hi = track_branches(mid, br.solution(amplitude + dA / 2))
    du = (hi.fourier_coeffs - lo.fourier_coeffs) / dA
    ms = np.arange(-m_window, m_window + 1)
    D = np.empty((2, 2, ms.size), dtype=complex)
    for k in range(2):
        for i, m in enumerate(ms):
            uk = shift_copy(mid.fourier_coeffs[k], int(m))
            for j in range(2):
                D[k, j, i] = np.vdot(uk, du[j])
    return D


def _edge_grid(cfg: DriveConfig, p: PulseEnvelope, edge: Edge, n_steps: int):
    duration, cfg_e = edge_setup(cfg, p, edge)
    tau = np.linspace(0.0, duration, n_steps + 1)
    x = math.pi * tau / duration
    if edge == "rise":
        a = 0.5 * p.a_max * (1 - np.cos(x))
        adot = 0.5 * math.pi * p.a_max / duration * np.sin(x)
    else:
        a = 0.5 * p.a_max * (1 + np.cos(x))
        adot = -0.5 * math.pi * p.a_max / duration * np.sin(x)
    return cfg_e, tau, a, adot


def _trapz_cumulative(y, dx):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1])) * dx
    return out


def _apt_on_grid(br, cfg_e, tau, a, adot, n_window):
    eps = br.quasienergies_interp(a)
    dt = tau[1] - tau[0]
    Phi = _trapz_cumulative(eps[:, 0] - eps[:, 1], dt)
    C = br.couplings_interp(a, cfg_e.phi)
    ms = br.m_values
    keep = np.abs(ms) <= n_window
    phase = np.exp(-1j * (Phi[:, None] + ms[None, keep] * cfg_e.omega * tau[:, None]))
    f = adot * np.sum(phase * C[:, keep], axis=1)
    return complex(np.sum(0.5 * (f[1:] + f[:-1])) * dt)


def apt_transition_amplitude(
    cfg: DriveConfig,
    p: PulseEnvelope,
    edge: Edge,
    n_window: int = 20,
    n_steps: int = 2000,
    tol: float = 1e-6,
    N: int = DEFAULT_TRUNCATION,
) -> complex:
    """First-order nonadiabatic amplitude ``N_{0->1}`` accumulated over one edge.

    ``N = int dA/dt sum_m exp(-i[int (eps_0 - eps_1) dt' + m omega t]) C_m dt``
    with ``C_m = <<u_1^{(m)}|d_A u_0>>`` in the parallel-transport gauge.  The
    trapezoid grid is refined until successive results agree within ``tol``.
    """
    duration, _ = edge_setup(cfg, p, edge)
    if duration <= 0:
        raise InvalidInputError(f"{edge} edge has zero duration; APT needs a finite ramp")
    if n_window < 1:
        raise InvalidInputError("n_window must be >= 1")
    if p.a_max == 0:
        return 0j
    br = get_branches(cfg, p.a_max, N, m_window=max(40, 2 * n_window))

    n = max(n_steps, 2000)
    prev = _apt_on_grid(br, *_edge_grid(cfg, p, edge, n), n_window)
    for _ in range(8):
        n *= 2
        cur = _apt_on_grid(br, *_edge_grid(cfg, p, edge, n), n_window)
        if abs(cur - prev) < tol:
            break
        prev = cur
    else:
        warnings.warn("APT quadrature did not reach tolerance", ConvergenceWarning, stacklevel=2)

    wide = _apt_on_grid(br, *_edge_grid(cfg, p, edge, n), 2 * n_window)
    if abs(wide - cur) > 1e-6:
        warnings.warn(
            f"Fourier window {n_window} not converged (change {abs(wide - cur):.2e})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return cur


def rotation(theta: float, phi: float) -> np.ndarray:
    """Rotating-frame rotation produced by a drive with phase ``phi``.

    ``exp(-i theta/2 (cos(phi) sx - sin(phi) sy))``: in the frame
    ``exp(-i omega t sz / 2)`` the co-rotating part of ``cos(omega t + phi) sx``
    is ``(cos(phi) sx - sin(phi) sy) / 2``, so the drive phase ``-pi/2`` gives
    a rotation about ``+y``.
    """
    n = math.cos(phi) * SX - math.sin(phi) * SY
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * n


def adiabatic_final_state(cfg: DriveConfig, p: PulseEnvelope, state0) -> np.ndarray:
    """Rotating-frame state after a perfectly adiabatic pulse.

    The state is rotated by the dynamical phase about the equatorial axis
    selected by the drive phase (see :func:`rotation`).
    """
    psi = as_state(state0)
    return rotation(dynamical_phase(cfg, p), cfg.phi) @ psi
