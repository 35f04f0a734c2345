"""Floquet branches tracked continuously in the drive amplitude.

The table is built at drive phase zero, where the Floquet matrix is real, and
anchored at a tiny positive amplitude so that labels follow the ``A -> 0+``
path.  Other drive phases are obtained by shifting the time origin.
"""

from __future__ import annotations

import functools
import math
from dataclasses import replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidInputError
from .floquet import (
    DEFAULT_TRUNCATION,
    SX,
    DriveConfig,
    FloquetSolution,
    apply_drive_phase,
    build_floquet_matrix,
    diagonalize_floquet,
    shift_copy,
    track_branches,
)

A_MIN_OVER_OMEGA = 1e-7
GRID_STEP_OVER_OMEGA = 0.01


def _solve_real(cfg: DriveConfig, amplitude: float, N: int) -> FloquetSolution:
    H = build_floquet_matrix(cfg, amplitude, N, "rotated")
    return diagonalize_floquet(H, cfg.omega, N, "rotated", amplitude=amplitude, phi=0.0)


def perturbation_vector(coeffs: np.ndarray) -> np.ndarray:
    """Fourier coefficients of ``(dH/dA) u`` at drive phase zero.

    ``dH/dA = cos(omega t) sx`` couples neighbouring Fourier components.
    """
    out = np.zeros_like(coeffs)
    out[1:] += coeffs[:-1]
    out[:-1] += coeffs[1:]
    return 0.5 * out @ SX.T


def hellmann_feynman_couplings(sol: FloquetSolution, m_values: np.ndarray) -> np.ndarray:
    """``<<u_1^{(m)}|d_A u_0>>`` for each ``m`` via the Hellmann-Feynman identity.

    Only valid for a solution at drive phase zero.
    """
    u0, u1 = sol.fourier_coeffs
    v = perturbation_vector(u0)
    e0, e1 = sol.quasienergies
    out = np.empty(len(m_values), dtype=complex)
    for i, m in enumerate(m_values):
        out[i] = np.vdot(shift_copy(u1, int(m)), v) / (e0 - e1 + m * sol.omega)
    return out


class FloquetBranches:
    """Exact Floquet solutions for amplitudes in ``[0, a_max]`` with stable labels.

    Arguments:
        cfg: Drive configuration; its phase is applied on output.
        a_max: Largest amplitude that will be requested.
        N: Fourier truncation.
        m_window: Largest ``|m|`` kept in the coupling splines.
    """

    def __init__(self, cfg: DriveConfig, a_max: float, N: int = DEFAULT_TRUNCATION, m_window: int = 20):
        if not math.isfinite(a_max) or a_max < 0:
            raise InvalidInputError("a_max must be finite and non-negative")
        self.cfg = cfg
        self.base = replace(cfg, phi=0.0)
        self.N = N
        self.m_window = m_window
        om = cfg.omega
        self.a_min = A_MIN_OVER_OMEGA * om
        n_pts = max(4, math.ceil(a_max / (GRID_STEP_OVER_OMEGA * om)) + 1)
        grid = np.linspace(0.0, max(a_max, 4 * GRID_STEP_OVER_OMEGA * om), n_pts)
        grid[0] = self.a_min
        self.grid = grid

        sols = [_solve_real(self.base, grid[0], N)]
        for a in grid[1:]:
            sols.append(track_branches(sols[-1], _solve_real(self.base, a, N)))
        self._sols = sols
        self._eps = np.array([s.quasienergies for s in sols])
        self._eps_spline = CubicSpline(grid, self._eps, axis=0)
        self.m_values = np.arange(-m_window, m_window + 1)
        self._coup = None

    @property
    def a_max(self) -> float:
        return float(self.grid[-1])

    def _check(self, a):
        a = np.asarray(a, dtype=float)
        if np.any(a < 0) or np.any(a > self.grid[-1] * (1 + 1e-12)):
            raise InvalidInputError(f"amplitude outside branch table [0, {self.grid[-1]:.6g}]")
        return np.clip(a, self.a_min, self.grid[-1])

    def solution(self, amplitude: float, phi: float | None = None) -> FloquetSolution:
        """Exact solution at ``amplitude``, labelled and phased like the table.

        Amplitudes below the table anchor return the ``A -> 0+`` limit.
        """
        a = float(self._check(amplitude))
        sol = self._solve_tracked(a)
        return apply_drive_phase(sol, self.cfg.phi if phi is None else phi, regauge=False)

    @functools.lru_cache(maxsize=512)
    def _solve_tracked(self, a: float) -> FloquetSolution:
        i = int(np.argmin(np.abs(self.grid - a)))
        if self.grid[i] == a:
            return self._sols[i]
        return track_branches(self._sols[i], _solve_real(self.base, a, self.N))

    def gap(self, amplitude: float) -> float:
        """Exact quasienergy difference ``eps1 - eps0`` on the tracked branches."""
        return self.solution(amplitude).gap

    def quasienergies_interp(self, amplitude) -> np.ndarray:
        """Spline interpolation of the tracked quasienergies, shape ``(..., 2)``."""
        return self._eps_spline(self._check(amplitude))

    def gap_interp(self, amplitude) -> np.ndarray:
        e = self.quasienergies_interp(amplitude)
        return e[..., 1] - e[..., 0]

    def couplings_interp(self, amplitude, phi: float | None = None) -> np.ndarray:
        """Interpolated ``C_m(A) = <<u_1^{(m)}|d_A u_0>>``, shape ``(..., 2 m_window + 1)``."""
        if self._coup is None:
            table = np.array([hellmann_feynman_couplings(s, self.m_values) for s in self._sols])
            # couplings are real at phase zero up to rounding
            self._coup = CubicSpline(self.grid, table.real, axis=0)
        phi = self.cfg.phi if phi is None else phi
        return self._coup(self._check(amplitude)) * np.exp(-1j * self.m_values * phi)


@functools.lru_cache(maxsize=32)
def _cached(cfg: DriveConfig, a_max: float, N: int, m_window: int) -> FloquetBranches:
    return FloquetBranches(cfg, a_max, N, m_window)


def get_branches(cfg: DriveConfig, a_max: float, N: int = DEFAULT_TRUNCATION, m_window: int = 40) -> FloquetBranches:
    """Shared branch table; tables are reused across drive phases.

    The requested range is rounded up so that nearby requests share a table.
    """
    step = 0.25 * cfg.omega
    top = step * math.ceil(max(a_max, 1e-12) / step)
    return _cached(replace(cfg, phi=0.0), top, N, m_window)
