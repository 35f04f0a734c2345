"""Floquet eigenproblem of a harmonically driven qubit.

The drive Hamiltonian is ``H = -(delta/2) sz + A cos(omega t + phi) sx`` with
hbar = 1 and ``sz|0> = |0>``.  A Floquet mode is stored through its Fourier
coefficients ``u_{j,n}`` so that ``u_j(t) = sum_n exp(i n omega t) u_{j,n}``,
always expressed in the ``{|0>, |1>}`` basis of that Hamiltonian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy import special

from .errors import InvalidInputError, NumericError, StepTooLargeError

Basis = Literal["rotated", "plus_minus"]

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)

# Maps a vector written in the basis of -(delta/2) sx - A cos(omega t) sz
# back to the sz basis (inverse of a pi/2 rotation about y).
_ROTATED_TO_ORIGINAL = np.array([[1, 1], [-1, 1]], dtype=complex) / math.sqrt(2)
# |+> -> |0>, |-> -> -|1>
_PLUS_MINUS_TO_ORIGINAL = np.array([[1, 0], [0, -1]], dtype=complex)

DEFAULT_TRUNCATION = 50
_RESIDUAL_TOL = 1e-10
_DEGENERACY_TOL = 1e-9


def _wrap_phase(phi: float) -> float:
    """Map an angle to (-pi, pi]."""
    w = math.remainder(phi, 2 * math.pi)
    return w + 2 * math.pi if w <= -math.pi else w


@dataclass(frozen=True)
class DriveConfig:
    """Qubit splitting, drive frequency and drive phase (all angular)."""

    delta: float
    omega: float
    phi: float = 0.0

    def __post_init__(self):
        for name in ("delta", "omega", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")
        if self.delta <= 0 or self.omega <= 0:
            raise InvalidInputError("delta and omega must be positive")
        object.__setattr__(self, "phi", _wrap_phase(float(self.phi)))

    @property
    def detuning(self) -> float:
        """Qubit splitting minus drive frequency."""
        return self.delta - self.omega

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def with_phase(self, phi: float) -> DriveConfig:
        return replace(self, phi=phi)


@dataclass(frozen=True)
class FloquetSolution:
    """Two inequivalent Floquet modes at a fixed drive amplitude.

    Attributes:
        amplitude: Drive amplitude ``A``.
        omega: Drive angular frequency.
        quasienergies: ``(eps0, eps1)``.
        fourier_coeffs: Complex array of shape ``(2, 2N+1, 2)`` indexed by
            mode, Fourier index ``n + N`` and qubit component.
        truncation: ``N``.
        gauge_anchor: Human-readable description of the phase convention.
        phi: Drive phase the modes belong to.
        degenerate: True when the two quasienergies coincide modulo omega.
    """

    amplitude: float
    omega: float
    quasienergies: np.ndarray
    fourier_coeffs: np.ndarray
    truncation: int
    gauge_anchor: str = "largest component real positive"
    phi: float = 0.0
    degenerate: bool = False

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(-self.truncation, self.truncation + 1)

    @property
    def gap(self) -> float:
        """Quasienergy difference ``eps1 - eps0``."""
        return float(self.quasienergies[1] - self.quasienergies[0])

    def mode(self, j: int, t: float) -> np.ndarray:
        """Return ``u_j(t)`` as a two-component vector."""
        phases = np.exp(1j * self.n_values * self.omega * t)
        return phases @ self.fourier_coeffs[j]

    def floquet_state(self, j: int, t: float) -> np.ndarray:
        """Return ``exp(-i eps_j t) u_j(t)``."""
        return np.exp(-1j * self.quasienergies[j] * t) * self.mode(j, t)

    def modes(self, t: float) -> np.ndarray:
        """Return a 2x2 matrix whose columns are ``u_0(t)`` and ``u_1(t)``."""
        phases = np.exp(1j * self.n_values * self.omega * t)
        return np.stack([phases @ self.fourier_coeffs[0], phases @ self.fourier_coeffs[1]], axis=1)


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind ``J_n(x)`` for integer order."""
    if not math.isfinite(x):
        raise InvalidInputError("bessel_j requires a finite argument")
    if int(n) != n:
        raise InvalidInputError("bessel_j requires an integer order")
    return float(special.jv(int(n), x))


def build_floquet_matrix(
    cfg: DriveConfig, amplitude: float, N: int = DEFAULT_TRUNCATION, basis: Basis = "rotated"
) -> np.ndarray:
    """Truncated Floquet Hamiltonian of dimension ``2(2N+1)``.

    Arguments:
        cfg: Drive configuration.
        amplitude: Drive amplitude ``A``.
        N: Fourier truncation; blocks run over ``n = -N..N``.
        basis: ``"rotated"`` uses the form ``-(delta/2) sx - A cos(omega t + phi) sz``
            with components ordered ``(u_{n,0}, u_{n,1})``; ``"plus_minus"`` uses the
            ``|+>, |->`` eigenbasis of ``sx`` of that same form.

    Returns:
        Hermitian matrix; real when ``phi == 0``.
    """
    if N < 1:
        raise InvalidInputError("invalid truncation: N must be >= 1")
    if amplitude < 0 or not math.isfinite(amplitude):
        raise InvalidInputError("amplitude must be finite and non-negative")
    if basis == "rotated":
        static = -0.5 * cfg.delta * SX
        coupling = -0.5 * amplitude * SZ
    elif basis == "plus_minus":
        static = np.diag([-0.5 * cfg.delta, 0.5 * cfg.delta]).astype(complex)
        coupling = -0.5 * amplitude * SX
    else:
        raise InvalidInputError(f"unknown basis {basis!r}")

    size = 2 * N + 1
    dim = 2 * size
    H = np.zeros((dim, dim), dtype=complex)
    lower = np.exp(1j * cfg.phi) * coupling  # block (n, n-1)
    for i, n in enumerate(range(-N, N + 1)):
        s = slice(2 * i, 2 * i + 2)
        H[s, s] = static + n * cfg.omega * I2
        if i > 0:
            p = slice(2 * i - 2, 2 * i)
            H[s, p] = lower
            H[p, s] = lower.conj().T
    if cfg.phi == 0.0:
        return H.real.copy()
    return H


def shift_copy(coeffs: np.ndarray, k: int) -> np.ndarray:
    """Return the Fourier copy ``u'_n = u_{n+k}`` (zero padded at the window edge).

    The copy carries quasienergy ``eps - k omega``.
    """
    if k == 0:
        return coeffs
    out = np.zeros_like(coeffs)
    if k > 0:
        out[..., :-k, :] = coeffs[..., k:, :]
    else:
        out[..., -k:, :] = coeffs[..., :k, :]
    return out


def time_averaged_overlap(a: np.ndarray, b: np.ndarray) -> complex:
    """``<<a|b>> = sum_n <a_n|b_n>`` for coefficient arrays of equal shape."""
    return complex(np.vdot(a, b))


def _to_original(vecs: np.ndarray, basis: str) -> np.ndarray:
    # vecs: (dim, ncols) -> (ncols, 2N+1, 2)
    dim, ncols = vecs.shape
    blocks = vecs.T.reshape(ncols, dim // 2, 2)
    if basis == "rotated":
        return blocks @ _ROTATED_TO_ORIGINAL.T
    if basis == "plus_minus":
        return blocks @ _PLUS_MINUS_TO_ORIGINAL.T
    raise InvalidInputError(f"unknown basis {basis!r}")


def _fix_gauge(mode: np.ndarray) -> np.ndarray:
    flat = mode.reshape(-1)
    anchor = flat[np.argmax(np.abs(flat))]
    return mode * (abs(anchor) / anchor)


def fold_quasienergy(eps: float, omega: float) -> tuple[float, int]:
    """Fold into ``[-omega, 0)``; returns the folded value and the copy index ``k``."""
    k = math.floor(eps / omega) + 1
    folded = eps - k * omega
    if folded >= 0.0:  # guard against rounding at the zone edge
        folded -= omega
        k += 1
    return folded, k


def diagonalize_floquet(
    matrix: np.ndarray,
    omega: float,
    N: int,
    basis: Basis = "rotated",
    amplitude: float = float("nan"),
    phi: float = 0.0,
) -> FloquetSolution:
    """Solve a truncated Floquet Hamiltonian for two inequivalent modes.

    The two most centred eigenvectors that are not Fourier copies of one another
    are kept, shifted to the copy whose quasienergy lies in ``[-omega, 0)`` and
    sorted by quasienergy.  Each mode is then gauge fixed so that its largest
    Fourier component is real and positive.
    """
    dim = 2 * (2 * N + 1)
    if matrix.shape != (dim, dim):
        raise InvalidInputError(f"matrix shape {matrix.shape} does not match N={N}")
    try:
        evals, evecs = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Floquet eigen-solver failed: {exc}") from exc

    weights = np.abs(evecs[0::2]) ** 2 + np.abs(evecs[1::2]) ** 2
    n = np.arange(-N, N + 1)
    centroid = n @ weights
    order = np.argsort(np.abs(centroid), kind="stable")

    scale = max(omega, float(np.max(np.abs(np.diag(matrix)))) / max(N, 1))
    picked: list[tuple[float, np.ndarray]] = []
    for col in order:
        folded, k = fold_quasienergy(float(evals[col]), omega)
        coeffs = shift_copy(_to_original(evecs[:, [col]], basis)[0], k)
        norm = np.linalg.norm(coeffs)
        if norm < 0.5:
            continue
        coeffs = coeffs / norm
        if picked and abs(time_averaged_overlap(picked[0][1], coeffs)) > 0.5:
            continue
        resid = np.linalg.norm(matrix @ evecs[:, col] - evals[col] * evecs[:, col])
        if resid > _RESIDUAL_TOL * scale:
            raise NumericError(f"eigenpair residual {resid:.3e} exceeds tolerance")
        picked.append((folded, coeffs))
        if len(picked) == 2:
            break
    if len(picked) < 2:
        raise NumericError("could not isolate two inequivalent Floquet modes; increase N")

    picked.sort(key=lambda item: item[0])
    eps = np.array([picked[0][0], picked[1][0]])
    coeffs = np.stack([_fix_gauge(picked[0][1]), _fix_gauge(picked[1][1])])
    gap = abs(eps[1] - eps[0])
    degenerate = min(gap, omega - gap) < _DEGENERACY_TOL * omega
    return FloquetSolution(
        amplitude=amplitude,
        omega=omega,
        quasienergies=eps,
        fourier_coeffs=coeffs,
        truncation=N,
        phi=phi,
        degenerate=bool(degenerate),
    )


def apply_drive_phase(sol: FloquetSolution, phi: float, regauge: bool = True) -> FloquetSolution:
    """Modes for drive phase ``phi`` from modes computed at phase ``sol.phi``.

    A drive phase is a shift of the time origin, so ``u_n -> u_n exp(i n dphi)``.
    Pass ``regauge=False`` to keep a parallel-transport gauge intact.
    """
    dphi = phi - sol.phi
    if dphi == 0.0:
        return sol
    factors = np.exp(1j * sol.n_values * dphi)[None, :, None]
    coeffs = sol.fourier_coeffs * factors
    if regauge:
        coeffs = np.stack([_fix_gauge(coeffs[0]), _fix_gauge(coeffs[1])])
    return replace(sol, fourier_coeffs=coeffs, phi=phi)


def solve_floquet(cfg: DriveConfig, amplitude: float, N: int = DEFAULT_TRUNCATION) -> FloquetSolution:
    """Numerically exact Floquet modes at fixed amplitude."""
    base = replace(cfg, phi=0.0)
    H = build_floquet_matrix(base, amplitude, N, "rotated")
    sol = diagonalize_floquet(H, cfg.omega, N, "rotated", amplitude=amplitude, phi=0.0)
    return apply_drive_phase(sol, cfg.phi)


def track_branches(prev: FloquetSolution, nxt: FloquetSolution) -> FloquetSolution:
    """Relabel and phase-align ``nxt`` to follow the branches of ``prev``.

    Labels follow mode continuity rather than quasienergy order, and each mode
    may be moved to a neighbouring Fourier copy so that quasienergies stay
    continuous across the zone edge.  The phase of every mode is chosen so
    that its overlap with the previous mode is real and positive.

    Raises:
        StepTooLargeError: if either matched overlap is below 0.5.
    """
    if prev.truncation != nxt.truncation:
        raise InvalidInputError("solutions must share a truncation window")
    shifts = (0, -1, 1)
    best = None
    for perm in ((0, 1), (1, 0)):
        choice = []
        total = 0.0
        for i, j in enumerate(perm):
            cands = [
                (abs(time_averaged_overlap(prev.fourier_coeffs[i], shift_copy(nxt.fourier_coeffs[j], k))), k)
                for k in shifts
            ]
            mag, k = max(cands, key=lambda c: c[0])
            choice.append((j, k, mag))
            total += mag
        if best is None or total > best[0]:
            best = (total, choice)
    _, choice = best
    if min(c[2] for c in choice) < 0.5:
        raise StepTooLargeError(
            f"branch overlaps {[round(c[2], 3) for c in choice]} below 0.5; reduce the amplitude step"
        )
    eps = np.empty(2)
    coeffs = np.empty_like(nxt.fourier_coeffs)
    for i, (j, k, _) in enumerate(choice):
        c = shift_copy(nxt.fourier_coeffs[j], k)
        c = c / np.linalg.norm(c)
        ov = time_averaged_overlap(prev.fourier_coeffs[i], c)
        coeffs[i] = c * (abs(ov) / ov).conjugate()
        eps[i] = nxt.quasienergies[j] - k * nxt.omega
    return replace(nxt, quasienergies=eps, fourier_coeffs=coeffs, gauge_anchor="parallel transport")


def _mixing_angle(cfg: DriveConfig, amplitude: float) -> float:
    x = 2 * amplitude / cfg.omega
    num = cfg.delta * special.jv(1, x)
    den = cfg.omega - cfg.delta * special.jv(0, x)
    if abs(num) < 1e-300 and abs(den) < 1e-14 * cfg.omega:
        return math.pi / 2  # A -> 0+ on resonance
    return math.atan2(num, den)


def quasienergies_analytic(cfg: DriveConfig, amplitude: float) -> tuple[float, float]:
    """Closed-form quasienergy pair from the two-level truncation."""
    if amplitude < 0:
        raise InvalidInputError("amplitude must be non-negative")
    root = rabi_frequency(cfg, amplitude)
    return 0.5 * (-cfg.omega - root), 0.5 * (-cfg.omega + root)


def rabi_frequency(cfg: DriveConfig, amplitude: float) -> float:
    """Closed-form quasienergy difference (generalized Rabi frequency)."""
    if amplitude < 0:
        raise InvalidInputError("amplitude must be non-negative")
    x = 2 * amplitude / cfg.omega
    j0 = special.jv(0, x)
    j1 = special.jv(1, x)
    return float(math.hypot(cfg.omega - cfg.delta * j0, cfg.delta * j1))


def rwa_rabi(cfg: DriveConfig, amplitude: float) -> float:
    """Rabi frequency in the rotating wave approximation."""
    if amplitude < 0:
        raise InvalidInputError("amplitude must be non-negative")
    return math.hypot(amplitude, cfg.detuning)


def floquet_modes_analytic(cfg: DriveConfig, amplitude: float, N: int = DEFAULT_TRUNCATION) -> FloquetSolution:
    """Closed-form Floquet modes from the two-level truncation.

    Quasienergies are returned on their closed-form branches (not folded) so
    that labels stay continuous in the amplitude.
    """
    if N < 1:
        raise InvalidInputError("invalid truncation: N must be >= 1")
    if amplitude < 0:
        raise InvalidInputError("amplitude must be non-negative")
    theta = _mixing_angle(cfg, amplitude)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    n = np.arange(-N, N + 1)
    x = amplitude / cfg.omega
    jp, jm = special.jv(n, x), special.jv(n, -x)
    jp1, jm1 = special.jv(n + 1, x), special.jv(n + 1, -x)
    rot = np.empty((2, n.size, 2), dtype=complex)
    rot[0, :, 0] = c * jp1 + s * jp
    rot[0, :, 1] = -c * jm1 + s * jm
    rot[1, :, 0] = -s * jp1 + c * jp
    rot[1, :, 1] = s * jm1 + c * jm
    coeffs = rot / math.sqrt(2) @ _ROTATED_TO_ORIGINAL.T
    coeffs = coeffs * np.exp(1j * n * cfg.phi)[None, :, None]
    coeffs /= np.linalg.norm(coeffs, axis=(1, 2), keepdims=True)
    eps = np.array(quasienergies_analytic(cfg, amplitude))
    return FloquetSolution(
        amplitude=amplitude,
        omega=cfg.omega,
        quasienergies=eps,
        fourier_coeffs=coeffs,
        truncation=N,
        gauge_anchor="closed form",
        phi=cfg.phi,
        degenerate=bool(abs(eps[1] - eps[0]) < _DEGENERACY_TOL * cfg.omega),
    )


def _pad(coeffs: np.ndarray, N_from: int, N_to: int) -> np.ndarray:
    if N_from == N_to:
        return coeffs
    out = np.zeros(coeffs.shape[:-2] + (2 * N_to + 1, 2), dtype=complex)
    off = N_to - N_from
    out[..., off : off + 2 * N_from + 1, :] = coeffs
    return out


def mode_fidelity(a: FloquetSolution, b: FloquetSolution) -> float:
    """``|<<u_0(a)|u_0(b)>>|^2`` over a common Fourier window.

    ``b``'s mode is compared in the Fourier copy whose quasienergy is closest
    to ``a``'s, so the result does not depend on the zone each solution uses.
    """
    N = max(a.truncation, b.truncation)
    ua = _pad(a.fourier_coeffs[0], a.truncation, N)
    ub = _pad(b.fourier_coeffs[0], b.truncation, N)
    for u in (ua, ub):
        if abs(np.vdot(u, u).real - 1.0) > 1e-6:
            raise InvalidInputError("mode_fidelity requires normalized modes")
    k = round((b.quasienergies[0] - a.quasienergies[0]) / a.omega)
    ov = time_averaged_overlap(ua, shift_copy(ub, int(k)))
    return float(min(1.0, abs(ov) ** 2))
