"""Process tomography of simulated pulses and fidelities against ideal rotations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import rotation
from .errors import InvalidInputError, NumericError
from .floquet import I2, SX, SY, SZ, DriveConfig
from .propagation import NoiseModel, propagate_lindblad, to_rotating_frame
from .pulse import PulseEnvelope

PAULI_BASIS = (I2, SX, SY, SZ)
BASIS_LABELS = ("I", "X", "Y", "Z")
_VECS = np.array([E.reshape(-1) for E in PAULI_BASIS])  # row-major vectorization

QPT_INPUTS = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1j], dtype=complex) / math.sqrt(2),
    np.array([1, -1], dtype=complex) / math.sqrt(2),
)


@dataclass(frozen=True)
class ProcessMatrix:
    """Process matrix ``chi`` in the basis ``{I, sx, sy, sz}``.

    The channel is ``rho -> sum_mn chi_mn E_m rho E_n^dag``.
    """

    chi: np.ndarray
    basis: tuple[str, ...] = BASIS_LABELS

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=complex)
        if chi.shape != (4, 4):
            raise InvalidInputError("chi must be 4x4")
        if np.max(np.abs(chi - chi.conj().T)) > 1e-8:
            raise InvalidInputError("chi must be Hermitian")
        object.__setattr__(self, "chi", chi)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros((2, 2), dtype=complex)
        for m, Em in enumerate(PAULI_BASIS):
            for n, En in enumerate(PAULI_BASIS):
                out += self.chi[m, n] * Em @ rho @ En.conj().T
        return out

    def trace_preservation_error(self) -> float:
        """``max |sum_mn chi_mn E_n^dag E_m - I|``."""
        acc = np.zeros((2, 2), dtype=complex)
        for m, Em in enumerate(PAULI_BASIS):
            for n, En in enumerate(PAULI_BASIS):
                acc += self.chi[m, n] * En.conj().T @ Em
        return float(np.max(np.abs(acc - I2)))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.chi)))


@dataclass(frozen=True)
class RotationTarget:
    """Equatorial rotation by ``angle`` selected by the drive phase ``axis_phase``.

    ``axis_phase`` is the drive phase that produces the rotation, so ``0``
    means a rotation about ``x`` and ``-pi/2`` a rotation about ``y``.
    """

    axis_phase: float
    angle: float

    def __post_init__(self):
        if not (math.isfinite(self.axis_phase) and math.isfinite(self.angle)):
            raise InvalidInputError("rotation target must be finite")
        if not 0.0 <= self.angle < 2 * math.pi:
            raise InvalidInputError("rotation angle must lie in [0, 2 pi)")

    @classmethod
    def rx(cls, angle: float) -> RotationTarget:
        return cls(0.0, angle)

    @classmethod
    def ry(cls, angle: float) -> RotationTarget:
        return cls(-math.pi / 2, angle)


def ideal_rotation(target: RotationTarget) -> np.ndarray:
    """``exp(-i angle/2 (cos(phi) sx - sin(phi) sy))`` with ``phi = axis_phase``."""
    return rotation(target.angle, target.axis_phase)


def chi_from_unitary(U: np.ndarray) -> ProcessMatrix:
    """Process matrix of ``rho -> U rho U^dag``; the global phase is irrelevant."""
    U = np.asarray(U, dtype=complex)
    if U[0, 0] != 0:
        U = U * (abs(U[0, 0]) / U[0, 0])
    c = np.array([np.trace(E.conj().T @ U) / 2 for E in PAULI_BASIS])
    chi = np.outer(c, c.conj())
    return ProcessMatrix(0.5 * (chi + chi.conj().T))


def chi_from_outputs(outputs) -> ProcessMatrix:
    """Linear inversion from the images of the four tomography input states.

    ``outputs`` are the channel outputs for ``|0>``, ``|1>``, ``|+i>`` and
    ``|->`` in that order.
    """
    r0, r1, rpi, rm = (np.asarray(o, dtype=complex) for o in outputs)
    e_id = r0 + r1
    e_x = e_id - 2 * rm
    e_y = 2 * rpi - e_id
    e01 = 0.5 * (e_x + 1j * e_y)  # image of |0><1|
    e10 = 0.5 * (e_x - 1j * e_y)
    images = {(0, 0): r0, (1, 1): r1, (0, 1): e01, (1, 0): e10}
    # Choi matrix J[(a, i), (b, j)] = E(|i><j|)[a, b]
    J = np.zeros((4, 4), dtype=complex)
    for (i, j), img in images.items():
        for a in range(2):
            for b in range(2):
                J[2 * a + i, 2 * b + j] = img[a, b]
    chi = _VECS.conj() @ J @ _VECS.T / 4
    return ProcessMatrix(0.5 * (chi + chi.conj().T))


def run_qpt(cfg: DriveConfig, p: PulseEnvelope, noise: NoiseModel | None = None) -> ProcessMatrix:
    """Simulate the pulse on the four tomography inputs and invert for ``chi``.

    Outputs are taken in the rotating frame at the end of the pulse.
    """
    noise = noise or NoiseModel()
    rhos = np.array([np.outer(s, s.conj()) for s in QPT_INPUTS])
    out = propagate_lindblad(cfg, p, rhos, noise, 0.0, p.t_total)
    out = [to_rotating_frame(r, cfg.omega, p.t_total) for r in out]
    return chi_from_outputs(out)


def process_fidelity(chi: ProcessMatrix, chi_ideal: ProcessMatrix) -> float:
    """``Tr[chi_ideal chi]``."""
    if chi.basis != chi_ideal.basis:
        raise InvalidInputError("process matrices use different operator bases")
    f = np.trace(chi_ideal.chi @ chi.chi)
    if abs(f.imag) > 1e-8:
        raise NumericError(f"process fidelity has imaginary part {f.imag:.2e}")
    return float(f.real)


def gate_fidelity(process_fid: float, d: int = 2) -> float:
    """Average gate fidelity ``(d F_p + 1) / (d + 1)``."""
    return (d * process_fid + 1) / (d + 1)


def pulse_gate_fidelity(cfg: DriveConfig, p: PulseEnvelope, target: RotationTarget, noise: NoiseModel | None = None) -> float:
    """Gate fidelity of a simulated pulse with respect to ``target``."""
    chi = run_qpt(cfg, p, noise)
    return gate_fidelity(process_fidelity(chi, chi_from_unitary(ideal_rotation(target))))
