"""System-ancilla states after the joint unitary.

Index convention for 6x6 matrices: ``m = 2*s + a`` with system index
``s in {0, 1, 2}`` and ancilla index ``a in {0, 1}``, i.e. ``np.kron(system,
ancilla)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .ensemble import Ensemble
from .protocol import ProtocolParams

INDEX_CONVENTION = "m = 2*s + a (system s in 0..2, ancilla a in 0..1)"


class DegenerateOutcome(ValueError):
    pass


class InvalidJointState(ValueError):
    pass


PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def _gell_mann() -> np.ndarray:
    s3 = 1 / np.sqrt(3)
    return np.array(
        [
            [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
            [[0, -1j, 0], [1j, 0, 0], [0, 0, 0]],
            [[1, 0, 0], [0, -1, 0], [0, 0, 0]],
            [[0, 0, 1], [0, 0, 0], [1, 0, 0]],
            [[0, 0, -1j], [0, 0, 0], [1j, 0, 0]],
            [[0, 0, 0], [0, 0, 1], [0, 1, 0]],
            [[0, 0, 0], [0, 0, -1j], [0, 1j, 0]],
            [[s3, 0, 0], [0, s3, 0], [0, 0, -2 * s3]],
        ],
        dtype=complex,
    )


GELL_MANN = _gell_mann()
I2 = np.eye(2, dtype=complex)
I3 = np.eye(3, dtype=complex)


@dataclass(frozen=True, eq=False)
class EtaBasis:
    """Orthonormal qutrit basis carrying the Phi states; rows are eta_0, eta_1, eta_2."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        if v.shape != (3, 3):
            raise ValueError(f"eta basis needs shape (3, 3), got {v.shape}")
        dev = np.max(np.abs(v.conj() @ v.T - np.eye(3)))
        if dev > 1e-12:
            raise ValueError(f"eta basis is not orthonormal (deviation {dev:.2e})")
        object.__setattr__(self, "vectors", v)

    @classmethod
    def computational(cls) -> "EtaBasis":
        return cls(np.eye(3, dtype=complex))

    @classmethod
    def from_two(cls, eta0, eta1) -> "EtaBasis":
        """Complete two orthonormal vectors with a third."""
        eta0 = np.asarray(eta0, dtype=complex)
        eta1 = np.asarray(eta1, dtype=complex)
        eta2 = np.cross(eta0.conj(), eta1.conj())
        return cls(np.array([eta0, eta1, eta2 / np.linalg.norm(eta2)]))


@dataclass(frozen=True, eq=False)
class BlochCoefficients:
    X: np.ndarray  # ancilla, length 3
    Y: np.ndarray  # system, length 8
    T: np.ndarray  # correlations, shape (8, 3)


def phi_states(angles: Sequence[float], basis: EtaBasis) -> np.ndarray:
    """Rows Phi_0, Phi_1, Phi_2 (canonical labels) for ``(theta1, theta2, theta3, phi)``."""
    t1, t2, t3, ph = (float(x) for x in angles)
    coords = np.array(
        [
            [1.0, 0.0, 0.0],
            [np.cos(t1), np.sin(t1), 0.0],
            [np.cos(t2), np.sin(t2) * np.cos(t3) * np.exp(1j * ph), np.sin(t2) * np.sin(t3)],
        ],
        dtype=complex,
    )
    return coords @ basis.vectors


def chi_states(params: ProtocolParams, ensemble: Ensemble, basis: EtaBasis) -> np.ndarray:
    """Rows chi_i = U|psi_i>|k> in user order, as 6-vectors."""
    phis = phi_states(params.angles, basis)
    chis = np.zeros((3, 6), dtype=complex)
    e0 = np.array([1, 0], dtype=complex)
    e1 = np.array([0, 1], dtype=complex)
    for c, u in enumerate(params.perm):
        alpha = params.alpha[u]
        sys_flag = np.zeros(3, dtype=complex)
        sys_flag[u] = 1.0
        chis[u] = np.sqrt(max(0.0, 1.0 - alpha**2)) * np.kron(sys_flag, e0) + alpha * np.kron(phis[c], e1)
    return chis


def gram_consistency(chis: np.ndarray, ensemble: Ensemble) -> float:
    """max |<chi_i|chi_j> - g_ij| over i != j; zero iff a unitary with this action exists."""
    overlaps = chis.conj() @ chis.T
    G = ensemble.gram
    off = ~np.eye(3, dtype=bool)
    return float(np.max(np.abs(overlaps - G)[off]))


def build_rho(params: ProtocolParams, ensemble: Ensemble, basis: EtaBasis) -> np.ndarray:
    chis = chi_states(params, ensemble, basis)
    p = ensemble.p
    return np.einsum("i,ij,ik->jk", p, chis, chis.conj())


def validate_joint_state(rho: np.ndarray, tol: float = 1e-12) -> None:
    """Raise InvalidJointState unless rho is a 6x6 Hermitian, trace-one, PSD matrix."""
    rho = np.asarray(rho)
    if rho.shape != (6, 6):
        raise InvalidJointState(f"expected a 6x6 matrix, got {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > tol:
        raise InvalidJointState(f"not Hermitian (deviation {herm:.2e})")
    tr = abs(np.trace(rho) - 1)
    if tr > tol:
        raise InvalidJointState(f"trace differs from 1 by {tr:.2e}")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lo < -tol:
        raise InvalidJointState(f"not positive semidefinite (min eigenvalue {lo:.2e})")


def measure_ancilla(rho: np.ndarray):
    """Project the ancilla on |0> (success) and |1> (failure).

    Returns
    -------
    p_success : float
    success_state : 3x3 conditional system state
    failure_state : 3x3 conditional system state, or None when failure never happens
    """
    blocks = np.asarray(rho).reshape(3, 2, 3, 2)
    on0 = blocks[:, 0, :, 0]
    on1 = blocks[:, 1, :, 1]
    p_success = float(np.real(np.trace(on0)))
    p_fail = float(np.real(np.trace(on1)))
    if p_success <= 0:
        raise DegenerateOutcome("success probability is zero; conditional state undefined")
    failure = on1 / p_fail if p_fail > 0 else None
    return p_success, on0 / p_success, failure


def bloch_decompose(rho: np.ndarray) -> BlochCoefficients:
    """Trace pairings against Pauli (ancilla) and Gell-Mann (system) generators."""
    rho = np.asarray(rho)
    X = np.array([np.trace(rho @ np.kron(I3, s)).real for s in PAULI])
    Y = np.array([np.trace(rho @ np.kron(lam, I2)).real for lam in GELL_MANN])
    T = np.array([[np.trace(rho @ np.kron(lam, s)).real for s in PAULI] for lam in GELL_MANN])
    return BlochCoefficients(X=X, Y=Y, T=T)


def bloch_reconstruct(bloch: BlochCoefficients) -> np.ndarray:
    """Inverse of bloch_decompose.

    Each coefficient is divided by the Hilbert-Schmidt norm of its operator:
    Tr[(I3 x sigma)^2] = 6, Tr[(lambda x I2)^2] = Tr[(lambda x sigma)^2] = 4.
    """
    rho = np.eye(6, dtype=complex) / 6
    for x, s in zip(bloch.X, PAULI):
        rho += x / 6 * np.kron(I3, s)
    for y, lam in zip(bloch.Y, GELL_MANN):
        rho += y / 4 * np.kron(lam, I2)
    for j, lam in enumerate(GELL_MANN):
        for i, s in enumerate(PAULI):
            rho += bloch.T[j, i] / 4 * np.kron(lam, s)
    return rho


def dump_matrix(rho: np.ndarray, fh: IO[str]) -> None:
    """Row-major ``re,im`` pairs at full precision after a header line."""
    rho = np.asarray(rho, dtype=complex)
    fh.write(f"# {rho.shape[0]}x{rho.shape[1]} complex, row-major re,im pairs; {INDEX_CONVENTION}\n")
    for row in rho:
        fh.write(",".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row) + "\n")


def load_matrix(fh: IO[str]) -> np.ndarray:
    rows = []
    for line in fh:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        vals = [float(v) for v in line.split(",")]
        rows.append([complex(re, im) for re, im in zip(vals[::2], vals[1::2])])
    return np.array(rows, dtype=complex)
