"""Correlation measures for qutrit-qubit states.

Geometric discord is taken with respect to projective measurements on the
ancilla qubit.  With ``x_i = Tr[rho (I x sigma_i)]`` and
``t_ji = Tr[rho (lambda_j x sigma_i)]`` the closed form is

    D = |X|^2 / 6 + |T|^2 / 4 - k_max,

``k_max`` being the top eigenvalue of the 3x3 matrix ``X X^T / 6 + T^T T / 4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .ensemble import Priors
from .jointstate import I3, PAULI, bloch_decompose
from .protocol import critical_gammas


class RegimeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationReport:
    gmqd_closed: float
    gmqd_oracle: float
    negativity: float
    min_pt_eigenvalue: float
    commutator_coefficient: Optional[float] = None

    CSV_HEADER = "gmqd_closed,gmqd_oracle,negativity,min_pt_eigenvalue,commutator_coefficient"

    def csv_row(self) -> str:
        vals = [self.gmqd_closed, self.gmqd_oracle, self.negativity, self.min_pt_eigenvalue]
        cells = [format(v, ".17g") for v in vals]
        cells.append("" if self.commutator_coefficient is None else format(self.commutator_coefficient, ".17g"))
        return ",".join(cells)


@dataclass(frozen=True, eq=False)
class Regime1Decomposition:
    """rho = q rho1 x |0><0| + |eta0><eta0| x |xi><xi|."""

    rho1: np.ndarray
    q: float
    eta0: np.ndarray
    xi: np.ndarray

    def reconstruct(self) -> np.ndarray:
        a0 = np.diag([1.0, 0.0]).astype(complex)
        return self.q * np.kron(self.rho1, a0) + np.kron(
            np.outer(self.eta0, self.eta0.conj()), np.outer(self.xi, self.xi.conj())
        )


def gmqd_closed_form(rho: np.ndarray) -> float:
    b = bloch_decompose(rho)
    K = np.outer(b.X, b.X) / 6 + b.T.T @ b.T / 4
    k_max = np.linalg.eigvalsh(K)[-1]
    return float(b.X @ b.X / 6 + np.sum(b.T**2) / 4 - k_max)


def _dephasing_distance(rho: np.ndarray, n: np.ndarray) -> np.ndarray:
    """||rho - sum_pm (I x P_pm) rho (I x P_pm)||^2 for each unit vector row of n."""
    n = np.atleast_2d(n)
    ns = np.einsum("ki,iab->kab", n, PAULI)
    eye = np.eye(2)
    out = np.empty(len(n))
    for k, nsig in enumerate(ns):
        total = np.zeros_like(rho)
        for sign in (1, -1):
            P = np.kron(I3, (eye + sign * nsig) / 2)
            total = total + P @ rho @ P
        out[k] = np.sum(np.abs(rho - total) ** 2)
    return out


def fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    r = np.sqrt(1 - z**2)
    phi = math.pi * (1 + math.sqrt(5)) * k
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def gmqd_oracle(rho: np.ndarray, n_starts: int = 500, tol: float = 1e-10) -> float:
    """Minimize the dephasing distance over ancilla measurement directions.

    A Fibonacci lattice of ``n_starts`` directions seeds a pattern search in
    the tangent plane of the best lattice point.
    """
    rho = np.asarray(rho, dtype=complex)
    dirs = fibonacci_sphere(n_starts)
    vals = _dephasing_distance(rho, dirs)
    best = int(np.argmin(vals))
    n, fbest = dirs[best], vals[best]
    step = math.sqrt(4 * math.pi / n_starts)
    moves = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], float)
    while step > tol:
        u = np.cross(n, [1.0, 0.0, 0.0] if abs(n[0]) < 0.9 else [0.0, 1.0, 0.0])
        u /= np.linalg.norm(u)
        v = np.cross(n, u)
        trial = n + step * (moves[:, :1] * u + moves[:, 1:] * v)
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        tv = _dephasing_distance(rho, trial)
        k = int(np.argmin(tv))
        if tv[k] < fbest:
            n, fbest = trial[k], tv[k]
        else:
            step /= 2
    return float(fbest)


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose on the ancilla factor (index convention m = 2s + a)."""
    return np.asarray(rho).reshape(3, 2, 3, 2).transpose(0, 3, 2, 1).reshape(6, 6)


def min_pt_eigenvalue(rho: np.ndarray) -> float:
    pt = partial_transpose(rho)
    return float(np.linalg.eigvalsh((pt + pt.conj().T) / 2)[0])


def negativity(rho: np.ndarray) -> float:
    """Sum of |negative eigenvalues| of the partial transpose; zero iff separable in 3x2."""
    pt = partial_transpose(rho)
    ev = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
    return float(-np.sum(ev[ev < 0]))


def regime1_closed_decomposition(priors: Priors | Sequence[float], gamma: float) -> Regime1Decomposition:
    """Separable form of the symmetric protocol (all Phi equal) for equal overlaps."""
    p = priors.as_array() if isinstance(priors, Priors) else np.asarray(priors, float)
    if critical_gammas(p).gamma_c1 < 1.0:
        raise RegimeMismatch(f"priors {tuple(p)} violate the triangle condition; optimum is not regime I")
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    s2 = float(p @ p)
    q = 2 * (1 - gamma) * (p[0] * p[1] + p[1] * p[2] + p[2] * p[0])
    eta0 = p / math.sqrt(s2)
    xi = np.array([math.sqrt(1 - gamma) * math.sqrt(s2), math.sqrt(gamma)])
    rho1 = (1 - gamma) * (np.diag(p) - s2 * np.outer(eta0, eta0)) / q
    return Regime1Decomposition(rho1=rho1.astype(complex), q=q, eta0=eta0.astype(complex), xi=xi.astype(complex))


def zero_discord_commutator(priors: Priors | Sequence[float], gamma: float) -> float:
    """Coefficient of |0><1| - |1><0| in [q|0><0|, |xi><xi|] for the symmetric protocol."""
    p = priors.as_array() if isinstance(priors, Priors) else np.asarray(priors, float)
    q = 2 * (1 - gamma) * (p[0] * p[1] + p[1] * p[2] + p[2] * p[0])
    return float(q * math.sqrt(gamma * (1 - gamma) * float(p @ p)))


def correlation_report(
    rho: np.ndarray, n_starts: int = 500, commutator_coefficient: Optional[float] = None
) -> CorrelationReport:
    return CorrelationReport(
        gmqd_closed=gmqd_closed_form(rho),
        gmqd_oracle=gmqd_oracle(rho, n_starts=n_starts),
        negativity=negativity(rho),
        min_pt_eigenvalue=min_pt_eigenvalue(rho),
        commutator_coefficient=commutator_coefficient,
    )
