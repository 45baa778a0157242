"""Entanglement-free decomposition of the optimal system-ancilla state.

rho = sum_i |Psi_i><Psi_i| with ``Psi_i = sum_j c_ij sqrt(p_j) chi_j`` for a real
orthogonal ``C``.  Writing ``Psi_i = |mu_i>|0> + |nu_i>|1>``, each term is a
product state iff ``mu_i`` and ``nu_i`` are parallel.  The eta basis is the
free parameter that makes this possible: ``C = Omega(k3) Lambda(k1, k2)``,
row 0 of ``C`` kills ``nu_0``, and ``eta_0, eta_1`` are rotated by ``beta``
inside the span of ``mu'_1, mu'_2`` until rows 1 and 2 become products.

Everything below runs in canonical labels (p_0 gamma_0 >= p_1 gamma_1 >=
p_2 gamma_2); results are permuted back to user labels at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensemble import Ensemble
from .jointstate import EtaBasis, chi_states, phi_states
from .protocol import ProtocolParams, Regime


class DecompositionError(ValueError):
    pass


class DegenerateRatios(DecompositionError):
    pass


class DegenerateSpan(DecompositionError):
    pass


class DegenerateEquation(DecompositionError):
    pass


class NoSolution(DecompositionError):
    pass


@dataclass(frozen=True, eq=False)
class SeparableDecomposition:
    regime: Regime
    C: np.ndarray  # columns indexed by canonical state label
    kappa1: Optional[float]
    kappa2: Optional[float]
    kappa3: Optional[float]
    beta: Optional[float]
    eta_basis: EtaBasis  # user coordinates
    psi: np.ndarray  # rows Psi_i, 6-vectors in user coordinates
    schmidt_residuals: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.psi.T @ self.psi.conj()


@dataclass(frozen=True)
class InnerProducts:
    """Overlaps of mu'_1, mu'_2, nu'_1, nu'_2 with the tau basis.

    A, B0, B1 do not depend on beta.  nu'_i = x_i eta_0 + y_i eta_1, so
    P, Q, R, S are linear in (cos beta, sin beta).
    """

    A: float
    B0: float
    B1: float
    x1: float
    y1: float
    x2: float
    y2: float

    def at(self, beta: float) -> tuple[float, ...]:
        """(A, B0, B1, P, Q, R, S) for the given beta."""
        c, s = math.cos(beta), math.sin(beta)
        P = self.x1 * c - self.y1 * s
        R = self.x1 * s + self.y1 * c
        Q = self.x2 * c - self.y2 * s
        S = self.x2 * s + self.y2 * c
        return (self.A, self.B0, self.B1, P, Q, R, S)

    def compatibility(self, beta: float) -> float:
        """A R - (Q B1 - S B0); zero at a compatible beta."""
        A, B0, B1, P, Q, R, S = self.at(beta)
        return A * R - (Q * B1 - S * B0)

    def kappa3_forms(self, beta: float) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        """Coefficients (of cos^2, cos sin, sin^2) of the two cross-multiplied kappa3 equations."""
        A, B0, B1, P, Q, R, S = self.at(beta)
        X = A * R
        Y = Q * B1 - S * B0
        Z = P * B1 - R * B0 - S * A
        return (-X, -Z, Y), (Y, Z, -X)

    def scale(self) -> float:
        return max(abs(self.A), abs(self.B0), abs(self.B1)) * max(
            math.hypot(self.x1, self.y1), math.hypot(self.x2, self.y2)
        )


def lambda_matrix(kappa1: float, kappa2: float) -> np.ndarray:
    c1, s1, c2, s2 = math.cos(kappa1), math.sin(kappa1), math.cos(kappa2), math.sin(kappa2)
    return np.array(
        [
            [c1, s1 * c2, s1 * s2],
            [0.0, -s2, c2],
            [-s1, c1 * c2, c1 * s2],
        ]
    )


def omega_matrix(kappa3: float) -> np.ndarray:
    c, s = math.cos(kappa3), math.sin(kappa3)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def nu0_zero_row(params: ProtocolParams, ensemble: Ensemble) -> np.ndarray:
    """Unit row c_0 with sum_j c_0j sqrt(p_j) alpha_j Phi_j = 0 (canonical labels).

    For theta3 = pi, phi = 0 this is proportional to
    (-sin(theta1+theta2)/(sqrt(p0) a0), sin(theta2)/(sqrt(p1) a1), sin(theta1)/(sqrt(p2) a2)).
    """
    p, _ = ensemble.canonical_arrays()
    alpha = params.canonical_alpha()
    coords = _phi_coords(params)
    if np.max(np.abs(coords[:, 2])) > 1e-12 or abs(params.phi) > 1e-12:
        raise DegenerateRatios("Phi states are not confined to the eta_0/eta_1 plane")
    weights = np.sqrt(p) * alpha
    rows = (weights * coords[:, 0].real, weights * coords[:, 1].real)
    n = np.cross(rows[0], rows[1])
    norm = np.linalg.norm(n)
    if norm < 1e-12 * max(1.0, np.linalg.norm(rows[0]) * np.linalg.norm(rows[1])):
        raise DegenerateRatios("all Phi states are parallel; nu_0 = 0 leaves row 0 undetermined")
    n = n / norm
    return n if n[0] >= 0 else -n


def nu0_zero_angles(params: ProtocolParams, ensemble: Ensemble) -> tuple[float, float]:
    """(kappa1, kappa2) whose Lambda row 0 makes nu_0 vanish."""
    n = nu0_zero_row(params, ensemble)
    kappa1 = math.acos(float(np.clip(n[0], -1.0, 1.0)))
    kappa2 = math.atan2(n[2], n[1])
    return kappa1, kappa2


def tau_basis(mu1: np.ndarray, mu2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt pair from mu'_1 and mu'_2."""
    mu1 = np.asarray(mu1, dtype=complex)
    mu2 = np.asarray(mu2, dtype=complex)
    n1 = np.vdot(mu1, mu1).real
    if n1 < 1e-24:
        raise DegenerateSpan("mu'_1 vanishes")
    tau0 = mu1 / math.sqrt(n1)
    proj = np.vdot(tau0, mu2)
    rest = np.vdot(mu2, mu2).real - abs(proj) ** 2
    if rest < 1e-24 * max(1.0, np.vdot(mu2, mu2).real):
        raise DegenerateSpan("mu'_2 is parallel to mu'_1")
    tau1 = (mu2 - proj * tau0) / math.sqrt(rest)
    # second pass restores orthogonality lost when mu'_1 and mu'_2 are nearly parallel
    tau1 = tau1 - np.vdot(tau0, tau1) * tau0
    tau1 = tau1 / np.linalg.norm(tau1)
    return tau0, tau1


def solve_beta(ip: InnerProducts) -> float:
    """Root of the compatibility condition, linear in tan(beta); branch (-pi/2, pi/2]."""
    sin_coef = ip.A * ip.x1 + ip.B1 * ip.y2 + ip.B0 * ip.x2
    cos_coef = ip.A * ip.y1 - ip.B1 * ip.x2 + ip.B0 * ip.y2
    if max(abs(sin_coef), abs(cos_coef)) <= 1e-14 * max(1.0, ip.scale()):
        raise DegenerateEquation("compatibility condition holds for every beta")
    if sin_coef == 0.0:
        return math.pi / 2
    beta = math.atan(-cos_coef / sin_coef)
    return beta if beta > -math.pi / 2 else math.pi / 2


def kappa3_roots(ip: InnerProducts, beta: float) -> tuple[list[float], list[float]]:
    """Solutions in (-pi/2, pi/2] of each kappa3 equation separately."""
    eq1, eq2 = ip.kappa3_forms(beta)
    return _form_roots(*eq1), _form_roots(*eq2)


def solve_kappa3(ip: InnerProducts, beta: float, tol: float = 1e-10) -> float:
    """kappa3 solving both separability equations for rows 1 and 2."""
    eq1, eq2 = ip.kappa3_forms(beta)
    roots = _form_roots(*eq1) or _form_roots(*eq2)
    if not roots:
        raise NoSolution(f"no real kappa3 at beta={beta}")
    scale = max(1e-300, max(abs(v) for v in eq1 + eq2))
    best = min(roots, key=lambda k: abs(_form_value(eq2, k)) + abs(_form_value(eq1, k)))
    if max(abs(_form_value(eq1, best)), abs(_form_value(eq2, best))) > tol * scale:
        raise NoSolution(f"the two kappa3 equations disagree at beta={beta} (incompatible beta)")
    return best


def beta_one_omitted(p0: float, p1: float, a0: float, a1: float, theta1: float) -> float:
    """beta with p0 alpha0 sqrt(1-a0) cos(beta) = p1 alpha1 sqrt(1-a1) sin(beta + theta1).

    Amplitudes enter squared (a = alpha^2).  Branch (-pi/2, pi/2].
    """
    lhs = p0 * math.sqrt(a0) * math.sqrt(max(0.0, 1 - a0))
    rhs = p1 * math.sqrt(a1) * math.sqrt(max(0.0, 1 - a1))
    # lhs cos b = rhs (sin b cos t1 + cos b sin t1)
    sin_coef = rhs * math.cos(theta1)
    cos_coef = lhs - rhs * math.sin(theta1)
    if sin_coef == 0.0:
        if cos_coef == 0.0:
            raise DegenerateEquation("balance equation holds for every beta")
        return math.pi / 2
    beta = math.atan(cos_coef / sin_coef)
    return beta if beta > -math.pi / 2 else math.pi / 2


def inner_products(
    params: ProtocolParams, ensemble: Ensemble, Lam: np.ndarray, tau: tuple[np.ndarray, np.ndarray]
) -> InnerProducts:
    mu_p, nu_p = _primed_vectors(params, ensemble, Lam)
    tau0, tau1 = tau
    return InnerProducts(
        A=float(np.vdot(tau0, mu_p[1]).real),
        B0=float(np.vdot(tau0, mu_p[2]).real),
        B1=float(np.vdot(tau1, mu_p[2]).real),
        x1=float(nu_p[1][0]),
        y1=float(nu_p[1][1]),
        x2=float(nu_p[2][0]),
        y2=float(nu_p[2][1]),
    )


def build_decomposition(ensemble: Ensemble, params: ProtocolParams) -> SeparableDecomposition:
    """Product-state decomposition of rho and the eta basis that enables it."""
    try:
        if params.regime is Regime.I:
            return _regime_one(ensemble, params)
        if params.regime is Regime.IV:
            return _regime_four(ensemble, params)
        return _coplanar(ensemble, params)
    except DecompositionError as exc:
        raise type(exc)(f"regime {params.regime.value}: {exc}") from exc


# --- regimes ----------------------------------------------------------------


def _regime_one(ensemble: Ensemble, params: ProtocolParams) -> SeparableDecomposition:
    p, _ = ensemble.canonical_arrays()
    a = params.canonical_alpha() ** 2
    v = p * np.sqrt(a) * np.sqrt(np.clip(1 - a, 0, None))
    eta0 = v / np.linalg.norm(v)
    basis = _complete_basis(eta0)
    # rows orthogonal to w = sqrt(p) alpha have nu = 0; the row along w has mu || eta_0
    w = np.sqrt(p) * np.sqrt(a)
    w = w / np.linalg.norm(w)
    perp = _complete_basis(w)[1:]
    C = np.vstack([perp, w])
    return _finish(ensemble, params, Regime.I, C, basis, None, None, None, None)


def _regime_four(ensemble: Ensemble, params: ProtocolParams) -> SeparableDecomposition:
    (survivor,) = (c for c in range(3) if c not in params.omitted)
    if survivor == 0:
        basis = np.array([[1.0, 0, 0], [0, -1.0, 0], [0, 0, -1.0]])
        beta = math.pi / 2
    else:
        # reflection sending the survivor's Phi coordinates onto its flag |survivor>
        c = _phi_coords(params)[survivor].real
        e = np.zeros(3)
        e[survivor] = 1.0
        u = c - e
        basis = np.eye(3) - 2 * np.outer(u, u) / (u @ u) if u @ u > 1e-24 else np.eye(3)
        beta = None
    return _finish(ensemble, params, Regime.IV, np.eye(3), basis, None, None, None, beta)


def _coplanar(ensemble: Ensemble, params: ProtocolParams) -> SeparableDecomposition:
    k1, k2 = nu0_zero_angles(params, ensemble)
    Lam = lambda_matrix(k1, k2)
    last_omitted_flat = (
        params.regime is Regime.III and params.omitted == (2,) and abs(math.cos(params.theta3) + 1) < 1e-12
    )
    if last_omitted_flat:
        # no |2> component left: tau_0 = |1>, tau_1 = |0>, beta from the balance equation
        tau = (np.array([0, 1, 0], dtype=complex), np.array([1, 0, 0], dtype=complex))
        p, _ = ensemble.canonical_arrays()
        a = params.canonical_alpha() ** 2
        beta = beta_one_omitted(p[0], p[1], a[0], a[1], params.theta1)
        ip = inner_products(params, ensemble, Lam, tau)
    else:
        mu_p, _ = _primed_vectors(params, ensemble, Lam)
        tau = tau_basis(mu_p[1], mu_p[2])
        ip = inner_products(params, ensemble, Lam, tau)
        beta = solve_beta(ip)
    k3 = solve_kappa3(ip, beta)
    tau0, tau1 = (t.real for t in tau)
    eta0 = math.cos(beta) * tau0 + math.sin(beta) * tau1
    eta1 = -math.sin(beta) * tau0 + math.cos(beta) * tau1
    eta2 = np.cross(eta0, eta1)
    basis = np.array([eta0, eta1, eta2])
    C = omega_matrix(k3) @ Lam
    return _finish(ensemble, params, params.regime, C, basis, k1, k2, k3, beta)


# --- helpers ----------------------------------------------------------------


def _phi_coords(params: ProtocolParams) -> np.ndarray:
    """Phi_c in eta coordinates (rows)."""
    return phi_states(params.angles, EtaBasis.computational())


def _primed_vectors(params: ProtocolParams, ensemble: Ensemble, Lam: np.ndarray):
    """mu'_i (canonical system coords) and nu'_i (eta_0/eta_1 coords) for Lambda rows."""
    p, _ = ensemble.canonical_arrays()
    a = params.canonical_alpha() ** 2
    mu_w = np.sqrt(p) * np.sqrt(np.clip(1 - a, 0, None))
    nu_w = np.sqrt(p) * np.sqrt(a)
    coords = _phi_coords(params).real[:, :2]
    mu_p = [Lam[i] * mu_w for i in range(3)]
    nu_p = [(Lam[i] * nu_w) @ coords for i in range(3)]
    return mu_p, nu_p


def _complete_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal rows starting with unit v (real), deterministic completion."""
    v = v / np.linalg.norm(v)
    rows = [v]
    for e in np.eye(3):
        r = e - sum((e @ q) * q for q in rows)
        if np.linalg.norm(r) > 1e-6:
            rows.append(r / np.linalg.norm(r))
        if len(rows) == 3:
            break
    return np.array(rows)


def _finish(ensemble, params, regime, C, basis_can, k1, k2, k3, beta) -> SeparableDecomposition:
    perm = list(ensemble.canonical_perm)
    to_user = np.zeros((3, 3))
    for c, u in enumerate(perm):
        to_user[u, c] = 1.0
    eta = EtaBasis(np.asarray(basis_can, dtype=complex) @ to_user.T)
    chis = chi_states(params, ensemble, eta)
    p_user = ensemble.p
    weighted = np.array([math.sqrt(p_user[u]) * chis[u] for u in perm])  # canonical rows
    psi = np.asarray(C) @ weighted
    residuals = np.array([np.linalg.svd(v.reshape(3, 2), compute_uv=False)[1] for v in psi])
    return SeparableDecomposition(
        regime=regime,
        C=np.asarray(C, dtype=float),
        kappa1=k1,
        kappa2=k2,
        kappa3=k3,
        beta=beta,
        eta_basis=eta,
        psi=psi,
        schmidt_residuals=residuals,
    )


def _form_value(coefs: tuple[float, float, float], k: float) -> float:
    a, b, d = coefs
    c, s = math.cos(k), math.sin(k)
    return a * c * c + b * c * s + d * s * s


def _form_roots(a: float, b: float, d: float) -> list[float]:
    """Angles k in (-pi/2, pi/2] with a cos^2 k + b cos k sin k + d sin^2 k = 0."""
    scale = max(abs(a), abs(b), abs(d))
    if scale == 0.0:
        return [0.0]
    a, b, d = a / scale, b / scale, d / scale
    roots = []
    if abs(d) < 1e-14:
        # cos k (a cos k + b sin k) = 0
        roots.append(math.pi / 2)
        if abs(b) > 1e-14:
            roots.append(math.atan(-a / b))
        return sorted(roots)
    disc = b * b - 4 * a * d
    if disc < -1e-14:
        return []
    sq = math.sqrt(max(0.0, disc))
    for t in ((-b + sq) / (2 * d), (-b - sq) / (2 * d)):
        roots.append(math.atan(t))
    return sorted(set(roots))
