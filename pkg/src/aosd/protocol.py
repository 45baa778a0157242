"""Analytic optimum of the assisted unambiguous discrimination of three states.

The joint unitary maps ``|psi_i>|k>`` to
``sqrt(1 - a_i)|i>|0> + alpha_i |Phi_i>|1>`` with ``a_i = alpha_i**2``; the
success probability is ``1 - sum_i p_i a_i``.  Unitarity ties the amplitudes
to the failure-branch overlaps ``J_ij = <Phi_i|Phi_j>`` through
``alpha_i alpha_j J_ij = g_ij``, which gives

    a_i = gamma_i |J_jk / (J_ij J_ki)|     for cyclic (i, j, k).

The optimum is found in two steps.  Step 1 ignores ``a_i <= 1`` and yields
either the symmetric solution (all Phi equal, regime I) or the
symmetry-broken one (regime II).  When amplitudes exceed one, step 2 pins
them to one ("omits" the state) and re-optimizes the rest (regimes III, IV).

All internal work happens in the canonical order ``p_0 gamma_0 >= p_1 gamma_1
>= p_2 gamma_2``; the returned amplitudes are in the caller's order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .ensemble import Ensemble, EnsembleError, Priors

FEASIBILITY_TOL = 1e-12


class DomainError(ValueError):
    pass


class SingularOverlap(ValueError):
    """Some failure-branch overlap J_ij vanishes."""


class Regime(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"


@dataclass(frozen=True)
class ProtocolParams:
    """One discrimination protocol.

    ``alpha`` is in user order; the angles parametrize the canonical Phi
    states (Phi_0 = eta_0).  ``perm[c]`` is the user index of canonical state
    ``c``.  ``omitted`` and ``flagged`` hold canonical indices: states pinned
    to ``alpha = 1`` and states whose amplitude exceeds one, respectively.
    """

    alpha: tuple[float, float, float]
    theta1: float
    theta2: float
    theta3: float
    phi: float
    regime: Regime
    perm: tuple[int, int, int]
    p_success: float
    omitted: tuple[int, ...] = ()
    flagged: tuple[int, ...] = field(default=())

    @property
    def angles(self) -> tuple[float, float, float, float]:
        return (self.theta1, self.theta2, self.theta3, self.phi)

    @property
    def feasible(self) -> bool:
        return not self.flagged

    def canonical_alpha(self) -> np.ndarray:
        return np.array([self.alpha[u] for u in self.perm])


@dataclass(frozen=True)
class RegimeBoundaries:
    gamma_c1: float
    gamma_c2: float

    def region(self) -> str:
        """Prior region of the equal-overlap phase diagram: 'a', 'b' or 'c'."""
        if self.gamma_c1 >= 1.0:
            return "a"
        if self.gamma_c2 >= 1.0:
            return "b"
        return "c"

    def regime_at(self, gamma: float) -> Regime:
        """Optimal regime for equal overlaps ``gamma`` (boundaries go to the lower regime)."""
        if self.gamma_c1 >= 1.0:
            return Regime.I
        if gamma <= self.gamma_c1:
            return Regime.II
        if gamma <= self.gamma_c2:
            return Regime.III
        return Regime.IV


def f_angle(r: float, s: float, t: float) -> float:
    """arccos sqrt(1 / (1 + sqrt(r/s) (1/t - 1))), an angle in [0, pi/2]."""
    if not (r >= 0):
        raise DomainError(f"f_angle needs r >= 0, got {r}")
    if not (s > 0):
        raise DomainError(f"f_angle needs s > 0, got {s}")
    if not (0 < t <= 1):
        raise DomainError(f"f_angle needs 0 < t <= 1, got {t}")
    c2 = 1.0 / (1.0 + math.sqrt(r / s) * (1.0 / t - 1.0))
    return math.acos(min(1.0, math.sqrt(c2)))


def critical_gammas(priors: Priors | Sequence[float]) -> RegimeBoundaries:
    """Equal-overlap regime switches; infinite when the two largest priors coincide."""
    p = priors.as_array() if isinstance(priors, Priors) else np.asarray(priors, float)
    p0, p1, p2 = np.sort(p)[::-1]
    denom = math.sqrt(p0) - math.sqrt(p1)
    if denom <= 0:
        return RegimeBoundaries(math.inf, math.inf)
    return RegimeBoundaries(math.sqrt(p2) / denom, math.sqrt(p1) / denom)


def phi_overlaps(angles) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """J01, J02, J12 for the Phi states built from ``(theta1, theta2, theta3, phi)``.

    Broadcasts over leading axes of ``angles`` (last axis of length 4).
    """
    angles = np.asarray(angles, dtype=float)
    t1, t2, t3, ph = np.moveaxis(angles, -1, 0)
    J01 = np.cos(t1)
    J02 = np.cos(t2)
    J12 = np.cos(t1) * np.cos(t2) + np.sin(t1) * np.sin(t2) * np.cos(t3) * np.exp(1j * ph)
    return J01, J02, J12


def squared_amplitudes(angles, gammas) -> np.ndarray:
    """``a_i = gamma_i |J_jk / (J_ij J_ki)|``, vectorized; ``inf`` where some J vanishes."""
    g0, g1, g2 = np.asarray(gammas, dtype=float)
    J01, J02, J12 = (np.abs(J) for J in phi_overlaps(angles))
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.stack([g0 * J12 / (J01 * J02), g1 * J02 / (J01 * J12), g2 * J01 / (J02 * J12)], -1)
    return np.where(np.isfinite(a), a, np.inf)


def alphas_from_phis(angles: Sequence[float], ensemble: Ensemble) -> np.ndarray:
    """Amplitudes (canonical order) fixed by the Phi angles and the overlaps."""
    J01, J02, J12 = phi_overlaps(angles)
    if min(abs(J01), abs(J02), abs(J12)) <= 1e-15:
        raise SingularOverlap(f"a failure-branch overlap vanishes at angles {tuple(angles)}")
    gammas = ensemble.gammas[list(ensemble.canonical_perm)]
    return np.sqrt(squared_amplitudes(angles, gammas))


def triangle_condition(ensemble: Ensemble) -> bool:
    p, G = ensemble.canonical_arrays()
    w = p * _gammas(G)
    return math.sqrt(w[0]) <= math.sqrt(w[1]) + math.sqrt(w[2])


def angles_from_overlaps(J: np.ndarray, coplanar: bool = False) -> tuple[float, float, float, float]:
    """Invert the Phi parametrization for a real positive overlap matrix J (phi = 0).

    With ``coplanar`` the caller asserts det J = 0, and theta3 is snapped to 0
    or pi; arccos near +-1 would otherwise leave it off by ~1e-8.
    """
    t1 = math.acos(float(np.clip(J[0, 1], -1.0, 1.0)))
    t2 = math.acos(float(np.clip(J[0, 2], -1.0, 1.0)))
    s = math.sin(t1) * math.sin(t2)
    if s < 1e-14:
        return (t1, t2, math.pi, 0.0)
    c3 = (J[1, 2] - math.cos(t1) * math.cos(t2)) / s
    if coplanar:
        return (t1, t2, 0.0 if c3 > 0 else math.pi, 0.0)
    return (t1, t2, math.acos(float(np.clip(c3, -1.0, 1.0))), 0.0)


# --- candidates -------------------------------------------------------------


def step1(ensemble: Ensemble) -> ProtocolParams:
    """Unconstrained optimum (ignores alpha <= 1); infeasible amplitudes are flagged."""
    p, G = _canonical(ensemble)
    w = p * _gammas(G)
    sw = np.sqrt(w)
    if sw[0] <= sw[1] + sw[2]:
        return _make(ensemble, (0.0, 0.0, 0.0, 0.0), Regime.I)
    upsilon = sw[2] / (sw[0] - sw[1])
    total = f_angle(w[0], w[1], upsilon)
    theta2 = f_angle(w[1], w[0], upsilon)
    return _make(ensemble, (total - theta2, theta2, math.pi, 0.0), Regime.II)


def step2_omit_one(ensemble: Ensemble, omit: int) -> ProtocolParams:
    """Optimum with canonical state ``omit`` pinned to alpha = 1."""
    p, G = _canonical(ensemble)
    gam = _gammas(G)
    k = int(omit)
    i, j = (m for m in range(3) if m != k)
    if k == 2 and gam[2] <= 1.0:
        w = p * gam
        total = f_angle(w[0], w[1], gam[2])
        theta2 = f_angle(w[1], w[0], gam[2])
        angles = (total - theta2, theta2, math.pi, 0.0)
    else:
        # pinning a_k = 1 leaves a 2x2 Schur complement [[b_i, c], [c, b_j]] >= 0;
        # p_i b_i + p_j b_j is smallest at b_i b_j = c**2
        c = abs(G[i, j] - G[i, k] * G[j, k])
        a = np.ones(3)
        a[i] = G[i, k] ** 2 + c * math.sqrt(p[j] / p[i])
        a[j] = G[j, k] ** 2 + c * math.sqrt(p[i] / p[j])
        angles = angles_from_overlaps(_overlaps_from_amplitudes(a, G), coplanar=True)
    return _make(ensemble, angles, Regime.III, omitted=(k,))


def step2_omit_two(ensemble: Ensemble, omit_pair: Sequence[int]) -> ProtocolParams:
    """Optimum with both canonical states in ``omit_pair`` pinned to alpha = 1."""
    p, G = _canonical(ensemble)
    j, k = sorted(int(m) for m in omit_pair)
    (i,) = (m for m in range(3) if m not in (j, k))
    if i == 0:
        gam = _gammas(G)
        g1, g2 = gam[1], gam[2]
        denom = g1 + g2 - 2 * g1 * g2
        t1 = math.acos(math.sqrt((1 - g1 * g2) * g1 / denom))
        t2 = math.acos(math.sqrt((1 - g1 * g2) * g2 / denom))
        a0 = gam[0] * denom / (1 - g1 * g2)
        J = _overlaps_from_amplitudes(np.array([a0, 1.0, 1.0]), G)
        angles = angles_from_overlaps(J, coplanar=True)
        angles = (t1, t2) + angles[2:]
    else:
        a = np.ones(3)
        a[i] = (G[i, j] ** 2 + G[i, k] ** 2 - 2 * G[i, j] * G[i, k] * G[j, k]) / (1 - G[j, k] ** 2)
        angles = angles_from_overlaps(_overlaps_from_amplitudes(a, G), coplanar=True)
    return _make(ensemble, angles, Regime.IV, omitted=(j, k))


def all_candidates(ensemble: Ensemble) -> list[ProtocolParams]:
    """Step-1 candidate plus every single and double omission."""
    out = [step1(ensemble)]
    out += [step2_omit_one(ensemble, k) for k in (2, 1, 0)]
    out += [step2_omit_two(ensemble, pair) for pair in ((1, 2), (0, 2), (0, 1))]
    return out


def optimize(ensemble: Ensemble) -> ProtocolParams:
    """Optimal protocol following the step 1 / step 2 decision tree."""
    first = step1(ensemble)
    if first.feasible:
        return first
    found = []
    # highest canonical index first so that ties favour omitting state 2
    for k in sorted(first.flagged, reverse=True):
        cand = step2_omit_one(ensemble, k)
        if cand.feasible:
            found.append(cand)
            continue
        for m in sorted(cand.flagged, reverse=True):
            cand4 = step2_omit_two(ensemble, (k, m))
            if cand4.feasible:
                found.append(cand4)
    if not found:
        # the double omission keeping the best remaining state is always feasible
        found = [c for c in all_candidates(ensemble) if c.feasible]
    best = found[0]
    for cand in found[1:]:
        if cand.p_success > best.p_success:
            best = cand
    return best


# --- helpers ----------------------------------------------------------------


def _canonical(ensemble: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    p, G = ensemble.canonical_arrays()
    if np.any(p <= 0):
        raise EnsembleError("the protocol needs strictly positive priors; drop states with p = 0")
    return p, G


def _gammas(G: np.ndarray) -> np.ndarray:
    return np.array([G[0, 1] * G[2, 0] / G[1, 2], G[1, 2] * G[0, 1] / G[2, 0], G[2, 0] * G[1, 2] / G[0, 1]])


def _overlaps_from_amplitudes(a: np.ndarray, G: np.ndarray) -> np.ndarray:
    alpha = np.sqrt(a)
    J = G / np.outer(alpha, alpha)
    np.fill_diagonal(J, 1.0)
    return J


def _make(ensemble: Ensemble, angles, regime: Regime, omitted: tuple[int, ...] = ()) -> ProtocolParams:
    p, G = _canonical(ensemble)
    a = squared_amplitudes(angles, _gammas(G))
    for k in omitted:
        a[k] = 1.0
    flagged = tuple(int(c) for c in range(3) if a[c] > 1.0 + FEASIBILITY_TOL)
    # rounding inside the feasibility slack is snapped onto the boundary
    a = np.where((a > 1.0) & (a <= 1.0 + FEASIBILITY_TOL), 1.0, a)
    perm = ensemble.canonical_perm
    alpha_user = [0.0, 0.0, 0.0]
    for c, u in enumerate(perm):
        alpha_user[u] = float(math.sqrt(a[c]))
    p_user = ensemble.p
    p_success = 1.0 - float(sum(p_user[u] * alpha_user[u] ** 2 for u in range(3)))
    return ProtocolParams(
        alpha=tuple(alpha_user),
        theta1=float(angles[0]),
        theta2=float(angles[1]),
        theta3=float(angles[2]),
        phi=float(angles[3]),
        regime=regime,
        perm=perm,
        p_success=p_success,
        omitted=tuple(omitted),
        flagged=flagged,
    )
