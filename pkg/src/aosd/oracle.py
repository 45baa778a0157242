"""Brute-force maximization of the success probability over the Phi angles.

Independent of ``protocol``: amplitudes are recomputed here from the overlap
constraint ``alpha_i alpha_j |J_ij| = g_ij`` in user labels, with no canonical
reordering and no regime logic.  A coarse grid over [0, 2 pi)^4 supplies
seeds spread out in amplitude space.  Each seed runs a penalized pattern
search, and COBYLA polishes both the seed and the search result onto the
alpha = 1 boundary where regimes III/IV live.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .ensemble import Ensemble

FEASIBILITY_SLACK = 1e-9
PENALTY = 100.0
N_SEEDS = 16
SEED_SPACING = 0.02
ACTIVE_TOL = 1e-6

# all non-zero moves in {-1, 0, 1}^4
_DIRECTIONS = np.array([d for d in itertools.product((-1, 0, 1), repeat=4) if any(d)], dtype=float)


class NoFeasiblePoint(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    p_success: float
    angles: tuple[float, float, float, float]
    alphas: tuple[float, float, float]  # user labels
    grid_resolution: int
    refined: bool

    @property
    def active(self) -> int:
        """Number of amplitudes pinned at alpha = 1."""
        return sum(a * a >= 1 - ACTIVE_TOL for a in self.alphas)


def amplitudes_squared(angles: np.ndarray, ensemble: Ensemble) -> np.ndarray:
    """alpha_i^2 in user labels for Phi angles given in user labels.

    The three Phi overlaps are J_01 = cos t1, J_02 = cos t2,
    J_12 = cos t1 cos t2 + sin t1 sin t2 cos t3 e^{i phi}; pairwise products
    alpha_i^2 alpha_j^2 = (g_ij / |J_ij|)^2 fix each alpha_i^2.
    """
    angles = np.asarray(angles, dtype=float)
    t1, t2, t3, ph = np.moveaxis(angles, -1, 0)
    j01 = np.abs(np.cos(t1))
    j02 = np.abs(np.cos(t2))
    j12 = np.abs(np.cos(t1) * np.cos(t2) + np.sin(t1) * np.sin(t2) * np.cos(t3) * np.exp(1j * ph))
    G = ensemble.gram
    with np.errstate(divide="ignore", invalid="ignore"):
        b01 = G[0, 1] / j01  # alpha_0 alpha_1
        b02 = G[0, 2] / j02
        b12 = G[1, 2] / j12
        a = np.stack([b01 * b02 / b12, b01 * b12 / b02, b02 * b12 / b01], axis=-1)
    return np.where(np.isfinite(a), a, np.inf)


def numeric_optimize(ensemble: Ensemble, grid_n: int = 24, refine: bool = True) -> OracleResult:
    """Best feasible point of P(theta) = 1 - sum_i p_i alpha_i^2.

    Raises
    ------
    NoFeasiblePoint
        when neither the grid nor the refinement found a point with all
        alpha_i^2 <= 1 + 1e-9.
    """
    if grid_n < 8:
        raise ValueError(f"grid_n must be at least 8, got {grid_n}")
    p = ensemble.p
    axis = np.arange(grid_n) * 2 * math.pi / grid_n
    grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 4)
    a = amplitudes_squared(grid, ensemble)
    P = 1 - a @ p
    feasible = np.all(a <= 1 + FEASIBILITY_SLACK, axis=1)

    best_x, best_P = None, -math.inf
    if feasible.any():
        # first maximum in lexicographic grid order
        k = int(np.argmax(np.where(feasible, P, -np.inf)))
        best_x, best_P = grid[k], float(P[k])

    if refine:
        for k in _seeds(a, p):
            x, val = _pattern_search(grid[k], ensemble, 2 * math.pi / grid_n)
            for cand in (x, _polish(x, ensemble), _polish(grid[k], ensemble)):
                if cand is None:
                    continue
                c_val = _feasible_value(cand, ensemble)
                if c_val is not None and c_val > best_P:
                    best_x, best_P = cand, c_val
            if val > best_P:
                best_x, best_P = x, val

    if best_x is None:
        raise NoFeasiblePoint(
            f"no feasible point found on a {grid_n}^4 grid"
            + ("" if refine else "; try refine=True")
        )
    alphas = np.sqrt(np.minimum(amplitudes_squared(best_x, ensemble), 1.0))
    return OracleResult(
        p_success=float(best_P),
        angles=tuple(float(v) for v in np.mod(best_x, 2 * math.pi)),
        alphas=tuple(float(v) for v in alphas),
        grid_resolution=grid_n,
        refined=refine,
    )


def classify(result: OracleResult) -> str:
    """Regime label implied by the active constraints at an oracle optimum."""
    n = result.active
    if n == 2:
        return "IV"
    if n == 1:
        return "III"
    t1, t2 = result.angles[:2]
    # all Phi parallel means the symmetric solution
    if abs(abs(math.cos(t1)) - 1) < 1e-6 and abs(abs(math.cos(t2)) - 1) < 1e-6:
        return "I"
    return "II"


def scan_feasible_regimes(ensemble: Ensemble, grid_n: int = 24) -> dict:
    """Active-constraint histogram over the refined seeds.

    Keys 0, 1, 2 count seeds ending with that many alpha = 1 constraints;
    ``"optimum"`` holds the count at the best point and ``"regime"`` its label.
    """
    p = ensemble.p
    axis = np.arange(grid_n) * 2 * math.pi / grid_n
    grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 4)
    hist: Counter = Counter()
    for k in _seeds(amplitudes_squared(grid, ensemble), p):
        x, _ = _pattern_search(grid[k], ensemble, 2 * math.pi / grid_n)
        polished = _polish(x, ensemble)
        if polished is not None and _feasible_value(polished, ensemble) is not None:
            x = polished
        a = amplitudes_squared(x, ensemble)
        if np.all(a <= 1 + FEASIBILITY_SLACK):
            hist[int(np.sum(a >= 1 - ACTIVE_TOL))] += 1
    result = numeric_optimize(ensemble, grid_n=grid_n)
    out = {n: hist.get(n, 0) for n in (0, 1, 2)}
    out["optimum"] = result.active
    out["regime"] = classify(result)
    return out


# --- local search -------------------------------------------------------------


def _penalized(a: np.ndarray, p: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        val = 1 - a @ p - PENALTY * np.sum(np.maximum(a - 1, 0), axis=-1)
    return np.where(np.isfinite(val), val, -np.inf)


def _seeds(a: np.ndarray, p: np.ndarray) -> list[int]:
    """Best grid points by penalized score, spread out in amplitude space.

    Ranking by score alone puts every seed in the basin of the parallel-Phi
    point, a local maximum; the optimum often sits on a thin sliver of the
    alpha = 1 boundary that the grid barely touches.  A point is skipped when
    its amplitude vector lies within SEED_SPACING (max norm) of a chosen seed.
    """
    score = _penalized(a, p)
    chosen: list[int] = []
    for k in np.argsort(-score, kind="stable"):
        if not np.isfinite(score[k]):
            break
        if any(np.max(np.abs(a[k] - a[j])) < SEED_SPACING for j in chosen):
            continue
        chosen.append(int(k))
        if len(chosen) == N_SEEDS:
            break
    return chosen


def _feasible_value(x: np.ndarray, ensemble: Ensemble):
    a = amplitudes_squared(x, ensemble)
    if np.all(a <= 1 + FEASIBILITY_SLACK):
        return float(1 - a @ ensemble.p)
    return None


def _pattern_search(x0: np.ndarray, ensemble: Ensemble, step: float, tol: float = 1e-4):
    """Compass search on the penalized objective, tracking the best feasible point."""
    p = ensemble.p
    x = np.array(x0, dtype=float)
    fx = float(_penalized(amplitudes_squared(x, ensemble), p))
    best_x, best_val = x, _feasible_value(x, ensemble)
    best_val = -math.inf if best_val is None else best_val
    while step > tol:
        cand = x + step * _DIRECTIONS
        a = amplitudes_squared(cand, ensemble)
        ok = np.all(a <= 1 + FEASIBILITY_SLACK, axis=1)
        if ok.any():
            vals = np.where(ok, 1 - a @ p, -np.inf)
            j = int(np.argmax(vals))
            if vals[j] > best_val:
                best_x, best_val = cand[j], float(vals[j])
        f = _penalized(a, p)
        j = int(np.argmax(f))
        if f[j] > fx:
            x, fx = cand[j], float(f[j])
        else:
            step /= 2
    return (best_x if np.isfinite(best_val) else x), best_val


def _amplitudes_scalar(t, g01: float, g02: float, g12: float) -> tuple[float, float, float]:
    """Single-point ``amplitudes_squared`` in plain floats (COBYLA calls it thousands of times)."""
    t1, t2, t3, ph = (float(v) for v in t)
    c1, c2 = math.cos(t1), math.cos(t2)
    j01, j02 = abs(c1), abs(c2)
    j12 = abs(c1 * c2 + math.sin(t1) * math.sin(t2) * math.cos(t3) * complex(math.cos(ph), math.sin(ph)))
    if j01 == 0 or j02 == 0 or j12 == 0:
        return math.inf, math.inf, math.inf
    b01, b02, b12 = g01 / j01, g02 / j02, g12 / j12
    return b01 * b02 / b12, b01 * b12 / b02, b02 * b12 / b01


def _polish(x0: np.ndarray, ensemble: Ensemble):
    p0, p1, p2 = (float(v) for v in ensemble.p)
    G = ensemble.gram
    g = (float(abs(G[0, 1])), float(abs(G[0, 2])), float(abs(G[1, 2])))

    def objective(t):
        a0, a1, a2 = _amplitudes_scalar(t, *g)
        val = p0 * a0 + p1 * a1 + p2 * a2
        return val if math.isfinite(val) else 1e6

    def slack(t):
        a = _amplitudes_scalar(t, *g)
        return [1 - v if math.isfinite(v) else -1e6 for v in a]

    try:
        res = minimize(
            objective,
            x0,
            method="COBYLA",
            constraints=[{"type": "ineq", "fun": slack}],
            options={"rhobeg": 0.1, "tol": 1e-12, "maxiter": 2000},
        )
    except (ValueError, FloatingPointError):
        return None
    return res.x
