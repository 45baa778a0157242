"""Discrimination instance: three pure qutrit states with priors and real overlaps.

The three states are fixed (up to a unitary) by their Gram matrix, so an
instance is fully described by the priors ``(p0, p1, p2)`` and the pairwise
overlaps ``(g01, g12, g20)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PRIOR_TOL = 1e-12

# cyclic triples (i, j, k) used by the derived overlaps
CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


class EnsembleError(ValueError):
    """Base class for invalid discrimination instances."""


class NonNormalizedPriors(EnsembleError):
    pass


class OverlapOutOfRange(EnsembleError):
    pass


class LinearlyDependentStates(EnsembleError):
    pass


@dataclass(frozen=True)
class Priors:
    p0: float
    p1: float
    p2: float

    def __post_init__(self):
        values = self.as_tuple()
        if not all(np.isfinite(values)):
            raise NonNormalizedPriors(f"priors must be finite, got {values}")
        if min(values) < 0:
            raise NonNormalizedPriors(f"priors must be non-negative, got {values}")
        if abs(sum(values) - 1.0) > PRIOR_TOL:
            raise NonNormalizedPriors(
                f"priors must sum to 1 within {PRIOR_TOL:g}, got sum {sum(values)!r}"
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (float(self.p0), float(self.p1), float(self.p2))

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    @classmethod
    def from_seq(cls, values: Iterable[float], renormalize: bool = False) -> "Priors":
        values = [float(v) for v in values]
        if len(values) != 3:
            raise NonNormalizedPriors(f"expected three priors, got {len(values)}")
        if renormalize:
            total = sum(values)
            if total <= 0 or not np.isfinite(total):
                raise NonNormalizedPriors(f"cannot renormalize priors {values}")
            values = [v / total for v in values]
        return cls(*values)


@dataclass(frozen=True)
class OverlapSet:
    """Pairwise overlaps <psi_0|psi_1>, <psi_1|psi_2>, <psi_2|psi_0>."""

    g01: float
    g12: float
    g20: float

    def __post_init__(self):
        for name, g in zip(("g01", "g12", "g20"), self.as_tuple()):
            if not (np.isfinite(g) and 0.0 < g < 1.0):
                raise OverlapOutOfRange(f"{name} must lie in the open interval (0, 1), got {g!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (float(self.g01), float(self.g12), float(self.g20))

    def pair(self, i: int, j: int) -> float:
        """Overlap between states ``i != j``."""
        key = frozenset((i, j))
        lookup = {
            frozenset((0, 1)): self.g01,
            frozenset((1, 2)): self.g12,
            frozenset((0, 2)): self.g20,
        }
        return float(lookup[key])

    @classmethod
    def equal(cls, gamma: float) -> "OverlapSet":
        return cls(gamma, gamma, gamma)


@dataclass(frozen=True)
class DerivedOverlaps:
    """Cyclic ratios gamma_i = g_ij * g_ki / g_jk."""

    gamma0: float
    gamma1: float
    gamma2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma0, self.gamma1, self.gamma2])


def gram_matrix(overlaps: OverlapSet) -> np.ndarray:
    """Real symmetric Gram matrix with unit diagonal."""
    g01, g12, g20 = (float(g) for g in (overlaps.g01, overlaps.g12, overlaps.g20))
    return np.array(
        [
            [1.0, g01, g20],
            [g01, 1.0, g12],
            [g20, g12, 1.0],
        ]
    )


def derived_overlaps(overlaps: OverlapSet) -> DerivedOverlaps:
    G = gram_matrix(overlaps)
    return DerivedOverlaps(*(G[i, j] * G[k, i] / G[j, k] for i, j, k in CYCLIC))


def canonical_permutation(p: Sequence[float], gammas: Sequence[float]) -> tuple[int, int, int]:
    """Permutation ``perm`` with ``p[perm[c]] * gammas[perm[c]]`` non-increasing in c.

    Ties keep the input order (stable sort), which yields the identity when
    possible and otherwise the lexicographically smallest sorting permutation.
    """
    weights = np.asarray(p, dtype=float) * np.asarray(gammas, dtype=float)
    return tuple(int(i) for i in np.argsort(-weights, kind="stable"))


@dataclass(frozen=True)
class Ensemble:
    priors: Priors
    overlaps: OverlapSet
    canonical_perm: tuple[int, int, int]

    @property
    def p(self) -> np.ndarray:
        return self.priors.as_array()

    @property
    def gram(self) -> np.ndarray:
        return gram_matrix(self.overlaps)

    @property
    def gammas(self) -> np.ndarray:
        return derived_overlaps(self.overlaps).as_array()

    def canonical_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Priors and Gram matrix reordered so that p_c * gamma_c is non-increasing."""
        perm = list(self.canonical_perm)
        return self.p[perm], self.gram[np.ix_(perm, perm)]

    def permuted(self, perm: Sequence[int]) -> "Ensemble":
        """Relabel states: new state ``k`` is old state ``perm[k]``."""
        p = self.p[list(perm)]
        G = self.gram[np.ix_(list(perm), list(perm))]
        return validate_ensemble(
            Priors(*p), OverlapSet(G[0, 1], G[1, 2], G[2, 0])
        )

    def to_record(self) -> str:
        return format_record(self)


def validate_ensemble(
    priors: Priors | Sequence[float], overlaps: OverlapSet | Sequence[float]
) -> Ensemble:
    """Check the instance and attach its canonical ordering.

    Raises
    ------
    NonNormalizedPriors, OverlapOutOfRange, LinearlyDependentStates
    """
    if not isinstance(priors, Priors):
        priors = Priors.from_seq(priors)
    if not isinstance(overlaps, OverlapSet):
        overlaps = OverlapSet(*(float(g) for g in overlaps))

    eigs = np.linalg.eigvalsh(gram_matrix(overlaps))
    if eigs[0] <= 0:
        raise LinearlyDependentStates(
            f"Gram matrix is not positive definite (smallest eigenvalue {eigs[0]:.3e})"
        )
    gammas = derived_overlaps(overlaps).as_array()
    perm = canonical_permutation(priors.as_array(), gammas)
    return Ensemble(priors=priors, overlaps=overlaps, canonical_perm=perm)


def realize_states(ensemble: Ensemble) -> np.ndarray:
    """Explicit unit vectors with the prescribed overlaps.

    Returns a complex array of shape (3, 3) whose row ``i`` is |psi_i>, built
    from the Cholesky factor of the Gram matrix so that
    ``states.conj() @ states.T`` reproduces it.
    """
    try:
        L = np.linalg.cholesky(ensemble.gram)
    except np.linalg.LinAlgError as exc:
        raise LinearlyDependentStates("Gram matrix is not positive definite") from exc
    return L.astype(complex)


def parse_record(text: str, renormalize: bool = False) -> Ensemble:
    """Parse ``p0,p1,p2,g01,g12,g20``."""
    fields = [f.strip() for f in text.strip().split(",")]
    if len(fields) != 6:
        raise EnsembleError(f"expected 6 comma-separated fields, got {len(fields)}")
    try:
        values = [float(f) for f in fields]
    except ValueError as exc:
        raise EnsembleError(f"non-numeric field in record {text!r}") from exc
    priors = Priors.from_seq(values[:3], renormalize=renormalize)
    return validate_ensemble(priors, OverlapSet(*values[3:]))


def format_record(ensemble: Ensemble) -> str:
    values = ensemble.priors.as_tuple() + ensemble.overlaps.as_tuple()
    return ",".join(repr(float(v)) for v in values)
