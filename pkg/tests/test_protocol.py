import math

import numpy as np
import pytest
from hypothesis import given, settings

from aosd.ensemble import OverlapSet, Priors, validate_ensemble
from aosd.protocol import (
    DomainError,
    Regime,
    SingularOverlap,
    all_candidates,
    alphas_from_phis,
    critical_gammas,
    f_angle,
    optimize,
    step1,
    step2_omit_one,
    step2_omit_two,
    triangle_condition,
)

from conftest import REGION_A, REGION_B, REGION_C, equal, ensembles, random_ensembles

S = math.sqrt


# --- f --------------------------------------------------------------------------


def test_f_quarter_turn():
    assert f_angle(1, 1, 0.5) == pytest.approx(math.pi / 4, abs=1e-15)


@pytest.mark.parametrize("r, s", [(0, 1), (3, 0.5), (1e-9, 7)])
def test_f_at_unit_t_is_zero(r, s):
    assert f_angle(r, s, 1.0) == 0.0


def test_f_closed_form_value():
    assert f_angle(4, 1, 1 / 3) == pytest.approx(math.acos(S(1 / 5)), abs=1e-15)
    assert f_angle(4, 1, 1 / 3) == pytest.approx(1.107149, abs=1e-6)


@pytest.mark.parametrize("args", [(1, 1, 0), (1, 1, 1.5), (1, 0, 0.5), (-1, 1, 0.5)])
def test_f_domain(args):
    with pytest.raises(DomainError):
        f_angle(*args)


# --- triangle condition -----------------------------------------------------------


def test_triangle_symmetric():
    assert triangle_condition(equal((1 / 3, 1 / 3, 1 / 3), 0.4))


def test_triangle_region_b_fails():
    # with equal overlaps the condition is sqrt(p0) <= sqrt(p1) + sqrt(p2): 0.8718 > 0.6472
    assert not triangle_condition(equal(REGION_B, 0.3))


def test_triangle_region_a_holds():
    assert S(0.5) <= S(0.3) + S(0.2)
    assert triangle_condition(equal(REGION_A, 0.3))


# --- candidates -------------------------------------------------------------------


def test_step1_symmetric():
    r = step1(equal((1 / 3, 1 / 3, 1 / 3), 0.5))
    assert r.regime is Regime.I
    assert r.p_success == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(np.square(r.alpha), 0.5, atol=1e-15)


def test_step1_region_b_value():
    r = step1(equal(REGION_B, 0.3))
    p0, p1, p2 = REGION_B
    expected = 1 - 2 * (S(p0 * p1) + S(p0 * p2) - S(p1 * p2)) * 0.3
    assert r.regime is Regime.II
    assert r.p_success == pytest.approx(expected, abs=1e-12)
    assert r.p_success == pytest.approx(0.715129, abs=1e-6)


def test_step1_flags_infeasible_amplitude():
    r = step1(equal(REGION_B, 0.8))
    p0, p1, p2 = REGION_B
    a2 = 0.8 * (S(p0) - S(p1)) / S(p2)
    assert a2 == pytest.approx(1.698, abs=1e-3)
    assert 2 in r.flagged
    assert not r.feasible


def test_omit_one_region_b_value():
    r = step2_omit_one(equal(REGION_B, 0.8), 2)
    p0, p1, p2 = REGION_B
    expected = 1 - p2 - 2 * S(p0 * p1) * 0.8 - (S(p0) - S(p1)) ** 2 * 0.64
    assert r.p_success == pytest.approx(expected, abs=1e-12)
    assert r.p_success == pytest.approx(0.220841, abs=1e-6)
    assert r.alpha[2] == 1.0


def test_omit_one_beyond_second_threshold_flagged():
    r = step2_omit_one(equal(REGION_C, 0.7), 2)
    p0, p1, _ = REGION_C
    assert S(p1) - (S(p0) - S(p1)) * 0.7 < 0
    assert 1 in r.flagged


def test_omit_one_general_overlaps_matches_oracle():
    from aosd.oracle import numeric_optimize

    e = validate_ensemble((0.6, 0.25, 0.15), (0.8, 0.3, 0.7))
    first = step1(e)
    assert first.flagged
    oracle = numeric_optimize(e).p_success
    assert optimize(e).p_success == pytest.approx(oracle, abs=1e-6)
    for k in first.flagged:
        cand = step2_omit_one(e, k)
        if cand.feasible:
            assert cand.p_success <= oracle + 1e-9


def test_omit_two_region_c_value():
    r = step2_omit_two(equal(REGION_C, 0.8), (1, 2))
    expected = 1 - 0.16 - 2 * 0.84 * 0.64 / 1.8
    assert r.p_success == pytest.approx(expected, abs=1e-12)
    assert r.p_success == pytest.approx(0.242667, abs=1e-6)
    assert r.feasible


@pytest.mark.parametrize("g", [0.2, 0.5, 0.9])
def test_omit_two_reduces_to_equal_overlap_form(g):
    e = equal(REGION_C, g)
    r = step2_omit_two(e, (1, 2))
    p0 = REGION_C[0]
    assert r.canonical_alpha()[0] ** 2 == pytest.approx(2 * g * g / (g + 1) / g * g, abs=1e-12)
    assert r.p_success == pytest.approx(1 - (1 - p0) - 2 * p0 * g * g / (g + 1), abs=1e-12)


def test_region_iv_survivor_amplitude_bounded():
    for e in random_ensembles(3, 40):
        r = optimize(e)
        if r.regime is Regime.IV:
            assert max(r.alpha) <= 1.0


# --- optimize ---------------------------------------------------------------------


@pytest.mark.parametrize("g", np.linspace(0.02, 0.98, 25))
def test_region_a_is_one_minus_gamma(g):
    r = optimize(equal(REGION_A, g))
    assert r.regime is Regime.I
    assert r.p_success == pytest.approx(1 - g, abs=1e-12)


def test_region_c_middle_is_regime_three():
    from aosd.oracle import numeric_optimize

    e = equal(REGION_C, 0.5)
    r = optimize(e)
    assert r.regime is Regime.III
    assert numeric_optimize(e).p_success == pytest.approx(r.p_success, abs=1e-6)


def test_region_c_high_is_regime_four():
    r = optimize(equal(REGION_C, 0.8))
    assert r.regime is Regime.IV
    assert r.p_success == pytest.approx(0.242667, abs=1e-6)


def test_critical_gammas():
    a = critical_gammas(Priors(*REGION_A))
    assert a.gamma_c1 == pytest.approx(S(0.2) / (S(0.5) - S(0.3)), abs=1e-12)
    assert a.gamma_c1 == pytest.approx(2.805, abs=1e-3)
    b = critical_gammas(Priors(*REGION_B))
    assert b.gamma_c1 == pytest.approx(0.4710, abs=1e-4)
    assert b.gamma_c2 == pytest.approx(1.0533, abs=1e-4)
    assert b.region() == "b"
    c = critical_gammas(Priors(*REGION_C))
    assert c.region() == "c"
    sym = critical_gammas(Priors(1 / 3, 1 / 3, 1 / 3))
    assert sym.gamma_c1 == math.inf and sym.gamma_c2 == math.inf


# --- alphas_from_phis -------------------------------------------------------------


def test_alphas_zero_angles_are_gammas():
    e = validate_ensemble((0.5, 0.3, 0.2), (0.3, 0.6, 0.4))
    perm = list(e.canonical_perm)
    assert np.allclose(alphas_from_phis((0, 0, 0, 0), e) ** 2, e.gammas[perm], atol=1e-15)


def test_alphas_regime_two_match_closed_form():
    e = equal(REGION_B, 0.3)
    r = optimize(e)
    p0, p1, p2 = (S(p) for p in REGION_B)
    g = 0.3
    expected = [g * (p1 + p2) / p0, g * (p0 - p2) / p1, g * (p0 - p1) / p2]
    assert np.allclose(alphas_from_phis(r.angles, e) ** 2, expected, atol=1e-12)


def test_alphas_regime_four_formula():
    e = validate_ensemble((0.9, 0.06, 0.04), (0.5, 0.4, 0.45))
    r = optimize(e)
    assert r.regime is Regime.IV
    g = e.gammas[list(e.canonical_perm)]
    a = alphas_from_phis(r.angles, e) ** 2
    assert a[1] == pytest.approx(1, abs=1e-9) and a[2] == pytest.approx(1, abs=1e-9)
    assert a[0] == pytest.approx(g[0] * (g[1] + g[2] - 2 * g[1] * g[2]) / (1 - g[1] * g[2]), abs=1e-12)


def test_alphas_singular_overlap():
    with pytest.raises(SingularOverlap):
        alphas_from_phis((math.pi / 2, 0, 0, 0), equal(REGION_A, 0.3))


# --- properties -------------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(ensembles())
def test_optimum_feasible_and_consistent(e):
    r = optimize(e)
    a = np.array(r.alpha)
    assert np.all((a >= 0) & (a <= 1))
    assert r.p_success == pytest.approx(1 - e.p @ a**2, abs=1e-12)
    ones = int(np.sum(np.abs(a - 1) <= 1e-12))
    if r.regime is Regime.III:
        assert ones == 1
    if r.regime is Regime.IV:
        assert ones == 2


@settings(max_examples=150, deadline=None)
@given(ensembles())
def test_optimum_dominates_feasible_candidates(e):
    best = optimize(e).p_success
    for c in all_candidates(e):
        if c.feasible:
            assert best >= c.p_success - 1e-12


@settings(max_examples=100, deadline=None)
@given(ensembles())
def test_permutation_equivariance(e):
    r = optimize(e)
    for perm in ((1, 2, 0), (2, 1, 0)):
        rp = optimize(e.permuted(perm))
        assert rp.p_success == pytest.approx(r.p_success, abs=1e-12)
        assert np.allclose(np.array(rp.alpha), np.array(r.alpha)[list(perm)], atol=1e-9)


@pytest.mark.parametrize("priors", [REGION_A, REGION_B, REGION_C, (0.4, 0.35, 0.25)])
def test_monotone_in_gamma(priors):
    ps = [optimize(equal(priors, g)).p_success for g in np.linspace(0.01, 0.99, 99)]
    assert np.all(np.diff(ps) <= 1e-12)


@pytest.mark.parametrize("priors", [REGION_B, REGION_C])
def test_knowledge_advantage(priors):
    for g in np.linspace(0.01, 0.99, 99):
        assert optimize(equal(priors, g)).p_success - (1 - g) >= -1e-12


@pytest.mark.parametrize("priors", [REGION_B, REGION_C])
def test_continuity_at_switches(priors):
    b = critical_gammas(Priors(*priors))
    for gc in (b.gamma_c1, b.gamma_c2):
        if gc < 1 - 1e-5:
            lo = optimize(equal(priors, gc - 1e-6)).p_success
            hi = optimize(equal(priors, gc + 1e-6)).p_success
            assert abs(lo - hi) <= 1e-5


def two_state_priors(gap, p2=1e-6):
    """(p0, p1, p2) with sqrt(p0) - sqrt(p1) = gap."""
    # sqrt(p0) = (s + gap) / 2, sqrt(p1) = (s - gap) / 2 with p0 + p1 = 1 - p2
    s = S(2 * (1 - p2) - gap * gap)
    p0 = ((s + gap) / 2) ** 2
    return p0, 1 - p2 - p0, p2


@pytest.mark.parametrize("gap, g", [(2e-3, 0.1), (2e-3, 0.3), (2e-3, 0.45), (0.29, 0.003)])
def test_two_state_limit(gap, g):
    p0, p1, p2 = two_state_priors(gap)
    assert g < S(p2) / gap  # below the first switch the optimum is regime II
    r = optimize(validate_ensemble(Priors(p0, p1, p2), OverlapSet.equal(g)))
    assert r.regime is Regime.II
    assert r.p_success == pytest.approx(1 - 2 * S(p0 * p1) * g, abs=1e-4)


def test_vanishing_third_state_still_constrains():
    # past the first switch the third state is omitted, and its overlaps keep
    # the optimum a finite distance below the two-state value
    p2 = 1e-6
    p0, p1 = 0.7 * (1 - p2), 0.3 * (1 - p2)
    g = 0.3
    r = optimize(validate_ensemble(Priors(p0, p1, 1 - p0 - p1), OverlapSet.equal(g)))
    assert r.regime is Regime.III
    gap = (S(p0) - S(p1)) ** 2 * g * g
    assert r.p_success == pytest.approx(1 - p2 - 2 * S(p0 * p1) * g - gap, abs=1e-12)
