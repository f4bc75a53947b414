import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lyzlab.cones import (
    Branch,
    EigenTuple,
    GammaK,
    GammaTau,
    append_unit_eigenvalue_identity,
    critical_form_parts,
    critical_phase,
    delta0_search,
    dichotomy,
    in_cone,
    sigma_all,
    sigma_k,
    sigma_omit,
    subsolution_margin,
    t0_from_bracket,
    theta_angle,
    yuan_check,
)
from lyzlab.conesuite import sample_band

from oracles import prod_plus_i, sigma_enum, theta_sum

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def tuples(min_n=1, max_n=6):
    return st.integers(min_n, max_n).flatmap(lambda n: arrays(float, n, elements=finite))


# sigma_k -------------------------------------------------------------------


@pytest.mark.parametrize(
    "lam,k,expected",
    [((1, 1, 1), 2, 3.0), ((1, 1, 0), 2, 1.0), ((2, 1, 1, -0.5), 3, sigma_enum((2, 1, 1, -0.5), 3))],
)
def test_sigma_examples(lam, k, expected):
    assert sigma_k(lam, k) == pytest.approx(expected, abs=1e-14)


def test_sigma3_of_mixed_tuple_by_hand():
    # 2*1*1 + 2*1*(-.5)*2 + 1*1*(-.5) = 2 - 2 - 0.5
    assert sigma_k((2, 1, 1, -0.5), 3) == pytest.approx(-0.5, abs=1e-15)


def test_sigma_range_errors():
    with pytest.raises(ValueError):
        sigma_k((1, 2), 3)
    with pytest.raises(ValueError):
        sigma_k((1, 2), -1)
    assert sigma_k((3, 4), 0) == 1.0


@given(tuples())
def test_sigma_matches_subset_enumeration(lam):
    e = sigma_all(lam)
    for k in range(len(lam) + 1):
        ref = sigma_enum(lam, k)
        assert abs(e[k] - ref) <= 1e-12 * max(1.0, sum(abs(x) for x in lam) ** k)


@given(tuples(2, 5), st.integers(0, 4))
def test_sigma_omit_is_sigma_of_shorter_tuple(lam, j):
    j = j % len(lam)
    k = len(lam) - 1
    assert sigma_omit(lam, k, j) == pytest.approx(sigma_enum(np.delete(lam, j), k), abs=1e-9)


def test_sigma_batch_shape():
    lam = np.random.default_rng(0).normal(size=(7, 5, 3))
    assert sigma_all(lam).shape == (7, 5, 4)


# theta and cones -------------------------------------------------------------


@pytest.mark.parametrize("lam,expected", [((0, 0, 0), 0.0), ((1, 1, 0), math.pi / 2), ((1, 1, 1, 1), math.pi)])
def test_theta_examples(lam, expected):
    assert theta_angle(lam) == pytest.approx(expected, abs=1e-15)


@given(tuples())
def test_theta_matches_sum_of_arctangents(lam):
    assert theta_angle(lam) == pytest.approx(theta_sum(lam), abs=1e-13)


def test_theta_rejects_non_finite():
    with pytest.raises(ValueError):
        theta_angle((1.0, np.inf))


def test_cone_examples():
    assert in_cone((1, 1, 0), GammaK(2)) is True
    assert in_cone((2, 2, -1), GammaK(2)) is False
    assert in_cone((1, 1, 1), GammaTau(3 * math.pi / 4)) is False
    assert in_cone((1, 1, 1), GammaTau(3 * math.pi / 4), slack=1e-12) is True


def test_cone_tag_validation():
    with pytest.raises(ValueError):
        in_cone((1, 1), GammaK(3))
    with pytest.raises(ValueError):
        in_cone((1, 1, 1), GammaTau(0.1))
    with pytest.raises(ValueError):
        in_cone((1, 1), "gamma")
    with pytest.raises(ValueError):
        in_cone((1, 1), GammaK(1), slack=-1)


def test_eigen_tuple_sorts_and_freezes():
    t = EigenTuple([0.5, 3.0, -1.0])
    assert list(t.values) == [3.0, 0.5, -1.0]
    assert t.n == 3
    with pytest.raises(ValueError):
        t.values[0] = 1.0
    with pytest.raises(ValueError):
        EigenTuple([])
    with pytest.raises(ValueError):
        EigenTuple([1.0, np.nan])


@pytest.mark.parametrize("mu,expected", [((1, 1, 1), math.pi / 2), ((2, 1, 1), math.pi / 2), ((0, 0), 0.0)])
def test_subsolution_margin_examples(mu, expected):
    assert subsolution_margin(mu) == pytest.approx(expected, abs=1e-15)


def test_subsolution_margin_needs_two_entries():
    with pytest.raises(ValueError):
        subsolution_margin((1.0,))


@given(tuples(2, 6))
def test_subsolution_margin_omits_largest(lam):
    srt = sorted(lam, reverse=True)
    assert subsolution_margin(lam) == pytest.approx(theta_sum(srt[1:]), abs=1e-12)


# Yuan-type conclusions -------------------------------------------------------


def test_yuan_examples():
    assert yuan_check((1, 1, 0), math.pi / 2).ok
    lam = (3, 1, -0.2)
    assert theta_sum(lam) >= math.pi / 2
    assert yuan_check(lam, math.pi / 2).ok
    res = yuan_check((1, -1, 0), math.pi / 2)
    assert res.hypothesis is False and not res.ok


@settings(max_examples=300)
@given(st.integers(2, 5), st.data())
def test_yuan_conclusions_hold_above_critical_phase(n, data):
    tau = critical_phase(n) + data.draw(st.floats(0, 0.5))
    angles = data.draw(arrays(float, n, elements=st.floats(-1.5, 1.5)))
    lam = np.tan(angles)
    res = yuan_check(lam, tau)
    if res.hypothesis:
        assert res.ok


# dichotomy -------------------------------------------------------------------


def test_dichotomy_examples():
    r = dichotomy((1, 1, 1), (1, 1, math.tan(0.01)), 0.4)
    assert r.branch is Branch.SUBSOLUTION and r.delta0 == 0.4 and r.t0 == 1e-2
    lam = (2.0, 0.5, 0.3)
    assert dichotomy(lam, lam, 1e-3).branch is Branch.SMALL_EIGENVALUE
    assert dichotomy((1, 1, 1), (1e6, 1, 1), 1e-6).branch is Branch.NEITHER
    with pytest.raises(ValueError):
        dichotomy((1, 1, 1), (1, 1, 1), 0.0)


def test_delta0_search_finds_uniform_constant():
    rng = np.random.Generator(np.random.Philox(3))
    n = 3
    mu = np.full(n, math.tan(0.15 + 0.05))
    assert subsolution_margin(mu) > (n - 3) * math.pi / 2 + 0.1
    lams = sample_band(rng, n, critical_phase(n), critical_phase(n) + 0.05, 2000)
    th = theta_angle(lams)
    assert np.all((th > critical_phase(n)) & (th < critical_phase(n) + 0.05))
    d0 = delta0_search(mu, lams)
    assert d0 is not None and d0 > 0
    assert all(dichotomy(mu, lam, d0).branch is not Branch.NEITHER for lam in lams[:200])


def test_delta0_search_reports_failure():
    assert delta0_search((1, 1, 1), np.array([[1e8, 1, 1]])) is None


def test_t0_helper():
    assert t0_from_bracket(1.0, 3, 2.0) == pytest.approx(1.0 / 16)
    with pytest.raises(ValueError):
        t0_from_bracket(-2.0, 3, 1.0)
    with pytest.raises(ValueError):
        t0_from_bracket(1.0, 3, 0.0)


# lift identity and the critical form ----------------------------------------


@pytest.mark.parametrize("lam,k", [((1, 1), 2), ((0, 0, 0), 1), ((2, -1, 0.5), 3)])
def test_lift_identity_examples(lam, k):
    lhs, rhs = append_unit_eigenvalue_identity(lam, k)
    assert lhs == pytest.approx(sigma_enum(tuple(lam) + (1.0,), k), rel=1e-12)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_lift_identity_values():
    assert append_unit_eigenvalue_identity((1, 1), 2) == (3.0, 3.0)
    assert append_unit_eigenvalue_identity((0, 0, 0), 1) == (1.0, 1.0)
    with pytest.raises(ValueError):
        append_unit_eigenvalue_identity((1, 1), 4)


@given(tuples(1, 6))
def test_lift_identity_all_k(lam):
    for k in range(len(lam) + 2):
        lhs, rhs = append_unit_eigenvalue_identity(lam, k)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_critical_form_examples():
    assert critical_form_parts((1, 1, 0)) == pytest.approx((-2.0, 0.0))
    assert critical_form_parts((1, 1, 1, 1)) == pytest.approx((-4.0, 0.0))


@given(tuples(1, 6))
def test_critical_form_matches_complex_product(lam):
    re, im = critical_form_parts(lam)
    z = prod_plus_i(lam)
    scale = max(1.0, abs(z))
    assert abs(re - z.real) <= 1e-12 * scale and abs(im - z.imag) <= 1e-12 * scale


@given(arrays(float, 3, elements=st.floats(-3, 3)))
def test_critical_form_angle(lam):
    re, im = critical_form_parts(lam)
    n = len(lam)
    diff = math.remainder(math.atan2(im, re) - (n * math.pi / 2 - theta_sum(lam)), 2 * math.pi)
    assert abs(diff) < 1e-10
