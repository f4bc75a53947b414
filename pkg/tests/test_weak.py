import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyzlab.torus import ScalarField, make_grid, trig_field
from lyzlab.weak import (
    MollifierKernel,
    QuadraticTestFn,
    comparison_check,
    garding_margin,
    kernel_transform,
    keylemmavr_checks,
    lifted_mollify,
    mixed_sigma,
    mollify,
    pointwise_cone_check,
    radial_moment,
    sample_solution_quadratic,
    solution_last_eigenvalue,
    weaklab_run,
)

from oracles import kernel_moment_quad, mixed_form_bruteforce, planar_cos_convolution, sigma_enum


# kernel ----------------------------------------------------------------------


@pytest.mark.parametrize("p", [1, 3, 5, 7])
def test_radial_moments_match_adaptive_quadrature(p):
    assert radial_moment(p) == pytest.approx(kernel_moment_quad(p), rel=1e-11)


def test_radial_moments_are_converged_in_the_node_count():
    assert abs(radial_moment(3, 128) - radial_moment(3, 512)) < 1e-13


def test_second_moment_constant():
    k = MollifierKernel(1, 1.0)
    assert k.M == pytest.approx(kernel_moment_quad(3) / kernel_moment_quad(1), rel=1e-11)
    assert k.M == pytest.approx(0.26131120342055, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_kernel_has_unit_mass(n):
    k = MollifierKernel(n, 0.3)
    assert k.total_mass() == pytest.approx(1.0, rel=1e-13)
    assert k.m2 == pytest.approx(kernel_moment_quad(2 * n + 1) / kernel_moment_quad(2 * n - 1), rel=1e-11)


def test_kernel_validation():
    with pytest.raises(ValueError):
        MollifierKernel(0, 1.0)
    with pytest.raises(ValueError):
        MollifierKernel(1, 0.0)


@pytest.mark.parametrize("s", [0.0, 0.5, 2.0, 6.0])
def test_planar_transform_matches_direct_convolution(s):
    assert kernel_transform(1, s)[0] == pytest.approx(planar_cos_convolution(s), abs=1e-10)


def test_grid_mollification_of_cosine():
    grid = make_grid(1, 16)
    r = 0.9
    f = trig_field(grid, [((1, 0), 1.0, 0.0), ((0, 2), 0.5, 0.3)])
    got = mollify(f, r).values
    x, y = grid.coords()
    want = planar_cos_convolution(r) * np.cos(x) + 0.5 * planar_cos_convolution(2 * r) * np.cos(2 * y + 0.3)
    assert np.abs(got - want).max() < 1e-8
    with pytest.raises(ValueError):
        mollify(f, 0.5 * grid.spacing)
    with pytest.raises(TypeError):
        mollify(np.zeros(3), 1.0)


# quadratics --------------------------------------------------------------------


def random_quadratic(rng, n, with_s=True):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    S = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) if with_s else None
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return QuadraticTestFn(A + A.conj().T, b, 0.3, S)


def test_quadratic_gradient_matches_wirtinger_differences():
    rng = np.random.default_rng(0)
    v = random_quadratic(rng, 3)
    z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    h = 1e-6
    for a in range(3):
        e = np.zeros(3, dtype=complex)
        e[a] = 1.0
        dx = (v(z + h * e) - v(z - h * e)) / (2 * h)
        dy = (v(z + 1j * h * e) - v(z - 1j * h * e)) / (2 * h)
        assert v.gradient(z)[a] == pytest.approx(0.5 * (dx - 1j * dy), abs=1e-7)


def test_quadratic_hessian_matches_finite_differences():
    rng = np.random.default_rng(1)
    v = random_quadratic(rng, 2)
    z0 = np.zeros(2, dtype=complex)
    h = 1e-3
    H = np.zeros((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            ea, eb = np.eye(2)[a], np.eye(2)[b]

            def d2(p, q):
                return (v(z0 + h * (p + q)) - v(z0 + h * (p - q)) - v(z0 - h * (p - q)) + v(z0 - h * (p + q))) / (4 * h * h)

            re = 0.25 * (d2(ea, eb) + d2(1j * ea, 1j * eb))
            im = 0.25 * (d2(ea, 1j * eb) - d2(1j * ea, eb))
            H[a, b] = re + 1j * im
    assert np.abs(H - v.hessian()).max() < 1e-6


def test_quadratic_rejects_non_hermitian():
    with pytest.raises(ValueError):
        QuadraticTestFn([[1, 1], [0, 1]], [0, 0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_mollified_quadratic_matches_kernel_moments(n):
    rng = np.random.default_rng(n)
    v = random_quadratic(rng, n)
    r = 0.4
    mv = mollify(v, r)
    assert np.array_equal(mv.Q, v.Q)
    m2 = kernel_moment_quad(2 * n + 1) / kernel_moment_quad(2 * n - 1)
    assert mv.constant - v.constant == pytest.approx(r * r * np.trace(v.Q).real * m2 / n, rel=1e-10)


def test_lifted_mollification_splits_off_the_extra_variable():
    rng = np.random.default_rng(4)
    v = random_quadratic(rng, 2, with_s=False)
    r = 0.3
    base, extra = lifted_mollify(v, r)
    lifted = mollify(v.lifted(), r, MollifierKernel(3, r))
    assert extra == pytest.approx(r * r * MollifierKernel(1, r).M)
    z = np.array([[0.1 + 0.2j, -0.3j, 0.0]])
    assert lifted.Q.shape == (3, 3) and base(z[:, :2])[0] == pytest.approx(mollify(v, r)(z[:, :2])[0])


# cone checks -------------------------------------------------------------------


@pytest.mark.parametrize("lam_prime,x", [((1.0, 1.0), -1 / 3), ((1.0,), -0.5)])
def test_solution_last_eigenvalue_examples(lam_prime, x):
    assert solution_last_eigenvalue(lam_prime) == pytest.approx(x, abs=1e-15)
    lam = np.array(list(lam_prime) + [x])
    m = pointwise_cone_check(lam, eigenvalues=True)
    assert abs(m["sigma_sum"]) < 1e-15 and m["min_sigma"] >= 0


def test_cone_check_matrix_input_and_modes():
    m = pointwise_cone_check(np.diag([1.0, 1.0, -1 / 3]))
    assert m["sigma_sum"] == pytest.approx(0.0, abs=1e-15)
    assert m["min_sigma"] == pytest.approx(1 / 3, abs=1e-15)
    assert set(pointwise_cone_check(np.eye(2), mode="admissible")) == {"min_sigma"}
    with pytest.raises(ValueError):
        pointwise_cone_check(np.eye(2), mode="other")


@settings(max_examples=100)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_sampled_solutions_lie_on_the_level_set(n, seed):
    v = sample_solution_quadratic(seed, n)
    lam = v.eigenvalues
    assert abs(sigma_enum(lam, n - 1) + sigma_enum(lam, n)) < 1e-10 * max(1.0, np.abs(lam).max()) ** n


@pytest.mark.parametrize("n", [2, 3, 4])
def test_keylemma_margins_are_nonnegative(n):
    v = sample_solution_quadratic(100 + n, n)
    rep = keylemmavr_checks(v, 0.2, 0.5, points=512, seed=n, grid_variant=(n <= 3), grid_N=6)
    assert rep["ii"]["margin"] >= -1e-10
    assert rep["iii"]["points"] > 0 and rep["iii"]["margin"] >= -1e-10
    assert rep["iv"]["margin"] >= -1e-10
    if n <= 3:
        g = rep["ii_grid"]
        assert g["margin_before"] > 0 and g["margin_after"] > 0


def test_comparison_passes_for_perturbed_pairs():
    w = sample_solution_quadratic(7, 3)
    S = np.zeros((3, 3))
    S[0, 0] = 0.1
    v = QuadraticTestFn(w.Q, w.linear, w.constant + 0.1, S)
    rep = comparison_check(w, v, 1.0)
    assert rep and not rep.skipped and rep.interior_min_gap >= -1e-10


def test_comparison_negative_controls():
    w = sample_solution_quadratic(8, 3)
    # v below w on the sphere: hypothesis fails, nothing is concluded
    v = QuadraticTestFn(w.Q, w.linear, w.constant - 0.5)
    rep = comparison_check(w, v, 1.0)
    assert rep.skipped and not rep and "boundary" in rep.reason
    # a strictly convex v is not a supersolution
    rep = comparison_check(w, QuadraticTestFn(np.eye(3), np.zeros(3), 10.0), 1.0)
    assert rep.skipped and "supersolution" in rep.reason
    # w with a negative sigma_1 is rejected as a subsolution
    bad = QuadraticTestFn(-np.eye(3), np.zeros(3))
    assert comparison_check(bad, w, 1.0).skipped


# Garding -----------------------------------------------------------------------


def test_mixed_sigma_matches_bruteforce_polarisation():
    rng = np.random.default_rng(9)
    for k in (1, 2, 3):
        mats = []
        for _ in range(k):
            A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            mats.append(A + A.conj().T)
        assert float(mixed_sigma(mats)) == pytest.approx(mixed_form_bruteforce(mats), rel=1e-10, abs=1e-10)


def test_mixed_sigma_on_equal_arguments_is_sigma():
    A = np.diag([2.0, 1.0, -0.5])
    assert float(mixed_sigma([A, A, A])) == pytest.approx(sigma_enum([2, 1, -0.5], 3), abs=1e-13)
    with pytest.raises(ValueError):
        mixed_sigma([A, A], k=3)


@pytest.mark.parametrize("n,k", [(2, 2), (3, 2), (3, 3), (4, 3)])
def test_garding_margin_is_nonnegative(n, k):
    vals = garding_margin(np.random.Generator(np.random.Philox(n * 10 + k)), n, k, 200)
    assert vals.shape == (200,) and vals.min() >= -1e-12


def test_weaklab_run_small():
    out = weaklab_run(3, 500, seed=1, comparison_pairs=10)
    assert out["constraint_max_rel"] <= 1e-12 and out["lift_max_rel"] <= 1e-12
    assert out["comparison_passed"] == 10 and out["comparison_skipped"] == 0
    assert min(out["garding_min"].values()) >= -1e-12
    assert weaklab_run(3, 500, seed=1, comparison_pairs=10) == out
