import math

import numpy as np
import pytest

from lyzlab.solver import (
    BranchSafeguardStall,
    SolverOptions,
    apply_linearized,
    differentiate1_check,
    linear_coefficients,
    monitors,
    newton_solve,
    residual,
    solution_field,
    with_options,
)
from lyzlab.torus import HermitianField, ScalarField, build_chi, complex_hessian, make_grid, trig_field

from oracles import fd_complex_hessian, fd_dense_newton


def small_chi(N=8):
    grid = make_grid(2, N)
    rho = trig_field(grid, [((1, 0, 0, 0), 0.2, 0.0), ((0, 1, 1, 0), 0.1, 0.5)])
    return build_chi(grid, np.diag([1.0, 0.6]), rho), rho


def test_linearization_law_matches_eigen_formula():
    chi, _ = small_chi()
    F = linear_coefficients(HermitianField(chi.grid, chi.values + 0.1 * np.eye(2))).F.values
    lam = np.linalg.eigvalsh(chi.values + 0.1 * np.eye(2))
    assert np.allclose(np.linalg.eigvalsh(F), np.sort(1 / (1 + lam**2), axis=-1), atol=1e-13)


def test_linearized_operator_matches_directional_derivative():
    chi, _ = small_chi()
    grid = chi.grid
    u = trig_field(grid, [((1, 1, 0, 0), 0.05, 0.3)])
    v = trig_field(grid, [((0, 1, 0, 1), 1.0, 0.1), ((2, 0, 0, 0), 0.5, 0.0)])
    eps = 1e-6
    fd = (residual(chi, ScalarField(grid, u.values + eps * v.values), 0.0, 0.1).values
          - residual(chi, ScalarField(grid, u.values - eps * v.values), 0.0, 0.1).values) / (2 * eps)
    w = HermitianField(grid, chi.values + 0.1 * np.eye(2) + complex_hessian(u).values)
    Lv = apply_linearized(linear_coefficients(w), v).values
    assert np.abs(fd - Lv).max() <= 1e-7 * np.abs(Lv).max()


def test_closed_data_solves_to_minus_rho():
    chi, rho = small_chi()
    state = newton_solve(chi, 0.1, opts=SolverOptions(tol=1e-12))
    assert state.converged
    assert np.abs(state.u.values + rho.values).max() < 1e-10
    lam = np.array([1.1, 0.7])
    assert state.c == pytest.approx(np.arctan(lam).sum(), abs=1e-12)
    assert np.abs(solution_field(state).values - np.diag([1.0, 0.6])).max() < 1e-10


def test_rejects_guess_below_the_branch_floor():
    grid = make_grid(2, 4)
    chi = build_chi(grid, np.diag([-1.0, -1.0]))
    with pytest.raises(ValueError):
        newton_solve(chi, 0.0)


def test_max_iter_exhaustion_returns_unconverged():
    chi, _ = small_chi()
    state = newton_solve(chi, 0.1, opts=SolverOptions(max_iter=1, tol=1e-14))
    assert not state.converged and state.iterations == 1
    assert len(state.history) == 2 and state.history[1] < state.history[0]


def test_line_search_stall_is_reported():
    # an unsatisfiable sufficient-decrease constant forces the backtracking to collapse
    chi, _ = small_chi()
    with pytest.raises(BranchSafeguardStall) as info:
        newton_solve(chi, 0.1, opts=SolverOptions(armijo=1e6))
    assert info.value.state.iterations == 0


def test_diff1_vanishes_for_constant_phase_and_not_for_variable_target():
    chi, _ = small_chi()
    grid = chi.grid
    state = newton_solve(chi, 0.1, opts=SolverOptions(tol=1e-12))
    assert differentiate1_check(state) < 1e-10
    target = trig_field(grid, [((1, 0, 0, 0), 0.1, 0.0)])
    varied = newton_solve(chi, 0.1, opts=SolverOptions(tol=1e-12), target=target)
    assert varied.converged and differentiate1_check(varied) > 1e-3
    with pytest.raises(ValueError):
        differentiate1_check(newton_solve(chi, 0.1, opts=SolverOptions(max_iter=0, tol=1e-14)))


def test_monitors_for_single_cosine():
    grid = make_grid(1, 16)
    A = 0.3
    u = trig_field(grid, [((1, 0), A, 0.0)])
    m = monitors(u)
    assert m["sup_u"] == pytest.approx(A, rel=1e-12)
    assert m["sup_grad"] == pytest.approx(A / 2, rel=1e-12)
    assert m["sup_hess"] == pytest.approx(A / 4, rel=1e-12)
    assert m["hmw_ratio"] == pytest.approx((A / 4) / (1 + A**2 / 4), rel=1e-12)


def test_fd_solution_converges_to_spectral_at_second_order():
    # non-closed data on the 1-D torus, so the exact solution is not trivial
    errs = []
    for N in (16, 32):
        grid = make_grid(1, N)
        x, y = grid.coords()
        chi_vals = (1.0 + 0.3 * np.cos(x) + 0.2 * np.sin(y)).reshape(grid.shape + (1, 1)).astype(complex)
        chi = HermitianField(grid, chi_vals)
        spectral = newton_solve(chi, 0.1, opts=SolverOptions(tol=1e-13))
        u_fd, c_fd = fd_dense_newton(chi_vals, 1, N, 0.1)
        errs.append(abs(spectral.c - c_fd) + np.abs((spectral.u.values - spectral.u.mean()) - (u_fd - u_fd.mean())).max())
    assert errs[1] < errs[0]
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_with_options_replaces_fields():
    opts = with_options(SolverOptions(), tol=1e-6)
    assert opts.tol == 1e-6 and opts.max_iter == SolverOptions().max_iter
