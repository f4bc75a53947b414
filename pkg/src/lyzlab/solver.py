"""Damped Newton solver for theta(lambda(chi + t I + i d dbar u)) = c.

Unknowns are a mean-zero potential u and a free phase constant c.  Each
Newton step solves the bordered linear system

    L(du) - dc = -residual,   mean(du) = 0,

with L(v) = tr(F Hess v) and F = (I + w^2)^{-1}, by GMRES preconditioned with
the constant-coefficient operator built from mean(F).  A backtracking line
search keeps every accepted iterate on the supercritical branch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres

from .cones import critical_phase
from .torus import HermitianField, ScalarField, TorusGrid, gradient_values, hessian_values, real_derivative

__all__ = [
    "SolverOptions",
    "SolverState",
    "LinearizedCoefficients",
    "BranchSafeguardStall",
    "residual",
    "linear_coefficients",
    "apply_linearized",
    "newton_solve",
    "differentiate1_check",
    "monitors",
    "solution_field",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-9
    max_iter: int = 50
    slack: float = 1e-3
    armijo: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-12
    forcing_cap: float = 1e-4
    forcing_factor: float = 0.1
    krylov_restart: int = 60
    krylov_maxiter: int = 20


class BranchSafeguardStall(RuntimeError):
    """The line search could not find an admissible, decreasing step."""

    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


@dataclass
class SolverState:
    chi: HermitianField = field(repr=False)
    t: float
    u: ScalarField = field(repr=False)
    c: float
    w: HermitianField = field(repr=False)
    residual: ScalarField = field(repr=False)
    iterations: int = 0
    converged: bool = False
    history: list = field(default_factory=list)
    target: ScalarField | None = field(default=None, repr=False)

    @property
    def res_sup(self) -> float:
        return self.residual.sup()


@dataclass(frozen=True)
class LinearizedCoefficients:
    F: HermitianField


def _w_values(chi: HermitianField, u: np.ndarray, t: float) -> np.ndarray:
    grid = chi.grid
    return chi.values + t * np.eye(grid.n) + hessian_values(grid, u)


def _theta_of(w: np.ndarray):
    lam, vecs = np.linalg.eigh(w)
    return np.arctan(lam).sum(axis=-1), lam, vecs


def residual(chi: HermitianField, u: ScalarField, c: float, t: float, target: ScalarField | None = None) -> ScalarField:
    """theta(lambda(w)) - c (minus the target field in variable-target mode)."""
    theta, _, _ = _theta_of(_w_values(chi, u.values, t))
    r = theta - c
    if target is not None:
        r = r - target.values
    return ScalarField(chi.grid, r)


def linear_coefficients(w: HermitianField) -> LinearizedCoefficients:
    """F = (w^2 + I)^{-1} at every point (g = I)."""
    W = w.values
    n = w.grid.n
    F = np.linalg.inv(W @ W + np.eye(n))
    return LinearizedCoefficients(HermitianField(w.grid, F))


def _F_from_eigh(lam: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    return (vecs * (1.0 / (1.0 + lam**2))[..., None, :]) @ np.conj(np.swapaxes(vecs, -1, -2))


def _contract(grid: TorusGrid, F: np.ndarray, vh: np.ndarray) -> np.ndarray:
    """tr(F Hess v) from the Fourier transform vh of v."""
    out = np.zeros(grid.shape)
    for (a, b), sym in grid.hessian_symbols.items():
        h = sfft.ifftn(sym * vh)
        if a == b:
            out += F[..., a, a].real * h.real
        else:
            # F_ab H_ba + F_ba H_ab = 2 Re(F_ab conj(H_ab))
            out += 2.0 * (F[..., a, b] * np.conj(h)).real
    return out


def apply_linearized(F, v: ScalarField) -> ScalarField:
    """L(v) = sum F^{a bbar} v_{a bbar}, matrix-free."""
    Fh = F.F if isinstance(F, LinearizedCoefficients) else F
    if Fh.grid != v.grid:
        raise ValueError("coefficient field and v live on different grids")
    return ScalarField(v.grid, _contract(v.grid, Fh.values, sfft.fftn(v.values)))


def _preconditioner_symbol(grid: TorusGrid, Fbar: np.ndarray) -> np.ndarray:
    P = np.zeros(grid.shape)
    for (a, b), sym in grid.hessian_symbols.items():
        if a == b:
            P += Fbar[a, a].real * sym.real
        else:
            P += 2.0 * (Fbar[a, b] * np.conj(sym)).real
    P[(0,) * grid.ndim] = 1.0
    tiny = np.abs(P) < 1e-14
    P[tiny] = -1.0
    return P


def _bordered_operator(grid: TorusGrid, F: np.ndarray):
    shape = grid.shape

    def matvec(x):
        x = np.asarray(x, dtype=float).reshape(shape)
        m = x.mean()
        xh = sfft.fftn(x - m)
        return (_contract(grid, F, xh) + m).ravel()

    P = _preconditioner_symbol(grid, F.mean(axis=tuple(range(grid.ndim))))

    def precond(y):
        y = np.asarray(y, dtype=float).reshape(shape)
        return sfft.ifftn(sfft.fftn(y) / P).real.ravel()

    A = LinearOperator((grid.npts, grid.npts), matvec=matvec, dtype=float)
    M = LinearOperator((grid.npts, grid.npts), matvec=precond, dtype=float)
    return A, M


class _Evaluation:
    """theta field, eigen-data and residual at one (u, c)."""

    def __init__(self, chi, u, c, t, target):
        self.w = _w_values(chi, u, t)
        self.theta, self.lam, self.vecs = _theta_of(self.w)
        self.res = self.theta - c
        if target is not None:
            self.res = self.res - target
        self.norm = float(np.sqrt(np.mean(self.res**2)))
        self.sup = float(np.abs(self.res).max())


def _make_state(chi, t, u, c, ev, iterations, converged, history, target):
    grid = chi.grid
    return SolverState(
        chi=chi,
        t=t,
        u=ScalarField(grid, u),
        c=float(c),
        w=HermitianField(grid, ev.w),
        residual=ScalarField(grid, ev.res),
        iterations=iterations,
        converged=converged,
        history=list(history),
        target=None if target is None else ScalarField(grid, target),
    )


def newton_solve(
    chi: HermitianField,
    t: float,
    u0: ScalarField | None = None,
    opts: SolverOptions | None = None,
    target: ScalarField | None = None,
    c0: float | None = None,
) -> SolverState:
    """Solve for (u, c); ``target`` switches on the variable-target mode.

    Returns the final state; ``converged`` is False when max_iter ran out.
    Raises BranchSafeguardStall when the line search collapses.
    """
    opts = opts or SolverOptions()
    grid = chi.grid
    n = grid.n
    floor = critical_phase(n) + opts.slack
    u = np.zeros(grid.shape) if u0 is None else np.array(u0.values, dtype=float)
    u -= u.mean()
    tgt = None if target is None else np.asarray(target.values, dtype=float)

    ev = _Evaluation(chi, u, 0.0, t, tgt)
    if ev.theta.min() <= floor:
        raise ValueError(
            f"initial guess is off the supercritical branch: min theta = {ev.theta.min():.6f} <= {floor:.6f}"
        )
    c = float(ev.res.mean()) if c0 is None else float(c0)
    ev.res = ev.res - c
    ev.norm = float(np.sqrt(np.mean(ev.res**2)))
    ev.sup = float(np.abs(ev.res).max())
    history = [ev.sup]

    for it in range(opts.max_iter + 1):
        if ev.sup <= opts.tol:
            return _make_state(chi, t, u, c, ev, it, True, history, tgt)
        if it == opts.max_iter:
            break
        F = _F_from_eigh(ev.lam, ev.vecs)
        A, M = _bordered_operator(grid, F)
        rtol = min(opts.forcing_cap, opts.forcing_factor * ev.sup)
        x, info = gmres(
            A, -ev.res.ravel(), rtol=rtol, atol=0.0, restart=opts.krylov_restart,
            maxiter=opts.krylov_maxiter, M=M,
        )
        if info < 0:
            raise RuntimeError(f"GMRES breakdown (info={info})")
        x = x.reshape(grid.shape)
        m = x.mean()
        du, dc = x - m, -m

        step = 1.0
        while True:
            u_try = u + step * du
            u_try -= u_try.mean()
            c_try = c + step * dc
            trial = _Evaluation(chi, u_try, c_try, t, tgt)
            admissible = trial.theta.min() > floor
            if admissible and trial.norm <= (1.0 - opts.armijo * step) * ev.norm:
                break
            step *= opts.backtrack
            if step < opts.min_step:
                state = _make_state(chi, t, u, c, ev, it, False, history, tgt)
                raise BranchSafeguardStall(f"branch safeguard stall at iteration {it} (t={t})", state)
        u, c, ev = u_try, c_try, trial
        history.append(ev.sup)
        log.debug("t=%g it=%d step=%g sup|res|=%.3e", t, it + 1, step, ev.sup)

    return _make_state(chi, t, u, c, ev, opts.max_iter, False, history, tgt)


def differentiate1_check(state: SolverState) -> float:
    """sup_p |sum F^{a bbar} d_p w_{a bbar}| / (1 + sup |d w|) over the grid.

    d_p = (d/dx_p - i d/dy_p) / 2.  Vanishes for exact constant-phase solutions.
    """
    if not state.converged:
        raise ValueError("differentiate1_check needs a converged state")
    grid = state.w.grid
    n = grid.n
    W = state.w.values
    lam, vecs = np.linalg.eigh(W)
    F = _F_from_eigh(lam, vecs)
    worst, dw_sup = 0.0, 0.0
    for p in range(n):
        dx = real_derivative(grid, W, 2 * p)
        dy = real_derivative(grid, W, 2 * p + 1)
        dpw = 0.5 * (dx - 1j * dy)
        dw_sup = max(dw_sup, float(np.abs(dpw).max()))
        contraction = np.einsum("...ab,...ba->...", F, dpw)
        worst = max(worst, float(np.abs(contraction).max()))
    return worst / (1.0 + dw_sup)


def monitors(state_or_u) -> dict:
    """sup|u|, sup|du|, sup|i d dbar u| and the ratio sup|ddbar u| / (1 + sup|du|^2)."""
    u = state_or_u.u if isinstance(state_or_u, SolverState) else state_or_u
    grid = u.grid
    grad = gradient_values(grid, u.values)
    sup_grad = float(np.sqrt((np.abs(grad) ** 2).sum(axis=-1)).max())
    hess = np.linalg.eigvalsh(hessian_values(grid, u.values))
    sup_hess = float(np.abs(hess).max())
    return {
        "sup_u": float(np.abs(u.values).max()),
        "sup_grad": sup_grad,
        "sup_hess": sup_hess,
        "hmw_ratio": sup_hess / (1.0 + sup_grad**2),
    }


def solution_field(state: SolverState) -> HermitianField:
    """chi_u = chi + i d dbar u (without the t shift)."""
    grid = state.u.grid
    return HermitianField(grid, state.chi.values + hessian_values(grid, state.u.values))


def with_options(opts: SolverOptions, **changes) -> SolverOptions:
    return replace(opts, **changes)
