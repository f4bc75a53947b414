"""March t down a geometric ladder, warm-starting each Newton solve."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cones import critical_form_parts, critical_phase
from .phase import bracket_fit, hat_theta, subsolution_verify, wrap_to_pi
from .solver import (
    BranchSafeguardStall,
    SolverOptions,
    SolverState,
    differentiate1_check,
    monitors,
    newton_solve,
    solution_field,
)
from .torus import HermitianField, ScalarField, pointwise_eigs

__all__ = [
    "Schedule",
    "TraceRow",
    "ContinuityTrace",
    "PathPreconditionError",
    "PathSolverError",
    "run_path",
    "critical_residual",
    "hmw_trace_check",
    "TRACE_HEADER",
]

log = logging.getLogger(__name__)

TRACE_HEADER = (
    "t",
    "hat_theta",
    "target_theta",
    "c_solved",
    "newton_iters",
    "res_sup",
    "sup_u",
    "sup_grad",
    "sup_hess",
    "hmw_ratio",
    "wall_time_s",
)


class PathPreconditionError(ValueError):
    pass


class PathSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Schedule:
    t0: float = 0.2
    ratio: float = 0.5
    t_min: float = 1e-3

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if self.t0 <= 0 or self.t_min <= 0:
            raise ValueError("t0 and t_min must be positive")

    def values(self) -> list[float]:
        """t0 * ratio^k while above t_min, closed off with t_min itself."""
        if self.t_min >= self.t0:
            return [self.t0]
        ts, t = [], self.t0
        while t > self.t_min * (1 + 1e-12):
            ts.append(t)
            t *= self.ratio
        ts.append(self.t_min)
        return ts


@dataclass
class TraceRow:
    t: float
    hat_theta: float
    target_theta: float
    c_solved: float
    newton_iters: int
    res_sup: float
    sup_u: float
    sup_grad: float
    sup_hess: float
    hmw_ratio: float
    wall_time_s: float
    converged: bool = True
    diff1: float | None = None

    def csv_fields(self) -> list:
        return [getattr(self, name) for name in TRACE_HEADER]


@dataclass
class ContinuityTrace:
    rows: list[TraceRow] = field(default_factory=list)
    final_state: SolverState | None = None
    stalled: bool = False

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in self.rows:
            writer.writerow(_fmt(v) for v in row.csv_fields())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ContinuityTrace":
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        rows = []
        for rec in reader:
            vals = dict(zip(header, rec))
            kw = {k: float(v) for k, v in vals.items()}
            kw["newton_iters"] = int(kw["newton_iters"])
            rows.append(TraceRow(**kw))
        return cls(rows)

    def bracket(self):
        return bracket_fit(self.column("t"), self.column("hat_theta"))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _solve_with_retry(chi, t, t_prev, u_prev, opts):
    """Solve at t; on a stall, step through the geometric midpoint once."""
    try:
        return newton_solve(chi, t, u_prev, opts), False
    except BranchSafeguardStall:
        if t_prev is None:
            raise
        t_mid = math.sqrt(t * t_prev)
        log.info("stall at t=%g; inserting t=%g", t, t_mid)
        mid = newton_solve(chi, t_mid, u_prev, opts)
        return newton_solve(chi, t, mid.u, opts), True


def run_path(
    chi: HermitianField,
    schedule: Schedule | None = None,
    opts: SolverOptions | None = None,
    u_bar: ScalarField | None = None,
    normalization_tol: float = 1e-6,
    check_diff1: bool = True,
) -> ContinuityTrace:
    schedule = schedule or Schedule()
    opts = opts or SolverOptions()
    ts = schedule.values()

    ht0 = hat_theta(chi, 0.0).hat_theta
    if abs(wrap_to_pi(ht0 - math.pi)) > normalization_tol:
        raise PathPreconditionError(f"hat_theta(0) = {ht0:.12f} is not pi")
    first = hat_theta(chi, ts[0])
    ok, margin = subsolution_verify(chi, u_bar, ts[0], first.target_theta)
    if not ok:
        raise PathPreconditionError(f"subsolution check failed at t={ts[0]} (worst margin {margin:.3e})")

    trace = ContinuityTrace()
    u_prev, t_prev = None, None
    for t in ts:
        start = time.perf_counter()
        ps = hat_theta(chi, t)
        try:
            state, _ = _solve_with_retry(chi, t, t_prev, u_prev, opts)
        except BranchSafeguardStall as exc:
            if t_prev is None:
                raise PathSolverError(f"first solve at t={t} failed: {exc}") from exc
            state = exc.state
            trace.stalled = True
        if t_prev is None and not state.converged:
            raise PathSolverError(
                f"first solve at t={t} did not converge: sup|res| history {state.history[-5:]}"
            )
        mon = monitors(state)
        diff1 = differentiate1_check(state) if (check_diff1 and state.converged) else None
        trace.rows.append(
            TraceRow(
                t=t,
                hat_theta=ps.hat_theta,
                target_theta=ps.target_theta,
                c_solved=state.c,
                newton_iters=state.iterations,
                res_sup=state.res_sup,
                wall_time_s=time.perf_counter() - start,
                converged=state.converged,
                diff1=diff1,
                **mon,
            )
        )
        trace.final_state = state
        log.info("t=%.4g iters=%d res=%.2e c-target=%.2e", t, state.iterations, state.res_sup, state.c - ps.target_theta)
        if trace.stalled or not state.converged:
            break
        u_prev, t_prev = state.u, t
    return trace


def critical_residual(state: SolverState):
    """(sup|theta(chi_u) - (n-2)pi/2|, sup|Im prod(lambda_j + i)|) at t = 0."""
    lam = pointwise_eigs(solution_field(state))
    n = lam.shape[-1]
    theta = np.arctan(lam).sum(axis=-1)
    _, im = critical_form_parts(lam)
    return float(np.abs(theta - critical_phase(n)).max()), float(np.abs(im).max())


def hmw_trace_check(trace: ContinuityTrace, bound: float | None = None):
    """(max hmw_ratio, pass) with default bound max(10 * first-row ratio, 1)."""
    if not trace.rows:
        raise ValueError("empty trace")
    ratios = trace.column("hmw_ratio")
    if bound is None:
        bound = max(10.0 * ratios[0], 1.0)
    top = float(ratios.max())
    return top, bool(np.all(np.isfinite(ratios)) and top <= bound)
