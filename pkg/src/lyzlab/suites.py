"""End-to-end runs for the two corollaries: sigma_2 = 1 in dimension 3 and
sigma_3 = sigma_1 in dimension 4.

Both builders start from a constant Hermitian matrix, add i d dbar rho for a
seeded trigonometric rho, and rescale chi so the relevant integral identity
is exact (the integrands are homogeneous, so one scalar does it).

Form positivity is checked through eigenvalues.  For n = 3, chi ^ omega > 0
as a (2,2)-form means lambda_i + lambda_j > 0 for all i < j.  For n = 4,
3 chi^2 ^ omega - omega^3 > 0 as a (3,3)-form means sigma_2(lambda|j) > 1 for
every j: pairing with the decomposable (1,1)-form along an eigendirection
e_j leaves the 3 x 3 minor complementary to e_j.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import expm

from .cones import GammaK, critical_form_parts, critical_phase, in_cone, sigma_all, sigma_omit
from .continuity import Schedule, critical_residual, hmw_trace_check, run_path
from .phase import hat_theta, intsub_value
from .solver import SolverOptions, solution_field
from .torus import HermitianField, ScalarField, TorusGrid, build_chi, integrate, make_grid, pointwise_eigs, trig_field

__all__ = [
    "BuildError",
    "BuiltExample",
    "SuiteReport",
    "make_rng",
    "seeded_unitary",
    "seeded_rho",
    "build_3d_example",
    "build_4d_example",
    "conditions_3d",
    "conditions_4d",
    "necessity_margins_3d",
    "necessity_margins_4d",
    "verify_3d",
    "verify_4d",
]


class BuildError(ValueError):
    """A corollary hypothesis failed after scaling; the message names it."""

    def __init__(self, condition: str, detail: str = ""):
        super().__init__(f"condition '{condition}' failed {detail}".strip())
        self.condition = condition


@dataclass
class BuiltExample:
    chi: HermitianField = field(repr=False)
    scale: float
    seed: int
    perturbation_scale: float
    conditions: dict


@dataclass
class SuiteReport:
    dimension: int
    seed: int | None
    preconditions: dict
    critical_residuals: dict
    necessity: dict
    passed: bool
    path: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox), so streams are reproducible bit for bit."""
    return np.random.Generator(np.random.Philox(seed))


def seeded_unitary(rng: np.random.Generator, n: int, strength: float = 1.0) -> np.ndarray:
    """exp(i * strength * H) for a seeded Hermitian H; identity when strength = 0."""
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = 0.5 * (A + A.conj().T)
    return expm(1j * strength * H)


def seeded_rho(rng: np.random.Generator, grid: TorusGrid, scale: float, n_modes: int = 4) -> ScalarField:
    """Trigonometric potential with unit-size wavevectors and amplitudes ~ scale."""
    modes = []
    for _ in range(n_modes):
        k = np.zeros(grid.ndim, dtype=int)
        while not k.any():
            k = rng.integers(-1, 2, size=grid.ndim)
        amp = scale * rng.uniform(0.5, 1.0)
        phase = rng.uniform(0.0, 2 * math.pi)
        modes.append((tuple(int(x) for x in k), float(amp), float(phase)))
    return trig_field(grid, modes)


def _sigmas(chi: HermitianField) -> np.ndarray:
    return sigma_all(pointwise_eigs(chi))


def conditions_3d(chi: HermitianField) -> dict:
    grid = chi.grid
    lam = pointwise_eigs(chi)
    e = sigma_all(lam)
    vol = grid.volume
    int_s2 = integrate(e[..., 2], grid)
    int_s3 = integrate(e[..., 3], grid)
    int_s1 = integrate(e[..., 1], grid)
    pair_min = float((lam[..., -1] + lam[..., -2]).min())
    return {
        "integral_sigma2_equals_volume": abs(int_s2 - vol) <= 1e-12 * vol,
        "integral_sigma3_below_sigma1": int_s3 < int_s1,
        "pairwise_eigenvalue_sums_positive": pair_min > 0,
        "values": {
            "int_sigma2_rel_error": abs(int_s2 - vol) / vol,
            "int_sigma3": int_s3,
            "int_sigma1": int_s1,
            "min_pair_sum": pair_min,
        },
    }


def conditions_4d(chi: HermitianField) -> dict:
    grid = chi.grid
    lam = pointwise_eigs(chi)
    e = sigma_all(lam)
    int_s1 = integrate(e[..., 1], grid)
    int_s3 = integrate(e[..., 3], grid)
    re, _ = critical_form_parts(lam)
    int_re = integrate(re, grid)
    omit_min = min(float(np.asarray(sigma_omit(lam, 2, j)).min()) for j in range(4))
    scale = max(abs(int_s1), abs(int_s3), 1e-300)
    return {
        "integral_sigma3_equals_sigma1": abs(int_s3 - int_s1) <= 1e-12 * scale,
        "integral_sigma1_positive": int_s1 > 0,
        "re_central_charge_negative": int_re < 0,
        "sigma2_omit_exceeds_one": omit_min > 1,
        "values": {
            "int_sigma3_minus_sigma1_rel": abs(int_s3 - int_s1) / scale,
            "int_sigma1": int_s1,
            "int_re_central_charge": int_re,
            "min_sigma2_omit": omit_min,
        },
    }


def _require(conds: dict):
    for name, ok in conds.items():
        if name != "values" and not ok:
            raise BuildError(name, f"({conds['values']})")


def build_3d_example(seed: int, perturbation_scale: float, N: int = 8, n_modes: int = 4) -> BuiltExample:
    grid = make_grid(3, N)
    rng = make_rng(seed)
    C0 = np.diag([1.0, 1.0, 0.0]).astype(complex)
    rho = None
    if perturbation_scale > 0:
        U = seeded_unitary(rng, 3)
        C0 = U @ C0 @ U.conj().T
        rho = seeded_rho(rng, grid, perturbation_scale, n_modes)
    chi = build_chi(grid, 0.5 * (C0 + C0.conj().T), rho)
    int_s2 = integrate(_sigmas(chi)[..., 2], grid)
    if int_s2 <= 0:
        raise BuildError("integral_sigma2_equals_volume", "(integral of sigma_2 is not positive; cannot rescale)")
    s = math.sqrt(grid.volume / int_s2)
    chi = HermitianField(grid, s * chi.values)
    conds = conditions_3d(chi)
    _require(conds)
    return BuiltExample(chi, s, seed, perturbation_scale, conds)


def build_4d_example(
    seed: int,
    perturbation_scale: float,
    N: int = 4,
    base=(1.0, 1.0, 1.0, 1.0),
    n_modes: int = 4,
) -> BuiltExample:
    grid = make_grid(4, N)
    rng = make_rng(seed)
    C0 = np.diag(np.asarray(base, dtype=float)).astype(complex)
    rho = None
    if perturbation_scale > 0:
        U = seeded_unitary(rng, 4)
        C0 = U @ C0 @ U.conj().T
        rho = seeded_rho(rng, grid, perturbation_scale, n_modes)
    chi = build_chi(grid, 0.5 * (C0 + C0.conj().T), rho)
    e = _sigmas(chi)
    int_s1 = integrate(e[..., 1], grid)
    int_s3 = integrate(e[..., 3], grid)
    if int_s1 * int_s3 <= 0:
        raise BuildError("integral_sigma3_equals_sigma1", "(sign mismatch between int sigma_1 and int sigma_3)")
    s = math.sqrt(int_s1 / int_s3)
    chi = HermitianField(grid, s * chi.values)
    conds = conditions_4d(chi)
    _require(conds)
    return BuiltExample(chi, s, seed, perturbation_scale, conds)


def necessity_margins_3d(lam) -> dict:
    """Pointwise sigma_3 - sigma_1 sigma_2 / 9 (must be <= 0)."""
    e = sigma_all(np.asarray(lam, dtype=float))
    gap = e[..., 3] - e[..., 1] * e[..., 2] / 9.0
    return {"max_sigma3_minus_maclaurin": float(np.max(gap))}


def necessity_margins_4d(lam) -> dict:
    """sigma_2, sigma_2(lambda|smallest) and sigma_4 - sigma_2 + 1, extremes over points."""
    lam = -np.sort(-np.asarray(lam, dtype=float), axis=-1)
    e = sigma_all(lam)
    omit_small = sigma_omit(lam, 2, lam.shape[-1] - 1)
    ratio = np.where(e[..., 1] != 0, 6.0 * e[..., 3] / np.where(e[..., 1] != 0, e[..., 1], 1.0), np.inf)
    return {
        "min_sigma2": float(np.min(e[..., 2])),
        "min_sigma2_omit_smallest": float(np.min(omit_small)),
        "max_sigma4_minus_sigma2_plus_1": float(np.max(e[..., 4] - e[..., 2] + 1.0)),
        "min_maclaurin_gap": float(np.min(e[..., 2] - ratio)),
    }


def _path_summary(chi, trace) -> dict:
    final = trace.final_state
    ts = trace.column("t")
    fit = trace.bracket()
    gauge = np.abs(trace.column("c_solved") - trace.column("target_theta"))
    max_ratio, hmw_ok = hmw_trace_check(trace)
    diffs = [r.diff1 for r in trace.rows if r.diff1 is not None]
    return {
        "rows": len(trace.rows),
        "all_converged": all(r.converged for r in trace.rows) and not trace.stalled,
        "t_final": float(ts[-1]) if ts.size else None,
        "bracket_pass": fit.passed,
        "bracket_C": fit.C_fit,
        "bracket_C_interval": list(fit.C_interval) if fit.C_interval else None,
        "max_gauge_gap": float(gauge.max()) if gauge.size else None,
        "hmw_max_ratio": max_ratio,
        "hmw_pass": hmw_ok,
        "max_diff1": max(diffs) if diffs else None,
        "newton_iters": [int(r.newton_iters) for r in trace.rows],
        "intsub": intsub_value(chi),
        "final_c": final.c if final else None,
    }


def _strip(conds: dict) -> dict:
    return {k: bool(v) for k, v in conds.items() if k != "values"}


def verify_3d(
    chi: HermitianField,
    schedule: Schedule | None = None,
    opts: SolverOptions | None = None,
    tol_sigma: float = 5e-3,
    seed: int | None = None,
    return_trace: bool = False,
):
    conds = conditions_3d(chi)
    pre = _strip(conds)
    tolerances = {"sigma2": tol_sigma, "necessity": 1e-10}
    if not all(pre.values()):
        report = SuiteReport(3, seed, pre, {}, {"precondition_values": conds["values"]}, False, {}, tolerances)
        return (report, None) if return_trace else report
    trace = run_path(chi, schedule or Schedule(0.2, 0.5, 1e-3), opts)
    state = trace.final_state
    chi_u = solution_field(state)
    lam = pointwise_eigs(chi_u)
    e = sigma_all(lam)
    grid = chi.grid
    theta_res, sigma_res = critical_residual(state)
    sigma2_err = float(np.abs(e[..., 2] - 1.0).max())
    necessity = necessity_margins_3d(lam)
    necessity["int_sigma3"] = integrate(e[..., 3], grid)
    necessity["int_sigma1"] = integrate(e[..., 1], grid)
    gamma2 = bool(np.all(in_cone(lam, GammaK(2))))
    path = _path_summary(chi, trace)
    crit = {"theta_form": theta_res, "sigma_form": sigma_res, "sup_sigma2_minus_1": sigma2_err, "in_gamma2": gamma2}
    passed = (
        path["all_converged"]
        and sigma2_err <= tol_sigma
        and gamma2
        and necessity["max_sigma3_minus_maclaurin"] <= 1e-10
        and necessity["int_sigma3"] < necessity["int_sigma1"]
    )
    report = SuiteReport(3, seed, pre, crit, necessity, bool(passed), path, tolerances)
    return (report, trace) if return_trace else report


def verify_4d(
    chi: HermitianField,
    schedule: Schedule | None = None,
    opts: SolverOptions | None = None,
    tol_sigma: float = 1e-2,
    seed: int | None = None,
    return_trace: bool = False,
):
    conds = conditions_4d(chi)
    pre = _strip(conds)
    tolerances = {"sigma3_minus_sigma1": tol_sigma, "necessity": 1e-8}
    if not all(pre.values()):
        report = SuiteReport(4, seed, pre, {}, {"precondition_values": conds["values"]}, False, {}, tolerances)
        return (report, None) if return_trace else report
    trace = run_path(chi, schedule or Schedule(0.2, 0.5, 2e-3), opts)
    state = trace.final_state
    chi_u = solution_field(state)
    lam = pointwise_eigs(chi_u)
    e = sigma_all(lam)
    theta_res, sigma_res = critical_residual(state)
    quotient_err = float(np.abs(e[..., 3] - e[..., 1]).max())
    gamma3 = bool(np.all(in_cone(lam, GammaK(3))))
    necessity = necessity_margins_4d(lam)
    recheck = conditions_4d(chi_u)["values"]
    necessity.update({f"solution_{k}": v for k, v in recheck.items() if k != "min_sigma2_omit"})
    path = _path_summary(chi, trace)
    crit = {"theta_form": theta_res, "sigma_form": sigma_res, "sup_sigma3_minus_sigma1": quotient_err, "in_gamma3": gamma3}
    passed = (
        path["all_converged"]
        and quotient_err <= tol_sigma
        and gamma3
        and necessity["min_sigma2"] >= 6 - 1e-8
        and necessity["min_sigma2_omit_smallest"] >= 3 - 1e-8
        and necessity["max_sigma4_minus_sigma2_plus_1"] <= -2 + 1e-8
        and necessity["solution_int_sigma1"] > 0
        and necessity["solution_int_re_central_charge"] < 0
    )
    report = SuiteReport(4, seed, pre, crit, necessity, bool(passed), path, tolerances)
    return (report, trace) if return_trace else report
