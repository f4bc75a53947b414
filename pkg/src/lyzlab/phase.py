"""Central charge, principal argument and the phase of the t-family.

Z(t) = int det(chi + (t + i) I) dV on the flat torus.  Its principal
argument hat_theta(t) fixes the phase target_theta(t) = n pi/2 - hat_theta(t)
of the supercritical equation theta(lambda(chi + t I + i d dbar u)) = const.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cones import subsolution_margin
from .torus import HermitianField, ScalarField, hessian_values, integrate, pointwise_eigs

__all__ = [
    "PhaseSample",
    "BracketFit",
    "VanishingCentralCharge",
    "central_charge",
    "hat_theta",
    "wrap_to_pi",
    "bracket_fit",
    "bracket_check",
    "subsolution_verify",
    "intsub_value",
]

Z_FLOOR = 1e-12


class VanishingCentralCharge(ArithmeticError):
    """|Z(t)| is too small for its argument to mean anything."""


@dataclass(frozen=True)
class PhaseSample:
    t: float
    Z: complex
    hat_theta: float
    target_theta: float


@dataclass(frozen=True)
class BracketFit:
    """Result of searching C with pi - 2Ct < hat_theta(t) < pi - Ct.

    ``C_fit`` is None for an empty sample set (vacuous pass).  ``t0`` is the
    largest sample below which some single C brackets every sample.
    """

    C_fit: float | None
    t_range: tuple[float, float] | None
    passed: bool
    t0: float | None = None
    C_interval: tuple[float, float] | None = None


def wrap_to_pi(angle):
    """Map angles into (-pi, pi]."""
    a = np.asarray(angle, dtype=float)
    out = np.pi - np.mod(np.pi - a, 2 * np.pi)
    return out if out.ndim else float(out)


def central_charge(chi: HermitianField, t: float) -> complex:
    if t < 0:
        raise ValueError("t must be non-negative")
    n = chi.grid.n
    shifted = chi.values + (t + 1j) * np.eye(n)
    return complex(integrate(np.linalg.det(shifted), chi.grid))


def hat_theta(chi: HermitianField, t: float) -> PhaseSample:
    Z = central_charge(chi, t)
    if abs(Z) <= Z_FLOOR * chi.grid.volume:
        raise VanishingCentralCharge(f"|Z({t})| = {abs(Z):.3e} is below the floor")
    ht = wrap_to_pi(math.atan2(Z.imag, Z.real))  # -pi maps to pi
    n = chi.grid.n
    return PhaseSample(float(t), Z, ht, n * math.pi / 2 - ht)


def _distance_from_pi(ht) -> np.ndarray:
    """pi - hat_theta measured on the branch continuous through pi."""
    return -wrap_to_pi(np.asarray(ht, dtype=float) - math.pi)


def bracket_fit(ts, hat_thetas, C_lo: float = 1e-4, C_hi: float = 1e4, points: int = 200) -> BracketFit:
    """Search a log grid of C for pi - 2Ct < hat_theta(t) < pi - Ct."""
    ts = np.asarray(ts, dtype=float)
    if ts.size == 0:
        return BracketFit(None, None, True)
    order = np.argsort(ts)
    ts = ts[order]
    gap = _distance_from_pi(np.asarray(hat_thetas, dtype=float)[order])
    Cs = np.logspace(math.log10(C_lo), math.log10(C_hi), points)
    # holds[i, j]: bracket holds at sample j for C_i
    holds = (gap[None, :] > Cs[:, None] * ts[None, :]) & (gap[None, :] < 2 * Cs[:, None] * ts[None, :])
    # leading run of smallest samples satisfied, per C
    prefix = np.cumprod(holds, axis=1).sum(axis=1)
    best = int(prefix.max())
    t0 = float(ts[best - 1]) if best else None
    full = np.flatnonzero(prefix == ts.size)
    if full.size:
        lo, hi = float(Cs[full[0]]), float(Cs[full[-1]])
        return BracketFit(math.sqrt(lo * hi), (float(ts[0]), float(ts[-1])), True, t0, (lo, hi))
    C_best = float(Cs[int(np.argmax(prefix))]) if best else None
    return BracketFit(C_best, (float(ts[0]), float(ts[-1])), False, t0, None)


def bracket_check(chi: HermitianField, t_samples, tol: float = 1e-8) -> BracketFit:
    """Check the small-t bracket of hat_theta on a critically normalised chi."""
    at_zero = hat_theta(chi, 0.0).hat_theta
    if abs(_distance_from_pi(at_zero)) > tol:
        raise ValueError(f"hat_theta(0) = {at_zero!r} is not pi: chi is not critically normalised")
    ts = sorted(float(t) for t in t_samples)
    if any(t <= 0 for t in ts):
        raise ValueError("t samples must be positive")
    return bracket_fit(ts, [hat_theta(chi, t).hat_theta for t in ts])


def subsolution_verify(chi: HermitianField, u_bar: ScalarField | None, t: float, theta_t: float):
    """Pointwise min_j sum_{i != j} arctan lambda_i(chi_ubar + t I) > theta_t - pi/2.

    Returns (passed, worst_margin) with the margin measured against the
    required bound over the whole grid.
    """
    grid = chi.grid
    w = chi.values + t * np.eye(grid.n)
    if u_bar is not None:
        w = w + hessian_values(grid, u_bar.values)
    margin = subsolution_margin(pointwise_eigs(w)) - (theta_t - math.pi / 2)
    worst = float(margin.min())
    return worst > 0, worst


def intsub_value(chi: HermitianField) -> float:
    """Im int (d/dt) det(chi + (t + i) I) at t = 0.

    A positive multiple of Im int (chi + i omega)^{n-1} ^ omega; computed as
    det(A) tr(A^{-1}) with A = chi + i I.
    """
    n = chi.grid.n
    A = chi.values + 1j * np.eye(n)
    d = np.linalg.det(A) * np.trace(np.linalg.inv(A), axis1=-2, axis2=-1)
    return float(integrate(d, chi.grid).imag)
