"""Symmetric-function and angle algebra on eigenvalue tuples.

Every function here accepts array-likes whose *last* axis holds the tuple
``(lambda_1, ..., lambda_n)``; leading axes are batch axes.  That lets the
same code evaluate one tuple, a sample of 10^5 tuples, or every point of a
grid field.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EigenTuple",
    "GammaK",
    "GammaTau",
    "Branch",
    "DichotomyResult",
    "YuanCheck",
    "sigma_all",
    "sigma_k",
    "sigma_omit",
    "theta_angle",
    "in_cone",
    "subsolution_margin",
    "yuan_check",
    "dichotomy",
    "dichotomy_branches",
    "delta0_search",
    "t0_from_bracket",
    "append_unit_eigenvalue_identity",
    "critical_form_parts",
    "critical_phase",
]


def critical_phase(n: int) -> float:
    """The critical phase (n - 2) * pi / 2."""
    return (n - 2) * math.pi / 2


@dataclass(frozen=True)
class EigenTuple:
    """Real eigenvalues of a Hermitian form relative to omega, sorted descending."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size < 1:
            raise ValueError("an eigenvalue tuple needs n >= 1 entries")
        if not np.all(np.isfinite(vals)):
            raise ValueError("eigenvalues must be finite")
        vals = -np.sort(-vals, kind="stable")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size

    def __repr__(self):
        return f"EigenTuple({np.array2string(self.values, precision=6)})"

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class GammaK:
    """The Garding cone Gamma_k = {sigma_1, ..., sigma_k > 0}."""

    k: int


@dataclass(frozen=True)
class GammaTau:
    """The angle cone Gamma^tau = {theta(lambda) > tau}."""

    tau: float


class Branch(enum.Enum):
    SUBSOLUTION = "subsolution"  # branch (i)
    SMALL_EIGENVALUE = "small_eigenvalue"  # branch (ii)
    NEITHER = "neither"


@dataclass(frozen=True)
class DichotomyResult:
    branch: Branch
    delta0: float
    t0: float


@dataclass(frozen=True)
class YuanCheck:
    """Outcome of checking the three eigenvalue conclusions for theta >= tau.

    When ``hypothesis`` is False the tuple did not satisfy theta >= tau and
    the three conclusion flags are meaningless (reported as False).
    """

    hypothesis: bool
    positive_and_dominant: bool
    weighted_sum: bool
    in_gamma_n_minus_1: bool

    @property
    def ok(self) -> bool:
        return self.hypothesis and self.positive_and_dominant and self.weighted_sum and self.in_gamma_n_minus_1


def _tuple(lam) -> np.ndarray:
    arr = np.asarray(lam)
    if arr.ndim == 0:
        raise ValueError("expected a tuple of eigenvalues, got a scalar")
    return arr


def sigma_all(lam) -> np.ndarray:
    """All elementary symmetric polynomials sigma_0..sigma_n, on the last axis.

    Multiplies out prod_i (1 + lambda_i x) one factor at a time; O(n^2) per
    tuple.  Complex input is allowed (used for products of lambda_j + i).
    """
    lam = _tuple(lam)
    n = lam.shape[-1]
    dtype = np.result_type(lam.dtype, float)
    e = np.zeros(lam.shape[:-1] + (n + 1,), dtype=dtype)
    e[..., 0] = 1.0
    for i in range(n):
        x = lam[..., i, None]
        e[..., 1 : i + 2] = e[..., 1 : i + 2] + x * e[..., 0 : i + 1]
    return e


def sigma_k(lam, k: int):
    """The k-th elementary symmetric polynomial; sigma_0 = 1."""
    lam = _tuple(lam)
    n = lam.shape[-1]
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")
    out = sigma_all(lam)[..., k]
    return out if out.ndim else out.item()


def sigma_omit(lam, k: int, j: int):
    """sigma_k of the tuple with entry j removed, written sigma_k(lambda|j)."""
    lam = np.delete(_tuple(lam), j, axis=-1)
    if k > lam.shape[-1]:
        return np.zeros(lam.shape[:-1]) if lam.ndim > 1 else 0.0
    return sigma_k(lam, k)


def theta_angle(lam):
    """Sum of arctangents of the entries, in (-n pi/2, n pi/2)."""
    lam = np.asarray(_tuple(lam), dtype=float)
    if not np.all(np.isfinite(lam)):
        raise ValueError("non-finite eigenvalues")
    out = np.arctan(lam).sum(axis=-1)
    return out if out.ndim else out.item()


def in_cone(lam, tag, slack: float = 0.0):
    """Cone membership with an explicit closure slack (>= 0)."""
    if slack < 0:
        raise ValueError("slack must be non-negative")
    lam = np.asarray(_tuple(lam), dtype=float)
    n = lam.shape[-1]
    if isinstance(tag, GammaK):
        if not 1 <= tag.k <= n:
            raise ValueError(f"Gamma_k needs 1 <= k <= n, got k={tag.k}, n={n}")
        e = sigma_all(lam)[..., 1 : tag.k + 1]
        out = np.all(e > -slack, axis=-1)
    elif isinstance(tag, GammaTau):
        lo, hi = critical_phase(n), n * math.pi / 2
        if not lo - 1e-15 <= tag.tau < hi:
            raise ValueError(f"tau={tag.tau} outside [(n-2)pi/2, n pi/2)")
        out = np.arctan(lam).sum(axis=-1) > tag.tau - slack
    else:
        raise ValueError(f"unknown cone tag {tag!r}")
    return out if out.ndim else bool(out)


def subsolution_margin(mu):
    """A(mu) = min_j sum_{i != j} arctan mu_i, taken over all n omissions."""
    mu = np.asarray(_tuple(mu), dtype=float)
    if mu.shape[-1] < 2:
        raise ValueError("subsolution margin needs n >= 2")
    at = np.arctan(mu)
    out = (at.sum(axis=-1)[..., None] - at).min(axis=-1)
    return out if out.ndim else out.item()


def yuan_check(lam, tau: float, tol: float = 1e-10):
    """Check the ordered-eigenvalue consequences of theta(lambda) >= tau.

    Conclusions: (1) lambda_{n-1} > 0 and lambda_{n-1} >= |lambda_n|;
    (2) lambda_1 + (n-1) lambda_n >= 0; (3) lambda in Gamma_{n-1}.
    Inequalities are relaxed by ``tol`` scaled with max(1, max|lambda|)
    (``tol * scale**m`` for sigma_m).  A batch returns a dict of bool arrays.
    """
    lam = np.asarray(_tuple(lam), dtype=float)
    n = lam.shape[-1]
    srt = -np.sort(-lam, axis=-1)
    scale = np.maximum(1.0, np.abs(srt).max(axis=-1))
    hyp = np.arctan(srt).sum(axis=-1) >= tau
    if n == 1:
        c1 = np.ones(srt.shape[:-1], dtype=bool)
        c2 = c1.copy()
    else:
        a, b = srt[..., n - 2], srt[..., n - 1]
        c1 = (a > -tol * scale) & (a >= np.abs(b) - tol * scale)
        c2 = srt[..., 0] + (n - 1) * b >= -tol * scale
    if n == 1:
        c3 = np.ones(srt.shape[:-1], dtype=bool)
    else:
        e = sigma_all(srt)[..., 1:n]
        powers = scale[..., None] ** np.arange(1, n)
        c3 = np.all(e >= -tol * powers, axis=-1)
    if lam.ndim == 1:
        h = bool(hyp)
        return YuanCheck(h, h and bool(c1), h and bool(c2), h and bool(c3))
    return {"hypothesis": hyp, "c1": c1 & hyp, "c2": c2 & hyp, "c3": c3 & hyp}


_BRANCH_CODES = (Branch.SUBSOLUTION, Branch.SMALL_EIGENVALUE, Branch.NEITHER)


def dichotomy_branches(mu, lam, delta0: float) -> np.ndarray:
    """Vectorised dichotomy: 0 = branch (i), 1 = branch (ii), 2 = neither.

    Sorted mu is paired with sorted lambda (both descending).
    """
    if delta0 <= 0:
        raise ValueError("delta0 must be positive")
    mu = -np.sort(-np.asarray(mu, dtype=float), axis=-1)
    lam = -np.sort(-np.asarray(lam, dtype=float), axis=-1)
    weights = 1.0 / (1.0 + lam**2)
    total = weights.sum(axis=-1)
    first = ((mu - lam) * weights).sum(axis=-1) >= delta0 * total
    second = weights.min(axis=-1) >= delta0 * total
    return np.where(first, 0, np.where(second, 1, 2))


def dichotomy(mu, lam, delta0: float, t0: float = 1e-2) -> DichotomyResult:
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    code = int(dichotomy_branches(mu, lam, delta0))
    return DichotomyResult(_BRANCH_CODES[code], float(delta0), float(t0))


def delta0_search(mu, lams, lo: float = 1e-12, hi: float = 1.0, points: int = 64):
    """Largest delta on a log grid for which no sample falls in neither branch.

    Failures are monotone in delta, so the grid is bisected.  Returns None
    when even the smallest grid value fails.
    """
    grid = np.logspace(math.log10(lo), math.log10(hi), points)

    def ok(i):
        return not np.any(dichotomy_branches(mu, lams, grid[i]) == 2)

    if not ok(0):
        return None
    if ok(points - 1):
        return float(grid[-1])
    good, bad = 0, points - 1
    while bad - good > 1:
        mid = (good + bad) // 2
        if ok(mid):
            good = mid
        else:
            bad = mid
    return float(grid[good])


def t0_from_bracket(A0: float, n: int, C: float) -> float:
    """t_0 = (A_0 - (n-3) pi/2) / (8 C), the smallness threshold for t."""
    if C <= 0:
        raise ValueError("C must be positive")
    gap = A0 - (n - 3) * math.pi / 2
    if gap <= 0:
        raise ValueError("A0 must exceed (n-3) pi/2")
    return gap / (8.0 * C)


def append_unit_eigenvalue_identity(lam, k: int):
    """(sigma_k(lambda, 1), sigma_k(lambda) + sigma_{k-1}(lambda)).

    The two agree: appending the eigenvalue 1 is the lift v -> v + |z_{n+1}|^2.
    """
    lam = np.asarray(_tuple(lam), dtype=float)
    n = lam.shape[-1]
    if not 0 <= k <= n + 1:
        raise ValueError(f"k={k} out of range for the lifted tuple (n={n})")
    lifted = np.concatenate([lam, np.ones(lam.shape[:-1] + (1,))], axis=-1)
    lhs = sigma_all(lifted)[..., k]
    e = sigma_all(lam)
    rhs = (e[..., k] if k <= n else 0.0) + (e[..., k - 1] if k >= 1 else 0.0)
    rhs = np.broadcast_to(rhs, lhs.shape)
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, np.array(rhs)


def critical_form_parts(lam):
    """(Re, Im) of prod_j (lambda_j + i) as alternating sigma sums.

    Re = sigma_n - sigma_{n-2} + sigma_{n-4} - ...,
    Im = sigma_{n-1} - sigma_{n-3} + ...
    """
    lam = np.asarray(_tuple(lam), dtype=float)
    n = lam.shape[-1]
    e = sigma_all(lam)
    re = np.zeros(lam.shape[:-1])
    im = np.zeros(lam.shape[:-1])
    for m, k in enumerate(range(n, -1, -2)):
        re = re + (-1) ** m * e[..., k]
    for m, k in enumerate(range(n - 1, -1, -2)):
        im = im + (-1) ** m * e[..., k]
    if re.ndim == 0:
        return float(re), float(im)
    return re, im
