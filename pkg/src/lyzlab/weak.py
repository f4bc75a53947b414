"""Pointwise checkers for weak (sub)solutions of sigma_{n-1} + sigma_n = 0.

Test functions are Hermitian quadratics on C^n,

    v(z) = z^H Q z + 2 Re(b^H z) + c + Re(z^T S z),

where the last (pluriharmonic) term leaves the complex Hessian alone.  With
the convention v_{a bbar} = d^2 v / dz_a dzbar_b the Hessian is Q^T, which
has the spectrum of Q; all cone margins are spectral, so Q is used directly.

The mollifier is the standard bump C_n exp(1/(|y|^2 - 1)) on the unit ball of
C^n = R^{2n}, normalised against Lebesgue measure.  Its radial integrals are
done by Gauss-Legendre in the radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations

import numpy as np
import scipy.fft as sfft
from scipy.special import gamma, jv, roots_legendre

from .cones import sigma_all
from .torus import ScalarField, TorusGrid

__all__ = [
    "MollifierKernel",
    "QuadraticTestFn",
    "radial_moment",
    "kernel_transform",
    "mollify",
    "lifted_mollify",
    "pointwise_cone_check",
    "solution_last_eigenvalue",
    "sample_solution_quadratic",
    "keylemmavr_checks",
    "comparison_check",
    "ComparisonReport",
    "mixed_sigma",
    "garding_margin",
    "weaklab_run",
]

RADIAL_NODES = 256


def _bump(rho):
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    inside = rho < 1
    out[inside] = np.exp(1.0 / (rho[inside] ** 2 - 1.0))
    return out


@lru_cache(maxsize=None)
def _gl(nodes: int):
    x, w = roots_legendre(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def radial_moment(p: float, nodes: int = RADIAL_NODES) -> float:
    """int_0^1 rho^p exp(1/(rho^2 - 1)) d rho."""
    x, w = _gl(nodes)
    return float(np.sum(w * x**p * _bump(x)))


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True)
class MollifierKernel:
    """Bump kernel on C^n scaled to radius r.

    ``C_n`` normalises the unscaled bump; ``M`` is the second moment of the
    one-variable kernel and ``m2`` the second moment int |y|^2 eta on C^n.
    """

    n: int
    radius: float
    nodes: int = RADIAL_NODES
    C_n: float = field(init=False)
    M: float = field(init=False)
    m2: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        d = 2 * self.n
        base = radial_moment(d - 1, self.nodes)
        object.__setattr__(self, "C_n", 1.0 / (_sphere_area(d) * base))
        object.__setattr__(self, "m2", radial_moment(d + 1, self.nodes) / base)
        object.__setattr__(self, "M", radial_moment(3, self.nodes) / radial_moment(1, self.nodes))

    def __call__(self, y) -> np.ndarray:
        """Unscaled density eta(y) at points y of R^{2n} (last axis)."""
        rho = np.linalg.norm(np.asarray(y, dtype=float), axis=-1)
        return self.C_n * _bump(rho)

    def total_mass(self) -> float:
        return self.C_n * _sphere_area(2 * self.n) * radial_moment(2 * self.n - 1, self.nodes)


def kernel_transform(n: int, s, nodes: int = RADIAL_NODES) -> np.ndarray:
    """Fourier transform of the normalised bump on R^{2n} at |xi| = s."""
    d = 2 * n
    nu = d / 2 - 1
    s = np.atleast_1d(np.asarray(s, dtype=float))
    x, w = _gl(nodes)
    arg = s[:, None] * x[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        omega = gamma(nu + 1) * (2.0 / arg) ** nu * jv(nu, arg)
    omega = np.where(arg == 0, 1.0, omega)
    weights = w * x ** (d - 1) * _bump(x)
    return (omega @ weights) / weights.sum()


@dataclass(frozen=True)
class QuadraticTestFn:
    Q: np.ndarray
    linear: np.ndarray
    constant: float = 0.0
    pluriharmonic: np.ndarray | None = None

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=complex)
        n = Q.shape[0]
        if Q.shape != (n, n) or np.abs(Q - Q.conj().T).max() > 1e-12 * max(1.0, np.abs(Q).max()):
            raise ValueError("Q must be a square Hermitian matrix")
        Q = 0.5 * (Q + Q.conj().T)
        b = np.asarray(self.linear, dtype=complex).reshape(n)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "linear", b)
        object.__setattr__(self, "constant", float(self.constant))
        if self.pluriharmonic is not None:
            S = np.asarray(self.pluriharmonic, dtype=complex)
            object.__setattr__(self, "pluriharmonic", 0.5 * (S + S.T))

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.Q)[::-1]

    def hessian(self) -> np.ndarray:
        return self.Q.T

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        quad = np.einsum("...a,ab,...b->...", z.conj(), self.Q, z).real
        out = quad + 2.0 * (z @ self.linear.conj()).real + self.constant
        if self.pluriharmonic is not None:
            out = out + np.einsum("...a,ab,...b->...", z, self.pluriharmonic, z).real
        return out

    def gradient(self, z) -> np.ndarray:
        """dv/dz_a at each point."""
        z = np.asarray(z, dtype=complex)
        g = z.conj() @ self.Q + self.linear.conj()
        if self.pluriharmonic is not None:
            g = g + z @ self.pluriharmonic
        return g

    def lifted(self) -> "QuadraticTestFn":
        """v + |z_{n+1}|^2 on C^{n+1}."""
        n = self.n
        Q = np.zeros((n + 1, n + 1), dtype=complex)
        Q[:n, :n] = self.Q
        Q[n, n] = 1.0
        S = None
        if self.pluriharmonic is not None:
            S = np.zeros((n + 1, n + 1), dtype=complex)
            S[:n, :n] = self.pluriharmonic
        return QuadraticTestFn(Q, np.append(self.linear, 0.0), self.constant, S)


def mollify(f, r: float, kernel: MollifierKernel | None = None):
    """[f]_r for a QuadraticTestFn (closed form) or a torus ScalarField (spectral)."""
    if not r > 0:
        raise ValueError("mollification radius must be positive")
    if isinstance(f, QuadraticTestFn):
        k = kernel or MollifierKernel(f.n, r)
        # odd moments vanish; E[y_a conj(y_b)] = delta_ab m2 / n; E[y_a y_b] = 0
        shift = r * r * float(np.trace(f.Q).real) * k.m2 / f.n
        return replace(f, constant=f.constant + shift)
    if isinstance(f, ScalarField):
        grid = f.grid
        if r < 2 * grid.spacing:
            raise ValueError(f"radius {r} is below two grid spacings ({2 * grid.spacing:.4g})")
        return ScalarField(grid, sfft.ifftn(_grid_multiplier(grid, r) * sfft.fftn(f.values)).real)
    raise TypeError(f"cannot mollify {type(f).__name__}")


def _grid_multiplier(grid: TorusGrid, r: float) -> np.ndarray:
    k2 = np.zeros(grid.shape)
    for a in range(grid.ndim):
        k = grid.wavenumber(a, odd=False)
        k2 = k2 + k * k
    s = r * np.sqrt(k2)
    uniq, inv = np.unique(s, return_inverse=True)
    return kernel_transform(grid.n, uniq)[inv].reshape(grid.shape)


def lifted_mollify(f, r: float, kernel: MollifierKernel | None = None):
    """(<f~>_r minus |z_{n+1}|^2 split as ([f]_r, r^2 M))."""
    n = f.n if isinstance(f, QuadraticTestFn) else f.grid.n
    k = kernel or MollifierKernel(n, r)
    return mollify(f, r, k), r * r * k.M


def _spectrum(hessian, eigenvalues: bool) -> np.ndarray:
    if eigenvalues:
        return np.asarray(hessian, dtype=float)
    vals = getattr(hessian, "values", hessian)
    return np.linalg.eigvalsh(np.asarray(vals))[..., ::-1]


def pointwise_cone_check(hessian, mode: str = "subsolution", eigenvalues: bool = False) -> dict:
    """Cone margins of a Hessian (matrix, batch, HermitianField or eigenvalues).

    ``subsolution``: sigma_{n-1} + sigma_n and min_{m <= n-1} sigma_m.
    ``admissible``: min_{m <= n-1} sigma_m only (closure of Gamma_{n-1}).
    """
    lam = _spectrum(hessian, eigenvalues)
    n = lam.shape[-1]
    e = sigma_all(lam)
    low = e[..., 1:n].min(axis=-1) if n > 1 else np.full(lam.shape[:-1], np.inf)
    if mode == "admissible":
        return {"min_sigma": low}
    if mode == "subsolution":
        return {"sigma_sum": e[..., n - 1] + e[..., n], "min_sigma": low}
    raise ValueError(f"unknown mode {mode!r}")


def solution_last_eigenvalue(lam_prime) -> np.ndarray:
    """x with sigma_{n-1}(lam', x) + sigma_n(lam', x) = 0 (lam' has n-1 entries)."""
    e = sigma_all(np.asarray(lam_prime, dtype=float))
    m = e.shape[-1] - 1
    denom = e[..., m - 1] + e[..., m]
    if np.any(np.abs(denom) < 1e-12):
        raise ZeroDivisionError("degenerate denominator")
    return -e[..., m] / denom


def _random_unitary(rng: np.random.Generator, n: int, batch: int) -> np.ndarray:
    A = rng.standard_normal((batch, n, n)) + 1j * rng.standard_normal((batch, n, n))
    q, r = np.linalg.qr(A)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def _sample_batch(rng: np.random.Generator, n: int, batch: int, lo=0.1, hi=3.0):
    """Spectra, unitaries, linear and constant parts for a batch of solutions."""
    lam_p = rng.uniform(lo, hi, size=(batch, n - 1))
    lam = np.concatenate([lam_p, solution_last_eigenvalue(lam_p)[:, None]], axis=1)
    U = _random_unitary(rng, n, batch)
    Q = (U * lam[:, None, :]) @ np.conj(np.swapaxes(U, -1, -2))
    Q = 0.5 * (Q + np.conj(np.swapaxes(Q, -1, -2)))
    b = 0.1 * (rng.standard_normal((batch, n)) + 1j * rng.standard_normal((batch, n)))
    c = rng.uniform(0.25, 0.75, size=batch)
    return lam, Q, b, c


def sample_solution_quadratic(seed_or_rng, n: int) -> QuadraticTestFn:
    """A quadratic whose Hessian solves sigma_{n-1} + sigma_n = 0 exactly."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else np.random.Generator(np.random.Philox(seed_or_rng))
    _, Q, b, c = _sample_batch(rng, n, 1)
    v = QuadraticTestFn(Q[0], b[0], c[0])
    margins = pointwise_cone_check(v.eigenvalues, eigenvalues=True)
    scale = max(1.0, float(np.abs(v.eigenvalues).max())) ** n
    if abs(margins["sigma_sum"]) > 1e-12 * scale or v.eigenvalues.min() < -1:
        raise AssertionError("sampled quadratic violates its construction")
    return v


def _margin_min(m: dict) -> float:
    return float(min(np.min(x) for x in m.values()))


def _ball_points(rng, n: int, count: int, radius: float, surface: bool = False) -> np.ndarray:
    g = rng.standard_normal((count, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    if not surface:
        g *= radius * rng.uniform(0, 1, size=(count, 1)) ** (1.0 / (2 * n))
    else:
        g *= radius
    return g[:, 0::2] + 1j * g[:, 1::2]


def _half_square_hessians(v: QuadraticTestFn, z: np.ndarray) -> np.ndarray:
    """Hessian of v^2 / 2: v * Hess v + (dv)(dv)^H at each point."""
    vals = v(z)
    g = v.gradient(z)
    return vals[:, None, None] * v.hessian() + g[:, :, None] * g.conj()[:, None, :]


def _grid_variant(v: QuadraticTestFn, r: float, N: int, seed: int) -> dict:
    """Strict subsolution plus a small resolved trig field, mollified on a torus grid."""
    from .torus import make_grid, hessian_values, trig_field

    n = v.n
    grid = make_grid(n, N) if n <= 3 else make_grid(n, 4)
    rng = np.random.Generator(np.random.Philox(seed))
    Qs = v.hessian() + 0.1 * np.eye(n)
    modes = []
    for _ in range(3):
        k = np.zeros(grid.ndim, dtype=int)
        while not k.any():
            k = rng.integers(-1, 2, size=grid.ndim)
        modes.append((tuple(int(x) for x in k), 1.0, float(rng.uniform(0, 2 * math.pi))))
    trig = trig_field(grid, modes)
    base = pointwise_cone_check(Qs)
    eps = 0.05
    while True:
        H = Qs + eps * hessian_values(grid, trig.values)
        before = pointwise_cone_check(H)
        if _margin_min(before) > 0 or eps < 1e-8:
            break
        eps *= 0.5
    r_eff = max(r, 2 * grid.spacing)
    moll = mollify(ScalarField(grid, eps * trig.values), r_eff)
    after = pointwise_cone_check(Qs + hessian_values(grid, moll.values))
    return {
        "eps": eps,
        "radius": r_eff,
        "strict_base_margin": _margin_min(base),
        "margin_before": _margin_min(before),
        "margin_after": _margin_min(after),
    }


def keylemmavr_checks(
    v: QuadraticTestFn,
    r: float,
    domain_box: float,
    w: QuadraticTestFn | None = None,
    points: int = 256,
    seed: int = 0,
    grid_variant: bool = False,
    grid_N: int = 8,
) -> dict:
    """Margins for the mollification, half-square and midpoint statements.

    (iii) is checked pointwise on {z in the box : 0 <= v(z) <= 1}.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    n = v.n
    report = {}

    mv = mollify(v, r)
    report["ii"] = {
        "margin": _margin_min(pointwise_cone_check(mv.hessian())),
        "hessian_shift": float(np.abs(mv.Q - v.Q).max()),
        "constant_shift": mv.constant - v.constant,
    }
    if grid_variant:
        report["ii_grid"] = _grid_variant(v, r, grid_N, seed)

    z = rng.uniform(-domain_box, domain_box, size=(points, 2 * n))
    z = z[:, 0::2] + 1j * z[:, 1::2]
    vals = v(z)
    keep = (vals >= 0) & (vals <= 1)
    zk = z[keep]
    if zk.size:
        m = pointwise_cone_check(_half_square_hessians(v, zk))
        iii = _margin_min(m)
    else:
        iii = None
    report["iii"] = {"margin": iii, "points": int(keep.sum())}

    if w is None:
        w = sample_solution_quadratic(rng, n)
    mid = 0.5 * (v.hessian() + w.hessian())
    report["iv"] = {"margin": _margin_min(pointwise_cone_check(mid))}
    return report


@dataclass
class ComparisonReport:
    passed: bool
    skipped: bool
    reason: str = ""
    boundary_min_gap: float | None = None
    interior_min_gap: float | None = None

    def __bool__(self):
        return self.passed


def comparison_check(
    w_sub: QuadraticTestFn,
    v_super: QuadraticTestFn,
    ball_radius: float,
    grid_res: int = 512,
    seed: int = 0,
    tol: float = 1e-10,
) -> ComparisonReport:
    """If w <= v on the sphere, check w <= v inside the ball."""
    rng = np.random.Generator(np.random.Philox(seed))
    n = w_sub.n
    sub = pointwise_cone_check(w_sub.hessian())
    if _margin_min(sub) < -tol:
        return ComparisonReport(False, True, "w_sub is not an admissible subsolution")
    sup_margin = float(pointwise_cone_check(v_super.hessian())["sigma_sum"])
    if sup_margin > tol:
        return ComparisonReport(False, True, "v_super is not a supersolution")
    bdry = _ball_points(rng, n, grid_res, ball_radius, surface=True)
    bgap = float(np.min(v_super(bdry) - w_sub(bdry)))
    if bgap < -tol:
        return ComparisonReport(False, True, "boundary domination fails", bgap)
    inner = _ball_points(rng, n, grid_res, ball_radius)
    igap = float(np.min(v_super(inner) - w_sub(inner)))
    return ComparisonReport(igap >= -tol, False, "", bgap, igap)


def mixed_sigma(mats, k: int | None = None) -> np.ndarray:
    """Polarised sigma_k of k Hermitian matrices (batched on leading axes).

    (1/k!) sum over subsets S of (-1)^{k-|S|} sigma_k(sum_{i in S} A_i).
    """
    mats = [np.asarray(A) for A in mats]
    k = len(mats) if k is None else k
    if k != len(mats):
        raise ValueError("need exactly k matrices")
    total = 0.0
    for size in range(1, k + 1):
        for S in combinations(range(k), size):
            A = sum(mats[i] for i in S)
            e = sigma_all(np.linalg.eigvalsh(A))
            total = total + (-1) ** (k - size) * e[..., k]
    return total / math.factorial(k)


def garding_margin(rng: np.random.Generator, n: int, k: int, batch: int) -> np.ndarray:
    """Mixed sigma_k of k Hessians sampled in Gamma_k (one value per sample)."""
    mats = []
    for _ in range(k):
        lam = np.empty((batch, n))
        filled = 0
        while filled < batch:
            cand = rng.uniform(-1.0, 3.0, size=(2 * batch, n))
            e = sigma_all(cand)
            ok = np.all(e[:, 1 : k + 1] > 0, axis=1)
            take = cand[ok][: batch - filled]
            lam[filled : filled + len(take)] = take
            filled += len(take)
        U = _random_unitary(rng, n, batch)
        mats.append((U * lam[:, None, :]) @ np.conj(np.swapaxes(U, -1, -2)))
    return mixed_sigma(mats)


def weaklab_run(n: int, samples: int, seed: int, comparison_pairs: int = 100, points: int = 16) -> dict:
    """Batched weak-solutions lab for one dimension; returns a JSON-ready report."""
    rng = np.random.Generator(np.random.Philox(seed))
    lam, Q, b, c = _sample_batch(rng, n, samples)
    scale = np.maximum(1.0, np.abs(lam).max(axis=1)) ** n

    # constraint and closure of Gamma_{n-1}
    mQ = pointwise_cone_check(Q)
    constraint = float(np.max(np.abs(mQ["sigma_sum"]) / scale))
    closure = float(np.min(mQ["min_sigma"]))

    # lift: sigma_k(lambda, 1) vs sigma_k + sigma_{k-1}
    n1 = n + 1
    Ql = np.zeros((samples, n1, n1), dtype=complex)
    Ql[:, :n, :n] = Q
    Ql[:, n, n] = 1.0
    el = sigma_all(np.linalg.eigvalsh(Ql))
    e = sigma_all(lam)
    pred = e[:, 1:] + e[:, :-1]
    lift_err = float(np.max(np.abs(el[:, 1:n1] - pred) / np.maximum(1.0, np.abs(pred))))

    # (ii): mollification shifts by a constant, so the Hessian margins are Q's
    ii = float(np.min(mQ["sigma_sum"]))

    # (iii): half-square on points where 0 <= v <= 1
    radius = 0.5 / np.sqrt(np.abs(lam).max(axis=1))
    z = rng.uniform(-1, 1, size=(samples, points, 2 * n)) * radius[:, None, None]
    z = z[..., 0::2] + 1j * z[..., 1::2]
    vals = np.einsum("spa,sab,spb->sp", z.conj(), Q, z).real + 2 * np.einsum("spa,sa->sp", z, b.conj()).real + c[:, None]
    grad = np.einsum("spa,sab->spb", z.conj(), Q) + b.conj()[:, None, :]
    H = vals[..., None, None] * np.swapaxes(Q, -1, -2)[:, None] + grad[..., :, None] * grad.conj()[..., None, :]
    keep = (vals >= 0) & (vals <= 1)
    m3 = pointwise_cone_check(H[keep])
    iii = _margin_min(m3) if keep.any() else None

    # (iv): midpoints with an independent batch
    _, Q2, _, _ = _sample_batch(rng, n, samples)
    iv = _margin_min(pointwise_cone_check(0.5 * (Q + Q2)))

    garding = {str(k): float(np.min(garding_margin(rng, n, k, max(1, samples // 10)))) for k in range(1, n + 1)}

    comp_pass, comp_skip = 0, 0
    for i in range(comparison_pairs):
        w = QuadraticTestFn(Q[i], b[i], c[i])
        R = 1.0
        eps = 0.1
        S = np.zeros((n, n), dtype=complex)
        S[0, 0] = eps
        vs = QuadraticTestFn(Q[i], b[i], c[i] + eps * R * R, S)
        rep = comparison_check(w, vs, R, grid_res=128, seed=seed + i)
        comp_pass += rep.passed
        comp_skip += rep.skipped

    return {
        "n": n,
        "samples": samples,
        "seed": seed,
        "constraint_max_rel": constraint,
        "closure_min_sigma": closure,
        "lift_max_rel": lift_err,
        "ii_min_margin": ii,
        "iii_min_margin": iii,
        "iii_points": int(keep.sum()),
        "iv_min_margin": iv,
        "garding_min": garding,
        "comparison_pairs": comparison_pairs,
        "comparison_passed": int(comp_pass),
        "comparison_skipped": int(comp_skip),
        "kernel": {"M": MollifierKernel(1, 1.0).M, "m2": MollifierKernel(n, 1.0).m2},
    }
