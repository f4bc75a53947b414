"""Sampled property harness for the cone algebra (the ``conecheck`` command)."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import unitary_group

from .cones import (
    append_unit_eigenvalue_identity,
    critical_form_parts,
    critical_phase,
    delta0_search,
    sigma_all,
    subsolution_margin,
    theta_angle,
    yuan_check,
)

__all__ = ["run_cone_suite", "sample_band", "schur_horn_violations"]

TOL = 1e-10


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def sample_band(rng: np.random.Generator, n: int, lo: float, hi: float, count: int) -> np.ndarray:
    """Tuples with theta(lambda) in (lo, hi), drawn in angle space."""
    out = []
    have = 0
    while have < count:
        a = rng.uniform(-math.pi / 2, math.pi / 2, size=(2 * count, n - 1))
        target = rng.uniform(lo, hi, size=2 * count)
        last = target - a.sum(axis=1)
        ok = (np.abs(last) < math.pi / 2 - 1e-9) & (target > lo)
        lam = np.tan(np.concatenate([a[ok], last[ok, None]], axis=1))
        out.append(lam)
        have += len(lam)
    return np.concatenate(out)[:count]


def _filtered(rng: np.random.Generator, n: int, count: int, keep) -> np.ndarray:
    """Uniform draws from [-5, 5]^n until ``count`` of them satisfy ``keep``."""
    chunks, have = [], 0
    while have < count:
        lam = rng.uniform(-5, 5, size=(200_000, n))
        sel = lam[keep(lam)]
        chunks.append(sel)
        have += len(sel)
    return np.concatenate(chunks)[:count]


def _concavity_violations(f, pairs_a, pairs_b) -> int:
    mid = f(0.5 * (pairs_a + pairs_b))
    avg = 0.5 * (f(pairs_a) + f(pairs_b))
    return int(np.sum(mid < avg - TOL * np.maximum(1.0, np.abs(avg))))


def schur_horn_violations(rng: np.random.Generator, n: int, count: int) -> int:
    bad = 0
    U = unitary_group.rvs(n, size=count, random_state=rng)
    U = U.reshape(count, n, n)
    mu = -np.sort(-rng.uniform(-5, 5, size=(count, n)), axis=1)
    A = (U * mu[:, None, :]) @ np.conj(np.swapaxes(U, -1, -2))
    f = np.sort(rng.uniform(0, 1, size=(count, n)), axis=1)
    lhs = np.sum(f * np.diagonal(A, axis1=1, axis2=2).real, axis=1)
    rhs = np.sum(f * mu, axis=1)
    bad += int(np.sum(lhs < rhs - TOL * np.maximum(1.0, np.abs(rhs))))
    return bad


def _per_dimension(rng: np.random.Generator, n: int, samples: int) -> dict:
    out = {}
    for label, tau in (("critical", critical_phase(n)), ("critical+0.3", critical_phase(n) + 0.3)):
        sel = _filtered(rng, n, samples, lambda x: theta_angle(x) >= tau)
        res = yuan_check(sel, tau, tol=TOL)
        viol = {k: int(np.sum(~v)) for k, v in res.items() if k != "hypothesis"}
        half = len(sel) // 2
        mid = theta_angle(0.5 * (sel[:half] + sel[half : 2 * half]))
        viol["convexity"] = int(np.sum(mid < tau - 1e-12))
        out[label] = {"tau": tau, "filtered": int(len(sel)), "violations": viol}

    g = _filtered(rng, n, 2 * samples, lambda x: np.all(sigma_all(x)[:, 1:n] > 0, axis=1))
    half = len(g) // 2
    a, b = g[:half], g[half : 2 * half]
    root = lambda x: sigma_all(x)[..., n - 1] ** (1.0 / (n - 1))
    quot = lambda x: sigma_all(x)[..., n] / sigma_all(x)[..., n - 1]
    out["concavity"] = {
        "pairs": int(half),
        "root_violations": _concavity_violations(root, a, b),
        "quotient_violations": _concavity_violations(quot, a, b),
    }

    lam = rng.uniform(-5, 5, size=(samples, n))
    theta = theta_angle(lam)
    lift_bad = 0
    for k in range(n + 2):
        lhs, rhs = append_unit_eigenvalue_identity(lam, k)
        lift_bad += int(np.sum(np.abs(lhs - rhs) > 1e-12 * np.maximum(1.0, np.abs(rhs))))
    out["lift_violations"] = lift_bad

    re, im = critical_form_parts(lam)
    diff = np.angle(np.exp(1j * (np.arctan2(im, re) - (n * math.pi / 2 - theta))))
    out["critical_form_violations"] = int(np.sum(np.abs(diff) > TOL))

    out["schur_horn_violations"] = schur_horn_violations(rng, n, min(samples, 10_000))

    s = min(((n - 3) * math.pi / 2 + 0.3) / (n - 1), math.pi / 2 - 0.05)
    mu = np.full(n, math.tan(s))
    band = sample_band(rng, n, critical_phase(n), critical_phase(n) + 0.05, 10_000)
    d0 = delta0_search(mu, band)
    out["dichotomy"] = {"A_mu": float(subsolution_margin(mu)), "delta0": d0, "found": d0 is not None}
    return out


def _count(block) -> int:
    if isinstance(block, dict):
        return sum(_count(v) for k, v in block.items() if k not in ("tau", "filtered", "pairs", "A_mu", "delta0", "found"))
    return int(block) if isinstance(block, (int, np.integer)) and not isinstance(block, bool) else 0


def run_cone_suite(samples: int = 100_000, seed: int = 0, dims=(2, 3, 4, 5)) -> dict:
    """All sampled cone properties; ``total_violations`` should be 0."""
    report = {"samples": samples, "seed": seed, "dimensions": {}}
    total = 0
    dichotomy_ok = True
    for n in dims:
        block = _per_dimension(_rng(seed + n), n, samples)
        report["dimensions"][str(n)] = block
        total += _count(block)
        dichotomy_ok &= block["dichotomy"]["found"]
    report["total_violations"] = total
    report["dichotomy_found"] = bool(dichotomy_ok)
    report["pass"] = total == 0 and bool(dichotomy_ok)
    return report
