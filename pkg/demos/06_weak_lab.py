"""Mollification, half-squares and comparison for quadratic test functions."""

# %%
import numpy as np

from lyzlab.weak import (
    MollifierKernel,
    QuadraticTestFn,
    comparison_check,
    keylemmavr_checks,
    mollify,
    sample_solution_quadratic,
    weaklab_run,
)

# %% [markdown]
# The one-variable second moment of the bump kernel.

# %%
print("M =", MollifierKernel(1, 1.0).M)

# %% [markdown]
# Mollifying a quadratic only moves its constant term.

# %%
v = sample_solution_quadratic(4, 3)
mv = mollify(v, 0.2)
print("eigenvalues:", np.round(v.eigenvalues, 6), " constant shift:", mv.constant - v.constant)

# %%
rep = keylemmavr_checks(v, 0.2, 0.5, points=512, grid_variant=True, grid_N=6)
print("(ii) margin", rep["ii"]["margin"], " (iii) margin", rep["iii"]["margin"], " (iv) margin", rep["iv"]["margin"])

# %% [markdown]
# Comparison on the unit ball. The supersolution adds a pluriharmonic bump
# and a constant so that it dominates on the boundary.

# %%
S = np.zeros((3, 3))
S[0, 0] = 0.1
vs = QuadraticTestFn(v.Q, v.linear, v.constant + 0.1, S)
print(comparison_check(v, vs, 1.0))

# %%
block = weaklab_run(3, 2000, seed=1, comparison_pairs=20)
print({k: block[k] for k in ("ii_min_margin", "iii_min_margin", "iv_min_margin", "comparison_passed")})
