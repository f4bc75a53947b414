"""Spectral complex Hessians on the flat torus."""

# %%
import numpy as np

from lyzlab.torus import build_chi, complex_hessian, integrate, make_grid, pointwise_eigs, trig_field

# %% [markdown]
# A single mode A cos(x_1 + y_2) on the 2-torus of complex dimension 2.
# Its complex Hessian is explicit, so the spectral one can be read off.

# %%
grid = make_grid(2, 8)
u = trig_field(grid, [((1, 0, 0, 1), 0.4, 0.0)])
H = complex_hessian(u)
print("H at the origin:\n", np.round(H.values[0, 0, 0, 0], 12))
print("expected: -A/4 * [[1, -i], [i, 1]] with A = 0.4")

# %% [markdown]
# Hessian entries integrate to zero, which is what keeps the central charge
# a cohomological quantity.

# %%
print("max |integral of H|:", float(np.abs(integrate(H.values, grid)).max()))

# %% [markdown]
# A closed form chi = C + i ddbar rho and its pointwise spectrum.

# %%
chi = build_chi(grid, np.diag([1.0, 0.5]), u)
lam = pointwise_eigs(chi)
print("eigenvalue range:", lam.min(axis=(0, 1, 2, 3)), lam.max(axis=(0, 1, 2, 3)))
