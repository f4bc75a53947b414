"""Eigenvalue cones and the angle function.

Run with ``python3 demos/01_cones.py``.
"""

# %%
import math

import numpy as np

from lyzlab import cones
from lyzlab.conesuite import run_cone_suite, sample_band

# %% [markdown]
# sigma_k is computed by the product recursion. Compare a hand example.

# %%
lam = (2.0, 1.0, 1.0, -0.5)
print("sigma_k(2, 1, 1, -1/2):", [round(float(cones.sigma_k(lam, k)), 12) for k in range(5)])

# %% [markdown]
# The angle theta(lam) = sum arctan(lam_j) and membership in Gamma_tau.

# %%
for lam in [(1, 1, 0), (1, 1, 1, 1), (3, 1, -0.2)]:
    print(lam, "theta =", round(cones.theta_angle(lam), 12))
print("(1,1,1) in Gamma_{3pi/4}:", cones.in_cone((1, 1, 1), cones.GammaTau(3 * math.pi / 4)))
print("... with slack 1e-12:", cones.in_cone((1, 1, 1), cones.GammaTau(3 * math.pi / 4), slack=1e-12))

# %% [markdown]
# Above the critical phase every tuple keeps its n-1 largest entries positive.
# Sample a thin band over the critical phase and look at the worst case.

# %%
rng = np.random.Generator(np.random.Philox(0))
for n in (3, 4):
    tau = cones.critical_phase(n)
    band = -np.sort(-sample_band(rng, n, tau, tau + 0.05, 5000), axis=1)
    print(f"n={n}: smallest of the top n-1 eigenvalues over the band = {band[:, :-1].min():.3e}")

# %% [markdown]
# The full randomized sweep (smaller than the acceptance run).

# %%
report = run_cone_suite(samples=20_000, seed=0)
print("violations:", report["total_violations"], "pass:", report["pass"])
