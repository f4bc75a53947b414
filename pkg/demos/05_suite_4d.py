"""Complex dimension 4: the quotient equation sigma_3 = sigma_1."""

# %%
from lyzlab.continuity import Schedule
from lyzlab.suites import build_4d_example, verify_4d

# %%
example = build_4d_example(seed=3, perturbation_scale=0.05, N=4)
vals = example.conditions["values"]
print("int sigma_1:", vals["int_sigma1"], " Re int central charge:", vals["int_re_central_charge"])

# %%
report = verify_4d(example.chi, Schedule(0.2, 0.5, 0.0125), seed=3)
print("sup |sigma_3 - sigma_1|:", report.critical_residuals["sup_sigma3_minus_sigma1"])
for key in ("min_sigma2", "min_sigma2_omit_smallest", "max_sigma4_minus_sigma2_plus_1"):
    print(f"{key}: {report.necessity[key]:.10f}")
print("passed:", report.passed)
