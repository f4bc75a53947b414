"""Numerical laboratory for the critical deformed Hermitian Yang-Mills equation on flat tori."""

from .cones import (
    EigenTuple,
    GammaK,
    GammaTau,
    critical_form_parts,
    dichotomy,
    in_cone,
    sigma_k,
    subsolution_margin,
    theta_angle,
    yuan_check,
)
from .continuity import ContinuityTrace, Schedule, run_path
from .phase import central_charge, hat_theta
from .solver import SolverOptions, newton_solve
from .suites import build_3d_example, build_4d_example, verify_3d, verify_4d
from .torus import HermitianField, ScalarField, build_chi, make_grid, trig_field

__version__ = "0.1.0"
