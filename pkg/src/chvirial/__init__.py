"""Pseudospectral simulation and decay diagnostics for CH/DP/BBM-type equations."""

from .grid import Field, NonFiniteFieldError, PeriodicGrid, dealias, derivative, quadrature
from .helmholtz import HelmholtzParam, OperatorPath, canonical_f, canonical_g_h, helmholtz_inverse
from .models import Family, ModelSpec, rhs, sign_condition_m0, wave_breaking_guard
from .exact import ExactKind, ExactSpec, evaluate, mollified_peakon, shock_peakon_local_l2
from .integrate import (
    BlowUpError,
    RunStatus,
    SimConfig,
    Trajectory,
    load_archive,
    run,
    save_archive,
    step_rk4,
)
from .functionals import (
    Center,
    ConservedQuantities,
    Region,
    RegionNorm,
    ThetaSpec,
    VirialKind,
    WeightShape,
    WeightSpec,
    conserved,
    default_weight,
    lambda_scale,
    lambda_scale_deriv,
    leading_term_QJ,
    region_norm,
    theta_deriv,
    theta_eval,
    virial_rhs,
    virial_value,
)

__all__ = [
    "Field", "NonFiniteFieldError", "PeriodicGrid", "dealias", "derivative", "quadrature",
    "HelmholtzParam", "OperatorPath", "canonical_f", "canonical_g_h", "helmholtz_inverse",
    "Family", "ModelSpec", "rhs", "sign_condition_m0", "wave_breaking_guard",
    "ExactKind", "ExactSpec", "evaluate", "mollified_peakon", "shock_peakon_local_l2",
    "BlowUpError", "RunStatus", "SimConfig", "Trajectory", "load_archive", "run",
    "save_archive", "step_rk4",
    "Center", "ConservedQuantities", "Region", "RegionNorm", "ThetaSpec", "VirialKind",
    "WeightShape", "WeightSpec", "conserved", "default_weight", "lambda_scale",
    "lambda_scale_deriv", "leading_term_QJ", "region_norm", "theta_deriv", "theta_eval",
    "virial_rhs", "virial_value",
]

__version__ = "0.1.0"
