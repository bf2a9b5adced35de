"""Right-hand sides u_t = F(u) of the equation family, in conservative nonlocal form.

All models are written with the smoothing operator inv = (1 - dxx)^{-1}:

    CH:          u_t = -d/dx( u^2/2 + inv(u^2 + u_x^2/2) )
    DP:          u_t = -(1/2) d/dx( u^2 + 3 inv(u^2) )
    b-family:    u_t = -d/dx( u^2/2 + inv(b u^2/2 + (3-b) u_x^2/2) ),   b in (0,3)
    elastic rod: u_t = -d/dx( g u^2/2 + inv((3-g) u^2/2 + g u_x^2/2) ), g in (0,3)
    gBBM:        u_t = -d/dx inv( u + u^p )
    gBBM, frame  u_t = -inv d/dx( u_xx + u^p )      (lab rhs plus u_x)

b = 2 and g = 1 both reduce to CH.  Nonlinear products are dealiased.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .grid import Field, PeriodicGrid, require_finite
from .helmholtz import _symbol


class Family(enum.Enum):
    CH = "CH"
    DP = "DP"
    B_FAMILY = "BFamily"
    ELASTIC_ROD = "ElasticRod"
    GBBM = "GBBM"
    GBBM_MOVING_FRAME = "GBBM_MovingFrame"


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    b: float | None = None
    gamma: float | None = None
    p: int | None = None

    def __post_init__(self) -> None:
        if self.family is Family.B_FAMILY:
            if self.b is None or not (0 < self.b < 3):
                raise ValueError(f"b-family requires b in (0,3), got {self.b}")
        if self.family is Family.ELASTIC_ROD:
            if self.gamma is None or not (0 < self.gamma < 3):
                raise ValueError(f"elastic rod requires gamma in (0,3), got {self.gamma}")
        if self.family in (Family.GBBM, Family.GBBM_MOVING_FRAME):
            if self.p is None or int(self.p) != self.p or self.p < 2:
                raise ValueError(f"gBBM requires integer p >= 2, got {self.p}")


def rhs_values(m: ModelSpec, grid: PeriodicGrid, v: np.ndarray) -> np.ndarray:
    """Hot-path rhs on raw arrays; products dealiased in hat space."""
    N = grid.N
    ik = grid.ik
    deal = grid.dealias_mask
    inv1 = _symbol(grid, 1.0)
    fam = m.family

    if fam is Family.DP:
        qh = sfft.rfft(v * v) * deal
        return sfft.irfft(-0.5 * ik * qh * (1.0 + 3.0 * inv1), n=N)

    if fam in (Family.GBBM, Family.GBBM_MOVING_FRAME):
        vh = sfft.rfft(v)
        ph = sfft.rfft(v ** int(m.p)) * deal
        if fam is Family.GBBM:
            return sfft.irfft(-ik * inv1 * (vh + ph), n=N)
        return sfft.irfft(-ik * inv1 * (-(grid.k**2) * vh + ph), n=N)

    # CH / b-family / elastic rod share the quadratic flux structure
    if fam is Family.CH:
        c_loc, c_sq, c_grad = 0.5, 1.0, 0.5
    elif fam is Family.B_FAMILY:
        c_loc, c_sq, c_grad = 0.5, m.b / 2.0, (3.0 - m.b) / 2.0
    elif fam is Family.ELASTIC_ROD:
        c_loc, c_sq, c_grad = m.gamma / 2.0, (3.0 - m.gamma) / 2.0, m.gamma / 2.0
    else:  # pragma: no cover
        raise ValueError(f"unknown family {fam}")
    vh = sfft.rfft(v)
    vx = sfft.irfft(grid._ik_odd * vh, n=N)
    q_loc = sfft.rfft(c_loc * v * v) * deal
    q_nl = sfft.rfft(c_sq * v * v + c_grad * vx * vx) * deal
    return sfft.irfft(-ik * (q_loc + inv1 * q_nl), n=N)


def rhs(m: ModelSpec, u: Field) -> Field:
    require_finite(u.values, "rhs input")
    return Field(u.grid, rhs_values(m, u.grid, u.values))


def wave_breaking_guard(u: Field, threshold: float) -> bool:
    """True iff the field is finite and max|u_x| <= threshold."""
    if not (threshold > 0):
        raise ValueError(f"guard threshold must be positive, got {threshold}")
    if not np.isfinite(u.values).all():
        return False
    ux = u.grid.deriv_values(u.values, 1)
    return bool(np.max(np.abs(ux)) <= threshold)


def sign_condition_m0(u0: Field, tol: float = 1e-10) -> bool:
    """Check m0 = u0 - u0_xx >= 0 (global-existence condition for CH data)."""
    require_finite(u0.values, "sign_condition_m0 input")
    m0 = u0.values - u0.grid.deriv_values(u0.values, 2)
    return bool(np.min(m0) >= -tol)
