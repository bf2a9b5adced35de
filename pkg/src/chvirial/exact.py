"""Closed-form solution families: initial data and oracles.

Peakon and shock peakon belong to CH/DP, the sech^2 solitary waves to gBBM.
The shock peakon is evaluation-only (it has infinite H^1 norm) and the runner
refuses to integrate it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, PeriodicGrid
from .helmholtz import inverse_values


class ExactKind(enum.Enum):
    PEAKON = "Peakon"
    SHOCK_PEAKON = "ShockPeakon"
    BBM_SOLITARY = "BBMSolitary"
    BBM_NEGATIVE = "BBMNegative"
    GAUSSIAN = "Gaussian"
    MOLLIFIED_PEAKON = "MollifiedPeakon"


@dataclass(frozen=True)
class ExactSpec:
    kind: ExactKind
    c: float = 1.0      # speed (Peakon/BBM kinds), m-mass/2 for MollifiedPeakon
    k: float = 1.0      # shock peakon time offset, > 0
    p: int = 2          # gBBM nonlinearity
    A: float = 1.0      # Gaussian amplitude
    sigma: float = 1.0  # Gaussian / mollification width
    x0: float = 0.0     # center at t = 0

    def __post_init__(self) -> None:
        kd = self.kind
        if kd is ExactKind.PEAKON and self.c == 0:
            raise ValueError("peakon requires c != 0")
        if kd is ExactKind.SHOCK_PEAKON and not (self.k > 0):
            raise ValueError("shock peakon requires k > 0")
        if kd in (ExactKind.BBM_SOLITARY, ExactKind.BBM_NEGATIVE):
            if int(self.p) != self.p or self.p < 2:
                raise ValueError(f"solitary wave requires integer p >= 2, got {self.p}")
            if kd is ExactKind.BBM_SOLITARY and not (self.c > 1):
                raise ValueError("gBBM solitary wave requires c > 1")
            if kd is ExactKind.BBM_NEGATIVE and (not (self.c > 0) or self.p % 2 != 0):
                raise ValueError("negative-speed solitary wave requires c > 0 and even p")
        if kd in (ExactKind.GAUSSIAN, ExactKind.MOLLIFIED_PEAKON) and not (self.sigma > 0):
            raise ValueError("sigma must be positive")


def _wrap(grid: PeriodicGrid, center: float) -> np.ndarray:
    """Signed distance from the (torus-wrapped) center."""
    return (grid.x - center + grid.L / 2) % grid.L - grid.L / 2


def _q_bbm(s: np.ndarray, p: int) -> np.ndarray:
    return ((p + 1) / (2 * np.cosh(0.5 * (p - 1) * s) ** 2)) ** (1.0 / (p - 1))


def evaluate(spec: ExactSpec, t: float, grid: PeriodicGrid) -> Field:
    """Sample the closed form at the grid nodes at time t.

    Gaussian and MollifiedPeakon are initial-data constructors; they ignore t.
    """
    kd = spec.kind
    if kd is ExactKind.PEAKON:
        s = _wrap(grid, spec.c * t + spec.x0)
        return Field(grid, spec.c * np.exp(-np.abs(s)))
    if kd is ExactKind.SHOCK_PEAKON:
        if not (t + spec.k > 0):
            raise ValueError(f"shock peakon needs t + k > 0, got t={t}, k={spec.k}")
        s = _wrap(grid, spec.x0)
        return Field(grid, np.sign(s) * np.exp(-np.abs(s)) / (t + spec.k))
    if kd is ExactKind.BBM_SOLITARY:
        s = _wrap(grid, spec.c * t + spec.x0)
        amp = (spec.c - 1) ** (1.0 / (spec.p - 1))
        return Field(grid, amp * _q_bbm(np.sqrt((spec.c - 1) / spec.c) * s, spec.p))
    if kd is ExactKind.BBM_NEGATIVE:
        s = _wrap(grid, -spec.c * t + spec.x0)
        amp = (spec.c + 1) ** (1.0 / (spec.p - 1))
        return Field(grid, -amp * _q_bbm(np.sqrt((spec.c + 1) / spec.c) * s, spec.p))
    if kd is ExactKind.GAUSSIAN:
        s = _wrap(grid, spec.x0)
        return Field(grid, spec.A * np.exp(-(s**2) / (2 * spec.sigma**2)))
    if kd is ExactKind.MOLLIFIED_PEAKON:
        return mollified_peakon(spec.c, spec.sigma, grid, spec.x0)
    raise ValueError(f"unknown exact kind {kd}")  # pragma: no cover


def mollified_peakon(c: float, sigma: float, grid: PeriodicGrid, x0: float = 0.0) -> Field:
    """Smooth peakon stand-in with nonnegative momentum density.

    m0 is a Gaussian bump of mass 2c and width sigma; u0 = (1 - dxx)^{-1} m0.
    The sign condition m0 >= 0 then holds by construction, and u0 converges to
    the peakon c exp(-|x - x0|) in L^2 as sigma -> 0.
    """
    if not (sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma}")
    s = _wrap(grid, x0)
    m0 = 2 * c * np.exp(-(s**2) / (2 * sigma**2)) / (sigma * math.sqrt(2 * math.pi))
    return Field(grid, inverse_values(grid, m0, 1.0))


def shock_peakon_local_l2(t: float, k: float, b: float) -> float:
    """Exact local L^2 mass of the shock peakon over (-lam(t), lam(t)).

    With lam(t) = t^b / log t the integral of sgn(x)^2 exp(-2|x|) / (t+k)^2
    is (1 - exp(-2 lam)) / (t + k)^2, which decays like (t + k)^{-2}.
    """
    if not (t >= 2):
        raise ValueError(f"t must be >= 2, got {t}")
    if not (k > 0):
        raise ValueError(f"k must be positive, got {k}")
    if not (0 < b < 1):
        raise ValueError(f"b must lie in (0,1), got {b}")
    lam = t**b / math.log(t)
    return (1.0 - math.exp(-2.0 * lam)) / (t + k) ** 2
