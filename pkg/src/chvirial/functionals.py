"""Conserved quantities, weights, virial functionals and their exact d/dt.

Every virial functional here is a weighted integral of the solution (or of
its energy density) whose time derivative along the flow has an explicit
closed form.  ``virial_value`` evaluates the functional, ``virial_rhs`` the
analytic right-hand side of the matching identity, term by term, with the
scaling derivatives lambda'(t), theta'(t) taken from their closed forms
(never by differencing).  Verifying d/dt value == rhs along simulated
trajectories is the core diagnostic of the package.

Scalings: lambda(t) = t^b / log t (b in [0,1); lambda = 1 when b = 0) and
theta(t) = t^a (log t)^(1+iota).  Both are defined for t >= 2 only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, PeriodicGrid, require_finite
from .helmholtz import inverse_values
from .models import ModelSpec


# -- scalings ---------------------------------------------------------------

def _check_t(t: float) -> None:
    if not (t >= 2):
        raise ValueError(f"diagnostic time must satisfy t >= 2, got {t}")


def lambda_scale(b: float, t: float) -> float:
    """lambda(t) = t^b / log t; by convention lambda = 1 when b = 0."""
    if not (0 <= b < 1):
        raise ValueError(f"b must lie in [0,1), got {b}")
    _check_t(t)
    if b == 0:
        return 1.0
    return t**b / math.log(t)


def lambda_scale_deriv(b: float, t: float) -> float:
    """lambda'(t) = t^(b-1) (b - 1/log t) / log t; zero when b = 0."""
    if not (0 <= b < 1):
        raise ValueError(f"b must lie in [0,1), got {b}")
    _check_t(t)
    if b == 0:
        return 0.0
    lg = math.log(t)
    return t ** (b - 1) * (b - 1.0 / lg) / lg


@dataclass(frozen=True)
class ThetaSpec:
    """Allowed L^1 growth t^a with log correction exponent 1 + iota."""

    a: float = 0.0
    iota: float = 1.0

    def __post_init__(self) -> None:
        if not (0 <= self.a < 1):
            raise ValueError(f"a must lie in [0,1), got {self.a}")
        if not (0 < self.iota <= 1):
            raise ValueError(f"iota must lie in (0,1], got {self.iota}")


def theta_eval(s: ThetaSpec, t: float) -> float:
    _check_t(t)
    return t**s.a * math.log(t) ** (1 + s.iota)


def theta_deriv(s: ThetaSpec, t: float) -> float:
    _check_t(t)
    lg = math.log(t)
    return t ** (s.a - 1) * lg**s.iota * (s.a * lg + 1 + s.iota)


# -- weights ----------------------------------------------------------------

class WeightShape(enum.Enum):
    TANH = "Tanh"
    SECH2 = "Sech2"
    SECH4 = "Sech4"
    SECH_S = "SechS"  # sech(s*y) with scale s


class Center(enum.Enum):
    ORIGIN = "Origin"
    MOVING_LINE = "MovingLine"  # window centered at x = t (lab-frame BBM)


@dataclass(frozen=True)
class WeightSpec:
    shape: WeightShape = WeightShape.TANH
    b: float = 0.5
    center: Center = Center.ORIGIN
    C0: float = 1.0
    scale_s: float = 4.0  # only for SECH_S

    def __post_init__(self) -> None:
        if not (0 <= self.b < 1):
            raise ValueError(f"weight scaling exponent b must lie in [0,1), got {self.b}")
        if not (self.C0 > 0):
            raise ValueError(f"C0 must be positive, got {self.C0}")
        if self.shape is WeightShape.SECH_S and not (self.scale_s > 0):
            raise ValueError(f"SechS scale must be positive, got {self.scale_s}")


def weight_derivatives(shape: WeightShape, y: np.ndarray, scale_s: float = 4.0):
    """Return (W, W', W'', W''') of the weight profile at y, analytically."""
    if shape is WeightShape.SECH_S:
        S = 1.0 / np.cosh(scale_s * y)
        T = np.tanh(scale_s * y)
        s1, s2, s3 = scale_s, scale_s**2, scale_s**3
        return S, -s1 * S * T, s2 * (S * T**2 - S**3), s3 * (5 * S**3 * T - S * T**3)
    s = 1.0 / np.cosh(y)
    t = np.tanh(y)
    if shape is WeightShape.TANH:
        return t, s**2, -2 * s**2 * t, 4 * s**2 * t**2 - 2 * s**4
    if shape is WeightShape.SECH2:
        return s**2, -2 * s**2 * t, 4 * s**2 * t**2 - 2 * s**4, 16 * s**4 * t - 8 * s**2 * t**3
    if shape is WeightShape.SECH4:
        return s**4, -4 * s**4 * t, 16 * s**4 * t**2 - 4 * s**6, 56 * s**6 * t - 64 * s**4 * t**3
    raise ValueError(f"unknown weight shape {shape}")  # pragma: no cover


_window_cache: dict[tuple[int, float], np.ndarray] = {}


def moment_window(grid: PeriodicGrid) -> np.ndarray:
    """Smooth cutoff = 1 on |x| <= 0.3 L, = 0 beyond |x| >= 0.4 L.

    The line moment integral of x*u is ill-defined on a torus; the window
    restricts it to the region the tail budget keeps empty of mass.
    """
    key = (grid.N, grid.L)
    w = _window_cache.get(key)
    if w is None:
        s = np.clip((0.4 * grid.L - np.abs(grid.x)) / (0.1 * grid.L), 0.0, 1.0)
        w = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
        _window_cache[key] = w
    return w


# -- conserved quantities ----------------------------------------------------

@dataclass(frozen=True)
class ConservedQuantities:
    I1: float      # integral of u
    E: float       # int u^2 + u_x^2
    M_bbm: float   # (1/2) int u^2 + u_x^2
    E_bbm: float   # int u^2/2 + u^(p+1)/(p+1)
    E_dp: float    # int 4 g^2 + 5 g_x^2 + g_xx^2,  g = (4 - dxx)^{-1} u


def conserved(m: ModelSpec, u: Field) -> ConservedQuantities:
    """Evaluate all tracked invariants; each is well-defined for any field."""
    require_finite(u.values, "conserved input")
    grid, v = u.grid, u.values
    vx = grid.deriv_values(v, 1)
    p = int(m.p) if m.p is not None else 2
    e = grid.quad_values(v * v + vx * vx)
    gh = np.asarray(inverse_values(grid, v, 4.0))
    g = gh
    g_x = grid.deriv_values(g, 1)
    g_xx = grid.deriv_values(g, 2)
    return ConservedQuantities(
        I1=grid.quad_values(v),
        E=e,
        M_bbm=0.5 * e,
        E_bbm=grid.quad_values(0.5 * v * v + v ** (p + 1) / (p + 1)),
        E_dp=grid.quad_values(4 * g * g + 5 * g_x * g_x + g_xx * g_xx),
    )


# -- virial functionals ------------------------------------------------------

class VirialKind(enum.Enum):
    CH_I = "CH_I"
    DP_I = "DP_I"
    CH_J = "CH_J"
    DP_K = "DP_K"
    BBM_I = "BBM_I"
    BBM_J = "BBM_J"
    CH_I_THETA = "CH_I_theta"
    DP_I_THETA = "DP_I_theta"
    BBM_I_THETA = "BBM_I_theta"
    BBM_J_THETA = "BBM_J_theta"
    XMOMENT_CH = "XMoment_CH"
    XMOMENT_BBM_EVEN = "XMoment_BBM_even"
    XMOMENT_BBM_P2 = "XMoment_BBM_p2"


_THETA_BASE = {
    VirialKind.CH_I_THETA: VirialKind.CH_I,
    VirialKind.DP_I_THETA: VirialKind.DP_I,
    VirialKind.BBM_I_THETA: VirialKind.BBM_I,
    VirialKind.BBM_J_THETA: VirialKind.BBM_J,
}

_XMOMENT = {VirialKind.XMOMENT_CH, VirialKind.XMOMENT_BBM_EVEN, VirialKind.XMOMENT_BBM_P2}

# I-type functionals are tied to phi = tanh (phi' = sech^2 > 0); the energy
# functionals take the narrow sech family.
_ALLOWED_SHAPES = {
    VirialKind.CH_I: {WeightShape.TANH},
    VirialKind.DP_I: {WeightShape.TANH},
    VirialKind.BBM_I: {WeightShape.TANH},
    VirialKind.CH_J: {WeightShape.SECH_S, WeightShape.SECH2, WeightShape.SECH4},
    VirialKind.DP_K: {WeightShape.SECH_S, WeightShape.SECH2, WeightShape.SECH4},
    VirialKind.BBM_J: {WeightShape.TANH, WeightShape.SECH2, WeightShape.SECH4, WeightShape.SECH_S},
}


def default_weight(kind: VirialKind) -> WeightSpec:
    base = _THETA_BASE.get(kind, kind)
    if base in (VirialKind.CH_J, VirialKind.DP_K):
        return WeightSpec(shape=WeightShape.SECH_S, scale_s=4.0)
    return WeightSpec(shape=WeightShape.TANH)


def _validate(kind: VirialKind, w: WeightSpec, th: ThetaSpec | None) -> None:
    base = _THETA_BASE.get(kind, kind)
    if kind in _THETA_BASE and th is None:
        raise ValueError(f"{kind.value} requires a ThetaSpec")
    if kind not in _THETA_BASE and th is not None:
        raise ValueError(f"{kind.value} does not take a ThetaSpec")
    allowed = _ALLOWED_SHAPES.get(base)
    if allowed is not None and w.shape not in allowed:
        raise ValueError(f"weight shape {w.shape.value} not admissible for {kind.value}")


def _dp_g(grid: PeriodicGrid, v: np.ndarray):
    g = inverse_values(grid, v, 4.0)
    return g, grid.deriv_values(g, 1), grid.deriv_values(g, 2)


def virial_value(kind: VirialKind, u: Field, t: float, w: WeightSpec,
                 th: ThetaSpec | None = None) -> float:
    """Evaluate the functional of the given kind at time t."""
    require_finite(u.values, "virial_value input")
    _check_t(t)
    _validate(kind, w, th)
    grid, v = u.grid, u.values

    if kind in _XMOMENT:
        return grid.quad_values(moment_window(grid) * grid.x * v)

    base = _THETA_BASE.get(kind, kind)
    lam = lambda_scale(w.b, t)
    W = weight_derivatives(w.shape, grid.x / lam, w.scale_s)[0]

    if base in (VirialKind.CH_I, VirialKind.DP_I):
        val = grid.quad_values(W * v)
    elif base is VirialKind.CH_J:
        vx = grid.deriv_values(v, 1)
        val = grid.quad_values(W * (v * v + vx * vx))
    elif base is VirialKind.DP_K:
        g, g_x, g_xx = _dp_g(grid, v)
        val = grid.quad_values(W * (4 * g * g + 5 * g_x * g_x + g_xx * g_xx))
    elif base is VirialKind.BBM_I:
        val = grid.quad_values(W * (v - grid.deriv_values(v, 2)))
    elif base is VirialKind.BBM_J:
        vx = grid.deriv_values(v, 1)
        val = 0.5 * grid.quad_values(W * (v * v + vx * vx))
    else:  # pragma: no cover
        raise ValueError(f"unhandled kind {kind}")

    if kind in _THETA_BASE:
        val /= theta_eval(th, t)
    return val


def virial_rhs(kind: VirialKind, u: Field, t: float, w: WeightSpec,
               th: ThetaSpec | None = None, p: int = 2) -> float:
    """Analytic d/dt of the matching functional along the flow.

    The solution must come from the matching model (and, for the BBM kinds,
    the matching frame).  ``p`` is the gBBM nonlinearity; it only enters
    XMOMENT_BBM_EVEN, whose drift is the integral of u^p.
    """
    require_finite(u.values, "virial_rhs input")
    _check_t(t)
    _validate(kind, w, th)
    grid, v = u.grid, u.values
    quad = grid.quad_values

    if kind is VirialKind.XMOMENT_CH:
        vx = grid.deriv_values(v, 1)
        nonlocal_term = inverse_values(grid, v * v + 0.5 * vx * vx, 1.0)
        return 0.5 * quad(v * v) + quad(nonlocal_term)
    if kind is VirialKind.XMOMENT_BBM_P2:
        return quad(v) + quad(v * v)
    if kind is VirialKind.XMOMENT_BBM_EVEN:
        if p % 2 != 0:
            raise ValueError(f"XMoment_BBM_even requires even p, got {p}")
        return quad(v ** int(p))

    base = _THETA_BASE.get(kind, kind)
    lam = lambda_scale(w.b, t)
    lamp = lambda_scale_deriv(w.b, t)
    y = grid.x / lam
    W, W1, W2, W3 = weight_derivatives(w.shape, y, w.scale_s)

    if base is VirialKind.CH_I:
        vx = grid.deriv_values(v, 1)
        flux = 0.5 * v * v + inverse_values(grid, v * v + 0.5 * vx * vx, 1.0)
        val = -(lamp / lam) * quad(y * W1 * v) + (1.0 / lam) * quad(W1 * flux)
    elif base is VirialKind.DP_I:
        flux = v * v + 3.0 * inverse_values(grid, v * v, 1.0)
        val = -(lamp / lam) * quad(y * W1 * v) + (0.5 / lam) * quad(W1 * flux)
    elif base is VirialKind.CH_J:
        vx = grid.deriv_values(v, 1)
        nl = inverse_values(grid, 2 * v * v + vx * vx, 1.0)
        val = (
            -(lamp / lam) * quad(y * W1 * (v * v + vx * vx))
            + (1.0 / lam) * quad(W1 * v * vx * vx)
            + (1.0 / lam) * quad(W1 * v * nl)
        )
    elif base is VirialKind.DP_K:
        # DP in canonical variables reads g_t = -h_x/2; carrying that through
        # the weighted energy gives the flux (2/3)u^3 + 4gh - 4gu^2 + g_x h_x.
        g, g_x, g_xx = _dp_g(grid, v)
        h = inverse_values(grid, v * v, 1.0)
        h_x = grid.deriv_values(h, 1)
        val = (
            -(lamp / lam) * quad(y * W1 * (4 * g * g + 5 * g_x * g_x + g_xx * g_xx))
            + (1.0 / lam) * quad(W1 * ((2.0 / 3.0) * v**3 + 4 * g * h - 4 * g * v * v + g_x * h_x))
        )
    elif base is VirialKind.BBM_I:
        val = (
            -(lamp / lam) * quad(y * W1 * v)
            + (2 * lamp / lam**3) * quad(W2 * v)
            + (lamp / lam**3) * quad(y * W3 * v)
            + (1.0 / lam**3) * quad(W3 * v)
            + (1.0 / lam) * quad(W1 * v * v)
        )
    elif base is VirialKind.BBM_J:
        vx = grid.deriv_values(v, 1)
        inv_v = inverse_values(grid, v, 1.0)
        inv_v2 = inverse_values(grid, v * v, 1.0)
        val = (
            -(lamp / (2 * lam)) * quad(y * W1 * (v * v + vx * vx))
            - (1.0 / lam) * quad(W1 * (v * v + 0.5 * vx * vx - v * inv_v))
            - (1.0 / (3 * lam)) * quad(W1 * v**3)
            + (1.0 / lam) * quad(W1 * v * inv_v2)
        )
    else:  # pragma: no cover
        raise ValueError(f"unhandled kind {kind}")

    if kind in _THETA_BASE:
        raw_value = virial_value(base, u, t, w)
        theta = theta_eval(th, t)
        val = -(theta_deriv(th, t) / theta**2) * raw_value + val / theta
    return val


# -- region norms and the leading quadratic term -----------------------------

class Region(enum.Enum):
    I_B = "I_b"      # (-C0 lam(t), C0 lam(t)), centered at the origin
    J_B = "J_b"      # (t - C0 lam(t), t + C0 lam(t)), centered on the line x = t
    I_EXT = "I_ext"  # (-inf, -(1+a) t/8) U ((1+b) t, inf)


class RegionNorm(enum.Enum):
    L2 = "L2"
    H1 = "H1"


def region_norm(u: Field, t: float, region: Region, norm: RegionNorm,
                C0: float = 1.0, b: float = 0.5,
                a_ext: float = 0.5, b_ext: float = 0.5) -> float:
    """Sharp-cutoff L^2 or H^1 norm over the requested space-time region.

    Node membership is evaluated on the line coordinates intersected with the
    torus window |x| <= 0.45 L; an empty intersection is rejected (it means
    the region has outrun the computational box).
    """
    require_finite(u.values, "region_norm input")
    _check_t(t)
    grid, v = u.grid, u.values
    x = grid.x
    window = np.abs(x) <= 0.45 * grid.L
    if region is Region.I_B:
        half = C0 * lambda_scale(b, t)
        mask = (np.abs(x) < half) & window
    elif region is Region.J_B:
        half = C0 * lambda_scale(b, t)
        mask = (np.abs(x - t) < half) & window
    elif region is Region.I_EXT:
        mask = ((x < -(1 + a_ext) * t / 8.0) | (x > (1 + b_ext) * t)) & window
    else:  # pragma: no cover
        raise ValueError(f"unknown region {region}")
    if not mask.any():
        raise ValueError(
            f"region {region.value} at t={t} has no grid nodes inside |x| <= 0.45 L"
        )
    dens = v * v
    if norm is RegionNorm.H1:
        vx = grid.deriv_values(v, 1)
        dens = dens + vx * vx
    return float(np.sqrt(grid.dx * np.sum(dens[mask])))


def leading_term_QJ(u: Field, t: float, w: WeightSpec) -> float:
    """Quadratic leading term of the BBM energy-virial drift, two ways.

    Computed directly as (1/lam) int W'(x/lam) (u^2 + u_x^2/2 - u (1-dxx)^{-1} u)
    and through the canonical variable f (u = f - f_xx):

        (1/2lam) int W' u_x^2 + (1/lam) int W'(f_x^2 + f_xx^2)
        - (1/2lam^3) int W''' f^2.

    Disagreement beyond 1e-9 relative flags a discretization bug and raises.
    """
    require_finite(u.values, "leading_term_QJ input")
    _check_t(t)
    grid, v = u.grid, u.values
    quad = grid.quad_values
    lam = lambda_scale(w.b, t)
    _, W1, _, W3 = weight_derivatives(w.shape, grid.x / lam, w.scale_s)

    vx = grid.deriv_values(v, 1)
    f = inverse_values(grid, v, 1.0)
    f_x = grid.deriv_values(f, 1)
    f_xx = grid.deriv_values(f, 2)

    direct = (1.0 / lam) * quad(W1 * (v * v + 0.5 * vx * vx - v * f))
    via_f = (
        (0.5 / lam) * quad(W1 * vx * vx)
        + (1.0 / lam) * quad(W1 * (f_x * f_x + f_xx * f_xx))
        - (0.5 / lam**3) * quad(W3 * f * f)
    )
    tol = 1e-9 * max(abs(direct), abs(via_f)) + 1e-15
    if abs(direct - via_f) > tol:
        raise RuntimeError(
            f"leading-term representations disagree: {direct!r} vs {via_f!r}"
        )
    return direct
