"""Periodic uniform grid and spectral calculus.

The real line is approximated by a torus of length ``L`` sampled at ``N``
equispaced nodes ``x_j = -L/2 + j L/N``.  Derivatives are exact (to roundoff)
for band-limited grid functions, quadrature is the uniform rectangle rule
(spectrally accurate for smooth periodic integrands), and dealiasing applies
the 2/3 rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as sfft


class NonFiniteFieldError(ValueError):
    """A grid function contains a NaN or Inf entry."""

    def __init__(self, what: str, index: int, value: float):
        self.index = index
        super().__init__(f"{what}: non-finite value {value!r} at index {index}")


def require_finite(values: np.ndarray, what: str = "field") -> None:
    """Reject non-finite data, naming the first offending index."""
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteFieldError(what, i, float(values[i]))


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic grid with cached spectral machinery.

    Parameters
    ----------
    N : int
        Number of nodes; must be a power of two, at least 16.
    L : float
        Domain length (the torus circumference).
    """

    N: int
    L: float

    def __post_init__(self) -> None:
        if self.N < 16 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")
        if not (self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        N, L = self.N, float(self.L)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "dx", L / N)
        object.__setattr__(self, "x", -L / 2 + L * np.arange(N) / N)
        # rfft wavenumbers 2*pi*m/L, m = 0..N/2
        m = np.arange(N // 2 + 1)
        k = 2.0 * np.pi * m / L
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "ik", 1j * k)
        # odd-order derivatives drop the (real) Nyquist mode
        ik_odd = 1j * k.copy()
        ik_odd[-1] = 0.0
        object.__setattr__(self, "_ik_odd", ik_odd)
        object.__setattr__(self, "dealias_mask", (m <= N // 3).astype(float))

    # -- array-level kernels (hot path, no Field wrapping) ----------------

    def rfft(self, v: np.ndarray) -> np.ndarray:
        return sfft.rfft(v)

    def irfft(self, vh: np.ndarray) -> np.ndarray:
        return sfft.irfft(vh, n=self.N)

    def deriv_values(self, v: np.ndarray, order: int) -> np.ndarray:
        if order not in (1, 2, 3):
            raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
        vh = sfft.rfft(v)
        if order == 1:
            vh = self._ik_odd * vh
        elif order == 2:
            vh = -(self.k**2) * vh
        else:
            vh = -(self.k**2) * self._ik_odd * vh
        return sfft.irfft(vh, n=self.N)

    def quad_values(self, v: np.ndarray) -> float:
        return float(self.dx * np.sum(v))

    def dealias_values(self, v: np.ndarray) -> np.ndarray:
        return sfft.irfft(sfft.rfft(v) * self.dealias_mask, n=self.N)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.N)


@dataclass(frozen=True)
class Field:
    """A real grid function: one solution snapshot or derived quantity."""

    grid: PeriodicGrid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ValueError(f"values must have shape ({self.grid.N},), got {v.shape}")
        object.__setattr__(self, "values", v)

    def check_finite(self, what: str = "field") -> "Field":
        require_finite(self.values, what)
        return self


def derivative(f: Field, order: int) -> Field:
    """Spectral derivative of the given order (1, 2 or 3)."""
    f.check_finite("derivative input")
    return Field(f.grid, f.grid.deriv_values(f.values, order))


def quadrature(f: Field) -> float:
    """Integral over the torus: the rectangle rule (L/N) * sum."""
    f.check_finite("quadrature input")
    return f.grid.quad_values(f.values)


def dealias(f: Field) -> Field:
    """Zero every Fourier mode with |m| > N/3 (2/3 rule)."""
    f.check_finite("dealias input")
    return Field(f.grid, f.grid.dealias_values(f.values))
