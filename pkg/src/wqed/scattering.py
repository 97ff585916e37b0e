"""One- and two-photon scattering on a two-level emitter terminating a waveguide.

The two-photon output for a symmetric input ``g`` is

    g_out(k1, k2) = t_k1 t_k2 g(k1, k2) + f_B[g](k1, k2)

    f_B[g](k1, k2) = (i Gamma^2 / 2 pi) s_k1 s_k2 (E - 2 omega0 + i(Gamma + gamma))
                     * int dq s_q s_{E-q} g(q, E - q),        E = k1 + k2

with ``s_k = 1 / (k - omega0 + i (Gamma + gamma) / 2)``. Losses enter by
continuing ``omega0 -> omega0 - i gamma / 2`` in every emitter resolvent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConvergenceFailure, InvalidArgument
from .wavepackets import (
    FrequencyGrid,
    OnePhotonAmplitude,
    TwoPhotonAmplitude,
    inner,
    norm2,
    simpson_weights,
)

__all__ = [
    "EmitterParams",
    "transmission_amplitude",
    "resolvent",
    "scatter_one",
    "bound_term_apply",
    "scatter_two",
    "optical_theorem_defect",
    "bound_norm2",
    "bound_norm2_product",
]

#: Tolerated error estimate of the anti-diagonal integrals, relative to their peak.
RESAMPLING_TOL = 1e-4


@dataclass(frozen=True)
class EmitterParams:
    """Resonance ``omega0``, waveguide emission rate ``Gamma`` and loss rate ``gamma``."""

    omega0: float = 0.0
    Gamma: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.Gamma > 0:
            raise InvalidArgument(f"Gamma must be positive, got {self.Gamma}")
        if not self.gamma >= 0:
            raise InvalidArgument(f"gamma must be non-negative, got {self.gamma}")
        for name in ("omega0", "Gamma", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgument(f"{name} must be finite")

    @property
    def linewidth(self) -> float:
        """Total decay rate ``Gamma + gamma``."""
        return self.Gamma + self.gamma

    @property
    def t0(self) -> float:
        """Resonant transmission ``(gamma - Gamma) / (gamma + Gamma)``."""
        return (self.gamma - self.Gamma) / (self.gamma + self.Gamma)

    @property
    def purcell(self) -> float:
        return math.inf if self.gamma == 0 else self.Gamma / self.gamma

    @classmethod
    def from_purcell(cls, purcell: float, omega0: float = 0.0, Gamma: float = 1.0):
        if not purcell > 0:
            raise InvalidArgument(f"Purcell factor must be positive, got {purcell}")
        return cls(omega0, Gamma, 0.0 if math.isinf(purcell) else Gamma / purcell)


def transmission_amplitude(e: EmitterParams, k):
    """``t_k = (k - w0 + i(gamma - Gamma)/2) / (k - w0 + i(gamma + Gamma)/2)``."""
    d = np.asarray(k, dtype=float) - e.omega0
    t = (d + 0.5j * (e.gamma - e.Gamma)) / (d + 0.5j * (e.gamma + e.Gamma))
    return t if t.ndim else complex(t)


def resolvent(e: EmitterParams, k):
    """``s_k = 1 / (k - w0 + i(Gamma + gamma)/2)``; note ``1 - t_k = i Gamma s_k``."""
    d = np.asarray(k, dtype=float) - e.omega0
    s = 1.0 / (d + 0.5j * e.linewidth)
    return s if s.ndim else complex(s)


def scatter_one(e: EmitterParams, f: OnePhotonAmplitude) -> OnePhotonAmplitude:
    return f.with_values(f.values * transmission_amplitude(e, f.grid.nodes))


def _line_weights(length: int) -> np.ndarray:
    # Simpson on odd counts; Simpson plus a closing 3/8 panel on even counts.
    if length == 1:
        return np.zeros(1)
    if length == 2:
        return np.array([0.5, 0.5])
    if length == 3 or length % 2 == 1:
        return simpson_weights(length)
    w = np.zeros(length)
    if length > 4:
        w[: length - 3] += simpson_weights(length - 3)
    w[length - 4 :] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


@lru_cache(maxsize=4)
def _antidiagonal_tables(n: int):
    """Per-node anti-diagonal index and Simpson / trapezoid line weights."""
    i = np.arange(n)
    index = (i[:, None] + i[None, :]).astype(np.intp)
    simpson = np.empty((n, n))
    trapezoid = np.empty((n, n))
    for m in range(2 * n - 1):
        lo = max(0, m - (n - 1))
        hi = min(n - 1, m)
        rows = np.arange(lo, hi + 1)
        simpson[rows, m - rows] = _line_weights(hi - lo + 1)
        tw = np.ones(hi - lo + 1)
        tw[0] = tw[-1] = 0.5
        if hi == lo:
            tw[:] = 0.0
        trapezoid[rows, m - rows] = tw
    for arr in (index, simpson, trapezoid):
        arr.setflags(write=False)
    return index, simpson, trapezoid


def _antidiagonal_sums(values: np.ndarray, weights: np.ndarray, index: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    weighted = (values * weights).ravel()
    flat = index.ravel()
    re = np.bincount(flat, weighted.real, minlength=2 * n - 1)
    im = np.bincount(flat, weighted.imag, minlength=2 * n - 1)
    return re + 1j * im


def _energy_integrals(e: EmitterParams, g: TwoPhotonAmplitude, check: bool = True) -> np.ndarray:
    """``I(E) = int dq s_q s_{E-q} g(q, E-q)`` on every anti-diagonal of the grid.

    Grid nodes lie exactly on the lines ``k + p = E`` of a uniform grid, so the
    line integrand is sampled without interpolation. The integrand is analytic
    and decays along each line, where the trapezoid rule converges
    geometrically; its difference from Simpson therefore tracks the Simpson
    error and serves as the estimate.
    """
    grid = g.grid
    n = grid.n_points
    index, w_simpson, w_trap = _antidiagonal_tables(n)
    s = resolvent(e, grid.nodes)
    integrand = s[:, None] * s[None, :] * g.values
    h = grid.spacing
    integrals = h * _antidiagonal_sums(integrand, w_simpson, index)
    if check:
        trap = h * _antidiagonal_sums(integrand, w_trap, index)
        scale = np.max(np.abs(integrals))
        if scale > 0:
            err = np.max(np.abs(integrals - trap)) / scale
            if err > RESAMPLING_TOL:
                raise ConvergenceFailure(
                    f"anti-diagonal quadrature error estimate {err:.2e} exceeds {RESAMPLING_TOL:g}"
                )
    return integrals


def bound_term_apply(
    e: EmitterParams, g: TwoPhotonAmplitude, *, kernel_scale: float = 1.0
) -> TwoPhotonAmplitude:
    """Correlated (bound-state) part ``f_B[g]`` of the two-photon output.

    ``kernel_scale`` multiplies the kernel; it exists only for mutation tests.
    """
    grid = g.grid
    n = grid.n_points
    index, _, _ = _antidiagonal_tables(n)
    integrals = _energy_integrals(e, g)
    s = resolvent(e, grid.nodes)
    # s_k1 s_k2 (E - 2 w0 + i(Gamma + gamma)) == s_k1 + s_k2
    pref = kernel_scale * 1j * e.Gamma**2 / (2.0 * math.pi)
    values = pref * (s[:, None] + s[None, :]) * integrals[index]
    return TwoPhotonAmplitude(grid, values)


def scatter_two(
    e: EmitterParams, g: TwoPhotonAmplitude, *, kernel_scale: float = 1.0
) -> TwoPhotonAmplitude:
    t = transmission_amplitude(e, g.grid.nodes)
    fb = bound_term_apply(e, g, kernel_scale=kernel_scale)
    return g.with_values(t[:, None] * t[None, :] * g.values + fb.values)


def optical_theorem_defect(
    e: EmitterParams, g: TwoPhotonAmplitude, *, kernel_scale: float = 1.0
) -> float:
    """``|Re<t t g, f_B[g]> + |f_B[g]|^2 / 2|``, which unitarity forces to zero when gamma = 0."""
    if e.gamma != 0:
        raise InvalidArgument("the optical-theorem identity holds only for gamma = 0")
    t = transmission_amplitude(e, g.grid.nodes)
    linear = g.with_values(t[:, None] * t[None, :] * g.values)
    fb = bound_term_apply(e, g, kernel_scale=kernel_scale)
    return abs(inner(linear, fb).real + 0.5 * norm2(fb))


def _relative_norm_factor(e: EmitterParams) -> float:
    # int dk |s_k + s_{E-k}|^2 = 4 pi / (Gamma + gamma), independent of E.
    return (e.Gamma**4 / (4.0 * math.pi**2)) * (4.0 * math.pi / e.linewidth)


def bound_norm2(e: EmitterParams, g: TwoPhotonAmplitude) -> float:
    """``int |f_B[g]|^2`` with the relative-momentum integral done in closed form.

    Unlike ``norm2(bound_term_apply(e, g))`` this is free of the truncation of
    the slowly decaying bound-state tails at the grid edge.
    """
    integrals = _energy_integrals(e, g)
    h = g.grid.spacing
    dens = np.abs(integrals) ** 2
    # E-nodes: 2n - 1 with spacing h; an odd count, so Simpson applies.
    return float(_relative_norm_factor(e) * h * np.dot(simpson_weights(dens.size), dens))


def bound_norm2_product(e: EmitterParams, f: OnePhotonAmplitude) -> float:
    """:func:`bound_norm2` for ``g = f (x) f``, via a 1-D convolution.

    Cost is O(n log n), so pulses far narrower or wider than the linewidth can
    be resolved on very fine one-dimensional grids.
    """
    grid = f.grid
    w = resolvent(e, grid.nodes) * f.values
    integrals = grid.spacing * fftconvolve(w, w)
    dens = np.abs(integrals) ** 2
    return float(_relative_norm_factor(e) * grid.spacing * np.dot(simpson_weights(dens.size), dens))
