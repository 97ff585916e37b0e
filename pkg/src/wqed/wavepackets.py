"""Frequency grids, pulse shapes and the fixed quadrature rule.

All frequencies are in units of the reference coupling rate (Gamma = 1) with
hbar = c = 1, so a wavenumber and a frequency are the same thing.

Two-photon amplitudes follow the convention

    |psi> = 1/sqrt(2) * int dk dp g(k, p) a_k^dag a_p^dag |0>,

with g symmetric; the squared norm of that state is int dk dp |g(k, p)|^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConvergenceFailure, GridMismatch, InvalidArgument

__all__ = [
    "FrequencyGrid",
    "GaussianPulseSpec",
    "OnePhotonAmplitude",
    "TwoPhotonAmplitude",
    "ConvergenceReport",
    "build_grid",
    "default_grid",
    "gaussian_pulse",
    "monochromatic",
    "product_two_photon",
    "simpson_weights",
    "inner",
    "norm2",
    "convergence_check",
    "refined_grids",
]

#: Relative change accepted by :func:`convergence_check`.
CONVERGENCE_TOL = 1e-4

#: Half-width of the pulse support, in units of sigma, required by :func:`gaussian_pulse`.
PULSE_SUPPORT = 8.0

#: Coarsest spacing accepted by :func:`gaussian_pulse`, in units of sigma.
PULSE_RESOLUTION = 0.5

#: Half-width of the default two-photon grid, in emitter linewidths.
TWO_PHOTON_SUPPORT = 32.0


def simpson_weights(n: int) -> np.ndarray:
    """Composite Simpson weights (unit spacing) for an odd number of nodes."""
    if n < 3 or n % 2 == 0:
        raise InvalidArgument(f"Simpson rule needs an odd node count >= 3, got {n}")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid ``center + (i - (n_points - 1)/2) * spacing``."""

    center: float
    half_width: float
    n_points: int

    def __post_init__(self):
        if not isinstance(self.n_points, (int, np.integer)) or isinstance(self.n_points, bool):
            raise InvalidArgument(f"n_points must be an integer, got {self.n_points!r}")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise InvalidArgument(f"n_points must be odd and >= 3, got {self.n_points}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise InvalidArgument(f"half_width must be positive, got {self.half_width}")
        if not math.isfinite(self.center):
            raise InvalidArgument(f"center must be finite, got {self.center}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        offsets = np.arange(self.n_points) - (self.n_points - 1) // 2
        nodes = self.center + offsets * self.spacing
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights including the spacing."""
        w = simpson_weights(self.n_points) * self.spacing
        w.setflags(write=False)
        return w

    @property
    def center_index(self) -> int:
        return (self.n_points - 1) // 2

    def covers(self, lo: float, hi: float) -> bool:
        return self.nodes[0] <= lo and hi <= self.nodes[-1]


def build_grid(center: float, half_width: float, n_points: int) -> FrequencyGrid:
    """Build a :class:`FrequencyGrid`; raises :class:`InvalidArgument` on bad input."""
    return FrequencyGrid(float(center), float(half_width), n_points)


@dataclass(frozen=True)
class GaussianPulseSpec:
    carrier: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgument(f"pulse width must be positive, got {self.width}")


@dataclass(frozen=True, eq=False)
class OnePhotonAmplitude:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise InvalidArgument(
                f"values shape {values.shape} does not match grid of {self.grid.n_points} nodes"
            )
        object.__setattr__(self, "values", values)

    def with_values(self, values) -> "OnePhotonAmplitude":
        return OnePhotonAmplitude(self.grid, values)

    def norm2(self) -> float:
        return norm2(self)


@dataclass(frozen=True, eq=False)
class TwoPhotonAmplitude:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        n = self.grid.n_points
        if values.shape != (n, n):
            raise InvalidArgument(f"values shape {values.shape} does not match a {n}x{n} grid")
        object.__setattr__(self, "values", values)

    def with_values(self, values) -> "TwoPhotonAmplitude":
        return TwoPhotonAmplitude(self.grid, values)

    def norm2(self) -> float:
        return norm2(self)

    def symmetry_defect(self) -> float:
        """max |g(k,p) - g(p,k)| relative to max |g|."""
        scale = np.max(np.abs(self.values))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(self.values - self.values.T)) / scale)

    def swapped(self) -> "TwoPhotonAmplitude":
        return TwoPhotonAmplitude(self.grid, self.values.T)


Amplitude = Union[OnePhotonAmplitude, TwoPhotonAmplitude]


def gaussian_pulse(spec: GaussianPulseSpec, grid: FrequencyGrid) -> OnePhotonAmplitude:
    """Normalized pulse ``f(k) ~ exp(-(k - carrier)^2 / (4 width^2))``.

    The squared modulus is a Gaussian of standard deviation ``width``.

    Raises
    ------
    ConvergenceFailure
        If the grid does not cover ``carrier +- 8 width`` or its spacing exceeds
        ``width / 2``.
    """
    lo = spec.carrier - PULSE_SUPPORT * spec.width
    hi = spec.carrier + PULSE_SUPPORT * spec.width
    if not grid.covers(lo, hi):
        raise ConvergenceFailure(
            f"grid [{grid.nodes[0]:g}, {grid.nodes[-1]:g}] does not cover the pulse support "
            f"[{lo:g}, {hi:g}]"
        )
    if grid.spacing > PULSE_RESOLUTION * spec.width:
        raise ConvergenceFailure(
            f"grid spacing {grid.spacing:g} does not resolve pulse width {spec.width:g}"
        )
    k = grid.nodes
    values = np.exp(-((k - spec.carrier) ** 2) / (4.0 * spec.width**2)).astype(complex)
    values /= math.sqrt(np.sum(grid.weights * np.abs(values) ** 2))
    return OnePhotonAmplitude(grid, values)


def monochromatic(carrier: float, tiny: float = 1e-6) -> OnePhotonAmplitude:
    """Zero-width limit of :func:`gaussian_pulse`.

    A three-node grid around ``carrier`` carries all the weight on its centre
    node, so every quadrature reduces to evaluating the integrand at ``carrier``.
    """
    grid = build_grid(carrier, tiny, 3)
    values = np.zeros(3, dtype=complex)
    values[1] = 1.0 / math.sqrt(grid.weights[1])
    return OnePhotonAmplitude(grid, values)


def product_two_photon(f: OnePhotonAmplitude, h: Optional[OnePhotonAmplitude] = None) -> TwoPhotonAmplitude:
    """``g(k, p) = f(k) f(p)``, or the symmetrised ``(f(k) h(p) + h(k) f(p)) / 2``."""
    if h is None:
        return TwoPhotonAmplitude(f.grid, np.outer(f.values, f.values))
    _check_same_grid(f, h)
    v = np.outer(f.values, h.values)
    return TwoPhotonAmplitude(f.grid, 0.5 * (v + v.T))


def _check_same_grid(a: Amplitude, b: Amplitude) -> None:
    if type(a) is not type(b):
        raise GridMismatch(f"cannot pair {type(a).__name__} with {type(b).__name__}")
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")


def inner(a: Amplitude, b: Amplitude) -> complex:
    """Quadrature inner product, conjugate-linear in ``a``."""
    _check_same_grid(a, b)
    w = a.grid.weights
    prod = np.conj(a.values) * b.values
    if isinstance(a, OnePhotonAmplitude):
        return complex(w @ prod)
    return complex(w @ prod @ w)


def norm2(a: Amplitude) -> float:
    w = a.grid.weights
    dens = np.abs(a.values) ** 2
    if isinstance(a, OnePhotonAmplitude):
        return float(w @ dens)
    return float(w @ dens @ w)


def default_grid(
    sigma: float,
    omega0: float = 0.0,
    linewidth: float = 1.0,
    *,
    two_photon: bool = False,
    min_points: int = 1025,
    max_points: int = 4097,
) -> FrequencyGrid:
    """Grid used when the caller does not supply one.

    Single-photon integrands are confined to the pulse, so the one-photon grid
    spans ``12 sigma``. Two-photon amplitudes carry the bound-state term whose
    density falls off only as 1/k^4 along lines of constant total energy; the
    two-photon grid therefore also spans ``32 linewidth`` and resolves the
    emitter resolvent with at least 20 nodes per linewidth.
    """
    if not sigma > 0 or not linewidth > 0:
        raise InvalidArgument("sigma and linewidth must be positive")
    if two_photon:
        half_width = max(12.0 * sigma, TWO_PHOTON_SUPPORT * linewidth)
        spacing = min(PULSE_RESOLUTION * sigma, linewidth / 20.0)
    else:
        half_width = 12.0 * sigma
        spacing = PULSE_RESOLUTION * sigma / 2.0
    n = int(math.ceil(2.0 * half_width / spacing)) + 1
    n = max(n, min_points)
    if n % 2 == 0:
        n += 1
    if n > max_points:
        raise ConvergenceFailure(
            f"resolving sigma={sigma:g} with linewidth={linewidth:g} needs {n} nodes "
            f"(cap {max_points})"
        )
    return build_grid(omega0, half_width, n)


def refined_grids(grid: FrequencyGrid) -> tuple[FrequencyGrid, FrequencyGrid]:
    """(halved spacing, doubled half-width at the same spacing)."""
    n2 = 2 * (grid.n_points - 1) + 1
    return (
        build_grid(grid.center, grid.half_width, n2),
        build_grid(grid.center, 2.0 * grid.half_width, n2),
    )


@dataclass(frozen=True)
class ConvergenceReport:
    value: complex
    refined_values: tuple
    relative_change: float
    passed: bool
    tolerance: float = CONVERGENCE_TOL
    message: str = ""

    def raise_on_failure(self) -> None:
        if not self.passed:
            raise ConvergenceFailure(
                f"relative change {self.relative_change:.3g} exceeds {self.tolerance:g}"
                + (f": {self.message}" if self.message else "")
            )


def convergence_check(
    compute: Callable[[FrequencyGrid], complex],
    grid: FrequencyGrid,
    tol: float = CONVERGENCE_TOL,
) -> ConvergenceReport:
    """Re-run ``compute`` with doubled resolution and doubled support.

    ``compute`` maps a grid to a scalar. The reported change is the largest of
    the two refinements, relative to the base value (absolute if that is 0).
    A :class:`ConvergenceFailure` raised by ``compute`` marks the report failed.
    """
    try:
        base = compute(grid)
        refined = tuple(compute(g) for g in refined_grids(grid))
    except ConvergenceFailure as exc:
        return ConvergenceReport(math.nan, (), math.inf, False, tol, str(exc))
    scale = abs(base) if base != 0 else 1.0
    change = max(abs(r - base) for r in refined) / scale
    change = float(change)
    return ConvergenceReport(base, refined, change, change < tol, tol)
