"""Chiral lattice integrator for the one- and two-excitation sectors.

The folded waveguide mode is a chain of sites of length ``dx``; with c = 1 one
time step ``dt = dx`` moves every photon exactly one site, so transport carries
no discretisation error. We store the field in the comoving frame: site ``j``
keeps its index for the whole run and meets the emitter at step
``atom_site_index - j``. Each step, the emitter and that single site undergo the
exact unitary of the discretised interaction

    U = exp(-i theta (S_+ b + S_- b^dag)),   cos(theta) = exp(-Gamma dt / 2),

which reproduces free emission at rate Gamma exactly and the transmission
amplitude to O(dt^2). Loss into other modes multiplies excited amplitudes by
``exp(-gamma dt / 2)`` after each collision; the removed probability is booked
in ``lost_probability``. Amplitudes are envelopes in a frame rotating at
``frame_frequency``.

Only :mod:`wqed.wavepackets` and :mod:`wqed.scattering.EmitterParams`-like
parameter objects are used here (any object with ``omega0``, ``Gamma`` and
``gamma`` attributes works).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConvergenceFailure, InvalidArgument
from ..wavepackets import (
    FrequencyGrid,
    GaussianPulseSpec,
    OnePhotonAmplitude,
    TwoPhotonAmplitude,
)

__all__ = [
    "LatticeConfig",
    "TimeDomainResult",
    "lattice_for_pulse",
    "evolve_one_excitation",
    "evolve_two_excitation",
    "extract_momentum_amplitude",
]

#: Largest lattice accepted by the two-excitation sector (n_sites^2 amplitudes).
MAX_PAIR_SITES = 4096

#: Residual amplitude allowed near the emitter when the run ends.
CLEARANCE_TOL = 1e-6
CLEARANCE_SITES = 10


@dataclass(frozen=True)
class LatticeConfig:
    """Geometry of a comoving lattice run.

    ``launch_offset`` is the distance from the emitter to the point where the
    input pulse is centred at t = 0 (the origin of the pulse's Fourier
    convention); sites ``atom_site_index - total_steps + 1 .. atom_site_index``
    are the ones that pass the emitter during the run.
    """

    n_sites: int
    site_spacing: float
    atom_site_index: int
    total_steps: int
    frame_frequency: float = 0.0
    launch_offset: float = 0.0

    def __post_init__(self):
        n = self.n_sites
        if n < 4 or n & (n - 1):
            raise InvalidArgument(f"n_sites must be a power of two >= 4, got {n}")
        if not 0 < self.atom_site_index < n - 1:
            raise InvalidArgument("the emitter site must be strictly interior")
        if not 1 <= self.total_steps <= self.atom_site_index + 1:
            raise InvalidArgument(
                f"total_steps={self.total_steps} exceeds the {self.atom_site_index + 1} "
                "sites upstream of the emitter"
            )
        if not self.site_spacing > 0:
            raise InvalidArgument("site_spacing must be positive")

    @property
    def first_site(self) -> int:
        return self.atom_site_index - self.total_steps + 1

    def positions(self) -> np.ndarray:
        """Pulse-frame coordinate of every site that passes the emitter."""
        j = np.arange(self.first_site, self.atom_site_index + 1)
        return (j - self.atom_site_index) * self.site_spacing + self.launch_offset

    def halved(self) -> "LatticeConfig":
        """Same physical window at half the site spacing."""
        n = self.n_sites * 2
        steps = 2 * self.total_steps
        return LatticeConfig(
            n_sites=n,
            site_spacing=self.site_spacing / 2,
            atom_site_index=2 * self.atom_site_index + 1,
            total_steps=steps,
            frame_frequency=self.frame_frequency,
            launch_offset=self.launch_offset,
        )


def lattice_for_pulse(
    spec: GaussianPulseSpec,
    emitter,
    site_spacing: float,
    *,
    truncation: float = 1e-9,
    clearance: float = 1e-8,
) -> LatticeConfig:
    """Smallest power-of-two lattice holding the pulse and its emitted tail.

    The Gaussian envelope ``exp(-sigma^2 x^2)`` is cut where it drops below
    ``truncation``; after the pulse has passed the emitter relaxes as
    ``exp(-(Gamma + gamma) t / 2)`` and the run continues until that factor is
    below ``clearance``.
    """
    half = math.sqrt(math.log(1.0 / truncation)) / spec.width
    tail = 2.0 * math.log(1.0 / clearance) / (emitter.Gamma + emitter.gamma)
    active = int(math.ceil((2.0 * half + tail) / site_spacing)) + 1
    n_sites = 1 << max(2, (active + CLEARANCE_SITES).bit_length())
    atom = n_sites - 1 - CLEARANCE_SITES
    return LatticeConfig(
        n_sites=n_sites,
        site_spacing=site_spacing,
        atom_site_index=atom,
        total_steps=active,
        frame_frequency=emitter.omega0,
        launch_offset=half,
    )


@dataclass
class TimeDomainResult:
    config: LatticeConfig
    field: np.ndarray
    atom: np.ndarray
    lost_probability: float
    max_ledger_error: float
    initial_norm: float
    excitations: int = 1

    @property
    def guided_norm(self) -> float:
        return float(np.sum(np.abs(self.field) ** 2))

    @property
    def atom_norm(self) -> float:
        return float(np.sum(np.abs(self.atom) ** 2))

    @property
    def total_probability(self) -> float:
        return self.guided_norm + self.atom_norm + self.lost_probability

    def clearance(self) -> float:
        """Largest amplitude left at the emitter or in the last sites to pass it."""
        cfg = self.config
        last = slice(cfg.atom_site_index - CLEARANCE_SITES + 1, cfg.atom_site_index + 1)
        near = np.abs(self.field[last]).max()
        return float(max(near, np.abs(self.atom).max()))


def _couplings(emitter, dx: float):
    if emitter.Gamma <= 0 or emitter.gamma < 0:
        raise InvalidArgument("need Gamma > 0 and gamma >= 0")
    c = math.exp(-emitter.Gamma * dx / 2.0)
    theta = math.acos(c)
    decay = math.exp(-emitter.gamma * dx / 2.0)
    return theta, decay


def _site_transform(grid: FrequencyGrid, cfg: LatticeConfig) -> np.ndarray:
    """Matrix taking grid amplitudes to site amplitudes (trapezoid weights).

    Simpson's alternating weights would alias a ghost pulse at distance pi/h,
    so the uniform rule is used for these Fourier sums.
    """
    y = cfg.positions()
    if 2.0 * math.pi / grid.spacing <= y[-1] - y[0]:
        raise ConvergenceFailure(
            f"grid spacing {grid.spacing:g} aliases the {y[-1] - y[0]:g}-long lattice window"
        )
    w = np.full(grid.n_points, grid.spacing)
    w[0] = w[-1] = grid.spacing / 2.0
    delta = grid.nodes - cfg.frame_frequency
    return math.sqrt(cfg.site_spacing / (2.0 * math.pi)) * np.exp(1j * np.outer(y, delta)) * w


def evolve_one_excitation(emitter, f: OnePhotonAmplitude, cfg: LatticeConfig) -> TimeDomainResult:
    dx = cfg.site_spacing
    theta, decay = _couplings(emitter, dx)
    c, s = math.cos(theta), math.sin(theta)
    field = np.zeros(cfg.n_sites, dtype=complex)
    field[cfg.first_site : cfg.atom_site_index + 1] = _site_transform(f.grid, cfg) @ f.values
    initial = float(np.sum(np.abs(field) ** 2))
    atom = 0j
    lost = 0.0
    worst = 0.0
    for step in range(cfg.total_steps):
        j = cfg.atom_site_index - step
        x = field[j]
        field[j] = c * x - 1j * s * atom
        atom = (-1j * s * x + c * atom) * decay
        lost += abs(atom) ** 2 * (1.0 / decay**2 - 1.0)
        if step % 64 == 0 or step == cfg.total_steps - 1:
            total = float(np.sum(np.abs(field) ** 2)) + abs(atom) ** 2 + lost
            worst = max(worst, abs(total - initial))
    return TimeDomainResult(cfg, field, np.array([atom]), lost, worst, initial, 1)


def evolve_two_excitation(
    emitter,
    g: TwoPhotonAmplitude,
    cfg: LatticeConfig,
    *,
    max_sites: int = MAX_PAIR_SITES,
) -> TimeDomainResult:
    """Evolve a symmetric two-photon amplitude.

    ``field[m, n]`` uses the same symmetric convention as
    :class:`~wqed.wavepackets.TwoPhotonAmplitude` (norm = sum of |field|^2);
    ``atom[m]`` is the amplitude of "emitter excited, one photon at site m".
    A doubly excited emitter does not exist in this state space.
    """
    if cfg.n_sites > max_sites:
        raise InvalidArgument(
            f"{cfg.n_sites}^2 site pairs exceed the configured cap of {max_sites}^2"
        )
    dx = cfg.site_spacing
    theta, decay = _couplings(emitter, dx)
    c, s = math.cos(theta), math.sin(theta)
    # |g; 2_n> couples to |e; 1_n> with matrix element sqrt(2).
    c2, s2 = math.cos(math.sqrt(2.0) * theta), math.sin(math.sqrt(2.0) * theta)
    r2 = math.sqrt(2.0)

    E = _site_transform(g.grid, cfg)
    lo, hi = cfg.first_site, cfg.atom_site_index + 1
    field = np.zeros((cfg.n_sites, cfg.n_sites), dtype=complex)
    field[lo:hi, lo:hi] = E @ g.values @ E.T
    field = 0.5 * (field + field.T)
    atom = np.zeros(cfg.n_sites, dtype=complex)
    initial = float(np.sum(np.abs(field) ** 2))
    guided = initial
    lost = 0.0
    worst = 0.0
    for step in range(cfg.total_steps):
        j = cfg.atom_site_index - step
        col = field[:, j]
        before = 2.0 * np.sum(np.abs(col) ** 2) - abs(col[j]) ** 2
        x = r2 * col
        new_col = (c * x - 1j * s * atom) / r2
        new_atom = -1j * s * x + c * atom
        xd, yd = col[j], atom[j]
        new_col[j] = c2 * xd - 1j * s2 * yd
        new_atom[j] = -1j * s2 * xd + c2 * yd
        field[:, j] = new_col
        field[j, :] = new_col
        atom_rot = float(np.sum(np.abs(new_atom) ** 2))
        atom = new_atom * decay
        after = 2.0 * np.sum(np.abs(new_col) ** 2) - abs(new_col[j]) ** 2
        guided += after - before
        lost += atom_rot * (1.0 - decay**2)
        worst = max(worst, abs(guided + atom_rot * decay**2 + lost - initial))
    result = TimeDomainResult(cfg, field, atom, lost, worst, initial, 2)
    worst = max(worst, abs(result.total_probability - initial))
    result.max_ledger_error = worst
    return result


def extract_momentum_amplitude(r: TimeDomainResult, grid: FrequencyGrid, *, check: bool = True):
    """Fourier transform of the outgoing field onto ``grid``, de-rotated by the frame.

    The freely propagated input is the reference, so an untouched pulse comes
    back unchanged. Raises :class:`ConvergenceFailure` when the outgoing packet
    has not cleared the emitter.
    """
    cfg = r.config
    if check and r.clearance() > CLEARANCE_TOL:
        raise ConvergenceFailure(
            f"outgoing packet not clear of the emitter (residual {r.clearance():.2e})"
        )
    y = cfg.positions()
    delta = grid.nodes - cfg.frame_frequency
    D = math.sqrt(cfg.site_spacing / (2.0 * math.pi)) * np.exp(-1j * np.outer(delta, y))
    lo, hi = cfg.first_site, cfg.atom_site_index + 1
    if r.excitations == 1:
        return OnePhotonAmplitude(grid, D @ r.field[lo:hi])
    values = D @ r.field[lo:hi, lo:hi] @ D.T
    return TwoPhotonAmplitude(grid, 0.5 * (values + values.T))
