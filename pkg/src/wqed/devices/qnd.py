"""Non-demolition photon detection with a three-level emitter.

Only the ground state ``g`` couples to the waveguide; the metastable state
``s`` is dark. A classical pulse rotates the emitter before and after the
photon passes, so a photon flips the emitter to ``s`` with a probability set
by the rotation amplitude ``alpha`` and the transmission amplitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..errors import InvalidArgument
from ..scattering import EmitterParams, transmission_amplitude
from ..wavepackets import OnePhotonAmplitude, norm2

__all__ = [
    "ThreeLevelEmitter",
    "QndBranch",
    "QndBranches",
    "qnd_rotate",
    "qnd_kraus",
    "qnd_detect_single",
    "qnd_efficiency",
    "qnd_efficiency_closed_form",
]


@dataclass(frozen=True)
class ThreeLevelEmitter:
    params: EmitterParams
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgument(f"alpha must lie in (0, 1), got {self.alpha}")
        r = self.rotation
        if not np.allclose(r.T @ r, np.eye(2), atol=1e-12):
            raise InvalidArgument("rotation is not orthogonal")

    @property
    def beta(self) -> float:
        return math.sqrt(1.0 - self.alpha**2)

    @property
    def rotation(self) -> np.ndarray:
        """Forward rotation in the (g, s) basis; columns are the images of g and s."""
        a, b = self.alpha, self.beta
        return np.array([[a, -b], [b, a]])

    @classmethod
    def matched_to_loss(cls, params: EmitterParams) -> "ThreeLevelEmitter":
        """Rotation with ``alpha^2 = 1 / (1 - t0)``, which nulls ``beta^2 + alpha^2 t0``."""
        t0 = params.t0
        if not t0 < 0:
            raise InvalidArgument("need gamma < Gamma so that the resonant transmission is negative")
        return cls(params, math.sqrt(1.0 / (1.0 - t0)))


def qnd_rotate(atom_state, emitter: ThreeLevelEmitter, direction: str = "forward") -> np.ndarray:
    """Rotate amplitudes ``(c_g, c_s)``; the inverse is the transpose."""
    v = np.asarray(atom_state, dtype=complex)
    if v.shape != (2,):
        raise InvalidArgument("atom state must be a length-2 vector over (g, s)")
    r = emitter.rotation
    if direction == "forward":
        return r @ v
    if direction == "inverse":
        return r.T @ v
    raise InvalidArgument(f"direction must be 'forward' or 'inverse', got {direction!r}")


def qnd_kraus(emitter: ThreeLevelEmitter, k) -> np.ndarray:
    """Coherent (photon transmitted) map ``R^T diag(t_k, 1) R``, shape ``(..., 2, 2)``."""
    t = np.asarray(transmission_amplitude(emitter.params, k))
    a, b = emitter.alpha, emitter.beta
    out = np.empty(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = b * b + a * a * t
    out[..., 0, 1] = a * b * (1.0 - t)
    out[..., 1, 0] = a * b * (1.0 - t)
    out[..., 1, 1] = a * a + b * b * t
    return out


@dataclass
class QndBranch:
    atom_outcome: str
    photon_fate: str
    photon_amplitude: Optional[OnePhotonAmplitude]
    probability: float


@dataclass
class QndBranches:
    branches: List[QndBranch]

    def probability(self, atom_outcome: Optional[str] = None, photon_fate: Optional[str] = None) -> float:
        return float(sum(
            b.probability for b in self.branches
            if (atom_outcome is None or b.atom_outcome == atom_outcome)
            and (photon_fate is None or b.photon_fate == photon_fate)
        ))

    @property
    def total(self) -> float:
        return self.probability()


def qnd_detect_single(emitter: ThreeLevelEmitter, f: Optional[OnePhotonAmplitude]) -> QndBranches:
    """Branches after rotate, scatter, inverse-rotate, starting from ``g``.

    A photon lost to the ``gamma`` channel reveals that the emitter was in
    ``g`` during the passage; that branch is incoherent with the transmitted
    ones and the emitter is then rotated back from ``g``.
    """
    if f is None:
        return QndBranches([QndBranch("g", "absent", None, 1.0)])
    K = qnd_kraus(emitter, f.grid.nodes)
    amp_g = f.with_values(K[:, 0, 0] * f.values)
    amp_s = f.with_values(K[:, 1, 0] * f.values)
    t = transmission_amplitude(emitter.params, f.grid.nodes)
    w = f.grid.weights
    a2, b2 = emitter.alpha**2, emitter.beta**2
    p_lost = a2 * float(w @ (np.clip(1.0 - np.abs(t) ** 2, 0.0, None) * np.abs(f.values) ** 2))
    return QndBranches([
        QndBranch("g", "transmitted", amp_g, norm2(amp_g)),
        QndBranch("s", "transmitted", amp_s, norm2(amp_s)),
        QndBranch("g", "lost", None, a2 * p_lost),
        QndBranch("s", "lost", None, b2 * p_lost),
    ])


def qnd_efficiency(emitter: ThreeLevelEmitter, f: OnePhotonAmplitude) -> float:
    """Probability of finding the emitter in ``s`` after one photon was sent."""
    return qnd_detect_single(emitter, f).probability("s")


def qnd_efficiency_closed_form(emitter: ThreeLevelEmitter) -> float:
    """Resonant monochromatic efficiency ``2 alpha^2 beta^2 (1 - t0)``."""
    a2 = emitter.alpha**2
    return 2.0 * a2 * (1.0 - a2) * (1.0 - emitter.params.t0)
