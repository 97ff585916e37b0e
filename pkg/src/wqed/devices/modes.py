"""Two-photon states distributed over named optical modes, and passive optics on them.

A state on modes ``m1, m2, ...`` is written

    |psi> = 1/sqrt(2) sum_{m,n} int dk dp Phi_mn(k, p) a_m,k^dag a_n,p^dag |0>,

with ``Phi_nm(p, k) = Phi_mn(k, p)``; its squared norm is ``sum_{m,n} |Phi_mn|^2``.
Only ``m <= n`` (in declaration order) is stored. The public pair amplitude is
``g_mm = Phi_mm`` and ``g_mn = sqrt(2) Phi_mn`` for ``m != n``, so that
``|g_mn|^2`` is the probability of finding one photon in each of ``m`` and ``n``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from ..errors import GridMismatch, InvalidArgument
from ..wavepackets import (
    FrequencyGrid,
    OnePhotonAmplitude,
    TwoPhotonAmplitude,
)

__all__ = [
    "BellLabel",
    "DetectorModel",
    "ModalTwoPhotonState",
    "apply_mode_map",
    "spectral_filter",
    "beamsplitter_apply",
    "beamsplitter_array",
    "bell_state",
]

SQRT2 = math.sqrt(2.0)

#: Components whose peak falls below this fraction of the largest one are
#: exact cancellations up to round-off and are dropped.
PRUNE_RTOL = 1e-14


class BellLabel(enum.Enum):
    PhiPlus = "phi+"
    PhiMinus = "phi-"
    PsiPlus = "psi+"
    PsiMinus = "psi-"

    @property
    def is_psi(self) -> bool:
        return self in (BellLabel.PsiPlus, BellLabel.PsiMinus)

    @property
    def sign(self) -> int:
        return 1 if self in (BellLabel.PhiPlus, BellLabel.PsiPlus) else -1

    @property
    def mode_pairs(self) -> tuple:
        """Control/target mode pairs (1-based) of the two superposed terms."""
        return ((1, 4), (2, 3)) if self.is_psi else ((1, 3), (2, 4))


@dataclass(frozen=True)
class DetectorModel:
    """Per-detector efficiency ``eta``; dark counts are zero by construction."""

    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidArgument(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def coincidence(self) -> float:
        return self.eta**2


class ModalTwoPhotonState:
    """Immutable-by-convention two-photon state over declared modes.

    ``ledger`` is a tuple of ``(label, probability)`` entries for branches that
    have left the coherent state (photon loss, detections).
    """

    def __init__(self, modes: Iterable[str], grid: FrequencyGrid, components=None, ledger=()):
        self.modes = tuple(modes)
        if len(set(self.modes)) != len(self.modes):
            raise InvalidArgument(f"duplicate modes in {self.modes}")
        self._order = {m: i for i, m in enumerate(self.modes)}
        self.grid = grid
        self._phi: Dict[Tuple[str, str], np.ndarray] = {}
        for key, arr in (components or {}).items():
            m, n = self._canonical(*key)
            if (m, n) != tuple(key):
                arr = np.asarray(arr).T
            self._phi[(m, n)] = np.asarray(arr, dtype=complex)
        self.ledger = tuple(ledger)

    # construction ---------------------------------------------------------
    @classmethod
    def from_pairs(cls, modes, pairs: Mapping[Tuple[str, str], TwoPhotonAmplitude], ledger=()):
        """Build from public pair amplitudes ``g_mn`` (see the module docstring)."""
        grid = None
        comps = {}
        for (m, n), amp in pairs.items():
            if grid is None:
                grid = amp.grid
            elif amp.grid != grid:
                raise GridMismatch("pair amplitudes live on different grids")
            v = amp.values if m == n else amp.values / SQRT2
            if m == n:
                v = 0.5 * (v + v.T)
            key = (m, n)
            comps[key] = comps.get(key, 0) + v
        if grid is None:
            raise InvalidArgument("at least one pair amplitude is required")
        state = cls(modes, grid, ledger=ledger)
        for key, v in comps.items():
            state._check_mode(key[0])
            state._check_mode(key[1])
            state._add(state._phi, key, v)
        return state

    def _check_mode(self, m):
        if m not in self._order:
            raise InvalidArgument(f"unknown mode {m!r}; declared {self.modes}")

    def _canonical(self, m, n):
        self._check_mode(m)
        self._check_mode(n)
        return (m, n) if self._order[m] <= self._order[n] else (n, m)

    def _add(self, store, key, arr):
        m, n = key
        c = self._canonical(m, n)
        if c != (m, n):
            arr = arr.T
        if c[0] == c[1]:
            arr = 0.5 * (arr + arr.T)
        store[c] = store[c] + arr if c in store else arr

    def _replace(self, components, ledger=None, modes=None) -> "ModalTwoPhotonState":
        peaks = {k: float(np.max(np.abs(v))) for k, v in components.items()}
        top = max(peaks.values(), default=0.0)
        components = {k: v for k, v in components.items() if peaks[k] > PRUNE_RTOL * top}
        return ModalTwoPhotonState(
            self.modes if modes is None else modes,
            self.grid,
            components,
            self.ledger if ledger is None else ledger,
        )

    # access ----------------------------------------------------------------
    def phi(self, m, n) -> np.ndarray:
        c = self._canonical(m, n)
        arr = self._phi.get(c)
        if arr is None:
            return np.zeros((self.grid.n_points,) * 2, dtype=complex)
        return arr if c == (m, n) else arr.T

    def amplitude(self, m, n) -> TwoPhotonAmplitude:
        v = self.phi(m, n)
        return TwoPhotonAmplitude(self.grid, v if m == n else SQRT2 * v)

    def pairs(self):
        return list(self._phi)

    def population(self, m, n) -> float:
        c = self._canonical(m, n)
        arr = self._phi.get(c)
        if arr is None:
            return 0.0
        w = self.grid.weights
        p = float(w @ (np.abs(arr) ** 2) @ w)
        return p if c[0] == c[1] else 2.0 * p

    def populations(self) -> dict:
        return {key: self.population(*key) for key in self._phi}

    def norm2(self) -> float:
        return float(sum(self.populations().values()))

    def ledger_total(self) -> float:
        return float(sum(p for _, p in self.ledger))

    def exchange_defect(self) -> float:
        """Largest violation of ``Phi_mm(k, p) = Phi_mm(p, k)``; zero by construction."""
        worst = 0.0
        for (m, n), arr in self._phi.items():
            if m == n:
                worst = max(worst, float(np.max(np.abs(arr - arr.T))))
        return worst

    def with_ledger(self, label: str, probability: float) -> "ModalTwoPhotonState":
        return self._replace(dict(self._phi), self.ledger + ((label, float(probability)),))

    def split(self, modes) -> tuple:
        """``(inside, outside)``: components with both photons in ``modes`` and the rest dropped.

        Returns the state restricted to pairs inside ``modes``, the state made
        of pairs with no photon in ``modes``, and the probability carried by
        pairs straddling the two sets.
        """
        modes = set(modes)
        inside, outside, straddle = {}, {}, 0.0
        for key, arr in self._phi.items():
            n_in = (key[0] in modes) + (key[1] in modes)
            if n_in == 2:
                inside[key] = arr
            elif n_in == 0:
                outside[key] = arr
            else:
                straddle += self.population(*key)
        return self._replace(inside, ledger=()), self._replace(outside), straddle


def apply_mode_map(state: ModalTwoPhotonState, images, *, new_modes=None, keys=None) -> dict:
    """Apply a frequency-independent linear map of the creation operators.

    ``images[m]`` maps a mode to ``{target_mode: coefficient}``; modes absent
    from ``images`` are left unchanged. Only the components listed in ``keys``
    (all by default) are mapped. Returns canonical components on
    ``new_modes`` (defaults to ``state.modes``).

    With ``a_m -> sum_p U_pm a_p`` the new components are
    ``Phi'_pq = sum_{m<n} (U_pm U_qn Phi_mn + U_pn U_qm Phi_mn^T) + sum_m U_pm U_qm Phi_mm``,
    so each output is one weighted sum plus one transpose.
    """
    target = ModalTwoPhotonState(new_modes or state.modes, state.grid)
    keys = state.pairs() if keys is None else keys

    def image(m):
        return images.get(m, {m: 1.0})

    outputs = []
    for m, n in keys:
        for p in image(m):
            for q in image(n):
                out = target._canonical(p, q)
                if out not in outputs:
                    outputs.append(out)
    comps = {}
    for p, q in outputs:
        direct, transposed = {}, {}
        for key in keys:
            m, n = key
            im, jn = image(m), image(n)
            if m == n:
                direct[key] = im.get(p, 0) * im.get(q, 0)
            else:
                direct[key] = im.get(p, 0) * jn.get(q, 0)
                transposed[key] = jn.get(p, 0) * im.get(q, 0)
        x = _weighted_sum(state, direct)
        y = _weighted_sum(state, transposed)
        if x is None and y is None:
            continue
        comps[(p, q)] = y.T if x is None else (x if y is None else x + y.T)
    return comps


def _weighted_sum(state, coefs):
    acc = None
    for key, c in coefs.items():
        if c == 0:
            continue
        term = c * state._phi[key]
        acc = term if acc is None else acc + term
    return acc


def spectral_filter(state: ModalTwoPhotonState, responses, *, keys=None) -> dict:
    """Multiply each photon in mode ``m`` by ``responses[m](k)``; other modes pass unchanged."""
    n = state.grid.n_points
    keys = state.pairs() if keys is None else keys
    one = np.ones(n)
    comps = {}
    for m, p in keys:
        rm = np.asarray(responses.get(m, one))
        rp = np.asarray(responses.get(p, one))
        comps[(m, p)] = rm[:, None] * state._phi[(m, p)] * rp[None, :]
    return comps


def beamsplitter_apply(state: ModalTwoPhotonState, pair) -> ModalTwoPhotonState:
    """Balanced real beamsplitter ``a -> (a + b)/sqrt2``, ``b -> (a - b)/sqrt2``.

    The map is its own inverse.
    """
    a, b = pair
    state._check_mode(a)
    state._check_mode(b)
    if a == b:
        raise InvalidArgument("a beamsplitter needs two distinct modes")
    r = 1.0 / SQRT2
    images = {a: {a: r, b: r}, b: {a: r, b: -r}}
    return state._replace(apply_mode_map(state, images))


def beamsplitter_array(state: ModalTwoPhotonState, pairs) -> ModalTwoPhotonState:
    for pair in pairs:
        state = beamsplitter_apply(state, pair)
    return state


def bell_state(label: BellLabel, f: OnePhotonAmplitude, modes=("1", "2", "3", "4")) -> ModalTwoPhotonState:
    """Normalised Bell state ``(a_i a_j +/- a_k a_l)/sqrt2 |0>`` with both photons in ``f``."""
    (i, j), (k, l) = label.mode_pairs
    ff = np.outer(f.values, f.values)
    amp = TwoPhotonAmplitude(f.grid, ff / SQRT2)
    neg = TwoPhotonAmplitude(f.grid, label.sign * ff / SQRT2)
    return ModalTwoPhotonState.from_pairs(
        modes, {(modes[i - 1], modes[j - 1]): amp, (modes[k - 1], modes[l - 1]): neg}
    )
