"""Passive Bell-state analyzer made of photon-sorter banks.

One stage: a beamsplitter array that makes psi-type pairs share a mode, a
bank of four sorters whose paired outputs are identified by linear optics,
the inverse array, then the same with an array that bunches phi-type pairs.
Whatever reaches the end of the chain is sent to a linear-optics analyzer
that can only tell the two psi states apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..errors import InvalidArgument
from ..scattering import EmitterParams, bound_term_apply, transmission_amplitude
from ..wavepackets import OnePhotonAmplitude, TwoPhotonAmplitude, default_grid, gaussian_pulse
from .modes import (
    BellLabel,
    DetectorModel,
    ModalTwoPhotonState,
    spectral_filter,
    beamsplitter_array,
    bell_state,
)
from .report import INCONCLUSIVE, BsaReport

__all__ = [
    "MODES",
    "BS_PSI",
    "BS_PHI",
    "StageResult",
    "sorter_bank",
    "identify_pairs",
    "linear_optics_fallback",
    "passive_bsa_stage",
    "passive_bsa_chain",
]

MODES = ("1", "2", "3", "4")
#: Mixing 1-4 and 2-3 bunches psi states; mixing 1-3 and 2-4 bunches phi states.
BS_PSI = (("1", "4"), ("2", "3"))
BS_PHI = (("1", "3"), ("2", "4"))
#: Readout array after the identification array; the coincidences
#: {1,3} / {2,4} versus {1,4} / {2,3} separate the + and - states.
BS_READ = (("1", "2"), ("3", "4"))
_PATTERNS = {("1", "3"): "+", ("2", "4"): "+", ("1", "4"): "-", ("2", "3"): "-"}
#: Coincidences of the final linear-optics analyzer (mixing 1-3, 2-4).
_LO_PATTERNS = {("1", "2"): "psi+", ("3", "4"): "psi+", ("1", "4"): "psi-", ("2", "3"): "psi-"}


class _BoundTermCache:
    """Re-use bound terms of components that are scalar multiples of each other.

    Bell inputs hand the four sorters of a bank identical amplitudes up to a
    sign, and the bound term is linear.
    """

    def __init__(self, e: EmitterParams, grid):
        self.e = e
        self.grid = grid
        self.seen = []

    def __call__(self, arr: np.ndarray) -> np.ndarray:
        i = np.unravel_index(np.argmax(np.abs(arr)), arr.shape)
        for ref, ref_fb in self.seen:
            if ref[i] != 0:
                c = arr[i] / ref[i]
                if np.array_equal(arr, c * ref) or np.allclose(arr, c * ref, rtol=0, atol=1e-15 * abs(arr[i])):
                    return c * ref_fb
        fb = bound_term_apply(self.e, TwoPhotonAmplitude(self.grid, arr)).values
        self.seen.append((arr, fb))
        return fb


def sorter_bank(e: EmitterParams, state: ModalTwoPhotonState, modes, prefix: str) -> ModalTwoPhotonState:
    """Send each of ``modes`` through its own (identical-arm) sorter.

    The ``b_out`` port of the sorter on mode ``m`` becomes mode ``prefix + m``;
    the ``a_out`` port keeps the name ``m``. Pairs split over two sorters only
    pick up ``t_k t_p``; a pair inside one sorter leaves as
    ``t t Phi + f_B/2`` in ``a`` and ``f_B/2`` in ``b``. Lost probability is
    appended to the ledger.
    """
    modes = tuple(modes)
    out_modes = state.modes + tuple(prefix + m for m in modes)
    t = transmission_amplitude(e, state.grid.nodes)
    keys = state.pairs()
    same = [k for k in keys if k[0] == k[1] and k[0] in modes]
    rest = [k for k in keys if k not in same]
    comps = spectral_filter(state, {m: t for m in modes}, keys=rest)
    cache = _BoundTermCache(e, state.grid)
    T = t[:, None] * t[None, :]
    for m, _ in same:
        arr = state.phi(m, m)
        fb = cache(arr)
        comps[(m, m)] = T * arr + 0.5 * fb
        comps[(prefix + m, prefix + m)] = 0.5 * fb
    result = ModalTwoPhotonState(out_modes, state.grid, comps, state.ledger)
    lost = max(0.0, state.norm2() - result.norm2())
    return result.with_ledger(f"loss:{prefix}", lost)


def _relabel(state: ModalTwoPhotonState, mapping: Dict[str, str]) -> ModalTwoPhotonState:
    comps = {(mapping[m], mapping[n]): state.phi(m, n) for m, n in state.pairs()}
    return ModalTwoPhotonState(tuple(mapping[m] for m in state.modes), state.grid, comps, state.ledger)


def identify_pairs(
    state: ModalTwoPhotonState,
    det: DetectorModel,
    identification,
    family: str,
    patterns=None,
    readout=BS_READ,
) -> Dict[str, float]:
    """Detect a two-photon state on modes 1-4 after ``identification`` then ``readout``.

    Each coincidence pattern in ``patterns`` is credited with ``eta^2`` times
    its population; everything else, including bunched pairs and missed
    photons, is inconclusive (the photons are absorbed either way).
    """
    s = beamsplitter_array(beamsplitter_array(state, identification), readout)
    if patterns is None:
        patterns = {pair: family + sign for pair, sign in _PATTERNS.items()}
    verdicts: Dict[str, float] = {}
    total = s.norm2()
    credited = 0.0
    for pair, verdict in patterns.items():
        p = det.coincidence * s.population(*pair)
        verdicts[verdict] = verdicts.get(verdict, 0.0) + p
        credited += p
    verdicts[INCONCLUSIVE] = max(0.0, total - credited)
    return verdicts


def _add_verdicts(acc: Dict[str, float], new: Dict[str, float]) -> None:
    for k, v in new.items():
        acc[k] = acc.get(k, 0.0) + v


def _detect_port(state: ModalTwoPhotonState, prefix: str, det: DetectorModel, bunch, family: str):
    """Measure the ``prefix`` port of a bank; return (verdicts, remaining a-mode state)."""
    port = [prefix + m for m in MODES]
    inside, outside, straddle = state.split(port)
    inside = _relabel(
        ModalTwoPhotonState(port, state.grid, {k: inside.phi(*k) for k in inside.pairs()}),
        dict(zip(port, MODES)),
    )
    verdicts = identify_pairs(inside, det, bunch, family) if inside.pairs() else {}
    verdicts[INCONCLUSIVE] = verdicts.get(INCONCLUSIVE, 0.0) + straddle
    rest = ModalTwoPhotonState(MODES, state.grid, {k: outside.phi(*k) for k in outside.pairs()}, state.ledger)
    return verdicts, rest


@dataclass
class StageResult:
    verdicts: Dict[str, float]
    residual: ModalTwoPhotonState
    loss: float
    input_norm2: float

    def ledger_defect(self) -> float:
        return abs(sum(self.verdicts.values()) + self.residual.norm2() + self.loss - self.input_norm2)


def passive_bsa_stage(e: EmitterParams, det: DetectorModel, state: ModalTwoPhotonState) -> StageResult:
    if set(state.modes) != set(MODES):
        raise InvalidArgument(f"passive stage acts on modes {MODES}, got {state.modes}")
    n_in = state.norm2()
    ledger0 = state.ledger_total()
    verdicts: Dict[str, float] = {}
    s = beamsplitter_array(state, BS_PSI)
    s = sorter_bank(e, s, MODES, "b")
    v, s = _detect_port(s, "b", det, BS_PSI, "psi")
    _add_verdicts(verdicts, v)
    s = beamsplitter_array(s, BS_PSI)
    s = beamsplitter_array(s, BS_PHI)
    s = sorter_bank(e, s, MODES, "c")
    v, s = _detect_port(s, "c", det, BS_PHI, "phi")
    _add_verdicts(verdicts, v)
    s = beamsplitter_array(s, BS_PHI)
    return StageResult(verdicts, s, s.ledger_total() - ledger0, n_in)


def linear_optics_fallback(state: ModalTwoPhotonState, det: DetectorModel) -> Dict[str, float]:
    """Standard linear-optics analyzer: mix 1-3 and 2-4, psi states give coincidences.

    phi states bunch and stay inconclusive; this is the 50 % bound.
    """
    if not state.pairs():
        return {INCONCLUSIVE: 0.0}
    return identify_pairs(state, det, (), "psi", patterns=_LO_PATTERNS, readout=BS_PHI)


def passive_bsa_chain(
    e: EmitterParams,
    det: DetectorModel,
    n_stages: int,
    spec,
    *,
    grid=None,
    labels=tuple(BellLabel),
) -> BsaReport:
    """``n_stages`` passive stages followed by the linear-optics fallback, per Bell state."""
    if n_stages < 0:
        raise InvalidArgument("n_stages must be >= 0")
    if isinstance(spec, OnePhotonAmplitude):
        f = spec
    else:
        grid = grid or default_grid(spec.width, spec.carrier, e.linewidth, two_photon=True)
        f = gaussian_pulse(spec, grid)
    report = BsaReport(metadata={"device": "passive", "n_stages": n_stages, "eta": det.eta})
    for bell in labels:
        state = bell_state(bell, f)
        verdicts: Dict[str, float] = {}
        loss = 0.0
        for _ in range(n_stages):
            r = passive_bsa_stage(e, det, state)
            _add_verdicts(verdicts, r.verdicts)
            loss += r.loss
            state = r.residual
        _add_verdicts(verdicts, linear_optics_fallback(state, det))
        # absorbed photons end inconclusive
        verdicts[INCONCLUSIVE] = verdicts.get(INCONCLUSIVE, 0.0) + loss
        report.add_row(bell, verdicts)
    return report
