import ast
import math
from pathlib import Path

import numpy as np
import pytest

from wqed import (
    ConvergenceFailure,
    EmitterParams,
    GaussianPulseSpec,
    InvalidArgument,
    bound_term_apply,
    gaussian_pulse,
    inner,
    norm2,
    product_two_photon,
    transmission_amplitude,
)
from wqed.oracle import (
    LatticeConfig,
    evolve_one_excitation,
    evolve_two_excitation,
    extract_momentum_amplitude,
    lattice_for_pulse,
    validate_closed_form,
)
from wqed.oracle import lattice as lattice_module
from wqed.oracle.validate import validation_grid


def _setup(sigma, gamma, dx):
    e = EmitterParams(0.0, 1.0, gamma)
    spec = GaussianPulseSpec(0.0, sigma)
    cfg = lattice_for_pulse(spec, e, dx)
    grid = validation_grid(spec, e, cfg.total_steps * dx)
    return e, spec, cfg, grid, gaussian_pulse(spec, grid)


def test_integrator_does_not_import_closed_form():
    tree = ast.parse(Path(lattice_module.__file__).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module or "")
            imported.update(a.name for a in node.names)
        elif isinstance(node, ast.Import):
            imported.update(a.name for a in node.names)
    assert not any("scattering" in name for name in imported)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_sites=1000, site_spacing=0.1, atom_site_index=500, total_steps=10),
        dict(n_sites=1024, site_spacing=0.1, atom_site_index=1023, total_steps=10),
        dict(n_sites=1024, site_spacing=0.1, atom_site_index=0, total_steps=1),
        dict(n_sites=1024, site_spacing=0.1, atom_site_index=100, total_steps=200),
        dict(n_sites=1024, site_spacing=0.0, atom_site_index=100, total_steps=20),
    ],
)
def test_lattice_config_invariants(kwargs):
    with pytest.raises(InvalidArgument):
        LatticeConfig(**kwargs)


def test_halved_lattice_covers_same_window():
    cfg = LatticeConfig(1024, 0.1, 1013, 900, launch_offset=3.0)
    half = cfg.halved()
    assert half.n_sites == 2048 and half.site_spacing == 0.05
    assert half.total_steps * half.site_spacing == pytest.approx(cfg.total_steps * cfg.site_spacing)
    assert half.positions()[-1] == cfg.positions()[-1]


def test_one_excitation_lossless_conserves_norm():
    e, _, cfg, _, f = _setup(0.36, 0.0, 0.1)
    r = evolve_one_excitation(e, f, cfg)
    assert abs(r.total_probability - r.initial_norm) < 1e-10
    assert r.max_ledger_error < 1e-10


def test_one_excitation_loss_ledger_closes():
    e, _, cfg, _, f = _setup(0.36, 0.3, 0.1)
    r = evolve_one_excitation(e, f, cfg)
    assert r.lost_probability > 0.1
    assert r.max_ledger_error < 1e-8


@pytest.mark.parametrize("gamma", [0.0, 0.3])
def test_extracted_transmission_matches_closed_form(gamma):
    e, spec, cfg, grid, f = _setup(2.0, gamma, 0.025)
    band = np.abs(grid.nodes) <= 5.0
    ratios = []
    for c in (cfg, cfg.halved()):
        out = extract_momentum_amplitude(evolve_one_excitation(e, f, c), grid)
        ratios.append(out.values[band] / f.values[band])
    exact = transmission_amplitude(e, grid.nodes[band])
    assert np.max(np.abs(ratios[0] - exact)) < 1e-3
    extrapolated = (4 * ratios[1] - ratios[0]) / 3
    assert np.max(np.abs(extrapolated - exact)) < 1e-4
    order = math.log2(np.max(np.abs(ratios[0] - exact)) / np.max(np.abs(ratios[1] - exact)))
    assert order > 1.0


def test_decoupled_emitter_returns_the_input():
    e, spec, cfg, grid, f = _setup(0.36, 0.0, 0.1)
    weak = EmitterParams(0.0, 1e-14, 0.0)
    r = evolve_one_excitation(weak, f, cfg)
    out = extract_momentum_amplitude(r, grid)
    assert abs(inner(f, out)) ** 2 > 1 - 1e-9
    assert norm2(out) == pytest.approx(norm2(f), abs=1e-6)


def test_untouched_gaussian_round_trip():
    e, spec, cfg, grid, f = _setup(0.36, 0.0, 0.1)
    r = evolve_one_excitation(EmitterParams(0.0, 1e-300, 0.0), f, cfg)
    out = extract_momentum_amplitude(r, grid)
    assert abs(inner(f, out)) ** 2 > 1 - 1e-8


def test_extraction_refuses_packet_still_at_emitter():
    e, spec, cfg, grid, f = _setup(0.36, 0.0, 0.1)
    short = LatticeConfig(cfg.n_sites, cfg.site_spacing, cfg.atom_site_index, cfg.total_steps // 2,
                          launch_offset=cfg.launch_offset)
    r = evolve_one_excitation(e, f, short)
    with pytest.raises(ConvergenceFailure):
        extract_momentum_amplitude(r, grid)


def test_extraction_refuses_aliasing_grid():
    e, spec, cfg, _, _ = _setup(0.36, 0.0, 0.1)
    from wqed import build_grid

    coarse = build_grid(0.0, 3.6, 49)
    f = gaussian_pulse(spec, coarse)
    with pytest.raises(ConvergenceFailure):
        evolve_one_excitation(e, f, cfg)


def test_two_excitation_lossless_norm_and_symmetry():
    e, spec, cfg, grid, f = _setup(0.36, 0.0, 0.2)
    g = product_two_photon(f)
    r = evolve_two_excitation(e, g, cfg)
    assert abs(r.total_probability - r.initial_norm) < 1e-8
    assert r.max_ledger_error < 1e-8
    assert np.array_equal(r.field, r.field.T)


@pytest.mark.parametrize("fraction", [0.25, 0.5, 0.75])
def test_two_excitation_symmetry_holds_mid_run(fraction):
    e, spec, cfg, grid, f = _setup(0.36, 0.2, 0.2)
    partial = LatticeConfig(cfg.n_sites, cfg.site_spacing, cfg.atom_site_index,
                            max(1, int(cfg.total_steps * fraction)), launch_offset=cfg.launch_offset)
    r = evolve_two_excitation(e, product_two_photon(f), partial)
    assert np.array_equal(r.field, r.field.T)
    assert r.max_ledger_error < 1e-8


def test_two_excitation_loss_ledger_closes():
    e, spec, cfg, grid, f = _setup(0.36, 0.2, 0.2)
    r = evolve_two_excitation(e, product_two_photon(f), cfg)
    assert r.lost_probability > 0.1
    assert r.max_ledger_error < 1e-8


def test_two_excitation_memory_guard():
    e, spec, cfg, grid, f = _setup(0.36, 0.0, 0.2)
    with pytest.raises(InvalidArgument):
        evolve_two_excitation(e, product_two_photon(f), cfg, max_sites=cfg.n_sites // 2)


def test_oracle_bound_term_residual():
    """Run output minus t t g is the oracle's bound term: symmetric and close to the kernel."""
    e, spec, cfg, grid, f = _setup(0.36, 0.0, 0.1)
    g = product_two_photon(f)
    t = transmission_amplitude(e, grid.nodes)
    linear = np.outer(t, t) * g.values
    outs = [extract_momentum_amplitude(evolve_two_excitation(e, g, c), grid).values for c in (cfg, cfg.halved())]
    fb_oracle = (4 * outs[1] - outs[0]) / 3 - linear
    assert np.max(np.abs(fb_oracle - fb_oracle.T)) < 1e-12
    fb = bound_term_apply(e, g)
    w = np.outer(grid.weights, grid.weights)
    rel = math.sqrt(np.sum(w * np.abs(fb_oracle - fb.values) ** 2) / np.sum(w * np.abs(fb.values) ** 2))
    assert rel < 0.01
    # golden bound-state probability of one sorter on this grid, pinned by the oracle itself
    p_oracle = 0.25 * float(np.sum(w * np.abs(fb_oracle) ** 2))
    assert p_oracle == pytest.approx(0.25 * norm2(fb), rel=0.02)
    assert p_oracle == pytest.approx(0.73208, abs=2e-4)
    assert p_oracle == pytest.approx(0.73217061, abs=1e-3)


@pytest.mark.parametrize("gamma", [0.0, 0.2])
def test_validation_gate_passes(gamma):
    rep = validate_closed_form(EmitterParams(0.0, 1.0, gamma), GaussianPulseSpec(0.0, 0.36))
    assert rep.passed, rep.summary()
    assert rep.order == pytest.approx(2.0, abs=0.3)
    assert rep.max_ledger_error < 1e-8


def test_validation_gate_catches_mutated_kernel():
    rep = validate_closed_form(EmitterParams(0.0, 1.0, 0.0), GaussianPulseSpec(0.0, 0.36), kernel_scale=1.1)
    assert not rep.passed
    assert rep.extrapolated_error > 0.05


def test_validation_of_single_photon_map():
    rep = validate_closed_form(EmitterParams(0.0, 1.0, 0.2), GaussianPulseSpec(0.0, 0.36), excitations=1)
    assert rep.passed and rep.extrapolated_error < 1e-4
    with pytest.raises(InvalidArgument):
        validate_closed_form(EmitterParams(), GaussianPulseSpec(0.0, 0.36), excitations=3)
