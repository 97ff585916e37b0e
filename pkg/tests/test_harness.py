import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from wqed import ConvergenceFailure, InvalidArgument
from wqed.harness import cli
from wqed.harness.commands import rerun_from_metadata, run_command
from wqed.harness.config import PRESETS, ConfigError, RunConfig, parse_config, parse_config_text
from wqed.harness.tables import UNCONVERGED, ResultTable, SweepSpec, read_csv, read_json

GOLDEN = Path(__file__).parent / "golden"

#: reduced flag sets, one per subcommand, small enough for the unit suite
GOLDEN_RUNS = {
    "transmission": [],
    "fig1b": ["--sigma", "0.1,0.36,1.0"],
    "fig3": ["--sigma", "0.36"],
    "fig4": ["--sigma", "0.1", "--gamma-ratio", "0,0.2"],
    "fig5b": ["--gamma-ratio", "0.2", "--stages", "1", "--grid-points", "641", "--grid-halfwidth", "16"],
    "qnd": ["--purcell", "10,32"],
    "sorter": ["--stages", "2"],
    "oracle-validate": ["--quick"],
}


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- configuration


def test_empty_config_file_gives_defaults(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# nothing set\n\n")
    assert parse_config(path) == RunConfig()


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("gamma_ratio = 0.1\nsigma = 0.36  # pulse\n")
    cfg = parse_config(path, {"gamma_ratio": "0.2", "sigma": None})
    assert cfg.gamma_ratio == (0.2,)
    assert cfg.sigma == (0.36,)


def test_negative_loss_ratio_exits_2(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("gamma_ratio = -1\n")
    code, out, err = run(["transmission", "--config", str(path)], capsys)
    assert code == 2 and out == ""
    assert "gamma_ratio" in err


def test_unknown_key_is_named_with_line(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("sigma = 0.1\nwidth = 3\n")
    code, _, err = run(["fig1b", "--config", str(path)], capsys)
    assert code == 2
    assert "width" in err and ":2:" in err
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign here")


@pytest.mark.parametrize("argv", [
    ["qnd", "--alpha", "1.5"],
    ["qnd", "--eta", "2"],
    ["fig1b", "--sigma", "abc"],
    ["fig1b", "--grid-points", "100"],
    ["qnd", "--preset", "unobtainium"],
])
def test_invalid_values_exit_2(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["fig1b", "--bogus"])
    assert exc.value.code == 2


def test_presets():
    assert PRESETS == {"flux-qubit": 32.0, "diamond": 2.6}
    assert RunConfig(preset="diamond").gamma_ratios((0.0,)) == (1 / 2.6,)
    assert RunConfig(preset="flux-qubit", gamma_ratio=(0.5,)).gamma_ratios(()) == (0.5,)


def test_preset_drives_qnd(capsys):
    code, out, _ = run(["qnd", "--preset", "flux-qubit", "--alpha", "0.70710678"], capsys)
    t = read_csv(out)
    assert code == 0
    assert t.column("efficiency")[0] == pytest.approx(32 / 33, abs=1e-4)


def test_config_round_trips_through_dict():
    cfg = RunConfig(sigma=(0.1, 0.2), gamma_ratio=(0.0,), stages=3, quick=True)
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"nope": 1})


# ---------------------------------------------------------------- tables


def test_sweep_spec_invariants():
    assert np.allclose(SweepSpec("x", 1, 100, 3, "log").values(), [1, 10, 100])
    for args in [("x", 1, 1, 3), ("x", 0, 1, 1), ("x", 0, 1, 3, "log"), ("x", 0, 1, 3, "cubic")]:
        with pytest.raises(InvalidArgument):
            SweepSpec(*args)


def test_table_is_rectangular_and_round_trips():
    t = ResultTable(["a", "b"], {"command": "x", "note": "hi"})
    t.add_row([1, 0.1 + 0.2])
    t.add_row([2, math.pi], UNCONVERGED, "too coarse")
    with pytest.raises(InvalidArgument):
        t.add_row([1, 2, 3])
    for back in (read_csv(t.to_csv()), read_json(t.to_json())):
        assert back.columns == t.columns
        assert back.rows == [[1.0, 0.1 + 0.2], [2.0, math.pi]]
        assert back.row_status == t.row_status
        assert back.metadata == t.metadata
    assert t.full_metadata()["row_notes"] == ["", "too coarse"]
    with pytest.raises(ConvergenceFailure):
        t.check_converged(False)
    t.check_converged(True)


def test_every_row_carries_status(capsys):
    _, out, _ = run(["fig1b", "--sigma", "0.36"], capsys)
    t = read_csv(out)
    assert len(t.row_status) == len(t.rows) == 3
    assert set(t.row_status) == {"converged"}


# ---------------------------------------------------------------- subcommands


def test_transmission_rows(capsys):
    code, out, _ = run(["transmission", "--gamma-ratio", "0,1"], capsys)
    t = read_csv(out)
    assert code == 0
    on_res = t.where(k_minus_omega0_over_Gamma=0.0)
    lossless = on_res.where(gamma_over_Gamma=0.0).rows[0]
    critical = on_res.where(gamma_over_Gamma=1.0).rows[0]
    cols = t.columns
    assert lossless[cols.index("re_t")] == -1.0 and lossless[cols.index("im_t")] == 0.0
    assert critical[cols.index("abs_t")] == 0.0
    assert np.all(t.column("abs_t") <= 1.0 + 1e-15)


def test_fig3_diagonal_and_symmetry(capsys):
    _, out, _ = run(["fig3", "--sigma", "0.36"], capsys)
    t = read_csv(out)
    g1, g2, p = t.column("Gamma1_over_Gamma_bar"), t.column("Gamma2_over_Gamma_bar"), t.column("p_err")
    assert np.all(p[g1 == g2] == 0.0)
    lookup = {(a, b): v for a, b, v in zip(g1, g2, p)}
    assert all(lookup[(a, b)] == pytest.approx(lookup[(b, a)], rel=1e-12, abs=1e-300) for a, b in lookup)


def test_fig4_monochromatic_limit(capsys):
    _, out, _ = run(["fig4", "--gamma-ratio", "0", "--eta", "0.9"], capsys)
    t = read_csv(out)
    mono = t.where(sigma_over_Gamma=0.0)
    assert mono.column("p_success_eq14")[0] == pytest.approx(0.81, abs=1e-12)
    assert "sigma_note" in t.metadata


def test_qnd_sweep_peak(capsys):
    code, out, _ = run(["qnd", "--purcell", "10,32"], capsys)
    t = read_csv(out)
    assert code == 0
    assert np.all(t.column("p_dark") == 0.0)
    for purcell, expected in ((10.0, 0.9091), (32.0, 0.9697)):
        sub = t.where(purcell=purcell)
        eff = sub.column("efficiency")
        assert sub.column("alpha")[np.argmax(eff)] == pytest.approx(0.7071, abs=1e-3)
        assert eff.max() == pytest.approx(expected, abs=1e-4)


def test_sorter_rows_accumulate(capsys):
    _, out, _ = run(["sorter", "--stages", "3"], capsys)
    t = read_csv(out)
    assert list(t.column("stage")) == [1, 2, 3]
    assert np.allclose(np.cumsum(t.column("p_b")), t.column("cumulative_success"), rtol=1e-14)


def test_oracle_validate_passes_by_default(capsys):
    code, out, _ = run(["oracle-validate"], capsys)
    t = read_csv(out)
    assert code == 0
    assert np.all(t.column("passed") == 1)
    assert np.all(t.column("extrapolated_error") < 0.01)


def test_oracle_validate_catches_mutation(capsys):
    code, out, err = run(["oracle-validate", "--mutate-kernel", "1.1", "--gamma-ratio", "0"], capsys)
    assert code == 3
    assert "disagrees" in err
    t = read_csv(out)
    assert t.where(excitations=2.0).column("passed")[0] == 0
    assert t.where(excitations=1.0).column("passed")[0] == 1


def test_oracle_validate_quick_warns_and_reports_order(capsys):
    code, out, err = run(["oracle-validate", "--quick", "--gamma-ratio", "0"], capsys)
    assert code == 0
    assert "warning" in err
    assert np.all(read_csv(out).column("order") > 1.5)


def test_unconverged_rows_need_explicit_flag(capsys, tmp_path):
    argv = ["fig1b", "--sigma", "1.0", "--gamma-ratio", "0", "--grid-points", "5", "--grid-halfwidth", "20"]
    code, out, err = run(argv, capsys)
    assert code == 3 and out == ""
    assert "--allow-unconverged" in err
    code, out, _ = run(argv + ["--allow-unconverged"], capsys)
    assert code == 0
    assert read_csv(out).row_status == [UNCONVERGED]


def test_io_error_exits_4(tmp_path, capsys):
    code, _, err = run(["transmission", "--out", str(tmp_path / "missing" / "t.csv")], capsys)
    assert code == 4 and "I/O" in err


def test_json_output(capsys, tmp_path):
    path = tmp_path / "q.json"
    assert run(["qnd", "--purcell", "10", "--alpha", "0.5", "--format", "json", "--out", str(path)], capsys)[0] == 0
    doc = json.loads(path.read_text())
    assert doc["columns"] == ["purcell", "alpha", "efficiency", "p_dark"]
    assert len(doc["rows"]) == 1 and doc["metadata"]["command"] == "qnd"


# ---------------------------------------------------------------- determinism and reproduction


def _golden_text(name, tmp_path, capsys):
    path = tmp_path / f"{name}.csv"
    assert run([name, *GOLDEN_RUNS[name], "--out", str(path)], capsys)[0] == 0
    return path.read_text()


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_output_is_deterministic_and_matches_golden(name, tmp_path, capsys):
    first = _golden_text(name, tmp_path, capsys)
    assert _golden_text(name, tmp_path, capsys) == first
    golden = GOLDEN / f"{name}.csv"
    if os.environ.get("WQED_REGEN_GOLDEN"):
        golden.write_text(first)
    ref, new = read_csv(golden.read_text()), read_csv(first)
    assert new.columns == ref.columns and new.row_status == ref.row_status
    assert np.allclose(np.array(new.rows), np.array(ref.rows), rtol=1e-10, atol=1e-14, equal_nan=True)


@pytest.mark.parametrize("name", ["transmission", "fig4", "qnd", "sorter"])
def test_metadata_reruns_the_computation(name, tmp_path, capsys):
    table = read_csv(_golden_text(name, tmp_path, capsys))
    again = rerun_from_metadata(table.metadata)
    assert np.array_equal(np.array(again.rows), np.array(table.rows))


def test_unknown_command_is_rejected():
    with pytest.raises(InvalidArgument):
        run_command("fig9", RunConfig())


def test_fig4_threshold_and_protocol_agreement(capsys):
    code, out, _ = run(["fig4"], capsys)
    t = read_csv(out)
    assert code == 0
    mono = t.where(sigma_over_Gamma=0.0)
    g, p = mono.column("gamma_over_Gamma"), mono.column("p_success_eq14")
    i = int(np.flatnonzero(np.diff(np.sign(p - 0.5)))[0])
    root = g[i] + (0.5 - p[i]) * (g[i + 1] - g[i]) / (p[i + 1] - p[i])
    assert root == pytest.approx(1 / 5.83, abs=0.002)
    narrow = t.where(sigma_over_Gamma=0.1)
    gn = narrow.column("gamma_over_Gamma")
    closed, proto = narrow.column("p_success_eq14"), narrow.column("p_success_protocol")
    # the phi correction is an additive sigma^4 term, so relative agreement
    # only holds where the success itself is not vanishing
    keep = gn <= 0.3
    assert np.all(np.abs(proto[keep] - closed[keep]) / closed[keep] < 0.01)
    assert np.all(np.abs(proto - closed) < 1e-3)
