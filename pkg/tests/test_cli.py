"""Command-line behavior: subcommands, exit codes, report shapes."""
import json
import os

import numpy as np
import pytest

from qcablocks import serialize as ser
from qcablocks.cli import main
from qcablocks.rand import conjugated_factor_generators

SPEC_DIR = os.path.join(os.path.dirname(__file__), "..", "specs")


def spec(name):
    return os.path.join(SPEC_DIR, name)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_verify_xor_nonlocal(capsys):
    code, report = run(capsys, "verify", spec("xor.json"), "--window", "8")
    assert code == 1
    assert report["status"] == "nonlocal"
    assert report["unitary"] and report["shift_invariant"]
    assert report["witness"]["trace_distance"] > 1e-9


def test_verify_shift_local(capsys):
    code, report = run(capsys, "verify", spec("shift.json"))
    assert code == 0
    assert report["status"] == "local"
    lo, hi = report["neighborhood"]
    assert 0 <= lo <= hi <= 1


def test_verify_swap_window_local(capsys):
    code, report = run(capsys, "verify", spec("swap.json"), "--window", "4")
    assert code == 0
    assert report["status"] == "local"


def test_verify_missing_file_exit_2(capsys):
    code, report = run(capsys, "verify", spec("missing.json"))
    assert code == 2
    assert report["error"] == "ParseFailure"


def test_verify_malformed_json_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, report = run(capsys, "verify", str(bad))
    assert code == 2


def test_decompose_toffoli_grouped(tmp_path, capsys):
    out = tmp_path / "dec.json"
    code = main(["decompose", spec("toffoli_grouped.json"), "--window", "4",
                 "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    report = json.loads(out.read_text())
    assert report["certification"]["residual"] <= 1e-7
    assert report["p"] * report["q"] == 16
    # the output re-verifies as a local block automaton
    code2, report2 = run(capsys, "verify", str(out))
    assert code2 == 0
    assert report2["status"] == "local"
    lo, hi = report2["neighborhood"]
    assert 0 <= lo <= hi <= 1


def test_decompose_xor_not_local(capsys):
    code, report = run(capsys, "decompose", spec("xor.json"), "--window", "4")
    assert code == 1
    assert report["error"] == "NotLocal"


def test_simulate_shift_displaces_support(capsys):
    code, report = run(capsys, "simulate", spec("shift.json"),
                       "--state", spec("states/excitation.json"), "--steps", "3")
    assert code == 0
    assert report["terms"][0]["cells"] == {"0": "1"}


def test_simulate_zero_steps_echoes(capsys):
    code, report = run(capsys, "simulate", spec("shift.json"),
                       "--state", spec("states/excitation.json"), "--steps", "0")
    assert code == 0
    original = ser.load(spec("states/excitation.json"))
    assert report["terms"] == original["terms"]


def test_simulate_vacuum_stays_vacuum(tmp_path, capsys):
    from qcablocks.gallery import swap_qca
    from qcablocks.model import SparseState
    vac = tmp_path / "vacuum.json"
    vac.write_text(json.dumps(ser.state_to_json(
        SparseState.vacuum(swap_qca().alphabet))))
    code, report = run(capsys, "simulate", spec("swap.json"),
                       "--state", str(vac), "--steps", "5")
    assert code == 0
    assert report["terms"] == [{"cells": {}, "amp": [1.0, 0.0]}]


def test_simulate_kind_mismatch_exit_2(capsys):
    code, report = run(capsys, "simulate", spec("kari.json"),
                       "--state", spec("states/excitation.json"))
    assert code == 2


def test_signal_xor_fixture(capsys):
    code, report = run(capsys, "signal", spec("xor.json"),
                       "--state-a", spec("states/xor_plus.json"),
                       "--state-b", spec("states/xor_minus.json"),
                       "--probe", "0", "--context", "0,1")
    assert code == 1
    assert report["trace_distance"] == pytest.approx(1.0, abs=1e-9)


def test_signal_block_control_no_witness(tmp_path, capsys):
    # the same fixtures adapted to the shift automaton produce no signal:
    # encode the two branches over the shift alphabet
    from qcablocks.gallery import shift_qca
    from qcablocks.model import SparseState, config_from_cells
    g = shift_qca()
    zeros = config_from_cells(g.alphabet, {})
    ones = config_from_cells(g.alphabet, {1: "1", 2: "1", 3: "1"})
    amp = 1 / np.sqrt(2)
    plus = tmp_path / "p.json"
    minus = tmp_path / "m.json"
    plus.write_text(json.dumps(ser.state_to_json(
        SparseState(g.alphabet, {zeros: amp, ones: amp}))))
    minus.write_text(json.dumps(ser.state_to_json(
        SparseState(g.alphabet, {zeros: amp, ones: -amp}))))
    code, report = run(capsys, "signal", spec("shift.json"),
                       "--state-a", str(plus), "--state-b", str(minus),
                       "--probe", "0", "--context", "0,1")
    assert code == 0
    assert report["trace_distance"] <= 1e-9


def test_signal_mismatched_context_exit_2(tmp_path, capsys):
    from qcablocks.gallery import xor_ca
    from qcablocks.model import SparseState
    rule = xor_ca()
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(json.dumps(ser.state_to_json(
        SparseState.from_cells(rule.alphabet, {1: "0"}))))
    b.write_text(json.dumps(ser.state_to_json(
        SparseState.from_cells(rule.alphabet, {1: "1"}))))
    code, report = run(capsys, "signal", spec("xor.json"),
                       "--state-a", str(a), "--state-b", str(b),
                       "--probe", "0", "--context", "1,2")
    assert code == 2


def test_algebra_factor_roundtrip(tmp_path, capsys):
    gens, _ = conjugated_factor_generators(2, 3, seed=17)
    path = tmp_path / "alg.json"
    path.write_text(json.dumps(ser.algebra_spec_to_json(6, gens)))
    code, report = run(capsys, "algebra-factor", str(path))
    assert code == 0
    assert (report["p"], report["q"]) == (2, 3)
    assert report["residual"] <= 1e-8


def test_algebra_factor_nontrivial_center_exit_1(tmp_path, capsys):
    diag = np.diag([1.0, 0.0]).astype(complex)
    path = tmp_path / "alg.json"
    path.write_text(json.dumps(ser.algebra_spec_to_json(2, [diag])))
    code, report = run(capsys, "algebra-factor", str(path))
    assert code == 1
    assert report["error"] == "NontrivialCenter"


def test_reports_are_deterministic_given_seed(capsys):
    code1, rep1 = run(capsys, "decompose", spec("swap.json"), "--window", "4",
                      "--seed", "5")
    code2, rep2 = run(capsys, "decompose", spec("swap.json"), "--window", "4",
                      "--seed", "5")
    assert code1 == code2 == 0
    assert rep1 == rep2
