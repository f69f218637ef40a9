import json

import numpy as np
import pytest

from helpers import XX, haar, local
from udiscrim.cli import dumps, gate_to_json, main, parse_gate, read_gate, write_gate
from udiscrim.errors import InputError
from udiscrim.linalg import CNOT, SWAP, UnitaryGate


@pytest.fixture
def gates(tmp_path):
    rng = np.random.default_rng(0)
    mats = {
        "i4": (np.eye(4), (2, 2)),
        "xx": (XX, (2, 2)),
        "zz": (np.diag([1, -1, -1, 1.0]), (2, 2)),
        "cnot": (CNOT, (2, 2)),
        "cnot_dressed": (local(rng) @ CNOT @ local(rng), (2, 2)),
        "swap": (SWAP, (2, 2)),
        "i2": (np.eye(2), (2,)),
        "m2": (-np.eye(2), (2,)),
        "i3": (np.eye(3), (3,)),
        "d3": (np.diag([-1, -1, 1.0]), (3,)),
        "prod": (np.kron(np.diag([1, 1j]), np.diag([1, np.exp(2.5j)])), (2, 2)),
        "swap3": (np.kron(SWAP, np.eye(2)), (2, 2, 2)),
        "phase_cnot": (np.exp(0.3j) * CNOT, (2, 2)),
    }
    paths = {}
    for name, (m, dims) in mats.items():
        p = tmp_path / f"{name}.json"
        write_gate(str(p), UnitaryGate(m, dims))
        paths[name] = str(p)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dims": [2], "matrix": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]}))
    paths["bad"] = str(bad)
    return paths


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out else None), out.err


def test_gate_round_trip_exact():
    rng = np.random.default_rng(1)
    for d, dims in ((4, (2, 2)), (6, (2, 3)), (8, (2, 2, 2))):
        g = UnitaryGate(haar(d, rng), dims)
        back = parse_gate(gate_to_json(g))
        assert back.dims == dims
        assert np.array_equal(back.matrix, g.matrix)


def test_dumps_is_loadable_and_precise():
    vals = {"a": 0.1, "b": 1 / 3, "c": [1 + 2j], "d": None, "e": True, "f": float("nan")}
    text = dumps(vals)
    loaded = json.loads(text)
    assert loaded["b"] == 1 / 3 and loaded["c"] == [[1.0, 2.0]]


@pytest.mark.parametrize("text", ["not json", "{}", '{"dims": [2], "matrix": [[1, 0]]}',
                                  '{"dims": ["2"], "matrix": []}'])
def test_parse_gate_errors(text):
    with pytest.raises(InputError):
        parse_gate(text)


def test_read_missing_file():
    with pytest.raises(InputError):
        read_gate("/nonexistent/gate.json")


def test_classify(capsys, gates):
    code, rep, _ = _run(capsys, "classify", gates["swap"])
    assert code == 0 and rep["results"]["label"] == "ProductSwap"
    code, rep, _ = _run(capsys, "classify", gates["cnot"])
    assert rep["results"]["label"] == "Imprimitive"
    code, rep, _ = _run(capsys, "classify", gates["swap3"])
    assert rep["results"]["partition"] == [[1], [2], [3]]


def test_classify_non_unitary_exit_2(capsys, gates):
    code, rep, err = _run(capsys, "classify", gates["bad"])
    assert code == 2 and rep is None and "unitary" in err


def test_minruns_examples(capsys, gates):
    _, rep, _ = _run(capsys, "minruns", gates["i3"], gates["d3"])
    assert rep["results"]["n_runs"] == 1
    code, rep, _ = _run(capsys, "minruns", gates["i2"], gates["m2"])
    assert code == 0 and rep["results"]["verdict"] == "NotDistinguishable"
    _, rep, _ = _run(capsys, "minruns", gates["i2"], gates["m2"], "--embed", "1")
    assert rep["results"]["n_runs"] == 1


def test_minruns_local_product(capsys, gates):
    _, rep, _ = _run(capsys, "minruns", gates["i4"], gates["prod"], "--local-product")
    res = rep["results"]
    assert res["n_runs"] == 1
    lp = res["local_product"]
    assert lp["delta_a"] == pytest.approx(np.pi / 2) and lp["delta_b"] == pytest.approx(2.5)
    assert lp["product_input_suffices"] is False and lp["n_runs"] == 2


def test_minruns_dimension_mismatch(capsys, gates):
    code, _, _ = _run(capsys, "minruns", gates["i2"], gates["i3"])
    assert code == 2


def test_kak(capsys, gates):
    _, rep, _ = _run(capsys, "kak", gates["cnot"])
    assert rep["results"]["canonical_vector"] == pytest.approx([np.pi / 4, 0, 0], abs=1e-9)
    assert rep["results"]["reconstruction_residual"] <= 1e-9
    code, _, _ = _run(capsys, "kak", gates["i3"])
    assert code == 2


def test_lie_closure(capsys, gates):
    _, rep, _ = _run(capsys, "lie-closure", gates["cnot"])
    assert rep["results"]["closure_dimension"] == 16
    _, rep, _ = _run(capsys, "lie-closure", gates["swap3"])
    assert rep["results"]["partition"] == [[1], [2], [3]]
    assert rep["results"]["permutation"] == "(1 2)"


def test_simulate_choi(capsys, gates):
    code, rep, _ = _run(capsys, "simulate", gates["i4"], gates["xx"], "--strategy", "choi", "--trials", 100)
    s = rep["results"]["summary"]
    assert code == 0 and s["correct"] == 100
    assert s["oracle_uses_min"] == s["oracle_uses_max"] == 1


def test_simulate_pipeline(capsys, gates):
    code, rep, _ = _run(capsys, "simulate", gates["cnot"], gates["cnot_dressed"], "--strategy", "pipeline2q",
                        "--trials", 10)
    s = rep["results"]["summary"]
    assert code == 0 and s["correct"] == 10 and s["oracle_uses_max"] <= 20


def test_simulate_eliminate_logs_two_tests(capsys, gates, tmp_path):
    log = tmp_path / "t.log"
    code, rep, _ = _run(capsys, "simulate", gates["i4"], gates["xx"], gates["zz"], "--strategy", "eliminate",
                        "--log", log)
    assert code == 0 and rep["results"]["trials"][0]["tests"] == 2
    lines = log.read_text().splitlines()
    assert sum(line.startswith("MSG bob") for line in lines) == 2
    assert lines[-1].startswith("VERDICT")


def test_simulate_inapplicable_exit_3(capsys, gates):
    code, _, err = _run(capsys, "simulate", gates["i4"], gates["cnot"], "--strategy", "choi")
    assert code == 3 and err


def test_simulate_phase_pair_is_a_verdict(capsys, gates):
    code, rep, _ = _run(capsys, "simulate", gates["cnot"], gates["phase_cnot"], "--strategy", "pipeline2q")
    assert code == 0 and rep["results"]["verdict"] == "NotDistinguishable"
    assert rep["results"]["pair"] == [1, 2]


def test_tol_override_echoed(capsys, gates):
    _, rep, _ = _run(capsys, "kak", gates["cnot"], "--tol", "unitarity=1e-8")
    assert rep["tolerances"]["unitarity"] == 1e-8
    code, _, _ = _run(capsys, "kak", gates["cnot"], "--tol", "nonsense=1")
    assert code == 2


def test_report_determinism(capsys, gates, monkeypatch):
    argv = ["simulate", gates["cnot"], gates["cnot_dressed"], "--strategy", "pipeline2q", "--trials", "3"]
    outs = []
    for _ in range(2):
        main(argv + ["--seed", "5"])
        outs.append(capsys.readouterr().out.encode())
    assert outs[0] == outs[1]
    monkeypatch.setenv("UDISCRIM_SEED", "5")
    main(argv)
    env_out = json.loads(capsys.readouterr().out)
    assert env_out["results"] == json.loads(outs[0])["results"]


def test_report_records_input_digests(capsys, gates):
    _, rep, _ = _run(capsys, "classify", gates["cnot"])
    assert rep["command"]["command"] == "classify"
    assert len(rep["inputs"][0]["sha256"]) == 64
