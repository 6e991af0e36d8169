import io
import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import random_operator

from perjacobi.cli import fmt_complex, run, verify_operator
from perjacobi.examples import example_3ii, pathological
from perjacobi.operator import save_operator, unperturbed


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def free4(tmp_path):
    p = tmp_path / "free4.json"
    save_operator(unperturbed(4), p)
    return p


@pytest.fixture
def rand5(tmp_path):
    p = tmp_path / "rand5.json"
    save_operator(random_operator(np.random.default_rng(11), 5), p)
    return p


def test_fmt_complex():
    assert fmt_complex(1.0) == "1"
    assert fmt_complex(-4 + 1e-17j) == "-4"
    assert fmt_complex(0.5 - 0.25j) == "0.5-0.25i"
    assert fmt_complex(1 / 3 + 2j) == "0.333333333333+2i"


def test_discriminant_free4(free4, tmp_path):
    out_json = tmp_path / "d.json"
    code, out, _ = call("discriminant", "--input", free4, "--output", out_json)
    assert code == 0 and out == "1 0 -4 0 2\n"
    d = json.loads(out_json.read_text())
    assert d["delta"] == [[2, 0], [0, 0], [-4, 0], [0, 0], [1, 0]]


def test_validation_errors(free4, tmp_path):
    assert call("discriminant")[0] == 1
    assert call("nonsense")[0] == 1
    assert call("discriminant", "--input", tmp_path / "missing.json")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert call("discriminant", "--input", bad)[0] == 1
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"N": 3, "a": [[1, 0]], "b": [[0, 0]]}))
    assert call("discriminant", "--input", wrong)[0] == 1
    assert call("eigs", "--input", free4, "--kappa", "4")[0] == 1
    assert call("spectrum", "--input", free4, "--slices", "1")[0] == 1
    assert call("toda", "--input", free4, "--step", "-1")[0] == 1
    assert call("demo", "nosuchdemo")[0] == 1
    assert call("eigs", "--input", free4, "--svg", tmp_path / "x.svg")[0] == 1
    code, _, err = call("inverse", "--input", free4)
    assert code == 1 and err.startswith("error:")


def test_computation_failure_exit_code(tmp_path):
    spectra = tmp_path / "s.json"
    spectra.write_text(json.dumps({"zeros_n": [[0, 0], [0.3, 0]], "zeros_n1": [[5, 0], [7, 0], [11, 0]]}))
    code, _, err = call("reconstruct", "--input", spectra)
    assert code == 2 and "InconsistentSpectraError" in err


def test_toda_abort_exit_code(tmp_path):
    p = tmp_path / "blowup.json"
    save_operator(random_operator(np.random.default_rng(9), 3), p)
    code, out, _ = call("toda", "--input", p, "--t-end", 2, "--step", 0.01)
    assert code == 2 and json.loads(out)["aborted"] is True


def test_verify_random_operator(rand5):
    code, out, _ = call("verify", "--input", rand5, "--seed", 3)
    assert code == 0
    rep = json.loads(out)
    assert rep["passed"] and max(rep["residuals"].values()) <= 1e-7


@pytest.mark.parametrize("seed", range(5))
def test_verify_operator_residuals(seed):
    rng = np.random.default_rng(seed)
    res = verify_operator(random_operator(rng, int(rng.integers(1, 9))), rng)
    assert max(res.values()) <= 1e-7


def test_spectrum_csv_and_svg(free4, tmp_path):
    csv, svg = tmp_path / "s.csv", tmp_path / "s.svg"
    code, out, _ = call("spectrum", "--input", free4, "--slices", 16, "--output", csv, "--svg", svg)
    assert code == 0 and out == ""
    lines = csv.read_text().splitlines()
    assert lines[0] == "kappa,re,im,arc_id" and len(lines) > 16
    text = svg.read_text()
    assert text.startswith("<svg") and "<polyline" in text and text.rstrip().endswith("</svg>")


def test_byte_identical_reruns(rand5, tmp_path):
    for verb, extra in (("spectrum", ["--slices", 32]), ("eigs", ["--kappa", 1.0]), ("dirichlet", [])):
        outs = []
        for i in range(2):
            f = tmp_path / f"{verb}{i}"
            assert call(verb, "--input", rand5, "--output", f, *extra)[0] == 0
            outs.append(f.read_bytes())
        assert outs[0] == outs[1]
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"N": 3, "target": [[0.5, 0], [3, 0], [0, 0], [-1, 0]]}))
    a = call("inverse", "--input", p, "--seed", 2)[1]
    b = call("inverse", "--input", p, "--seed", 2, "--threads", 2)[1]
    assert a == b


def test_eigs_json(free4):
    code, out, _ = call("eigs", "--input", free4, "--kappa", 0)
    fams = json.loads(out)["families"]
    assert code == 0 and [f["kind"] for f in fams] == ["periodic", "antiperiodic", "floquet(0.0)"]


def test_dirichlet_json(tmp_path):
    p = tmp_path / "path.json"
    save_operator(pathological(), p)
    code, out, _ = call("dirichlet", "--input", p)
    d = json.loads(out)
    assert code == 0 and [v["mult"] for v in d["dirichlet"]["values"]] == [3]
    assert max(d["trace_residuals"].values()) <= 1e-7


def test_classify_json(tmp_path):
    p = tmp_path / "ex.json"
    save_operator(example_3ii(), p)
    code, out, _ = call("classify", "--input", p, "--slices", 64)
    d = json.loads(out)
    assert code == 0
    assert sorted(j["algebraic"] for j in d["jordan"]) == [1, 1, 2, 2, 2]
    assert d["borg"]["outcome"] == "hypothesis not met"
    assert sum(e["pathology_second_kind"] for e in d["eigenvalues"]) == 3


def test_inverse_json(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"N": 2, "target": [[-2, 0], [0, 0], [1, 0]]}))
    code, out, _ = call("inverse", "--input", p)
    d = json.loads(out)
    assert code == 0 and len(d["solutions"]) == 1 and d["complete"]


def test_reconstruct_roundtrip(tmp_path):
    from perjacobi.cpoly import roots
    from perjacobi.inverse import dirichlet_pair

    b = np.array([0.3 + 1j, -0.5, 1.2 - 0.1j, 0.0])
    vN, vN1 = dirichlet_pair(b)
    pairs = lambda rs: [[z.real, z.imag] for z in roots(rs).expanded()]
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"zeros_n": pairs(vN), "zeros_n1": pairs(vN1)}))
    code, out, _ = call("reconstruct", "--input", p)
    got = np.array([complex(*z) for z in json.loads(out)["potential"]])
    assert code == 0 and np.abs(got - b).max() <= 1e-7


def test_toda_outputs(rand5, tmp_path):
    csv = tmp_path / "t.csv"
    code, out, _ = call("toda", "--input", rand5, "--t-end", 0.1, "--step", 0.001, "--output", csv)
    rep = json.loads(out)
    assert code == 0 and rep["discriminant_drift"] <= 1e-6 and not rep["aborted"]
    assert csv.read_text().splitlines()[0].startswith("t,c0_re,c0_im")


def test_demo_example3ii():
    code, out, _ = call("demo", "example3ii")
    assert code == 0
    assert "N = 4: 9 solutions" in out and "FAIL" not in out


@pytest.mark.parametrize("name", ["example1", "example2", "example3i", "example4", "pathological"])
def test_demo_passes(name, tmp_path):
    js = tmp_path / "d.json"
    code, out, _ = call("demo", name, "--output", js)
    assert code == 0 and "FAIL" not in out
    assert json.loads(js.read_text())["passed"] == {name: True}


def test_module_entry_point(free4):
    proc = subprocess.run(
        [sys.executable, "-m", "perjacobi", "discriminant", "--input", str(free4)], check=False, capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout == "1 0 -4 0 2\n"
