import json

import pytest

from lpuhf.cli import EXIT_CAPACITY, EXIT_FAIL, EXIT_INPUT, EXIT_OK, main

K23 = '{"family": "gamma_corner", "d": 2, "gamma": 3}'
BASIC = '{"d": 2, "diagonal": true, "index": [{"label": "1", "f": 1, "s": [[1, 0], [0, 1]]}]}'
TWO = ('{"d": 2, "diagonal": true, "index": [{"label": "1", "f": "1/2", "s": [[1, 0], [0, 1]]},'
       ' {"label": "s", "f": "1/2", "s": [[1, 0], [0, 2]]}]}')


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_norm_corner_unit(capsys):
    code, out, _ = run(capsys, "norm", K23, "--unit", "1,2", "--p", "2")
    rec = json.loads(out)
    assert code == EXIT_OK and rec["lower"] == rec["upper"] == 3


def test_norm_identity_element(capsys, tmp_path):
    path = tmp_path / "sys.json"
    path.write_text(BASIC)
    code, out, _ = run(capsys, "norm", str(path), "[[1, 0], [0, 1]]")
    assert code == EXIT_OK and json.loads(out)["upper"] == 1


def test_norm_oversize_is_capacity(capsys, monkeypatch):
    monkeypatch.setenv("LPUHF_MAX_DIM", "4")
    big = '{"d": 8, "index": [{"label": "1", "f": 1, "s": [[1]]}]}'
    code, _, err = run(capsys, "norm", big, "--unit", "1,1")
    assert code == EXIT_CAPACITY and "capacity" in err


def test_malformed_json_is_input_error(capsys):
    code, _, err = run(capsys, "norm", "{not json", "--unit", "1,2")
    assert code == EXIT_INPUT and "input error" in err


def test_pbound_exact(capsys):
    code, out, _ = run(capsys, "pbound", TWO, "--p", "3")
    rec = json.loads(out)
    assert code == EXIT_OK and rec["exact"] == "2/1"


def test_system_validate(capsys):
    code, out, _ = run(capsys, "system", "validate", BASIC)
    assert code == EXIT_OK and json.loads(out)["ok"]
    bad = '{"d": 2, "index": [{"label": "a", "f": "9/10", "s": [[2, 0], [0, 1]]}]}'
    code, out, _ = run(capsys, "system", "validate", bad)
    rec = json.loads(out)
    assert code == EXIT_FAIL and set(rec["violations"]) == {"ONE", "SUM"}


@pytest.mark.parametrize("source, verdict", [
    ('{"family": "power", "c": 1, "a": 2}', "CONVERGENT_SPATIAL"),
    ('{"family": "power", "c": 1, "a": 1}', "DIVERGENT_NONAMENABLE"),
    ('{"p": 2, "stages": [{"d": 2}, {"d": 2}, {"d": 3}, {"d": 2}, {"d": 2}]}', "UNDETERMINED"),
])
def test_classify(capsys, source, verdict):
    code, out, _ = run(capsys, "classify", source, "--n", "10")
    assert code == EXIT_OK and json.loads(out)["verdict"] == verdict


def test_classify_unknown_family(capsys):
    code, _, _ = run(capsys, "classify", '{"family": "zeta", "c": 1}')
    assert code == EXIT_INPUT


def test_flip(capsys):
    code, out, _ = run(capsys, "flip", '{"stages": [{"d": 2}, {"d": 3}]}')
    rec = json.loads(out)
    assert code == EXIT_OK and rec["norm"]["lower"] == rec["norm"]["upper"] == 1 and rec["involution"]


def test_spatialize(capsys):
    code, out, _ = run(capsys, "spatialize", TWO, "--p", "3")
    rec = json.loads(out)
    assert code == EXIT_OK and rec["residual"] == "0" and rec["norms"]["w"] == 2


def test_spatial_check(capsys):
    code, out, _ = run(capsys, "spatial-check", TWO, "--p", "3")
    assert code == EXIT_FAIL and "norm 2" in json.loads(out)["reason"]
    code, out, _ = run(capsys, "spatial-check", BASIC, "--p", "3")
    assert code == EXIT_OK and json.loads(out)["spatial"]


def test_verify_none(capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, out, _ = run(capsys, "verify", "--suite", "none", "--out", str(out_path))
    rep = json.loads(out_path.read_text())
    assert code == EXIT_OK and rep["records"] == [] and "0 PASS" in out


def test_verify_flip_suite(capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, _, _ = run(capsys, "verify", "--suite", "flip", "--out", str(out_path))
    rep = json.loads(out_path.read_text())
    assert code == EXIT_OK and rep["records"] and all(r["status"] == "PASS" for r in rep["records"])
    assert all(r["ref"] for r in rep["records"])


def test_verify_byte_stable(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "verify", "--suite", "flip,series", "--seed", "5", "--out", str(a))
    run(capsys, "verify", "--suite", "flip,series", "--seed", "5", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_verify_unknown_suite(capsys):
    code, _, err = run(capsys, "verify", "--suite", "bogus")
    assert code == EXIT_INPUT and "bogus" in err


def test_bad_exponent_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["pbound", BASIC, "--p", "1/2"])
