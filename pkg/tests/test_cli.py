from __future__ import annotations

import json

import pytest

from formgerms.cli import (
    EXIT_BUDGET,
    EXIT_DEGENERATE,
    EXIT_FRAME,
    EXIT_PARSE,
    main,
    validate,
)


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), (json.loads(err) if err else None)


def model_doc(family, **params):
    return {"model": {"family": family, "params": params}}


def test_classify_type1(tmp_path, capsys):
    path = write(tmp_path, "t1.json", model_doc("Type1"))
    code, out, _ = run(capsys, ["classify", "--input", path])
    assert code == 0
    assert out["type"] == 1 and out["I"] == "0"
    validate(out, "classify")


def test_classify_example51_at_origin(tmp_path, capsys):
    path = write(tmp_path, "e51.json", model_doc("Example51", a="x1*x3+x2*x4", b="0"))
    code, out, _ = run(capsys, ["classify", "--input", path])
    assert code == 0
    assert out["I"] == "-1" and out["omega_class"] == 4


def test_classify_from_coefficients_with_parameters(tmp_path, capsys):
    doc = {"coefficients": {"F12": "1", "F34": "c", "F14": "x2"}, "parameters": {"c": "2"}}
    code, out, _ = run(capsys, ["classify", "--input", write(tmp_path, "d.json", doc), "--point", "0,1,0,0"])
    assert code == 0 and out["rank"] == 4
    assert out["point"] == ["0", "1", "0", "0"]


def test_rank_two_input_is_degenerate(tmp_path, capsys):
    doc = {"coefficients": {"F12": "1"}}
    code, _, err = run(capsys, ["classify", "--input", write(tmp_path, "r2.json", doc)])
    assert code == EXIT_DEGENERATE
    assert err["error"] == "degenerate" and err["rank"] == 2 and err["exit_code"] == EXIT_DEGENERATE


@pytest.mark.parametrize("doc", [
    "{not json",
    {"coefficients": {"F12": "1 +* x1"}},
    {"coefficients": {"F12": "1", "F34": "c"}},
    {"coefficients": {"F99": "1"}},
])
def test_parse_failures(tmp_path, capsys, doc):
    code, _, err = run(capsys, ["classify", "--input", write(tmp_path, "bad.json", doc)])
    assert code == EXIT_PARSE
    validate(err, "error")


def test_order_budget(tmp_path, capsys):
    path = write(tmp_path, "e18.json", model_doc("Example18", c="1", **{"lambda": "1"}))
    code, _, err = run(capsys, ["frame", "--input", path, "--order", "3"])
    assert code == EXIT_BUDGET and err["error"] == "order-budget"


def test_frame_on_low_type_and_degenerate_frame(tmp_path, capsys):
    code, _, _ = run(capsys, ["frame", "--input", write(tmp_path, "t1.json", model_doc("Type1"))])
    assert code == EXIT_DEGENERATE


def test_frame_report(tmp_path, capsys):
    path = write(tmp_path, "e18.json", model_doc("Example18", c="1", **{"lambda": "2"}))
    code, out, _ = run(capsys, ["frame", "--input", path, "--order", "5"])
    assert code == 0
    validate(out, "frame")
    assert set(out["primed_table"]) == {"Z,Tp", "Z,Up", "Z,Vp", "Tp,Up", "Tp,Vp", "Up,Vp"}
    for ident in out["identities"].values():
        if ident["applicable"]:
            assert ident["residual"] == "0"


def test_equiv_commands(tmp_path, capsys):
    a = write(tmp_path, "a.json", model_doc("Example18", c="1", **{"lambda": "1"}))
    b = write(tmp_path, "b.json", model_doc("Example18", c="1", **{"lambda": "2"}))
    code, out, _ = run(capsys, ["equiv", "--input", a, "--input", b, "-r", "1"])
    assert code == 0 and out["verdict"] == "Inequivalent"
    code, out, _ = run(capsys, ["equiv", "--input", a, "--input", a, "-r", "1", "--backend", "float"])
    assert code == 0 and out["verdict"] == "Equivalent-to-order-r"
    t2 = write(tmp_path, "t2.json", model_doc("Type2"))
    code, _, err = run(capsys, ["equiv", "--input", a, "--input", t2])
    assert code == EXIT_FRAME and err["error"] == "indeterminate"
    code, _, _ = run(capsys, ["equiv", "--input", a])
    assert code == EXIT_PARSE


def test_generate_example18_grid(tmp_path, capsys):
    spec = {"family": "Example18", "params": {"c": 1}, "grid": {"lambda": [1, 2, 3], "c": [1, 2]}}
    out_dir = tmp_path / "docs"
    code, out, _ = run(capsys, ["generate", "--input", write(tmp_path, "g.json", spec), "--output-dir", str(out_dir)])
    assert code == 0
    assert len(out["documents"]) == 6 and len(list(out_dir.iterdir())) == 6
    for item in out["documents"]:
        assert isinstance(item["document"]["generic"], bool)
        validate(item["document"], "document")


def test_generate_prop51_batch(tmp_path, capsys):
    spec = {"family": "Prop51", "count": 3, "degree": 2, "seed": 5}
    code, out, _ = run(capsys, ["generate", "--input", write(tmp_path, "g.json", spec)])
    assert code == 0 and len(out["documents"]) == 3
    for item in out["documents"]:
        assert all(r["verdict"] == "Zero" for r in item["document"]["check_system"].values())


def test_generate_rejects_invalid_spec(tmp_path, capsys):
    code, _, err = run(capsys, ["generate", "--input", write(tmp_path, "g.json", {"family": "Example18", "bogus": 1})])
    assert code == EXIT_PARSE and err["error"] == "invalid-spec"


def test_check_system(tmp_path, capsys):
    doc = model_doc("Prop51", F12="1", F13="x2")
    code, out, _ = run(capsys, ["check-system", "--input", write(tmp_path, "p.json", doc)])
    assert code == 0
    validate(out, "check_system")
    assert all(r["verdict"] == "Zero" for r in out["residuals"].values())
    code, _, err = run(capsys, ["check-system", "--input", write(tmp_path, "q.json", model_doc("Prop51", F99="1"))])
    assert code == EXIT_PARSE and err["error"] == "invalid-document"
