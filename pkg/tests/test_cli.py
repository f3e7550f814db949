import json
from pathlib import Path

import pytest

from catspec import cli

GOLDEN = Path(__file__).parent / "golden"


def g(name):
    return str(GOLDEN / name)


@pytest.mark.parametrize("name", sorted(p.name for p in GOLDEN.glob("*.cat")))
def test_validate_golden(name):
    code, rep = cli.run(["validate", g(name)])
    assert code == 0 and rep["ok"] and rep["schema"] == 1


@pytest.mark.parametrize("presheaf, code", [("Fun", 0), ("Const", 1)])
def test_check_sheaf(presheaf, code):
    c, rep = cli.run(["check", "sheaf", "--file", g("sierpinski.cat"), "--presheaf", presheaf, "--site", "J"])
    assert c == code
    if code:
        assert rep["result"]["witness"]


def test_constant_category_presheaf_is_not_a_stack():
    c, rep = cli.run(["check", "stack", "--file", g("sierpinski.cat"), "--pseudofunctor", "ConstCat",
                      "--site", "J"])
    assert c == 1 and rep["result"]["stack"] is False


def test_topology_and_fibration_checks():
    assert cli.run(["check", "topology", "--file", g("sierpinski.cat"), "--site", "J"])[0] == 0
    assert cli.run(["check", "fibration", "--file", g("finset.cat"), "--functor", "cod"])[0] == 0
    assert cli.run(["check", "group", "--file", g("quotient.cat"), "--group", "Z2"])[0] == 0
    assert cli.run(["check", "action", "--file", g("quotient.cat"), "--action", "Swap"])[0] == 0


def test_grothendieck_output_parses(tmp_path):
    out = tmp_path / "total.cat"
    c, rep = cli.run(["grothendieck", "--file", g("groth.cat"), "--pseudofunctor", "F", "--out", str(out)])
    assert c == 0 and rep["result"]["fibration"]
    c, rep = cli.run(["validate", str(out)])
    assert c == 0 and rep["result"]["counts"]["functors"] == 1


def test_quotient_by_swap():
    c, rep = cli.run(["quotient", "--file", g("quotient.cat"), "--action", "Swap"])
    assert c == 0 and rep["result"]["quotient"] == "n1"


def test_covering():
    c, rep = cli.run(["covering", "--file", g("covering.cat"), "--functor", "pY2", "--object", "pt"])
    assert c == 0 and rep["result"]["deckOrder"] == 2


def test_missing_file_is_a_usage_error(tmp_path):
    c, rep = cli.run(["validate", str(tmp_path / "nope.cat")])
    assert c == 2 and rep["error"]["kind"] == "usage"


def test_syntax_error_has_location(tmp_path):
    bad = tmp_path / "bad.cat"
    bad.write_text("category C {\n  objects: a;\n  morphisms: f : a -> q;\n}\n")
    c, rep = cli.run(["validate", str(bad)])
    assert c == 2
    assert rep["error"]["kind"] == "syntax" and rep["error"]["line"] == 3


def test_guardrail_flag():
    c, rep = cli.run(["validate", g("finset.cat"), "--max-morphisms", "10"])
    assert c == 2 and rep["error"]["kind"] == "guardrail"


def test_timing_and_json(capsys):
    assert cli.main(["validate", g("two.cat"), "--timing"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["schema"] == 1 and rep["timing"]["seconds"] >= 0


def test_bad_arguments():
    assert cli.run(["check", "nonsense", "--file", g("two.cat")])[0] == 2
    c, rep = cli.run(["check", "sheaf", "--file", g("sierpinski.cat"), "--presheaf", "Nope", "--site", "J"])
    assert c == 2 and rep["error"]["kind"] == "usage"
