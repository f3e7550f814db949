from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from catspec import guard
from catspec.dsl import canonical_text, parse, tokenize, workspace_of
from catspec.errors import DslError, GuardrailExceeded
from catspec.fincat.builders import finset

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("path", sorted(GOLDEN.glob("*.cat")), ids=lambda p: p.stem)
def test_golden_files_round_trip(path):
    ws = parse(path.read_bytes())
    again = parse(canonical_text(ws))
    assert again.structure() == ws.structure()
    # printing is a fixed point after one pass
    assert canonical_text(again) == canonical_text(ws)


def test_identities_are_implicit():
    ws = parse("category C { objects: a b; morphisms: f : a -> b; }")
    C = ws.categories["C"]
    assert sorted(C.morphisms) == ["f", "id_a", "id_b"]
    assert C.compose("f", "id_a") == "f"


def test_quoted_names():
    ws = parse('category "a b" { objects: "x y"; }')
    assert list(ws.categories["a b"].objects) == ["x y"]
    assert parse(canonical_text(ws)).structure() == ws.structure()


def test_declaration_order_does_not_matter():
    text = "functor F : C -> C { objects: a => a; }\ncategory C { objects: a; }"
    ws = parse(text)
    assert ws.functors["F"].src is ws.categories["C"]


@pytest.mark.parametrize("text, message, line, col", [
    ("category C {\n  objects: a b c;\n  morphisms: f : a -> b g : b -> c;\n}\n", "missing composite g*f", 3, 25),
    ("category C { objects: a; morphisms: f : a -> z; }", "unknown object 'z'", 1, 46),
    ("category C { objects: a", "expected a name", 1, 24),
    ("category C { objects: a; }\ncategory C { objects: b; }", "duplicate definition of 'C'", 2, 10),
    ("group G { elements: e s; unit: e; mul: s * s = e; }\ngroup H { elements: e s; unit: e; }",
     "missing product s*s", 2, 7),
])
def test_errors_carry_locations(text, message, line, col):
    with pytest.raises(DslError) as e:
        parse(text)
    assert message in e.value.message
    assert (e.value.line, e.value.col) == (line, col)


def test_invalid_functor_is_reported_at_its_declaration():
    text = ("category C { objects: a b; morphisms: f: a -> b; }\n"
            "functor F : C -> C { objects: a => b b => a; morphisms: f => f; }")
    with pytest.raises(DslError, match="fails validation") as e:
        parse(text)
    assert e.value.line == 2


def test_bad_utf8_is_located():
    with pytest.raises(DslError) as e:
        parse(b"# ok\ncategory \xff { }")
    assert e.value.message == "invalid UTF-8" and (e.value.line, e.value.col) == (2, 10)


def test_comments_are_skipped():
    kinds = [t.kind for t in tokenize("a # b c\nd")]
    assert kinds.count("name") == 2


def test_workspace_of_prints_a_parsable_table():
    S = finset(2)
    ws = workspace_of([S])
    back = parse(canonical_text(ws))
    T = back.categories[S.name]
    assert len(T.morphisms) == len(S.morphisms)
    assert back.structure() == ws.structure()


def test_guardrail_surfaces_while_parsing():
    text = (GOLDEN / "finset.cat").read_bytes()
    with guard.guardrail(10):
        with pytest.raises(GuardrailExceeded):
            parse(text)


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=200))
def test_arbitrary_bytes_parse_or_fail_cleanly(data):
    try:
        parse(data)
    except DslError as e:
        assert e.line >= 1 and e.col >= 1
