import itertools

import pytest
from hypothesis import given, settings, strategies as st

from catspec import guard
from catspec.errors import GuardrailExceeded, NotComposable, UnknownId
from catspec.fibrations import cartesian_mask
from catspec.fincat import (Functor, Opposite, analyze_functor, as_table, find_isomorphism, find_limits,
                            full_subcategory, identity_functor, isomorphisms, make_category,
                            natural_iso_between, validate_category, validate_functor)
from catspec.fincat.builders import ArrowCategory, cyclic_group, finset, poset_category, walking_arrow


def two():
    return make_category(["a", "b"], {"f": ("a", "b")}, {}, "Two")


def test_identities_are_generated():
    C = two()
    assert C.morphisms == ("id_a", "id_b", "f")
    assert C.compose("f", "id_a") == "f"
    assert C.hom("a", "b") == ("f",)
    assert validate_category(C).ok


def test_bad_composition_and_names():
    C = two()
    with pytest.raises(NotComposable):
        C.compose("id_a", "f")
    with pytest.raises(UnknownId):
        C.dom("nope")


def test_missing_composite_is_reported():
    C = make_category(["a", "b", "c"], {"f": ("a", "b"), "g": ("b", "c")}, {}, "Broken")
    assert not validate_category(C).ok


def test_cyclic_group_inverses():
    G = cyclic_group(3)
    assert G.compose("r1", "r2") == "id_pt"
    assert G.inverse("r1") == "r2"
    assert validate_category(G).ok


def test_finset_counts():
    S = finset(3)
    # |hom(m, n)| = n^m
    for m, n in itertools.product(range(4), repeat=2):
        assert len(S.hom(f"n{m}", f"n{n}")) == n ** m
    inj = finset(3, injective=True)
    assert len(inj.hom("n2", "n3")) == 6


def test_limits_in_finset():
    S = finset(3)
    assert [w.apex for w in find_limits(S, "terminal")] == ["n1"]
    assert [w.apex for w in find_limits(S, "initial")] == ["n0"]
    prods = find_limits(S, "product", ("n1", "n2"))
    assert {w.apex for w in prods} == {"n2"}
    # n2 x n2 would have four elements
    assert find_limits(S, "product", ("n2", "n2")) == []


def test_opposite_swaps_ends():
    C = walking_arrow()
    op = Opposite(C)
    assert op.dom("u") == C.cod("u")
    assert validate_category(op).ok
    assert validate_category(as_table(op)).ok


def test_functor_analysis_flags():
    C = two()
    assert analyze_functor(identity_functor(C)).equivalence
    P = make_category(["p"], {}, {}, "Pt")
    collapse = Functor(C, P, {"a": "p", "b": "p"}, {"id_a": "id_p", "id_b": "id_p", "f": "id_p"}, "c")
    assert validate_functor(collapse).ok
    a = analyze_functor(collapse)
    assert a.faithful and not a.full
    assert not a.equivalence


def test_nonfunctor_detected():
    C = two()
    bad = Functor(C, C, {"a": "a", "b": "a"}, {"id_a": "id_a", "id_b": "id_a", "f": "f"}, "bad")
    assert not validate_functor(bad).ok


def test_isomorphism_search():
    G = cyclic_group(4)
    assert find_isomorphism(G, cyclic_group(4)) is not None
    assert find_isomorphism(G, cyclic_group(3)) is None
    S = finset(2)
    assert sorted(isomorphisms(S, "n2", "n2")) == ["id_n2", "n2_n2_10"]


def test_natural_iso_of_identity():
    C = cyclic_group(2)
    assert natural_iso_between(identity_functor(C), identity_functor(C)) is not None


def test_full_subcategory_validates():
    S = finset(3)
    sub = full_subcategory(S, ["n1", "n2"])
    assert validate_category(sub).ok
    assert set(sub.objects) == {"n1", "n2"}


def test_guardrail_refuses_large_arrow_category():
    p = ArrowCategory(finset(3)).cod_functor()
    with pytest.raises(GuardrailExceeded) as err:
        cartesian_mask(p)
    assert err.value.size == 74112 and err.value.bound == guard.DEFAULT_MAX_MORPHISMS


def test_guardrail_environment(monkeypatch):
    monkeypatch.setenv("CATSPEC_MAX_MORPHISMS", "5")
    assert guard.max_morphisms() == 5
    with guard.guardrail(99):
        assert guard.max_morphisms() == 99
    with pytest.raises(GuardrailExceeded):
        find_limits(finset(2), "terminal")


@st.composite
def relations(draw):
    n = draw(st.integers(1, 5))
    pts = [f"x{i}" for i in range(n)]
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=8))
    rel = {(i, j) for i, j in pairs if i < j}
    # transitive closure keeps the relation a partial order
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(rel), repeat=2):
            if b == c and (a, d) not in rel:
                rel.add((a, d))
                changed = True
    return pts, [(pts[i], pts[j]) for i, j in rel]


@settings(max_examples=60, deadline=None)
@given(relations())
def test_posets_are_categories(data):
    pts, rel = data
    P = poset_category(pts, rel)
    assert validate_category(P).ok
    for x, y in itertools.product(pts, repeat=2):
        assert len(P.hom(x, y)) == int(x == y or (x, y) in rel)
