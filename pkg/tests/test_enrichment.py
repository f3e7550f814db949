import itertools

import pytest

from catspec.enrichment import (ConcreteCategory, enrichment_report, generalized_elements, ge_presheaf,
                                representable_comparison, uncurry, yoneda_extend)
from catspec.fincat.builders import cyclic_group, finset
from catspec.fixtures import concrete_posets
from catspec.presheaf import SetFunctor, terminal_presheaf


@pytest.fixture(scope="module")
def posets():
    return concrete_posets()


def test_products_and_terminal(posets):
    assert posets.validate().ok
    assert posets.terminal == "pt"
    F = ConcreteCategory.search(finset(2))
    assert F.terminal == "n1"
    # n2 x n2 needs four elements
    assert ("n2", "n2") not in F.products and ("n1", "n2") in F.products


@pytest.mark.parametrize("Z, X, Y", [("C2", "C2", "C2"), ("D2", "C2", "C2"),
                                     ("C2", "C2", "D2"), ("pt", "C2", "C2")])
def test_generalized_elements_match_literal_search(posets, Z, X, Y):
    cat = posets.cat
    families = list(itertools.product(cat.hom(X, Y), repeat=len(cat.carriers[Z])))
    P, _, _ = posets.product(Z, X)

    def lifts(e):
        u = uncurry(posets, Z, X, e)
        return any(all(cat.apply(h, w) == u[w] for w in cat.carriers[P]) for h in cat.hom(P, Y))

    assert generalized_elements(posets, Z, X, Y) == [e for e in families if lifts(e)]


def test_enrichment_laws(posets):
    objs = ["pt", "C2", "D2"]
    assert enrichment_report(posets, objects=objs, Ws=objs).ok
    assert ge_presheaf(posets, "C2", "C2").validate().ok


def test_yoneda_on_representables():
    S = finset(2)
    F = SetFunctor(S, {c: S.carriers[c] for c in S.objects},
                   {u: {a: S.apply(u, a) for a in S.carriers[S.dom(u)]} for u in S.morphisms}, "U")
    for c in S.objects:
        assert representable_comparison(F, S, c)


def test_colimit_over_group_counts_orbits():
    # Z/4 acting on 6 points by a 4-cycle plus two fixed points: 3 orbits
    G = cyclic_group(4)
    perm = {0: 1, 1: 2, 2: 3, 3: 0, 4: 4, 5: 5}

    def power(k):
        out = {x: x for x in perm}
        for _ in range(k):
            out = {x: perm[out[x]] for x in out}
        return out

    maps = {m: power(0 if m == "id_pt" else int(m[1:])) for m in G.morphisms}
    F = SetFunctor(G, {"pt": tuple(perm)}, maps, "X")
    assert F.validate().ok
    assert len(yoneda_extend(F, terminal_presheaf(G))) == 3
