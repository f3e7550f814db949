import itertools
import random

import pytest

from catspec import guard
from catspec.errors import PreconditionError
from catspec.fibrations import classify, fiber
from catspec.fincat import analyze_functor, validate_category, validate_functor
from catspec.fincat.builders import ArrowCategory, finset
from catspec.fixtures import random_structure, structure_fixtures
from catspec.structures import (all_almost_structures, almost_structure_category, fibers_are_posets,
                                full_almost, identity_criteria, intersection_structure, is_structure,
                                presheaf_embedding_injective, structure_embedding)


@pytest.fixture(scope="module")
def fixtures():
    return structure_fixtures()


def test_fixtures_are_structures(fixtures):
    for p in fixtures.values():
        assert is_structure(p).ok
        assert fibers_are_posets(p).ok
        assert presheaf_embedding_injective(p)


def test_codomain_projection_is_not_faithful():
    s = is_structure(ArrowCategory(finset(2)).cod_functor())
    assert not s.ok and s.failed == "faithful"
    assert len(s.witness["morphisms"]) == 2


def test_criteria_need_same_fiber(fixtures):
    p = fixtures["injections"]
    e1, e2 = next((a, b) for a, b in itertools.product(p.src.objects, repeat=2) if p.ob(a) != p.ob(b))
    with pytest.raises(PreconditionError):
        identity_criteria(p, e1, e2)


def test_distinct_objects_fail_every_criterion(fixtures):
    p = fixtures["posets"]
    for b in p.dst.objects:
        objs = fiber(p, b).objects
        for e1, e2 in itertools.permutations(objs, 2):
            assert not any(identity_criteria(p, e1, e2).values())


@pytest.mark.parametrize("seed", range(10))
def test_random_structures(seed):
    p = random_structure(random.Random(seed))
    assert validate_functor(p).ok
    assert is_structure(p).ok


def _subfunctors_by_brute_force(p, B):
    """Every choice of subsets closed under precomposition with p(v)."""
    E, C = p.src, p.dst
    xs = list(E.objects)
    pools = [[frozenset(s) for r in range(len(C.hom(p.ob(x), B)) + 1)
              for s in itertools.combinations(C.hom(p.ob(x), B), r)] for x in xs]
    out = set()
    for choice in itertools.product(*pools):
        mem = dict(zip(xs, choice))
        if all(C.compose(g, p.mor(v)) in mem[E.dom(v)] for v in E.morphisms for g in mem[E.cod(v)]):
            out.add(tuple(sorted((x, tuple(sorted(s))) for x, s in mem.items())))
    return out


def test_almost_structures_enumeration(fixtures):
    p = fixtures["identity"]
    for B in p.dst.objects:
        found = {tuple(sorted((x, tuple(sorted(v))) for x, v in A.members.items()))
                 for A in all_almost_structures(p, B)}
        assert found == _subfunctors_by_brute_force(p, B)
        assert full_almost(p, B).validate().ok


@pytest.mark.parametrize("name", ["identity", "injections", "posets"])
def test_almost_category_and_embedding(fixtures, name):
    p = fixtures[name]
    with guard.guardrail(10 ** 5):
        AC = almost_structure_category(p)
        assert validate_category(AC.cat).ok
        assert classify(AC.proj).fibration
        emb = structure_embedding(p, AC)
        assert validate_functor(emb).ok
        a = analyze_functor(emb, quasi_inverse=False)
        assert a.faithful and a.full
        assert len({emb.ob(e) for e in p.src.objects}) == len(p.src.objects)


def test_almost_costructures_give_opfibration(fixtures):
    p = fixtures["injections"]
    with guard.guardrail(10 ** 5):
        CC = almost_structure_category(p, co=True)
        assert classify(CC.proj).cofibration


def test_intersection_is_structure(fixtures):
    p = fixtures["injections"]
    cat, diag = intersection_structure(p, p)
    assert validate_category(cat).ok
    assert is_structure(diag).ok
