import random

import pytest
from hypothesis import given, settings, strategies as st

from catspec.errors import PreconditionError
from catspec.fibrations import (CART, COCART, cartesian_mask, classify, fiber, free_fibration,
                                is_cartesian, is_cartesian_bruteforce, lifts, pullback_fibration,
                                transport)
from catspec.fincat import Functor, analyze_functor, validate_category, validate_functor
from catspec.fincat.builders import ArrowCategory, cyclic_group, finset
from catspec.generators import random_pseudofunctor
from catspec.grothendieck import CO, CONTRA, choose_cleavage, grothendieck


def test_domain_projection_is_always_a_fibration():
    A = ArrowCategory(finset(2))
    assert classify(A.dom_functor()).fibration


def test_codomain_needs_pullbacks():
    # n2 x_n1 n2 has four elements, so FinSet_2 misses it
    c = classify(ArrowCategory(finset(2)).cod_functor())
    assert not c.fibration
    assert "fibration" in c.witnesses


def test_injections_codomain_is_bifibration():
    c = classify(ArrowCategory(finset(2, injective=True)).cod_functor())
    assert c.bifibration


def test_identity_squares_are_cartesian():
    A = ArrowCategory(finset(2))
    p = A.cod_functor()
    for x in A.objects:
        assert is_cartesian(p, A.identity(x))


def test_lifts_precondition():
    A = ArrowCategory(finset(2))
    p = A.cod_functor()
    x = A.objects[0]
    wrong = next(f for f in p.dst.morphisms if p.dst.cod(f) != p.ob(x))
    with pytest.raises(PreconditionError):
        lifts(p, wrong, x)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([CONTRA, CO]))
def test_mask_matches_bruteforce(seed, variance):
    F = random_pseudofunctor(random.Random(seed), variance, max_base=3, max_value=2)
    _, p = grothendieck(F)
    for direction in (CART, COCART):
        mask = cartesian_mask(p, direction)
        for k, m in enumerate(p.src.morphisms):
            assert bool(mask[k]) == is_cartesian_bruteforce(p, m, direction)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_cleavage_and_transport(seed):
    F = random_pseudofunctor(random.Random(seed), CONTRA, max_base=3, max_value=3)
    _, p = grothendieck(F)
    assert classify(p).fibration
    clv = choose_cleavage(p, CART)
    assert clv.validate().ok
    for f in p.dst.morphisms:
        T = transport(p, clv, f)
        assert validate_functor(T).ok
        assert T.src.objects == fiber(p, p.dst.cod(f)).objects


def test_fiber_over_single_object_is_whole_value():
    F = random_pseudofunctor(random.Random(3), CONTRA, max_base=1, max_value=3)
    total, p = grothendieck(F)
    b = p.dst.objects[0]
    assert len(fiber(p, b).objects) == len(F.values[b].objects)


def test_free_fibration_factors():
    G = cyclic_group(2)
    F = Functor(G, G, {"pt": "pt"}, {"id_pt": "id_pt", "r1": "r1"}, "F")
    cat, dom, i = free_fibration(F)
    assert validate_category(cat).ok
    assert classify(dom).fibration
    assert validate_functor(i).ok
    for m in G.morphisms:
        assert dom.mor(i.mor(m)) == F.mor(m)


def test_pullback_of_fibration_is_fibration():
    A = ArrowCategory(finset(2))
    p = A.dom_functor()
    B = p.dst
    incl = Functor(finset(1), B, {o: o for o in finset(1).objects},
                   {m: m for m in finset(1).morphisms}, "incl")
    cat, q, _ = pullback_fibration(incl, p)
    assert validate_category(cat).ok
    assert classify(q).fibration
    assert analyze_functor(q, quasi_inverse=False).functorial
