import random

import pytest
from hypothesis import given, settings, strategies as st

from catspec.errors import PreconditionError
from catspec.fibrations import CART, COCART, classify
from catspec.fincat import Functor, identity_functor, make_category, validate_category
from catspec.fincat.builders import cyclic_group
from catspec.generators import random_group_pseudofunctor, random_pseudofunctor
from catspec.grothendieck import (CO, CONTRA, Pseudofunctor, choose_cleavage, grothendieck,
                                  pointwise_isomorphic, roundtrip_check, to_pseudofunctor,
                                  validate_pseudofunctor)


def collapse_pseudofunctor():
    two = make_category(["a", "b"], {"u": ("a", "b")}, {}, "Two")
    pt = make_category(["p"], {}, {}, "Pt")
    arrow = make_category(["x", "y"], {"k": ("x", "y")}, {}, "Arrow")
    collapse = Functor(arrow, pt, {"x": "p", "y": "p"}, {"id_x": "id_p", "id_y": "id_p", "k": "id_p"}, "Collapse")
    actions = {"u": collapse, "id_a": identity_functor(pt), "id_b": identity_functor(arrow)}
    return Pseudofunctor(two, CONTRA, {"a": pt, "b": arrow}, actions, name="F")


def test_total_category_counts():
    F = collapse_pseudofunctor()
    assert validate_pseudofunctor(F).ok
    total, p = grothendieck(F)
    assert validate_category(total).ok
    # one object over a, two over b; arrows: 1 over id_a, 3 over id_b, one per anchor over u
    assert len(total.objects) == 3
    assert len(total.morphisms) == 6
    assert classify(p).fibration


def test_unknown_variance():
    F = collapse_pseudofunctor()
    with pytest.raises(PreconditionError):
        Pseudofunctor(F.base, "sideways", F.values, F.actions)


def test_incoherent_action_is_rejected():
    G = cyclic_group(2)
    V = make_category(["x", "y"], {}, {}, "V")
    const = Functor(V, V, {"x": "x", "y": "x"}, {"id_x": "id_x", "id_y": "id_x"}, "const")
    F = Pseudofunctor(G, CONTRA, {"pt": V}, {"id_pt": identity_functor(V), "r1": const}, name="Bad")
    assert not validate_pseudofunctor(F).ok


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([CONTRA, CO]))
def test_random_round_trip(seed, variance):
    F = random_pseudofunctor(random.Random(seed), variance)
    assert validate_pseudofunctor(F).ok
    _, p = grothendieck(F)
    direction = CART if variance == CONTRA else COCART
    c = classify(p)
    assert c.fibration if variance == CONTRA else c.cofibration
    G = to_pseudofunctor(p, choose_cleavage(p, direction))
    assert validate_pseudofunctor(G).ok
    assert all(v is not None for v in pointwise_isomorphic(F, G).values())


@pytest.mark.parametrize("seed", range(6))
def test_group_valued_round_trip(seed):
    variance = CONTRA if seed % 2 == 0 else CO
    F = random_group_pseudofunctor(random.Random(seed), variance)
    assert validate_pseudofunctor(F).ok
    _, p = grothendieck(F)
    assert roundtrip_check(p, CART if variance == CONTRA else COCART).ok
