import itertools
import random

import pytest

from catspec.errors import PreconditionError
from catspec.fincat import identity_functor, make_category
from catspec.fincat.builders import finset
from catspec.fixtures import (covering_fixture, point_of, random_group_action_fibration, structure_fixtures,
                              xor_action, xor_group)
from catspec.groups import (Cartesian, ExternalAction, FiniteGroup, ObjectEquivalence, action_lifting,
                            automorphisms, conjugate_stabilizer, cyclic, direct_image_check, element_group, fill_diagonal,
                            find_group_isomorphism, grp_lift_structure, is_group_object, is_homogeneous,
                            is_quotient_map, pairing_universal, quotient_object)
from catspec.presheaf import SetPresheaf


@pytest.fixture(scope="module")
def xor():
    return xor_group()


def klein():
    els = [(a, b) for a in range(2) for b in range(2)]
    return FiniteGroup(els, {(x, y): ((x[0] + y[0]) % 2, (x[1] + y[1]) % 2) for x in els for y in els},
                       (0, 0), "V4")


def test_finite_groups():
    z4 = cyclic(4)
    assert z4.is_group() and z4.is_cyclic()
    assert not klein().is_cyclic()
    assert find_group_isomorphism(z4, klein()) is None
    q = z4.quotient([0, 2])
    assert q.is_group() and len(q) == 2
    assert z4.normalizer([0, 2]) == [0, 1, 2, 3]
    assert not z4.is_subgroup([0, 1])


def test_products_in_finset(xor):
    C = xor.C
    assert pairing_universal(C, "n2", "n2")
    K = Cartesian(C)
    assert len(K.points("n2")) == 2


def test_broken_unit_names_the_failing_law():
    v = is_group_object(xor_group(broken_unit=True))
    assert not v.ok and v.reason == "unit"


def test_element_group_shifts_commute(xor):
    eg = element_group(xor)
    assert eg.anti_R and eg.hom_L and eg.commute
    assert find_group_isomorphism(eg.group, cyclic(2)) is not None


def test_homogeneity(xor):
    cat = xor.cat
    x0 = point_of(cat, "n2", 0)
    h = is_homogeneous(xor_action(xor, "swap"), x0)
    assert h.homogeneous and h.transitive and h.basepoint_independent
    t = is_homogeneous(xor_action(xor, "trivial"), x0)
    assert not t.homogeneous and not t.transitive
    assert t.reason == "G/Stab -> X is not an iso"


def test_conjugate_stabilizers(xor):
    cat = xor.cat
    a = xor_action(xor, "swap")
    one = point_of(cat, "n2", 1)
    r = conjugate_stabilizer(a, one, point_of(cat, "n2", 0), one)
    assert r.prism_ok
    assert cat.inverse(r.iso) is not None
    assert r.quotient_iso is not None and cat.inverse(r.quotient_iso) is not None


def test_quotient_of_a_set_by_a_relation():
    S = finset(3)
    E = ObjectEquivalence.from_point_relation(S, "n3", [(0, 1)])
    assert E.validate().ok
    Q, pi = quotient_object(E)
    assert Q == "n2"
    assert is_quotient_map(E, pi)
    # the identity does not identify 0 and 1
    assert not is_quotient_map(E, "id_n3")


def _single_point_presheaf(C, elements):
    return SetPresheaf(C, {"o": tuple(elements)}, {"id_o": {x: x for x in elements}})


def test_fill_diagonal():
    C = make_category(["o"], {}, {}, "One")
    A = _single_point_presheaf(C, range(4))
    B = _single_point_presheaf(C, range(2))
    Cc = _single_point_presheaf(C, ["even", "odd"])
    D = _single_point_presheaf(C, ["even", "odd", "other"])
    top = {"o": {x: x % 2 for x in range(4)}}
    left = {"o": {x: ["even", "odd"][x % 2] for x in range(4)}}
    right = {"o": {0: "even", 1: "odd"}}
    bottom = {"o": {"even": "even", "odd": "odd"}}
    assert fill_diagonal(A, B, Cc, D, top, left, right, bottom) == {"o": {0: "even", 1: "odd"}}
    with pytest.raises(PreconditionError, match="not surjective"):
        fill_diagonal(A, B, Cc, D, {"o": {x: 0 for x in range(4)}}, left, right, bottom)
    with pytest.raises(PreconditionError, match="not injective"):
        fill_diagonal(A, B, Cc, D, top, left, right, {"o": {"even": "even", "odd": "even"}})


def test_covering_lifts_every_rotation():
    p = covering_fixture("free")
    ext = ExternalAction(cyclic(4), p.dst, "pt", {0: "id_pt", 1: "r1", 2: "r2", 3: "r3"})
    e = next(x for x in p.src.objects)
    r = action_lifting(p, ext, e)
    # a free fiber: only the unit fixes a point
    assert r.per_element == {0: True, 1: False, 2: False, 3: False}
    assert r.representation_homomorphic


def _lifted_cases():
    for s in range(60):
        p, ext = random_group_action_fibration(random.Random(s))
        for e in p.src.objects:
            r = action_lifting(p, ext, e)
            if r.lifted_action is not None:
                yield p, ext, e, r.lifted_action


def test_equivariant_isos_pull_back_lifted_actions():
    checked = 0
    for p, ext, e, rho_E in itertools.islice(_lifted_cases(), 40):
        B = p.dst
        for f in automorphisms(B, ext.b):
            finv = B.inverse(f)
            rho_B2 = {k: B.compose(finv, p.mor(rho_E[k]), f) for k in ext.group.elements}
            phi = {k: k for k in ext.group.elements}
            out = grp_lift_structure(p, ext.group, e, rho_E, ext.group, ext.b, rho_B2, phi, f)
            assert out.action_ok and out.star_ok and out.star2_ok
            checked += 1
    assert checked > 0


def test_quotient_projection_is_cocartesian():
    p = identity_functor(finset(2), "id")
    r = direct_image_check(p, "n2", {0: "id_n2", 1: "n2_n2_10"})
    assert r["quotient"][0] == "n1" and r["preserved"] and r["cocartesian"]
    for name, q in structure_fixtures().items():
        E = q.src
        for X in E.objects:
            for s in automorphisms(E, X):
                if E.is_identity(s) or E.compose(s, s) != E.identity(X):
                    continue
                r = direct_image_check(q, X, {0: E.identity(X), 1: s})
                if r["quotient"] is not None and r["preserved"]:
                    assert r["cocartesian"], (name, X, s)
