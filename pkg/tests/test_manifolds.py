import pytest

from catspec.errors import PreconditionError
from catspec.fincat import (Functor, analyze_functor, identity_functor, make_category, validate_category,
                            validate_functor)
from catspec.fixtures import (discrete_injections, identity_structure, marked_points,
                              minimal_cover_completion, ordered_discrete)
from catspec.grothendieck import validate_pseudofunctor
from catspec.manifolds import (Atlas, Chart, SpaceSkeleton, all_finite_spaces, atlases_equivalent,
                               build_eman, check_atlas, maximal_atlas, maximal_atlases, trivial_inclusion,
                               verify_locality)
from catspec.sites import Pretopology, maximal_topology_only, validate_pretopology, validate_topology
from catspec.spaces import discrete, indiscrete, sierpinski
from catspec.stacks import construct_manifolds, free_pseudofunctor, stack_flags


@pytest.fixture(scope="module")
def skeleton():
    return SpaceSkeleton(2)


def test_topologies_up_to_homeomorphism():
    # 1, 1, 3, 9, 33 spaces on 0..4 points
    assert [len(all_finite_spaces(k)) for k in range(5)] == [1, 1, 3, 9, 33]


def test_skeleton(skeleton):
    assert len(skeleton.cat.objects) == 5
    assert validate_pretopology(skeleton.pretopology()).ok
    name, h = skeleton.rep_of(sierpinski())
    assert sorted(h.values()) == ["a", "b"]
    with pytest.raises(PreconditionError):
        skeleton.rep_of(discrete("abc"))


@pytest.mark.parametrize("make, expected", [(discrete_injections, 1), (ordered_discrete, 2),
                                            (marked_points, 4), (identity_structure, 1)])
def test_maximal_atlases_on_two_points(skeleton, make, expected):
    # one atlas per structure a two-point set can carry: orders, marked subsets
    L = make(skeleton)
    assert L.is_local()[0]
    atlases = maximal_atlases(L, discrete("ab"))
    assert len(atlases) == expected
    for A in atlases:
        assert check_atlas(L, A).ok


def test_no_atlas_without_local_models(skeleton):
    L = discrete_injections(skeleton)
    assert maximal_atlases(L, sierpinski()) == []
    assert maximal_atlases(L, indiscrete("ab")) == []
    assert len(maximal_atlases(identity_structure(skeleton), sierpinski())) == 1


def test_empty_space_has_the_empty_atlas(skeleton):
    L = discrete_injections(skeleton)
    X = discrete([], "Empty")
    assert [len(A) for A in maximal_atlases(L, X)] == [0]


def test_incompatible_charts(skeleton):
    L = ordered_discrete(skeleton)
    X = discrete("ab")
    A1, A2 = maximal_atlases(L, X)
    assert not atlases_equivalent(L, A1, A2)
    assert atlases_equivalent(L, A1, A1)
    small = Atlas(X, frozenset(c for c in A1.charts if len(c.U) == 1))
    m = maximal_atlas(L, small)
    # singleton charts do not fix an order, so two maximal extensions remain
    assert not m.unique and len(m.extensions) == 2


def test_uncovered_atlas(skeleton):
    L = discrete_injections(skeleton)
    X = discrete("ab")
    c = next(c for c in L.all_charts(X) if c.U == frozenset("a"))
    assert check_atlas(L, Atlas(X, frozenset([c]))).reason == "coverage"


def test_injections_manifolds_are_all_maps(skeleton):
    # locally on singletons every map of discrete spaces is injective
    L = discrete_injections(skeleton)
    carriers = [skeleton.cat.space_of[o] for o in skeleton.cat.objects]
    cat, proj = build_eman(L, carriers)
    assert validate_category(cat).ok and validate_functor(proj).ok
    sizes = [len(cat.carriers[o]) for o in cat.objects]
    assert len(cat.morphisms) == sum(n ** m for m in sizes for n in sizes)
    T = trivial_inclusion(L, cat)
    a = analyze_functor(T, quasi_inverse=False)
    assert a.faithful and not a.full


def test_identity_structure_manifolds(skeleton):
    L = identity_structure(skeleton)
    carriers = [skeleton.cat.space_of[o] for o in skeleton.cat.objects]
    cat, proj = build_eman(L, carriers)
    T = trivial_inclusion(L, cat)
    assert analyze_functor(T, quasi_inverse=False).equivalence
    t = Pretopology(proj.dst, skeleton.pretopology().coverings)
    r = verify_locality(proj, T, t)
    assert r["objectsLocal"] and r["arrowsLocal"]


def _two_point_free():
    X = discrete("ab")
    B = X.category(True)
    C = make_category(["ca1", "ca2", "cb", "cab"])
    over = {"ca1": "U_a", "ca2": "U_a", "cb": "U_b", "cab": "U_a_b"}
    F = Functor(C, B, over, {f"id_{c}": B.identity(o) for c, o in over.items()}, "F")
    return X, B, F


def test_free_pseudofunctor_is_prestack_only():
    X, B, F = _two_point_free()
    J = X.union_topology()
    assert validate_topology(J).ok
    P = free_pseudofunctor(F)
    flags = stack_flags(P, J)
    assert flags["prestack"] and not flags["stack"]


def test_manifolds_from_completed_stack():
    X, B, F = _two_point_free()
    J = X.union_topology()
    P = free_pseudofunctor(F)
    St, embed = minimal_cover_completion(P, X)
    assert validate_pseudofunctor(St).ok
    assert stack_flags(St, J)["stack"]
    # glued objects over a∪b: one choice over a times one over b
    sizes = {b: len(P.values[b].objects) for b in B.objects}
    assert len(St.values["U_a_b"].objects) == sizes["U_a"] * sizes["U_b"]
    res = construct_manifolds(F, set(B.morphisms), St, J, embed)
    assert validate_category(res.category).ok
    assert validate_functor(res.inclusion).ok
    assert len(res.category.objects) == sum(len(St.values[b].objects) for b in B.objects)


def test_manifolds_for_trivial_topology_are_free():
    X, B, F = _two_point_free()
    P = free_pseudofunctor(F)
    J = maximal_topology_only(B)
    res = construct_manifolds(F, set(B.morphisms), P, J, {b: identity_functor(P.values[b]) for b in B.objects})
    assert analyze_functor(res.inclusion).equivalence


def test_chart_repr():
    c = Chart("E1", frozenset("a"), ((0, "a"),))
    assert "E1" in repr(c) and c.amap == {0: "a"}
