import itertools

from hypothesis import given, settings, strategies as st

from catspec.fincat.builders import finset
from catspec.presheaf import constant_presheaf, representable
from catspec.sites import (Pretopology, Topology, all_sieves, generate_topology, is_sheaf, is_sieve,
                           maximal_topology_only, validate_pretopology, validate_topology)
from catspec.spaces import (FiniteSpace, all_functions_sheaf, constant_presheaf_on, discrete,
                            etale_space, germ, gluing_oracle, indiscrete, invariant_analysis,
                            is_transitive, local_homeo_groupoid, locally_constant_sheaf, open_name,
                            sheafify, sierpinski)


def test_all_sieves_brute_force():
    S = finset(2)
    arrows = [m for m in S.morphisms if S.cod(m) == "n2"]
    expected = {frozenset(c) for r in range(len(arrows) + 1) for c in itertools.combinations(arrows, r)
                if is_sieve(S, "n2", c)}
    assert set(all_sieves(S, "n2")) == expected


def test_open_cover_pretopology_is_valid():
    for X in (sierpinski(), discrete("ab"), indiscrete("ab")):
        assert validate_pretopology(X.open_cover_pretopology()).ok


def test_pretopology_without_identity_cover_fails():
    X = sierpinski()
    C = X.category()
    t = Pretopology(C, {b: [] for b in C.objects})
    assert not validate_pretopology(t).ok


def test_maximal_only_topology():
    C = sierpinski().category()
    J = maximal_topology_only(C)
    assert validate_topology(J).ok
    # every presheaf is a sheaf for the trivial topology
    assert is_sheaf(constant_presheaf(C, [0, 1]), J).ok


def test_broken_topologies_fail():
    X = discrete("ab")
    C = X.category()
    J = generate_topology(X.open_cover_pretopology())
    no_max = {b: set(v) for b, v in J.sieves.items()}
    no_max["U_a"] = set()
    assert validate_topology(Topology(C, no_max)).reason == "maximal"
    # {a} alone covers a∪b but its pullback to b is missing
    unstable = {b: set(v) for b, v in J.sieves.items()}
    unstable["U_a_b"].add(frozenset({"inc_U__in_U_a_b", "inc_U_a_in_U_a_b"}))
    assert validate_topology(Topology(C, unstable)).reason == "stability"


def test_constant_presheaf_is_not_a_sheaf_on_disconnected_space():
    X = discrete("ab")
    J = X.topology()
    P = constant_presheaf_on(X)
    v = is_sheaf(P, J)
    assert not v.ok and v.witness
    assert not gluing_oracle(P, X)
    Q = sheafify(P, J)
    assert is_sheaf(Q, J).ok
    # locally constant functions on two isolated points: four global sections
    assert len(Q.values[open_name(X.points)]) == 4


def test_sheafification_keeps_sheaves():
    X = sierpinski()
    P = all_functions_sheaf(X)
    Q = sheafify(P, X.topology())
    assert {b: len(v) for b, v in Q.values.items()} == {b: len(v) for b, v in P.values.items()}


def test_representables_on_spaces_are_sheaves():
    X = FiniteSpace("xyz", [[], ["x"], ["y"], ["x", "y"], ["x", "y", "z"]], "V")
    C = X.category()
    J = X.topology()
    for b in C.objects:
        assert is_sheaf(representable(C, b), J).ok


def test_etale_space():
    X = sierpinski()
    P = locally_constant_sheaf(X)
    E = etale_space(P, X)
    assert E.continuous and E.local_homeomorphism
    assert len(E.total.points) == sum(len(P.values[open_name(X.minimal_open(x))]) for x in X.points)
    g = germ(P, X, "b")
    assert set(g.from_minimal.values()) == set(range(len(g.classes)))


def test_transitivity_of_local_homeomorphisms():
    assert is_transitive(local_homeo_groupoid(discrete("ab")))
    assert not is_transitive(local_homeo_groupoid(sierpinski()))


def test_invariant_sections_on_discrete_space():
    X = discrete("ab")
    P = all_functions_sheaf(X)
    r = invariant_analysis(P, local_homeo_groupoid(X), "a")
    # only the constant functions survive every swap
    assert sorted(r.invariant_sections) == [(("a", 0), ("b", 0)), (("a", 1), ("b", 1))]
    assert r.correspondence_injective and r.surjective


@st.composite
def spaces(draw):
    pts = list("pqrs")[:draw(st.integers(1, 4))]
    basis = draw(st.lists(st.sets(st.sampled_from(pts), min_size=1), max_size=4))
    return FiniteSpace.from_basis(pts, basis, "X")


@settings(max_examples=30, deadline=None)
@given(spaces())
def test_random_spaces(X):
    assert X.validate()
    J = X.topology()
    assert validate_topology(J).ok
    for P in (all_functions_sheaf(X), constant_presheaf_on(X), locally_constant_sheaf(X)):
        assert is_sheaf(P, J).ok == gluing_oracle(P, X)
