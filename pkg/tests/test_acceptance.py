"""Acceptance suite: one PASS/FAIL line per criterion, see the summary at the end of the run."""
import itertools
import random
import time

import pytest

from catspec import guard
from catspec.dsl import DslError, canonical_text, parse
from catspec.fibrations import CART, COCART, cartesian_mask, fiber, is_cartesian_bruteforce, lifts
from catspec.fincat.builders import ArrowCategory, cyclic_group, finset
from catspec.fixtures import (affine_z4_group, covering_fixture, point_of, random_group_action_fibration,
                              random_structure, structure_fixtures, xor_action, xor_group)
from catspec.generators import random_pseudofunctor
from catspec.grothendieck import (CO, CONTRA, choose_cleavage, grothendieck, pointwise_isomorphic,
                                  roundtrip_check, to_pseudofunctor)
from catspec.groups import (ExternalAction, action_lifting, covering_analysis, cyclic, element_group,
                            find_group_isomorphism, is_group_object, is_action, quotient_by_group,
                            quotient_group_structure, represent_stabilizer, stabilizer_values)
from catspec.sites import generate_topology, is_sheaf, morphism_part, object_part, validate_topology
from catspec.spaces import (FiniteSpace, _Rule, all_functions_sheaf, constant_presheaf_on,
                            continuous_functions_sheaf, discrete, function_presheaf, germ, gluing_oracle,
                            indiscrete, locally_constant_sheaf, open_name, sierpinski)
from catspec.stacks import discrete_pseudofunctor, stack_flags
from catspec.structures import (almost_structure_category, fibers_are_posets, identity_criteria,
                                inverse_image_is_cartesian)

from pathlib import Path

GOLDEN = Path(__file__).parent / "golden"


# -- 1 ----------------------------------------------------------------------

def _pullback_oracle(S, A, sq):
    """Square (u, v) from x: a->b to y: c->d is cartesian for cod iff a ≅ c ×_d b via (u, x)."""
    u, v, x, y = (S.fn(m) for m in sq)
    b_size = len(S.carriers[S.cod(sq[2])])
    c_size = len(S.carriers[S.dom(sq[3])])
    pb = {(g, bb) for g in range(c_size) for bb in range(b_size) if y[g] == v[bb]}
    image = [(u[i], x[i]) for i in range(len(x))]
    return len(set(image)) == len(image) and set(image) == pb


def test_cartesian_is_pullback(report):
    start = time.perf_counter()
    S = finset(3)
    with guard.guardrail(10 ** 6):
        A = ArrowCategory(S)
        p = A.cod_functor()
        mask = cartesian_mask(p, CART)
    M = S.morphisms
    bad = 0
    for k in range(len(A.morphisms)):
        sq = (M[A.sq_u[k]], M[A.sq_v[k]], M[A.sq_x[k]], M[A.sq_y[k]])
        if bool(mask[k]) != _pullback_oracle(S, A, sq):
            bad += 1
    took = time.perf_counter() - start
    ok = bad == 0 and took < 5
    report(1, "cartesian squares over cod = set pullbacks", ok,
           f"{len(A.morphisms)} squares, {int(mask.sum())} cartesian, {bad} disagreements, {took:.2f}s")
    assert bad == 0
    assert took < 5


# -- 2 ----------------------------------------------------------------------

def _vertical_connectors(p, phi1, phi2):
    E, B = p.src, p.dst
    out = []
    for k in E.morphisms:
        if E.dom(k) != E.dom(phi1) or E.cod(k) != E.dom(phi2) or not B.is_identity(p.mor(k)):
            continue
        if E.compose(phi2, k) == phi1 and E.inverse(k) is not None:
            out.append(k)
    return out


def test_cartesian_lifts_unique_up_to_vertical_iso(report):
    violations, pairs = [], 0
    for seed in range(100):
        F = random_pseudofunctor(random.Random(seed), CONTRA, max_base=4, max_value=3)
        _, p = grothendieck(F)
        E, B = p.src, p.dst
        assert len(B.objects) <= 4
        assert all(len(V.objects) <= 3 for V in F.values.values())
        for f in B.morphisms:
            for anchor in E.objects:
                if p.ob(anchor) != B.cod(f):
                    continue
                fast = lifts(p, f, anchor)
                slow = [m for m in E.morphisms if E.cod(m) == anchor and p.mor(m) == f
                        and is_cartesian_bruteforce(p, m)]
                if sorted(fast) != sorted(slow):
                    violations.append((seed, f, anchor, "lift sets differ"))
                if not slow:
                    violations.append((seed, f, anchor, "no lift"))
                for phi1, phi2 in itertools.product(slow, repeat=2):
                    pairs += 1
                    if len(_vertical_connectors(p, phi1, phi2)) != 1:
                        violations.append((seed, phi1, phi2))
    report(2, "cartesian lifts related by exactly one vertical iso", not violations,
           f"100 fibrations, {pairs} lift pairs, {len(violations)} violations")
    assert violations == []


# -- 3 ----------------------------------------------------------------------

def test_grothendieck_round_trip(report):
    violations = []
    for seed in range(50):
        variance = CONTRA if seed % 2 == 0 else CO
        direction = CART if variance == CONTRA else COCART
        F = random_pseudofunctor(random.Random(seed), variance)
        _, p = grothendieck(F)
        G = to_pseudofunctor(p, choose_cleavage(p, direction))
        isos = pointwise_isomorphic(F, G)
        if any(v is None for v in isos.values()):
            violations.append((seed, "pointwise"))
        rt = roundtrip_check(p, direction)
        if not rt.ok:
            violations.append((seed, rt.reason))
    report(3, "pseudofunctor/fibration round trips", not violations,
           f"50 seeds, {len(violations)} violations")
    assert violations == []


# -- 4 ----------------------------------------------------------------------

def _criteria_disagreements(p):
    bad = []
    for b in p.dst.objects:
        Fb = fiber(p, b)
        for e1, e2 in itertools.product(Fb.objects, repeat=2):
            c = identity_criteria(p, e1, e2)
            if len(c) != 5 or len(set(c.values())) != 1:
                bad.append((b, e1, e2, c))
    return bad


def test_five_equality_criteria_agree(report):
    cases = list(structure_fixtures().values()) + [random_structure(random.Random(s)) for s in range(50)]
    bad = [d for p in cases for d in _criteria_disagreements(p)]
    report(4, "five equality criteria agree on every fiber pair", not bad,
           f"{len(cases)} structures, {len(bad)} violations")
    assert bad == []


# -- 5 ----------------------------------------------------------------------

def test_poset_fibers_and_inverse_images(report):
    bad, checked = [], 0
    for name, p in structure_fixtures().items():
        if not fibers_are_posets(p).ok:
            bad.append((name, "fibers"))
        if len(p.src.morphisms) > 200:
            continue
        with guard.guardrail(10 ** 5):
            AC = almost_structure_category(p)
            for A in AC.objects.values():
                for f in p.dst.morphisms:
                    if p.dst.cod(f) != A.B:
                        continue
                    checked += 1
                    _, res = inverse_image_is_cartesian(AC, A, f)
                    if res is None or not res.ok:
                        bad.append((name, f, A.key()))
    report(5, "poset fibers; inverse images are cartesian", not bad,
           f"{checked} (F, f) pairs, {len(bad)} violations")
    assert bad == []


# -- 6 ----------------------------------------------------------------------

def _sieves_by_brute_force(C, b):
    arrows = [m for m in C.morphisms if C.cod(m) == b]
    out = []
    for r in range(len(arrows) + 1):
        for S in itertools.combinations(arrows, r):
            S = frozenset(S)
            if all(C.compose(s, h) in S for s in S for h in C.morphisms if C.cod(h) == C.dom(s)):
                out.append(S)
    return out


def _pull(C, f, S):
    return frozenset(h for h in C.morphisms if C.cod(h) == C.dom(f) and C.compose(f, h) in S)


def _is_topology(C, lattice, J):
    for b in C.objects:
        if frozenset(m for m in C.morphisms if C.cod(m) == b) not in J[b]:
            return False
    for f in C.morphisms:
        if any(_pull(C, f, S) not in J[C.dom(f)] for S in J[C.cod(f)]):
            return False
    for b in C.objects:
        for S in J[b]:
            for R in lattice[b]:
                if R not in J[b] and all(_pull(C, f, R) in J[C.dom(f)] for f in S):
                    return False
    return True


def _least_topology_oracle(X):
    C = X.category()
    t = X.open_cover_pretopology()
    lattice = {b: _sieves_by_brute_force(C, b) for b in C.objects}
    gens = {b: {frozenset(C.compose(f, h) for f in c for h in C.morphisms if C.cod(h) == C.dom(f))
                for c in t.coverings[b]} for b in C.objects}
    objs = list(C.objects)
    options = [[frozenset(s) for r in range(len(lattice[b]) + 1)
                for s in itertools.combinations(lattice[b], r)] for b in objs]
    total, least = 0, None
    for choice in itertools.product(*options):
        total += 1
        J = dict(zip(objs, choice))
        if not all(gens[b] <= J[b] for b in objs):
            continue
        if not _is_topology(C, lattice, J):
            continue
        least = dict(J) if least is None else {b: least[b] & J[b] for b in objs}
    return C, t, total, least, gens


@pytest.mark.parametrize("X, families", [(sierpinski(), 512), (discrete(["a", "b"], "D2"), 16384)],
                         ids=["sierpinski", "discrete2"])
def test_generated_topology(report, X, families):
    C, t, total, least, gens = _least_topology_oracle(X)
    J = generate_topology(t)
    problems = []
    if total != families:
        problems.append(f"{total} families")
    if not validate_topology(J).ok:
        problems.append("axioms")
    if {b: frozenset(J.sieves[b]) for b in C.objects} != least:
        problems.append("not the least topology")
    if not all(gens[b] <= J.sieves[b] for b in C.objects):
        problems.append("cover not covering")
    report(6, f"generated topology on {X.name}", not problems,
           f"{total} candidate families, " + (", ".join(problems) or "matches oracle"))
    assert problems == []


# -- 7 and 8 ---------------------------------------------------------------------

def _spaces():
    return [
        sierpinski(),
        discrete(["a", "b"], "D2"),
        discrete(["a", "b", "c"], "D3"),
        indiscrete(["a", "b"], "I2"),
        FiniteSpace(["x", "y", "z"], [[], ["x"], ["y"], ["x", "y"], ["x", "y", "z"]], "V"),
        FiniteSpace(["a", "b", "c"], [[], ["a"], ["a", "b"], ["a", "b", "c"]], "Chain3"),
    ]


def _restriction_closed(X, rng, name):
    """Sections that are restrictions of a random choice of sections."""
    full = all_functions_sheaf(X)
    chosen = {U: {s for s in full.values[open_name(U)] if rng.random() < 0.5} for U in X.opens}

    def ok(U, s):
        s = tuple(sorted(s.items()))
        return any(tuple(p for p in t if p[0] in U) == s for W in X.opens if U <= W for t in chosen[W])
    return function_presheaf(X, _Rule((0, 1), ok), name)


def _presheaf_fixtures():
    out = []
    for X in _spaces():
        out += [(X, all_functions_sheaf(X)), (X, constant_presheaf_on(X)),
                (X, locally_constant_sheaf(X)), (X, continuous_functions_sheaf(X, sierpinski()))]
        rng = random.Random(X.name)
        out += [(X, _restriction_closed(X, rng, f"R{i}")) for i in range(4)]
    return out


def test_sheaf_and_stack_coherence(report):
    bad, sheaves = [], 0
    for X, P in _presheaf_fixtures():
        J = X.topology()
        fast = is_sheaf(P, J).ok
        sheaves += fast
        if fast != gluing_oracle(P, X):
            bad.append((X.name, P.name, "sheaf"))
        F = discrete_pseudofunctor(P)
        expect = is_sheaf(object_part(F), J).ok and is_sheaf(morphism_part(F), J).ok
        if stack_flags(F, J)["stack"] != expect:
            bad.append((X.name, P.name, "stack"))
    n = len(_presheaf_fixtures())
    report(7, "is_sheaf = gluing oracle; stack = sheaf parts", not bad,
           f"{n} presheaves, {sheaves} sheaves, {len(bad)} violations")
    assert bad == []


def test_germs_match_minimal_open(report):
    bad, checked = [], 0
    for X, P in _presheaf_fixtures():
        if not gluing_oracle(P, X):
            continue
        for x in X.points:
            checked += 1
            g = germ(P, X, x)
            ux = P.values[open_name(X.minimal_open(x))]
            if len(g.classes) != len(ux) or sorted(g.from_minimal.values()) != list(range(len(ux))):
                bad.append((X.name, P.name, x))
    report(8, "germ in bijection with value on minimal open", not bad,
           f"{checked} (sheaf, point) pairs, {len(bad)} violations")
    assert bad == []


# -- 9 and 10 -------------------------------------------------------------------

def _rotations(n):
    return ExternalAction(cyclic(n), cyclic_group(n), "pt",
                          {j: "id_pt" if j == 0 else f"r{j}" for j in range(n)})


def test_lifting_criterion_matches_search(report):
    cases = [(covering_fixture(k), _rotations(4)) for k in ("stab2", "free")]
    cases += [random_group_action_fibration(random.Random(s)) for s in range(100)]
    bad, checked = [], 0
    for i, (p, ext) in enumerate(cases):
        assert ext.validate().ok
        for e in p.src.objects:
            if p.ob(e) != ext.b:
                continue
            r = action_lifting(p, ext, e)
            checked += len(r.per_element)
            if r.per_element != r.brute_force:
                bad.append((i, e))
    report(9, "per-element lifting criterion = brute-force search", not bad,
           f"{len(cases)} instances, {checked} elements, {len(bad)} violations")
    assert bad == []


def test_deck_groups(report):
    r2 = covering_analysis(covering_fixture("stab2"))
    r4 = covering_analysis(covering_fixture("free"))
    deck4 = r4.deck
    fiber4 = sorted(deck4[0])
    elems = list(range(len(deck4)))
    mul = {}
    for a, b in itertools.product(elems, repeat=2):
        comp = {e: deck4[a][deck4[b][e]] for e in fiber4}
        mul[(a, b)] = next(c for c in elems if deck4[c] == comp)
    from catspec.groups import FiniteGroup
    unit = next(i for i in elems if all(deck4[i][e] == e for e in fiber4))
    D4 = FiniteGroup(elems, mul, unit, "Deck")
    z4 = find_group_isomorphism(D4, cyclic(4))
    ok2 = len(r2.deck) == 2 == r2.weyl_order == len(r2.normalizer) // len(r2.stab) and r2.iso_verified
    ok4 = len(deck4) == 4 and r4.iso_verified and z4 is not None
    report(10, "deck groups of the BZ/4 coverings", ok2 and ok4,
           f"stab2: deck {len(r2.deck)}, weyl {r2.weyl_order}; free: deck {len(deck4)}, "
           f"{'cyclic' if z4 else 'not cyclic'}")
    assert ok2 and ok4


# -- 11 and 12 ------------------------------------------------------------------

def test_xor_group_object(report):
    g = xor_group()
    cat, K = g.cat, g.K
    problems = []
    if not is_group_object(g).ok:
        problems.append("diagrams")
    if is_group_object(xor_group(broken_unit=True)).ok:
        problems.append("broken unit accepted")
    eg = element_group(g)
    if find_group_isomorphism(eg.group, cyclic(2)) is None:
        problems.append("element group")
    pts = eg.group.elements
    R, L = eg.R, eg.L
    if not all(cat.compose(R[a], R[b]) == R[eg.group(b, a)] for a in pts for b in pts):
        problems.append("R")
    if not all(cat.compose(L[a], L[b]) == L[eg.group(a, b)] for a in pts for b in pts):
        problems.append("L")

    swap = xor_action(g, "swap")
    if not is_action(swap).ok:
        problems.append("swap action")
    sigma = {a: swap.shift(a) for a in pts}
    q = quotient_by_group(g.C, "n2", sigma)
    terminal = q.Q is not None and all(len(cat.hom(o, q.Q)) == 1 for o in cat.objects)
    if not (terminal and q.universal and q.checked):
        problems.append("quotient")

    j = point_of(cat, "n2", 0)
    st = represent_stabilizer(swap, j)
    if st is None or not all(len(cat.hom(o, st.S)) == 1 for o in cat.objects):
        problems.append("stabilizer object")
    else:
        for Z in st.probes:
            vals = stabilizer_values(swap, j, Z)
            via = [cat.compose(st.i, h) for h in cat.hom(Z, st.S)]
            if sorted(via) != sorted(set(vals)) or len(set(via)) != len(via):
                problems.append(("factorization", Z))
    report(11, "XOR group object, quotient and stabilizer", not problems,
           ", ".join(map(str, problems)) or f"quotient {q.Q}, stabilizer {st.S if st else None}")
    assert problems == []


def test_affine_quotient_group(report):
    with guard.guardrail(10 ** 4):
        g = affine_z4_group()
        cat, K = g.cat, g.K
        eg = element_group(g)
        sub = [a for a in eg.group.elements if cat.apply(a, ())[0] in (0, 2)]
        qs = quotient_group_structure(g, sub)
        P2 = K.product(g.G, qs.Q)[0]
        one_p = K.cross(cat.identity(g.G), qs.p)
        fills = [u for u in cat.hom(P2, qs.Q) if cat.compose(u, one_p) == cat.compose(qs.p, g.m)]
        squares = all(cat.compose(qs.p, eg.L[a]) == cat.compose(qs.Lbar[a], qs.p) for a in eg.group.elements)
        isos = all(cat.inverse(qs.Lbar[a]) is not None for a in eg.group.elements)
        mod2 = all(cat.apply(qs.p, v)[0] == v[0] % 2 for v in cat.carriers[g.G])
    ok = len(fills) == 1 and squares and isos and len(eg.group.elements) == 4 and mod2
    report(12, "Z/4 mod Z/2 induced multiplication", ok,
           f"quotient {qs.Q}, {len(fills)} fillers, squares {squares}, isos {isos}")
    assert ok


# -- 13 ---------------------------------------------------------------------------

def _fuzz_cases(rng, corpus, n):
    alphabet = b"{}();:,=>*#\"\n\t abcxyz019_-|" + bytes(range(0, 256, 17))
    for _ in range(n):
        mode = rng.random()
        if mode < 0.4:
            base = bytearray(rng.choice(corpus))
            for _ in range(rng.randint(1, 6)):
                op = rng.randrange(3)
                pos = rng.randrange(len(base) + 1)
                if op == 0 and base:
                    del base[min(pos, len(base) - 1)]
                elif op == 1:
                    base[pos:pos] = bytes([rng.choice(alphabet)])
                else:
                    base[pos:pos] = bytes(rng.randrange(256) for _ in range(rng.randint(1, 4)))
            yield bytes(base)
        elif mode < 0.7:
            src = rng.choice(corpus)
            cut = rng.randrange(len(src) + 1)
            yield src[:cut]
        else:
            yield bytes(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))


def test_dsl_round_trip_and_fuzz(report):
    problems = []
    corpus = []
    for path in sorted(GOLDEN.glob("*.cat")):
        data = path.read_bytes()
        corpus.append(data)
        ws = parse(data)
        printed = canonical_text(ws)
        again = parse(printed)
        if again.structure() != ws.structure() or canonical_text(again) != printed:
            problems.append(path.name)
        # shuffled top-level blocks must print the same
        blocks = [b for b in data.decode().split("\n\n") if b.strip()]
        random.Random(path.name).shuffle(blocks)
        if canonical_text(parse("\n\n".join(blocks))) != printed:
            problems.append(path.name + " order")
    crashes = unlocated = 0
    rng = random.Random(13)
    for case in _fuzz_cases(rng, corpus, 10_000):
        try:
            parse(case)
        except DslError as e:
            if not (isinstance(e.line, int) and isinstance(e.col, int) and e.line >= 1 and e.col >= 1):
                unlocated += 1
        except Exception:
            crashes += 1
    ok = not problems and crashes == 0 and unlocated == 0
    report(13, "DSL round trip and fuzz", ok,
           f"{len(corpus)} golden files, 10000 fuzz cases, {crashes} crashes, {unlocated} unlocated")
    assert problems == []
    assert crashes == 0 and unlocated == 0
