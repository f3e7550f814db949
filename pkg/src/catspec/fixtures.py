"""Named fixtures shared by tests, acceptance runs and the CLI examples."""
from __future__ import annotations

import itertools
import random

from .fincat import FunctionCategory, Functor
from .fincat.builders import _fn_name, finset, inclusion


# -- structures -------------------------------------------------------------

def _forget(total: FunctionCategory, base: FunctionCategory, size_of, name="p") -> Functor:
    """Functor from a concrete category over finite sets to the FinSet skeleton."""
    omap = {x: f"n{size_of[x]}" for x in total.objects}
    mmap = {m: base.find(omap[total.dom(m)], omap[total.cod(m)], total.fn(m)) for m in total.morphisms}
    return Functor(total, base, omap, mmap, name)


def injections_structure(n: int = 2) -> Functor:
    """FinSet_n,inj included in FinSet_n."""
    return inclusion(finset(n, injective=True), finset(n), "incl")


def partial_orders(k: int):
    pts = range(k)
    pairs = [(a, b) for a in pts for b in pts if a != b]
    out = []
    for bits in itertools.product([0, 1], repeat=len(pairs)):
        rel = {pr for pr, on in zip(pairs, bits) if on}
        if any((b, a) in rel for a, b in rel):
            continue
        if any((a, c) not in rel for a, b in rel for b2, c in rel if b == b2 and a != c):
            continue
        out.append(frozenset(rel))
    return out


def _order_code(rel):
    return "".join(f"{a}{b}" for a, b in sorted(rel)) or "d"


def poset_structure(n: int = 2) -> Functor:
    """All partial orders on 0..k-1 (k <= n) with monotone maps, over FinSet_n."""
    carriers, orders, size = {}, {}, {}
    for k in range(n + 1):
        for rel in partial_orders(k):
            nm = f"P{k}_{_order_code(rel)}"
            carriers[nm] = tuple(range(k))
            orders[nm] = set(rel) | {(i, i) for i in range(k)}
            size[nm] = k

    def homs(x, y):
        for fn in itertools.product(range(size[y]), repeat=size[x]):
            if all((fn[a], fn[b]) in orders[y] for a, b in orders[x]):
                yield fn

    total = FunctionCategory(carriers, homs, _fn_name, f"Ord{n}")
    total.orders = orders
    return _forget(total, finset(n), size, "forget")


def marked_subset_structure(n: int, cardinalities: dict, rule: str = "preserve",
                            injective: bool = False) -> Functor:
    """Finite sets with a marked subset of prescribed sizes over FinSet_n (or injections).

    rule: "preserve" (f(S) ⊆ S'), "reflect" (f⁻¹(S') ⊆ S) or "both".
    """
    carriers, marks, size = {}, {}, {}
    for k in range(n + 1):
        for c in cardinalities.get(k, ()):
            for S in itertools.combinations(range(k), c):
                nm = f"M{k}_" + ("".join(map(str, S)) or "e")
                carriers[nm] = tuple(range(k))
                marks[nm] = set(S)
                size[nm] = k

    def homs(x, y):
        a, b = size[x], size[y]
        gen = itertools.permutations(range(b), a) if injective else itertools.product(range(b), repeat=a)
        for fn in gen:
            fwd = all(fn[i] in marks[y] for i in marks[x])
            back = all(i in marks[x] for i in range(a) if fn[i] in marks[y])
            if (rule == "preserve" and fwd) or (rule == "reflect" and back) or \
                    (rule == "both" and fwd and back):
                yield fn

    total = FunctionCategory(carriers, homs, _fn_name, f"Mark{n}{rule[0]}")
    total.marks = marks
    return _forget(total, finset(n, injective=injective), size, "forget")


def random_structure(rng: random.Random) -> Functor:
    n = rng.choice([1, 2, 2, 3])
    injective = rng.random() < 0.5
    cards = {}
    for k in range(n + 1):
        opts = [c for c in range(k + 1) if rng.random() < 0.5]
        if opts:
            cards[k] = opts
    if not cards:
        cards = {n: [0]}
    return marked_subset_structure(n, cards, rng.choice(["preserve", "reflect", "both"]), injective)


def structure_fixtures() -> dict:
    from .fincat import identity_functor
    return {
        "identity": identity_functor(finset(2), "id"),
        "injections": injections_structure(2),
        "posets": poset_structure(2),
        "marked": marked_subset_structure(2, {1: [0, 1], 2: [0, 1, 2]}, "preserve"),
    }


# -- concrete categories ----------------------------------------------------

def concrete_posets():
    """Small posets closed under the products Z×X needed for Z in {pt, C2, D2}, X in {pt, C2}."""
    from .fincat.builders import monotone_category
    from .enrichment import ConcreteCategory
    sq = [(a, b) for a in range(4) for b in range(4)
          if (a // 2 <= b // 2) and (a % 2 <= b % 2) and a != b]
    dc = [(a, b) for a in range(4) for b in range(4) if a // 2 == b // 2 and a % 2 < b % 2]
    cat = monotone_category({
        "pt": ((0,), []),
        "C2": ((0, 1), [(0, 1)]),
        "D2": ((0, 1), []),
        "C2C2": ((0, 1, 2, 3), sq),
        "D2C2": ((0, 1, 2, 3), dc),
    }, "Pos")
    return ConcreteCategory.search(cat)


# -- local structures over finite spaces -------------------------------------

def _over_skeleton(S, carriers, homs, base_of, name):
    E = FunctionCategory(carriers, homs, _fn_name, name)
    B = S.cat
    omap = {e: base_of[e] for e in E.objects}
    mmap = {m: B.find(omap[E.dom(m)], omap[E.cod(m)], E.fn(m)) for m in E.morphisms}
    from .manifolds import LocalStructure
    return LocalStructure(Functor(E, B, omap, mmap, "p"), S, name)


def discrete_injections(S, n: int | None = None):
    """Discrete spaces with injective maps."""
    n = S.max_points if n is None else n
    carriers = {f"E{k}": tuple(range(k)) for k in range(n + 1)}
    base_of = {f"E{k}": S.name_of("discrete", k) for k in range(n + 1)}
    return _over_skeleton(S, carriers,
                          lambda a, b: itertools.permutations(range(len(carriers[b])), len(carriers[a])),
                          base_of, "Inj")


def ordered_discrete(S, n: int | None = None):
    """Linearly ordered discrete spaces with order-preserving injections."""
    n = S.max_points if n is None else n
    carriers, rank, base_of = {}, {}, {}
    for k in range(n + 1):
        for perm in itertools.permutations(range(k)):
            nm = f"L{k}_" + ("".join(map(str, perm)) or "e")
            carriers[nm] = tuple(range(k))
            rank[nm] = {x: i for i, x in enumerate(perm)}
            base_of[nm] = S.name_of("discrete", k)

    def homs(a, b):
        for fn in itertools.permutations(range(len(carriers[b])), len(carriers[a])):
            if all((rank[a][x] < rank[a][y]) == (rank[b][fn[x]] < rank[b][fn[y]])
                   for x in carriers[a] for y in carriers[a] if x != y):
                yield fn

    return _over_skeleton(S, carriers, homs, base_of, "Ord")


def marked_points(S, n: int | None = None):
    """Discrete spaces with a marked subset; injections preserving and reflecting marks."""
    n = S.max_points if n is None else n
    carriers, marks, base_of = {}, {}, {}
    for k in range(n + 1):
        for r in range(k + 1):
            for M in itertools.combinations(range(k), r):
                nm = f"K{k}_" + ("".join(map(str, M)) or "e")
                carriers[nm] = tuple(range(k))
                marks[nm] = set(M)
                base_of[nm] = S.name_of("discrete", k)

    def homs(a, b):
        for fn in itertools.permutations(range(len(carriers[b])), len(carriers[a])):
            if all((x in marks[a]) == (fn[x] in marks[b]) for x in carriers[a]):
                yield fn

    return _over_skeleton(S, carriers, homs, base_of, "Mark")


def identity_structure(S):
    from .fincat import identity_functor
    from .manifolds import LocalStructure
    return LocalStructure(identity_functor(S.cat, "id"), S, "Id")


# -- stacks over finite spaces ------------------------------------------------

def minimal_cover_completion(P, X, nonempty: bool = True):
    """Descent data of P over the least covering sieve of each open, with strict restriction.

    Returns (pseudofunctor, embed) where embed[U] is the restriction functor
    P(U) -> completion(U).  Valid on finite spaces only, where every open has
    a least covering sieve.
    """
    from .grothendieck import CONTRA, Pseudofunctor
    from .stacks import DescentDatum, _factorizations, descent_category, restriction
    B = P.base
    sieves = {b: X.minimal_sieve(B.open_of[b], nonempty) for b in B.objects}
    desc = {b: descent_category(sieves[b], P, f"Desc({b})") for b in B.objects}
    embed = {b: restriction(sieves[b], P, b, desc[b]) for b in B.objects}
    actions = {}
    for f in B.morphisms:
        V, U = B.dom(f), B.cod(f)
        DU, DV = desc[U], desc[V]
        memV = tuple(sorted(sieves[V]))
        om = {}
        for o, d in DU.datum.items():
            xs = tuple(d.x(B.compose(f, t)) for t in memV)
            th = tuple(sorted(((t, h), d.theta(B.compose(f, t), h)) for t, h in _factorizations(B, memV)))
            om[o] = DV.lookup[DescentDatum(memV, xs, th)]
        mm = {}
        for m in DU.morphisms:
            comps = tuple(DU.components[m][B.compose(f, t)] for t in memV)
            a, c = om[DU.dom(m)], om[DU.cod(m)]
            mm[m] = next(k for k in DV.hom(a, c)
                         if tuple(DV.components[k][t] for t in memV) == comps)
        actions[f] = Functor(DU, DV, om, mm, f"res({f})")
    F = Pseudofunctor(B, CONTRA, desc, actions, name=f"{P.name}^+")
    return F, embed


# -- group objects and actions ------------------------------------------------

def xor_group(broken_unit: bool = False):
    """(n2, xor) inside FinSet4; ``broken_unit`` picks the point 1 as unit."""
    from .enrichment import ConcreteCategory
    from .groups import GroupObject
    C = ConcreteCategory.search(finset(4))
    c = C.cat
    P, pa, pb = C.product("n2", "n2")
    m = c.find(P, "n2", {w: c.apply(pa, w) ^ c.apply(pb, w) for w in c.carriers[P]})
    e = c.find("n1", "n2", {0: 1 if broken_unit else 0})
    return GroupObject(C, "n2", m, e, "id_n2")


def xor_action(g, kind: str = "swap"):
    """Action of the xor group on n2: ``swap`` (g, x) -> g xor x or ``trivial`` (g, x) -> x."""
    from .groups import Action
    c = g.cat
    P, pa, pb = g.C.product(g.G, "n2")
    rule = (lambda a, x: a ^ x) if kind == "swap" else (lambda a, x: x)
    rho = c.find(P, "n2", {w: rule(c.apply(pa, w), c.apply(pb, w)) for w in c.carriers[P]})
    return Action(g, "n2", rho)


def point_of(cat, X, x):
    return cat.find("n1", X, {0: x})


_AFFINE = {"0": (), "Z2": (2,), "Z4": (4,), "Z4xZ2": (4, 2), "Z4xZ4": (4, 4)}


def _ab_homs(src, dst):
    """Homomorphisms of products of cyclic groups, as generator image tuples."""
    elems = list(itertools.product(*[range(n) for n in dst]))

    def order_divides(y, n):
        return all((n * yi) % mi == 0 for yi, mi in zip(y, dst))

    choices = [[y for y in elems if order_divides(y, n)] for n in src]
    return itertools.product(*choices)


def affine_z4():
    """Abelian groups 0, Z2, Z4, Z4×Z2, Z4×Z4 with affine maps x -> h(x) + c.

    Chosen products are the evident ones; Z2×Z2 and anything times Z4×Z2
    are missing.  The category has 6483 arrows, so callers need a raised
    guardrail for size-checked operations.
    """
    from .enrichment import ConcreteCategory
    carriers = {o: tuple(itertools.product(*[range(n) for n in mods])) for o, mods in _AFFINE.items()}

    def homs(x, y):
        sx, dy = _AFFINE[x], _AFFINE[y]
        for gens in _ab_homs(sx, dy):
            for c in carriers[y]:
                def h(v):
                    return tuple((sum(vi * g[j] for vi, g in zip(v, gens)) + c[j]) % dy[j]
                                 for j in range(len(dy)))
                yield tuple(carriers[y].index(h(v)) for v in carriers[x])

    def namer(x, y, fn):
        return f"{x}>{y}:" + ".".join(map(str, fn))

    cat = FunctionCategory(carriers, homs, namer, "AffZ4")

    def swap_proj(P, X, k):
        return cat.find(P, X, {v: (v[k],) for v in carriers[P]})

    products = {}
    for X in _AFFINE:
        products[("0", X)] = (X, cat.find(X, "0", {v: () for v in carriers[X]}), cat.identity(X))
        products[(X, "0")] = (X, cat.identity(X), cat.find(X, "0", {v: () for v in carriers[X]}))
    products[("Z4", "Z2")] = ("Z4xZ2", swap_proj("Z4xZ2", "Z4", 0), swap_proj("Z4xZ2", "Z2", 1))
    products[("Z2", "Z4")] = ("Z4xZ2", swap_proj("Z4xZ2", "Z2", 1), swap_proj("Z4xZ2", "Z4", 0))
    products[("Z4", "Z4")] = ("Z4xZ4", swap_proj("Z4xZ4", "Z4", 0), swap_proj("Z4xZ4", "Z4", 1))
    return ConcreteCategory(cat, products, "0")


def affine_z4_group():
    """Z4 as a group object in affine_z4()."""
    from .groups import GroupObject
    C = affine_z4()
    c = C.cat
    P = "Z4xZ4"
    m = c.find(P, "Z4", {v: ((v[0] + v[1]) % 4,) for v in c.carriers[P]})
    e = c.find("0", "Z4", {(): (0,)})
    inv = c.find("Z4", "Z4", {v: ((-v[0]) % 4,) for v in c.carriers["Z4"]})
    return GroupObject(C, "Z4", m, e, inv)


# -- coverings and group actions over one-object groupoids --------------------

def cyclic_set_presheaf(n: int, size: int, step: int, name: str = "Y"):
    """Presheaf on BZn: r1 acts on range(size) by x -> x + step (mod size)."""
    from .fincat.builders import cyclic_group
    from .presheaf import SetPresheaf
    B = cyclic_group(n)
    vals = {"pt": tuple(range(size))}
    restrict = {}
    for k in range(n):
        u = "id_pt" if k == 0 else f"r{k}"
        restrict[u] = {x: (x + k * step) % size for x in range(size)}
    return SetPresheaf(B, vals, restrict, name)


def covering_fixture(kind: str = "stab2"):
    """Discrete fibration over BZ4: ``stab2`` has a 2-point fiber, ``free`` a 4-point fiber."""
    from .grothendieck import grothendieck
    from .stacks import discrete_pseudofunctor
    P = cyclic_set_presheaf(4, 2, 1, "Y2") if kind == "stab2" else cyclic_set_presheaf(4, 4, 1, "Y4")
    total, p = grothendieck(discrete_pseudofunctor(P))
    return p


def _thin_groupoid(objects, blocks, name):
    from .fincat import make_category
    block_of = {o: i for i, bl in enumerate(blocks) for o in bl}
    arrows, comp = {}, {}

    def nm(x, y):
        return f"id_{x}" if x == y else f"{x}~{y}"

    for x in objects:
        for y in objects:
            if x != y and block_of[x] == block_of[y]:
                arrows[nm(x, y)] = (x, y)
    for x in objects:
        for y in objects:
            for z in objects:
                if block_of[x] == block_of[y] == block_of[z]:
                    comp[(nm(y, z), nm(x, y))] = nm(x, z)
    return make_category(list(objects), arrows, comp, name)


def random_group_action_fibration(rng: random.Random):
    """(p, ExternalAction) with p the Grothendieck fibration of a random Zn action on a thin groupoid."""
    from .fincat.builders import cyclic_group
    from .grothendieck import CONTRA, Pseudofunctor, grothendieck
    from .groups import ExternalAction, cyclic
    n = rng.choice([2, 3, 4])
    B = cyclic_group(n)
    k = rng.randint(1, 3)
    objs = [f"v{i}" for i in range(k)]
    # a permutation of order dividing n, then blocks unioned over its orbits
    while True:
        perm = list(range(k))
        rng.shuffle(perm)
        q = list(range(k))
        for _ in range(n):
            q = [perm[i] for i in q]
        if q == list(range(k)):
            break
    label = [rng.randrange(k) for _ in range(k)]
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(k):
        for j in range(k):
            if label[i] == label[j]:
                parent[find(j)] = find(i)
    # close under perm: blocks are images of blocks
    changed = True
    while changed:
        changed = False
        for i in range(k):
            for j in range(k):
                if find(i) == find(j) and find(perm[i]) != find(perm[j]):
                    parent[find(perm[j])] = find(perm[i])
                    changed = True
    blocks = {}
    for i in range(k):
        blocks.setdefault(find(i), []).append(objs[i])
    V = _thin_groupoid(objs, list(blocks.values()), "V")
    actions = {}
    for step in range(n):
        u = "id_pt" if step == 0 else f"r{step}"
        q = list(range(k))
        for _ in range(step):
            q = [perm[i] for i in q]
        om = {objs[i]: objs[q[i]] for i in range(k)}
        mm = {}
        for m in V.morphisms:
            a, b = V.dom(m), V.cod(m)
            mm[m] = next(h for h in V.hom(om[a], om[b]))
        actions[u] = Functor(V, V, om, mm, f"F({u})")
    F = Pseudofunctor(B, CONTRA, {"pt": V}, actions, name="Act")
    total, p = grothendieck(F)
    ext = ExternalAction(cyclic(n), B, "pt", {j: "id_pt" if j == 0 else f"r{j}" for j in range(n)})
    return p, ext
