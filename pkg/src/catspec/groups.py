"""Group objects in concrete finite categories, actions, stabilizers, quotients and coverings.

Diagrams that would need G×G×G are checked on generalized elements Z -> G
for every probe object Z, since the finite categories used here rarely
contain the triple product.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .enrichment import ConcreteCategory
from .errors import CatspecError, PreconditionError
from .fibrations import CART, COCART, fiber, is_cartesian, lifts, transport
from .fincat import FinCat, Functor, analyze_functor, natural_iso_between, validate_functor
from .fincat.ops import isomorphisms
from .grothendieck import choose_cleavage
from .sites import Verdict


# -- finite groups -------------------------------------------------------------

class FiniteGroup:
    """Multiplication table over hashable elements."""

    def __init__(self, elements, mul: dict, unit, name: str = "G"):
        self.elements = tuple(elements)
        self.mul = dict(mul)
        self.unit = unit
        self.name = name

    def __call__(self, a, b):
        return self.mul[(a, b)]

    def __len__(self):
        return len(self.elements)

    def inv(self, a):
        return next(b for b in self.elements if self.mul[(a, b)] == self.unit)

    def is_group(self) -> bool:
        E = self.elements
        if any((a, b) not in self.mul or self.mul[(a, b)] not in E for a in E for b in E):
            return False
        if any(self(self.unit, a) != a or self(a, self.unit) != a for a in E):
            return False
        if any(self(self(a, b), c) != self(a, self(b, c)) for a in E for b in E for c in E):
            return False
        return all(any(self(a, b) == self.unit for b in E) for a in E)

    def is_subgroup(self, H) -> bool:
        H = set(H)
        return self.unit in H and all(self(a, b) in H for a in H for b in H) and \
            all(self.inv(a) in H for a in H)

    def normalizer(self, H) -> list:
        H = set(H)
        return [g for g in self.elements if {self(self(g, h), self.inv(g)) for h in H} == H]

    def cosets(self, H) -> list:
        """Left cosets gH as frozensets, in order of first representative."""
        out = []
        for g in self.elements:
            c = frozenset(self(g, h) for h in H)
            if c not in out:
                out.append(c)
        return out

    def quotient(self, N, name=None) -> "FiniteGroup":
        cs = self.cosets(N)
        of = {g: c for c in cs for g in c}
        mul = {(a, b): of[self(next(iter(a)), next(iter(b)))] for a in cs for b in cs}
        return FiniteGroup(cs, mul, of[self.unit], name or f"{self.name}/H")

    def is_cyclic(self) -> bool:
        for g in self.elements:
            seen, x = {self.unit}, g
            while x != self.unit:
                seen.add(x)
                x = self(x, g)
            if len(seen) == len(self):
                return True
        return False


def cyclic(n: int, name=None) -> FiniteGroup:
    return FiniteGroup(range(n), {(a, b): (a + b) % n for a in range(n) for b in range(n)}, 0,
                       name or f"Z{n}")


def is_homomorphism(G: FiniteGroup, H: FiniteGroup, phi: dict) -> bool:
    return all(phi[G(a, b)] == H(phi[a], phi[b]) for a in G.elements for b in G.elements)


def find_group_isomorphism(G: FiniteGroup, H: FiniteGroup) -> dict | None:
    if len(G) != len(H):
        return None
    for perm in itertools.permutations(H.elements):
        phi = dict(zip(G.elements, perm))
        if phi[G.unit] == H.unit and is_homomorphism(G, H, phi):
            return phi
    return None


# -- products in a concrete category ---------------------------------------------

class Cartesian:
    """Pairing and terminal maps read off a ConcreteCategory's chosen witnesses."""

    def __init__(self, C: ConcreteCategory):
        self.C = C
        self.cat = C.cat
        self._gamma_inv = {}

    def product(self, A, B):
        return self.C.product(A, B)

    def has_product(self, A, B) -> bool:
        return (A, B) in self.C.products

    def pair(self, f, g):
        """⟨f, g⟩: Z -> A×B."""
        cat = self.cat
        Z = cat.dom(f)
        if cat.dom(g) != Z:
            raise PreconditionError(f"{f} and {g} have different domains")
        A, B = cat.cod(f), cat.cod(g)
        P, pa, pb = self.product(A, B)
        key = (A, B)
        if key not in self._gamma_inv:
            self._gamma_inv[key] = {(cat.apply(pa, w), cat.apply(pb, w)): w for w in cat.carriers[P]}
        gi = self._gamma_inv[key]
        out = cat.find(Z, P, {z: gi[(cat.apply(f, z), cat.apply(g, z))] for z in cat.carriers[Z]})
        if out is None:
            raise CatspecError(f"pairing of {f} and {g} is not an arrow")
        return out

    def cross(self, f, g):
        """f×g: A×B -> A'×B'."""
        cat = self.cat
        P, pa, pb = self.product(cat.dom(f), cat.dom(g))
        return self.pair(cat.compose(f, pa), cat.compose(g, pb))

    def bang(self, Z):
        T = self.C.terminal
        if T is None:
            raise PreconditionError("no terminal object")
        (m,) = self.cat.hom(Z, T)
        return m

    def points(self, X) -> list:
        return list(self.cat.hom(self.C.terminal, X))


def pairing_universal(C: ConcreteCategory, A, B) -> bool:
    """Concrete universality: every pair of arrows W -> A, W -> B pairs to an arrow W -> A×B."""
    K = Cartesian(C)
    cat = C.cat
    try:
        for W in cat.objects:
            for f in cat.hom(W, A):
                for g in cat.hom(W, B):
                    K.pair(f, g)
    except CatspecError:
        return False
    return True


# -- group objects ------------------------------------------------------------

@dataclass
class GroupObject:
    C: ConcreteCategory
    G: str
    m: str
    e: str
    inv: str

    def __post_init__(self):
        self.K = Cartesian(self.C)

    @property
    def cat(self):
        return self.C.cat

    def mul(self, x, y):
        """m∘⟨x, y⟩ for generalized elements x, y: Z -> G."""
        return self.cat.compose(self.m, self.K.pair(x, y))

    def unit(self, Z):
        return self.cat.compose(self.e, self.K.bang(Z))

    def inverse(self, x):
        return self.cat.compose(self.inv, x)


def is_group_object(g: GroupObject, probes=None) -> Verdict:
    """Associativity, unit and inverse laws on every generalized element Z -> G."""
    cat, K = g.cat, g.K
    if g.C.terminal is None or not K.has_product(g.G, g.G):
        raise PreconditionError("group object needs a terminal object and G×G")
    P = K.product(g.G, g.G)[0]
    for nm, (d, c) in (("m", (P, g.G)), ("e", (g.C.terminal, g.G)), ("inv", (g.G, g.G))):
        a = getattr(g, nm)
        if (cat.dom(a), cat.cod(a)) != (d, c):
            return Verdict(False, "typing", {"arrow": a})
    for Z in probes or cat.objects:
        xs = cat.hom(Z, g.G)
        u = g.unit(Z)
        for x in xs:
            if g.mul(u, x) != x or g.mul(x, u) != x:
                return Verdict(False, "unit", {"probe": Z, "element": x})
            if g.mul(x, g.inverse(x)) != u or g.mul(g.inverse(x), x) != u:
                return Verdict(False, "inverse", {"probe": Z, "element": x})
        table = {(x, y): g.mul(x, y) for x in xs for y in xs}
        for x, y, z in itertools.product(xs, repeat=3):
            if table[(table[(x, y)], z)] != table[(x, table[(y, z)])]:
                return Verdict(False, "associativity", {"probe": Z, "elements": [x, y, z]})
    return Verdict(True)


@dataclass
class ElementGroup:
    group: FiniteGroup
    R: dict        # element -> right shift G -> G
    L: dict        # element -> left shift G -> G
    anti_R: bool
    hom_L: bool
    commute: bool


def element_group(g: GroupObject) -> ElementGroup:
    """C(1, G) with f·h = m∘⟨f, h⟩, plus the right and left shifts."""
    cat, K = g.cat, g.K
    pts = K.points(g.G)
    mul = {(a, b): g.mul(a, b) for a in pts for b in pts}
    grp = FiniteGroup(pts, mul, g.e, f"C(1,{g.G})")
    one = cat.identity(g.G)
    R = {a: g.mul(one, cat.compose(a, K.bang(g.G))) for a in pts}
    L = {a: g.mul(cat.compose(a, K.bang(g.G)), one) for a in pts}
    for a in pts:
        if cat.inverse(R[a]) is None or cat.inverse(L[a]) is None:
            raise CatspecError(f"shift by {a} is not an automorphism")
    anti = all(cat.compose(R[a], R[b]) == R[grp(b, a)] for a in pts for b in pts)
    hom = all(cat.compose(L[a], L[b]) == L[grp(a, b)] for a in pts for b in pts)
    comm = all(cat.compose(L[a], R[b]) == cat.compose(R[b], L[a]) for a in pts for b in pts)
    return ElementGroup(grp, R, L, anti, hom, comm)


# -- actions --------------------------------------------------------------------

@dataclass
class Action:
    group: GroupObject
    X: str
    rho: str

    def act(self, x, y):
        """ρ∘⟨x, y⟩ for x: Z -> G, y: Z -> X."""
        g = self.group
        return g.cat.compose(self.rho, g.K.pair(x, y))

    def shift(self, a):
        """L^X_a: X -> X for a global element a."""
        cat, K = self.group.cat, self.group.K
        return self.act(cat.compose(a, K.bang(self.X)), cat.identity(self.X))


def is_action(a: Action, probes=None) -> Verdict:
    g = a.group
    cat, K = g.cat, g.K
    if not K.has_product(g.G, a.X):
        raise PreconditionError("action needs the product G×X")
    for Z in probes or cat.objects:
        xs, ys = cat.hom(Z, g.G), cat.hom(Z, a.X)
        for y in ys:
            if a.act(g.unit(Z), y) != y:
                return Verdict(False, "unit", {"probe": Z, "element": y})
            for x1, x2 in itertools.product(xs, repeat=2):
                if a.act(g.mul(x1, x2), y) != a.act(x1, a.act(x2, y)):
                    return Verdict(False, "action", {"probe": Z, "elements": [x1, x2, y]})
    return Verdict(True)


def _is_mono(cat: FinCat, j) -> bool:
    for W in cat.objects:
        img = [cat.compose(j, u) for u in cat.hom(W, cat.dom(j))]
        if len(set(img)) != len(img):
            return False
    return True


def stabilizer_filler(a: Action, j, x):
    """ρ_x: Z×Y -> Y with j∘ρ_x = ρ∘(x×j), or None."""
    g = a.group
    cat, K = g.cat, g.K
    Y = cat.dom(j)
    Z = cat.dom(x)
    if not K.has_product(Z, Y):
        raise PreconditionError(f"no product {Z}×{Y}")
    P, pz, py = K.product(Z, Y)
    target = a.act(cat.compose(x, pz), cat.compose(j, py))
    for r in cat.hom(P, Y):
        if cat.compose(j, r) == target:
            return r
    return None


def stabilizer_values(a: Action, j, Z) -> list:
    """Elements x: Z -> G preserving the subobject j: Y >-> X."""
    cat = a.group.cat
    if not _is_mono(cat, j):
        raise PreconditionError(f"{j} is not monic")
    return [x for x in cat.hom(Z, a.group.G) if stabilizer_filler(a, j, x) is not None]


@dataclass
class Stabilizer:
    S: str
    i: str
    rho: str                 # universal action S×Y -> Y
    submonoid: bool
    second_arg_surjective: bool
    subgroup: bool
    probes: list = field(default_factory=list)


def represent_stabilizer(a: Action, j, probes=None) -> Stabilizer | None:
    """First (object, mono) representing Z |-> stabilizer_values(Z) on every probe Z."""
    g = a.group
    cat, K = g.cat, g.K
    Y = cat.dom(j)
    probes = [Z for Z in (probes or cat.objects) if K.has_product(Z, Y)]
    values = {Z: set(stabilizer_values(a, j, Z)) for Z in probes}
    for S in cat.objects:
        if not K.has_product(S, Y):
            continue
        for i in cat.hom(S, g.G):
            if i not in values.get(S, ()) or not _is_mono(cat, i):
                continue
            if all(_factors_bijectively(cat, i, Z, values[Z]) for Z in probes):
                rho = stabilizer_filler(a, j, i)
                sub = _submonoid(a, j, probes, values)
                surj = _second_arg_surjective(a, j, probes, values)
                subgroup = all(g.inverse(x) in values[Z] for Z in probes for x in values[Z])
                if surj and not subgroup:
                    raise CatspecError("surjectivity condition holds but the stabilizer is not a subgroup")
                return Stabilizer(S, i, rho, sub, surj, subgroup, probes)
    return None


def _factors_bijectively(cat, i, Z, vals) -> bool:
    img = [cat.compose(i, u) for u in cat.hom(Z, cat.dom(i))]
    return len(set(img)) == len(img) and set(img) == vals


def _submonoid(a, j, probes, values) -> bool:
    g = a.group
    for Z in probes:
        if g.unit(Z) not in values[Z]:
            return False
        if any(g.mul(x, y) not in values[Z] for x in values[Z] for y in values[Z]):
            return False
    return True


def _second_arg_surjective(a, j, probes, values) -> bool:
    """Every ρ_x is surjective in its second argument: each y': T -> Y is hit as ρ_x∘⟨t, y⟩."""
    g = a.group
    cat, K = g.cat, g.K
    Y = cat.dom(j)
    for Z in probes:
        for x in values[Z]:
            rx = stabilizer_filler(a, j, x)
            for T in probes:
                if not K.has_product(T, Y):
                    continue
                for t in cat.hom(T, Z):
                    hit = {cat.compose(rx, K.pair(t, y)) for y in cat.hom(T, Y)}
                    if set(cat.hom(T, Y)) - hit:
                        return False
    return True


# -- diagonal fill for presheaf squares -------------------------------------------

def fill_diagonal(A, B, C, D, top: dict, left: dict, right: dict, bottom: dict) -> dict:
    """Natural d: B -> C with d∘top = left and bottom∘d = right.

    Presheaves A, B, C, D share a base; top: A -> B, left: A -> C,
    right: B -> D, bottom: C -> D are given as {object: {element: element}}.
    Needs top epi and bottom mono componentwise.
    """
    base = A.base
    for c in base.objects:
        missing = set(B.values[c]) - set(top[c].values())
        if missing:
            raise PreconditionError(f"top is not surjective at {c}: misses {sorted(missing, key=repr)[0]!r}")
        if len(set(bottom[c].values())) != len(bottom[c]):
            raise PreconditionError(f"bottom is not injective at {c}")
        for x in A.values[c]:
            if bottom[c][left[c][x]] != right[c][top[c][x]]:
                raise PreconditionError(f"square does not commute at {c} on {x!r}")
    d = {}
    for c in base.objects:
        d[c] = {}
        for x in A.values[c]:
            if d[c].setdefault(top[c][x], left[c][x]) != left[c][x]:
                raise CatspecError(f"diagonal not well defined at {c}")
    for u in base.morphisms:
        src, dst = base.cod(u), base.dom(u)
        for y in B.values[src]:
            if C.restrict[u][d[src][y]] != d[dst][B.restrict[u][y]]:
                raise CatspecError(f"diagonal not natural at {u}")
    return d


# -- equivalence relations on objects and quotients ------------------------------

class ObjectEquivalence:
    """Per object X, a partition of hom(X, C) closed under precomposition.

    Either give the blocks outright or ``generators``: pairs (a, b) of arrows
    Y -> C whose precomposition closure is the relation.  Blocks are then
    computed on demand.
    """

    def __init__(self, cat: FinCat, C: str, blocks: dict | None = None, name: str = "R",
                 generators=None):
        self.cat = cat
        self.C = C
        self.name = name
        self.generators = list(generators) if generators is not None else None
        self._blocks = None
        if blocks is not None:
            self._set_blocks(blocks)
        elif generators is None:
            raise PreconditionError("need blocks or generators")

    def _set_blocks(self, blocks):
        self._blocks = {X: [frozenset(b) for b in bl] for X, bl in blocks.items()}
        self._cls = {X: {f: k for k, b in enumerate(bl) for f in b} for X, bl in self._blocks.items()}

    @property
    def blocks(self):
        if self._blocks is None:
            self._set_blocks(self._close())
        return self._blocks

    def _close(self):
        cat = self.cat
        out = {}
        for X in cat.objects:
            hs = list(cat.hom(X, self.C))
            parent = {h: h for h in hs}

            def find(h):
                while parent[h] != h:
                    parent[h] = parent[parent[h]]
                    h = parent[h]
                return h

            for a, b in self.generators:
                for t in cat.hom(X, cat.dom(a)):
                    parent[find(cat.compose(b, t))] = find(cat.compose(a, t))
            groups = {}
            for h in hs:
                groups.setdefault(find(h), []).append(h)
            out[X] = list(groups.values())
        return out

    def related(self, f, g) -> bool:
        self.blocks
        X = self.cat.dom(f)
        return self._cls[X][f] == self._cls[X][g]

    def respects(self, h) -> bool:
        """h∘f = h∘g whenever f ~ g."""
        cat = self.cat
        if self.generators is not None:
            return all(cat.compose(h, a) == cat.compose(h, b) for a, b in self.generators)
        return all(len({cat.compose(h, f) for f in b}) <= 1 for bl in self.blocks.values() for b in bl)

    def validate(self) -> Verdict:
        cat = self.cat
        blocks = self.blocks
        for X in cat.objects:
            homs = set(cat.hom(X, self.C))
            flat = [f for b in blocks.get(X, ()) for f in b]
            if sorted(flat) != sorted(homs):
                return Verdict(False, "partition", {"object": X})
        for t in cat.morphisms:
            W, X = cat.dom(t), cat.cod(t)
            for b in blocks[X]:
                if len({self._cls[W][cat.compose(f, t)] for f in b}) > 1:
                    return Verdict(False, "precomposition", {"arrow": t})
        return Verdict(True)

    @classmethod
    def from_pairs(cls, cat, C, related, name="R"):
        """Blocks of each hom(X, C) from a predicate, closed transitively."""
        blocks = {}
        for X in cat.objects:
            hs = list(cat.hom(X, C))
            parent = list(range(len(hs)))

            def find(i):
                while parent[i] != i:
                    parent[i] = parent[parent[i]]
                    i = parent[i]
                return i

            for i, j in itertools.combinations(range(len(hs)), 2):
                if related(hs[i], hs[j]):
                    parent[find(j)] = find(i)
            groups = {}
            for i, h in enumerate(hs):
                groups.setdefault(find(i), []).append(h)
            blocks[X] = list(groups.values())
        return cls(cat, C, blocks, name)

    @classmethod
    def from_point_relation(cls, cat, C, pairs, name="R"):
        """f ~ g iff f(x) ~ g(x) for every element x, in the equivalence generated by ``pairs``."""
        pts = cat.carriers[C]
        parent = {p: p for p in pts}

        def find(p):
            while parent[p] != p:
                p = parent[p]
            return p

        for a, b in pairs:
            parent[find(b)] = find(a)
        return cls.from_pairs(
            cat, C, lambda f, g: all(find(cat.apply(f, x)) == find(cat.apply(g, x))
                                     for x in cat.carriers[cat.dom(f)]), name)

    @classmethod
    def from_action(cls, cat, C, sigma: dict, name="R_sigma"):
        """f ~ σ(g)∘f for every group element g: generated by (1, σ(g))."""
        one = cat.identity(C)
        return cls(cat, C, None, name, [(one, s) for s in dict.fromkeys(sigma.values())])

    @classmethod
    def discrete(cls, cat, C):
        return cls(cat, C, {X: [[f] for f in cat.hom(X, C)] for X in cat.objects}, "discrete")

    @classmethod
    def total(cls, cat, C):
        return cls(cat, C, {X: [list(cat.hom(X, C))] if cat.hom(X, C) else [] for X in cat.objects},
                   "total")


def is_effective(E: ObjectEquivalence, pi) -> bool:
    """π identifies exactly the related generalized elements (not needed for a quotient)."""
    cat = E.cat
    for X, bl in E.blocks.items():
        img = {}
        for k, b in enumerate(bl):
            for f in b:
                img.setdefault(cat.compose(pi, f), set()).add(k)
        if any(len(v) > 1 for v in img.values()):
            return False
    return True


def _factorizations_through(cat, pi, h) -> list:
    """All u with u∘π = h; solved pointwise when π is onto, else by search."""
    Q, W = cat.cod(pi), cat.cod(h)
    src = getattr(cat, "carriers", {}).get(cat.dom(pi))
    if src is not None and {cat.apply(pi, z) for z in src} == set(cat.carriers[Q]):
        want = {}
        for z in src:
            q, v = cat.apply(pi, z), cat.apply(h, z)
            if want.setdefault(q, v) != v:
                return []
        u = cat.find(Q, W, want)
        return [] if u is None else [u]
    return [u for u in cat.hom(Q, W) if cat.compose(u, pi) == h]


def is_quotient_map(E: ObjectEquivalence, pi) -> bool:
    """π coequalizes related pairs and every respecting arrow factors through it uniquely."""
    cat = E.cat
    if cat.dom(pi) != E.C or not E.respects(pi):
        return False
    for W in cat.objects:
        for h in cat.hom(E.C, W):
            if E.respects(h) and len(_factorizations_through(cat, pi, h)) != 1:
                return False
    return True


def _is_epi(cat, pi) -> bool:
    for W in cat.objects:
        img = [cat.compose(u, pi) for u in cat.hom(cat.cod(pi), W)]
        if len(set(img)) != len(img):
            return False
    return True


def quotient_object(E: ObjectEquivalence):
    """(Q, π) representing relation-respecting arrows out of C, or None."""
    cat = E.cat
    for Q in cat.objects:
        for pi in cat.hom(E.C, Q):
            if is_quotient_map(E, pi):
                if not _is_epi(cat, pi):
                    raise CatspecError(f"quotient map {pi} is not epi")
                return Q, pi
    return None


@dataclass
class GroupQuotient:
    Q: str | None
    pi: str | None
    universal: bool
    checked: list = field(default_factory=list)     # trivially-acted C' actually compared


def quotient_by_group(C: ConcreteCategory, X, sigma: dict) -> GroupQuotient:
    """X/G for σ: element -> automorphism of X; universal = (C'×X)/G ≅ C'×(X/G) for every C'."""
    cat = C.cat
    E = ObjectEquivalence.from_action(cat, X, sigma)
    found = quotient_object(E)
    if found is None:
        return GroupQuotient(None, None, False)
    Q, pi = found
    K = Cartesian(C)
    checked, universal = [], True
    for Cp in cat.objects:
        if not (K.has_product(Cp, X) and K.has_product(Cp, Q)):
            continue
        P, pc, px = K.product(Cp, X)
        moved = {g: K.pair(pc, cat.compose(s, px)) for g, s in sigma.items()}
        E2 = ObjectEquivalence.from_action(cat, P, moved)
        checked.append(Cp)
        if not is_quotient_map(E2, K.cross(cat.identity(Cp), pi)):
            universal = False
    return GroupQuotient(Q, pi, universal, checked)


@dataclass
class QuotientGroupStructure:
    Q: str
    p: str
    mbar: str
    Lbar: dict
    squares_ok: bool
    isos_ok: bool


def quotient_group_structure(g: GroupObject, K_elements) -> QuotientGroupStructure:
    """G/K by right shifts of K with the induced m̄: G×G/K -> G/K and L̄_g."""
    cat, K = g.cat, g.K
    eg = element_group(g)
    if not eg.group.is_subgroup(K_elements):
        raise PreconditionError("K is not a subgroup of the element group")
    gq = quotient_by_group(g.C, g.G, {k: eg.R[k] for k in K_elements})
    if gq.Q is None:
        raise PreconditionError("G/K does not exist in this category")
    if not gq.universal:
        raise PreconditionError("G/K is not universal")
    Q, p = gq.Q, gq.pi
    hit = {cat.compose(p, a) for a in eg.group.elements}
    if hit != set(K.points(Q)):
        raise PreconditionError("hom(1, p) is not surjective")
    if not K.has_product(g.G, Q):
        raise PreconditionError(f"no product {g.G}×{Q}")
    P2 = K.product(g.G, Q)[0]
    one_p = K.cross(cat.identity(g.G), p)
    target = cat.compose(p, g.m)
    fills = [u for u in cat.hom(P2, Q) if cat.compose(u, one_p) == target]
    if len(fills) != 1:
        raise CatspecError(f"expected a unique m̄, found {len(fills)}")
    mbar = fills[0]
    Lbar = {a: cat.compose(mbar, K.pair(cat.compose(a, K.bang(Q)), cat.identity(Q)))
            for a in eg.group.elements}
    squares = all(cat.compose(p, eg.L[a]) == cat.compose(Lbar[a], p) for a in eg.group.elements)
    isos = all(cat.inverse(Lbar[a]) is not None for a in eg.group.elements)
    return QuotientGroupStructure(Q, p, mbar, Lbar, squares, isos)


# -- conjugate stabilizers and homogeneity -------------------------------------

@dataclass
class ConjugateStabilizers:
    iso: str
    prism_ok: bool
    quotient_iso: str | None


def conjugate_stabilizer(a: Action, elt, jY, jZ, Lbar=None, probes=None) -> ConjugateStabilizers:
    """Stab_Y ≅ Stab_Z induced by conjugation L_g∘R_{g⁻¹} when L^X_g carries Y onto Z."""
    g = a.group
    cat, K = g.cat, g.K
    eg = element_group(g)
    LX = a.shift(elt)
    Y, Z = cat.dom(jY), cat.dom(jZ)
    if Lbar is None:
        Lbar = next((u for u in cat.hom(Y, Z)
                     if cat.compose(jZ, u) == cat.compose(LX, jY) and cat.inverse(u) is not None), None)
        if Lbar is None:
            raise PreconditionError("L_g does not restrict to an iso between the subobjects")
    sY, sZ = represent_stabilizer(a, jY, probes), represent_stabilizer(a, jZ, probes)
    if sY is None or sZ is None:
        raise PreconditionError("stabilizers are not representable here")
    conj = cat.compose(eg.L[elt], eg.R[eg.group.inv(elt)])
    us = [u for u in cat.hom(sY.S, sZ.S) if cat.compose(sZ.i, u) == cat.compose(conj, sY.i)]
    if len(us) != 1 or cat.inverse(us[0]) is None:
        raise CatspecError("conjugation does not induce an iso of stabilizers")
    u = us[0]
    prism = cat.compose(Lbar, sY.rho) == cat.compose(sZ.rho, K.cross(u, Lbar))
    qiso = None
    qY = quotient_by_group(g.C, g.G, {s: eg.R[cat.compose(sY.i, s)] for s in K.points(sY.S)})
    qZ = quotient_by_group(g.C, g.G, {s: eg.R[cat.compose(sZ.i, s)] for s in K.points(sZ.S)})
    if qY.Q is not None and qZ.Q is not None:
        h = cat.compose(qZ.pi, eg.R[eg.group.inv(elt)])
        fill = [v for v in cat.hom(qY.Q, qZ.Q) if cat.compose(v, qY.pi) == h]
        if len(fill) == 1 and cat.inverse(fill[0]) is not None:
            qiso = fill[0]
    return ConjugateStabilizers(u, prism, qiso)


@dataclass
class Homogeneity:
    homogeneous: bool
    iso: str | None
    transitive: bool
    basepoint_independent: bool | None
    reason: str | None = None


def _homogeneous_at(a: Action, x, probes=None):
    g = a.group
    cat, K = g.cat, g.K
    eg = element_group(g)
    st = represent_stabilizer(a, x, probes)
    if st is None:
        return None, "stabilizer not representable"
    q = quotient_by_group(g.C, g.G, {s: eg.R[cat.compose(st.i, s)] for s in K.points(st.S)})
    if q.Q is None or not q.universal:
        return None, "G/Stab missing or not universal"
    orbit = a.act(cat.identity(g.G), cat.compose(x, K.bang(g.G)))
    fs = [f for f in cat.hom(q.Q, a.X) if cat.compose(f, q.pi) == orbit]
    if len(fs) != 1:
        return False, "orbit map does not factor through G/Stab"
    f = fs[0]
    if cat.inverse(f) is None:
        return False, "G/Stab -> X is not an iso"
    return f, None


def is_homogeneous(a: Action, x, probes=None) -> Homogeneity:
    g = a.group
    cat, K = g.cat, g.K
    f, why = _homogeneous_at(a, x, probes)
    if f is None:
        raise PreconditionError(why)
    pts = K.points(a.X)
    orbit = {a.act(e, x) for e in K.points(g.G)}
    transitive = orbit == set(pts)
    verdicts = set()
    for y in pts:
        fy, _ = _homogeneous_at(a, y, probes)
        verdicts.add(bool(fy))
    ok = bool(f)
    return Homogeneity(ok, f if ok else None, transitive, len(verdicts) == 1, why)


# -- actions on base objects and their lifts (fibrations) ------------------------

@dataclass
class ExternalAction:
    group: FiniteGroup
    base: FinCat
    b: str
    rho: dict          # element -> automorphism of b

    def validate(self) -> Verdict:
        B = self.base
        for k, f in self.rho.items():
            if B.dom(f) != self.b or B.cod(f) != self.b or B.inverse(f) is None:
                return Verdict(False, "not-automorphism", {"element": k})
        G = self.group
        for x in G.elements:
            for y in G.elements:
                if self.rho[G(x, y)] != B.compose(self.rho[x], self.rho[y]):
                    return Verdict(False, "homomorphism", {"pair": [x, y]})
        return Verdict(True)


def automorphisms(cat: FinCat, x) -> list:
    return [m for m in cat.hom(x, x) if cat.inverse(m) is not None]


@dataclass
class LiftingReport:
    per_element: dict
    brute_force: dict
    lifted_action: dict | None
    representation: dict
    representation_homomorphic: bool
    strict: bool


def action_lifting(p: Functor, ext: ExternalAction, e, clv=None) -> LiftingReport:
    """Which ρ(g) lift to automorphisms of e; criterion Cart_{ρ(g)}(e) ≅ e in the fiber."""
    E, B = p.src, p.dst
    if p.ob(e) != ext.b:
        raise PreconditionError(f"{e} is not over {ext.b}")
    clv = clv or choose_cleavage(p, CART)
    Fb = fiber(p, ext.b)
    per, brute = {}, {}
    auts = automorphisms(E, e)
    for k, f in ext.rho.items():
        moved = clv.moved(f, e)
        per[k] = moved == e or bool(isomorphisms(Fb, moved, e))
        brute[k] = any(p.mor(a) == f for a in auts)
    lifted = None
    if all(clv.moved(f, e) == e for f in ext.rho.values()):
        lifted = {k: clv[(f, e)] for k, f in ext.rho.items()}
        G = ext.group
        if not all(E.compose(lifted[x], lifted[y]) == lifted[G(x, y)] for x in G.elements for y in G.elements):
            lifted = None
    # g |-> Cart_{ρ(g⁻¹)} is a homomorphism up to natural iso (pullback reverses order)
    G = ext.group
    rep = {k: transport(p, clv, ext.rho[G.inv(k)]) for k in G.elements}
    homomorphic, strict = True, True
    for x in G.elements:
        for y in G.elements:
            lhs = _compose_functors(rep[x], rep[y])
            rhs = rep[G(x, y)]
            if lhs.omap != rhs.omap or lhs.mmap != rhs.mmap:
                strict = False
                if natural_iso_between(lhs, rhs) is None:
                    homomorphic = False
    for k in G.elements:
        if not analyze_functor(rep[k], quasi_inverse=False).equivalence:
            homomorphic = False
    return LiftingReport(per, brute, lifted, rep, homomorphic, strict)


def _compose_functors(F2: Functor, F1: Functor) -> Functor:
    return Functor(F1.src, F2.dst, {x: F2.ob(F1.ob(x)) for x in F1.src.objects},
                   {m: F2.mor(F1.mor(m)) for m in F1.src.morphisms})


def aut_image(p: Functor, e) -> set:
    """p(Aut(e)) ⊆ Aut(p e): the ρ(g) admitting a lift sit exactly here."""
    return {p.mor(a) for a in automorphisms(p.src, e)}


# -- coverings ------------------------------------------------------------------

def _is_connected_groupoid(B: FinCat) -> bool:
    if any(B.inverse(m) is None for m in B.morphisms):
        return False
    b0 = B.objects[0]
    return all(B.hom(b0, b) for b in B.objects)


@dataclass
class CoveringReport:
    is_covering: bool
    deck: list                 # deck transformations as object permutations of the fiber over b
    stab: list
    normalizer: list
    weyl_order: int
    iso_verified: bool
    reason: str | None = None
    extensions: list = field(default_factory=list)

    def deck_group(self) -> FiniteGroup:
        keys = [tuple(sorted(d.items())) for d in self.deck]
        mul = {}
        for k1, d1 in zip(keys, self.deck):
            for k2, d2 in zip(keys, self.deck):
                mul[(k1, k2)] = tuple(sorted((e, d1[d2[e]]) for e in d2))
        unit = next(k for k, d in zip(keys, self.deck) if all(a == b for a, b in d.items()))
        return FiniteGroup(keys, mul, unit, "Deck")


def covering_analysis(p: Functor, b=None) -> CoveringReport:
    """Deck group of a discrete fibration over a connected groupoid against N(Stab)/Stab."""
    E, B = p.src, p.dst
    if not _is_connected_groupoid(B):
        raise PreconditionError("base is not a connected groupoid")
    b = b or B.objects[0]
    # unique lifts, everything cartesian
    for f in B.morphisms:
        for e in E.objects:
            if p.ob(e) != B.cod(f):
                continue
            cands = [m for m in E.morphisms if E.cod(m) == e and p.mor(m) == f]
            if len(cands) != 1:
                return CoveringReport(False, [], [], [], 0, False, f"arrow {f} has {len(cands)} lifts at {e}")
    if not all(is_cartesian(p, m, CART) for m in E.morphisms):
        return CoveringReport(False, [], [], [], 0, False, "non-cartesian arrow")
    Eb = [e for e in E.objects if p.ob(e) == b]
    auts = automorphisms(B, b)
    G = FiniteGroup(auts, {(x, y): B.compose(x, y) for x in auts for y in auts}, B.identity(b), "Aut(b)")

    def pull(f, e):
        (m,) = [m for m in E.morphisms if E.cod(m) == e and p.mor(m) == f]
        return E.dom(m)

    def act(g, e):
        # left action g·e = (g⁻¹)*(e)
        return pull(G.inv(g), e)

    e0 = Eb[0]
    if {act(g, e0) for g in auts} != set(Eb):
        return CoveringReport(False, [], [], [], 0, False, "fiber action is not transitive")
    stab = [g for g in auts if act(g, e0) == e0]
    norm = G.normalizer(stab)
    deck = []
    for perm in itertools.permutations(Eb):
        d = dict(zip(Eb, perm))
        if all(d[act(g, e)] == act(g, d[e]) for g in auts for e in Eb):
            deck.append(d)
    deck_full = [_extend_deck(p, d, b, pull) for d in deck]
    if any(D is None for D in deck_full):
        raise CatspecError("a fiber automorphism failed to extend to the total category")
    weyl_order = len(norm) // len(stab)
    # explicit iso N/Stab -> deck: [k] |-> (g·e0 |-> g k⁻¹·e0)
    cos = []
    for k in norm:
        c = frozenset(G(k, s) for s in stab)
        if c not in cos:
            cos.append(c)
    phi = {}
    for c in cos:
        k = next(iter(c))
        kinv = G.inv(k)
        phi[c] = {act(g, e0): act(G(g, kinv), e0) for g in auts}
    images = [tuple(sorted(v.items())) for v in phi.values()]
    deck_keys = {tuple(sorted(d.items())) for d in deck}
    bij = len(set(images)) == len(images) and set(images) == deck_keys
    hom = True
    for c1 in cos:
        for c2 in cos:
            k = G(next(iter(c1)), next(iter(c2)))
            c12 = next(c for c in cos if k in c)
            comp = {e: phi[c1][phi[c2][e]] for e in Eb}
            if comp != phi[c12]:
                hom = False
    return CoveringReport(True, deck, stab, norm, weyl_order, bij and hom, None, deck_full)


def _extend_deck(p, d, b, pull):
    """g_{b'} = h*∘g_b∘(h*)⁻¹ along a chosen h: b' -> b, assembled into a functor over the base."""
    E, B = p.src, p.dst
    omap = {}
    for bp in B.objects:
        h = B.hom(bp, b)[0]
        star = {e: pull(h, e) for e in E.objects if p.ob(e) == b}
        inv = {v: k for k, v in star.items()}
        for e in E.objects:
            if p.ob(e) == bp:
                omap[e] = star[d[inv[e]]]
    mmap = {}
    for m in E.morphisms:
        t = omap[E.cod(m)]
        (mm,) = [x for x in E.morphisms if E.cod(x) == t and p.mor(x) == p.mor(m)]
        if E.dom(mm) != omap[E.dom(m)]:
            return None
        mmap[m] = mm
    F = Functor(E, E, omap, mmap, "deck")
    return F if validate_functor(F).ok else None


# -- lifting equivariant isos along a structure ------------------------------------

@dataclass
class GrpLift:
    fhat: str
    rho2: dict
    action_ok: bool
    star_ok: bool          # f̂∘ρ''(g') = ρ(φ(g'))∘f̂
    star2_ok: bool         # p∘ρ'' = ρ'_B


def grp_lift_structure(p: Functor, G: FiniteGroup, e, rho_E: dict, G2: FiniteGroup, b2,
                       rho_B2: dict, phi: dict, f) -> GrpLift:
    """Pull a lifted action (G, e, ρ_E) back along an equivariant iso (φ, f) in Grp-B."""
    E, B = p.src, p.dst
    if B.cod(f) != p.ob(e) or B.dom(f) != b2 or B.inverse(f) is None:
        raise PreconditionError(f"{f} is not an iso {b2} -> p({e})")
    finv = B.inverse(f)
    for k in G2.elements:
        if rho_B2[k] != B.compose(finv, p.mor(rho_E[phi[k]]), f):
            raise PreconditionError(f"(φ, f) is not equivariant at {k}")
    ls = lifts(p, f, e, CART)
    if not ls:
        raise PreconditionError(f"{f} does not lift at {e}")
    fhat = sorted(ls)[0]
    fhinv = E.inverse(fhat)
    if fhinv is None:
        raise CatspecError("lift of an iso is not an iso")
    rho2 = {k: E.compose(fhinv, rho_E[phi[k]], fhat) for k in G2.elements}
    act_ok = all(E.compose(rho2[x], rho2[y]) == rho2[G2(x, y)] for x in G2.elements for y in G2.elements)
    star = all(E.compose(fhat, rho2[k]) == E.compose(rho_E[phi[k]], fhat) for k in G2.elements)
    star2 = all(p.mor(rho2[k]) == rho_B2[k] for k in G2.elements)
    return GrpLift(fhat, rho2, act_ok, star, star2)


def direct_image_check(p: Functor, X, sigma: dict) -> dict:
    """Quotient π of X by σ in E, p(π) a quotient downstairs, and whether π is cocartesian."""
    E, B = p.src, p.dst
    qE = quotient_object(ObjectEquivalence.from_action(E, X, sigma))
    if qE is None:
        return {"quotient": None}
    Q, pi = qE
    Ed = ObjectEquivalence.from_action(B, p.ob(X), {k: p.mor(s) for k, s in sigma.items()})
    return {"quotient": (Q, pi), "preserved": is_quotient_map(Ed, p.mor(pi)),
            "cocartesian": bool(is_cartesian(p, pi, COCART))}


__all__ = ["FiniteGroup", "cyclic", "is_homomorphism", "find_group_isomorphism", "Cartesian",
           "pairing_universal", "GroupObject", "is_group_object", "ElementGroup", "element_group",
           "Action", "is_action", "stabilizer_filler", "stabilizer_values", "Stabilizer",
           "represent_stabilizer", "fill_diagonal", "ObjectEquivalence", "is_quotient_map",
           "quotient_object", "is_effective", "GroupQuotient", "quotient_by_group", "QuotientGroupStructure",
           "quotient_group_structure", "ConjugateStabilizers", "conjugate_stabilizer",
           "Homogeneity", "is_homogeneous", "ExternalAction", "automorphisms", "LiftingReport",
           "action_lifting", "aut_image", "CoveringReport", "covering_analysis", "GrpLift",
           "grp_lift_structure", "direct_image_check"]
