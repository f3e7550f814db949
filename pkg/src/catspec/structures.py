"""Structures on objects of a category and almost-structures.

A structure is a faithful functor p: E -> B that lifts base isos and has
skeletal fibers.  Almost-structures are subfunctors of B(p(-), B) and form
their own category over B, enumerated here exhaustively.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .fibrations import CART, cartesian_mask, fiber, is_cartesian, pullback_fibration
from .fincat import FinCat, Functor, TableCategory
from .guard import check_size
from .presheaf import SetPresheaf


@dataclass
class StructureCheck:
    ok: bool
    failed: str | None = None
    witness: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def _faithful_witness(p: Functor):
    E = p.src
    key = np.stack([E.dom_i, E.cod_i, p.mm_i], axis=1)
    _, first, counts = np.unique(key, axis=0, return_index=True, return_counts=True)
    if (counts > 1).any():
        k = int(np.flatnonzero(counts > 1)[0])
        row = key[first[k]]
        clash = [E.morphisms[i] for i in np.flatnonzero((key == row).all(axis=1)).tolist()]
        return {"morphisms": clash[:2], "image": p.dst.morphisms[int(row[2])]}
    return None


def is_structure(p: Functor) -> StructureCheck:
    """Faithful, lifts isos B' ≅ p(E) to isos into E, skeletal fibers."""
    check_size(p.src, p.dst, what="is_structure")
    E, B = p.src, p.dst
    w = _faithful_witness(p)
    if w is not None:
        return StructureCheck(False, "faithful", w)
    base_isos = [f for f in B.morphisms if B.inverse(f) is not None]
    for e in E.objects:
        be = p.ob(e)
        for f in base_isos:
            if B.cod(f) != be:
                continue
            if not any(p.mor(k) == f and E.inverse(k) is not None for k in (E.morphisms[i] for i in E.into_i(E.oi(e)).tolist())):
                return StructureCheck(False, "iso-lifting", {"iso": f, "object": e})
    for b in B.objects:
        Fb = fiber(p, b)
        for k in Fb.morphisms:
            if Fb.dom(k) != Fb.cod(k) and Fb.inverse(k) is not None:
                return StructureCheck(False, "skeletal-fibers",
                                      {"base": b, "objects": [Fb.dom(k), Fb.cod(k)], "iso": k})
    return StructureCheck(True)


def fibers_are_posets(p: Functor) -> StructureCheck:
    """Every fiber is thin and antisymmetric; its only vertical cartesian arrows are identities."""
    mask = cartesian_mask(p, CART)
    E = p.src
    for b in p.dst.objects:
        Fb = fiber(p, b)
        for x in Fb.objects:
            for y in Fb.objects:
                h = Fb.hom(x, y)
                if len(h) > 1:
                    return StructureCheck(False, "thin", {"base": b, "hom": list(h)})
                if x != y and h and Fb.hom(y, x):
                    return StructureCheck(False, "antisymmetric", {"base": b, "objects": [x, y]})
        for k in Fb.morphisms:
            if mask[E.mi(k)] and not E.is_identity(k):
                return StructureCheck(False, "cartesian-vertical", {"base": b, "morphism": k})
    return StructureCheck(True)


def _require_structure(p: Functor):
    cache = p.__dict__.setdefault("_structure_check", is_structure(p))
    if not cache.ok:
        raise PreconditionError(f"not a structure: {cache.failed} fails ({cache.witness})")


def identity_criteria(p: Functor, e1: str, e2: str) -> dict:
    """The five equality criteria a)-e) for two objects of one fiber."""
    _require_structure(p)
    E = p.src
    b = p.ob(e1)
    if p.ob(e2) != b:
        raise PreconditionError(f"{e1} and {e2} lie over different base objects")
    Fb = fiber(p, b)

    def img_into(x, y):
        return {p.mor(k) for k in E.hom(x, y)}

    return {
        "a": e1 == e2,
        "b": all(img_into(x, e1) == img_into(x, e2) for x in E.objects),
        "c": all(img_into(e1, x) == img_into(e2, x) for x in E.objects),
        "d": all((not Fb.hom(x, e1)) == (not Fb.hom(x, e2)) for x in Fb.objects),
        "e": all((not Fb.hom(e1, x)) == (not Fb.hom(e2, x)) for x in Fb.objects),
    }


def structure_presheaf(p: Functor, e: str):
    """X |-> p(E(X, e)) with restriction by precomposition, and the subfunctor flag."""
    _require_structure(p)
    E, B = p.src, p.dst
    values = {x: tuple(sorted({p.mor(k) for k in E.hom(x, e)})) for x in E.objects}
    restrict, sub = {}, True
    for v in E.morphisms:
        pv = p.mor(v)
        r = {}
        for g in values[E.cod(v)]:
            h = B.compose(g, pv)
            r[g] = h
            if h not in values[E.dom(v)]:
                sub = False
        restrict[v] = r
    return SetPresheaf(E, values, restrict, f"p(E(-,{e}))"), sub


def presheaf_embedding_injective(p: Functor) -> bool:
    """Distinct objects of a fiber give distinct presheaves."""
    for b in p.dst.objects:
        seen = {}
        for e in fiber(p, b).objects:
            P, _ = structure_presheaf(p, e)
            key = tuple(sorted((x, v) for x, v in P.values.items()))
            if key in seen:
                return False
            seen[key] = e
    return True


class AlmostStructure:
    """A subfunctor F of B(p(-), B): for each total object X a set of base arrows p(X) -> B."""

    def __init__(self, p: Functor, B: str, members: dict):
        self.p = p
        self.B = B
        self.members = {x: frozenset(members.get(x, ())) for x in p.src.objects}

    def key(self):
        return (self.B, tuple(sorted((x, tuple(sorted(v))) for x, v in self.members.items())))

    def __eq__(self, other):
        return isinstance(other, AlmostStructure) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def validate(self):
        E, Bc = self.p.src, self.p.dst
        for x, gs in self.members.items():
            for g in gs:
                if Bc.dom(g) != self.p.ob(x) or Bc.cod(g) != self.B:
                    return StructureCheck(False, "typing", {"object": x, "arrow": g})
        for v in E.morphisms:
            pv = self.p.mor(v)
            for g in self.members[E.cod(v)]:
                if Bc.compose(g, pv) not in self.members[E.dom(v)]:
                    return StructureCheck(False, "subfunctor", {"morphism": v, "arrow": g})
        return StructureCheck(True)


def full_almost(p: Functor, B: str) -> AlmostStructure:
    return AlmostStructure(p, B, {x: p.dst.hom(p.ob(x), B) for x in p.src.objects})


def _elements(p: Functor, B: str):
    return [(x, g) for x in p.src.objects for g in p.dst.hom(p.ob(x), B)]


def all_almost_structures(p: Functor, B: str) -> list:
    """Every subfunctor of B(p(-), B), by closing down-sets of the restriction preorder."""
    E, Bc = p.src, p.dst
    els = _elements(p, B)
    index = {e: i for i, e in enumerate(els)}
    below = [set() for _ in els]
    for v in E.morphisms:
        pv = p.mor(v)
        for g in Bc.hom(p.ob(E.cod(v)), B):
            below[index[(E.cod(v), g)]].add(index[(E.dom(v), Bc.compose(g, pv))])
    # transitive closure of "restricts to"
    for i in range(len(els)):
        stack, seen = list(below[i]), set(below[i])
        while stack:
            j = stack.pop()
            for k in below[j]:
                if k not in seen:
                    seen.add(k)
                    stack.append(k)
        below[i] = seen
    out = set()
    frontier = [frozenset()]
    out.add(frozenset())
    while frontier:
        cur = frontier.pop()
        for i in range(len(els)):
            if i not in cur:
                nxt = cur | {i} | below[i]
                nxt = frozenset(nxt)
                if nxt not in out:
                    out.add(nxt)
                    frontier.append(nxt)
    result = []
    for s in sorted(out, key=lambda s: (len(s), sorted(s))):
        mem = {}
        for i in s:
            x, g = els[i]
            mem.setdefault(x, set()).add(g)
        result.append(AlmostStructure(p, B, mem))
    return result


def almost_inverse_image(A: AlmostStructure, f: str) -> AlmostStructure:
    """f*F: g is a member at X iff f∘g is a member of F at X."""
    Bc = A.p.dst
    if Bc.cod(f) != A.B:
        raise PreconditionError(f"{f} does not end at {A.B}")
    b2 = Bc.dom(f)
    mem = {x: {g for g in Bc.hom(A.p.ob(x), b2) if Bc.compose(f, g) in A.members[x]}
           for x in A.p.src.objects}
    return AlmostStructure(A.p, b2, mem)


class AlmostCategory:
    """Category of almost-structures (or costructures) over B with its projection."""

    def __init__(self, cat: FinCat, proj: Functor, objects: dict):
        self.cat = cat
        self.proj = proj
        self.objects = objects
        self.ids = {v: k for k, v in objects.items()}

    def object_of(self, A) -> str:
        return self.ids[A]


def almost_structure_category(p: Functor, co: bool = False) -> AlmostCategory:
    """Objects (F, B); arrows f: B -> B' such that f∘- maps F into F'.

    With co=True, objects are subfunctors of B(B, p(-)) closed under
    postcomposition and f: (F', B) -> (F'_1, B_1) is an arrow when g∘f is
    in F' for every g in F'_1.
    """
    check_size(p.src, p.dst, what="almost_structure_category")
    Bc = p.dst
    objs = {}
    for b in Bc.objects:
        alls = all_almost_costructures(p, b) if co else all_almost_structures(p, b)
        for k, A in enumerate(alls):
            objs[f"{b}#{k}"] = A
    names = list(objs)
    arrows, ident, info = {}, {}, {}
    for s in names:
        A = objs[s]
        for t in names:
            A2 = objs[t]
            for f in Bc.hom(A.B, A2.B):
                if co:
                    ok = all(Bc.compose(g, f) in A.members[x] for x, gs in A2.members.items() for g in gs)
                else:
                    ok = all(Bc.compose(f, g) in A2.members[x] for x, gs in A.members.items() for g in gs)
                if ok:
                    m = f"({f}|{s}|{t})"
                    arrows[m] = (s, t)
                    info[m] = f
                    if s == t and Bc.is_identity(f):
                        ident[s] = m
    table = {}
    outs = {}
    for m, (s, t) in arrows.items():
        outs.setdefault(s, []).append(m)
    for f, (s, t) in arrows.items():
        for g in outs.get(t, []):
            table[(g, f)] = f"({Bc.compose(info[g], info[f])}|{s}|{arrows[g][1]})"
    cat = TableCategory(names, arrows, ident, table, "AE" if not co else "A'E")
    proj = Functor(cat, Bc, {o: objs[o].B for o in names}, info, "q")
    return AlmostCategory(cat, proj, objs)


def all_almost_costructures(p: Functor, B: str) -> list:
    """Every subfunctor of B(B, p(-)) (closed under postcomposition with p(v))."""
    E, Bc = p.src, p.dst
    els = [(x, g) for x in E.objects for g in Bc.hom(B, p.ob(x))]
    index = {e: i for i, e in enumerate(els)}
    up = [set() for _ in els]
    for v in E.morphisms:
        pv = p.mor(v)
        for g in Bc.hom(B, p.ob(E.dom(v))):
            up[index[(E.dom(v), g)]].add(index[(E.cod(v), Bc.compose(pv, g))])
    closed = set()
    frontier = [frozenset()]
    closed.add(frozenset())
    while frontier:
        cur = frontier.pop()
        for i in range(len(els)):
            if i in cur:
                continue
            nxt, stack = set(cur) | {i}, [i]
            while stack:
                j = stack.pop()
                for k in up[j]:
                    if k not in nxt:
                        nxt.add(k)
                        stack.append(k)
            nxt = frozenset(nxt)
            if nxt not in closed:
                closed.add(nxt)
                frontier.append(nxt)
    result = []
    for s in sorted(closed, key=lambda s: (len(s), sorted(s))):
        mem = {}
        for i in s:
            x, g = els[i]
            mem.setdefault(x, set()).add(g)
        result.append(AlmostStructure(p, B, mem))
    return result


def inverse_image_is_cartesian(AC: AlmostCategory, A: AlmostStructure, f: str):
    """Is (f∘-, f): (f*F, dom f) -> (F, B) cartesian in the almost-structure category?"""
    pulled = almost_inverse_image(A, f)
    s, t = AC.object_of(pulled), AC.object_of(A)
    m = f"({f}|{s}|{t})"
    if m not in AC.cat.mor_index:
        return pulled, None
    return pulled, is_cartesian(AC.proj, m, CART)


def structure_embedding(p: Functor, AC: AlmostCategory) -> Functor:
    """E -> AE: E |-> p(E(-, E)), v |-> (p(v)∘-, p(v))."""
    omap = {}
    for e in p.src.objects:
        P, _ = structure_presheaf(p, e)
        A = AlmostStructure(p, p.ob(e), {x: set(v) for x, v in P.values.items()})
        omap[e] = AC.object_of(A)
    mmap = {v: f"({p.mor(v)}|{omap[p.src.dom(v)]}|{omap[p.src.cod(v)]})" for v in p.src.morphisms}
    return Functor(p.src, AC.cat, omap, mmap, "i_p")


def intersection_structure(p1: Functor, p: Functor):
    """Pullback of two structures over one base, with its diagonal projection."""
    cat, p_prime, Fbar = pullback_fibration(p1, p)
    diag = Functor(cat, p.dst, {o: p.ob(Fbar.ob(o)) for o in cat.objects},
                   {m: p.mor(Fbar.mor(m)) for m in cat.morphisms}, "pi")
    return cat, diag


__all__ = ["StructureCheck", "is_structure", "fibers_are_posets", "identity_criteria",
           "structure_presheaf", "presheaf_embedding_injective", "AlmostStructure", "full_almost",
           "all_almost_structures", "all_almost_costructures", "almost_inverse_image",
           "AlmostCategory", "almost_structure_category", "inverse_image_is_cartesian",
           "structure_embedding", "intersection_structure"]
