"""Checks and searches on finite categories and functors."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import CatspecError, PreconditionError, UnknownId
from ..guard import check_size
from .category import (ComputedCategory, FinCat, Functor, NatTrans, Opposite,
                       TableCategory)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    limit: int = 100

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, axiom: str, **witness) -> None:
        if len(self.violations) < self.limit:
            self.violations.append({"axiom": axiom, **witness})

    def to_json(self):
        return {"ok": self.ok, "violations": self.violations}


def validate_category(c: FinCat, limit: int = 100) -> ValidationReport:
    check_size(c)
    rep = ValidationReport(limit=limit)
    M, O = c.morphisms, c.objects
    for x in range(len(O)):
        i = c.id_i[x]
        if c.dom_i[i] != x or c.cod_i[i] != x:
            rep.add("identity-endpoints", object=O[x], morphism=M[i])
    if not rep.ok:
        return rep

    if isinstance(c, TableCategory):
        for (g, f), h in c.table.items():
            if g not in c.mor_index or f not in c.mor_index or h not in c.mor_index:
                rep.add("unknown-id", g=g, f=f, composite=h)
            elif c.cod(f) != c.dom(g):
                rep.add("composite-on-non-composable-pair", g=g, f=f)
            elif c.dom(h) != c.dom(f) or c.cod(h) != c.cod(g):
                rep.add("composite-endpoints", g=g, f=f, composite=h)

    total = True
    for y in range(len(O)):
        F, G = c.into_i(y), c.out_i(y)
        if not len(F) or not len(G):
            continue
        try:
            C = c.comp_i(G[:, None], F[None, :])
        except CatspecError as e:
            rep.add("composite-outside-category", detail=str(e))
            return rep
        miss = np.argwhere(C < 0)
        for gi, fi in miss[:10].tolist():
            rep.add("missing-composite", g=M[G[gi]], f=M[F[fi]])
        if len(miss):
            total = False
            continue
        bad = (c.dom_i[C] != c.dom_i[F][None, :]) | (c.cod_i[C] != c.cod_i[G][:, None])
        for gi, fi in np.argwhere(bad)[:10].tolist():
            rep.add("composite-endpoints", g=M[G[gi]], f=M[F[fi]], composite=M[C[gi, fi]])
            total = False
    if not total or not rep.ok:
        return rep

    allm = np.arange(len(M))
    left = c.comp_i(c.id_i[c.cod_i], allm)
    for k in np.flatnonzero(left != allm)[:10].tolist():
        rep.add("left-unit", f=M[k])
    right = c.comp_i(allm, c.id_i[c.dom_i])
    for k in np.flatnonzero(right != allm)[:10].tolist():
        rep.add("right-unit", f=M[k])

    for g in range(len(M)):
        F = c.into_i(int(c.dom_i[g]))
        H = c.out_i(int(c.cod_i[g]))
        if not len(F) or not len(H):
            continue
        gf = c.comp_i(g, F)
        hg = c.comp_i(H, g)
        lhs = c.comp_i(H[:, None], gf[None, :])
        rhs = c.comp_i(hg[:, None], F[None, :])
        bad = np.argwhere(lhs != rhs)
        for hi, fi in bad[:5].tolist():
            rep.add("associativity", h=M[H[hi]], g=M[g], f=M[F[fi]],
                    left=M[lhs[hi, fi]], right=M[rhs[hi, fi]])
        if len(rep.violations) >= limit:
            break
    return rep


def hom_set(c: FinCat, x: str, y: str) -> set:
    return set(c.hom(x, y))


def _iso_pairs(c: FinCat, x: int, y: int):
    """Yield (f, inverse) index pairs for isos x -> y."""
    H, K = c.hom_i(x, y), c.hom_i(y, x)
    if not len(H) or not len(K):
        return []
    a = c.comp_i(K[:, None], H[None, :]) == c.id_i[x]
    b = c.comp_i(H[None, :], K[:, None]) == c.id_i[y]
    both = a & b
    out = []
    for hi in np.flatnonzero(both.any(axis=0)).tolist():
        ki = int(np.flatnonzero(both[:, hi])[0])
        out.append((int(H[hi]), int(K[ki])))
    return out


def isomorphisms(c: FinCat, x: str, y: str) -> dict:
    """All isos x -> y, mapped to their inverses."""
    M = c.morphisms
    return {M[f]: M[g] for f, g in _iso_pairs(c, c.oi(x), c.oi(y))}


def iso_classes(c: FinCat) -> dict:
    """Map each object to the least (by id) object isomorphic to it."""
    rep = {}
    for x in sorted(c.objects):
        if x in rep:
            continue
        rep[x] = x
        xi = c.oi(x)
        for y in c.objects:
            if y not in rep and _iso_pairs(c, xi, c.oi(y)):
                rep[y] = x
    return rep


def validate_functor(F: Functor, limit: int = 100) -> ValidationReport:
    check_size(F.src, F.dst)
    rep = ValidationReport(limit=limit)
    A, B = F.src, F.dst
    for x in A.objects:
        if x not in F.omap:
            rep.add("object-map-not-total", object=x)
        elif F.omap[x] not in B.obj_index:
            rep.add("object-image-unknown", object=x, image=F.omap[x])
    for f in A.morphisms:
        if f not in F.mmap:
            rep.add("morphism-map-not-total", morphism=f)
        elif F.mmap[f] not in B.mor_index:
            rep.add("morphism-image-unknown", morphism=f, image=F.mmap[f])
    if not rep.ok:
        return rep
    om, mm = F.om_i, F.mm_i
    bad = (B.dom_i[mm] != om[A.dom_i]) | (B.cod_i[mm] != om[A.cod_i])
    for k in np.flatnonzero(bad)[:10].tolist():
        rep.add("endpoints", morphism=A.morphisms[k], image=B.morphisms[mm[k]])
    if not rep.ok:
        return rep
    badid = mm[A.id_i] != B.id_i[om]
    for k in np.flatnonzero(badid)[:10].tolist():
        rep.add("identity", object=A.objects[k])
    for y in range(len(A.objects)):
        Fi, G = A.into_i(y), A.out_i(y)
        if not len(Fi) or not len(G):
            continue
        C = A.comp_i(G[:, None], Fi[None, :])
        D = B.comp_i(mm[G][:, None], mm[Fi][None, :])
        for gi, fi in np.argwhere(mm[C] != D)[:5].tolist():
            rep.add("composition", g=A.morphisms[G[gi]], f=A.morphisms[Fi[fi]])
        if len(rep.violations) >= limit:
            break
    return rep


def validate_nat(alpha: NatTrans) -> ValidationReport:
    F, G = alpha.source, alpha.target
    A, B = F.src, F.dst
    rep = ValidationReport()
    for x in A.objects:
        a = alpha.components.get(x)
        if a is None or a not in B.mor_index:
            rep.add("missing-component", object=x)
        elif B.dom(a) != F.ob(x) or B.cod(a) != G.ob(x):
            rep.add("component-endpoints", object=x, component=a)
    if not rep.ok:
        return rep
    for f in A.morphisms:
        x, y = A.dom(f), A.cod(f)
        if B.compose(G.mor(f), alpha[x]) != B.compose(alpha[y], F.mor(f)):
            rep.add("naturality", morphism=f)
    return rep


def is_natural_iso(alpha: NatTrans) -> bool:
    if not validate_nat(alpha).ok:
        return False
    B = alpha.source.dst
    return all(B.inverse(a) is not None for a in alpha.components.values())


def natural_iso_between(F: Functor, G: Functor) -> NatTrans | None:
    """Search a natural iso F ⇒ G, component by component (backtracking)."""
    A, B = F.src, F.dst
    objs = list(A.objects)
    choices = [sorted(isomorphisms(B, F.ob(x), G.ob(x))) for x in objs]
    if any(not ch for ch in choices):
        return None
    pos = {x: i for i, x in enumerate(objs)}
    arrows = [(f, pos[A.dom(f)], pos[A.cod(f)]) for f in A.morphisms]
    chosen: list = [None] * len(objs)

    def ok_upto(k):
        for f, i, j in arrows:
            if max(i, j) == k and chosen[i] is not None and chosen[j] is not None:
                if B.compose(G.mor(f), chosen[i]) != B.compose(chosen[j], F.mor(f)):
                    return False
        return True

    def go(k):
        if k == len(objs):
            return True
        for a in choices[k]:
            chosen[k] = a
            if ok_upto(k) and go(k + 1):
                return True
        chosen[k] = None
        return False

    if go(0):
        return NatTrans(F, G, dict(zip(objs, chosen)))
    return None


@dataclass
class FunctorAnalysis:
    functorial: bool
    faithful: bool
    full: bool
    essentially_surjective: bool
    witnesses: dict = field(default_factory=dict)
    quasi_inverse: Functor | None = None
    unit: NatTrans | None = None
    counit: NatTrans | None = None

    @property
    def equivalence(self) -> bool:
        return self.functorial and self.faithful and self.full and self.essentially_surjective

    def flags(self) -> dict:
        return {"functorial": self.functorial, "faithful": self.faithful, "full": self.full,
                "essentiallySurjective": self.essentially_surjective,
                "equivalence": self.equivalence}


def analyze_functor(F: Functor, quasi_inverse: bool = True) -> FunctorAnalysis:
    A, B = F.src, F.dst
    check_size(A, B)
    missing = [x for x in A.objects if x not in F.omap] + [f for f in A.morphisms if f not in F.mmap]
    if missing:
        raise PreconditionError(f"functor {F.name or '?'} is not total: missing {missing[0]!r}")
    rep = validate_functor(F)
    res = FunctorAnalysis(rep.ok, True, True, True)
    if not rep.ok:
        res.witnesses["functorial"] = rep.violations[0]
        res.faithful = res.full = res.essentially_surjective = False
        return res
    om, mm = F.om_i, F.mm_i
    nA = len(A.objects)
    for x in range(nA):
        for y in range(nA):
            H = A.hom_i(x, y)
            img = mm[H]
            uniq = np.unique(img)
            if res.faithful and len(uniq) != len(img):
                vals, counts = np.unique(img, return_counts=True)
                dup = vals[counts > 1][0]
                pair = H[img == dup][:2]
                res.faithful = False
                res.witnesses["faithful"] = {"f": A.morphisms[pair[0]], "g": A.morphisms[pair[1]],
                                             "image": B.morphisms[dup]}
            if res.full:
                target = B.hom_i(int(om[x]), int(om[y]))
                extra = np.setdiff1d(target, uniq)
                if len(extra):
                    res.full = False
                    res.witnesses["full"] = {"source": A.objects[x], "target": A.objects[y],
                                             "missed": B.morphisms[extra[0]]}
    # essential surjectivity: choose least preimage and least iso
    alpha = {}
    for d in B.objects:
        di = B.oi(d)
        for x in sorted(A.objects):
            isos = _iso_pairs(B, int(om[A.oi(x)]), di)
            if isos:
                best = min(isos, key=lambda p: B.morphisms[p[0]])
                alpha[d] = (x, best)
                break
        else:
            if res.essentially_surjective:
                res.essentially_surjective = False
                res.witnesses["essentiallySurjective"] = {"object": d}
    if quasi_inverse and res.equivalence:
        _build_quasi_inverse(F, alpha, res)
    return res


def _build_quasi_inverse(F: Functor, alpha: dict, res: FunctorAnalysis) -> None:
    A, B = F.src, F.dst
    mm = F.mm_i
    hmap = {d: alpha[d][0] for d in B.objects}
    a = {d: B.morphisms[alpha[d][1][0]] for d in B.objects}      # F(H d) -> d
    ainv = {d: B.morphisms[alpha[d][1][1]] for d in B.objects}   # d -> F(H d)

    def preimage(x, y, target):
        t = B.mi(target)
        for k in A.hom_i(A.oi(x), A.oi(y)).tolist():
            if mm[k] == t:
                return A.morphisms[k]
        raise CatspecError("quasi-inverse construction failed (functor not full)")

    hm = {}
    for g in B.morphisms:
        d, d2 = B.dom(g), B.cod(g)
        hm[g] = preimage(hmap[d], hmap[d2], B.compose(ainv[d2], g, a[d]))
    H = Functor(B, A, hmap, hm, name=f"{F.name}^-1" if F.name else "quasi-inverse")
    FH = Functor(B, B, {d: F.ob(hmap[d]) for d in B.objects}, {g: F.mor(hm[g]) for g in B.morphisms})
    counit = NatTrans(FH, _idf(B), a)
    HF = Functor(A, A, {x: hmap[F.ob(x)] for x in A.objects}, {f: hm[F.mor(f)] for f in A.morphisms})
    unit = NatTrans(_idf(A), HF, {x: preimage(x, hmap[F.ob(x)], ainv[F.ob(x)]) for x in A.objects})
    if not (validate_functor(H).ok and is_natural_iso(unit) and is_natural_iso(counit)):
        raise CatspecError("quasi-inverse failed verification")
    res.quasi_inverse, res.unit, res.counit = H, unit, counit


def _idf(c):
    return Functor(c, c, {o: o for o in c.objects}, {m: m for m in c.morphisms})


# -- comma and pullback categories ------------------------------------------

def _pair_category(objects, dom_of, cod_of, morphs, comp_key, ident_of, name):
    """Assemble a ComputedCategory from component data.

    ``morphs`` is a list of (id, key) where key identifies a morphism by its
    components and endpoints; ``comp_key(kg, kf)`` returns the key of g∘f.
    """
    ids = [m for m, _ in morphs]
    keys = [k for _, k in morphs]
    lookup = {k: i for i, k in enumerate(keys)}

    def compose(g, f):
        return lookup.get(comp_key(keys[g], keys[f]), -1)

    return ComputedCategory(objects, ids, [dom_of[m] for m in ids], [cod_of[m] for m in ids],
                            ident_of, compose, name)


def comma_category(F: Functor, G: Functor, name: str = ""):
    """Comma category F/G with its two projections.

    Objects are (a, b, phi: F a -> G b) with id ``(a|b|phi)``; morphisms are
    pairs (u, v) with G(v)∘phi = phi'∘F(u), id ``(u|v|phi|phi')``.
    """
    if F.dst is not G.dst:
        raise PreconditionError("comma category needs functors with a common codomain")
    A, Bc, C = F.src, G.src, F.dst
    objs, info = [], {}
    for a in A.objects:
        for b in Bc.objects:
            for phi in C.hom(F.ob(a), G.ob(b)):
                oid = f"({a}|{b}|{phi})"
                objs.append(oid)
                info[oid] = (a, b, phi)
    morphs, dom_of, cod_of, ident = [], {}, {}, {}
    for s in objs:
        a, b, phi = info[s]
        for t in objs:
            a2, b2, phi2 = info[t]
            for u in A.hom(a, a2):
                Fu = F.mor(u)
                lhs_cache = C.compose(phi2, Fu)
                for v in Bc.hom(b, b2):
                    if C.compose(G.mor(v), phi) == lhs_cache:
                        mid = f"({u}|{v}|{phi}|{phi2})"
                        morphs.append((mid, (u, v, s, t)))
                        dom_of[mid], cod_of[mid] = s, t
                        if s == t and u == A.identity(a) and v == Bc.identity(b):
                            ident[s] = mid

    def comp_key(kg, kf):
        return (A.compose(kg[0], kf[0]), Bc.compose(kg[1], kf[1]), kf[2], kg[3])

    cat = _pair_category(objs, dom_of, cod_of, morphs, comp_key, ident,
                         name or f"({F.name or 'F'}/{G.name or 'G'})")
    P = Functor(cat, A, {o: info[o][0] for o in objs}, {m: k[0] for m, k in morphs}, "pr1")
    Q = Functor(cat, Bc, {o: info[o][1] for o in objs}, {m: k[1] for m, k in morphs}, "pr2")
    cat.info = info
    cat.mor_info = dict(morphs)
    return cat, P, Q


def pullback_category(F: Functor, p: Functor, name: str = ""):
    """Strict pullback of p: E -> B along F: A -> B, with both projections.

    Objects ``(a|e)`` with F a = p e; morphisms ``(u|v)`` with F u = p v.
    """
    if F.dst is not p.dst:
        raise PreconditionError("pullback needs functors into the same base")
    A, E = F.src, p.src
    objs, info = [], {}
    for a in A.objects:
        for e in E.objects:
            if F.ob(a) == p.ob(e):
                oid = f"({a}|{e})"
                objs.append(oid)
                info[oid] = (a, e)
    by_obj = {(a, e): o for o, (a, e) in info.items()}
    morphs, dom_of, cod_of, ident = [], {}, {}, {}
    pm_by_img: dict = {}
    for v in E.morphisms:
        pm_by_img.setdefault(p.mor(v), []).append(v)
    for u in A.morphisms:
        for v in pm_by_img.get(F.mor(u), ()):
            s = by_obj.get((A.dom(u), E.dom(v)))
            t = by_obj.get((A.cod(u), E.cod(v)))
            mid = f"({u}|{v})"
            morphs.append((mid, (u, v)))
            dom_of[mid], cod_of[mid] = s, t
            if A.is_identity(u) and E.is_identity(v):
                ident[s] = mid

    def comp_key(kg, kf):
        return (A.compose(kg[0], kf[0]), E.compose(kg[1], kf[1]))

    cat = _pair_category(objs, dom_of, cod_of, morphs, comp_key, ident,
                         name or f"pullback({F.name},{p.name})")
    first = Functor(cat, A, {o: info[o][0] for o in objs}, {m: k[0] for m, k in morphs}, "pr1")
    second = Functor(cat, E, {o: info[o][1] for o in objs}, {m: k[1] for m, k in morphs}, "pr2")
    return cat, first, second


# -- limits -----------------------------------------------------------------

@dataclass
class Diagram:
    """Finite diagram: nodes are objects of the ambient category, edges are morphisms."""
    nodes: list
    edges: list  # (source node index, target node index, morphism)


@dataclass
class LimitWitness:
    kind: str
    apex: str
    legs: tuple
    boundary: object = None

    def to_json(self):
        return {"kind": self.kind, "apex": self.apex, "legs": list(self.legs)}


_DUAL = {"initial": "terminal", "coproduct": "product", "pushout": "pullback",
         "coequalizer": "equalizer", "colimit": "limit"}


def _diagram_for(c: FinCat, kind: str, boundary) -> Diagram:
    if kind == "terminal":
        return Diagram([], [])
    if kind == "product":
        x, y = boundary
        c.oi(x), c.oi(y)
        return Diagram([x, y], [])
    if kind == "pullback":
        f, g = boundary
        if c.cod(f) != c.cod(g):
            raise PreconditionError("pullback boundary must be a cospan")
        return Diagram([c.dom(f), c.dom(g), c.cod(f)], [(0, 2, f), (1, 2, g)])
    if kind == "equalizer":
        f, g = boundary
        if (c.dom(f), c.cod(f)) != (c.dom(g), c.cod(g)):
            raise PreconditionError("equalizer boundary must be a parallel pair")
        return Diagram([c.dom(f), c.cod(f)], [(0, 1, f), (0, 1, g)])
    if kind == "limit":
        d = boundary
        for n in d.nodes:
            c.oi(n)
        for i, j, m in d.edges:
            if c.dom(m) != d.nodes[i] or c.cod(m) != d.nodes[j]:
                raise PreconditionError(f"diagram edge {m} does not match its nodes")
        return d
    raise UnknownId(f"unknown limit kind {kind!r}")


def _cones(c: FinCat, apex: int, d: Diagram) -> list:
    k = len(d.nodes)
    homs = [c.hom_i(apex, c.oi(n)).tolist() for n in d.nodes]
    edges = [(i, j, c.mi(m)) for i, j, m in d.edges]
    checks = [[] for _ in range(k)]
    for i, j, m in edges:
        checks[max(i, j)].append((i, j, m))
    out: list = []
    legs = [0] * k

    def go(n):
        if n == k:
            out.append(tuple(legs))
            return
        for h in homs[n]:
            legs[n] = h
            if all(c.compose_i(m, legs[i]) == legs[j] for i, j, m in checks[n]):
                go(n + 1)

    go(0)
    return out


def find_limits(c: FinCat, kind: str, boundary=None) -> list:
    """All (co)limit cones of the given kind, verified against every competitor."""
    check_size(c)
    if kind in _DUAL:
        dual = _DUAL[kind]
        op = Opposite(c)
        if dual == "limit":
            d = boundary
            boundary = Diagram(d.nodes, [(j, i, m) for i, j, m in d.edges])
        found = find_limits(op, dual, boundary)
        return [LimitWitness(kind, w.apex, w.legs, boundary) for w in found]
    d = _diagram_for(c, kind, boundary)
    nO = len(c.objects)
    cones = [_cones(c, a, d) for a in range(nO)]
    out = []
    for L in range(nO):
        if any(len(c.hom_i(a, L)) != len(cones[a]) for a in range(nO)):
            continue
        for cone in cones[L]:
            lam = np.array(cone, dtype=np.int64)
            good = True
            for a in range(nO):
                U = c.hom_i(a, L)
                if len(U) <= 1 or not len(lam):
                    continue
                comps = c.comp_i(lam[:, None], U[None, :])
                if len(np.unique(comps, axis=1)[0]) != len(U):
                    good = False
                    break
            if good:
                out.append(LimitWitness(kind, c.objects[L],
                                        tuple(c.morphisms[i] for i in cone), boundary))
    return out


def mediating(c: FinCat, w: LimitWitness, apex: str, legs: Sequence[str]) -> str:
    """The unique morphism from a competitor cone into a limit cone."""
    a, L = c.oi(apex), c.oi(w.apex)
    want = [c.mi(x) for x in legs]
    lam = [c.mi(x) for x in w.legs]
    hits = [u for u in c.hom_i(a, L).tolist()
            if all(c.compose_i(l, u) == t for l, t in zip(lam, want))]
    if len(hits) != 1:
        raise CatspecError(f"{len(hits)} mediating arrows found")
    return c.morphisms[hits[0]]


# -- isomorphism of categories -----------------------------------------------

def find_isomorphism(C: FinCat, D: FinCat) -> Functor | None:
    """Search an isomorphism of categories C -> D (small inputs)."""
    if len(C.objects) != len(D.objects) or len(C.morphisms) != len(D.morphisms):
        return None
    nC = len(C.objects)

    def sizes(c):
        return np.array([[len(c.hom_i(x, y)) for y in range(nC)] for x in range(nC)])

    SC, SD = sizes(C), sizes(D)
    sigC = [(SC[x, x], tuple(sorted(SC[x])), tuple(sorted(SC[:, x]))) for x in range(nC)]
    sigD = [(SD[x, x], tuple(sorted(SD[x])), tuple(sorted(SD[:, x]))) for x in range(nC)]
    triples_by = {}
    for g, f in C.composable_pairs():
        h = C.compose_i(g, f)
        for m in (g, f, h):
            triples_by.setdefault(m, []).append((g, f, h))

    omap = [-1] * nC
    used_o = set()

    def assign_objects(k):
        if k == nC:
            r = assign_morphisms()
            return r
        for y in range(nC):
            if y in used_o or sigC[k] != sigD[y]:
                continue
            if any(SC[k, j] != SD[y, omap[j]] or SC[j, k] != SD[omap[j], y] for j in range(k)):
                continue
            omap[k] = y
            used_o.add(y)
            r = assign_objects(k + 1)
            if r is not None:
                return r
            used_o.discard(y)
        omap[k] = -1
        return None

    def assign_morphisms():
        mmap = {}
        for x in range(nC):
            mmap[int(C.id_i[x])] = int(D.id_i[omap[x]])
        order = [m for m in range(len(C.morphisms)) if m not in mmap]
        used = set(mmap.values())

        def consistent(m):
            for g, f, h in triples_by.get(m, ()):
                if g in mmap and f in mmap and h in mmap:
                    if D.compose_i(mmap[g], mmap[f]) != mmap[h]:
                        return False
            return True

        if not all(consistent(m) for m in list(mmap)):
            return None

        def go(k):
            if k == len(order):
                return True
            m = order[k]
            for t in D.hom_i(omap[C.dom_i[m]], omap[C.cod_i[m]]).tolist():
                if t in used:
                    continue
                mmap[m] = t
                used.add(t)
                if consistent(m) and go(k + 1):
                    return True
                used.discard(t)
                del mmap[m]
            return False

        if go(0):
            return Functor(C, D, {C.objects[x]: D.objects[omap[x]] for x in range(nC)},
                           {C.morphisms[m]: D.morphisms[t] for m, t in mmap.items()}, "iso")
        return None

    return assign_objects(0)
