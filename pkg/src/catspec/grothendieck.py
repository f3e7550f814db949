"""Pseudofunctors, the Grothendieck construction and the round trip back.

Coherence isomorphisms are stored in the direction the total-category
composite uses them.

Contravariant F (F(f): F(B') -> F(B) for f: B -> B'):
    comp_iso[(g, f)][e]  : F(f)(F(g)(e)) -> F(g∘f)(e)      for e in F(cod g)
    id_iso[B][e]         : e -> F(1_B)(e)

Covariant F (F(f): F(B) -> F(B')):
    comp_iso[(g, f)][e]  : F(g∘f)(e) -> F(g)(F(f)(e))      for e in F(dom f)
    id_iso[B][e]         : F(1_B)(e) -> e
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import PreconditionError
from .fibrations import CART, COCART, Cleavage, cartesian_mask, fiber, transport, unique_filler
from .fincat import FinCat, Functor, analyze_functor, validate_functor
from .fincat.ops import FunctorAnalysis, ValidationReport, _pair_category, find_isomorphism

CONTRA, CO = "contravariant", "covariant"


class Pseudofunctor:
    def __init__(self, base: FinCat, variance: str, values: dict, actions: dict,
                 comp_iso: dict | None = None, id_iso: dict | None = None, name: str = ""):
        if variance not in (CONTRA, CO):
            raise PreconditionError(f"unknown variance {variance!r}")
        self.base = base
        self.variance = variance
        self.values = dict(values)
        self.actions = dict(actions)
        self.name = name
        if comp_iso is None or id_iso is None:
            comp_iso, id_iso = self._identity_coherence()
        self.comp_iso = comp_iso
        self.id_iso = id_iso

    def _identity_coherence(self):
        B = self.base
        comp, ids = {}, {}
        for b in B.objects:
            V = self.values[b]
            ids[b] = {e: V.identity(e) for e in V.objects}
        for g, f in self.composable_pairs():
            V = self.values[self.comp_domain(g, f)]
            comp[(g, f)] = {e: self._target_value(g, f).identity(self._image(g, f, e))
                            for e in V.objects}
        return comp, ids

    def _image(self, g, f, e):
        return self.act(self.gf(g, f), e)

    def _target_value(self, g, f):
        B = self.base
        return self.values[B.dom(f)] if self.variance == CONTRA else self.values[B.cod(g)]

    def gf(self, g, f):
        return self.base.compose(g, f)

    def comp_domain(self, g, f):
        """Base object whose value indexes the components of comp_iso[(g, f)]."""
        return self.base.cod(g) if self.variance == CONTRA else self.base.dom(f)

    def composable_pairs(self):
        B = self.base
        for gi, fi in B.composable_pairs():
            yield B.morphisms[gi], B.morphisms[fi]

    def act(self, f, e):
        return self.actions[f].ob(e)

    def actm(self, f, h):
        return self.actions[f].mor(h)

    def __repr__(self):
        return f"<Pseudofunctor {self.name or '?'} ({self.variance}) on {self.base.name}>"


def validate_pseudofunctor(F: Pseudofunctor) -> ValidationReport:
    rep = ValidationReport()
    B = F.base
    contra = F.variance == CONTRA
    for b in B.objects:
        if b not in F.values:
            rep.add("missing-value", object=b)
    for f in B.morphisms:
        a = F.actions.get(f)
        if a is None:
            rep.add("missing-action", morphism=f)
            continue
        src, dst = (B.cod(f), B.dom(f)) if contra else (B.dom(f), B.cod(f))
        if a.src is not F.values.get(src) or a.dst is not F.values.get(dst):
            rep.add("action-endpoints", morphism=f)
            continue
        r = validate_functor(a)
        if not r.ok:
            rep.add("action-not-functor", morphism=f, detail=r.violations[0])
    if not rep.ok:
        return rep

    def check_iso(V, m, want_dom, want_cod, **where):
        if m is None or m not in V.mor_index:
            rep.add("missing-coherence", **where)
            return False
        if V.dom(m) != want_dom or V.cod(m) != want_cod:
            rep.add("coherence-endpoints", component=m, **where)
            return False
        if V.inverse(m) is None:
            rep.add("coherence-not-iso", component=m, **where)
            return False
        return True

    for b in B.objects:
        V = F.values[b]
        one = B.identity(b)
        for e in V.objects:
            m = F.id_iso.get(b, {}).get(e)
            d, c = (e, F.act(one, e)) if contra else (F.act(one, e), e)
            check_iso(V, m, d, c, kind="unit", object=b, element=e)
        for v in V.morphisms:
            e1, e2 = V.dom(v), V.cod(v)
            i1, i2 = F.id_iso.get(b, {}).get(e1), F.id_iso.get(b, {}).get(e2)
            if i1 is None or i2 is None:
                continue
            Fv = F.actm(one, v)
            ok = (V.compose(Fv, i1) == V.compose(i2, v)) if contra else \
                 (V.compose(v, i1) == V.compose(i2, Fv))
            if not ok:
                rep.add("unit-naturality", object=b, morphism=v)
    for g, f in F.composable_pairs():
        gf = F.gf(g, f)
        Dv = F.values[F.comp_domain(g, f)]
        T = F._target_value(g, f)
        comps = F.comp_iso.get((g, f), {})
        for e in Dv.objects:
            if contra:
                d, c = F.act(f, F.act(g, e)), F.act(gf, e)
            else:
                d, c = F.act(gf, e), F.act(g, F.act(f, e))
            check_iso(T, comps.get(e), d, c, kind="composition", g=g, f=f, element=e)
        if not rep.ok:
            continue
        for v in Dv.morphisms:
            e1, e2 = Dv.dom(v), Dv.cod(v)
            if contra:
                lhs = T.compose(F.actm(gf, v), comps[e1])
                rhs = T.compose(comps[e2], F.actm(f, F.actm(g, v)))
            else:
                lhs = T.compose(F.actm(g, F.actm(f, v)), comps[e1])
                rhs = T.compose(comps[e2], F.actm(gf, v))
            if lhs != rhs:
                rep.add("composition-naturality", g=g, f=f, morphism=v)
    if not rep.ok:
        return rep
    _check_coherence_laws(F, rep)
    return rep


def _check_coherence_laws(F: Pseudofunctor, rep: ValidationReport):
    B = F.base
    contra = F.variance == CONTRA
    phi = F.comp_iso
    for g, f in F.composable_pairs():
        for h in B.morphisms:
            if B.dom(h) != B.cod(g):
                continue
            hg, gf = B.compose(h, g), B.compose(g, f)
            if contra:
                V = F.values[B.dom(f)]
                for e in F.values[B.cod(h)].objects:
                    p1 = V.compose(phi[(h, gf)][e], phi[(g, f)][F.act(h, e)])
                    p2 = V.compose(phi[(hg, f)][e], F.actm(f, phi[(h, g)][e]))
                    if p1 != p2:
                        rep.add("associativity-coherence", h=h, g=g, f=f, element=e)
            else:
                V = F.values[B.cod(h)]
                for e in F.values[B.dom(f)].objects:
                    p1 = V.compose(F.actm(h, phi[(g, f)][e]), phi[(h, gf)][e])
                    p2 = V.compose(phi[(h, g)][F.act(f, e)], phi[(hg, f)][e])
                    if p1 != p2:
                        rep.add("associativity-coherence", h=h, g=g, f=f, element=e)
    for f in B.morphisms:
        b, b2 = B.dom(f), B.cod(f)
        one, one2 = B.identity(b), B.identity(b2)
        if contra:
            V = F.values[b]
            for e in F.values[b2].objects:
                fe = F.act(f, e)
                if V.compose(phi[(f, one)][e], F.id_iso[b][fe]) != V.identity(fe):
                    rep.add("right-unit-coherence", f=f, element=e)
                if V.compose(phi[(one2, f)][e], F.actm(f, F.id_iso[b2][e])) != V.identity(fe):
                    rep.add("left-unit-coherence", f=f, element=e)
        else:
            V = F.values[b2]
            for e in F.values[b].objects:
                fe = F.act(f, e)
                if V.compose(F.actm(f, F.id_iso[b][e]), phi[(f, one)][e]) != V.identity(fe):
                    rep.add("right-unit-coherence", f=f, element=e)
                if V.compose(F.id_iso[b2][fe], phi[(one2, f)][e]) != V.identity(fe):
                    rep.add("left-unit-coherence", f=f, element=e)


def grothendieck(F: Pseudofunctor, check: bool = True):
    """Total category of F with its projection to the base.

    Objects ``(E|B)``.  Contravariant morphisms ``(h|f|E')`` with
    h: E -> F(f)(E') in F(B); covariant morphisms ``(h|f|E)`` with
    h: F(f)(E) -> E' in F(B').
    """
    if check:
        rep = validate_pseudofunctor(F)
        if not rep.ok:
            raise PreconditionError(f"pseudofunctor fails validation: {rep.violations[0]}")
    B = F.base
    contra = F.variance == CONTRA
    objs, ob_info = [], {}
    for b in B.objects:
        for e in F.values[b].objects:
            o = f"({e}|{b})"
            objs.append(o)
            ob_info[o] = (e, b)
    morphs, dom_of, cod_of, ident = [], {}, {}, {}
    for f in B.morphisms:
        b, b2 = B.dom(f), B.cod(f)
        V, V2 = F.values[b], F.values[b2]
        for e in V.objects:
            for e2 in V2.objects:
                if contra:
                    hs = V.hom(e, F.act(f, e2))
                else:
                    hs = V2.hom(F.act(f, e), e2)
                for h in hs:
                    mid = f"({h}|{f}|{e2 if contra else e})"
                    s, t = f"({e}|{b})", f"({e2}|{b2})"
                    morphs.append((mid, (h, f, s, t)))
                    dom_of[mid], cod_of[mid] = s, t
    for o, (e, b) in ob_info.items():
        one = B.identity(b)
        h = F.id_iso[b][e]
        ident[o] = f"({h}|{one}|{e})"

    def comp_key(kg, kf):
        v, g, s2, t2 = kg
        u, f, s1, t1 = kf
        gf = B.compose(g, f)
        if contra:
            e2 = ob_info[t2][0]
            V = F.values[B.dom(f)]
            w = V.compose(F.comp_iso[(g, f)][e2], F.actm(f, v), u)
        else:
            e = ob_info[s1][0]
            V = F.values[B.cod(g)]
            w = V.compose(v, F.actm(g, u), F.comp_iso[(g, f)][e])
        return (w, gf, s1, t2)

    total = _pair_category(objs, dom_of, cod_of, morphs, comp_key, ident,
                           f"Groth({F.name or 'F'})")
    p = Functor(total, B, {o: ob_info[o][1] for o in objs}, {m: k[1] for m, k in morphs},
                f"p_{F.name or 'F'}")
    total.ob_info = ob_info
    total.mor_info = {m: k for m, k in morphs}
    return total, p


def choose_cleavage(p: Functor, direction: str = CART, mask=None) -> Cleavage:
    """Lexicographically least (co)cartesian lift per (arrow, anchor); identities preferred."""
    E, B = p.src, p.dst
    if mask is None:
        mask = cartesian_mask(p, direction)
    best: dict = {}
    pm = p.mm_i
    ends = E.cod_i if direction == CART else E.dom_i
    for k in sorted(range(len(E.morphisms)), key=lambda k: E.morphisms[k]):
        if mask[k]:
            key = (B.morphisms[pm[k]], E.objects[ends[k]])
            best.setdefault(key, E.morphisms[k])
    for x in E.objects:
        key = (B.identity(p.ob(x)), x)
        best[key] = E.identity(x)
    for f in B.morphisms:
        end = B.cod(f) if direction == CART else B.dom(f)
        for x in E.objects:
            if p.ob(x) == end and (f, x) not in best:
                raise PreconditionError(f"no {'cartesian' if direction == CART else 'cocartesian'} "
                                        f"lift of {f} at {x}")
    return Cleavage(p, direction, best)


def to_pseudofunctor(p: Functor, clv: Cleavage) -> Pseudofunctor:
    E, B = p.src, p.dst
    contra = clv.direction == CART
    values = {b: fiber(p, b) for b in B.objects}
    actions = {f: transport(p, clv, f) for f in B.morphisms}
    comp, ids = {}, {}
    for b in B.objects:
        one = B.identity(b)
        ids[b] = {}
        for e in values[b].objects:
            lift = clv[(one, e)]
            if contra:
                ids[b][e] = unique_filler(p, lift, E.identity(e), one, CART)
            else:
                ids[b][e] = unique_filler(p, lift, E.identity(e), one, COCART)
    for gi, fi in B.composable_pairs():
        g, f = B.morphisms[gi], B.morphisms[fi]
        gf = B.compose(g, f)
        if contra:
            idb = B.identity(B.dom(f))
            comp[(g, f)] = {}
            for e in values[B.cod(g)].objects:
                ge = clv.moved(g, e)
                psi = E.compose(clv[(g, e)], clv[(f, ge)])
                comp[(g, f)][e] = unique_filler(p, clv[(gf, e)], psi, idb, CART)
        else:
            idb = B.identity(B.cod(g))
            comp[(g, f)] = {}
            for e in values[B.dom(f)].objects:
                fe = clv.moved(f, e)
                psi = E.compose(clv[(g, fe)], clv[(f, e)])
                comp[(g, f)][e] = unique_filler(p, clv[(gf, e)], psi, idb, COCART)
    return Pseudofunctor(B, CONTRA if contra else CO, values, actions, comp, ids,
                         name=f"F_{p.name or 'p'}")


@dataclass
class RoundTrip:
    ok: bool
    functor: Functor | None
    analysis: FunctorAnalysis | None
    reason: str = ""


def comparison_functor(p: Functor, clv: Cleavage, total: FinCat, pT: Functor) -> Functor:
    """Groth(F_p) -> E: (E|B) |-> E and (h, f) |-> lift∘h (or h∘lift)."""
    E = p.src
    contra = clv.direction == CART
    omap = {o: total.ob_info[o][0] for o in total.objects}
    mmap = {}
    for m in total.morphisms:
        h, f, s, t = total.mor_info[m]
        if contra:
            mmap[m] = E.compose(clv[(f, total.ob_info[t][0])], h)
        else:
            mmap[m] = E.compose(h, clv[(f, total.ob_info[s][0])])
    return Functor(total, E, omap, mmap, "K")


def roundtrip_check(p: Functor, direction: str = CART) -> RoundTrip:
    """Is Groth(to_pseudofunctor(p)) equivalent to p over the base?"""
    clv = choose_cleavage(p, direction)
    F = to_pseudofunctor(p, clv)
    total, pT = grothendieck(F)
    K = comparison_functor(p, clv, total, pT)
    if not validate_functor(K).ok:
        return RoundTrip(False, K, None, "comparison is not a functor")
    for m in total.morphisms:
        if p.mor(K.mor(m)) != pT.mor(m):
            return RoundTrip(False, K, None, f"comparison does not commute with projections at {m}")
    a = analyze_functor(K)
    return RoundTrip(a.equivalence, K, a, "" if a.equivalence else "comparison is not an equivalence")


def canonical_fiber_iso(F: Pseudofunctor, total: FinCat, p: Functor, b: str) -> Functor:
    """F(b) -> fiber of the total category over b: e |-> (e|b)."""
    V = F.values[b]
    one = F.base.identity(b)
    Fb = fiber(p, b)
    omap = {e: f"({e}|{b})" for e in V.objects}
    mmap = {}
    for v in V.morphisms:
        e1, e2 = V.dom(v), V.cod(v)
        if F.variance == CONTRA:
            h = V.compose(F.id_iso[b][e2], v)
            mmap[v] = f"({h}|{one}|{e2})"
        else:
            h = V.compose(v, F.id_iso[b][e1])
            mmap[v] = f"({h}|{one}|{e1})"
    return Functor(V, Fb, omap, mmap, f"can_{b}")


def pointwise_isomorphic(F: Pseudofunctor, G: Pseudofunctor) -> dict:
    """Per base object, an isomorphism of categories F(b) -> G(b), or None."""
    return {b: find_isomorphism(F.values[b], G.values[b]) for b in F.base.objects}
