"""Finite set-valued presheaves and covariant set-valued functors."""
from __future__ import annotations

from .errors import PreconditionError
from .fincat import FinCat, Functor, TableCategory, ValidationReport


class SetPresheaf:
    """Contravariant P: C^op -> Set.

    ``values[c]`` is a tuple of hashable elements; ``restrict[u]`` maps
    P(cod u) -> P(dom u) as a dict.
    """

    def __init__(self, base: FinCat, values: dict, restrict: dict, name: str = "P"):
        self.base = base
        self.values = {c: tuple(v) for c, v in values.items()}
        self.restrict = restrict
        self.name = name

    def __call__(self, c):
        return self.values[c]

    def along(self, u, x):
        return self.restrict[u][x]

    def validate(self) -> ValidationReport:
        rep = ValidationReport()
        C = self.base
        for c in C.objects:
            if c not in self.values:
                rep.add("missing-value", object=c)
        if not rep.ok:
            return rep
        for u in C.morphisms:
            r = self.restrict.get(u)
            src, dst = self.values[C.cod(u)], set(self.values[C.dom(u)])
            if r is None or set(r) != set(src) or not set(r.values()) <= dst:
                rep.add("restriction-not-a-function", morphism=u)
        if not rep.ok:
            return rep
        for c in C.objects:
            one = C.identity(c)
            for x in self.values[c]:
                if self.restrict[one][x] != x:
                    rep.add("identity", object=c, element=x)
        for gi, fi in C.composable_pairs():
            g, f = C.morphisms[gi], C.morphisms[fi]
            gf = C.compose(g, f)
            for x in self.values[C.cod(g)]:
                if self.restrict[gf][x] != self.restrict[f][self.restrict[g][x]]:
                    rep.add("composition", g=g, f=f, element=x)
        return rep

    def is_subpresheaf_of(self, other: "SetPresheaf") -> bool:
        return all(set(self.values[c]) <= set(other.values[c]) for c in self.base.objects) and all(
            self.restrict[u][x] == other.restrict[u][x]
            for u in self.base.morphisms for x in self.values[self.base.cod(u)])

    def same_as(self, other: "SetPresheaf") -> bool:
        return all(set(self.values[c]) == set(other.values[c]) for c in self.base.objects) and \
            self.is_subpresheaf_of(other)

    def elements_category(self, name: str = ""):
        """Category of elements: objects (c, x), u: (c, x) -> (c', x') when P(u)(x') = x."""
        C = self.base
        objs, info = [], {}
        for c in C.objects:
            for i, x in enumerate(self.values[c]):
                o = f"({c}|{i})"
                objs.append(o)
                info[o] = (c, x)
        idx = {(c, x): o for o, (c, x) in info.items()}
        arrows, ids, src_of = {}, {}, {}
        for u in C.morphisms:
            for x2 in self.values[C.cod(u)]:
                x = self.restrict[u][x2]
                s, t = idx[(C.dom(u), x)], idx[(C.cod(u), x2)]
                mid = f"({u}|{s}|{t})"
                if C.is_identity(u):
                    ids[s] = mid
                arrows[mid] = (s, t)
                src_of[mid] = u
        comp = {}
        by_dom = {}
        for m, (s, t) in arrows.items():
            by_dom.setdefault(s, []).append(m)
        for f, (s, t) in arrows.items():
            for g in by_dom.get(t, []):
                h = C.compose(src_of[g], src_of[f])
                comp[(g, f)] = f"({h}|{s}|{arrows[g][1]})"
        cat = TableCategory(objs, arrows, ids, comp, name or f"El({self.name})")
        proj = Functor(cat, C, {o: info[o][0] for o in objs}, src_of, "pi")
        cat.info = info
        return cat, proj


def representable(C: FinCat, c: str) -> SetPresheaf:
    values = {d: tuple(C.hom(d, c)) for d in C.objects}
    restrict = {u: {h: C.compose(h, u) for h in values[C.cod(u)]} for u in C.morphisms}
    return SetPresheaf(C, values, restrict, f"y({c})")


def constant_presheaf(C: FinCat, elements, name: str = "K") -> SetPresheaf:
    els = tuple(elements)
    return SetPresheaf(C, {c: els for c in C.objects},
                       {u: {x: x for x in els} for u in C.morphisms}, name)


def terminal_presheaf(C: FinCat) -> SetPresheaf:
    return constant_presheaf(C, ["*"], "1")


def coproduct_presheaf(P: SetPresheaf, Q: SetPresheaf) -> SetPresheaf:
    C = P.base
    values = {c: tuple((0, x) for x in P.values[c]) + tuple((1, y) for y in Q.values[c])
              for c in C.objects}
    restrict = {}
    for u in C.morphisms:
        r = {(0, x): (0, P.restrict[u][x]) for x in P.values[C.cod(u)]}
        r.update({(1, y): (1, Q.restrict[u][y]) for y in Q.values[C.cod(u)]})
        restrict[u] = r
    return SetPresheaf(C, values, restrict, f"{P.name}+{Q.name}")


class SetFunctor:
    """Covariant F: C -> Set with values and maps along arrows."""

    def __init__(self, base: FinCat, values: dict, maps: dict, name: str = "F"):
        self.base = base
        self.values = {c: tuple(v) for c, v in values.items()}
        self.maps = maps
        self.name = name

    @classmethod
    def from_functor(cls, F: Functor) -> "SetFunctor":
        """Read a functor into a concrete category through its carriers."""
        D = F.dst
        if not hasattr(D, "carriers"):
            raise PreconditionError("target category has no carriers")
        values = {c: D.carriers[F.ob(c)] for c in F.src.objects}
        maps = {u: {a: D.apply(F.mor(u), a) for a in values[F.src.dom(u)]} for u in F.src.morphisms}
        return cls(F.src, values, maps, F.name)

    def validate(self) -> ValidationReport:
        rep = ValidationReport()
        C = self.base
        for c in C.objects:
            for a in self.values[c]:
                if self.maps[C.identity(c)][a] != a:
                    rep.add("identity", object=c, element=a)
        for gi, fi in C.composable_pairs():
            g, f = C.morphisms[gi], C.morphisms[fi]
            gf = C.compose(g, f)
            for a in self.values[C.dom(f)]:
                if self.maps[gf][a] != self.maps[g][self.maps[f][a]]:
                    rep.add("composition", g=g, f=f, element=a)
        return rep


__all__ = ["SetPresheaf", "SetFunctor", "representable", "constant_presheaf", "terminal_presheaf",
           "coproduct_presheaf"]
