"""Generalized elements in hom-sets of a concrete finite category, and Yoneda extension.

A family f: |Z| -> C(X, Y) is a generalized element when the uncurried map
|Z×X| -> |Y|, w |-> f(pz w)(px w), is the underlying function of an arrow
Z×X -> Y of C.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import PreconditionError
from .fincat import FunctionCategory, ValidationReport, find_limits, full_subcategory
from .presheaf import SetFunctor, SetPresheaf


class ConcreteCategory:
    """A FunctionCategory plus chosen binary products and a terminal object.

    ``products[(Z, X)] = (P, pz, px)``.  The underlying functor is read
    off the carriers.
    """

    def __init__(self, cat: FunctionCategory, products: dict, terminal: str | None = None):
        self.cat = cat
        self.products = dict(products)
        self.terminal = terminal

    @classmethod
    def search(cls, cat: FunctionCategory) -> "ConcreteCategory":
        """Choose the first product cone per pair whose underlying comparison is bijective."""
        prods = {}
        for Z in cat.objects:
            for X in cat.objects:
                for w in find_limits(cat, "product", (Z, X)):
                    if _gamma(cat, w.apex, *w.legs) is not None:
                        prods[(Z, X)] = (w.apex, *w.legs)
                        break
        term = next((w.apex for w in find_limits(cat, "terminal")
                     if len(cat.carriers[w.apex]) == 1), None)
        return cls(cat, prods, term)

    def product(self, Z, X):
        try:
            return self.products[(Z, X)]
        except KeyError:
            raise PreconditionError(f"no product witness for {Z} x {X}") from None

    def validate(self) -> ValidationReport:
        rep = ValidationReport()
        C = self.cat
        for (Z, X), (P, pz, px) in self.products.items():
            if (C.dom(pz), C.cod(pz), C.dom(px), C.cod(px)) != (P, Z, P, X):
                rep.add("product-typing", pair=[Z, X])
                continue
            if not any(w.legs == (pz, px) for w in find_limits(C, "product", (Z, X)) if w.apex == P):
                rep.add("product-not-universal", pair=[Z, X])
            if _gamma(C, P, pz, px) is None:
                rep.add("underlying-not-preserved", pair=[Z, X])
        if self.terminal is not None:
            if len(self.cat.carriers[self.terminal]) != 1 or \
                    not any(w.apex == self.terminal for w in find_limits(C, "terminal")):
                rep.add("terminal", object=self.terminal)
        return rep


def _gamma(C, P, pz, px):
    """|P| -> |Z|×|X| as a dict if bijective."""
    pairs = {w: (C.apply(pz, w), C.apply(px, w)) for w in C.carriers[P]}
    Z, X = C.carriers[C.cod(pz)], C.carriers[C.cod(px)]
    if len(set(pairs.values())) != len(pairs) or len(pairs) != len(Z) * len(X):
        return None
    return pairs


def uncurry(C: ConcreteCategory, Z, X, elt) -> dict:
    cat = C.cat
    P, pz, px = C.product(Z, X)
    zs = cat.carriers[Z]
    return {w: cat.apply(elt[zs.index(cat.apply(pz, w))], cat.apply(px, w)) for w in cat.carriers[P]}


def lift_of(C: ConcreteCategory, Z, X, Y, elt):
    """The arrow h: Z×X -> Y with |h| the uncurried family, or None."""
    P, _, _ = C.product(Z, X)
    return C.cat.find(P, Y, uncurry(C, Z, X, elt))


def is_generalized(C: ConcreteCategory, Z, X, Y, elt) -> bool:
    return lift_of(C, Z, X, Y, elt) is not None


def generalized_elements(C: ConcreteCategory, Z, X, Y) -> list:
    """All families |Z| -> C(X, Y), as tuples indexed by |Z|, that lift."""
    cat = C.cat
    C.product(Z, X)
    homs = cat.hom(X, Y)
    return [elt for elt in itertools.product(homs, repeat=len(cat.carriers[Z]))
            if is_generalized(C, Z, X, Y, elt)]


def ge_restrict(C: ConcreteCategory, elt, alpha: str):
    """elt∘|alpha| for alpha: Z' -> Z."""
    cat = C.cat
    Z2, Z = cat.dom(alpha), cat.cod(alpha)
    zs = cat.carriers[Z]
    return tuple(elt[zs.index(cat.apply(alpha, z))] for z in cat.carriers[Z2])


def ge_compose(C: ConcreteCategory, W, f, g, check: bool = True):
    """Pointwise composite of f: |W| -> C(Y, Z) and g: |W| -> C(X, Y)."""
    cat = C.cat
    if len(f) != len(g) or len(f) != len(cat.carriers[W]):
        raise PreconditionError("families are not indexed by the same carrier")
    if not f:
        return ()
    X, Y, Z = cat.dom(g[0]), cat.cod(g[0]), cat.cod(f[0])
    if check:
        if not is_generalized(C, W, Y, Z, f) or not is_generalized(C, W, X, Y, g):
            raise PreconditionError("ge_compose needs generalized elements")
    return tuple(cat.compose(a, b) for a, b in zip(f, g))


def unit_family(C: ConcreteCategory, W, X):
    return tuple(C.cat.identity(X) for _ in C.cat.carriers[W])


def ge_presheaf(C: ConcreteCategory, X, Y, objects=None) -> SetPresheaf:
    """Z |-> generalized elements |Z| -> C(X, Y) on the full subcategory where Z×X exists."""
    cat = C.cat
    objs = [Z for Z in (objects or cat.objects) if (Z, X) in C.products]
    sub = full_subcategory(cat, objs, f"{cat.name}|{X}")
    values = {Z: tuple(generalized_elements(C, Z, X, Y)) for Z in objs}
    restrict = {a: {e: ge_restrict(C, e, a) for e in values[sub.cod(a)]} for a in sub.morphisms}
    return SetPresheaf(sub, values, restrict, f"G(|-|,{X},{Y})")


def enrichment_report(C: ConcreteCategory, objects=None, Ws=None) -> ValidationReport:
    """Closure, associativity and unit laws for generalized-element composition."""
    rep = ValidationReport()
    cat = C.cat
    objs = list(objects or cat.objects)
    Ws = list(Ws or [W for W in cat.objects])
    for W in Ws:
        ge = {}
        for X in objs:
            for Y in objs:
                if (W, X) in C.products:
                    ge[(X, Y)] = generalized_elements(C, W, X, Y)
        for (X, Y), gs in ge.items():
            for g in gs:
                u = unit_family(C, W, Y)
                if ge_compose(C, W, u, g, check=False) != g:
                    rep.add("left-unit", W=W, element=list(g))
                if ge_compose(C, W, g, unit_family(C, W, X), check=False) != g:
                    rep.add("right-unit", W=W, element=list(g))
                for Z in objs:
                    for f in ge.get((Y, Z), ()):
                        fg = ge_compose(C, W, f, g, check=False)
                        if not is_generalized(C, W, X, Z, fg):
                            rep.add("closure", W=W, f=list(f), g=list(g))
                        for V in objs:
                            for h in ge.get((Z, V), ()):
                                a = ge_compose(C, W, h, fg, check=False)
                                b = ge_compose(C, W, ge_compose(C, W, h, f, check=False), g, check=False)
                                if a != b:
                                    rep.add("associativity", W=W)
    return rep


# -- Yoneda extension ---------------------------------------------------------

@dataclass
class Colimit:
    classes: list          # representatives (element-object, value)
    class_of: dict         # (element-object, value) -> class index

    def __len__(self):
        return len(self.classes)


def yoneda_extend(F, P: SetPresheaf) -> Colimit:
    """Colimit of F∘π over the category of elements of P, by union-find."""
    if not isinstance(F, SetFunctor):
        F = SetFunctor.from_functor(F)
    if F.base is not P.base and F.base.objects != P.base.objects:
        raise PreconditionError("F and P live on different categories")
    C = P.base
    nodes = [(c, x, a) for c in C.objects for x in P.values[c] for a in F.values[c]]
    index = {n: i for i, n in enumerate(nodes)}
    parent = list(range(len(nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for u in C.morphisms:
        c, c2 = C.dom(u), C.cod(u)
        for x2 in P.values[c2]:
            x = P.restrict[u][x2]
            for a in F.values[c]:
                i, j = find(index[(c, x, a)]), find(index[(c2, x2, F.maps[u][a])])
                if i != j:
                    parent[max(i, j)] = min(i, j)
    roots = sorted({find(i) for i in range(len(nodes))})
    pos = {r: k for k, r in enumerate(roots)}
    return Colimit([nodes[r] for r in roots], {n: pos[find(index[n])] for n in nodes})


def representable_comparison(F, C, c) -> bool:
    """a |-> [(c, id_c, a)] is a bijection F(c) -> colim over y(c)."""
    from .presheaf import representable
    if not isinstance(F, SetFunctor):
        F = SetFunctor.from_functor(F)
    col = yoneda_extend(F, representable(C, c))
    img = [col.class_of[(c, C.identity(c), a)] for a in F.values[c]]
    return len(set(img)) == len(img) == len(col)


__all__ = ["ConcreteCategory", "uncurry", "lift_of", "is_generalized", "generalized_elements",
           "ge_restrict", "ge_compose", "unit_family", "ge_presheaf", "enrichment_report",
           "Colimit", "yoneda_extend", "representable_comparison"]
