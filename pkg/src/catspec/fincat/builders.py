"""Standard small categories used as fixtures and building blocks."""
from __future__ import annotations

import itertools
from typing import Mapping

import numpy as np

from .category import FinCat, FunctionCategory, Functor, make_category


def terminal_category(obj: str = "pt"):
    return make_category([obj], name="One")


def walking_arrow():
    """The category with objects a, b and one non-identity arrow u: a -> b."""
    return make_category(["a", "b"], {"u": ("a", "b")}, name="Two")


def discrete(names, name: str = "Disc"):
    return make_category(list(names), name=name)


def cyclic_group(n: int, obj: str = "pt", name: str | None = None):
    """One-object groupoid Z/n; r<k> is rotation by k, r0 is the identity."""
    names = [f"id_{obj}"] + [f"r{k}" for k in range(1, n)]
    arrows = {names[k]: (obj, obj) for k in range(1, n)}
    comp = {(names[i], names[j]): names[(i + j) % n] for i in range(n) for j in range(n)}
    return make_category([obj], arrows, comp, name or f"BZ{n}")


def group_category(elements, mul, unit, obj: str = "pt", name: str = "BG"):
    """One-object category of a finite group given by its multiplication."""
    nm = {g: (f"id_{obj}" if g == unit else f"g_{g}") for g in elements}
    arrows = {nm[g]: (obj, obj) for g in elements if g != unit}
    comp = {(nm[g], nm[h]): nm[mul(g, h)] for g in elements for h in elements}
    cat = make_category([obj], arrows, comp, name)
    cat.element_of = {v: k for k, v in nm.items()}
    cat.morphism_of = nm
    return cat


def poset_category(points, leq, name: str = "P"):
    """Thin category of a finite (pre)order given as a set of pairs (x, y) meaning x <= y."""
    rel = set(leq) | {(x, x) for x in points}
    arrows = {f"le_{x}_{y}": (x, y) for (x, y) in sorted(rel) if x != y}
    comp = {}
    for (x, y) in rel:
        for (y2, z) in rel:
            if y == y2 and x != y and y != z:
                if (x, z) not in rel:
                    raise ValueError(f"relation is not transitive at {x} <= {y} <= {z}")
                comp[(f"le_{y}_{z}", f"le_{x}_{y}")] = f"le_{x}_{z}" if x != z else f"id_{x}"
    return make_category(list(points), arrows, comp, name)


def _fn_name(x, y, fn):
    return f"{x}_{y}_" + "".join(str(v) for v in fn)


def finset(n: int, injective: bool = False, name: str | None = None) -> FunctionCategory:
    """Skeleton of finite sets of size 0..n with all (or injective) functions.

    Objects are n0..n<n>; carriers are 0..k-1.  Morphism ids spell the
    function, e.g. ``n2_n3_01`` sends 0 -> 0 and 1 -> 1.
    """
    carriers = {f"n{k}": tuple(range(k)) for k in range(n + 1)}

    def homs(x, y):
        a, b = len(carriers[x]), len(carriers[y])
        if injective:
            return itertools.permutations(range(b), a)
        return itertools.product(range(b), repeat=a)

    return FunctionCategory(carriers, homs, _fn_name,
                            name or (f"FinSet{n}inj" if injective else f"FinSet{n}"))


def inclusion(sub: FinCat, parent: FinCat, name: str = "incl") -> Functor:
    return Functor(sub, parent, {o: o for o in sub.objects}, {m: m for m in sub.morphisms}, name)


def monotone_category(posets: Mapping[str, tuple], name: str = "Pos") -> FunctionCategory:
    """Concrete category of the given finite posets and all monotone maps.

    ``posets`` maps a name to (points, pairs) where pairs lists x <= y.
    """
    carriers, orders = {}, {}
    for nm, (pts, le) in posets.items():
        pts = tuple(pts)
        carriers[nm] = pts
        rel = set(le) | {(p, p) for p in pts}
        orders[nm] = {(pts.index(a), pts.index(b)) for a, b in rel}

    def homs(x, y):
        a, b = len(carriers[x]), len(carriers[y])
        for fn in itertools.product(range(b), repeat=a):
            if all((fn[i], fn[j]) in orders[y] for i, j in orders[x]):
                yield fn

    cat = FunctionCategory(carriers, homs, _fn_name, name)
    cat.orders = orders
    return cat


class ArrowCategory(FinCat):
    """Arrow category C^→: objects are morphisms of C, morphisms commuting squares.

    A square from x: a -> b to y: c -> d is a pair (u: a -> c, v: b -> d)
    with v∘x = y∘u, with id ``(u|v|x|y)``.  Composition is computed from
    C's dense table, vectorised.
    """

    def __init__(self, base: FinCat, name: str | None = None):
        D = base.dense()
        if D is None:
            raise ValueError("arrow category needs a base small enough for a dense table")
        self.base = base
        nb = len(base.morphisms)
        us, vs, xs, ys = [], [], [], []
        for x in range(nb):
            a, b = int(base.dom_i[x]), int(base.cod_i[x])
            for y in range(nb):
                c, d = int(base.dom_i[y]), int(base.cod_i[y])
                U, V = base.hom_i(a, c), base.hom_i(b, d)
                if not len(U) or not len(V):
                    continue
                yu = D[U, y]
                vx = D[x, V]
                iu, iv = np.nonzero(yu[:, None] == vx[None, :])
                us.append(U[iu])
                vs.append(V[iv])
                xs.append(np.full(len(iu), x))
                ys.append(np.full(len(iu), y))
        self.sq_u = np.concatenate(us).astype(np.int64)
        self.sq_v = np.concatenate(vs).astype(np.int64)
        self.sq_x = np.concatenate(xs).astype(np.int64)
        self.sq_y = np.concatenate(ys).astype(np.int64)
        M = base.morphisms
        names = [f"({M[u]}|{M[v]}|{M[x]}|{M[y]})" for u, v, x, y in
                 zip(self.sq_u.tolist(), self.sq_v.tolist(), self.sq_x.tolist(), self.sq_y.tolist())]
        self._nb = nb
        keys = self._key(self.sq_u, self.sq_v, self.sq_x, self.sq_y)
        self._order = np.argsort(keys)
        self._keys = keys[self._order]
        # identity square of x is (id_a, id_b)
        ident = {}
        idsq = self._lookup(base.id_i[base.dom_i], base.id_i[base.cod_i], np.arange(nb), np.arange(nb))
        for x in range(nb):
            ident[M[x]] = names[idsq[x]]
        super().__init__(list(M), names, [M[x] for x in self.sq_x.tolist()],
                         [M[y] for y in self.sq_y.tolist()], ident,
                         name or f"{base.name}^arrow")
        self._D = D

    def _key(self, u, v, x, y):
        nb = self._nb
        return ((u * nb + v) * nb + x) * nb + y

    def _lookup(self, u, v, x, y):
        k = self._key(np.asarray(u), np.asarray(v), np.asarray(x), np.asarray(y))
        pos = np.searchsorted(self._keys, k)
        pos = np.minimum(pos, len(self._keys) - 1)
        found = self._keys[pos] == k
        return np.where(found, self._order[pos], -1)

    def dense(self):
        return None

    def comp_i(self, g, f):
        g = np.asarray(g, dtype=np.int64)
        f = np.asarray(f, dtype=np.int64)
        g, f = np.broadcast_arrays(g, f)
        ok = (g >= 0) & (f >= 0)
        gs, fs = np.where(ok, g, 0), np.where(ok, f, 0)
        ok &= self.sq_y[fs] == self.sq_x[gs]
        D = self._D
        u = D[self.sq_u[fs], self.sq_u[gs]]
        v = D[self.sq_v[fs], self.sq_v[gs]]
        r = self._lookup(u, v, self.sq_x[fs], self.sq_y[gs])
        return np.where(ok, r, -1)

    def compose_i(self, g, f):
        return int(self.comp_i(g, f))

    def _compose_scalar_i(self, g, f):
        return self.compose_i(g, f)

    def square(self, m: str) -> tuple:
        """(u, v, x, y) ids of a square."""
        i = self.mi(m)
        M = self.base.morphisms
        return (M[self.sq_u[i]], M[self.sq_v[i]], M[self.sq_x[i]], M[self.sq_y[i]])

    def cod_functor(self) -> Functor:
        B = self.base
        F = Functor(self, B, {x: B.cod(x) for x in self.objects},
                    dict(zip(self.morphisms, (B.morphisms[v] for v in self.sq_v.tolist()))), "cod")
        F._mm = self.sq_v.copy()
        F._om = B.cod_i.copy()
        return F

    def dom_functor(self) -> Functor:
        B = self.base
        F = Functor(self, B, {x: B.dom(x) for x in self.objects},
                    dict(zip(self.morphisms, (B.morphisms[u] for u in self.sq_u.tolist()))), "dom")
        F._mm = self.sq_u.copy()
        F._om = B.dom_i.copy()
        return F
