"""Finite categories with string ids and integer-indexed internals."""
from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ..errors import CatspecError, NotComposable, UnknownId

# Dense composition tables are built up to this many morphisms.
DENSE_LIMIT = 3000


class FinCat:
    """A finite category.

    Objects and morphisms are opaque strings.  Internally every object and
    morphism has an integer index, and composition is available both per
    pair (``compose``) and vectorised over index arrays (``comp_i``).
    Subclasses decide how composites are produced: a stored table, or a
    computation on concrete data.
    """

    def __init__(self, objects: Sequence[str], morphisms: Sequence[str],
                 dom: Sequence[str], cod: Sequence[str],
                 identities: Mapping[str, str], name: str = ""):
        self.name = name
        self.objects = tuple(objects)
        self.morphisms = tuple(morphisms)
        self.obj_index = {o: i for i, o in enumerate(self.objects)}
        self.mor_index = {m: i for i, m in enumerate(self.morphisms)}
        if len(self.obj_index) != len(self.objects):
            raise CatspecError(f"duplicate object ids in {name or 'category'}")
        if len(self.mor_index) != len(self.morphisms):
            raise CatspecError(f"duplicate morphism ids in {name or 'category'}")
        oi = self.obj_index
        self.dom_i = np.fromiter((oi[d] for d in dom), dtype=np.int64, count=len(self.morphisms))
        self.cod_i = np.fromiter((oi[c] for c in cod), dtype=np.int64, count=len(self.morphisms))
        self.id_i = np.fromiter((self.mor_index[identities[o]] for o in self.objects),
                                dtype=np.int64, count=len(self.objects))
        self._homs = None
        self._into = None
        self._out = None
        self._dense = None
        self._scalar_cache: dict = {}

    # -- lookups -----------------------------------------------------------
    def oi(self, x: str) -> int:
        try:
            return self.obj_index[x]
        except KeyError:
            raise UnknownId(f"unknown object {x!r} in {self.name or 'category'}") from None

    def mi(self, f: str) -> int:
        try:
            return self.mor_index[f]
        except KeyError:
            raise UnknownId(f"unknown morphism {f!r} in {self.name or 'category'}") from None

    def dom(self, f: str) -> str:
        return self.objects[self.dom_i[self.mi(f)]]

    def cod(self, f: str) -> str:
        return self.objects[self.cod_i[self.mi(f)]]

    def identity(self, x: str) -> str:
        return self.morphisms[self.id_i[self.oi(x)]]

    def is_identity(self, f: str) -> bool:
        i = self.mi(f)
        return self.id_i[self.dom_i[i]] == i

    def __len__(self):
        return len(self.morphisms)

    def __repr__(self):
        return f"<FinCat {self.name or '?'}: {len(self.objects)} objects, {len(self.morphisms)} morphisms>"

    # -- composition ---------------------------------------------------------
    def _compose_scalar_i(self, g: int, f: int) -> int:
        raise NotImplementedError

    def compose_i(self, g: int, f: int) -> int:
        if self.cod_i[f] != self.dom_i[g]:
            return -1
        if self._dense is not None:
            return int(self._dense[f, g])
        key = (g, f)
        r = self._scalar_cache.get(key)
        if r is None:
            r = self._compose_scalar_i(g, f)
            self._scalar_cache[key] = r
        return r

    def compose(self, *fs: str) -> str:
        """compose(h, g, f) is h∘g∘f."""
        if not fs:
            raise CatspecError("compose needs at least one morphism")
        idx = [self.mi(f) for f in fs]
        r = idx[-1]
        for g in reversed(idx[:-1]):
            c = self.compose_i(g, r)
            if c < 0:
                raise NotComposable(
                    f"cannot compose {self.morphisms[g]} after {self.morphisms[r]}")
            r = c
        return self.morphisms[r]

    def dense(self):
        """Dense table ``T[f, g] = g∘f`` (or -1), built lazily when small."""
        if self._dense is None and len(self.morphisms) <= DENSE_LIMIT:
            n = len(self.morphisms)
            t = np.full((n, n), -1, dtype=np.int32)
            for y in range(len(self.objects)):
                ins = self.into_i(y)
                outs = self.out_i(y)
                for f in ins.tolist():
                    for g in outs.tolist():
                        t[f, g] = self._compose_scalar_i(g, f)
            self._dense = t
        return self._dense

    def comp_i(self, g, f) -> np.ndarray:
        """Vectorised composite g∘f over broadcast index arrays; -1 if undefined."""
        g = np.asarray(g, dtype=np.int64)
        f = np.asarray(f, dtype=np.int64)
        d = self.dense()
        if d is not None:
            g, f = np.broadcast_arrays(g, f)
            out = d[f, g].astype(np.int64)
            bad = (g < 0) | (f < 0)
            if bad.any():
                out[bad] = -1
            return out
        g, f = np.broadcast_arrays(g, f)
        out = np.empty(g.shape, dtype=np.int64)
        for k, (gg, ff) in enumerate(zip(g.ravel().tolist(), f.ravel().tolist())):
            out.flat[k] = -1 if gg < 0 or ff < 0 else self.compose_i(gg, ff)
        return out

    # -- hom sets ------------------------------------------------------------
    def _build_homs(self):
        n = len(self.objects)
        order = np.lexsort((np.arange(len(self.morphisms)), self.cod_i, self.dom_i))
        homs: dict = {}
        keys = self.dom_i[order] * n + self.cod_i[order]
        if len(order):
            cuts = np.flatnonzero(np.diff(keys)) + 1
            for chunk in np.split(order, cuts):
                homs[(int(self.dom_i[chunk[0]]), int(self.cod_i[chunk[0]]))] = chunk
        self._homs = homs
        empty = np.zeros(0, dtype=np.int64)
        self._into = [empty] * n
        self._out = [empty] * n
        by_cod = np.argsort(self.cod_i, kind="stable")
        by_dom = np.argsort(self.dom_i, kind="stable")
        cc = np.searchsorted(self.cod_i[by_cod], np.arange(n + 1))
        dd = np.searchsorted(self.dom_i[by_dom], np.arange(n + 1))
        self._into = [by_cod[cc[i]:cc[i + 1]] for i in range(n)]
        self._out = [by_dom[dd[i]:dd[i + 1]] for i in range(n)]

    def hom_i(self, x: int, y: int) -> np.ndarray:
        if self._homs is None:
            self._build_homs()
        return self._homs.get((x, y), np.zeros(0, dtype=np.int64))

    def into_i(self, y: int) -> np.ndarray:
        if self._homs is None:
            self._build_homs()
        return self._into[y]

    def out_i(self, x: int) -> np.ndarray:
        if self._homs is None:
            self._build_homs()
        return self._out[x]

    def hom(self, x: str, y: str) -> tuple:
        return tuple(self.morphisms[i] for i in self.hom_i(self.oi(x), self.oi(y)).tolist())

    def inverse(self, f: str):
        """The two-sided inverse of f, or None."""
        i = self.mi(f)
        x, y = int(self.dom_i[i]), int(self.cod_i[i])
        for g in self.hom_i(y, x).tolist():
            if self.compose_i(g, i) == self.id_i[x] and self.compose_i(i, g) == self.id_i[y]:
                return self.morphisms[g]
        return None

    def composable_pairs(self) -> Iterable[tuple]:
        """Yield (g, f) index pairs with cod f = dom g."""
        for y in range(len(self.objects)):
            outs = self.out_i(y).tolist()
            for f in self.into_i(y).tolist():
                for g in outs:
                    yield g, f


class TableCategory(FinCat):
    """A category given by an explicit composition table."""

    def __init__(self, objects, arrows: Mapping[str, tuple], identities: Mapping[str, str],
                 table: Mapping[tuple, str], name: str = ""):
        arrows = dict(arrows)
        for o in objects:
            if identities.get(o) not in arrows:
                raise CatspecError(f"identity of {o!r} is not a declared morphism")
        for f, (d, c) in arrows.items():
            if d not in objects or c not in objects:
                raise UnknownId(f"morphism {f!r} has unknown endpoint")
        mors = list(arrows)
        super().__init__(objects, mors, [arrows[m][0] for m in mors],
                         [arrows[m][1] for m in mors], identities, name)
        self.table = dict(table)
        self.identities = dict(identities)

    def _compose_scalar_i(self, g, f):
        h = self.table.get((self.morphisms[g], self.morphisms[f]))
        if h is None:
            return -1
        return self.mor_index.get(h, -1)

    def compose(self, *fs: str) -> str:
        r = fs[-1]
        for g in reversed(fs[:-1]):
            h = self.table.get((g, r))
            if h is None:
                self.mi(g)
                self.mi(r)
                raise NotComposable(f"no composite {g}*{r}")
            r = h
        self.mi(r)
        return r


def make_category(objects: Sequence[str], arrows: Mapping[str, tuple] = (),
                  comp: Mapping[tuple, str] = (), name: str = "") -> TableCategory:
    """Build a table category, adding ``id_<obj>`` identities and unit composites."""
    arrows = dict(arrows)
    comp = dict(comp)
    ids = {}
    full = {}
    for o in objects:
        ids[o] = f"id_{o}"
        full[ids[o]] = (o, o)
    full.update(arrows)
    table = dict(comp)
    for f, (d, c) in full.items():
        table[(ids[c], f)] = f
        table[(f, ids[d])] = f
    return TableCategory(list(objects), full, ids, table, name)


def table_of(c: FinCat) -> dict:
    """Materialise the composition table of any finite category as names."""
    if isinstance(c, TableCategory):
        return dict(c.table)
    m = c.morphisms
    out = {}
    for g, f in c.composable_pairs():
        out[(m[g], m[f])] = m[c.compose_i(g, f)]
    return out


def as_table(c: FinCat, name: str | None = None) -> TableCategory:
    """Copy any finite category into a TableCategory with the same ids."""
    ids = {o: c.identity(o) for o in c.objects}
    arrows = {f: (c.dom(f), c.cod(f)) for f in c.morphisms}
    return TableCategory(c.objects, arrows, ids, table_of(c), name or c.name)


class FunctionCategory(FinCat):
    """Concrete category whose morphisms are functions between finite carriers.

    ``carriers`` maps each object to its tuple of elements.  ``hom_functions(X, Y)``
    yields the admissible functions as tuples of element positions in Y's
    carrier, one entry per element of X's carrier.  The identity must be
    admissible.  Morphism ids come from ``namer(X, Y, fn)``; identities are
    always ``id_<X>``.
    """

    def __init__(self, carriers: Mapping[str, tuple],
                 hom_functions: Callable[[str, str], Iterable[tuple]],
                 namer: Callable[[str, str, tuple], str] | None = None, name: str = ""):
        self.carriers = {o: tuple(v) for o, v in carriers.items()}
        objs = list(self.carriers)
        namer = namer or (lambda x, y, fn: f"{x}_{y}_" + "_".join(map(str, fn)))
        mors, doms, cods, fns = [], [], [], []
        ids = {}
        for x in objs:
            for y in objs:
                ident = tuple(range(len(self.carriers[x]))) if x == y else None
                for fn in hom_functions(x, y):
                    fn = tuple(fn)
                    nm = f"id_{x}" if fn == ident else namer(x, y, fn)
                    if fn == ident:
                        ids[x] = nm
                    mors.append(nm)
                    doms.append(x)
                    cods.append(y)
                    fns.append(fn)
        missing = [x for x in objs if x not in ids]
        if missing:
            raise CatspecError(f"identity function missing on {missing}")
        super().__init__(objs, mors, doms, cods, ids, name)
        self.fns = fns
        self._lookup = {(doms[i], cods[i], fns[i]): i for i in range(len(mors))}

    def fn(self, f: str) -> tuple:
        return self.fns[self.mi(f)]

    def apply(self, f: str, element):
        """Apply morphism f to an element of its domain carrier."""
        i = self.mi(f)
        src = self.carriers[self.objects[self.dom_i[i]]]
        dst = self.carriers[self.objects[self.cod_i[i]]]
        return dst[self.fns[i][src.index(element)]]

    def find(self, x: str, y: str, mapping) -> str | None:
        """Morphism x -> y realising ``mapping`` (dict or position tuple), if admissible."""
        if isinstance(mapping, dict):
            src, dst = self.carriers[x], self.carriers[y]
            mapping = tuple(dst.index(mapping[a]) for a in src)
        i = self._lookup.get((x, y, tuple(mapping)))
        return None if i is None else self.morphisms[i]

    def _compose_scalar_i(self, g, f):
        ff, gf = self.fns[f], self.fns[g]
        key = (self.objects[self.dom_i[f]], self.objects[self.cod_i[g]], tuple(gf[a] for a in ff))
        i = self._lookup.get(key)
        if i is None:
            raise CatspecError(
                f"composite of {self.morphisms[g]} after {self.morphisms[f]} is not admissible")
        return i


class Functor:
    """Functor data: object and morphism maps between two finite categories."""

    def __init__(self, src: FinCat, dst: FinCat, omap: Mapping[str, str],
                 mmap: Mapping[str, str], name: str = ""):
        self.src = src
        self.dst = dst
        self.omap = dict(omap)
        self.mmap = dict(mmap)
        self.name = name
        self._om = None
        self._mm = None

    def ob(self, x: str) -> str:
        try:
            return self.omap[x]
        except KeyError:
            raise UnknownId(f"functor {self.name or '?'} has no image for object {x!r}") from None

    def mor(self, f: str) -> str:
        try:
            return self.mmap[f]
        except KeyError:
            raise UnknownId(f"functor {self.name or '?'} has no image for morphism {f!r}") from None

    @property
    def om_i(self) -> np.ndarray:
        if self._om is None:
            self._om = np.array([self.dst.oi(self.ob(x)) for x in self.src.objects], dtype=np.int64)
        return self._om

    @property
    def mm_i(self) -> np.ndarray:
        if self._mm is None:
            self._mm = np.array([self.dst.mi(self.mor(f)) for f in self.src.morphisms], dtype=np.int64)
        return self._mm

    def __repr__(self):
        return f"<Functor {self.name or '?'}: {self.src.name} -> {self.dst.name}>"


def identity_functor(c: FinCat, name: str = "") -> Functor:
    return Functor(c, c, {o: o for o in c.objects}, {m: m for m in c.morphisms}, name or f"id_{c.name}")


def compose_functors(g: Functor, f: Functor, name: str = "") -> Functor:
    """g∘f."""
    return Functor(f.src, g.dst, {x: g.ob(f.ob(x)) for x in f.src.objects},
                   {m: g.mor(f.mor(m)) for m in f.src.morphisms}, name)


class NatTrans:
    """Natural transformation between parallel functors, by components."""

    def __init__(self, source: Functor, target: Functor, components: Mapping[str, str]):
        self.source = source
        self.target = target
        self.components = dict(components)

    def __getitem__(self, x):
        return self.components[x]


class ComputedCategory(FinCat):
    """Category whose composite is produced by a callback on indices."""

    def __init__(self, objects, morphisms, dom, cod, identities,
                 compose: Callable[[int, int], int], name: str = ""):
        super().__init__(objects, morphisms, dom, cod, identities, name)
        self._cb = compose

    def _compose_scalar_i(self, g, f):
        return self._cb(g, f)


class Subcategory(FinCat):
    """Subcategory of ``parent`` on the given objects and morphisms (ids shared)."""

    def __init__(self, parent: FinCat, objects, morphisms, name: str = ""):
        morphisms = list(morphisms)
        super().__init__(list(objects), morphisms, [parent.dom(m) for m in morphisms],
                         [parent.cod(m) for m in morphisms],
                         {o: parent.identity(o) for o in objects}, name)
        self.parent = parent
        self._to_parent = np.array([parent.mi(m) for m in morphisms], dtype=np.int64)
        self._from_parent = {int(p): i for i, p in enumerate(self._to_parent)}

    def _compose_scalar_i(self, g, f):
        r = self.parent.compose_i(int(self._to_parent[g]), int(self._to_parent[f]))
        return self._from_parent.get(r, -1)


def full_subcategory(c: FinCat, objects, name: str = "") -> Subcategory:
    keep = set(objects)
    idx = [c.oi(o) for o in objects]
    mors = [c.morphisms[m] for x in idx for y in idx for m in c.hom_i(x, y).tolist()]
    return Subcategory(c, [c.objects[i] for i in idx], mors, name or f"{c.name}|sub")


class Opposite(FinCat):
    """Opposite category sharing ids with the original."""

    def __init__(self, c: FinCat):
        super().__init__(c.objects, c.morphisms, [c.cod(m) for m in c.morphisms],
                         [c.dom(m) for m in c.morphisms],
                         {o: c.identity(o) for o in c.objects}, f"{c.name}^op")
        self.orig = c

    def _compose_scalar_i(self, g, f):
        return self.orig.compose_i(f, g)

    def dense(self):
        d = self.orig.dense()
        return None if d is None else d.T
