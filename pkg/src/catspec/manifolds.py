"""Charts and atlases of a local structure over finite spaces, E-manifolds, locality checks."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx

from .errors import PreconditionError
from .fibrations import CART, classify, lifts, unique_filler
from .fincat import FunctionCategory, Functor
from .guard import check_size
from .sites import Pretopology, Verdict
from .spaces import FiniteSpace


# -- categories of finite spaces ---------------------------------------------

def _continuous(src: FiniteSpace, dst: FiniteSpace, fn: dict) -> bool:
    ops = set(src.opens)
    return all(frozenset(x for x in src.points if fn[x] in V) in ops for V in dst.opens)


def space_category(spaces, name="Sp") -> FunctionCategory:
    """Named finite spaces and all continuous maps between them."""
    by_name = {X.name: X for X in spaces}
    if len(by_name) != len(spaces):
        raise PreconditionError("space names must be distinct")
    carriers = {X.name: tuple(X.points) for X in spaces}

    def homs(a, b):
        X, Y = by_name[a], by_name[b]
        for fn in itertools.product(range(len(Y.points)), repeat=len(X.points)):
            if _continuous(X, Y, {x: Y.points[i] for x, i in zip(X.points, fn)}):
                yield fn

    cat = FunctionCategory(carriers, homs, lambda a, b, fn: f"{a}>{b}:" + "".join(map(str, fn)), name)
    cat.space_of = by_name
    return cat


def _code(points, opens, order):
    pos = {x: i for i, x in enumerate(order)}
    return tuple(sorted(tuple(sorted(pos[x] for x in U)) for U in opens))


def canonical_form(X: FiniteSpace):
    """Least encoding of the opens over all orderings of the points, and the first ordering achieving it."""
    best, best_order = None, None
    for order in itertools.permutations(X.points):
        c = _code(X.points, X.opens, order)
        if best is None or c < best:
            best, best_order = c, order
    return best, best_order


def all_finite_spaces(k: int) -> list:
    """One representative per homeomorphism class on k points (points 0..k-1)."""
    pts = list(range(k))
    subsets = [frozenset(c) for r in range(k + 1) for c in itertools.combinations(pts, r)]
    inner = [s for s in subsets if 0 < len(s) < k]
    codes = set()
    for r in range(len(inner) + 1):
        for combo in itertools.combinations(inner, r):
            ops = {frozenset(), frozenset(pts), *combo}
            if all(a | b in ops and a & b in ops for a in ops for b in ops):
                codes.add(canonical_form(FiniteSpace(pts, ops))[0])
    return sorted(codes)


class SpaceSkeleton:
    """Representatives of all finite spaces up to ``max_points`` with continuous maps."""

    def __init__(self, max_points: int = 2):
        reps = []
        self.code_to_name = {}
        for k in range(max_points + 1):
            for i, code in enumerate(all_finite_spaces(k)):
                nm = f"T{k}" if k < 2 else f"T{k}_{i}"
                reps.append(FiniteSpace(list(range(k)), [set(U) for U in code], nm))
                self.code_to_name[code] = nm
        self.max_points = max_points
        self.cat = space_category(reps, f"Top{max_points}")

    def rep_of(self, X: FiniteSpace):
        """(representative name, homeomorphism rep -> X as a dict)."""
        if len(X.points) > self.max_points:
            raise PreconditionError(f"{X.name} has more than {self.max_points} points")
        code, order = canonical_form(X)
        return self.code_to_name[code], {i: x for i, x in enumerate(order)}

    def name_of(self, kind: str, k: int) -> str:
        """Representative of the discrete or indiscrete space on k points."""
        pts = list(range(k))
        if kind == "discrete":
            X = FiniteSpace(pts, [c for r in range(k + 1) for c in itertools.combinations(pts, r)])
        else:
            X = FiniteSpace(pts, [[], pts])
        return self.rep_of(X)[0]

    def open_embeddings(self) -> list:
        C = self.cat
        out = []
        for m in C.morphisms:
            X, Y = C.space_of[C.dom(m)], C.space_of[C.cod(m)]
            fn = {x: C.apply(m, x) for x in X.points}
            img = frozenset(fn.values())
            if len(img) != len(X.points) or not Y.is_open(img):
                continue
            if {frozenset(fn[x] for x in U) for U in X.opens} == set(Y.subspace_opens(img)):
                out.append(m)
        return out

    def pretopology(self) -> Pretopology:
        """Jointly surjective families of open embeddings."""
        C = self.cat
        emb = self.open_embeddings()
        cov = {}
        for T in C.objects:
            mine = [m for m in emb if C.cod(m) == T]
            if len(mine) > 16:
                raise PreconditionError("too many open embeddings to enumerate coverings")
            pts = set(C.carriers[T])
            fams = []
            for r in range(len(mine) + 1):
                for combo in itertools.combinations(mine, r):
                    if {C.apply(m, x) for m in combo for x in C.carriers[C.dom(m)]} == pts:
                        fams.append(list(combo))
            cov[T] = fams
        return Pretopology(C, cov, "open")


# -- charts -----------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    E: str
    U: frozenset
    anchor: tuple            # sorted (rep point, X point) pairs

    @property
    def amap(self) -> dict:
        return dict(self.anchor)

    def __repr__(self):
        return f"Chart({self.E}, {sorted(self.U)}, {dict(self.anchor)})"


@dataclass
class Atlas:
    X: FiniteSpace
    charts: frozenset

    def __len__(self):
        return len(self.charts)


class LocalStructure:
    """A functor p: E -> Top_n together with the skeleton it lands in."""

    def __init__(self, p: Functor, skeleton: SpaceSkeleton, name: str = ""):
        if p.dst is not skeleton.cat:
            raise PreconditionError("structure must land in the skeleton category")
        self.p = p
        self.S = skeleton
        self.name = name or p.src.name
        self._restr = {}
        self._lifts = {}

    @property
    def E(self):
        return self.p.src

    def over(self, T) -> list:
        return [e for e in self.E.objects if self.p.ob(e) == T]

    def is_local(self):
        """Fibration with respect to the open embeddings of the skeleton."""
        c = classify(self.p, cls=self.S.open_embeddings())
        return c.fibration_wrt_class, c

    def cart_lift(self, u, e):
        key = (u, e)
        if key not in self._lifts:
            ls = sorted(lifts(self.p, u, e, CART))
            if not ls:
                raise PreconditionError(f"no cartesian lift of {u} at {e}")
            self._lifts[key] = ls[0]
        return self._lifts[key]

    def restrict(self, c: Chart, V) -> tuple:
        """(chart over V, the restriction arrow in E)."""
        V = frozenset(V)
        key = (c, V)
        if key in self._restr:
            return self._restr[key]
        if not V <= c.U:
            raise PreconditionError("restriction to a set outside the chart domain")
        B = self.S.cat
        T = self.p.ob(c.E)
        TX = B.space_of[T]
        inv = {x: t for t, x in c.anchor}
        sub_pts = [t for t in TX.points if t in {inv[x] for x in V}]
        sub = FiniteSpace(sub_pts, TX.subspace_opens(sub_pts), "sub")
        R, beta = self.S.rep_of(sub)
        iota = B.find(R, T, {r: beta[r] for r in B.carriers[R]})
        lift = self.cart_lift(iota, c.E)
        amap = c.amap
        out = (Chart(self.E.dom(lift), V, tuple(sorted((r, amap[beta[r]]) for r in B.carriers[R]))), lift)
        self._restr[key] = out
        return out

    def transition(self, c1: Chart, c2: Chart):
        """Base arrow a2⁻¹∘a1 between charts over the same set, or None."""
        T1, T2 = self.p.ob(c1.E), self.p.ob(c2.E)
        inv2 = {x: t for t, x in c2.anchor}
        return self.S.cat.find(T1, T2, {t: inv2[x] for t, x in c1.anchor})

    def compatible(self, c1: Chart, c2: Chart) -> bool:
        W = c1.U & c2.U
        if not W:
            return True
        r1, _ = self.restrict(c1, W)
        r2, _ = self.restrict(c2, W)
        t = self.transition(r1, r2)
        if t is None:
            return False
        E = self.E
        for m in E.hom(r1.E, r2.E):
            if self.p.mor(m) == t and E.inverse(m) is not None:
                return True
        return False

    def all_charts(self, X: FiniteSpace) -> list:
        out = []
        for U in X.opens:
            if not U:
                continue
            sub = FiniteSpace(sorted(U), X.subspace_opens(U), "sub")
            T, h = self.S.rep_of(sub)
            TX = self.S.cat.space_of[T]
            for perm in itertools.permutations(sorted(U)):
                fn = dict(zip(TX.points, perm))
                if {frozenset(fn[t] for t in V) for V in TX.opens} != set(sub.opens):
                    continue
                for e in self.over(T):
                    out.append(Chart(e, U, tuple(sorted(fn.items()))))
        return out


def check_atlas(L: LocalStructure, A: Atlas) -> Verdict:
    for c in A.charts:
        if c.E not in L.E.objects:
            raise PreconditionError(f"chart references unknown object {c.E}")
        if not A.X.is_open(c.U):
            return Verdict(False, "not-open", {"chart": repr(c)})
    if frozenset().union(*[c.U for c in A.charts]) != frozenset(A.X.points):
        return Verdict(False, "coverage", {})
    for c1, c2 in itertools.combinations(sorted(A.charts, key=repr), 2):
        if not L.compatible(c1, c2):
            return Verdict(False, "incompatible", {"pair": [repr(c1), repr(c2)]})
    return Verdict(True)


def atlases_equivalent(L: LocalStructure, A: Atlas, A2: Atlas) -> bool:
    if A.X is not A2.X:
        raise PreconditionError("atlases on different carriers")
    return check_atlas(L, Atlas(A.X, A.charts | A2.charts)).ok


@dataclass
class MaximalAtlas:
    atlas: Atlas | None
    extensions: list = field(default_factory=list)

    @property
    def unique(self) -> bool:
        return self.atlas is not None


def _compat_graph(L, charts):
    G = nx.Graph()
    G.add_nodes_from(charts)
    for a, b in itertools.combinations(charts, 2):
        if L.compatible(a, b):
            G.add_edge(a, b)
    return G


def maximal_atlas(L: LocalStructure, A: Atlas) -> MaximalAtlas:
    """Adjoin every chart compatible with all of A; report all maximal extensions when they clash."""
    cands = [c for c in L.all_charts(A.X) if all(L.compatible(c, a) for a in A.charts)]
    cands = sorted(set(cands) | set(A.charts), key=repr)
    if all(L.compatible(a, b) for a, b in itertools.combinations(cands, 2)):
        return MaximalAtlas(Atlas(A.X, frozenset(cands)), [Atlas(A.X, frozenset(cands))])
    G = _compat_graph(L, cands)
    exts = sorted((frozenset(q) for q in nx.find_cliques(G) if set(A.charts) <= set(q)),
                  key=lambda s: sorted(map(repr, s)))
    return MaximalAtlas(None, [Atlas(A.X, q) for q in exts])


def maximal_atlases(L: LocalStructure, X: FiniteSpace) -> list:
    """Every maximal compatible chart family covering X."""
    pts = frozenset(X.points)
    if not pts:
        # the empty atlas covers the empty space
        return [Atlas(X, frozenset())]
    charts = sorted(L.all_charts(X), key=repr)
    G = _compat_graph(L, charts)
    out = []
    for q in nx.find_cliques(G):
        if frozenset().union(*[c.U for c in q]) == pts:
            out.append(frozenset(q))
    return [Atlas(X, q) for q in sorted(out, key=lambda s: sorted(map(repr, s)))]


# -- E-manifolds ------------------------------------------------------------

def local_lift(L: LocalStructure, c: Chart, d: Chart, f: dict, W):
    """An E-arrow over the chart representation of f on W ⊆ c.U ∩ f⁻¹(d.U), or None."""
    r, _ = L.restrict(c, W)
    inv = {x: t for t, x in d.anchor}
    B = L.S.cat
    g = B.find(L.p.ob(r.E), L.p.ob(d.E), {t: inv[f[x]] for t, x in r.anchor})
    if g is None:
        return None
    for m in L.E.hom(r.E, d.E):
        if L.p.mor(m) == g:
            return m
    return None


def is_eman_arrow(L: LocalStructure, A: Atlas, A2: Atlas, f: dict) -> bool:
    """At each point some pair of charts represents f on the minimal neighbourhood by an E-arrow."""
    X = A.X
    for x in X.points:
        Mx = X.minimal_open(x)
        if not any(local_lift(L, c, d, f, Mx) is not None
                   for c in A.charts if x in c.U
                   for d in A2.charts if f[x] in d.U):
            return False
    return True


def build_eman(L: LocalStructure, carriers, name="EMan"):
    """Objects (X, maximal atlas); arrows continuous maps that lift chart-wise.

    Returns (category, projection to the carriers' space category, atlas of each object).
    """
    base = space_category(list(carriers), "Carriers")
    objs, atlas_of = {}, {}
    for X in carriers:
        for k, A in enumerate(maximal_atlases(L, X)):
            nm = f"{X.name}#{k}"
            objs[nm] = tuple(X.points)
            atlas_of[nm] = A
    check_size(base, what="build_eman")

    def homs(a, b):
        A, A2 = atlas_of[a], atlas_of[b]
        X, Y = A.X, A2.X
        for fn in itertools.product(range(len(Y.points)), repeat=len(X.points)):
            f = {x: Y.points[i] for x, i in zip(X.points, fn)}
            if _continuous(X, Y, f) and is_eman_arrow(L, A, A2, f):
                yield fn

    cat = FunctionCategory(objs, homs, lambda a, b, fn: f"{a}>{b}:" + "".join(map(str, fn)), name)
    cat.atlas_of = atlas_of
    proj = Functor(cat, base, {o: atlas_of[o].X.name for o in cat.objects},
                   {m: base.find(atlas_of[cat.dom(m)].X.name, atlas_of[cat.cod(m)].X.name, cat.fn(m))
                    for m in cat.morphisms}, "proj")
    return cat, proj


def trivial_inclusion(L: LocalStructure, eman: FunctionCategory) -> Functor:
    """E -> E-Man sending e to its single-chart manifold; needs the representatives among the carriers."""
    B = L.S.cat
    omap = {}
    for e in L.E.objects:
        T = L.p.ob(e)
        chart = Chart(e, frozenset(B.carriers[T]), tuple((t, t) for t in B.carriers[T]))
        hits = [o for o, A in eman.atlas_of.items()
                if A.X.name == T and (chart in A.charts or not chart.U)]
        if len(hits) != 1:
            raise PreconditionError(f"object {e} has {len(hits)} single-chart manifolds")
        omap[e] = hits[0]
    mmap = {}
    for m in L.E.morphisms:
        a, b = omap[L.E.dom(m)], omap[L.E.cod(m)]
        f = eman.find(a, b, B.fn(L.p.mor(m)))
        if f is None:
            raise PreconditionError(f"arrow {m} is not an E-manifold arrow")
        mmap[m] = f
    return Functor(L.E, eman, omap, mmap, "triv")


# -- locality of a candidate (explicit bullets, maximality relative to an ambient) ----

def _object_local(q: Functor, d, t: Pretopology, image) -> dict | None:
    """A covering of q(d) along which all cartesian lifts can start in the image; None if absent."""
    D = q.src
    for cov in t.coverings[q.ob(d)]:
        choice = {}
        for u in sorted(cov):
            ls = [l for l in lifts(q, u, d, CART) if D.dom(l) in image]
            if not ls:
                break
            choice[u] = ls
        else:
            return choice
    return None


def _arrow_local(q: Functor, phi, t: Pretopology, image_obj, image_mor) -> bool:
    D, B = q.src, q.dst
    d, d2 = D.dom(phi), D.cod(phi)
    f = q.mor(phi)
    for cov in t.coverings[q.ob(d)]:
        for cov2 in t.coverings[q.ob(d2)]:
            ok_all = True
            for u in sorted(cov):
                found = False
                for lu in lifts(q, u, d, CART):
                    if D.dom(lu) not in image_obj:
                        continue
                    for v in cov2:
                        for lv in lifts(q, v, d2, CART):
                            if D.dom(lv) not in image_obj:
                                continue
                            for g in B.hom(B.dom(u), B.dom(v)):
                                if B.compose(v, g) != B.compose(f, u):
                                    continue
                                Phi = unique_filler(q, lv, D.compose(phi, lu), g, CART)
                                if Phi in image_mor:
                                    found = True
                                    break
                            if found:
                                break
                        if found:
                            break
                    if found:
                        break
                if not found:
                    ok_all = False
                    break
            if ok_all:
                return True
    return False


def verify_locality(q: Functor, J: Functor, t: Pretopology, ambient=None) -> dict:
    """Objects and arrows locally in the image of J: E -> D; maximality only relative to ``ambient``.

    ``ambient`` is (q2: D2 -> B, K: D -> D2) with q2∘K = q.
    """
    D = q.src
    image_obj = {J.ob(e) for e in J.src.objects}
    image_mor = {J.mor(m) for m in J.src.morphisms}
    out = {"objectsLocal": True, "arrowsLocal": True, "maximalInAmbient": None, "witnesses": {}}
    for d in D.objects:
        if _object_local(q, d, t, image_obj) is None:
            out["objectsLocal"] = False
            out["witnesses"]["object"] = d
            break
    for phi in D.morphisms:
        if not _arrow_local(q, phi, t, image_obj, image_mor):
            out["arrowsLocal"] = False
            out["witnesses"]["arrow"] = phi
            break
    if ambient is not None:
        q2, K = ambient
        D2 = q2.src
        img2_obj = {K.ob(x) for x in image_obj}
        img2_mor = {K.mor(m) for m in image_mor}
        inside = {K.ob(d) for d in D.objects}
        inside_m = {K.mor(m) for m in D.morphisms}
        out["maximalInAmbient"] = True
        for x in D2.objects:
            if x not in inside and _object_local(q2, x, t, img2_obj) is not None:
                out["maximalInAmbient"] = False
                out["witnesses"]["ambientObject"] = x
                break
        if out["maximalInAmbient"]:
            for m in D2.morphisms:
                if m in inside_m or D2.dom(m) not in inside or D2.cod(m) not in inside:
                    continue
                if _arrow_local(q2, m, t, img2_obj, img2_mor):
                    out["maximalInAmbient"] = False
                    out["witnesses"]["ambientArrow"] = m
                    break
    return out


__all__ = ["space_category", "canonical_form", "all_finite_spaces", "SpaceSkeleton", "Chart", "Atlas",
           "LocalStructure", "check_atlas", "atlases_equivalent", "MaximalAtlas", "maximal_atlas",
           "maximal_atlases", "local_lift", "is_eman_arrow", "build_eman", "trivial_inclusion",
           "verify_locality"]
