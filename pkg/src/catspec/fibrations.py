"""Cartesian lifts, fibrations, fibers, transport and free fibrations.

A morphism phi: E' -> E over f = p(phi) is cartesian when, for every object
E'', the map

    hom(E'', E') -> {(g, f') : g in hom_B(pE'', pE'), f' in hom(E'', E), f∘g = p(f')}
    k |-> (p(k), phi∘k)

is a bijection.  We decide this by checking that both sides have the same
size for every E'' and that the map is injective, which vectorises well.
The cocartesian case is the mirror image.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CatspecError, PreconditionError, UnknownId
from .fincat import FinCat, Functor, Subcategory, comma_category, pullback_category
from .fincat.ops import ValidationReport
from .guard import check_size

CART, COCART = "cart", "cocart"


def _check_direction(direction):
    if direction not in (CART, COCART):
        raise PreconditionError(f"direction must be 'cart' or 'cocart', not {direction!r}")


class _Ctx:
    """Per-functor cached index data used by the mask computation."""

    def __init__(self, p: Functor, direction: str):
        self.p = p
        self.E, self.B = p.src, p.dst
        self.pm, self.po = p.mm_i, p.om_i
        self.cart = direction == CART
        self.nE = len(self.E.objects)
        self.nB = len(self.B.morphisms)
        self._counts = {}
        self._need = {}

    def side(self, obj):
        # morphisms k with the free endpoint at obj (cod for cart, dom for cocart)
        return self.E.into_i(obj) if self.cart else self.E.out_i(obj)

    def free_end(self, ks):
        return self.E.dom_i[ks] if self.cart else self.E.cod_i[ks]

    def counts(self, obj):
        r = self._counts.get(obj)
        if r is None:
            r = np.bincount(self.free_end(self.side(obj)), minlength=self.nE)
            self._counts[obj] = r
        return r

    def need(self, anchor, f):
        """Size of the pair set, per E'', for lifts of f anchored at ``anchor``."""
        key = (anchor, f)
        r = self._need.get(key)
        if r is None:
            E, B = self.E, self.B
            Fp = self.side(anchor)
            if self.cart:
                Gb = B.into_i(int(B.dom_i[f]))
                vals = B.comp_i(f, Gb)
            else:
                Gb = B.out_i(int(B.cod_i[f]))
                vals = B.comp_i(Gb, f)
            cnt = np.bincount(vals[vals >= 0], minlength=self.nB)
            r = np.bincount(self.free_end(Fp), weights=cnt[self.pm[Fp]], minlength=self.nE)
            r = r.astype(np.int64)
            self._need[key] = r
        return r

    def injective(self, phi, other):
        E = self.E
        G = self.side(other)
        if len(G) <= 1:
            return True
        C = E.comp_i(phi, G) if self.cart else E.comp_i(G, phi)
        key = self.pm[G] * len(E.morphisms) + C
        return len(np.unique(key)) == len(G)


def cartesian_mask(p: Functor, direction: str = CART, morphisms=None) -> np.ndarray:
    """Boolean array over total-category morphisms: is each one (co)cartesian?

    With ``morphisms`` (index array) only those entries are decided; the rest
    are False.
    """
    _check_direction(direction)
    check_size(p.src, p.dst)
    ctx = _Ctx(p, direction)
    E = p.src
    n = len(E.morphisms)
    mask = np.zeros(n, dtype=bool)
    idx = np.arange(n) if morphisms is None else np.asarray(morphisms, dtype=np.int64)
    if not len(idx):
        return mask
    # other = the endpoint whose hom-set is quantified; anchor = the fixed one
    other = E.dom_i[idx] if ctx.cart else E.cod_i[idx]
    anchor = E.cod_i[idx] if ctx.cart else E.dom_i[idx]
    fs = ctx.pm[idx]
    order = np.lexsort((fs, anchor, other))
    idx, other, anchor, fs = idx[order], other[order], anchor[order], fs[order]
    keys = (other * ctx.nE + anchor) * ctx.nB + fs
    cuts = np.flatnonzero(np.diff(keys)) + 1
    starts = np.concatenate(([0], cuts))
    ends = np.concatenate((cuts, [len(idx)]))
    for s, e in zip(starts.tolist(), ends.tolist()):
        o, a, f = int(other[s]), int(anchor[s]), int(fs[s])
        if not np.array_equal(ctx.counts(o), ctx.need(a, f)):
            continue
        for phi in idx[s:e].tolist():
            if ctx.injective(phi, o):
                mask[phi] = True
    return mask


@dataclass
class CartesianResult:
    ok: bool
    witness: dict | None = None

    def __bool__(self):
        return self.ok


def fillers(p: Functor, phi: str, psi: str, g: str, direction: str = CART) -> list:
    """All k over g with phi∘k = psi (cart) or k∘phi = psi (cocart)."""
    E = p.src
    if direction == CART:
        cands = E.hom(E.dom(psi), E.dom(phi))
        return [k for k in cands if p.mor(k) == g and E.compose(phi, k) == psi]
    cands = E.hom(E.cod(phi), E.cod(psi))
    return [k for k in cands if p.mor(k) == g and E.compose(k, phi) == psi]


def _first_counterexample(p: Functor, phi: str, direction: str):
    E, B = p.src, p.dst
    f = p.mor(phi)
    if direction == CART:
        anchor = E.cod(phi)
        for x in E.objects:
            for fp in E.hom(x, anchor):
                for g in B.hom(p.ob(x), p.ob(E.dom(phi))):
                    if B.compose(f, g) == p.mor(fp):
                        ks = fillers(p, phi, fp, g, CART)
                        if len(ks) != 1:
                            return {"f_prime": fp, "g": g, "fillers": ks}
    else:
        anchor = E.dom(phi)
        for x in E.objects:
            for fp in E.hom(anchor, x):
                for g in B.hom(p.ob(E.cod(phi)), p.ob(x)):
                    if B.compose(g, f) == p.mor(fp):
                        ks = fillers(p, phi, fp, g, COCART)
                        if len(ks) != 1:
                            return {"f_prime": fp, "g": g, "fillers": ks}
    return None


def is_cartesian(p: Functor, phi: str, direction: str = CART) -> CartesianResult:
    _check_direction(direction)
    i = p.src.mi(phi)
    ok = bool(cartesian_mask(p, direction, [i])[i])
    if ok:
        return CartesianResult(True)
    return CartesianResult(False, _first_counterexample(p, phi, direction))


def is_cartesian_bruteforce(p: Functor, phi: str, direction: str = CART) -> bool:
    """Literal quantifier evaluation; slow, used as an oracle."""
    return _first_counterexample(p, phi, direction) is None


def lifts(p: Functor, f: str, anchor: str, direction: str = CART, mask=None) -> list:
    """All (co)cartesian morphisms over f ending (cart) or starting (cocart) at anchor."""
    _check_direction(direction)
    E, B = p.src, p.dst
    fi, ai = B.mi(f), E.oi(anchor)
    end = B.cod_i[fi] if direction == CART else B.dom_i[fi]
    if p.om_i[ai] != end:
        raise PreconditionError(f"{f} does not {'end' if direction == CART else 'start'} at p({anchor})")
    side = E.into_i(ai) if direction == CART else E.out_i(ai)
    cands = side[p.mm_i[side] == fi]
    if mask is None:
        mask = cartesian_mask(p, direction, cands)
    return [E.morphisms[k] for k in cands.tolist() if mask[k]]


@dataclass
class Classification:
    fibration: bool
    cofibration: bool
    fibration_wrt_class: bool | None = None
    witnesses: dict = field(default_factory=dict)

    @property
    def bifibration(self):
        return self.fibration and self.cofibration

    def flags(self):
        d = {"fibration": self.fibration, "cofibration": self.cofibration,
             "bifibration": self.bifibration}
        if self.fibration_wrt_class is not None:
            d["fibrationWrtClass"] = self.fibration_wrt_class
        return d


def _missing_lift(p: Functor, direction: str, mask, arrows=None):
    """First (f, E) with no (co)cartesian lift, or None."""
    E, B = p.src, p.dst
    have = set()
    pm = p.mm_i
    ends = E.cod_i if direction == CART else E.dom_i
    for k in np.flatnonzero(mask).tolist():
        have.add((int(pm[k]), int(ends[k])))
    by_base: dict = {}
    for x in range(len(E.objects)):
        by_base.setdefault(int(p.om_i[x]), []).append(x)
    fs = range(len(B.morphisms)) if arrows is None else [B.mi(a) for a in arrows]
    for f in fs:
        end = int(B.cod_i[f] if direction == CART else B.dom_i[f])
        for x in by_base.get(end, ()):
            if (f, x) not in have:
                return {"arrow": B.morphisms[f], "anchor": E.objects[x]}
    return None


def classify(p: Functor, cls=None, masks=None) -> Classification:
    """Decide fibration/cofibration (and fibration w.r.t. an arrow class)."""
    masks = masks or {}
    cm = masks.get(CART)
    if cm is None:
        cm = cartesian_mask(p, CART)
    com = masks.get(COCART)
    if com is None:
        com = cartesian_mask(p, COCART)
    w1 = _missing_lift(p, CART, cm)
    w2 = _missing_lift(p, COCART, com)
    res = Classification(w1 is None, w2 is None)
    if w1:
        res.witnesses["fibration"] = w1
    if w2:
        res.witnesses["cofibration"] = w2
    if cls is not None:
        w3 = _missing_lift(p, CART, cm, sorted(cls))
        res.fibration_wrt_class = w3 is None
        if w3:
            res.witnesses["fibrationWrtClass"] = w3
    return res


def fiber(p: Functor, b: str) -> Subcategory:
    """The subcategory of objects over b and morphisms over id_b."""
    E, B = p.src, p.dst
    bi = B.oi(b)
    cache = p.__dict__.setdefault("_fiber_cache", {})
    if b in cache:
        return cache[b]
    objs = [E.objects[x] for x in np.flatnonzero(p.om_i == bi).tolist()]
    mors = [E.morphisms[m] for m in np.flatnonzero(p.mm_i == B.id_i[bi]).tolist()]
    sub = Subcategory(E, objs, mors, f"{E.name}_{b}")
    cache[b] = sub
    return sub


def vertical_isos_between(p: Functor, phi1: str, phi2: str) -> list:
    """Vertical isos k: dom phi1 -> dom phi2 with phi2∘k = phi1."""
    E = p.src
    out = []
    for k in E.hom(E.dom(phi1), E.dom(phi2)):
        if p.dst.is_identity(p.mor(k)):
            if E.compose(phi2, k) == phi1 and E.inverse(k) is not None:
                out.append(k)
    return out


class Cleavage:
    """Chosen (co)cartesian lift for each (base arrow, anchor object)."""

    def __init__(self, p: Functor, direction: str, lift: dict):
        self.p = p
        self.direction = direction
        self.lift = dict(lift)

    def __getitem__(self, key):
        try:
            return self.lift[key]
        except KeyError:
            raise PreconditionError(f"cleavage has no lift for arrow {key[0]} at {key[1]}") from None

    def moved(self, f: str, e: str) -> str:
        """Cart_f(e) (cart) or the pushed object (cocart)."""
        phi = self[(f, e)]
        return self.p.src.dom(phi) if self.direction == CART else self.p.src.cod(phi)

    def validate(self) -> ValidationReport:
        rep = ValidationReport()
        E, B = self.p.src, self.p.dst
        idx = [E.mi(m) for m in self.lift.values()]
        mask = cartesian_mask(self.p, self.direction, idx)
        for (f, e), phi in self.lift.items():
            if self.p.mor(phi) != f:
                rep.add("lift-not-over-arrow", arrow=f, anchor=e, lift=phi)
            elif not mask[E.mi(phi)]:
                rep.add("lift-not-cartesian", arrow=f, anchor=e, lift=phi)
        for e in E.objects:
            if (B.identity(self.p.ob(e)), e) not in self.lift:
                rep.add("missing-identity-lift", anchor=e)
        return rep


def unique_filler(p: Functor, phi: str, psi: str, g: str, direction: str) -> str:
    ks = fillers(p, phi, psi, g, direction)
    if len(ks) != 1:
        raise CatspecError(f"expected a unique filler through {phi}, found {len(ks)}")
    return ks[0]


def transport(p: Functor, clv: Cleavage, f: str) -> Functor:
    """Cart_f between fibers, built from unique vertical fillers."""
    E, B = p.src, p.dst
    direction = clv.direction
    if direction == CART:
        src_b, dst_b = B.cod(f), B.dom(f)
    else:
        src_b, dst_b = B.dom(f), B.cod(f)
    Fs, Ft = fiber(p, src_b), fiber(p, dst_b)
    idb = B.identity(dst_b)
    omap = {e: clv.moved(f, e) for e in Fs.objects}
    mmap = {}
    for g in Fs.morphisms:
        e1, e2 = Fs.dom(g), Fs.cod(g)
        l1, l2 = clv[(f, e1)], clv[(f, e2)]
        if direction == CART:
            mmap[g] = unique_filler(p, l2, E.compose(g, l1), idb, CART)
        else:
            mmap[g] = unique_filler(p, l1, E.compose(l2, g), idb, COCART)
    return Functor(Fs, Ft, omap, mmap, f"Cart_{f}")


def free_fibration(F: Functor):
    """1/F with its domain projection and the embedding i of F's source.

    Returns (oneOverF, dom, i) with dom∘i = F.
    """
    B = F.dst
    idB = Functor(B, B, {o: o for o in B.objects}, {m: m for m in B.morphisms}, "id")
    cat, dom, _ = comma_category(idB, F, name=f"1/{F.name or 'F'}")
    C = F.src
    omap = {c: f"({F.ob(c)}|{c}|{B.identity(F.ob(c))})" for c in C.objects}
    mmap = {}
    for f in C.morphisms:
        a, b = C.dom(f), C.cod(f)
        mmap[f] = f"({F.mor(f)}|{f}|{B.identity(F.ob(a))}|{B.identity(F.ob(b))})"
    i = Functor(C, cat, omap, mmap, "i")
    dom.name = "dom"
    return cat, dom, i


def pullback_fibration(F: Functor, p: Functor):
    """Pullback of p along F: returns (category, p', F̄)."""
    if F.dst is not p.dst:
        raise PreconditionError("pullback needs F and p over the same base")
    return pullback_category(F, p, name=f"{F.name or 'F'}*{p.src.name}")
