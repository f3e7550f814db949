"""Descent data over sieves, prestack/stack flags, and the manifold construction from a stack."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import PreconditionError
from .fibrations import fiber, free_fibration
from .fincat import Functor, analyze_functor, full_subcategory
from .fincat.ops import _pair_category, isomorphisms
from .grothendieck import CONTRA, Pseudofunctor, grothendieck
from .sites import Topology, into


@dataclass(frozen=True)
class DescentDatum:
    sieve: tuple          # sorted members
    objects: tuple        # x_s, aligned with sieve
    transitions: tuple    # ((s, h), theta) sorted; theta: F(h)(x_s) -> x_{s∘h}

    def x(self, s):
        return self.objects[self.sieve.index(s)]

    def theta(self, s, h):
        return dict(self.transitions)[(s, h)]


def _factorizations(B, members):
    return [(s, h) for s in members for h in into(B, B.dom(s))]


def descent_data(S, F: Pseudofunctor) -> list:
    """Every descent datum for F on the sieve S (exhaustive backtracking)."""
    if F.variance != CONTRA:
        raise PreconditionError("descent data need a contravariant pseudofunctor")
    B = F.base
    mem = tuple(sorted(S))
    pairs = _factorizations(B, mem)
    out = []
    for xs in itertools.product(*[F.values[B.dom(s)].objects for s in mem]):
        x = dict(zip(mem, xs))
        cands = []
        for s, h in pairs:
            V = F.values[B.dom(h)]
            src, dst = F.act(h, x[s]), x[B.compose(s, h)]
            isos = [m for m in V.hom(src, dst) if V.inverse(m) is not None]
            if B.is_identity(h):
                # unit condition pins theta down
                isos = [m for m in isos if V.compose(m, F.id_iso[B.dom(s)][x[s]]) == V.identity(x[s])]
            cands.append(isos)
        if any(not c for c in cands):
            continue
        index = {p: i for i, p in enumerate(pairs)}
        triples = [(s, h, k) for s, h in pairs for k in into(B, B.dom(h))]
        by_last = {}
        for s, h, k in triples:
            need = [index[(s, B.compose(h, k))], index[(B.compose(s, h), k)], index[(s, h)]]
            by_last.setdefault(max(need), []).append((s, h, k))
        cur = [None] * len(pairs)

        def ok(s, h, k):
            V = F.values[B.dom(k)]
            lhs = V.compose(cur[index[(s, B.compose(h, k))]], F.comp_iso[(h, k)][x[s]])
            rhs = V.compose(cur[index[(B.compose(s, h), k)]], F.actm(k, cur[index[(s, h)]]))
            return lhs == rhs

        def go(i):
            if i == len(pairs):
                out.append(DescentDatum(mem, xs, tuple(sorted(zip(pairs, cur)))))
                return
            for th in cands[i]:
                cur[i] = th
                if all(ok(*t) for t in by_last.get(i, ())):
                    go(i + 1)
            cur[i] = None

        go(0)
    return out


def descent_category(S, F: Pseudofunctor, name: str = ""):
    """Hom(S, F): descent data and componentwise morphisms compatible with the transitions."""
    B = F.base
    data = descent_data(S, F)
    objs = [f"D{i}" for i in range(len(data))]
    info = dict(zip(objs, data))
    mem = tuple(sorted(S))
    pairs = _factorizations(B, mem)
    morphs, dom_of, cod_of, ident = [], {}, {}, {}
    for a in objs:
        for b in objs:
            da, db = info[a], info[b]
            homs = [F.values[B.dom(s)].hom(da.x(s), db.x(s)) for s in mem]
            for comps in itertools.product(*homs):
                u = dict(zip(mem, comps))
                good = True
                for s, h in pairs:
                    V = F.values[B.dom(h)]
                    sh = B.compose(s, h)
                    if V.compose(db.theta(s, h), F.actm(h, u[s])) != V.compose(u[sh], da.theta(s, h)):
                        good = False
                        break
                if not good:
                    continue
                mid = f"{a}>{b}:" + ",".join(comps)
                morphs.append((mid, (comps, a, b)))
                dom_of[mid], cod_of[mid] = a, b
                if a == b and all(F.values[B.dom(s)].is_identity(c) for s, c in zip(mem, comps)):
                    ident[a] = mid

    def comp_key(kg, kf):
        return (tuple(F.values[B.dom(s)].compose(g, f) for s, g, f in zip(mem, kg[0], kf[0])), kf[1], kg[2])

    cat = _pair_category(objs, dom_of, cod_of, morphs, comp_key, ident, name or "Desc")
    cat.datum = info
    cat.lookup = {d: o for o, d in info.items()}
    cat.components = {m: dict(zip(mem, k[0])) for m, k in morphs}
    return cat


def restriction(S, F: Pseudofunctor, b, desc=None) -> Functor:
    """F(b) -> Hom(S, F): e |-> (F(s)(e)) with transitions from the composition isos."""
    B = F.base
    desc = desc if desc is not None else descent_category(S, F)
    mem = tuple(sorted(S))
    if any(B.cod(s) != b for s in mem):
        raise PreconditionError("sieve is not on the given object")
    pairs = _factorizations(B, mem)
    V = F.values[b]
    omap = {}
    for e in V.objects:
        xs = tuple(F.act(s, e) for s in mem)
        th = tuple(sorted(((s, h), F.comp_iso[(s, h)][e]) for s, h in pairs))
        omap[e] = desc.lookup[DescentDatum(mem, xs, th)]
    mmap = {}
    for m in V.morphisms:
        comps = tuple(F.actm(s, m) for s in mem)
        a, c = omap[V.dom(m)], omap[V.cod(m)]
        mmap[m] = next(k for k in desc.hom(a, c) if tuple(desc.components[k][s] for s in mem) == comps)
    return Functor(V, desc, omap, mmap, f"res_{b}")


def stack_flags(F: Pseudofunctor, J: Topology) -> dict:
    """prestack: every restriction full and faithful; stack: every restriction an equivalence."""
    if F.variance != CONTRA:
        raise PreconditionError("stack flags need a contravariant pseudofunctor")
    out = {"prestack": True, "stack": True, "witness": None}
    for b in F.base.objects:
        for S in sorted(J.sieves[b], key=lambda s: (len(s), sorted(s))):
            a = analyze_functor(restriction(S, F, b), quasi_inverse=False)
            if not (a.full and a.faithful):
                out["prestack"] = out["stack"] = False
                out["witness"] = {"object": b, "sieve": sorted(S), "flags": a.flags()}
                return out
            if not a.essentially_surjective and out["stack"]:
                out["stack"] = False
                out["witness"] = {"object": b, "sieve": sorted(S), "flags": a.flags()}
    return out


def discrete_pseudofunctor(P) -> Pseudofunctor:
    """A set-valued presheaf seen as a strict pseudofunctor with discrete values."""
    from .fincat import make_category
    B = P.base
    names = {b: {x: f"e{i}" for i, x in enumerate(P.values[b])} for b in B.objects}
    values = {b: make_category(list(names[b].values()), name=f"{P.name}({b})") for b in B.objects}
    actions = {}
    for u in B.morphisms:
        src, dst = B.cod(u), B.dom(u)
        om = {names[src][x]: names[dst][P.restrict[u][x]] for x in P.values[src]}
        V, W = values[src], values[dst]
        actions[u] = Functor(V, W, om, {V.identity(o): W.identity(om[o]) for o in V.objects}, f"{P.name}({u})")
    return Pseudofunctor(B, CONTRA, values, actions, name=P.name)


# -- free fibration as a strict pseudofunctor --------------------------------

def free_pseudofunctor(F: Functor) -> Pseudofunctor:
    """Fibers of 1/F -> B with restriction by precomposition (strict)."""
    cat, dom, _ = free_fibration(F)
    B = F.dst
    info = cat.info
    values, actions = {}, {}
    for b in B.objects:
        values[b] = fiber(dom, b)
    by_key = {v: k for k, v in info.items()}
    mor_key = {}
    for m in cat.morphisms:
        u, v, s, t = cat.mor_info[m]
        mor_key[(u, v, s, t)] = m
    for f in B.morphisms:
        b2, b = B.dom(f), B.cod(f)

        def omove(o, f=f, b2=b2):
            _, c, phi = info[o]
            return by_key[(b2, c, B.compose(phi, f))]

        om = {o: omove(o) for o in values[b].objects}
        mm = {}
        for m in values[b].morphisms:
            u, v, s, t = cat.mor_info[m]
            mm[m] = mor_key[(B.identity(b2), v, om[s], om[t])]
        actions[f] = Functor(values[b], values[b2], om, mm, f"F({f})")
    return Pseudofunctor(B, CONTRA, values, actions, name=f"free({F.name or 'F'})")


@dataclass
class ManifoldConstruction:
    category: object
    projection: Functor
    inclusion: Functor | None
    free: tuple


def construct_manifolds(F: Functor, M, stacked: Pseudofunctor, J: Topology, embed: dict,
                        check: bool = True) -> ManifoldConstruction:
    """Full subcategory of the total category of ``stacked`` on objects that are locally M-charts.

    ``embed[b]`` is a functor from the fiber of 1/F over b into stacked(b),
    compatible with restriction.  An object (ℰ, B) is kept when some
    covering sieve S of B has every transport F(s)(ℰ) isomorphic to the
    image of a free object (dom s, c, m) with m in M.
    """
    if check and not stack_flags(stacked, J)["stack"]:
        raise PreconditionError("the supplied pseudofunctor is not a stack for this topology")
    free = free_fibration(F)
    cat1, _, i1 = free
    info = cat1.info
    M = set(M)
    total, p = grothendieck(stacked, check=check)
    B = F.dst
    keep = []
    for o in total.objects:
        e, b = total.ob_info[o]
        for S in sorted(J.sieves[b], key=lambda s: (len(s), sorted(s))):
            if all(_is_chart(stacked, embed, info, M, s, e) for s in S):
                keep.append(o)
                break
    sub = full_subcategory(total, keep, "Man")
    proj = Functor(sub, B, {o: p.ob(o) for o in sub.objects}, {m: p.mor(m) for m in sub.morphisms}, "p_Man")
    inc = _free_inclusion(cat1, stacked, embed, total, sub)
    return ManifoldConstruction(sub, proj, inc, free)


def _is_chart(stacked, embed, info, M, s, e) -> bool:
    B = stacked.base
    b2 = B.dom(s)
    moved = stacked.act(s, e)
    V = stacked.values[b2]
    emb = embed[b2]
    for fo in emb.src.objects:
        _, _, m = info[fo]
        if m in M and (emb.ob(fo) == moved or isomorphisms(V, emb.ob(fo), moved)):
            return True
    return False


def _free_inclusion(cat1, stacked, embed, total, sub):
    """1/F -> Man on objects, when every free object lands in the kept part."""
    B = stacked.base
    info = cat1.info
    omap = {}
    for o in cat1.objects:
        b = info[o][0]
        t = f"({embed[b].ob(o)}|{b})"
        if t not in sub.objects:
            return None
        omap[o] = t
    mmap = {}
    for m in cat1.morphisms:
        u, v, s, t = cat1.mor_info[m]
        b, b2 = info[s][0], info[t][0]
        # vertical part: (b, c, phi) -> u*(b2, c2, phi2) = (b, c2, phi2∘u)
        V = stacked.values[b]
        src = embed[b].ob(s)
        tgt_free = next(k for k, val in info.items() if val == (b, info[t][1], B.compose(info[t][2], u)))
        vert_free = next(k for k in embed[b].src.hom(s, tgt_free) if cat1.mor_info[k][1] == v)
        h = embed[b].mor(vert_free)
        if stacked.act(u, embed[b2].ob(t)) != embed[b].ob(tgt_free):
            return None
        mid = f"({h}|{u}|{embed[b2].ob(t)})"
        if mid not in sub.morphisms or V.dom(h) != src:
            return None
        mmap[m] = mid
    return Functor(cat1, sub, omap, mmap, "incl")


__all__ = ["DescentDatum", "discrete_pseudofunctor", "descent_data", "descent_category", "restriction", "stack_flags",
           "free_pseudofunctor", "ManifoldConstruction", "construct_manifolds"]
