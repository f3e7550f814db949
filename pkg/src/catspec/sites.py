"""Pretopologies, sieves, generated topologies and sheaf conditions on finite sites."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import PreconditionError
from .fibrations import classify
from .fincat import FinCat, Functor, find_limits
from .guard import check_size
from .presheaf import SetPresheaf


@dataclass
class Verdict:
    ok: bool
    reason: str | None = None
    witness: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


class Pretopology:
    """Coverings per object, each a family (frozenset) of arrows into it."""

    def __init__(self, base: FinCat, coverings: dict, name: str = "tau"):
        self.base = base
        self.coverings = {b: [frozenset(c) for c in coverings.get(b, ())] for b in base.objects}
        self.name = name

    def is_covering(self, b, family) -> bool:
        return frozenset(family) in set(self.coverings[b])

    def members(self) -> set:
        return {f for cs in self.coverings.values() for c in cs for f in c}


def validate_pretopology(t: Pretopology) -> Verdict:
    C = t.base
    for b, cs in t.coverings.items():
        for c in cs:
            for f in c:
                if C.cod(f) != b:
                    return Verdict(False, "typing", {"object": b, "arrow": f})
    # isos are one-element coverings
    for f in C.morphisms:
        if C.inverse(f) is not None and not t.is_covering(C.cod(f), {f}):
            return Verdict(False, "isomorphisms", {"iso": f})
    # stability under pullback
    for b, cs in t.coverings.items():
        for c in cs:
            for g in C.morphisms:
                if C.cod(g) != b:
                    continue
                choices = []
                for f in sorted(c):
                    pbs = find_limits(C, "pullback", (f, g))
                    if not pbs:
                        return Verdict(False, "pullback-stability",
                                       {"covering": sorted(c), "arrow": g, "missing_pullback_of": f})
                    choices.append(sorted({w.legs[1] for w in pbs}))
                if not any(t.is_covering(C.dom(g), set(pick)) for pick in itertools.product(*choices)):
                    return Verdict(False, "pullback-stability", {"covering": sorted(c), "arrow": g})
    # composability
    for b, cs in t.coverings.items():
        for c in cs:
            fs = sorted(c)
            for pick in itertools.product(*[t.coverings[C.dom(f)] for f in fs]):
                comp = {C.compose(f, g) for f, sub in zip(fs, pick) for g in sub}
                if not t.is_covering(b, comp):
                    return Verdict(False, "composability",
                                   {"covering": fs, "refinements": [sorted(s) for s in pick]})
    return Verdict(True)


# -- sieves -------------------------------------------------------------------

def into(C: FinCat, b) -> list:
    return [C.morphisms[i] for i in C.into_i(C.oi(b)).tolist()]


def is_sieve(C: FinCat, b, S) -> bool:
    S = set(S)
    for s in S:
        if C.cod(s) != b:
            return False
        for h in into(C, C.dom(s)):
            if C.compose(s, h) not in S:
                return False
    return True


def generated_sieve(C: FinCat, b, family) -> frozenset:
    return frozenset(C.compose(f, h) for f in family for h in into(C, C.dom(f)))


def maximal_sieve(C: FinCat, b) -> frozenset:
    return frozenset(into(C, b))


def pullback_sieve(C: FinCat, f, S) -> frozenset:
    """h is in f*(S) iff f∘h is in S."""
    return frozenset(h for h in into(C, C.dom(f)) if C.compose(f, h) in S)


def all_sieves(C: FinCat, b) -> list:
    """Every right-closed set of arrows into b."""
    arrows = into(C, b)
    gen = {a: generated_sieve(C, b, [a]) for a in arrows}
    seen = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        cur = frontier.pop()
        for a in arrows:
            if a not in cur:
                nxt = cur | gen[a]
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
    return sorted(seen, key=lambda s: (len(s), sorted(s)))


class Topology:
    """Covering sieves per object."""

    def __init__(self, base: FinCat, sieves: dict, name: str = "J"):
        self.base = base
        self.sieves = {b: set(map(frozenset, sieves.get(b, ()))) for b in base.objects}
        self.name = name

    def covers(self, b, S) -> bool:
        return frozenset(S) in self.sieves[b]


def validate_topology(J: Topology) -> Verdict:
    """Maximal sieves, stability under inverse image, local character; exhaustively."""
    C = J.base
    lattice = {b: all_sieves(C, b) for b in C.objects}
    for b in C.objects:
        for S in J.sieves[b]:
            if not is_sieve(C, b, S):
                return Verdict(False, "not-a-sieve", {"object": b, "sieve": sorted(S)})
        if maximal_sieve(C, b) not in J.sieves[b]:
            return Verdict(False, "maximal", {"object": b})
    for f in C.morphisms:
        for S in J.sieves[C.cod(f)]:
            if pullback_sieve(C, f, S) not in J.sieves[C.dom(f)]:
                return Verdict(False, "stability", {"arrow": f, "sieve": sorted(S)})
    for b in C.objects:
        for S in J.sieves[b]:
            for R in lattice[b]:
                if R in J.sieves[b]:
                    continue
                if all(pullback_sieve(C, f, R) in J.sieves[C.dom(f)] for f in S):
                    return Verdict(False, "local-character",
                                   {"object": b, "covering": sorted(S), "sieve": sorted(R)})
    return Verdict(True)


def generate_topology(t: Pretopology) -> Topology:
    """Least topology in which every covering generates a covering sieve."""
    C = t.base
    check_size(C, what="generate_topology")
    lattice = {b: all_sieves(C, b) for b in C.objects}
    J = {b: {maximal_sieve(C, b)} for b in C.objects}
    for b, cs in t.coverings.items():
        for c in cs:
            J[b].add(generated_sieve(C, b, c))
    changed = True
    while changed:
        changed = False
        for f in C.morphisms:
            for S in list(J[C.cod(f)]):
                R = pullback_sieve(C, f, S)
                if R not in J[C.dom(f)]:
                    J[C.dom(f)].add(R)
                    changed = True
        for b in C.objects:
            for R in lattice[b]:
                if R in J[b]:
                    continue
                if any(all(pullback_sieve(C, f, R) in J[C.dom(f)] for f in S) for S in list(J[b])):
                    J[b].add(R)
                    changed = True
    return Topology(C, J, f"J({t.name})")


def maximal_topology_only(C: FinCat) -> Topology:
    return Topology(C, {b: [maximal_sieve(C, b)] for b in C.objects}, "Jmax")


def is_local(p: Functor, t: Pretopology):
    """Fibration with respect to all covering members."""
    c = classify(p, cls=sorted(t.members()))
    return c.fibration_wrt_class, c


# -- sheaf condition ------------------------------------------------------------

def matching_families(P: SetPresheaf, S) -> list:
    """All compatible families (x_s) over a sieve, as dicts."""
    C = P.base
    mem = sorted(S)
    links = []  # (i, j, h) with mem[i]∘h = mem[j]
    for i, s in enumerate(mem):
        for h in into(C, C.dom(s)):
            j = mem.index(C.compose(s, h))
            links.append((i, j, h))
    by_max = [[] for _ in mem]
    for i, j, h in links:
        by_max[max(i, j)].append((i, j, h))
    out, cur = [], [None] * len(mem)

    def go(k):
        if k == len(mem):
            out.append(dict(zip(mem, cur)))
            return
        for x in P.values[C.dom(mem[k])]:
            cur[k] = x
            if all(P.restrict[h][cur[i]] == cur[j] for i, j, h in by_max[k]):
                go(k + 1)
        cur[k] = None

    go(0)
    return out


def amalgamations(P: SetPresheaf, b, family: dict) -> list:
    return [x for x in P.values[b] if all(P.restrict[s][x] == v for s, v in family.items())]


def is_sheaf(P: SetPresheaf, J: Topology) -> Verdict:
    for b in P.base.objects:
        for S in sorted(J.sieves[b], key=lambda s: (len(s), sorted(s))):
            for fam in matching_families(P, S):
                am = amalgamations(P, b, fam)
                if len(am) != 1:
                    return Verdict(False, "gluing", {"object": b, "sieve": sorted(S),
                                                     "family": {k: _plain(v) for k, v in fam.items()},
                                                     "amalgamations": len(am)})
    return Verdict(True)


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


# -- Cat-valued presheaves (strict) -------------------------------------------

def _require_strict(F):
    from .grothendieck import CONTRA
    if F.variance != CONTRA:
        raise PreconditionError("sheaf condition needs a contravariant pseudofunctor")
    checks = [(F.values[b], c) for b, c in F.id_iso.items()]
    checks += [(F._target_value(g, f), c) for (g, f), c in F.comp_iso.items()]
    for V, comps in checks:
        if not all(V.is_identity(m) for m in comps.values()):
            raise PreconditionError("object/morphism parts need a strict pseudofunctor")


def object_part(F) -> SetPresheaf:
    _require_strict(F)
    B = F.base
    vals = {b: tuple(F.values[b].objects) for b in B.objects}
    res = {u: {e: F.act(u, e) for e in vals[B.cod(u)]} for u in B.morphisms}
    return SetPresheaf(B, vals, res, f"ob({F.name})")


def morphism_part(F) -> SetPresheaf:
    _require_strict(F)
    B = F.base
    vals = {b: tuple(F.values[b].morphisms) for b in B.objects}
    res = {u: {m: F.actm(u, m) for m in vals[B.cod(u)]} for u in B.morphisms}
    return SetPresheaf(B, vals, res, f"mor({F.name})")


def is_sheaf_of_categories(F, J: Topology) -> dict:
    return {"objects": is_sheaf(object_part(F), J).ok, "morphisms": is_sheaf(morphism_part(F), J).ok}
