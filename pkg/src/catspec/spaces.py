"""Finite topological spaces: opens as a site, germs, étale spaces, local homeomorphisms."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import CatspecError, PreconditionError
from .fincat import FunctionCategory, TableCategory
from .presheaf import SetPresheaf
from .sites import Pretopology, Topology, generate_topology, matching_families, pullback_sieve


def open_name(U) -> str:
    return "U_" + "_".join(sorted(U))


class FiniteSpace:
    def __init__(self, points, opens, name: str = "X"):
        self.points = tuple(points)
        self.opens = sorted({frozenset(U) for U in opens}, key=lambda U: (len(U), sorted(U)))
        self.name = name
        self._cat = {}

    def validate(self) -> bool:
        ops = set(self.opens)
        if frozenset() not in ops or frozenset(self.points) not in ops:
            return False
        return all(U | V in ops and U & V in ops for U in ops for V in ops)

    @classmethod
    def from_basis(cls, points, basis, name="X"):
        opens = {frozenset(), frozenset(points)}
        basis = [frozenset(b) for b in basis]
        inter = set(basis)
        changed = True
        while changed:
            changed = False
            for a, b in itertools.product(list(inter), repeat=2):
                if a & b not in inter:
                    inter.add(a & b)
                    changed = True
        inter = list(inter)
        for r in range(len(inter) + 1):
            for combo in itertools.combinations(inter, r):
                opens.add(frozenset().union(*combo))
        return cls(points, opens, name)

    def is_open(self, S) -> bool:
        return frozenset(S) in set(self.opens)

    def minimal_open(self, x) -> frozenset:
        U = frozenset(self.points)
        for V in self.opens:
            if x in V:
                U &= V
        return U

    def subspace_opens(self, U) -> list:
        U = frozenset(U)
        return sorted({V & U for V in self.opens}, key=lambda V: (len(V), sorted(V)))

    def category(self, nonempty: bool = False) -> TableCategory:
        """Opens ordered by inclusion; arrows ``inc_<V>_in_<U>``."""
        if nonempty in self._cat:
            return self._cat[nonempty]
        opens = [U for U in self.opens if U or not nonempty]
        names = [open_name(U) for U in opens]
        arrows, ids, comp = {}, {}, {}
        for U in opens:
            ids[open_name(U)] = f"id_{open_name(U)}"
            arrows[ids[open_name(U)]] = (open_name(U), open_name(U))

        def inc(V, U):
            return ids[open_name(U)] if V == U else f"inc_{open_name(V)}_in_{open_name(U)}"

        for V in opens:
            for U in opens:
                if V < U:
                    arrows[inc(V, U)] = (open_name(V), open_name(U))
        for W in opens:
            for V in opens:
                for U in opens:
                    if W <= V <= U:
                        comp[(inc(V, U), inc(W, V))] = inc(W, U)
        cat = TableCategory(names, arrows, ids, comp, f"Opens_{self.name}" + ("+" if nonempty else ""))
        cat.open_of = {open_name(U): U for U in opens}
        cat.inc = lambda V, U: inc(frozenset(V), frozenset(U))
        self._cat[nonempty] = cat
        return cat

    def open_cover_pretopology(self) -> Pretopology:
        C = self.category()
        cov = {}
        for U in self.opens:
            subs = [V for V in self.opens if V <= U]
            fams = []
            for r in range(len(subs) + 1):
                for combo in itertools.combinations(subs, r):
                    if frozenset().union(*combo) == U:
                        fams.append([C.inc(V, U) for V in combo])
            cov[open_name(U)] = fams
        return Pretopology(C, cov, f"open({self.name})")

    def topology(self) -> Topology:
        return generate_topology(self.open_cover_pretopology())

    def union_topology(self, nonempty: bool = True) -> Topology:
        """Sieves whose domains cover the open; usable without the empty open."""
        from .sites import all_sieves
        C = self.category(nonempty)
        J = {b: [S for S in all_sieves(C, b)
                 if frozenset().union(*[C.open_of[C.dom(s)] for s in S]) == C.open_of[b]]
             for b in C.objects}
        return Topology(C, J, f"cov({self.name})")

    def minimal_sieve(self, U, nonempty: bool = True) -> frozenset:
        """Generated by the minimal neighbourhoods of the points of U; the least covering sieve."""
        from .sites import generated_sieve
        C = self.category(nonempty)
        U = frozenset(U)
        return generated_sieve(C, open_name(U), {C.inc(self.minimal_open(x), U) for x in U})


def sierpinski() -> FiniteSpace:
    return FiniteSpace(["a", "b"], [[], ["a"], ["a", "b"]], "S")


def discrete(points, name="D") -> FiniteSpace:
    pts = list(points)
    opens = [c for r in range(len(pts) + 1) for c in itertools.combinations(pts, r)]
    return FiniteSpace(pts, opens, name)


def indiscrete(points, name="I") -> FiniteSpace:
    return FiniteSpace(points, [[], list(points)], name)


# -- function sheaves --------------------------------------------------------

def function_presheaf(X: FiniteSpace, allowed, name="P") -> SetPresheaf:
    """P(U) = functions U -> S accepted by ``allowed(U, s)``; sections are sorted (point, value) tuples."""
    C = X.category()
    values = {}
    for U in X.opens:
        pts = sorted(U)
        secs = []
        for vals in itertools.product(*[allowed.codomain for _ in pts]):
            s = tuple(zip(pts, vals))
            if allowed(U, s):
                secs.append(s)
        values[open_name(U)] = tuple(secs)
    restrict = {}
    for V in X.opens:
        for U in X.opens:
            if V <= U:
                m = C.inc(V, U)
                restrict[m] = {s: tuple(p for p in s if p[0] in V) for s in values[open_name(U)]}
    P = SetPresheaf(C, values, restrict, name)
    P.space = X
    return P


class _Rule:
    def __init__(self, codomain, pred):
        self.codomain = tuple(codomain)
        self.pred = pred

    def __call__(self, U, s):
        return self.pred(U, dict(s))


def all_functions_sheaf(X: FiniteSpace, values=(0, 1), name="Fun") -> SetPresheaf:
    return function_presheaf(X, _Rule(values, lambda U, s: True), name)


def continuous_functions_sheaf(X: FiniteSpace, Y: FiniteSpace, name="Cont") -> SetPresheaf:
    """Continuous maps U -> Y (U with the subspace topology)."""
    def ok(U, s):
        subs = X.subspace_opens(U)
        return all(frozenset(x for x in U if s[x] in W) in subs for W in Y.opens)
    return function_presheaf(X, _Rule(Y.points, ok), name)


def constant_presheaf_on(X: FiniteSpace, values=(0, 1), name="Const") -> SetPresheaf:
    """Globally constant functions (including on ∅, which gets one empty section)."""
    return function_presheaf(X, _Rule(values, lambda U, s: len(set(s.values())) <= 1), name)


def locally_constant_sheaf(X: FiniteSpace, values=(0, 1), name="LC") -> SetPresheaf:
    """Functions constant on the minimal open neighbourhood of each point."""
    def ok(U, s):
        return all(s[y] == s[x] for x in U for y in X.minimal_open(x))
    return function_presheaf(X, _Rule(values, ok), name)


# -- brute-force gluing oracle ------------------------------------------------

def gluing_oracle(P: SetPresheaf, X: FiniteSpace) -> bool:
    """Sheaf condition over open covers, comparing sections on pairwise overlaps."""
    C = X.category()
    for U in X.opens:
        subs = [V for V in X.opens if V <= U]
        for r in range(len(subs) + 1):
            for cover in itertools.combinations(subs, r):
                if frozenset().union(*cover) != U:
                    continue
                pools = [P.values[open_name(V)] for V in cover]
                for tup in itertools.product(*pools):
                    agree = True
                    for (V, s), (W, t) in itertools.combinations(zip(cover, tup), 2):
                        I = V & W
                        if P.restrict[C.inc(I, V)][s] != P.restrict[C.inc(I, W)][t]:
                            agree = False
                            break
                    if not agree:
                        continue
                    glued = [x for x in P.values[open_name(U)]
                             if all(P.restrict[C.inc(V, U)][x] == s for V, s in zip(cover, tup))]
                    if len(glued) != 1:
                        return False
    return True


# -- germs --------------------------------------------------------------------

@dataclass
class Germs:
    point: str
    classes: list                  # representatives (open, section)
    class_of: dict                 # (open, section) -> index
    minimal: frozenset
    from_minimal: dict = field(default_factory=dict)   # section over minimal open -> index


def germ(P: SetPresheaf, X: FiniteSpace, x) -> Germs:
    """Colimit of P over the open neighbourhoods of x, checked against P(minimal open)."""
    if x not in X.points:
        raise PreconditionError(f"{x} is not a point of {X.name}")
    C = X.category()
    nbhds = [U for U in X.opens if x in U]
    nodes = [(U, s) for U in nbhds for s in P.values[open_name(U)]]
    idx = {n: i for i, n in enumerate(nodes)}
    parent = list(range(len(nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for V in nbhds:
        for U in nbhds:
            if V < U:
                m = C.inc(V, U)
                for s in P.values[open_name(U)]:
                    a, b = find(idx[(U, s)]), find(idx[(V, P.restrict[m][s])])
                    if a != b:
                        parent[max(a, b)] = min(a, b)
    roots = sorted({find(i) for i in range(len(nodes))})
    pos = {r: k for k, r in enumerate(roots)}
    class_of = {n: pos[find(idx[n])] for n in nodes}
    Ux = X.minimal_open(x)
    from_min = {s: class_of[(Ux, s)] for s in P.values[open_name(Ux)]}
    if len(set(from_min.values())) != len(from_min) or len(from_min) != len(roots):
        raise CatspecError(f"germ at {x} is not in bijection with the minimal open value")
    return Germs(x, [nodes[r] for r in roots], class_of, Ux, from_min)


@dataclass
class EtaleSpace:
    total: FiniteSpace
    projection: dict                # total point -> base point
    germ_of: dict                   # (base point, section over minimal open) -> total point
    continuous: bool
    local_homeomorphism: bool


def etale_space(P: SetPresheaf, X: FiniteSpace) -> EtaleSpace:
    C = X.category()
    germ_of, proj = {}, {}
    germs = {x: germ(P, X, x) for x in X.points}
    for x in X.points:
        for s, k in germs[x].from_minimal.items():
            name = f"{x}#{k}"
            germ_of[(x, s)] = name
            proj[name] = x

    def germ_name(x, U, s):
        return f"{x}#{germs[x].class_of[(U, s)]}"

    basis = []
    for U in X.opens:
        for s in P.values[open_name(U)]:
            basis.append(frozenset(germ_name(x, U, s) for x in U))
    total = FiniteSpace.from_basis(sorted(proj), basis, f"Et({P.name})")
    cont = all(total.is_open({e for e in proj if proj[e] in U}) for U in X.opens)
    local = True
    for e in proj:
        found = False
        for W in basis:
            if e not in W:
                continue
            img = frozenset(proj[w] for w in W)
            if len(img) != len(W) or not X.is_open(img):
                continue
            sub_total = {frozenset(V & W) for V in total.opens}
            sub_base = {frozenset(proj[w] for w in V) for V in sub_total}
            if sub_base == set(X.subspace_opens(img)):
                found = True
                break
        if not found:
            local = False
            break
    return EtaleSpace(total, proj, germ_of, cont, local)


# -- sheafification -----------------------------------------------------------

def plus_construction(P: SetPresheaf, J: Topology) -> SetPresheaf:
    """P⁺(B): matching families over covering sieves, identified when they agree on a common cover."""
    C = P.base
    values, reps = {}, {}
    for b in C.objects:
        pairs = [(S, tuple(sorted(f.items()))) for S in sorted(J.sieves[b], key=sorted)
                 for f in matching_families(P, S)]
        classes = []
        for S, fam in pairs:
            fd = dict(fam)
            for cl in classes:
                S2, fam2 = cl[0]
                f2 = dict(fam2)
                common = S & S2
                if any(R <= common and all(fd[r] == f2[r] for r in R) for R in J.sieves[b]):
                    cl.append((S, fam))
                    break
            else:
                classes.append([(S, fam)])
        values[b] = tuple(range(len(classes)))
        reps[b] = classes
    restrict = {}
    for u in C.morphisms:
        b, b2 = C.dom(u), C.cod(u)
        r = {}
        for k, cl in enumerate(reps[b2]):
            S, fam = cl[0]
            fd = dict(fam)
            S_pb = pullback_sieve(C, u, S)
            pulled = {h: fd[C.compose(u, h)] for h in S_pb}
            for k2, cl2 in enumerate(reps[b]):
                hit = False
                for S2, fam2 in cl2:
                    f2 = dict(fam2)
                    common = S_pb & S2
                    if any(R <= common and all(pulled[x] == f2[x] for x in R) for R in J.sieves[b]):
                        hit = True
                        break
                if hit:
                    r[k] = k2
                    break
        restrict[u] = r
    Q = SetPresheaf(C, values, restrict, f"{P.name}+")
    Q.classes = reps
    return Q


def sheafify(P: SetPresheaf, J: Topology) -> SetPresheaf:
    Q = plus_construction(plus_construction(P, J), J)
    Q.name = f"a({P.name})"
    return Q


# -- local homeomorphisms -----------------------------------------------------

def _homeo(X: FiniteSpace, U, V, fn_pairs) -> bool:
    fwd = dict(fn_pairs)
    sub_u, sub_v = set(X.subspace_opens(U)), set(X.subspace_opens(V))
    return {frozenset(fwd[x] for x in W) for W in sub_u} == sub_v


def local_homeo_groupoid(X: FiniteSpace, pointed=None) -> FunctionCategory:
    """Homeomorphisms between opens; with ``pointed`` only opens containing it and maps fixing it."""
    opens = [U for U in X.opens if pointed is None or pointed in U]
    carriers = {open_name(U): tuple(sorted(U)) for U in opens}
    by_name = {open_name(U): U for U in opens}

    def homs(a, b):
        U, V = by_name[a], by_name[b]
        if len(U) != len(V):
            return
        src, dst = carriers[a], carriers[b]
        for perm in itertools.permutations(range(len(dst))):
            pairs = [(src[i], dst[perm[i]]) for i in range(len(src))]
            if pointed is not None and dict(pairs)[pointed] != pointed:
                continue
            if _homeo(X, U, V, pairs):
                yield perm

    def namer(a, b, fn):
        return f"h_{a}_{b}_" + "".join(str(i) for i in fn)

    G = FunctionCategory(carriers, homs, namer, f"Gr_{X.name}" + (f"_{pointed}" if pointed else ""))
    G.space = X
    G.open_of = by_name
    return G


def is_transitive(G: FunctionCategory) -> bool:
    """Every point is carried to every other by some arrow of G."""
    X = G.space
    reach = {(x, G.apply(m, x)) for m in G.morphisms for x in G.carriers[G.dom(m)]}
    return all((x, y) in reach for x in X.points for y in X.points)


def pull_section(G: FunctionCategory, m: str, s) -> tuple:
    """φ*(s) = s∘φ for φ: U -> V and s a section over V."""
    d = dict(s)
    return tuple(sorted((x, d[G.apply(m, x)]) for x in G.carriers[G.dom(m)]))


@dataclass
class InvariantReport:
    invariant_sections: list
    invariant_germs: list
    correspondence_injective: bool
    hit: list
    surjective: bool


def _restrict(s, U):
    return tuple(p for p in s if p[0] in U)


def invariant_analysis(P: SetPresheaf, G: FunctionCategory, x) -> InvariantReport:
    """G-invariant global sections, G_x-invariant germs at x and the germ map between them.

    Germs at x are sections over the minimal open U_x.  A germ is hit when the
    section obtained by transporting it along G to every point is again a
    section of P; surjectivity is reported, not assumed.
    """
    X = G.space
    top = frozenset(X.points)
    Ux = X.minimal_open(x)
    inv_secs = []
    for s in P.values[open_name(top)]:
        if all(pull_section(G, m, _restrict(s, G.open_of[G.cod(m)])) == _restrict(s, G.open_of[G.dom(m)])
               for m in G.morphisms):
            inv_secs.append(s)
    # arrows of G fixing x; a homeomorphism fixing x maps U_x onto U_x
    fixing = [m for m in G.morphisms
              if x in G.carriers[G.dom(m)] and G.apply(m, x) == x and Ux <= G.open_of[G.dom(m)]]
    inv_germs = []
    for g in P.values[open_name(Ux)]:
        d = dict(g)
        if all(tuple(sorted((z, d[G.apply(m, z)]) for z in Ux)) == g for m in fixing):
            inv_germs.append(g)
    image = [_restrict(s, Ux) for s in inv_secs]
    injective = len(set(image)) == len(image) and all(i in inv_germs for i in image)
    hits = [g for g in inv_germs if _distribute(G, X, x, g) in P.values[open_name(top)]]
    return InvariantReport(inv_secs, inv_germs, injective, hits, len(hits) == len(inv_germs))


def _distribute(G, X, x, g):
    """Transport the germ g at x to each point y along arrows x |-> y; None if ambiguous."""
    d = dict(g)
    Ux = X.minimal_open(x)
    out = {}
    for m in G.morphisms:
        if x not in G.carriers[G.dom(m)] or not Ux <= G.open_of[G.dom(m)]:
            continue
        for z in Ux:
            w = G.apply(m, z)
            if out.setdefault(w, d[z]) != d[z]:
                return None
    if set(out) != set(X.points):
        return None
    return tuple(sorted(out.items()))


__all__ = ["FiniteSpace", "open_name", "sierpinski", "discrete", "indiscrete", "function_presheaf",
           "all_functions_sheaf", "continuous_functions_sheaf", "constant_presheaf_on",
           "locally_constant_sheaf", "gluing_oracle", "Germs", "germ", "EtaleSpace", "etale_space",
           "plus_construction", "sheafify", "local_homeo_groupoid", "is_transitive", "pull_section",
           "InvariantReport", "invariant_analysis"]
