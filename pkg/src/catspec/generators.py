"""Seeded random instances for property suites."""
from __future__ import annotations

import itertools
import random

from .fincat import Functor, make_category
from .fincat.builders import poset_category
from .grothendieck import CO, CONTRA, Pseudofunctor


def _closure(points, rel):
    rel = set(rel) | {(x, x) for x in points}
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(rel), repeat=2):
            if b == c and (a, d) not in rel:
                rel.add((a, d))
                changed = True
    return rel


def random_poset(rng: random.Random, n: int, prefix: str = "b", density: float = 0.4, name="P"):
    pts = [f"{prefix}{i}" for i in range(n)]
    rel = {(pts[i], pts[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < density}
    return poset_category(pts, _closure(pts, rel), name)


def random_preorder(rng: random.Random, n: int, prefix: str = "x", density: float = 0.35, name="Q"):
    """Thin category on n points; cycles (hence non-identity isos) allowed."""
    pts = [f"{prefix}{i}" for i in range(n)]
    rel = {(a, b) for a in pts for b in pts if a != b and rng.random() < density}
    return poset_category(pts, _closure(pts, rel), name)


def thin_arrow(V, a, b):
    """The unique arrow a -> b of a thin category, or None."""
    hs = V.hom(a, b)
    return hs[0] if hs else None


def thin_functor(V, W, omap, name=""):
    mmap = {m: thin_arrow(W, omap[V.dom(m)], omap[V.cod(m)]) for m in V.morphisms}
    if any(v is None for v in mmap.values()):
        raise ValueError("object map is not monotone")
    return Functor(V, W, omap, mmap, name)


def _monotone_maps(V, W):
    for img in itertools.product(W.objects, repeat=len(V.objects)):
        om = dict(zip(V.objects, img))
        if all(thin_arrow(W, om[V.dom(m)], om[V.cod(m)]) is not None for m in V.morphisms):
            yield om


def _iso_class(V, x):
    return frozenset(y for y in V.objects if thin_arrow(V, x, y) and thin_arrow(V, y, x))


def random_pseudofunctor(rng: random.Random, variance: str = CONTRA, max_base: int = 4,
                         max_value: int = 3, tries: int = 50) -> Pseudofunctor:
    """Preorder-valued pseudofunctor on a random poset, perturbed up to iso.

    Actions along generating arrows are random monotone maps; composites are
    taken along a path and then each image object is replaced by a random
    isomorphic one, so coherence components are genuinely non-identity.
    Coherence arrows are the unique arrows of the thin values.
    """
    nb = rng.randint(1, max_base)
    B = random_poset(rng, nb, name=f"Base{nb}")
    values = {b: random_preorder(rng, rng.randint(1, max_value), prefix=f"{b}x", name=f"V_{b}")
              for b in B.objects}
    contra = variance == CONTRA

    def src_tgt(f):
        return (B.cod(f), B.dom(f)) if contra else (B.dom(f), B.cod(f))

    def chain(f):
        x, y = B.dom(f), B.cod(f)
        return max([1] + [chain(g) + chain(h) for g in B.morphisms for h in B.morphisms
                          if not B.is_identity(g) and not B.is_identity(h)
                          and B.dom(g) == x and B.cod(h) == y and B.cod(g) == B.dom(h)])

    arrows = sorted((f for f in B.morphisms if not B.is_identity(f)), key=lambda f: (chain(f), f))
    for _ in range(tries):
        strict = {}
        for f in arrows:
            s, t = src_tgt(f)
            facs = [(g, h) for g in B.morphisms for h in B.morphisms
                    if not B.is_identity(g) and not B.is_identity(h)
                    and B.cod(g) == B.dom(h) and B.compose(h, g) == f]
            if not facs:
                strict[f] = rng.choice(list(_monotone_maps(values[s], values[t])))
                continue
            g, h = facs[0]
            first, second = (strict[h], strict[g]) if contra else (strict[g], strict[h])
            strict[f] = {e: second[first[e]] for e in values[s].objects}
        if all(_consistent(B, values, strict, f, strict[f], contra) for f in arrows):
            break
    else:
        raise RuntimeError("could not build a consistent random pseudofunctor")
    for b in B.objects:
        strict[B.identity(b)] = {e: e for e in values[b].objects}
    actions = {}
    for f in B.morphisms:
        s, t = src_tgt(f)
        W = values[t]
        om = {e: rng.choice(sorted(_iso_class(W, y))) for e, y in strict[f].items()}
        actions[f] = thin_functor(values[s], W, om, f"F_{f}")
    F = Pseudofunctor(B, variance, values, actions, {}, {}, name="R")
    fill_thin_coherence(F)
    return F


def _consistent(B, values, strict, f, om, contra):
    """om for f must match, up to iso, every already-fixed factorization f = h∘g."""
    for g in B.morphisms:
        for h in B.morphisms:
            if B.is_identity(g) or B.is_identity(h) or B.cod(g) != B.dom(h):
                continue
            if B.compose(h, g) != f or g not in strict or h not in strict:
                continue
            first, second = (strict[h], strict[g]) if contra else (strict[g], strict[h])
            tgt = values[B.dom(f)] if contra else values[B.cod(f)]
            for e, y in om.items():
                z = second[first[e]]
                if _iso_class(tgt, z) != _iso_class(tgt, y):
                    return False
    return True


def fill_thin_coherence(F: Pseudofunctor) -> None:
    """Coherence components for thin values: the unique arrow in each hom."""
    comp, ids = {}, {}
    contra = F.variance == CONTRA
    for b in F.base.objects:
        V = F.values[b]
        one = F.base.identity(b)
        ids[b] = {e: thin_arrow(V, e, F.act(one, e)) if contra else thin_arrow(V, F.act(one, e), e)
                  for e in V.objects}
    for g, f in F.composable_pairs():
        gf = F.gf(g, f)
        T = F._target_value(g, f)
        comp[(g, f)] = {}
        for e in F.values[F.comp_domain(g, f)].objects:
            if contra:
                comp[(g, f)][e] = thin_arrow(T, F.act(f, F.act(g, e)), F.act(gf, e))
            else:
                comp[(g, f)][e] = thin_arrow(T, F.act(gf, e), F.act(g, F.act(f, e)))
    F.comp_iso, F.id_iso = comp, ids


def random_group_pseudofunctor(rng: random.Random, variance: str = CONTRA, max_base: int = 3):
    """Strict pseudofunctor with one-object cyclic-group values.

    The action along f: x -> y multiplies by u(x)/u(y) for random units u,
    and by 0 when f leaves a random up-set; both choices compose strictly.
    Fibers keep non-trivial automorphisms, so lifts are far from unique.
    """
    nb = rng.randint(1, max_base)
    B = random_poset(rng, nb, name=f"Base{nb}")
    n = rng.choice([1, 2, 3, 4, 5])
    contra = variance == CONTRA
    values = {}
    for b in B.objects:
        names = [f"id_{b}pt"] + [f"{b}r{k}" for k in range(1, n)]
        arrows = {names[k]: (f"{b}pt", f"{b}pt") for k in range(1, n)}
        cmp = {(names[i], names[j]): names[(i + j) % n] for i in range(n) for j in range(n)}
        V = make_category([f"{b}pt"], arrows, cmp, f"Z{n}_{b}")
        V.elt = names
        values[b] = V
    units = [k for k in range(1, n) if _gcd(k, n) == 1] or [0]
    u = {b: rng.choice(units) for b in B.objects}
    seed = {b for b in B.objects if rng.random() < 0.3}
    up = {y for y in B.objects if any(B.hom(x, y) for x in seed)}
    actions = {}
    for f in B.morphisms:
        x, y = B.dom(f), B.cod(f)
        mult = (u[x] * pow(u[y], -1, n)) % n if n > 1 else 0
        if x not in up and y in up:
            mult = 0
        s, t = (y, x) if contra else (x, y)
        Vs, Vt = values[s], values[t]
        mm = {Vs.elt[i]: Vt.elt[(i * mult) % n] for i in range(n)}
        actions[f] = Functor(Vs, Vt, {Vs.objects[0]: Vt.objects[0]}, mm, f"F_{f}")
    return Pseudofunctor(B, variance, values, actions, name="G")


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a
