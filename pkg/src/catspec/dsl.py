"""Text format for workspaces: tokenizer, recursive-descent parser, canonical printer.

Grammar (``#`` starts a comment, whitespace is free)::

    file          := decl*
    decl          := category | functor | site | space | presheaf
                   | pseudofunctor | group | action
    category      := "category" NAME "{" "objects:" NAME+ ";"
                     ("morphisms:" (NAME ":" NAME "->" NAME)+ ";")?
                     ("compose:" (NAME "*" NAME "=" NAME ";")+)? "}"
    functor       := "functor" NAME ":" NAME "->" NAME "{"
                     "objects:" (NAME "=>" NAME)+ ";" ("morphisms:" (NAME "=>" NAME)* ";")? "}"
    site          := "site" NAME "on" NAME "{" ("cover" NAME "{" NAME* "}" ";")* "}"
    space         := "space" NAME "{" "points:" NAME* ";" "opens:" ("{" NAME* "}")+ ";" "}"
    presheaf      := "presheaf" NAME "on" NAME "{" "values:" (NAME "{" NAME* "}")+ ";"
                     ("restrict:" (NAME "{" (NAME "=>" NAME)* "}")+ ";")? "}"
    pseudofunctor := "pseudofunctor" NAME "on" NAME ("contravariant" | "covariant")? "{"
                     "values:" (NAME "=>" NAME)+ ";" ("actions:" (NAME "=>" NAME)+ ";")?
                     ("comp:" (NAME NAME NAME "=>" NAME)+ ";")?
                     ("unit:" (NAME NAME "=>" NAME)+ ";")? "}"
    group         := "group" NAME "{" "elements:" NAME+ ";" "unit:" NAME ";"
                     ("mul:" (NAME "*" NAME "=" NAME ";")+)? "}"
    action        := "action" NAME ":" NAME "on" NAME "in" NAME "{" (NAME "=>" NAME ";")* "}"

NAME is ``[A-Za-z_][A-Za-z0-9_]*`` or a double-quoted string.  Identities
``id_<obj>`` are generated, and so are composites, functor images,
restrictions and actions that involve identities.  Sites on a space with
no ``cover`` clauses use the open-cover pretopology.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import CatspecError, DslError, GuardrailExceeded
from .fincat import Functor, identity_functor, make_category, validate_category, validate_functor
from .grothendieck import CO, CONTRA, Pseudofunctor, validate_pseudofunctor
from .groups import FiniteGroup
from .presheaf import SetPresheaf
from .sites import Pretopology, validate_pretopology
from .spaces import FiniteSpace

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
SYMBOLS = ("->", "=>", "{", "}", ";", ":", "*", "=")
KINDS = ("space", "category", "functor", "site", "presheaf", "pseudofunctor", "group", "action")


@dataclass
class Tok:
    kind: str      # "name", "sym", "eof"
    value: str
    line: int
    col: int
    quoted: bool = False


def tokenize(text: str) -> list:
    toks, i, line, col = [], 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i, col = i + 1, col + 1
            buf = []
            while True:
                if i >= n or text[i] == "\n":
                    raise DslError("unterminated string", start_line, start_col)
                c = text[i]
                if c == '"':
                    i, col = i + 1, col + 1
                    break
                if c == "\\":
                    nxt = text[i + 1] if i + 1 < n else ""
                    esc = {"\\": "\\", '"': '"', "n": "\n"}.get(nxt)
                    if esc is None:
                        raise DslError("bad escape in string", line, col)
                    buf.append(esc)
                    i, col = i + 2, col + 2
                    continue
                buf.append(c)
                i, col = i + 1, col + 1
            toks.append(Tok("name", "".join(buf), start_line, start_col, True))
            continue
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            j = i
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Tok("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for s in SYMBOLS:
            if text.startswith(s, i):
                toks.append(Tok("sym", s, line, col))
                i, col = i + len(s), col + len(s)
                break
        else:
            raise DslError(f"unexpected character {ch!r}", line, col)
    toks.append(Tok("eof", "", line, col))
    return toks


# -- parser -------------------------------------------------------------------

@dataclass
class Decl:
    kind: str
    name: str
    at: Tok
    data: dict = field(default_factory=dict)


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    @property
    def cur(self) -> Tok:
        return self.toks[self.i]

    def fail(self, msg, tok=None):
        tok = tok or self.cur
        raise DslError(msg, tok.line, tok.col)

    def sym(self, s):
        t = self.cur
        if t.kind != "sym" or t.value != s:
            self.fail(f"expected {s!r}, found {t.value or 'end of input'!r}")
        self.i += 1
        return t

    def at_sym(self, s) -> bool:
        return self.cur.kind == "sym" and self.cur.value == s

    def name(self) -> Tok:
        t = self.cur
        if t.kind != "name":
            self.fail(f"expected a name, found {t.value or 'end of input'!r}")
        self.i += 1
        return t

    def at_kw(self, kw) -> bool:
        t = self.cur
        return t.kind == "name" and not t.quoted and t.value == kw

    def kw(self, kw):
        if not self.at_kw(kw):
            self.fail(f"expected {kw!r}")
        self.i += 1

    def section(self, kw) -> bool:
        """``kw:`` if present."""
        if self.at_kw(kw) and self.toks[self.i + 1].kind == "sym" and self.toks[self.i + 1].value == ":":
            self.i += 2
            return True
        return False

    def names_until(self, stop) -> list:
        out = []
        while not self.at_sym(stop):
            out.append(self.name())
        return out

    def pairs_until(self, stop, arrow="=>") -> list:
        out = []
        while not self.at_sym(stop):
            a = self.name()
            self.sym(arrow)
            out.append((a, self.name()))
        return out

    def file(self) -> list:
        decls = []
        while self.cur.kind != "eof":
            t = self.cur
            if t.kind != "name" or t.quoted or t.value not in KINDS:
                self.fail(f"expected a declaration ({', '.join(KINDS)})")
            self.i += 1
            decls.append(getattr(self, "p_" + t.value)(t))
        return decls

    def p_category(self, at):
        nm = self.name()
        self.sym("{")
        if not self.section("objects"):
            self.fail("expected 'objects:'")
        objs = self.names_until(";")
        if not objs:
            self.fail("a category needs at least one object")
        self.sym(";")
        arrows, comps = [], []
        if self.section("morphisms"):
            while not self.at_sym(";"):
                f = self.name()
                self.sym(":")
                d = self.name()
                self.sym("->")
                arrows.append((f, d, self.name()))
            self.sym(";")
        if self.section("compose"):
            while not self.at_sym("}"):
                g = self.name()
                self.sym("*")
                f = self.name()
                self.sym("=")
                h = self.name()
                self.sym(";")
                comps.append((g, f, h))
        self.sym("}")
        return Decl("category", nm.value, nm, {"objects": objs, "arrows": arrows, "compose": comps})

    def p_functor(self, at):
        nm = self.name()
        self.sym(":")
        src = self.name()
        self.sym("->")
        dst = self.name()
        self.sym("{")
        if not self.section("objects"):
            self.fail("expected 'objects:'")
        om = self.pairs_until(";")
        self.sym(";")
        mm = []
        if self.section("morphisms"):
            mm = self.pairs_until(";")
            self.sym(";")
        self.sym("}")
        return Decl("functor", nm.value, nm, {"src": src, "dst": dst, "objects": om, "morphisms": mm})

    def p_site(self, at):
        nm = self.name()
        self.kw("on")
        on = self.name()
        self.sym("{")
        covers = []
        while self.at_kw("cover"):
            self.i += 1
            obj = self.name()
            self.sym("{")
            covers.append((obj, self.names_until("}")))
            self.sym("}")
            self.sym(";")
        self.sym("}")
        return Decl("site", nm.value, nm, {"on": on, "covers": covers})

    def p_space(self, at):
        nm = self.name()
        self.sym("{")
        if not self.section("points"):
            self.fail("expected 'points:'")
        pts = self.names_until(";")
        self.sym(";")
        if not self.section("opens"):
            self.fail("expected 'opens:'")
        opens = []
        while self.at_sym("{"):
            t = self.sym("{")
            opens.append((t, self.names_until("}")))
            self.sym("}")
        if not opens:
            self.fail("expected at least one open set")
        self.sym(";")
        self.sym("}")
        return Decl("space", nm.value, nm, {"points": pts, "opens": opens})

    def p_presheaf(self, at):
        nm = self.name()
        self.kw("on")
        on = self.name()
        self.sym("{")
        if not self.section("values"):
            self.fail("expected 'values:'")
        vals = []
        while not self.at_sym(";"):
            o = self.name()
            self.sym("{")
            vals.append((o, self.names_until("}")))
            self.sym("}")
        self.sym(";")
        res = []
        if self.section("restrict"):
            while not self.at_sym(";"):
                u = self.name()
                self.sym("{")
                res.append((u, self.pairs_until("}")))
                self.sym("}")
            self.sym(";")
        self.sym("}")
        return Decl("presheaf", nm.value, nm, {"on": on, "values": vals, "restrict": res})

    def p_pseudofunctor(self, at):
        nm = self.name()
        self.kw("on")
        on = self.name()
        variance = CONTRA
        if self.at_kw("contravariant") or self.at_kw("covariant"):
            variance = CONTRA if self.cur.value == "contravariant" else CO
            self.i += 1
        self.sym("{")
        if not self.section("values"):
            self.fail("expected 'values:'")
        vals = self.pairs_until(";")
        self.sym(";")
        acts, comp, unit = [], [], []
        if self.section("actions"):
            acts = self.pairs_until(";")
            self.sym(";")
        if self.section("comp"):
            while not self.at_sym(";"):
                g, f, e = self.name(), self.name(), self.name()
                self.sym("=>")
                comp.append((g, f, e, self.name()))
            self.sym(";")
        if self.section("unit"):
            while not self.at_sym(";"):
                b, e = self.name(), self.name()
                self.sym("=>")
                unit.append((b, e, self.name()))
            self.sym(";")
        self.sym("}")
        return Decl("pseudofunctor", nm.value, nm, {"on": on, "variance": variance, "values": vals,
                                                     "actions": acts, "comp": comp, "unit": unit})

    def p_group(self, at):
        nm = self.name()
        self.sym("{")
        if not self.section("elements"):
            self.fail("expected 'elements:'")
        elems = self.names_until(";")
        if not elems:
            self.fail("a group needs at least one element")
        self.sym(";")
        if not self.section("unit"):
            self.fail("expected 'unit:'")
        unit = self.name()
        self.sym(";")
        mul = []
        if self.section("mul"):
            while not self.at_sym("}"):
                a = self.name()
                self.sym("*")
                b = self.name()
                self.sym("=")
                c = self.name()
                self.sym(";")
                mul.append((a, b, c))
        self.sym("}")
        return Decl("group", nm.value, nm, {"elements": elems, "unit": unit, "mul": mul})

    def p_action(self, at):
        nm = self.name()
        self.sym(":")
        grp = self.name()
        self.kw("on")
        obj = self.name()
        self.kw("in")
        cat = self.name()
        self.sym("{")
        pairs = []
        while not self.at_sym("}"):
            a = self.name()
            self.sym("=>")
            pairs.append((a, self.name()))
            self.sym(";")
        self.sym("}")
        return Decl("action", nm.value, nm, {"group": grp, "object": obj, "category": cat, "sigma": pairs})


# -- workspace ------------------------------------------------------------------

@dataclass
class Site:
    name: str
    on: str
    base: object
    pretopology: Pretopology
    auto: bool = False


@dataclass
class GroupAction:
    """Group elements acting on an object of a category by automorphisms."""
    name: str
    group: str
    category: str
    object: str
    sigma: dict


@dataclass
class Workspace:
    spaces: dict = field(default_factory=dict)
    categories: dict = field(default_factory=dict)
    functors: dict = field(default_factory=dict)
    sites: dict = field(default_factory=dict)
    presheaves: dict = field(default_factory=dict)
    pseudofunctors: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)
    actions: dict = field(default_factory=dict)

    def names(self) -> set:
        return {n for d in (self.spaces, self.categories, self.functors, self.sites, self.presheaves,
                            self.pseudofunctors, self.groups, self.actions) for n in d}

    def base(self, name):
        """Category named ``name``, or the open-set category of the space ``name``."""
        if name in self.categories:
            return self.categories[name]
        if name in self.spaces:
            return self.spaces[name].category()
        raise KeyError(name)

    def counts(self) -> dict:
        return {k: len(getattr(self, k)) for k in ("spaces", "categories", "functors", "sites",
                                                   "presheaves", "pseudofunctors", "groups", "actions")}

    def structure(self) -> tuple:
        """Hashable content with identities normalised, for structural comparison."""
        cat_name = {id(c): n for n, c in self.categories.items()}

        def cat_s(c):
            plain = [m for m in c.morphisms if not c.is_identity(m)]
            return (tuple(sorted(c.objects)), tuple(sorted((m, c.dom(m), c.cod(m)) for m in plain)),
                    tuple(sorted((g, f, _ids(c, c.compose(g, f))) for g in plain for f in plain
                                 if c.cod(f) == c.dom(g))))

        def fun_s(F):
            return (cat_name.get(id(F.src)), cat_name.get(id(F.dst)),
                    tuple(sorted((o, F.ob(o)) for o in F.src.objects)),
                    tuple(sorted((_ids(F.src, m), _ids(F.dst, F.mor(m))) for m in F.src.morphisms)))

        def pf_s(P):
            B = P.base
            comp = sorted((g, f, e, m) for (g, f), d in P.comp_iso.items() for e, m in d.items()
                          if not P._target_value(g, f).is_identity(m))
            unit = sorted((b, e, m) for b, d in P.id_iso.items() for e, m in d.items()
                          if not P.values[b].is_identity(m))
            return (getattr(P, "on", None), P.variance,
                    tuple(sorted((b, cat_name.get(id(P.values[b]))) for b in B.objects)),
                    tuple(sorted((u, fun_s(P.actions[u])[2:]) for u in B.morphisms)),
                    tuple(comp), tuple(unit))

        return (
            tuple(sorted((n, tuple(sorted(X.points)), tuple(sorted(tuple(sorted(U)) for U in X.opens)))
                         for n, X in self.spaces.items())),
            tuple(sorted((n, cat_s(c)) for n, c in self.categories.items())),
            tuple(sorted((n, fun_s(F)) for n, F in self.functors.items())),
            tuple(sorted((n, s.on, s.auto, tuple(sorted((b, tuple(sorted(tuple(sorted(c)) for c in cs)))
                                                        for b, cs in s.pretopology.coverings.items())))
                         for n, s in self.sites.items())),
            tuple(sorted((n, getattr(P, "on", None), tuple(sorted((c, tuple(sorted(v))) for c, v in P.values.items())),
                          tuple(sorted((u, tuple(sorted(m.items()))) for u, m in P.restrict.items())))
                         for n, P in self.presheaves.items())),
            tuple(sorted((n, pf_s(P)) for n, P in self.pseudofunctors.items())),
            tuple(sorted((n, tuple(sorted(G.elements)), G.unit, tuple(sorted(G.mul.items())))
                         for n, G in self.groups.items())),
            tuple(sorted((n, a.group, a.category, a.object, tuple(sorted(a.sigma.items())))
                         for n, a in self.actions.items())),
        )


def _ids(cat, m):
    return f"id_{cat.dom(m)}" if cat.is_identity(m) else m


class _Builder:
    def __init__(self, decls):
        self.decls = decls
        self.ws = Workspace()

    def fail(self, msg, tok):
        raise DslError(msg, tok.line, tok.col)

    def build(self) -> Workspace:
        seen = {}
        for d in self.decls:
            if d.name in seen:
                self.fail(f"duplicate definition of {d.name!r}", d.at)
            seen[d.name] = d
        self.by_name = seen
        self.done = set()
        self.active = []
        for d in self.decls:
            self.need(d.name, d.at)
        return self.ws

    def need(self, name, tok, kinds=None):
        d = self.by_name.get(name)
        if d is None or (kinds and d.kind not in kinds):
            what = " or ".join(kinds) if kinds else "entity"
            self.fail(f"unresolved reference to {what} {name!r}", tok)
        if name in self.done:
            return d
        if name in self.active:
            self.fail(f"circular reference through {name!r}", tok)
        self.active.append(name)
        try:
            getattr(self, "b_" + d.kind)(d)
        except (DslError, GuardrailExceeded):
            raise
        except (CatspecError, KeyError, ValueError, TypeError, IndexError, StopIteration) as e:
            self.fail(f"invalid {d.kind} {d.name!r}: {e}", d.at)
        self.active.pop()
        self.done.add(name)
        return d

    def base_of(self, tok):
        d = self.need(tok.value, tok, ("category", "space"))
        return self.ws.base(d.name)

    def b_space(self, d):
        pts = [t.value for t in d.data["points"]]
        if len(set(pts)) != len(pts):
            self.fail("duplicate point", d.at)
        opens = []
        for t, names in d.data["opens"]:
            for x in names:
                if x.value not in pts:
                    self.fail(f"unknown point {x.value!r}", x)
            opens.append(frozenset(x.value for x in names))
        if len(set(opens)) != len(opens):
            self.fail("duplicate open set", d.at)
        X = FiniteSpace(pts, opens, d.name)
        if not X.validate():
            self.fail(f"space {d.name!r} is not a topology", d.at)
        self.ws.spaces[d.name] = X

    def b_category(self, d):
        objs = [t.value for t in d.data["objects"]]
        if len(set(objs)) != len(objs):
            self.fail("duplicate object", d.at)
        arrows = {f"id_{o}": (o, o) for o in objs}
        where = {}
        for f, a, b in d.data["arrows"]:
            if f.value in arrows:
                self.fail(f"duplicate morphism {f.value!r}", f)
            for t in (a, b):
                if t.value not in objs:
                    self.fail(f"unknown object {t.value!r}", t)
            arrows[f.value] = (a.value, b.value)
            where[f.value] = f
        table = {}
        for g, f, h in d.data["compose"]:
            for t in (g, f, h):
                if t.value not in arrows:
                    self.fail(f"unknown morphism {t.value!r}", t)
            if arrows[f.value][1] != arrows[g.value][0]:
                self.fail(f"{g.value}*{f.value} is not composable", g)
            if arrows[h.value] != (arrows[f.value][0], arrows[g.value][1]):
                self.fail(f"{h.value} has the wrong type for {g.value}*{f.value}", h)
            key = (g.value, f.value)
            if key in table:
                self.fail(f"duplicate composite {g.value}*{f.value}", g)
            if g.value.startswith("id_") and g.value in arrows and g.value[3:] in objs \
                    or f.value.startswith("id_") and f.value[3:] in objs:
                self.fail("composites with identities are generated", g)
            table[key] = h.value
        plain = [f for f in arrows if f not in {f"id_{o}" for o in objs}]
        for f in plain:
            for g in plain:
                if arrows[f][1] == arrows[g][0] and (g, f) not in table:
                    self.fail(f"missing composite {g}*{f}", where.get(g, d.at))
        cat = make_category(objs, {f: arrows[f] for f in plain}, table, d.name)
        rep = validate_category(cat)
        if not rep.ok:
            self.fail(f"category {d.name!r} fails validation: {rep.violations[0]}", d.at)
        self.ws.categories[d.name] = cat

    def b_functor(self, d):
        src = self.categories_ref(d.data["src"])
        dst = self.categories_ref(d.data["dst"])
        om = {}
        for a, b in d.data["objects"]:
            if a.value not in src.objects or b.value not in dst.objects:
                self.fail(f"bad object assignment {a.value} => {b.value}", a)
            if a.value in om:
                self.fail(f"duplicate assignment for {a.value!r}", a)
            om[a.value] = b.value
        for o in src.objects:
            if o not in om:
                self.fail(f"object {o!r} is not assigned", d.at)
        mm = {src.identity(o): dst.identity(om[o]) for o in src.objects}
        given = set()
        for a, b in d.data["morphisms"]:
            if a.value not in src.morphisms or b.value not in dst.morphisms:
                self.fail(f"bad morphism assignment {a.value} => {b.value}", a)
            if a.value in given:
                self.fail(f"duplicate assignment for {a.value!r}", a)
            given.add(a.value)
            mm[a.value] = b.value
        for m in src.morphisms:
            if m not in mm:
                self.fail(f"morphism {m!r} is not assigned", d.at)
        F = Functor(src, dst, om, mm, d.name)
        rep = validate_functor(F)
        if not rep.ok:
            self.fail(f"functor {d.name!r} fails validation: {rep.violations[0]}", d.at)
        self.ws.functors[d.name] = F

    def categories_ref(self, tok):
        self.need(tok.value, tok, ("category",))
        return self.ws.categories[tok.value]

    def b_site(self, d):
        on = d.data["on"]
        C = self.base_of(on)
        covers = d.data["covers"]
        if not covers and on.value in self.ws.spaces:
            t = self.ws.spaces[on.value].open_cover_pretopology()
            self.ws.sites[d.name] = Site(d.name, on.value, C, Pretopology(C, t.coverings, d.name), True)
            return
        cov = {}
        for obj, arrows in covers:
            if obj.value not in C.objects:
                self.fail(f"unknown object {obj.value!r}", obj)
            for a in arrows:
                if a.value not in C.morphisms:
                    self.fail(f"unknown morphism {a.value!r}", a)
                if C.cod(a.value) != obj.value:
                    self.fail(f"{a.value} does not land in {obj.value}", a)
            fam = frozenset(a.value for a in arrows)
            if fam in cov.setdefault(obj.value, []):
                self.fail("duplicate covering", obj)
            cov[obj.value].append(fam)
        t = Pretopology(C, cov, d.name)
        v = validate_pretopology(t)
        if not v.ok:
            self.fail(f"site {d.name!r} is not a pretopology ({v.reason})", d.at)
        self.ws.sites[d.name] = Site(d.name, on.value, C, t, False)

    def b_presheaf(self, d):
        on = d.data["on"]
        C = self.base_of(on)
        vals = {}
        for o, xs in d.data["values"]:
            if o.value not in C.objects:
                self.fail(f"unknown object {o.value!r}", o)
            if o.value in vals:
                self.fail(f"duplicate value for {o.value!r}", o)
            names = [x.value for x in xs]
            if len(set(names)) != len(names):
                self.fail("duplicate element", o)
            vals[o.value] = tuple(names)
        for c in C.objects:
            if c not in vals:
                self.fail(f"no value given for {c!r}", d.at)
        res = {C.identity(c): {x: x for x in vals[c]} for c in C.objects}
        for u, pairs in d.data["restrict"]:
            if u.value not in C.morphisms or C.is_identity(u.value):
                self.fail(f"bad restriction arrow {u.value!r}", u)
            if u.value in res:
                self.fail(f"duplicate restriction for {u.value!r}", u)
            src, dst = vals[C.cod(u.value)], vals[C.dom(u.value)]
            m = {}
            for a, b in pairs:
                if a.value not in src or b.value not in dst or a.value in m:
                    self.fail(f"bad restriction {a.value} => {b.value}", a)
                m[a.value] = b.value
            if set(m) != set(src):
                self.fail(f"restriction along {u.value!r} is not total", u)
            res[u.value] = m
        for u in C.morphisms:
            if u not in res:
                self.fail(f"no restriction along {u!r}", d.at)
        P = SetPresheaf(C, vals, res, d.name)
        rep = P.validate()
        if not rep.ok:
            self.fail(f"presheaf {d.name!r} fails validation: {rep.violations[0]}", d.at)
        P.on = on.value
        self.ws.presheaves[d.name] = P

    def b_pseudofunctor(self, d):
        on = d.data["on"]
        B = self.base_of(on)
        var = d.data["variance"]
        values = {}
        for b, c in d.data["values"]:
            if b.value not in B.objects or b.value in values:
                self.fail(f"bad value assignment for {b.value!r}", b)
            values[b.value] = self.categories_ref(c)
        for b in B.objects:
            if b not in values:
                self.fail(f"no value given for {b!r}", d.at)
        actions, declared = {}, {}
        for u, f in d.data["actions"]:
            if u.value not in B.morphisms or u.value in actions:
                self.fail(f"bad action assignment for {u.value!r}", u)
            self.need(f.value, f, ("functor",))
            actions[u.value] = self.ws.functors[f.value]
            declared[u.value] = f.value
        for u in B.morphisms:
            if u not in actions:
                if not B.is_identity(u):
                    self.fail(f"no action given for {u!r}", d.at)
                actions[u] = identity_functor(values[B.dom(u)], f"id_{values[B.dom(u)].name}")
        for u, F in actions.items():
            s, t = (B.cod(u), B.dom(u)) if var == CONTRA else (B.dom(u), B.cod(u))
            if F.src is not values[s] or F.dst is not values[t]:
                self.fail(f"action along {u!r} has the wrong type", d.at)
        P = Pseudofunctor(B, var, values, actions, name=d.name)
        for g, f, e, m in d.data["comp"]:
            key = (g.value, f.value)
            if key not in P.comp_iso or e.value not in P.comp_iso[key]:
                self.fail(f"bad coherence entry {g.value} {f.value} {e.value}", g)
            V = P._target_value(*key)
            if m.value not in V.morphisms:
                self.fail(f"unknown morphism {m.value!r}", m)
            P.comp_iso[key][e.value] = m.value
        for b, e, m in d.data["unit"]:
            if b.value not in P.id_iso or e.value not in P.id_iso[b.value]:
                self.fail(f"bad unit entry {b.value} {e.value}", b)
            if m.value not in values[b.value].morphisms:
                self.fail(f"unknown morphism {m.value!r}", m)
            P.id_iso[b.value][e.value] = m.value
        rep = validate_pseudofunctor(P)
        if not rep.ok:
            self.fail(f"pseudofunctor {d.name!r} fails validation: {rep.violations[0]}", d.at)
        P.on = on.value
        P.declared_actions = declared
        self.ws.pseudofunctors[d.name] = P

    def b_group(self, d):
        elems = [t.value for t in d.data["elements"]]
        if len(set(elems)) != len(elems):
            self.fail("duplicate element", d.at)
        u = d.data["unit"]
        if u.value not in elems:
            self.fail(f"unit {u.value!r} is not an element", u)
        mul = {}
        for x in elems:
            mul[(u.value, x)] = x
            mul[(x, u.value)] = x
        for a, b, c in d.data["mul"]:
            for t in (a, b, c):
                if t.value not in elems:
                    self.fail(f"unknown element {t.value!r}", t)
            if u.value in (a.value, b.value):
                self.fail("products with the unit are generated", a)
            if (a.value, b.value) in mul:
                self.fail(f"duplicate product {a.value}*{b.value}", a)
            mul[(a.value, b.value)] = c.value
        for a in elems:
            for b in elems:
                if (a, b) not in mul:
                    self.fail(f"missing product {a}*{b}", d.at)
        G = FiniteGroup(elems, mul, u.value, d.name)
        if not G.is_group():
            self.fail(f"{d.name!r} is not a group", d.at)
        self.ws.groups[d.name] = G

    def b_action(self, d):
        g = d.data["group"]
        self.need(g.value, g, ("group",))
        G = self.ws.groups[g.value]
        C = self.categories_ref(d.data["category"])
        X = d.data["object"]
        if X.value not in C.objects:
            self.fail(f"unknown object {X.value!r}", X)
        sigma = {G.unit: C.identity(X.value)}
        for a, f in d.data["sigma"]:
            if a.value not in G.elements or a.value == G.unit or a.value in sigma:
                self.fail(f"bad element {a.value!r}", a)
            if f.value not in C.morphisms or C.dom(f.value) != X.value or C.cod(f.value) != X.value:
                self.fail(f"{f.value!r} is not an endomorphism of {X.value}", f)
            sigma[a.value] = f.value
        for a in G.elements:
            if a not in sigma:
                self.fail(f"no automorphism given for {a!r}", d.at)
        for a in G.elements:
            for b in G.elements:
                if sigma[G(a, b)] != C.compose(sigma[a], sigma[b]):
                    self.fail(f"not an action: {a}*{b}", d.at)
        self.ws.actions[d.name] = GroupAction(d.name, g.value, C.name, X.value, sigma)


def _decode(data) -> str:
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8")
    except UnicodeDecodeError as e:
        head = bytes(data)[:e.start].decode("utf-8")
        line = head.count("\n") + 1
        col = len(head) - (head.rfind("\n") + 1) + 1
        raise DslError("invalid UTF-8", line, col) from None


def parse(text) -> Workspace:
    """Workspace from DSL text (str or bytes); every error is a DslError with a location."""
    src = _decode(text)
    decls = _Parser(tokenize(src)).file()
    try:
        return _Builder(decls).build()
    except RecursionError:
        raise DslError("nesting too deep", 1, 1) from None


# -- printer --------------------------------------------------------------------

def _q(name) -> str:
    s = str(name)
    if IDENT.match(s):
        return s
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _category_text(name, cat) -> str:
    lines = [f"category {_q(name)} {{", "  objects: " + " ".join(_q(o) for o in sorted(cat.objects)) + ";"]
    plain = sorted(m for m in cat.morphisms if not cat.is_identity(m))
    if plain:
        lines.append("  morphisms:")
        lines += [f"    {_q(m)} : {_q(cat.dom(m))} -> {_q(cat.cod(m))}" for m in plain]
        lines.append("  ;")
    comps = []
    for g in plain:
        for f in plain:
            if cat.cod(f) == cat.dom(g):
                comps.append(f"    {_q(g)} * {_q(f)} = {_q(_ids(cat, cat.compose(g, f)))};")
    if comps:
        lines.append("  compose:")
        lines += comps
    lines.append("}")
    return "\n".join(lines)


def _functor_text(name, F, src_name, dst_name) -> str:
    S, D = F.src, F.dst
    lines = [f"functor {_q(name)} : {_q(src_name)} -> {_q(dst_name)} {{",
             "  objects: " + " ".join(f"{_q(o)} => {_q(F.ob(o))}" for o in sorted(S.objects)) + ";"]
    mm = [f"{_q(m)} => {_q(_ids(D, F.mor(m)))}" for m in sorted(S.morphisms) if not S.is_identity(m)]
    if mm:
        lines.append("  morphisms: " + " ".join(mm) + ";")
    lines.append("}")
    return "\n".join(lines)


def canonical_text(ws: Workspace) -> str:
    """Deterministic text: kinds in a fixed order, names and entries sorted."""
    out = []
    cat_name = {id(c): n for n, c in ws.categories.items()}

    def cname(c):
        return cat_name.get(id(c), c.name)

    for n in sorted(ws.spaces):
        X = ws.spaces[n]
        opens = sorted(X.opens, key=lambda U: (len(U), sorted(U)))
        out.append(f"space {_q(n)} {{\n  points: " + " ".join(_q(p) for p in sorted(X.points)) +
                   ";\n  opens: " + " ".join("{" + " ".join(_q(p) for p in sorted(U)) + "}" for U in opens) +
                   ";\n}")
    for n in sorted(ws.categories):
        out.append(_category_text(n, ws.categories[n]))
    for n in sorted(ws.functors):
        F = ws.functors[n]
        out.append(_functor_text(n, F, cname(F.src), cname(F.dst)))
    for n in sorted(ws.sites):
        s = ws.sites[n]
        lines = [f"site {_q(n)} on {_q(s.on)} {{"]
        if not s.auto:
            for b in sorted(s.pretopology.coverings):
                for fam in sorted(sorted(c) for c in s.pretopology.coverings[b]):
                    lines.append(f"  cover {_q(b)} {{" + " ".join(_q(f) for f in fam) + "};")
        lines.append("}")
        out.append("\n".join(lines))
    for n in sorted(ws.presheaves):
        P = ws.presheaves[n]
        C = P.base
        lines = [f"presheaf {_q(n)} on {_q(getattr(P, 'on', C.name))} {{", "  values:"]
        lines += [f"    {_q(c)} {{" + " ".join(_q(x) for x in sorted(P.values[c], key=str)) + "}"
                  for c in sorted(C.objects)]
        lines.append("  ;")
        plain = sorted(u for u in C.morphisms if not C.is_identity(u))
        if plain:
            lines.append("  restrict:")
            for u in plain:
                m = P.restrict[u]
                lines.append(f"    {_q(u)} {{" + " ".join(f"{_q(a)} => {_q(m[a])}" for a in sorted(m, key=str)) + "}")
            lines.append("  ;")
        lines.append("}")
        out.append("\n".join(lines))
    for n in sorted(ws.pseudofunctors):
        out.append(_pseudofunctor_text(n, ws.pseudofunctors[n], cname, ws))
    for n in sorted(ws.groups):
        G = ws.groups[n]
        els = sorted(G.elements, key=str)
        lines = [f"group {_q(n)} {{", "  elements: " + " ".join(_q(e) for e in els) + ";",
                 f"  unit: {_q(G.unit)};"]
        rest = [e for e in els if e != G.unit]
        if rest:
            lines.append("  mul:")
            lines += [f"    {_q(a)} * {_q(b)} = {_q(G(a, b))};" for a in rest for b in rest]
        lines.append("}")
        out.append("\n".join(lines))
    for n in sorted(ws.actions):
        a = ws.actions[n]
        G = ws.groups[a.group]
        body = [f"  {_q(g)} => {_q(a.sigma[g])};" for g in sorted(a.sigma, key=str) if g != G.unit]
        out.append("\n".join([f"action {_q(n)} : {_q(a.group)} on {_q(a.object)} in {_q(a.category)} {{"]
                             + body + ["}"]))
    return "\n\n".join(out) + "\n"


def _pseudofunctor_text(n, P, cname, ws) -> str:
    B = P.base
    var = "contravariant" if P.variance == CONTRA else "covariant"
    fun_name = {id(F): k for k, F in ws.functors.items()}
    lines = [f"pseudofunctor {_q(n)} on {_q(getattr(P, 'on', B.name))} {var} {{",
             "  values: " + " ".join(f"{_q(b)} => {_q(cname(P.values[b]))}" for b in sorted(B.objects)) + ";"]
    acts = []
    for u in sorted(B.morphisms):
        F = P.actions[u]
        nm = fun_name.get(id(F))
        if nm is None:
            if B.is_identity(u) and _is_identity_functor(F):
                continue
            nm = F.name
        acts.append(f"{_q(u)} => {_q(nm)}")
    if acts:
        lines.append("  actions: " + " ".join(acts) + ";")
    comp = []
    for (g, f) in sorted(P.comp_iso):
        V = P._target_value(g, f)
        for e in sorted(P.comp_iso[(g, f)]):
            m = P.comp_iso[(g, f)][e]
            if not V.is_identity(m):
                comp.append(f"    {_q(g)} {_q(f)} {_q(e)} => {_q(m)}")
    if comp:
        lines += ["  comp:"] + comp + ["  ;"]
    unit = []
    for b in sorted(P.id_iso):
        V = P.values[b]
        for e in sorted(P.id_iso[b]):
            m = P.id_iso[b][e]
            if not V.is_identity(m):
                unit.append(f"    {_q(b)} {_q(e)} => {_q(m)}")
    if unit:
        lines += ["  unit:"] + unit + ["  ;"]
    lines.append("}")
    return "\n".join(lines)


def _is_identity_functor(F) -> bool:
    return F.src is F.dst and all(F.ob(o) == o for o in F.src.objects) and \
        all(F.mor(m) == m for m in F.src.morphisms)


def to_text(ws: Workspace) -> str:
    return canonical_text(ws)


def workspace_of(categories=(), functors=()) -> Workspace:
    """Workspace holding the given categories and functors under their own names."""
    ws = Workspace()
    for c in categories:
        ws.categories[c.name] = c
    for F in functors:
        ws.functors[F.name] = F
    return ws


__all__ = ["Tok", "tokenize", "Decl", "Workspace", "Site", "GroupAction", "parse", "to_text",
           "canonical_text", "workspace_of"]
