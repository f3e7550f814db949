"""Command line: ``catspec validate|check|grothendieck|quotient|covering``.

Every command prints one JSON report.  Exit status 0 means the check
passed, 1 that it failed (the report carries a witness), 2 a usage or
input error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from . import guard
from .dsl import Workspace, parse, to_text
from .errors import CatspecError, DslError, GuardrailExceeded, PreconditionError
from .fibrations import classify
from .fincat import analyze_functor, validate_category, validate_functor
from .grothendieck import grothendieck, validate_pseudofunctor
from .groups import ObjectEquivalence, covering_analysis, is_effective, quotient_object
from .sites import generate_topology, is_sheaf, validate_pretopology, validate_topology
from .stacks import stack_flags
from .structures import is_structure

SCHEMA = 1
CHECKS = ("category", "functor", "fibration", "opfibration", "bifibration", "structure",
          "pretopology", "topology", "sheaf", "prestack", "stack", "pseudofunctor", "group", "action")


class UsageError(Exception):
    pass


def plain(x):
    """JSON-ready copy with sets sorted and tuples as lists."""
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (set, frozenset)):
        return sorted((plain(v) for v in x), key=repr)
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return x.item()
    return x


def _get(ws: Workspace, kind: str, name: str | None, flag: str):
    if not name:
        raise UsageError(f"--{flag} is required")
    table = getattr(ws, kind)
    if name not in table:
        raise UsageError(f"no {flag} named {name!r} in the file")
    return table[name]


def _load(path) -> Workspace:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    return parse(data)


def cmd_validate(args) -> tuple:
    ws = _load(args.file)
    return True, {"counts": ws.counts()}


def cmd_check(args) -> tuple:
    ws = _load(args.file)
    kind = args.kind
    if kind == "category":
        c = _get(ws, "categories", args.category, "category")
        rep = validate_category(c)
        return rep.ok, {"category": c.name, "objects": len(c.objects), "morphisms": len(c.morphisms),
                        "violations": rep.violations}
    if kind in ("functor", "fibration", "opfibration", "bifibration", "structure"):
        F = _get(ws, "functors", args.functor, "functor")
        if kind == "functor":
            rep = validate_functor(F)
            if not rep.ok:
                return False, {"functor": F.name, "violations": rep.violations}
            return True, {"functor": F.name, **analyze_functor(F, quasi_inverse=False).flags()}
        if kind == "structure":
            s = is_structure(F)
            return s.ok, {"functor": F.name, **plain(vars(s))}
        c = classify(F)
        ok = {"fibration": c.fibration, "opfibration": c.cofibration, "bifibration": c.bifibration}[kind]
        return ok, {"functor": F.name, "flags": c.flags(), "witnesses": plain(c.witnesses)}
    if kind in ("pretopology", "topology"):
        s = _get(ws, "sites", args.site, "site")
        if kind == "pretopology":
            v = validate_pretopology(s.pretopology)
            return v.ok, {"site": s.name, "reason": v.reason, "witness": plain(v.witness)}
        J = generate_topology(s.pretopology)
        v = validate_topology(J)
        return v.ok, {"site": s.name, "sieves": {b: len(J.sieves[b]) for b in sorted(J.sieves)},
                      "reason": v.reason, "witness": plain(v.witness)}
    if kind == "sheaf":
        P = _get(ws, "presheaves", args.presheaf, "presheaf")
        s = _get(ws, "sites", args.site, "site")
        _same_base(P.base, s)
        v = is_sheaf(P, generate_topology(s.pretopology))
        return v.ok, {"presheaf": P.name, "site": s.name, "reason": v.reason, "witness": plain(v.witness)}
    if kind in ("prestack", "stack"):
        F = _get(ws, "pseudofunctors", args.pseudofunctor, "pseudofunctor")
        s = _get(ws, "sites", args.site, "site")
        _same_base(F.base, s)
        flags = stack_flags(F, generate_topology(s.pretopology))
        return flags[kind], {"pseudofunctor": F.name, "site": s.name, "prestack": flags["prestack"],
                             "stack": flags["stack"], "witness": plain(flags["witness"])}
    if kind == "pseudofunctor":
        F = _get(ws, "pseudofunctors", args.pseudofunctor, "pseudofunctor")
        rep = validate_pseudofunctor(F)
        return rep.ok, {"pseudofunctor": F.name, "violations": plain(rep.violations)}
    if kind == "group":
        G = _get(ws, "groups", args.group, "group")
        return G.is_group(), {"group": G.name, "order": len(G), "cyclic": G.is_cyclic()}
    if kind == "action":
        a = _get(ws, "actions", args.action, "action")
        G, C = ws.groups[a.group], ws.categories[a.category]
        ok = all(a.sigma[G(x, y)] == C.compose(a.sigma[x], a.sigma[y]) for x in G.elements for y in G.elements)
        return ok, {"action": a.name, "group": a.group, "object": a.object,
                    "faithful": len(set(a.sigma.values())) == len(G)}
    raise UsageError(f"unknown check {kind!r}")


def _same_base(B, site):
    if B is not site.base and B.objects != site.base.objects:
        raise UsageError("the site and the data live on different categories")


def cmd_grothendieck(args) -> tuple:
    ws = _load(args.file)
    F = _get(ws, "pseudofunctors", args.pseudofunctor, "pseudofunctor")
    total, p = grothendieck(F)
    base_name = F.on if F.on in ws.categories else f"{F.on}_opens"
    total.name = f"{F.name}_total"
    p.name = f"p_{F.name}"
    out = Workspace()
    out.categories[base_name] = F.base
    out.categories[total.name] = total
    out.functors[p.name] = p
    c = classify(p)
    rep = {"pseudofunctor": F.name, "objects": len(total.objects), "morphisms": len(total.morphisms),
           "fibration": c.fibration, "category": total.name, "projection": p.name}
    text = to_text(out)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        rep["out"] = args.out
    return c.fibration, rep


def cmd_quotient(args) -> tuple:
    ws = _load(args.file)
    a = _get(ws, "actions", args.action, "action")
    C = ws.categories[a.category]
    E = ObjectEquivalence.from_action(C, a.object, a.sigma)
    found = quotient_object(E)
    if found is None:
        return False, {"action": a.name, "quotient": None}
    Q, pi = found
    return True, {"action": a.name, "quotient": Q, "map": pi, "effective": is_effective(E, pi)}


def cmd_covering(args) -> tuple:
    ws = _load(args.file)
    p = _get(ws, "functors", args.functor, "functor")
    try:
        r = covering_analysis(p, args.object)
    except PreconditionError as e:
        return False, {"functor": p.name, "covering": False, "reason": str(e)}
    if not r.is_covering:
        return False, {"functor": p.name, "covering": False, "reason": r.reason}
    return r.iso_verified, {"functor": p.name, "covering": True, "deckOrder": len(r.deck),
                            "stabilizer": r.stab, "normalizer": r.normalizer, "weylOrder": r.weyl_order,
                            "isoVerified": r.iso_verified}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="catspec", description="Exhaustive checks on finite categorical data.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="JSON output (the default)")
    common.add_argument("--max-morphisms", type=int, help="guardrail on category size")
    common.add_argument("--timing", action="store_true", help="add wall-clock time to the report")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", parents=[common], help="parse a .cat file and run every validator")
    v.add_argument("file")
    c = sub.add_parser("check", parents=[common], help="run one check")
    c.add_argument("kind", choices=CHECKS)
    for flag in ("file", "category", "functor", "site", "presheaf", "pseudofunctor", "group", "action"):
        c.add_argument(f"--{flag}")
    g = sub.add_parser("grothendieck", parents=[common], help="total category of a pseudofunctor")
    g.add_argument("--pseudofunctor")
    g.add_argument("--file")
    g.add_argument("--out")
    q = sub.add_parser("quotient", parents=[common], help="quotient of an object by a group action")
    q.add_argument("--action")
    q.add_argument("--file")
    cv = sub.add_parser("covering", parents=[common], help="deck group of a discrete fibration")
    cv.add_argument("--functor")
    cv.add_argument("--object")
    cv.add_argument("--file")
    return ap


COMMANDS = {"validate": cmd_validate, "check": cmd_check, "grothendieck": cmd_grothendieck,
            "quotient": cmd_quotient, "covering": cmd_covering}


def run(argv=None) -> tuple:
    """(exit code, report dict)."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return (2 if e.code else 0), None
    report = {"schema": SCHEMA, "command": args.command}
    if args.command == "check":
        report["check"] = args.kind
    start = time.perf_counter()
    code = 2
    try:
        if getattr(args, "file", None) is None:
            raise UsageError("--file is required")
        bound = args.max_morphisms
        with guard.guardrail(bound if bound is not None else guard.max_morphisms()):
            ok, result = COMMANDS[args.command](args)
        report["ok"] = bool(ok)
        report["result"] = plain(result)
        code = 0 if ok else 1
    except DslError as e:
        report["error"] = {"kind": "syntax", "message": e.message, "line": e.line, "column": e.col}
    except GuardrailExceeded as e:
        report["error"] = {"kind": "guardrail", "message": str(e)}
    except UsageError as e:
        report["error"] = {"kind": "usage", "message": str(e)}
    except CatspecError as e:
        report["error"] = {"kind": "precondition", "message": str(e)}
    if args.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - start, 6)}
    return code, report


def main(argv=None) -> int:
    code, report = run(argv)
    if report is not None:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
