"""Command-line front end.

Exit status: 0 when the checked property holds (satisfiable, nonempty,
member, covered), 1 when it fails, 2 for usage or input errors, 3 when a
construction hits the state cap.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import buchi, ftree, rabin, samples
from .core import (
    CapabilityError, GranulogError, ResourceLimit, SchemaError, dumps, loads,
    model_from_json, model_to_json, set_max_states,
)
from .logic import (
    Semantics, compile_formula, eval_formula, parse_formula, partition_formulas, render,
    sat_check,
)
from .mso import emit_mso
from .periodic import LengthGraph, ppp
from .temporalized import (
    TemporalizedAutomaton, check_its_certificate, inner_from_json, its_empty,
    partition_alphabet, t_boolean, t_empty, t_from_json, t_member, t_project,
    t_to_dot, t_to_json,
)

OK, FAILS, BAD_INPUT, CAPPED = 0, 1, 2, 3


class Report:
    """Collects the outcome of one command; printed as text or JSON."""

    def __init__(self, verb, as_json):
        self.verb = verb
        self.as_json = as_json
        self.fields = {"command": verb}
        self.lines = []

    def set(self, key, value, text=None):
        self.fields[key] = value
        if text is not None:
            self.lines.append(text)

    def say(self, text):
        self.lines.append(text)

    def emit(self, out):
        if self.as_json:
            out.write(dumps(self.fields) + "\n")
        else:
            for line in self.lines:
                out.write(line + "\n")


# ------------------------------------------------------------ file input


def _read(path):
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read: {e.strerror}", str(path)) from None


def load_automaton(path):
    data = loads(_read(path), path)
    if isinstance(data, dict) and data.get("kind") == "temporalized":
        return t_from_json(data, path)
    return inner_from_json(data, path)


def _load_formula(args):
    """Formula text, and the semantics from --semantics or the file header."""
    if args.formula is not None:
        text, meta = args.formula, {}
    elif args.file is not None:
        entry = samples.read_entry(args.file) if args.file != "-" else samples.Entry(
            "stdin", sys.stdin.read())
        text, meta = entry.text, entry.meta
        if meta.get("executable") == "no" and args.semantics is None:
            raise CapabilityError(f"{args.file} is marked non-executable: "
                                  f"{meta.get('semantics', 'its semantics')} is not supported")
    else:
        raise SchemaError("give a formula file or --formula TEXT")
    sem_text = args.semantics or meta.get("semantics")
    if sem_text is None:
        raise SchemaError("no semantics given; use --semantics")
    sem = Semantics.parse(sem_text)
    return parse_formula(text, sem.k), sem


# ---------------------------------------------------- per-class dispatch


def _kind(a):
    if isinstance(a, TemporalizedAutomaton):
        return "temporalized"
    if isinstance(a, buchi.BuchiAutomaton):
        return "buchi"
    if isinstance(a, ftree.TreeAutomaton):
        return "ftree"
    return "rabin"


def automaton_json(a):
    return {
        "temporalized": t_to_json, "buchi": buchi.buchi_to_json,
        "ftree": ftree.fta_to_json, "rabin": rabin.rabin_to_json,
    }[_kind(a)](a)


def _empty(a):
    return {
        "temporalized": t_empty, "buchi": buchi.buchi_empty,
        "ftree": ftree.fta_empty, "rabin": rabin.rabin_empty,
    }[_kind(a)](a)


def _member(a, m):
    return {
        "temporalized": t_member, "buchi": buchi.buchi_member,
        "ftree": ftree.fta_member, "rabin": rabin.rabin_member,
    }[_kind(a)](a, m)


def _boolean(op, a, b, method):
    kind = _kind(a)
    if b is not None and _kind(b) != kind:
        raise SchemaError(f"cannot combine {kind} with {_kind(b)}")
    options = {"method": method} if method else {}
    if kind == "temporalized":
        return t_boolean(op, a, b, **options)
    if kind == "buchi":
        return buchi.buchi_boolean(op, a, b, **options)
    if kind == "ftree":
        if options:
            raise SchemaError("--method applies to Büchi and temporalized automata")
        return ftree.reachable_trim(ftree.fta_boolean(op, a, b))
    if op == "union":
        return rabin.rabin_union(a, b)
    raise CapabilityError(f"Rabin tree automata do not support {op}")


def _project(a, drop):
    return {
        "temporalized": t_project, "buchi": buchi.buchi_project,
        "ftree": ftree.fta_project, "rabin": rabin.rabin_project,
    }[_kind(a)](a, drop)


def _dot(a):
    return {
        "temporalized": t_to_dot, "buchi": buchi.buchi_to_dot,
        "ftree": ftree.fta_to_dot, "rabin": rabin.rabin_to_dot,
    }[_kind(a)](a)


def _write(path, obj):
    text = obj if isinstance(obj, str) else dumps(obj) + "\n"
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot write: {e.strerror}", str(path)) from None


def _output(args, report, obj, key):
    """Print an automaton (or other JSON) or save it with -o."""
    if args.output:
        _write(args.output, obj)
        report.set("output", args.output, f"wrote {args.output}")
    else:
        report.set(key, obj, dumps(obj))


# ------------------------------------------------------------- commands


def cmd_sat(args, report):
    f, sem = _load_formula(args)
    result = sat_check(f, sem)
    report.set("formula", render(f))
    report.set("semantics", str(sem))
    report.set("verdict", result.verdict, result.verdict)
    if result.witness is not None:
        if sem.kind == "uuls":
            witness = result.witness
            report.say("certificate: " + dumps(witness))
        else:
            witness = model_to_json(result.witness)
            report.say("witness: " + dumps(witness))
        report.set("witness", witness)
        if args.witness:
            _write(args.witness, witness)
    return OK if result.verdict == "SAT" else FAILS


def cmd_empty(args, report):
    a = load_automaton(args.automaton)
    empty, witness = _empty(a)
    report.set("empty", empty, "empty" if empty else "nonempty")
    if witness is not None:
        report.set("witness", model_to_json(witness), "witness: " + dumps(model_to_json(witness)))
        if args.witness:
            _write(args.witness, model_to_json(witness))
    return FAILS if empty else OK


def cmd_its_empty(args, report):
    a = load_automaton(args.automaton)
    if not isinstance(a, TemporalizedAutomaton):
        raise SchemaError("its-empty expects a temporalized bundle")
    empty, cert = its_empty(a, exhaustive=args.exhaustive)
    report.set("empty", empty, "empty" if empty else "nonempty")
    if cert is not None:
        report.set("certificate", cert, "certificate: " + dumps(cert))
        report.set("certificate_valid", check_its_certificate(a, cert))
        if args.witness:
            _write(args.witness, cert)
    return FAILS if empty else OK


def cmd_member(args, report):
    if args.formula is not None:
        if len(args.paths) != 1:
            raise SchemaError("with --formula, give only the model file")
        args.target, args.model = None, args.paths[0]
    elif len(args.paths) != 2:
        raise SchemaError("give an automaton or formula file and a model file")
    else:
        args.target, args.model = args.paths
    data = loads(_read(args.model), args.model)
    if args.formula is not None or args.target.endswith(".tl"):
        args.file = None if args.formula is not None else args.target
        f, sem = _load_formula(args)
        if isinstance(data, dict) and "facts" in data:
            if sem.kind != "uuls":
                raise SchemaError("certificates apply to uuls semantics")
            ok = check_its_certificate(compile_formula(f, sem), data)
            report.set("certificate_valid", ok, "valid" if ok else "invalid")
            return OK if ok else FAILS
        m = model_from_json(data, args.model)
        ok = eval_formula(f, m)
        report.set("member", ok, "member" if ok else "not a member")
        return OK if ok else FAILS
    a = load_automaton(args.target)
    if isinstance(data, dict) and "facts" in data:
        if not isinstance(a, TemporalizedAutomaton):
            raise SchemaError("certificates apply to temporalized bundles")
        ok = check_its_certificate(a, data)
        report.set("certificate_valid", ok, "valid" if ok else "invalid")
        return OK if ok else FAILS
    ok = _member(a, model_from_json(data, args.model))
    report.set("member", ok, "member" if ok else "not a member")
    return OK if ok else FAILS


def cmd_bool(args, report):
    a = load_automaton(args.a)
    if args.op == "complement":
        if args.b is not None:
            raise SchemaError("complement takes one automaton")
        b = None
    else:
        if args.b is None:
            raise SchemaError(f"{args.op} takes two automata")
        b = load_automaton(args.b)
    _output(args, report, automaton_json(_boolean(args.op, a, b, args.method)), "automaton")
    return OK


def cmd_project(args, report):
    drop = [x for x in args.drop.split(",") if x]
    _output(args, report, automaton_json(_project(load_automaton(args.automaton), drop)),
            "automaton")
    return OK


def cmd_partition(args, report):
    if args.formula is not None or (args.target or "").endswith(".tl"):
        args.file = None if args.formula is not None else args.target
        f, sem = _load_formula(args)
        part = partition_formulas(f, sem)
        cells = [{"name": c.name, "formula": render(c.formula), "signs": list(c.signs)}
                 for c in part.cells]
        report.set("cells", cells)
        for c in cells:
            report.say(f"{c['name']}: {c['formula']}")
        beta = render(part.beta.formula) if part.beta else None
        report.set("rest", beta, f"{part.beta.name}: {beta}" if part.beta else "no rest cell")
        report.set("formula", render(part.formula), "formula: " + render(part.formula))
        return OK
    if args.target is None:
        raise SchemaError("give a bundle or formula file, or --formula TEXT")
    a = load_automaton(args.target)
    if not isinstance(a, TemporalizedAutomaton):
        raise SchemaError("partition expects a temporalized bundle or a formula")
    _output(args, report, t_to_json(partition_alphabet(a)), "automaton")
    return OK


def cmd_ppp(args, report):
    g = LengthGraph.from_json(loads(_read(args.graph), args.graph))
    if args.a < 0 or args.l < 0:
        raise SchemaError("a and l must be non-negative")
    holds, witness = ppp(g, args.a, args.l)
    report.set("holds", holds, "covered" if holds else "not covered")
    if witness is not None:
        w = {"stem": list(witness.stem), "loop": list(witness.loop)}
        report.set("witness", w, f"classes: stem {w['stem']} loop {w['loop']}")
    return OK if holds else FAILS


def cmd_emit_mso(args, report):
    a = load_automaton(args.automaton)
    if not isinstance(a, TemporalizedAutomaton):
        raise CapabilityError("emit-mso expects a temporalized bundle with Rabin inners")
    text = emit_mso(a)
    if args.output:
        _write(args.output, text)
        report.set("output", args.output, f"wrote {args.output}")
    else:
        report.set("mso", text, text.rstrip("\n"))
    return OK


def cmd_dot(args, report):
    text = _dot(load_automaton(args.automaton))
    if args.output:
        _write(args.output, text)
        report.set("output", args.output, f"wrote {args.output}")
    else:
        report.set("dot", text, text.rstrip("\n"))
    return OK


def cmd_demo(args, report):
    group = args.group
    models = samples.models(group)
    results, ok = [], True
    if group == "hv-station":
        report.say("layers: 30 s, 10 s, 5 s, 50 ms, read as a uniform 3-ary structure of depth 3")
    for entry in samples.entries(group):
        row = {"name": entry.name, "semantics": entry.semantics}
        if not entry.executable:
            row["status"] = "skipped"
            report.say(f"{entry.name}: skipped, not executable under {entry.semantics}")
            results.append(row)
            continue
        sem = Semantics.parse(entry.semantics)
        f = parse_formula(entry.text, sem.k)
        verdict = sat_check(f, sem).verdict
        row["verdict"] = verdict
        good = entry.expect is None or verdict == entry.expect
        line = f"{entry.name}: {verdict} under {sem}"
        for mname, m in models.items():
            holds = eval_formula(f, m)
            row.setdefault("models", {})[mname] = holds
            good = good and holds
            line += f"; holds on {mname}: {'yes' if holds else 'no'}"
        row["status"] = "ok" if good else "failed"
        ok = ok and good
        report.say(line + ("" if good else "  <-- unexpected"))
        results.append(row)
    report.set("group", group)
    report.set("results", results)
    report.set("ok", ok, "all checks passed" if ok else "some checks failed")
    return OK if ok else FAILS


# ------------------------------------------------------------ the parser


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--max-states", type=int, metavar="N",
                        help="state cap for constructions (also GRANULOG_MAX_STATES)")

    p = argparse.ArgumentParser(prog="granulog", description=__doc__.split("\n")[0],
                                parents=[common])
    sub = p.add_subparsers(dest="verb", required=True, metavar="VERB")

    def verb(name, func, help):
        s = sub.add_parser(name, help=help, parents=[common], description=help)
        s.set_defaults(func=func)
        return s

    def formula_options(s):
        s.add_argument("--semantics", "-s", help="seq-of-seq, layered:k=K,depth=D or uuls:k=K")
        s.add_argument("--formula", "-f", help="formula text instead of a file")

    s = verb("sat", cmd_sat, "decide satisfiability of a layered formula")
    s.add_argument("file", nargs="?", help=".tl formula file")
    formula_options(s)
    s.add_argument("--witness", metavar="OUT", help="save the witness model or certificate")

    s = verb("empty", cmd_empty, "decide emptiness of an automaton")
    s.add_argument("automaton")
    s.add_argument("--witness", metavar="OUT", help="save an accepted model")

    s = verb("its-empty", cmd_its_empty,
             "decide whether a bundle accepts some increasing tree sequence")
    s.add_argument("automaton")
    s.add_argument("--exhaustive", action="store_true",
                   help="also try lassos that revisit outer states")
    s.add_argument("--witness", metavar="OUT", help="save the certificate")

    s = verb("member", cmd_member,
             "check a model (or ITS certificate) against an automaton or formula file")
    s.add_argument("paths", nargs="+", metavar="FILE",
                   help="automaton JSON or .tl formula file (omit with --formula), then the model")
    formula_options(s)

    s = verb("bool", cmd_bool, "union, intersection or complement")
    s.add_argument("op", choices=["union", "intersect", "complement"])
    s.add_argument("a")
    s.add_argument("b", nargs="?")
    s.add_argument("--method", choices=["safra", "rank", "product", "demorgan"],
                   help="complementation (safra, rank) or bundle intersection "
                        "(product, demorgan) method")
    s.add_argument("--output", "-o")

    s = verb("project", cmd_project, "existentially project propositions away")
    s.add_argument("automaton")
    s.add_argument("--drop", required=True, help="comma-separated proposition names")
    s.add_argument("--output", "-o")

    s = verb("partition", cmd_partition,
             "partition a bundle's labels, or a formula's bracketed subformulas")
    s.add_argument("target", nargs="?", help="temporalized bundle JSON or .tl formula file")
    formula_options(s)
    s.add_argument("--output", "-o")

    s = verb("ppp", cmd_ppp, "periodic path problem on a graph")
    s.add_argument("graph")
    s.add_argument("--a", type=int, required=True, help="offset")
    s.add_argument("--l", type=int, required=True, help="period")

    s = verb("emit-mso", cmd_emit_mso, "MSO text for a bundle with Rabin inners")
    s.add_argument("automaton")
    s.add_argument("--output", "-o")

    s = verb("dot", cmd_dot, "Graphviz rendering of an automaton")
    s.add_argument("automaton")
    s.add_argument("--output", "-o")

    s = verb("demo", cmd_demo, "run a bundled group of examples")
    s.add_argument("group", nargs="?", default="hv-station", choices=samples.groups())
    return p


def _check_method(args):
    method = getattr(args, "method", None)
    if method is None:
        return
    if args.op == "complement" and method not in ("safra", "rank"):
        raise SchemaError(f"complement takes --method safra or rank, not {method}")
    if args.op == "intersect" and method not in ("product", "demorgan"):
        raise SchemaError(f"intersect takes --method product or demorgan, not {method}")
    if args.op == "union":
        raise SchemaError("union takes no --method")


def run(argv, out=None, err=None):
    """Run one command; returns the exit status."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return BAD_INPUT if e.code else OK
    report = Report(args.verb, args.json)
    if args.max_states is not None and args.max_states < 1:
        err.write("granulog: --max-states must be positive\n")
        return BAD_INPUT
    set_max_states(args.max_states)
    try:
        if args.verb == "bool":
            _check_method(args)
        for name in ("formula", "file", "semantics"):
            if not hasattr(args, name):
                setattr(args, name, None)
        code = args.func(args, report)
    except ResourceLimit as e:
        code = CAPPED
        report.set("error", str(e))
        err.write(f"granulog: resource cap reached: {e}\n")
    except (GranulogError, ValueError, RecursionError) as e:
        code = BAD_INPUT
        report.set("error", str(e))
        err.write(f"granulog: {e}\n")
    finally:
        set_max_states(None)
    report.set("exit", code)
    if code in (OK, FAILS) or args.json:
        report.emit(out)
    return code


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
