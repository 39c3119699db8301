"""Command-line front end.

Exit status: 0 when the command's verdict is positive, 1 when it is
negative, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import BenchError, loglog_slope, records_to_csv, run_bench
from .codegen import generate_api
from .core import TableError, check_well_formed, classify
from .grammars.io import (format_tree_grammar, load_grammar, tree_grammar_to_json, cfg_to_json)
from .grammars.strings import (StringCfg, cfg_to_gnf, cfg_to_monadic_cftg, format_cfg)
from .grammars.trees import GrammarError, TreeGrammar, ecftg_to_cftg
from .pipeline import build_machine
from .subtyping import (AlphabetSplit, Holds, CycleRejected, FragmentRefused, Undecided, decide,
                        decide_non_contravariant, decide_non_expansive, parse_query, trace_to_json)
from .tableio import TableFile, format_table, load_table, table_to_json
from .terms import TermSyntaxError, format_term, parse_term
from .transforms import (class_table_to_gnf_cftg, class_table_to_rtg, gnf_cftg_to_class_table,
                         rtg_to_class_table)

OK, NO, BAD = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        sys.stdout.write(text if text.endswith("\n") or not text else text + "\n")


def _load_any(text: str):
    """A class table, a tree grammar or a string grammar, by content."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        return load_table(text) if "classes" in data else load_grammar(text)
    if "::=" in text or "->" in text:
        return load_grammar(text)
    return load_table(text)


# -- commands ------------------------------------------------------------------


def cmd_check(args) -> int:
    table = load_table(_read(args.table)).table
    diags = check_well_formed(table)
    payload = {"well_formed": not diags,
               "diagnostics": [{"code": d.code, "class": d.cls, "supertype": d.supertype,
                                "message": d.message} for d in diags]}
    _emit(args, payload, "well-formed" if not diags else "\n".join(map(str, diags)))
    return OK if not diags else NO


def cmd_classify(args) -> int:
    table = load_table(_read(args.table)).table
    diags = check_well_formed(table)
    if diags:
        _emit(args, {"well_formed": False, "diagnostics": [str(d) for d in diags]},
              "\n".join(map(str, diags)))
        return NO
    f = classify(table)
    mark = lambda on, c: c if on else "¬" + c  # noqa: E731
    text = (f"{mark(f.contravariant, 'C')} {mark(f.expansive, 'X')} {mark(f.multiple_instantiation, 'M')}"
            f"  fragment {f.fragment}  {'decidable' if f.decidable else 'undecidable'}")
    _emit(args, f.as_dict(), text)
    return OK if f.decidable else NO


def cmd_member(args) -> int:
    tf = load_table(_read(args.table))
    split = AlphabetSplit(None, tf.sigma_top) if tf.sigma_top else None
    q = parse_query(args.query, split)
    engines = {"auto": lambda t, q: decide(t, q, bounded_depth=args.bounded_depth),
               "nonexp": decide_non_expansive, "noncontra": decide_non_contravariant}
    verdict = engines[args.engine](tf.table, q)
    payload = {"query": str(q), "verdict": verdict.label}
    lines = [f"{q}: {verdict.label}"]
    if isinstance(verdict, CycleRejected):
        payload["cycle"] = verdict.describe()
        lines += ["  cycle: " + " ⇐ ".join(verdict.describe())]
    if isinstance(verdict, Undecided):
        payload["reason"] = verdict.reason
        lines.append(f"  {verdict.reason}")
    if args.trace and isinstance(verdict, Holds):
        nodes = trace_to_json(tf.table, q, verdict.trace)
        payload["trace"] = nodes
        for n in nodes:
            decl = f"  [{n['decl']['class']} : {n['decl']['supertype']}]" if "decl" in n else ""
            lines.append(f"  #{n['id']} {n['rule']:5} {n['query']}{decl}")
    _emit(args, payload, "\n".join(lines))
    return OK if verdict.positive else NO


def _table_context(tf: TableFile, args):
    subtype = parse_term(args.subtype) if args.subtype else tf.subtype
    if subtype is None:
        raise UsageError("a fixed subtype is needed: pass --subtype or add '# subtype:' to the table")
    sigma = [s.strip() for s in args.sigma_top.split(",")] if args.sigma_top else tf.sigma_top
    return subtype, sigma


def _grammar_out(args, g: TreeGrammar) -> tuple[dict, str]:
    return tree_grammar_to_json(g), format_tree_grammar(g)


def _table_out(table, subtype, sigma) -> tuple[dict, str]:
    return table_to_json(table, subtype, sigma), format_table(table, subtype, sigma)


def cmd_convert(args) -> int:
    obj = _load_any(_read(args.input))
    target = args.to
    if isinstance(obj, TableFile):
        subtype, sigma = _table_context(obj, args)
        if target == "rtg":
            payload, text = _grammar_out(args, class_table_to_rtg(obj.table, subtype, sigma))
        elif target == "cftg":
            payload, text = _grammar_out(args, class_table_to_gnf_cftg(obj.table, subtype, sigma))
        elif target == "table":
            payload, text = _table_out(obj.table, subtype, sigma)
        else:
            raise UsageError("a class table converts to rtg, cftg or table")
    elif isinstance(obj, StringCfg):
        conv = cfg_to_gnf(obj)
        if target == "gnf":
            payload = {**cfg_to_json(conv.grammar), "empty_word": conv.empty_word}
            text = f"# empty word: {'yes' if conv.empty_word else 'no'}\n" + format_cfg(conv.grammar)
        elif target == "cftg":
            g = cfg_to_monadic_cftg(conv.grammar, args.end_marker, empty_word=conv.empty_word)
            payload, text = _grammar_out(args, g)
        elif target == "table":
            m = build_machine(obj)
            payload, text = _table_out(m.table, m.subtype, sorted(m.tokens) + [m.bottom])
            payload["empty_word"] = m.empty_word
            text = f"# empty word: {'yes' if m.empty_word else 'no'}\n" + text
        else:
            raise UsageError("a string grammar converts to gnf, cftg or table")
    else:
        if target == "table":
            enc = rtg_to_class_table(obj) if obj.is_regular else gnf_cftg_to_class_table(obj, dedup=not args.no_dedup)
            payload, text = _table_out(enc.table, enc.subtype, enc.split.sup)
        elif target == "cftg":
            payload, text = _grammar_out(args, ecftg_to_cftg(obj))
        elif target == "rtg":
            if not obj.is_regular:
                raise UsageError("the tree grammar is not regular")
            payload, text = _grammar_out(args, obj)
        else:
            raise UsageError("a tree grammar converts to table, cftg or rtg")
    _emit(args, payload, text)
    return OK


def cmd_gen(args) -> int:
    g = load_grammar(_read(args.grammar))
    if not isinstance(g, StringCfg):
        raise UsageError("gen expects a .cfg string grammar")
    m = build_machine(g)
    src = generate_api(m, fluent=args.fluent, namespace=args.namespace)
    payload = {"entry": m.entry, "empty_word": m.empty_word, "manifest": src.manifest}
    if args.output:
        out = Path(args.output)
        if out.is_dir():
            out = out / f"{m.entry}API.cs"
        out.write_text(src.text, encoding="utf-8")
        manifest_path = out.with_suffix(".manifest.json")
        manifest_path.write_text(src.manifest_json(), encoding="utf-8")
        payload.update(source=str(out), manifest_file=str(manifest_path))
        _emit(args, payload, f"wrote {out} and {manifest_path}")
    else:
        _emit(args, {**payload, "source": src.text}, src.text)
    return OK


def cmd_bench(args) -> int:
    g = load_grammar(_read(args.grammar))
    if not isinstance(g, StringCfg):
        raise UsageError("bench expects a .cfg string grammar")
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --sizes {args.sizes!r}") from None
    name = Path(args.grammar).stem if args.grammar != "-" else g.start
    records = run_bench(g, sizes, seed=args.seed, name=name, repeats=args.repeats)
    payload = {"grammar": name, "seed": args.seed,
               "records": [{"size": r.size, "elapsed_ms": r.elapsed_ms, "verdict": r.verdict,
                            "cyk": r.cyk} for r in records]}
    if len([r for r in records if r.size >= 1]) >= 2 and len({r.size for r in records}) >= 2:
        payload["loglog_slope"] = loglog_slope(records)
    _emit(args, payload, records_to_csv(records))
    return OK


# -- wiring --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="submachine",
                                description="Nominal subtyping with variance: decide, classify, convert, generate.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--json", action="store_true", help="emit one JSON object")
        sp.set_defaults(func=fn)
        return sp

    sp = add("check", cmd_check, "well-formedness diagnostics for a class table")
    sp.add_argument("table")
    sp = add("classify", cmd_classify, "report the C/X/M features of a class table")
    sp.add_argument("table")
    sp = add("member", cmd_member, "decide a subtyping query against a class table")
    sp.add_argument("table")
    sp.add_argument("query", help="'left <: right', 'left :> right' or 'left = right'")
    sp.add_argument("--trace", action="store_true", help="print the proof trace when the query holds")
    sp.add_argument("--engine", choices=("auto", "nonexp", "noncontra"), default="auto")
    sp.add_argument("--bounded-depth", type=int, default=None,
                    help="best-effort search depth for tables outside the decidable fragments")
    sp = add("convert", cmd_convert, "convert between class tables and grammars")
    sp.add_argument("input")
    sp.add_argument("--to", required=True, choices=("rtg", "cftg", "table", "gnf"))
    sp.add_argument("--subtype", help="fixed subtype for table inputs")
    sp.add_argument("--sigma-top", help="comma-separated super-alphabet for table inputs")
    sp.add_argument("--end-marker", default="E", help="leaf closing monadic trees (cfg to cftg)")
    sp.add_argument("--no-dedup", action="store_true", help="keep repeated productions (grammar to table)")
    sp = add("gen", cmd_gen, "generate C# source for a .cfg grammar")
    sp.add_argument("grammar")
    sp.add_argument("--fluent", action="store_true", help="also emit the fluent API")
    sp.add_argument("--namespace", default=None)
    sp.add_argument("-o", "--output", help="output file or directory (default: stdout)")
    sp = add("bench", cmd_bench, "time random membership queries through the generated machine")
    sp.add_argument("grammar")
    sp.add_argument("--sizes", required=True, help="comma-separated query lengths")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--repeats", type=int, default=1, help="report the best of this many runs")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, TableError, GrammarError, TermSyntaxError, FragmentRefused,
            BenchError, ValueError) as e:
        if getattr(args, "json", False):
            print(json.dumps({"error": type(e).__name__, "message": str(e)}))
        else:
            print(f"error: {e}", file=sys.stderr)
        return BAD


if __name__ == "__main__":
    sys.exit(main())
