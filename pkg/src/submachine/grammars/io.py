"""Text and JSON forms of tree grammars and string grammars.

Tree grammar text::

    # kind: cftg
    # terminals: a/1, b/1, E/0
    # variables: v0/1
    # initial: v0(E)
    v0(x) -> a(v0(a(x)))

Other ``#`` lines are comments.  When a ``# name = text`` comment names a
variable it is kept as that variable's annotation.
"""

from __future__ import annotations

import json
import re

from ..terms import Term, TermSyntaxError, format_term, iter_nodes, parse_term, term_from_json, term_to_json
from .strings import CfgSyntaxError, StringCfg, parse_cfg
from .trees import GrammarError, Production, RegularTreeGrammar, TreeGrammar


class GrammarSyntaxError(GrammarError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _ranked(items: dict[str, int]) -> str:
    return ", ".join(f"{n}/{k}" for n, k in items.items())


def format_tree_grammar(g: TreeGrammar) -> str:
    kind = "rtg" if g.is_regular else "cftg"
    lines = [f"# kind: {kind}",
             f"# terminals: {_ranked(g.terminals)}",
             f"# variables: {_ranked(g.variables)}",
             f"# initial: {format_term(g.initial)}"]
    lines += [f"# {name} = {text}" for name, text in g.comments]
    lines += [str(p) for p in g.productions]
    return "\n".join(lines) + "\n"


_PROD = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(([^()]*)\))?\s*->(.*)$")
_DIRECTIVE = re.compile(r"#\s*(kind|terminals|variables|initial)\s*:(.*)$")
_NOTE = re.compile(r"#\s*([A-Za-z_][A-Za-z0-9_]*)\s*=(.*)$")


def _parse_ranked(text: str, lineno: int) -> dict[str, int]:
    out = {}
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        name, sep, rank = chunk.partition("/")
        if not sep or not rank.strip().isdigit():
            raise GrammarSyntaxError(f"expected name/rank, got {chunk!r}", lineno)
        out[name.strip()] = int(rank)
    return out


def parse_tree_grammar(text: str) -> TreeGrammar:
    meta: dict[str, tuple[str, int]] = {}
    notes = []
    raw_prods = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            d = _DIRECTIVE.match(line)
            if d:
                meta[d.group(1)] = (d.group(2).strip(), lineno)
            elif (n := _NOTE.match(line)):
                notes.append((n.group(1), n.group(2).strip()))
            continue
        m = _PROD.match(line)
        if not m:
            raise GrammarSyntaxError(f"expected 'v(x1, ..) -> tree', got {line!r}", lineno)
        lhs, params, rhs = m.groups()
        names = tuple(p.strip() for p in params.split(",")) if params and params.strip() else ()
        try:
            raw_prods.append(Production(lhs, names, parse_term(rhs, names)))
        except TermSyntaxError as e:
            raise GrammarSyntaxError(str(e), lineno) from None

    variables = _parse_ranked(*meta["variables"]) if "variables" in meta else {}
    for p in raw_prods:
        variables.setdefault(p.lhs, len(p.params))
    if "initial" not in meta:
        if not raw_prods:
            raise GrammarSyntaxError("no initial tree and no productions")
        initial = Term(raw_prods[0].lhs)
    else:
        try:
            initial = parse_term(meta["initial"][0])
        except TermSyntaxError as e:
            raise GrammarSyntaxError(f"bad initial tree: {e}", meta["initial"][1]) from None
    if "terminals" in meta:
        terminals = _parse_ranked(*meta["terminals"])
    else:
        terminals = {}
        for t in [initial] + [p.rhs for p in raw_prods]:
            for n in iter_nodes(t):
                if isinstance(n, Term) and n.head not in variables:
                    terminals.setdefault(n.head, len(n.args))
    notes = tuple((v, s) for v, s in notes if v in variables)
    kind = meta.get("kind", ("cftg", 0))[0]
    cls = RegularTreeGrammar if kind == "rtg" else TreeGrammar
    return cls(terminals, variables, initial, tuple(raw_prods), notes)


def tree_grammar_to_json(g: TreeGrammar) -> dict:
    return {
        "kind": "rtg" if g.is_regular else "cftg",
        "terminals": dict(g.terminals),
        "variables": dict(g.variables),
        "initial": term_to_json(g.initial),
        "productions": [{"lhs": p.lhs, "params": list(p.params), "rhs": term_to_json(p.rhs)}
                        for p in g.productions],
        "comments": [list(c) for c in g.comments],
    }


def tree_grammar_from_json(data: dict) -> TreeGrammar:
    try:
        prods = tuple(Production(p["lhs"], tuple(p.get("params", ())), term_from_json(p["rhs"]))
                      for p in data["productions"])
        cls = RegularTreeGrammar if data.get("kind") == "rtg" else TreeGrammar
        return cls(data["terminals"], data["variables"], term_from_json(data["initial"]), prods,
                   tuple(tuple(c) for c in data.get("comments", ())))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, GrammarError):
            raise
        raise GrammarSyntaxError(f"malformed grammar JSON: {e}") from None


def cfg_to_json(g: StringCfg) -> dict:
    return {"kind": "cfg", "start": g.start, "terminals": list(g.terminals),
            "variables": list(g.variables),
            "productions": [[lhs, list(rhs)] for lhs, rhs in g.productions]}


def cfg_from_json(data: dict) -> StringCfg:
    try:
        return StringCfg(data["start"], tuple((lhs, tuple(rhs)) for lhs, rhs in data["productions"]),
                         tuple(data.get("terminals", ())), tuple(data.get("variables", ())))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, GrammarError):
            raise
        raise CfgSyntaxError(f"malformed grammar JSON: {e}") from None


def load_grammar(text: str) -> StringCfg | TreeGrammar:
    """Detect JSON, tree-grammar text (``->``) or ``.cfg`` text (``::=``)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        return cfg_from_json(data) if data.get("kind") == "cfg" else tree_grammar_from_json(data)
    if "::=" in text:
        return parse_cfg(text)
    return parse_tree_grammar(text)
