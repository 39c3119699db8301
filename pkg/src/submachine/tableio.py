"""Text and JSON serialization of class tables.

Text form, one declaration per line::

    # subtype: v0(E)
    # sigma_top: a, b, E
    a(+x) : _
    v0(ox) : a(v0(a(x))), a(x)

``: _`` marks an empty supertype list.  Lines starting with ``#`` are
comments; the two directives shown above attach a default subtype and
super-alphabet to the table.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Sequence

from .core import ClassDecl, ClassTable, TableError, Variance
from .terms import Node, Term, TermSyntaxError, format_term, parse_term, term_from_json, term_to_json


class TableSyntaxError(TableError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class TableFile:
    table: ClassTable
    subtype: Term | None = None
    sigma_top: frozenset[str] | None = None


_HEADER = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*?)\))?\s*:(.*)$")
_PARAM = re.compile(r"\s*(\+|-|o|∘|−)\s*([A-Za-z_][A-Za-z0-9_]*)\s*$")
_DIRECTIVE = re.compile(r"#\s*(subtype|sigma_top)\s*:(.*)$")


def split_top_level(text: str) -> list[str]:
    """Split on commas that are not nested inside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def parse_decl(line: str, lineno: int | None = None) -> ClassDecl:
    m = _HEADER.match(line)
    if not m:
        raise TableSyntaxError(f"expected 'name(params) : supertypes', got {line.strip()!r}", lineno)
    name, params_text, supers_text = m.groups()
    params: list[tuple[str, Variance]] = []
    if params_text is not None and params_text.strip():
        for chunk in params_text.split(","):
            pm = _PARAM.match(chunk)
            if not pm:
                raise TableSyntaxError(f"bad parameter {chunk.strip()!r}; expected +x, -x or ox", lineno)
            params.append((pm.group(2), Variance.parse(pm.group(1))))
    supers_text = supers_text.strip()
    supers: list[Node] = []
    if supers_text not in ("_", "∅", ""):
        names = [p for p, _ in params]
        for chunk in split_top_level(supers_text):
            try:
                supers.append(parse_term(chunk, names))
            except TermSyntaxError as e:
                raise TableSyntaxError(f"bad supertype {chunk!r}: {e}", lineno) from None
    elif supers_text == "":
        raise TableSyntaxError("missing supertype list; write '_' for none", lineno)
    return ClassDecl(name, tuple(params), tuple(supers))


def parse_table_text(text: str) -> TableFile:
    decls = []
    subtype_text = None
    sigma_top = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            d = _DIRECTIVE.match(line)
            if d:
                key, value = d.group(1), d.group(2).strip()
                if key == "subtype":
                    subtype_text = (value, lineno)
                else:
                    sigma_top = frozenset(s.strip() for s in value.split(",") if s.strip())
            continue
        decls.append(parse_decl(line, lineno))
    table = ClassTable(decls)
    subtype = None
    if subtype_text is not None:
        try:
            subtype = parse_term(subtype_text[0])
        except TermSyntaxError as e:
            raise TableSyntaxError(f"bad subtype: {e}", subtype_text[1]) from None
    return TableFile(table, subtype, sigma_top)


def format_decl(d: ClassDecl) -> str:
    head = d.name
    if d.params:
        head += "(" + ", ".join(f"{v.value}{p}" for p, v in d.params) + ")"
    supers = ", ".join(format_term(s) for s in d.supers) if d.supers else "_"
    return f"{head} : {supers}"


def format_table(table: ClassTable, subtype: Term | None = None,
                 sigma_top: Sequence[str] | frozenset[str] | None = None) -> str:
    lines = []
    if subtype is not None:
        lines.append(f"# subtype: {format_term(subtype)}")
    if sigma_top is not None:
        lines.append("# sigma_top: " + ", ".join(sorted(sigma_top)))
    lines.extend(format_decl(d) for d in table)
    return "\n".join(lines) + "\n"


def table_to_json(table: ClassTable, subtype: Term | None = None,
                  sigma_top: Sequence[str] | frozenset[str] | None = None) -> dict:
    out: dict = {
        "classes": [
            {"name": d.name,
             "params": [[p, v.value] for p, v in d.params],
             "supers": [term_to_json(s) for s in d.supers]}
            for d in table
        ]
    }
    if subtype is not None:
        out["subtype"] = term_to_json(subtype)
    if sigma_top is not None:
        out["sigma_top"] = sorted(sigma_top)
    return out


def table_from_json(data: dict) -> TableFile:
    try:
        decls = [
            ClassDecl(c["name"],
                      tuple((p, Variance.parse(v)) for p, v in c.get("params", [])),
                      tuple(term_from_json(s) for s in c.get("supers", [])))
            for c in data["classes"]
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise TableSyntaxError(f"malformed table JSON: {e}") from None
    subtype = term_from_json(data["subtype"]) if "subtype" in data else None
    if subtype is not None and not isinstance(subtype, Term):
        raise TableSyntaxError("subtype must be a ground type")
    sigma_top = frozenset(data["sigma_top"]) if "sigma_top" in data else None
    return TableFile(ClassTable(decls), subtype, sigma_top)


def load_table(text: str) -> TableFile:
    """Accept either the text form or JSON (detected by a leading brace)."""
    if text.lstrip().startswith("{"):
        return table_from_json(json.loads(text))
    return parse_table_text(text)
