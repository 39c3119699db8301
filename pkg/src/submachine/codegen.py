"""C# source for subtyping machines and their fluent APIs.

Layout of a generated file: terminal interfaces (sorted), variable
interfaces (start first), the bottom interface, the entry interface binding
the fixed subtype, then an optional ``FluentAPI`` namespace.  Type
parameters are prefixed with ``_`` and covariant ones marked ``out``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable

from .core import CONTRA, COV, ClassTable, TableError
from .grammars.strings import StringCfg
from .subtyping import FragmentRefused
from .terms import Node, Param, Term

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_WIDTH = 80
_LIST = "System.Collections.Generic.List"


class IdentifierError(TableError):
    pass


@dataclass(frozen=True)
class EmitterConfig:
    entry: str
    namespace: str | None = None
    fluent: bool = False
    bottom: str = "BOTTOM"
    token_enum: str | None = None

    def __post_init__(self) -> None:
        if self.namespace is None:
            object.__setattr__(self, "namespace", f"{self.entry}API")
        if self.token_enum is None:
            object.__setattr__(self, "token_enum", f"{self.entry}Token")
        for label in ("entry", "namespace", "bottom", "token_enum"):
            value = getattr(self, label)
            if not _IDENT.match(value):
                raise IdentifierError(f"{label} {value!r} is not a valid identifier")


@dataclass(frozen=True)
class GeneratedSource:
    machine_text: str
    fluent_text: str | None
    manifest: dict = field(default_factory=dict)
    namespace: str = ""

    @property
    def text(self) -> str:
        """The complete ``<Entry>API.cs`` file."""
        body = self.machine_text + (self.fluent_text or "")
        return f"namespace {self.namespace} {{\n{body}}}\n"

    def manifest_json(self) -> str:
        return json.dumps(self.manifest, indent=2, sort_keys=True) + "\n"


def render_type(t: Node) -> str:
    if isinstance(t, Param):
        return f"_{t.name}"
    out: list[str] = []
    stack: list[object] = [t]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
        elif isinstance(item, Param):
            out.append(f"_{item.name}")
        elif not item.args:
            out.append(item.head)
        else:
            out.append(item.head + "<")
            stack.append(">")
            for i, a in enumerate(reversed(item.args)):
                stack.append(a)
                if i < len(item.args) - 1:
                    stack.append(", ")
    return "".join(out)


def _wrap(head: str, items: list[str], indent: str = "  ") -> str:
    if not items:
        return f"{indent}{head} {{}}\n"
    lines = []
    cur = f"{indent}{head} : "
    fresh = True
    for i, item in enumerate(items):
        piece = item + ("," if i < len(items) - 1 else " {}")
        if not fresh and len(cur) + 1 + len(piece) > _WIDTH:
            lines.append(cur)
            cur = indent * 2 + piece
        else:
            cur += ("" if fresh else " ") + piece
        fresh = False
    lines.append(cur)
    return "\n".join(lines) + "\n"


def _interface(table: ClassTable, name: str) -> str:
    d = table[name]
    head = f"public interface {name}"
    if d.params:
        marks = {COV: "out ", CONTRA: "in "}
        head += "<" + ", ".join(f"{marks.get(v, '')}_{p}" for p, v in d.params) + ">"
    return _wrap(head, [render_type(s) for s in d.supers])


def emit_subtyping_machine_source(table: ClassTable, subtype: Term | None,
                                  cfg: EmitterConfig) -> GeneratedSource:
    """Interfaces for every class; the entry interface is omitted when ``subtype`` is None."""
    if any(v is CONTRA for d in table for v in d.variances):
        raise FragmentRefused("only tables without contravariance are emitted")
    if subtype is not None:
        table.check_type(subtype)
    for n in table.names:
        if not _IDENT.match(n):
            raise IdentifierError(f"class name {n!r} is not a valid identifier")
    if cfg.entry in table.names and table[cfg.entry].rank == 0:
        raise IdentifierError(f"entry {cfg.entry!r} collides with a class of the same arity")
    if cfg.bottom in table.names and (table[cfg.bottom].rank or table[cfg.bottom].supers):
        raise IdentifierError(f"bottom {cfg.bottom!r} collides with a non-leaf class")
    terminals = sorted(n for n in table.names if not table[n].supers and n != cfg.bottom)
    variables = [n for n in table.names if table[n].supers]
    parts = [_interface(table, n) for n in terminals + variables]
    parts.append(f"  public interface {cfg.bottom} {{}}\n")
    manifest = {
        "classes": {n: _signature(table, n) for n in table.names if n != cfg.bottom},
        "bottom": cfg.bottom,
    }
    if subtype is not None:
        parts.append(f"  public interface {cfg.entry} : {render_type(subtype)} {{}}\n")
        manifest["entry"] = {"name": cfg.entry, "subtype": render_type(subtype)}
    return GeneratedSource("".join(parts), None, manifest, cfg.namespace)


def _signature(table: ClassTable, name: str) -> str:
    d = table[name]
    return name + ("<" + ", ".join(f"_{p}" for p in d.param_names) + ">" if d.params else "")


def emit_fluent_api_source(g: StringCfg, table: ClassTable, cfg: EmitterConfig,
                           empty_word: bool = False) -> GeneratedSource:
    """The ``FluentAPI`` namespace: a chain wrapper, the token enum, and a static
    and an extension method per token.  ``Done<API>()`` compiles only when the
    entry type is a subtype of the accumulated chain type."""
    tokens = sorted(g.terminals)
    for t in tokens:
        if not _IDENT.match(t):
            raise IdentifierError(f"token {t!r} is not a valid identifier")
        if t not in table.names or table[t].rank != 1:
            raise TableError(f"token {t!r} has no unary class in the machine")
    enum, bottom = cfg.token_enum, cfg.bottom
    lst = f"{_LIST}<{enum}>"
    out = [
        "  namespace FluentAPI {\n",
        "    public class Wrapper<T> {\n",
        f"      public readonly {lst} values =\n",
        f"        new {lst}();\n",
        "      public Wrapper<T> AddRange<S>(Wrapper<S> other) {\n",
        "        this.values.AddRange(other.values);\n",
        "        return this;\n",
        "      }\n",
        f"      public Wrapper<T> Add({enum} value) {{\n",
        "        values.Add(value);\n",
        "        return this;\n",
        "      }\n",
        f"      public {lst} Done<API>() where API : T {{\n",
        "        return values;\n",
        "      }\n",
        "    }\n",
        f"    public enum {enum} {{ " + "".join(f"{t}, " for t in tokens) + "}\n",
        "    public static class Start {\n",
    ]
    methods = {}
    for t in tokens:
        out.append(f"      public static Wrapper<{t}<{bottom}>> {t}() {{\n")
        out.append(f"        return new Wrapper<{t}<{bottom}>>().Add({enum}.{t}); }}\n")
        out.append(f"      public static Wrapper<{t}<_x>> {t}<_x>(this Wrapper<_x> _wrapper) {{\n")
        out.append(f"        return new Wrapper<{t}<_x>>().AddRange(_wrapper).Add({enum}.{t}); }}\n")
        methods[t] = {"enum": f"{enum}.{t}", "methods": [f"{t}()", f"{t}<_x>(this Wrapper<_x>)"]}
    if empty_word:
        out.append(f"      public static {lst} Done<{cfg.entry}>() {{\n")
        out.append(f"        return new {lst}(); }}\n")
    out.append("    }\n")
    out.append("  }\n")
    manifest = {"tokens": methods, "token_enum": enum, "empty_chain": empty_word}
    return GeneratedSource("", "".join(out), manifest, cfg.namespace)


def generate_api(machine, fluent: bool = False, namespace: str | None = None) -> GeneratedSource:
    """Full source for a pipeline ``Machine`` (see ``submachine.pipeline``)."""
    cfg = EmitterConfig(entry=machine.entry, namespace=namespace, fluent=fluent, bottom=machine.bottom)
    src = emit_subtyping_machine_source(machine.table, machine.subtype, cfg)
    manifest = dict(src.manifest)
    fluent_text = None
    if fluent:
        fl = emit_fluent_api_source(machine.grammar, machine.table, cfg, machine.empty_word)
        fluent_text = fl.fluent_text
        manifest.update(fl.manifest)
    return GeneratedSource(src.machine_text, fluent_text, manifest, cfg.namespace)


# -- golden normalization ----------------------------------------------------

_IFACE = re.compile(r"public interface\s+([A-Za-z_][A-Za-z0-9_]*)\s*(<[^:{]*>)?\s*(?::([^{]*))?\{\s*\}")
_METHOD = re.compile(r"public static\s+(?!class\b)([^{}();]+?)\s+([A-Za-z_][A-Za-z0-9_]*(?:<[^()]*>)?)\(([^)]*)\)")


def _split_types(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "<":
            depth += 1
        elif ch == ">":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        parts.append(tail)
    return parts


def normalize_source(text: str, fresh: Iterable[str] = ()) -> dict:
    """Interfaces with sorted supertype multisets, plus the fluent method set.

    Names listed in ``fresh`` (or any name of the form ``<Base><digits>`` whose
    base is also declared) are renamed by order of first appearance, so
    ``Canvas2``/``Canvas3`` match regardless of the numbering scheme.
    """
    flat = " ".join(text.split())
    declared = [m.group(1) for m in _IFACE.finditer(flat)]
    fresh = set(fresh) | {n for n in declared
                          if (m := re.match(r"^(.*?)(\d+)$", n)) and m.group(1) in declared}
    mapping: dict[str, str] = {}
    for tok in re.findall(r"[A-Za-z_][A-Za-z0-9_]*", flat):
        if tok in fresh and tok not in mapping:
            mapping[tok] = f"#{len(mapping)}"
    rename = lambda s: re.sub(r"[A-Za-z_][A-Za-z0-9_]*", lambda m: mapping.get(m.group(0), m.group(0)), s)  # noqa: E731
    interfaces = {}
    for m in _IFACE.finditer(flat):
        name, params, supers = m.groups()
        key = rename(name) + (rename(params.replace(" ", "")) if params else "")
        sups = sorted(rename(s.replace(" ", "")) for s in _split_types(supers or ""))
        interfaces[key] = sups
    methods = sorted({rename(f"{r.replace(' ', '')} {n.replace(' ', '')}({a.strip()})")
                      for r, n, a in _METHOD.findall(flat)})
    return {"interfaces": interfaces, "methods": methods}
