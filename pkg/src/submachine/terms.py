"""Ranked terms shared by types, type patterns and tree forms.

Terms are hash-consed: two structurally equal terms are the same object, so
equality is identity and hashing is O(1).  A term whose leaves include
:class:`Param` objects is a pattern; otherwise it is ground.
"""

from __future__ import annotations

import re
import weakref
from typing import Iterable, Iterator, Mapping, Union

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class Param:
    """A named pattern parameter (interned by name)."""

    __slots__ = ("name",)
    _table: dict[str, "Param"] = {}

    def __new__(cls, name: str) -> "Param":
        p = cls._table.get(name)
        if p is None:
            p = object.__new__(cls)
            p.name = name
            cls._table[name] = p
        return p

    height = 1
    size = 1
    ground = False

    def params(self) -> set[str]:
        return {self.name}

    def __repr__(self) -> str:
        return f"Param({self.name!r})"

    def __str__(self) -> str:
        return self.name

    def __reduce__(self):
        return (Param, (self.name,))


class Term:
    """A node ``head(args...)``; args may be terms or parameters."""

    __slots__ = ("head", "args", "height", "size", "ground", "_hash", "__weakref__")
    _table: "weakref.WeakValueDictionary[tuple, Term]" = weakref.WeakValueDictionary()

    def __new__(cls, head: str, args: Iterable["Node"] = ()) -> "Term":
        args = tuple(args)
        key = (head, *map(id, args))
        # read the weak table's backing dict directly: this is the hottest path
        ref = cls._table.data.get(key)
        if ref is not None:
            t = ref()
            if t is not None:
                return t
        for a in args:
            if not isinstance(a, (Term, Param)):
                raise TypeError(f"term argument must be a Term or Param, got {a!r}")
        t = object.__new__(cls)
        t.head = head
        t.args = args
        t.height = 1 + max(a.height for a in args) if args else 1
        t.size = 1 + sum(a.size for a in args)
        t.ground = all(a.ground for a in args)
        t._hash = hash(key)
        cls._table[key] = t
        return t

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return self is other

    def __ne__(self, other: object) -> bool:
        return self is not other

    @property
    def rank(self) -> int:
        return len(self.args)

    def params(self) -> set[str]:
        out: set[str] = set()
        for node in iter_nodes(self):
            if isinstance(node, Param):
                out.add(node.name)
        return out

    def __repr__(self) -> str:
        return f"Term({format_term(self)!r})"

    def __str__(self) -> str:
        return format_term(self)

    def __reduce__(self):
        return (parse_term, (format_term(self),))


Node = Union[Term, Param]
Substitution = Mapping[str, Node]


class UnboundParameter(KeyError):
    """A substitution was applied to a pattern with an unbound parameter."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"parameter {self.name!r} is not bound by the substitution"


class TermSyntaxError(ValueError):
    pass


def leaf(name: str) -> Term:
    return Term(name, ())


def iter_nodes(t: Node) -> Iterator[Node]:
    stack = [t]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Term):
            stack.extend(reversed(n.args))


def monadic(symbols: Iterable[str], bottom: Node) -> Node:
    """Build ``s1(s2(...sn(bottom)))`` from a sequence of monadic symbols."""
    out = bottom
    for s in reversed(list(symbols)):
        out = Term(s, (out,))
    return out


def monadic_word(t: Node) -> tuple[list[str], Node]:
    """Split a monadic spine into its symbols and the final non-monadic node."""
    word = []
    while isinstance(t, Term) and len(t.args) == 1:
        word.append(t.head)
        t = t.args[0]
    return word, t


def match_pattern(pattern: Node, subject: Node) -> dict[str, Node] | None:
    """Return ``s`` with ``pattern[s] == subject``, or None when none exists."""
    s: dict[str, Node] = {}
    stack = [(pattern, subject)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Param):
            bound = s.get(p.name)
            if bound is None:
                s[p.name] = t
            elif bound is not t:
                return None
            continue
        if not isinstance(t, Term) or p.head != t.head or len(p.args) != len(t.args):
            return None
        stack.extend(zip(p.args, t.args))
    return s


def apply_subst(pattern: Node, s: Substitution) -> Node:
    """Replace every parameter of ``pattern`` by its binding in ``s``."""
    if isinstance(pattern, Param):
        try:
            return s[pattern.name]
        except KeyError:
            raise UnboundParameter(pattern.name) from None
    if pattern.ground:
        return pattern
    return Term(pattern.head, [apply_subst(a, s) for a in pattern.args])


def rename_params(pattern: Node, renaming: Mapping[str, str]) -> Node:
    return apply_subst(pattern, {old: Param(new) for old, new in renaming.items()})


def unify(p: Node, q: Node) -> dict[str, Node] | None:
    """Most general unifier of two patterns over one parameter namespace."""
    s: dict[str, Node] = {}

    def walk(n: Node) -> Node:
        while isinstance(n, Param) and n.name in s:
            n = s[n.name]
        return n

    def occurs(name: str, n: Node) -> bool:
        n = walk(n)
        if isinstance(n, Param):
            return n.name == name
        return any(occurs(name, a) for a in n.args)

    stack = [(p, q)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a), walk(b)
        if a is b:
            continue
        if isinstance(a, Param) or isinstance(b, Param):
            if not isinstance(a, Param):
                a, b = b, a
            if occurs(a.name, b):
                return None
            s[a.name] = b
            continue
        if a.head != b.head or len(a.args) != len(b.args):
            return None
        stack.extend(zip(a.args, b.args))

    def resolve(n: Node) -> Node:
        n = walk(n)
        if isinstance(n, Param) or n.ground:
            return n
        return Term(n.head, [resolve(a) for a in n.args])

    return {k: resolve(v) for k, v in s.items()}


def format_term(t: Node) -> str:
    """Parenthetical notation; leaves print without parentheses."""
    out: list[str] = []
    stack: list[object] = [t]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
        elif isinstance(item, Param):
            out.append(item.name)
        elif not item.args:
            out.append(item.head)
        else:
            out.append(item.head + "(")
            stack.append(")")
            for i, a in enumerate(reversed(item.args)):
                stack.append(a)
                if i < len(item.args) - 1:
                    stack.append(", ")
    return "".join(out)


_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|(\()|(\))|(,))")


def parse_term(text: str, params: Iterable[str] = ()) -> Node:
    """Parse parenthetical notation.  Identifiers in ``params`` become parameters."""
    params = set(params)
    pos = 0
    # each frame: [head, args]; the sentinel frame collects the result
    frames: list[list] = [[None, []]]
    pending: str | None = None
    slot_open = False  # just after '(' or ',': an argument must follow

    def close_leaf() -> None:
        nonlocal pending
        if pending is not None:
            frames[-1][1].append(Param(pending) if pending in params else Term(pending))
            pending = None

    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise TermSyntaxError(f"unexpected input at offset {pos}: {text[pos:pos + 20]!r}")
            break
        pos = m.end()
        ident, lpar, rpar, comma = m.groups()
        if ident:
            if pending is not None:
                raise TermSyntaxError(f"missing comma before {ident!r} at offset {m.start(1)}")
            pending = ident
            slot_open = False
        elif lpar:
            if pending is None:
                raise TermSyntaxError(f"'(' without a head at offset {m.start(2)}")
            if pending in params:
                raise TermSyntaxError(f"parameter {pending!r} cannot take arguments")
            frames.append([pending, []])
            pending = None
            slot_open = True
        elif rpar:
            close_leaf()
            if len(frames) == 1:
                raise TermSyntaxError(f"unbalanced ')' at offset {m.start(3)}")
            if slot_open:
                raise TermSyntaxError(f"missing argument before ')' at offset {m.start(3)}")
            head, args = frames.pop()
            frames[-1][1].append(Term(head, args))
        else:
            close_leaf()
            if len(frames) == 1:
                raise TermSyntaxError(f"',' outside of an argument list at offset {m.start(4)}")
            if slot_open:
                raise TermSyntaxError(f"missing argument before ',' at offset {m.start(4)}")
            slot_open = True
    close_leaf()
    if len(frames) != 1:
        raise TermSyntaxError("unbalanced '('")
    result = frames[0][1]
    if len(result) != 1:
        raise TermSyntaxError(f"expected exactly one term, found {len(result)}")
    return result[0]


def term_to_json(t: Node):
    """Nested-array form: ``[head, child...]`` for nodes, a bare string for parameters."""
    return _fold(t, lambda n, kids: n.name if isinstance(n, Param) else [n.head, *kids])


def term_from_json(data) -> Node:
    # post-order over the nested lists, so deep monadic terms do not recurse
    out: list[Node] = []
    stack: list[tuple[object, bool]] = [(data, False)]
    while stack:
        item, done = stack.pop()
        if isinstance(item, str):
            out.append(Param(item))
        elif not isinstance(item, list) or not item or not isinstance(item[0], str):
            raise ValueError(f"malformed term: {item!r}")
        elif done:
            k = len(item) - 1
            args = out[len(out) - k:] if k else []
            del out[len(out) - k:]
            out.append(Term(item[0], args))
        else:
            stack.append((item, True))
            stack.extend((c, False) for c in reversed(item[1:]))
    return out[0]


def _fold(t: Node, combine):
    """Bottom-up fold without recursion: ``combine(node, folded_children)``."""
    out: list = []
    stack: list[tuple[Node, bool]] = [(t, False)]
    while stack:
        n, done = stack.pop()
        if isinstance(n, Param) or not n.args:
            out.append(combine(n, []))
        elif done:
            k = len(n.args)
            kids = out[len(out) - k:]
            del out[len(out) - k:]
            out.append(combine(n, kids))
        else:
            stack.append((n, True))
            stack.extend((a, False) for a in reversed(n.args))
    return out[0]


def sort_key(t: Node) -> tuple:
    return (t.size, format_term(t))
