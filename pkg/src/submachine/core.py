"""Class tables of nominal subtyping with declaration-site variance."""

from __future__ import annotations

import enum
import hashlib
import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .terms import Node, Param, Term, apply_subst, iter_nodes, match_pattern

DEFAULT_CLOSURE_BUDGET = 10_000


class Variance(enum.Enum):
    INVARIANT = "o"
    COVARIANT = "+"
    CONTRAVARIANT = "-"

    def __neg__(self) -> "Variance":
        if self is Variance.COVARIANT:
            return Variance.CONTRAVARIANT
        if self is Variance.CONTRAVARIANT:
            return Variance.COVARIANT
        return self

    def compose(self, inner: "Variance") -> "Variance":
        """Variance of a position ``inner`` nested under a position ``self``."""
        if Variance.INVARIANT in (self, inner):
            return Variance.INVARIANT
        return inner if self is Variance.COVARIANT else -inner

    @classmethod
    def parse(cls, text: str) -> "Variance":
        aliases = {"o": cls.INVARIANT, "∘": cls.INVARIANT, "=": cls.INVARIANT,
                   "+": cls.COVARIANT, "-": cls.CONTRAVARIANT, "−": cls.CONTRAVARIANT}
        try:
            return aliases[text]
        except KeyError:
            raise ValueError(f"unknown variance {text!r}") from None

    def __str__(self) -> str:
        return self.value

    # members are singletons; the inherited Enum.__hash__ is slow in hot loops
    __hash__ = object.__hash__


INV, COV, CONTRA = Variance.INVARIANT, Variance.COVARIANT, Variance.CONTRAVARIANT


class TableError(Exception):
    """Base class for errors raised by class-table operations."""


class UndeclaredClass(TableError):
    def __init__(self, name: str):
        super().__init__(f"class {name!r} is not declared")
        self.name = name


class IllFormedTable(TableError):
    def __init__(self, diagnostics: Sequence["Diagnostic"]):
        super().__init__("ill-formed class table: " + "; ".join(map(str, diagnostics)))
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    params: tuple[tuple[str, Variance], ...] = ()
    supers: tuple[Node, ...] = ()

    @property
    def rank(self) -> int:
        return len(self.params)

    @cached_property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.params)

    @cached_property
    def variances(self) -> tuple[Variance, ...]:
        return tuple(v for _, v in self.params)

    @property
    def pattern(self) -> Term:
        """The declared type ``name(x1, ..., xk)``."""
        return Term(self.name, [Param(p) for p in self.param_names])


@dataclass(frozen=True)
class Diagnostic:
    code: str
    cls: str
    message: str
    supertype: str | None = None

    def __str__(self) -> str:
        where = f" in supertype {self.supertype}" if self.supertype else ""
        return f"{self.code} {self.cls}{where}: {self.message}"


@dataclass(frozen=True)
class Inheritance:
    """One transitive inheritance fact ``cls(x) :* target(args)``.

    ``path`` lists the (class, supertype index) declaration steps that were
    composed to obtain it; the reflexive fact has an empty path.
    """

    target: str
    pattern: Node
    path: tuple[tuple[str, int], ...]


class ClassTable:
    """An immutable, ordered set of class declarations keyed by name."""

    def __init__(self, decls: Iterable[ClassDecl] = ()):
        self._decls: dict[str, ClassDecl] = {}
        for d in decls:
            if d.name in self._decls:
                raise TableError(f"class {d.name!r} is declared twice")
            self._decls[d.name] = d

    def __getitem__(self, name: str) -> ClassDecl:
        try:
            return self._decls[name]
        except KeyError:
            raise UndeclaredClass(name) from None

    def __contains__(self, name: object) -> bool:
        return name in self._decls

    def __iter__(self):
        return iter(self._decls.values())

    def __len__(self) -> int:
        return len(self._decls)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ClassTable) and list(self) == list(other)

    def __hash__(self) -> int:
        return hash(tuple(self))

    def __repr__(self) -> str:
        return f"ClassTable({list(self._decls)})"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._decls)

    def variances(self, name: str) -> tuple[Variance, ...]:
        return self[name].variances

    @cached_property
    def fingerprint(self) -> str:
        from .tableio import format_table
        return hashlib.sha256(format_table(self).encode()).hexdigest()[:16]

    def check_type(self, t: Node) -> None:
        """Raise unless ``t`` is a ground type over declared classes with matching arities."""
        for n in iter_nodes(t):
            if isinstance(n, Param):
                raise TableError(f"type {t} is not ground (parameter {n.name})")
            d = self[n.head]
            if d.rank != len(n.args):
                raise TableError(f"class {n.head!r} has rank {d.rank}, used with {len(n.args)} arguments")

    @cached_property
    def _inheritance(self) -> dict[str, tuple[Inheritance, ...]]:
        return {}

    @cached_property
    def _derived(self) -> dict:
        # facts computed once per (immutable) table: diagnostics, features, inheritance_to
        return {}

    def inheritance(self, name: str) -> tuple[Inheritance, ...]:
        """All ``name(x) :* target(args)`` facts, reflexive one first, cached per class.

        Requires acyclic inheritance; order is depth-first in declaration order.
        """
        cache = self._inheritance
        if name in cache:
            return cache[name]
        d = self[name]
        out = [Inheritance(name, d.pattern, ())]
        for i, sup in enumerate(d.supers):
            if isinstance(sup, Param):
                continue
            parent = self[sup.head]
            binding = dict(zip(parent.param_names, sup.args))
            for inh in self.inheritance(sup.head):
                out.append(Inheritance(inh.target, apply_subst(inh.pattern, binding),
                                       ((name, i),) + inh.path))
        cache[name] = tuple(out)
        return cache[name]

    def inheritance_to(self, name: str, target: str) -> tuple[Inheritance, ...]:
        key = ("to", name, target)
        r = self._derived.get(key)
        if r is None:
            r = self._derived[key] = tuple(i for i in self.inheritance(name) if i.target == target)
        return r


def supertypes_of(table: ClassTable, t: Term) -> list[Term]:
    """One-step supertypes of ground ``t``, in declaration order."""
    d = table[t.head]
    s = match_pattern(d.pattern, t)
    if s is None:
        raise TableError(f"type {t} does not match declaration {d.pattern}")
    return [apply_subst(sup, s) for sup in d.supers]


# -- well-formedness --------------------------------------------------------


def _structural_diagnostics(table: ClassTable) -> list[Diagnostic]:
    out = []
    for d in table:
        names = d.param_names
        if len(set(names)) != len(names):
            out.append(Diagnostic("WF-PARAM", d.name, "duplicate parameter names"))
        for sup in d.supers:
            if isinstance(sup, Param):
                out.append(Diagnostic("WF-PARAM", d.name, "a supertype may not be a bare parameter",
                                      sup.name))
                continue
            for n in iter_nodes(sup):
                if isinstance(n, Param):
                    if n.name not in names:
                        out.append(Diagnostic("WF-PARAM", d.name,
                                              f"parameter {n.name!r} is not declared", str(sup)))
                elif n.head not in table:
                    out.append(Diagnostic("WF-UNDECLARED", d.name,
                                          f"class {n.head!r} is not declared", str(sup)))
                elif table[n.head].rank != len(n.args):
                    out.append(Diagnostic("WF-ARITY", d.name,
                                          f"class {n.head!r} has rank {table[n.head].rank}, "
                                          f"applied to {len(n.args)} arguments", str(sup)))
    return out


def _class_graph(table: ClassTable) -> dict[str, list[str]]:
    return {d.name: [s.head for s in d.supers if isinstance(s, Term) and s.head in table]
            for d in table}


def _strongly_connected(graph: Mapping[str, Sequence[str]]) -> list[list[str]]:
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comps: list[list[str]] = []
    counter = 0
    for root in graph:
        if root in index:
            continue
        work = [(root, iter(graph[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(graph[w])))
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    low[work[-1][0]] = min(low[work[-1][0]], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    comps.append(comp)
    return comps


def _cycle_diagnostics(table: ClassTable) -> list[Diagnostic]:
    graph = _class_graph(table)
    out = []
    for comp in _strongly_connected(graph):
        if len(comp) > 1 or comp[0] in graph[comp[0]]:
            members = sorted(comp, key=table.names.index)
            out.append(Diagnostic("WF-CYCLE", members[0],
                                  "inheritance cycle through " + ", ".join(members)))
    return out


def _variance_diagnostics(table: ClassTable) -> list[Diagnostic]:
    out = []
    for d in table:
        declared = dict(d.params)
        for sup in d.supers:
            if isinstance(sup, Param):
                continue
            bad = _polarity_violations(table, sup, declared)
            for name, var, pos in bad:
                out.append(Diagnostic("WF-VARIANCE", d.name,
                                      f"{var.name.lower()} parameter {name!r} occurs in a "
                                      f"{pos} position", str(sup)))
    return out


def _polarity_violations(table: ClassTable, sup: Term,
                         declared: Mapping[str, Variance]) -> list[tuple[str, Variance, str]]:
    """Check the judgment ``declared |- sup`` at positive polarity.

    ``positive`` means the position is checked as-is; ``negative`` with the
    declared variances negated.  An invariant position is checked both ways.
    """
    found: dict[tuple[str, str], Variance] = {}
    stack = [(sup, True)]
    seen = set()
    while stack:
        node, positive = stack.pop()
        if (node, positive) in seen:
            continue
        seen.add((node, positive))
        if isinstance(node, Param):
            var = declared.get(node.name)
            if var is None:
                continue
            ok = var in (INV, COV) if positive else var in (INV, CONTRA)
            if not ok:
                found[(node.name, "positive" if positive else "negative")] = var
            continue
        if node.head not in table:
            continue
        for child, v in zip(node.args, table[node.head].variances):
            if v in (INV, COV):
                stack.append((child, positive))
            if v in (INV, CONTRA):
                stack.append((child, not positive))
    return [(name, var, pos) for (name, pos), var in sorted(found.items())]


def check_well_formed(table: ClassTable) -> list[Diagnostic]:
    """Diagnostics for acyclic inheritance, valid variance and structure; empty iff well-formed."""
    memo = table._derived
    if "wf" not in memo:
        structural = _structural_diagnostics(table)
        memo["wf"] = tuple(structural + _cycle_diagnostics(table) + _variance_diagnostics(table))
    return list(memo["wf"])


def require_well_formed(table: ClassTable) -> None:
    diags = check_well_formed(table)
    if diags:
        raise IllFormedTable(diags)


# -- closure ----------------------------------------------------------------


@dataclass(frozen=True)
class ClosedSet:
    types: frozenset[Term]

    finite = True

    def __len__(self) -> int:
        return len(self.types)

    def __contains__(self, t: object) -> bool:
        return t in self.types


@dataclass(frozen=True)
class BudgetExceeded:
    """The closure grew past its budget; ``chain`` shows types growing without bound."""

    budget: int
    chain: tuple[Term, ...]

    finite = False


def closure(table: ClassTable, seeds: Iterable[Term],
            budget: int = DEFAULT_CLOSURE_BUDGET) -> ClosedSet | BudgetExceeded:
    """Least superset of ``seeds`` closed under decomposition and one-step inheritance."""
    seeds = list(dict.fromkeys(seeds))
    if budget < len(seeds):
        raise ValueError("closure budget must be at least the number of seeds")
    parent: dict[Term, Term | None] = {s: None for s in seeds}
    queue = deque(seeds)
    while queue:
        t = queue.popleft()
        for u in list(t.args) + supertypes_of(table, t):
            if u in parent:
                continue
            parent[u] = t
            if len(parent) > budget:
                return BudgetExceeded(budget, _growth_chain(parent, u))
            queue.append(u)
    return ClosedSet(frozenset(parent))


def _growth_chain(parent: Mapping[Term, Term | None], last: Term) -> tuple[Term, ...]:
    # pick the largest type sharing its root with the seed it came from
    def path(t: Term) -> list[Term]:
        out = [t]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return out[::-1]

    best = max(parent, key=lambda t: (t.size, str(t)))
    candidates = [t for t in parent if path(t)[0].head == t.head]
    if candidates:
        best = max(candidates, key=lambda t: (t.size, str(t)))
    trail = path(best)
    root = trail[0].head
    chain: list[Term] = []
    for t in trail:
        if t.head == root and (not chain or t.size > chain[-1].size):
            chain.append(t)
    if len(chain) < 2:
        chain = []
        for t in trail:
            if not chain or t.size > chain[-1].size:
                chain.append(t)
    return tuple(chain)


# -- classification ---------------------------------------------------------


@dataclass(frozen=True)
class FeatureSet:
    contravariant: bool
    expansive: bool
    multiple_instantiation: bool

    @property
    def decidable(self) -> bool:
        return not (self.contravariant and self.expansive)

    @property
    def fragment(self) -> str:
        letters = "".join(c for c, on in (("c", self.contravariant), ("x", self.expansive),
                                          ("m", self.multiple_instantiation)) if on)
        return "T" + (letters or "bot")

    def as_dict(self) -> dict:
        return {"C": self.contravariant, "X": self.expansive, "M": self.multiple_instantiation,
                "decidable": self.decidable, "fragment": self.fragment}


@dataclass(frozen=True)
class ExpansionEdge:
    source: tuple[str, int]
    target: tuple[str, int]
    expansive: bool


def expansion_graph(table: ClassTable) -> list[ExpansionEdge]:
    """Dependency graph on (class, parameter index) pairs.

    For every subterm ``D(U1..Un)`` of a declared supertype of ``C``, an
    occurrence of ``C``'s i-th parameter as ``Uj`` gives a plain edge to
    ``(D, j)``; an occurrence strictly inside ``Uj`` gives an expansive edge.
    """
    edges = []
    for d in table:
        index = {p: i for i, p in enumerate(d.param_names)}
        for sup in d.supers:
            if isinstance(sup, Param):
                continue
            for node in iter_nodes(sup):
                if isinstance(node, Param):
                    continue
                for j, arg in enumerate(node.args):
                    if isinstance(arg, Param):
                        if arg.name in index:
                            edges.append(ExpansionEdge((d.name, index[arg.name]), (node.head, j), False))
                        continue
                    for name in sorted(arg.params()):
                        if name in index:
                            edges.append(ExpansionEdge((d.name, index[name]), (node.head, j), True))
    return edges


def is_expansive(table: ClassTable) -> bool:
    """True iff some cycle of the expansion graph contains an expansive edge."""
    edges = expansion_graph(table)
    graph: dict[tuple[str, int], list[tuple[str, int]]] = {}
    for e in edges:
        graph.setdefault(e.source, []).append(e.target)
        graph.setdefault(e.target, [])
    comp_of = {}
    for k, comp in enumerate(_strongly_connected(graph)):
        for v in comp:
            comp_of[v] = k
    return any(e.expansive and comp_of[e.source] == comp_of[e.target] for e in edges)


def has_multiple_instantiation(table: ClassTable) -> bool:
    """Some class inherits one class (transitively, non-reflexively) at two distinct instantiations."""
    for d in table:
        seen: dict[str, Node] = {}
        for inh in table.inheritance(d.name)[1:]:
            prev = seen.setdefault(inh.target, inh.pattern)
            if prev is not inh.pattern:
                return True
    return False


def classify(table: ClassTable) -> FeatureSet:
    require_well_formed(table)
    if "features" in table._derived:
        return table._derived["features"]
    f = table._derived["features"] = FeatureSet(
        contravariant=any(v is CONTRA for d in table for v in d.variances),
        expansive=is_expansive(table),
        multiple_instantiation=has_multiple_instantiation(table),
    )
    return f


def types_up_to_height(table: ClassTable, height: int, names: Iterable[str] | None = None) -> list[Term]:
    """Every ground type over ``names`` (default: all classes) of height at most ``height``.

    Height counts levels, so a leaf has height 1.
    """
    names = list(table.names if names is None else names)
    upto: list[Term] = []
    for h in range(1, height + 1):
        level = []
        for n in names:
            k = table[n].rank
            if k == 0:
                if h == 1:
                    level.append(Term(n))
            elif h > 1:
                for args in itertools.product(upto, repeat=k):
                    if max(a.height for a in args) == h - 1:
                        level.append(Term(n, args))
        upto = upto + level
    return upto
