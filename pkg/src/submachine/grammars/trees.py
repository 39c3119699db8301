"""Ranked tree grammars: regular grammars and (extended) context-free tree grammars."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from ..terms import Node, Param, Term, apply_subst, format_term, iter_nodes


class GrammarError(ValueError):
    pass


class NotGnf(GrammarError):
    def __init__(self, violations: Sequence["Production"]):
        super().__init__("grammar is not in GNF: " + "; ".join(map(str, violations)))
        self.violations = list(violations)


class DerivationOverflow(RuntimeError):
    """The derivation frontier grew past its cap."""


@dataclass(frozen=True)
class Production:
    lhs: str
    params: tuple[str, ...]
    rhs: Node

    def __str__(self) -> str:
        head = self.lhs + (f"({', '.join(self.params)})" if self.params else "")
        return f"{head} -> {format_term(self.rhs)}"

    def canonical(self) -> "Production":
        """Rename parameters positionally to ``x1..xk`` (``x`` for rank 1)."""
        names = canonical_params(len(self.params))
        if names == self.params:
            return self
        sub = {old: Param(new) for old, new in zip(self.params, names)}
        return Production(self.lhs, names, apply_subst(self.rhs, sub))


def canonical_params(k: int) -> tuple[str, ...]:
    return ("x",) if k == 1 else tuple(f"x{i}" for i in range(1, k + 1))


@dataclass(frozen=True)
class TreeGrammar:
    """An extended context-free tree grammar: any initial tree over Σ ∪ V.

    ``terminals`` and ``variables`` map names to ranks and keep insertion
    order; a standard CFTG has a rank-0 variable as its initial tree.
    """

    terminals: Mapping[str, int]
    variables: Mapping[str, int]
    initial: Term
    productions: tuple[Production, ...]
    comments: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "terminals", dict(self.terminals))
        object.__setattr__(self, "variables", dict(self.variables))
        object.__setattr__(self, "productions", tuple(self.productions))
        clash = set(self.terminals) & set(self.variables)
        if clash:
            raise GrammarError(f"names used as both terminal and variable: {sorted(clash)}")
        ranks = {**self.terminals, **self.variables}
        self._check_form(self.initial, ranks, (), "initial tree")
        for p in self.productions:
            if p.lhs not in self.variables:
                raise GrammarError(f"production for undeclared variable {p.lhs!r}")
            if self.variables[p.lhs] != len(p.params):
                raise GrammarError(f"{p.lhs} has rank {self.variables[p.lhs]}, production binds {len(p.params)}")
            if len(set(p.params)) != len(p.params):
                raise GrammarError(f"duplicate parameters in {p}")
            self._check_form(p.rhs, ranks, p.params, str(p))

    @staticmethod
    def _check_form(t: Node, ranks: Mapping[str, int], params: Sequence[str], where: str) -> None:
        for n in iter_nodes(t):
            if isinstance(n, Param):
                if n.name not in params:
                    raise GrammarError(f"{where}: parameter {n.name!r} is not bound by the left-hand side")
            elif n.head not in ranks:
                raise GrammarError(f"{where}: undeclared symbol {n.head!r}")
            elif ranks[n.head] != len(n.args):
                raise GrammarError(f"{where}: {n.head!r} has rank {ranks[n.head]}, used with {len(n.args)}")

    def __hash__(self) -> int:
        return hash((tuple(self.terminals.items()), tuple(self.variables.items()),
                     self.initial, self.productions))

    @property
    def ranks(self) -> dict[str, int]:
        return {**self.terminals, **self.variables}

    def productions_of(self, v: str) -> list[Production]:
        return [p for p in self.productions if p.lhs == v]

    @property
    def is_regular(self) -> bool:
        if any(self.variables.values()) or self.initial.head not in self.variables or self.initial.args:
            return False
        return all(isinstance(p.rhs, Term) and p.rhs.head in self.terminals
                   and all(isinstance(a, Term) and a.head in self.variables for a in p.rhs.args)
                   for p in self.productions)

    def with_initial(self, t: Term) -> "TreeGrammar":
        return TreeGrammar(self.terminals, self.variables, t, self.productions, self.comments)

    def deduplicated(self) -> "TreeGrammar":
        prods = tuple(dict.fromkeys(p.canonical() for p in self.productions))
        return TreeGrammar(self.terminals, self.variables, self.initial, prods, self.comments)

    def __str__(self) -> str:
        from .io import format_tree_grammar
        return format_tree_grammar(self)


class RegularTreeGrammar(TreeGrammar):
    """A tree grammar whose productions all have the shape ``v -> σ(v1, ..., vk)``."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.is_regular:
            raise GrammarError("not a regular tree grammar: variables must be leaves and "
                               "every production must be a terminal over variables")

    @property
    def start(self) -> str:
        return self.initial.head

    def as_cftg(self) -> TreeGrammar:
        return TreeGrammar(self.terminals, self.variables, self.initial, self.productions, self.comments)


def regular_grammar(terminals: Mapping[str, int], start: str,
                    rules: Iterable[tuple[str, str, Sequence[str]]]) -> RegularTreeGrammar:
    """Build an RTG from ``(variable, terminal, child variables)`` triples."""
    rules = list(rules)
    variables = dict.fromkeys([start] + [v for v, _, _ in rules], 0)
    prods = tuple(Production(v, (), Term(sym, [Term(c) for c in kids])) for v, sym, kids in rules)
    return RegularTreeGrammar(terminals, variables, Term(start), prods)


class GnfCheck(NamedTuple):
    ok: bool
    violations: tuple[Production, ...]

    def __bool__(self) -> bool:
        return self.ok


def is_gnf(g: TreeGrammar) -> GnfCheck:
    bad = tuple(p for p in g.productions
                if not (isinstance(p.rhs, Term) and p.rhs.head in g.terminals))
    return GnfCheck(not bad, bad)


def is_deterministic_gnf(g: TreeGrammar) -> bool:
    """No variable has two distinct productions with the same terminal head."""
    check = is_gnf(g)
    if not check:
        raise NotGnf(check.violations)
    seen: dict[tuple[str, str], Node] = {}
    for p in g.productions:
        p = p.canonical()
        key = (p.lhs, p.rhs.head)
        prev = seen.setdefault(key, p.rhs)
        if prev is not p.rhs:
            return False
    return True


def fresh_name(base: str, taken: Iterable[str]) -> str:
    """``base`` if free, else ``base2``, ``base3``, ..."""
    taken = set(taken)
    if base not in taken:
        return base
    k = 2
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def ecftg_to_cftg(g: TreeGrammar, start: str = "S") -> TreeGrammar:
    """Replace an arbitrary initial tree by a fresh rank-0 start variable."""
    t0 = g.initial
    if t0.head in g.variables and not t0.args:
        return g
    v0 = fresh_name(start, g.ranks)
    variables = {v0: 0, **g.variables}
    new: list[Production] = []
    if t0.head in g.terminals:
        new.append(Production(v0, (), t0))
    else:
        for p in g.productions_of(t0.head):
            new.append(Production(v0, (), apply_subst(p.rhs, dict(zip(p.params, t0.args)))))
    return TreeGrammar(g.terminals, variables, Term(v0), tuple(new) + g.productions, g.comments)


# -- derivation oracle ------------------------------------------------------


def _keep_depths(g: TreeGrammar) -> dict[str, list[int | None]]:
    """For each variable and parameter, a lower bound on the depth at which the
    parameter survives in every terminal tree derived from it (None: may be dropped).

    Greatest fixpoint from an optimistic start; any post-fixpoint is sound.
    """
    cap = 1 + sum(p.rhs.size for p in g.productions)
    keep = {v: [cap] * k for v, k in g.variables.items()}
    by_var: dict[str, list[Production]] = {}
    for p in g.productions:
        by_var.setdefault(p.lhs, []).append(p)

    def depth(t: Node, name: str) -> int | None:
        if isinstance(t, Param):
            return 0 if t.name == name else None
        found = [depth(a, name) for a in t.args]
        if t.head in g.terminals:
            hits = [d for d in found if d is not None]
            return 1 + max(hits) if hits else None
        hits = [keep[t.head][j] + d for j, d in enumerate(found)
                if d is not None and keep[t.head][j] is not None]
        return max(hits) if hits else None

    changed = True
    while changed:
        changed = False
        for v, prods in by_var.items():
            for i, name in enumerate(canonical_params(g.variables[v])):
                vals = [depth(p.canonical().rhs, name) for p in prods]
                new = None if any(d is None for d in vals) else min(vals)
                old = keep[v][i]
                if old is None:
                    continue
                new = None if new is None else min(old, new)
                if new != old:
                    keep[v][i] = new
                    changed = True
    return keep


def height_lower_bound(g: TreeGrammar, keep: Mapping[str, list[int | None]]):
    memo: dict[Term, int] = {}

    def lb(t: Term) -> int:
        stack = [(t, False)]
        while stack:
            n, done = stack.pop()
            if n in memo:
                continue
            if not done:
                stack.append((n, True))
                stack.extend((a, False) for a in n.args if a not in memo)
                continue
            kids = [memo[a] for a in n.args]
            if n.head in g.terminals:
                memo[n] = 1 + max(kids, default=0)
            else:
                best = 1
                for j, h in enumerate(kids):
                    k = keep[n.head][j]
                    if k is not None:
                        best = max(best, k + h)
                memo[n] = best
        return memo[t]

    return lb


def _redexes(t: Term, variables: Mapping[str, int]):
    """Yield (path, node) for every variable node, pre-order."""
    stack: list[tuple[tuple[int, ...], Term]] = [((), t)]
    while stack:
        path, n = stack.pop()
        if n.head in variables:
            yield path, n
        for i in range(len(n.args) - 1, -1, -1):
            stack.append((path + (i,), n.args[i]))


def _replace(t: Term, path: tuple[int, ...], new: Node) -> Term:
    chain = [t]
    for i in path:
        chain.append(chain[-1].args[i])
    out = new
    for node, i in zip(reversed(chain[:-1]), reversed(path)):
        args = list(node.args)
        args[i] = out
        out = Term(node.head, args)
    return out


def derive_trees(g: TreeGrammar, max_height: int, max_steps: int = 200,
                 frontier_cap: int = 2_000_000, strategy: str = "all") -> set[Term]:
    """All terminal trees of height at most ``max_height`` derivable in at most
    ``max_steps`` rewriting steps.

    Breadth-first with structural deduplication.  Forms that can only yield
    trees taller than ``max_height`` are discarded early.  ``strategy="all"``
    rewrites every variable node; ``"outermost"`` rewrites only the
    leftmost-outermost one, which reaches the same terminal trees without
    ever expanding arguments that are later dropped (step counts differ).
    """
    if max_height < 0 or max_steps < 0:
        raise ValueError("bounds must be non-negative")
    if strategy not in ("all", "outermost"):
        raise ValueError(f"unknown strategy {strategy!r}")
    keep = _keep_depths(g)
    lb = height_lower_bound(g, keep)
    by_var: dict[str, list[Production]] = {}
    for p in g.productions:
        by_var.setdefault(p.lhs, []).append(p)
    out: set[Term] = set()
    seen: set[Term] = set()
    frontier = []
    if lb(g.initial) <= max_height:
        frontier.append(g.initial)
        seen.add(g.initial)
    for step in range(max_steps + 1):
        nxt = []
        for form in frontier:
            redexes = list(_redexes(form, g.variables))
            if strategy == "outermost":
                redexes = redexes[:1]
            if not redexes:
                out.add(form)
                continue
            if step == max_steps:
                continue
            for path, node in redexes:
                for p in by_var.get(node.head, ()):
                    rhs = apply_subst(p.rhs, dict(zip(p.params, node.args)))
                    new = _replace(form, path, rhs)
                    if new in seen or lb(new) > max_height:
                        continue
                    seen.add(new)
                    nxt.append(new)
                    if len(nxt) > frontier_cap:
                        raise DerivationOverflow(
                            f"more than {frontier_cap} tree forms at step {step + 1}")
        frontier = nxt
        if not frontier:
            break
    return out
