"""String context-free grammars, Greibach normal form and the monadic tree encoding."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

from ..terms import Param, Term, apply_subst
from ._cnf import cyk
from .trees import GrammarError, NotGnf, Production, TreeGrammar, fresh_name

Rhs = tuple[str, ...]


class CfgSyntaxError(GrammarError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class StringCfg:
    """Productions in declaration order; the first left-hand side is the start.

    Variables are the symbols that head some production (plus the start);
    every other symbol is a terminal.
    """

    start: str
    productions: tuple[tuple[str, Rhs], ...]
    terminals: tuple[str, ...] = ()
    variables: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        prods = tuple((lhs, tuple(rhs)) for lhs, rhs in self.productions)
        object.__setattr__(self, "productions", prods)
        declared = list(self.variables)
        variables = list(dict.fromkeys([self.start] + declared + [lhs for lhs, _ in prods]))
        vs = set(variables)
        terminals = list(dict.fromkeys(
            list(self.terminals) + [s for _, rhs in prods for s in rhs if s not in vs]))
        clash = vs & set(self.terminals)
        if clash:
            raise GrammarError(f"symbols declared as terminals but used as variables: {sorted(clash)}")
        object.__setattr__(self, "variables", tuple(variables))
        object.__setattr__(self, "terminals", tuple(terminals))

    def rules(self, v: str) -> list[Rhs]:
        return [rhs for lhs, rhs in self.productions if lhs == v]

    def is_variable(self, s: str) -> bool:
        return s in self.variables

    def __str__(self) -> str:
        return format_cfg(self)


# -- .cfg files ---------------------------------------------------------------

_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*::=(.*)$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_OTHER_SEPARATORS = ("->", "→", ":=", "=", ":")


def parse_cfg(text: str) -> StringCfg:
    prods: list[tuple[str, Rhs]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _LINE.match(line)
        if not m:
            if "::=" not in line and any(sep in line for sep in _OTHER_SEPARATORS):
                raise CfgSyntaxError(f"unknown separator in {line!r}; productions use '::='", lineno)
            raise CfgSyntaxError(f"expected 'LHS ::= tokens', got {line!r}", lineno)
        lhs, rest = m.groups()
        toks = tuple(rest.split())
        for t in toks:
            if not _IDENT.match(t):
                raise CfgSyntaxError(f"bad token {t!r}", lineno)
        prods.append((lhs, toks))
    if not prods:
        raise CfgSyntaxError("no productions")
    return StringCfg(prods[0][0], tuple(prods))


def format_cfg(g: StringCfg) -> str:
    return "".join(f"{lhs} ::={''.join(' ' + s for s in rhs)}\n" for lhs, rhs in g.productions)


def reverse_cfg(g: StringCfg) -> StringCfg:
    return StringCfg(g.start, tuple((lhs, rhs[::-1]) for lhs, rhs in g.productions),
                     g.terminals, g.variables)


def words(alphabet: Sequence[str], max_len: int, min_len: int = 0) -> Iterator[tuple[str, ...]]:
    for n in range(min_len, max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


# -- GNF --------------------------------------------------------------------


class GnfConversion(NamedTuple):
    grammar: StringCfg
    empty_word: bool


def nullable_variables(prods: dict[str, list[Rhs]]) -> set[str]:
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for v, rules in prods.items():
            if v not in nullable and any(all(s in nullable for s in rhs) for rhs in rules):
                nullable.add(v)
                changed = True
    return nullable


def _dedup(rules: Iterable[Rhs]) -> list[Rhs]:
    return list(dict.fromkeys(rules))


def _eliminate_epsilon(prods: dict[str, list[Rhs]], nullable: set[str]) -> dict[str, list[Rhs]]:
    out = {}
    for v, rules in prods.items():
        new = []
        for rhs in rules:
            options = [((), (s,)) if s in nullable else ((s,),) for s in rhs]
            for choice in itertools.product(*options):
                word = tuple(s for part in choice for s in part)
                if word:
                    new.append(word)
        out[v] = _dedup(new)
    return out


def _prune_useless(prods: dict[str, list[Rhs]], start: str) -> dict[str, list[Rhs]]:
    variables = set(prods)
    generating: set[str] = set()
    changed = True
    while changed:
        changed = False
        for v, rules in prods.items():
            if v not in generating and any(all(s not in variables or s in generating for s in rhs)
                                           for rhs in rules):
                generating.add(v)
                changed = True
    prods = {v: [r for r in rules if all(s not in variables or s in generating for s in r)]
             for v, rules in prods.items() if v in generating or v == start}
    reachable = {start}
    todo = [start]
    while todo:
        v = todo.pop()
        for rhs in prods.get(v, ()):
            for s in rhs:
                if s in prods and s not in reachable:
                    reachable.add(s)
                    todo.append(s)
    return {v: rules for v, rules in prods.items() if v in reachable}


def _unit_cycles(prods: dict[str, list[Rhs]]) -> bool:
    graph = {v: {r[0] for r in rules if len(r) == 1 and r[0] in prods} for v, rules in prods.items()}
    for v in graph:
        seen, todo = set(), list(graph[v])
        while todo:
            w = todo.pop()
            if w == v:
                return True
            if w not in seen:
                seen.add(w)
                todo.extend(graph[w])
    return False


def _eliminate_units(prods: dict[str, list[Rhs]]) -> dict[str, list[Rhs]]:
    out = {}
    for v in prods:
        closure = [v]
        i = 0
        while i < len(closure):
            for r in prods[closure[i]]:
                if len(r) == 1 and r[0] in prods and r[0] not in closure:
                    closure.append(r[0])
            i += 1
        out[v] = _dedup(r for w in closure for r in prods[w] if not (len(r) == 1 and r[0] in prods))
    return out


def cfg_to_gnf(g: StringCfg, terminal_tails: bool = False) -> GnfConversion:
    """Convert to Greibach normal form; ε is dropped and reported separately.

    Pipeline: fresh start when the start is nullable, ε-elimination, useless
    symbol removal, unit elimination (only if unit cycles exist), ordered
    head substitution with immediate left-recursion removal, then
    back-substitution.  Fresh variables are named after their origin with a
    numeric suffix (``Canvas2``, ``Canvas3``).  With ``terminal_tails`` the
    symbols after the head may still be terminals; otherwise each such
    terminal is replaced by a fresh variable deriving it.
    """
    prods: dict[str, list[Rhs]] = {v: [] for v in g.variables}
    for lhs, rhs in g.productions:
        prods[lhs].append(rhs)
    taken = set(g.variables) | set(g.terminals)
    nullable = nullable_variables(prods)
    empty_word = g.start in nullable
    start = g.start
    if empty_word:
        start = fresh_name(g.start, taken)
        taken.add(start)
        prods = {start: [(g.start,)], **prods}
    prods = _eliminate_epsilon(prods, nullable)
    prods = _prune_useless(prods, start)
    if _unit_cycles(prods):
        prods = _eliminate_units(prods)
        prods = _prune_useless(prods, start)
    order = list(prods)
    is_var = lambda s: s in prods  # noqa: E731  (tails are added to prods as they appear)

    for i, ai in enumerate(order):
        for aj in order[:i]:
            new = []
            for rhs in prods[ai]:
                if rhs[0] == aj:
                    new.extend(d + rhs[1:] for d in prods[aj])
                else:
                    new.append(rhs)
            prods[ai] = _dedup(new)
        rules = [r for r in prods[ai] if r != (ai,)]
        alphas = [r[1:] for r in rules if r[0] == ai]
        betas = [r for r in rules if r[0] != ai]
        if alphas:
            tail = fresh_name(ai, taken)
            taken.add(tail)
            prods[ai] = _dedup(x for b in betas for x in (b, b + (tail,)))
            prods[tail] = _dedup(x for a in alphas for x in (a, a + (tail,)))
        else:
            prods[ai] = rules

    # back-substitution until every head is a terminal
    pending = True
    while pending:
        pending = False
        progress = False
        for v in list(prods):
            if all(not is_var(r[0]) for r in prods[v]):
                continue
            pending = True
            new = []
            for r in prods[v]:
                h = r[0]
                if is_var(h):
                    # expand only heads that are already settled
                    if any(is_var(d[0]) for d in prods[h]):
                        new.append(r)
                        continue
                    new.extend(d + r[1:] for d in prods[h])
                    progress = True
                else:
                    new.append(r)
            prods[v] = _dedup(new)
        if pending and not progress:
            raise GrammarError("head substitution did not converge")

    if not terminal_tails:
        tails_for: dict[str, str] = {}
        for v in list(prods):
            new = []
            for r in prods[v]:
                body = []
                for s in r[1:]:
                    if is_var(s):
                        body.append(s)
                    else:
                        if s not in tails_for:
                            tails_for[s] = fresh_name(s, taken)
                            taken.add(tails_for[s])
                        body.append(tails_for[s])
                new.append((r[0],) + tuple(body))
            prods[v] = new
        for s, name in tails_for.items():
            prods[name] = [(s,)]

    prods = _prune_useless(prods, start)
    flat = tuple((v, r) for v, rules in prods.items() for r in rules)
    variables = tuple(prods) if prods else (start,)
    return GnfConversion(StringCfg(start, flat, g.terminals, variables), empty_word)


def is_string_gnf(g: StringCfg, terminal_tails: bool = True) -> bool:
    for _, rhs in g.productions:
        if not rhs or g.is_variable(rhs[0]):
            return False
        if not terminal_tails and any(not g.is_variable(s) for s in rhs[1:]):
            return False
    return True


# -- monadic encoding ---------------------------------------------------------


def cfg_to_monadic_cftg(g: StringCfg, end_marker: str = "E", empty_word: bool = False) -> TreeGrammar:
    """Encode a GNF string grammar as a monadic tree grammar.

    ``v -> a b1 .. bk`` becomes ``v(x) -> a(b1(..bk(x)..))``; the initial
    tree is ``start(end_marker)``.  With ``empty_word`` a fresh rank-0 start
    also derives the bare end marker.
    """
    bad = [(lhs, rhs) for lhs, rhs in g.productions if not rhs or g.is_variable(rhs[0])]
    if bad:
        raise NotGnf([Production(lhs, (), Term(" ".join(rhs) or "ε")) for lhs, rhs in bad])
    if end_marker in g.terminals or end_marker in g.variables:
        raise GrammarError(f"end marker {end_marker!r} clashes with a grammar symbol")
    x = Param("x")
    prods = []
    for lhs, rhs in g.productions:
        t = x
        for s in reversed(rhs):
            t = Term(s, (t,))
        prods.append(Production(lhs, ("x",), t))
    terminals = {**{t: 1 for t in g.terminals}, end_marker: 0}
    variables = {v: 1 for v in g.variables}
    end = Term(end_marker)
    initial = Term(g.start, (end,))
    if not empty_word:
        return TreeGrammar(terminals, variables, initial, tuple(prods))
    s0 = fresh_name(g.start + "0", list(terminals) + list(variables))
    lifted = [Production(s0, (), _instantiate(p.rhs, end)) for p in prods if p.lhs == g.start]
    lifted.append(Production(s0, (), end))
    return TreeGrammar(terminals, {s0: 0, **variables}, Term(s0), tuple(lifted + prods))


def _instantiate(rhs, end: Term) -> Term:
    return apply_subst(rhs, {"x": end})


def monadic_tree(tokens: Sequence[str], end_marker: str = "E") -> Term:
    t = Term(end_marker)
    for s in reversed(tokens):
        t = Term(s, (t,))
    return t


def cyk_member(g: StringCfg, w: Sequence[str]) -> bool:
    """Word membership via CYK over an internally built Chomsky normal form."""
    return cyk(g, tuple(w))


def bounded_language(g: StringCfg, max_len: int) -> frozenset[tuple[str, ...]]:
    """Every word of length at most ``max_len`` (as a token tuple).

    Stratified by exact length; within one length a small fixpoint handles
    nullable neighbours.
    """
    by_len: dict[str, list[set[tuple[str, ...]]]] = {v: [] for v in g.variables}

    def pieces(s: str, k: int, n: int) -> set[tuple[str, ...]]:
        if s in by_len:
            return by_len[s][k] if k < n else by_len[s][n]
        return {(s,)} if k == 1 else set()

    for n in range(max_len + 1):
        for v in by_len:
            by_len[v].append(set())
        changed = True
        while changed:
            changed = False
            for lhs, rhs in g.productions:
                partial: dict[int, set[tuple[str, ...]]] = {0: {()}}
                for s in rhs:
                    nxt: dict[int, set[tuple[str, ...]]] = {}
                    for used, prefixes in partial.items():
                        for k in range(n - used + 1):
                            opts = pieces(s, k, n)
                            if opts:
                                bucket = nxt.setdefault(used + k, set())
                                bucket.update(p + o for p in prefixes for o in opts)
                    partial = nxt
                    if not partial:
                        break
                fresh = partial.get(n, set()) - by_len[lhs][n]
                if fresh:
                    by_len[lhs][n] |= fresh
                    changed = True
    return frozenset(w for layer in by_len[g.start] for w in layer)
