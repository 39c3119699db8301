"""Encodings between tree grammars and class tables.

* ``rtg_to_class_table``: a regular grammar becomes a covariant leaf-variable table.
* ``class_table_to_rtg``: a non-expansive table plus fixed subtype becomes a
  regular grammar whose variables are minimal sets of pending constraints.
* ``gnf_cftg_to_class_table``: a GNF tree grammar becomes a table with one
  inheritance rule per production.
* ``class_table_to_gnf_cftg``: a table without contravariance becomes a GNF
  tree grammar over covariant/invariant annotated variables.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Iterable, NamedTuple

from .core import COV, CONTRA, INV, ClassDecl, ClassTable, TableError, Variance, classify
from .grammars.trees import (GrammarError, NotGnf, Production, RegularTreeGrammar, TreeGrammar,
                             canonical_params, fresh_name, is_deterministic_gnf, is_gnf)
from .subtyping import (EQ, SUB, SUP, AlphabetSplit, FragmentRefused, Relation, SearchStats,
                        _non_expansive_expander, _search)
from .terms import Node, Param, Term, apply_subst, format_term, sort_key, unify


class Encoding(NamedTuple):
    table: ClassTable
    subtype: Term
    split: AlphabetSplit


class NameClash(GrammarError):
    pass


# -- regular grammar -> table ---------------------------------------------------


def rtg_to_class_table(g: RegularTreeGrammar) -> Encoding:
    """Terminals become covariant classes, variables become leaf classes
    inheriting one terminal type per production."""
    if not g.is_regular:
        raise GrammarError("expected a regular tree grammar")
    clash = set(g.terminals) & set(g.variables)
    if clash:
        raise NameClash(f"names used as both terminal and variable: {sorted(clash)}")
    decls = [ClassDecl(s, tuple((p, COV) for p in canonical_params(k)) if k else (), ())
             for s, k in g.terminals.items()]
    for v in g.variables:
        decls.append(ClassDecl(v, (), tuple(p.rhs for p in g.productions_of(v))))
    table = ClassTable(decls)
    split = AlphabetSplit(frozenset(table.names), frozenset(g.terminals))
    return Encoding(table, g.initial, split)


# -- non-expansive table -> regular grammar -------------------------------------

# An atom (t, rel) constrains the tree x being generated: t <: x, t :> x or t = x.
Atom = tuple[Term, Relation]
_REL_ORDER = {SUB: 0, EQ: 1, SUP: 2}


def _atom_key(a: Atom):
    return (_REL_ORDER[a[1]], sort_key(a[0]))


def _canon(atoms: Iterable[Atom]) -> tuple[Atom, ...]:
    return tuple(sorted(set(atoms), key=_atom_key))


def format_atoms(atoms: Iterable[Atom]) -> str:
    return "{" + ", ".join(f"{format_term(t)} {rel.value} x" for t, rel in atoms) + "}"


_TRUE = frozenset({frozenset()})
_FALSE: frozenset = frozenset()


def _absorb(dnf: Iterable[frozenset]) -> frozenset:
    items = sorted(set(dnf), key=len)
    kept: list[frozenset] = []
    for c in items:
        if not any(k <= c for k in kept):
            kept.append(c)
    return frozenset(kept)


def _consistent(conj: frozenset) -> bool:
    eqs: dict[int, Term] = {}
    for i, t, rel in conj:
        if rel is EQ and eqs.setdefault(i, t) is not t:
            return False
    return True


def _and(a: frozenset, b: frozenset) -> frozenset:
    return _absorb(c for x in a for y in b if _consistent(c := x | y))


class _Reducer:
    """Turns ``atom[σ(x1..xk)]`` into a DNF over atoms on the placeholders."""

    def __init__(self, table: ClassTable):
        self.table = table
        self.expand = _non_expansive_expander(table)
        self.ground: dict[tuple[Term, Term], bool] = {}
        self.memo: dict[tuple, frozenset] = {}
        self.reach = {n: frozenset(i.target for i in table.inheritance(n)) for n in table.names}

    def sub(self, l: Term, r: Term) -> bool:
        key = (l, r)
        hit = self.ground.get(key)
        if hit is None:
            hit = self.ground[key] = _search((l, r, SUB), self.expand, ledger=True, shared=None,
                                             stats=SearchStats())[0]
        return hit

    def implies(self, a: Atom, b: Atom) -> bool:
        (t, ra), (u, rb) = a, b
        if ra is EQ:
            if rb is EQ:
                return t is u
            return self.sub(u, t) if rb is SUB else self.sub(t, u)
        if ra is not rb:
            return False
        return self.sub(u, t) if ra is SUB else self.sub(t, u)

    def implies_all(self, strong: tuple[Atom, ...], weak: tuple[Atom, ...]) -> bool:
        return all(any(b == a or self.implies(a, b) for a in strong) for b in weak)

    def goal(self, l: Node, r: Node, rel: Relation, path: set) -> tuple[frozenset, bool]:
        """DNF for ``l rel r`` (rel is SUB or EQ) and whether a cyclic branch was cut."""
        if rel is EQ:
            if isinstance(l, Param):
                return frozenset({frozenset({(_slot(l), r, EQ)})}), False
            if isinstance(r, Param):
                return frozenset({frozenset({(_slot(r), l, EQ)})}), False
            if l.ground and r.ground:
                return (_TRUE if l is r else _FALSE), False
            if l.head != r.head:
                return _FALSE, False
            return self.conj([(a, b, EQ) for a, b in zip(l.args, r.args)], path)
        if isinstance(r, Param):
            return frozenset({frozenset({(_slot(r), l, SUB)})}), False
        if isinstance(l, Param):
            return frozenset({frozenset({(_slot(l), r, SUP)})}), False
        if l.ground and r.ground:
            return (_TRUE if self.sub(l, r) else _FALSE), False
        key = (l, r)
        if key in self.memo:
            return self.memo[key], False
        if key in path:
            return _FALSE, True
        path.add(key)
        try:
            if l.head == r.head:
                vs = self.table[l.head].variances
                parts = []
                for a, b, v in zip(l.args, r.args, vs):
                    rel_i = Relation.for_variance(v)
                    parts.append((b, a, SUB) if rel_i is SUP else (a, b, rel_i))
                out, cut = self.conj(parts, path)
            else:
                out, cut = _FALSE, False
                d = self.table[l.head]
                binding = dict(zip(d.param_names, l.args))
                for sup in d.supers:
                    if r.head not in self.reach[sup.head]:
                        continue
                    u = apply_subst(sup, binding)
                    dnf, c = self.goal(u, r, SUB, path)
                    cut |= c
                    out = _absorb(out | dnf)
        finally:
            path.discard(key)
        if not cut:
            self.memo[key] = out
        return out, cut

    def conj(self, parts, path) -> tuple[frozenset, bool]:
        out, cut = _TRUE, False
        for a, b, rel in parts:
            dnf, c = self.goal(a, b, rel, path)
            cut |= c
            out = _and(out, dnf)
            if not out:
                break
        return out, cut

    def minimize(self, atoms: Iterable[Atom]) -> tuple[Atom, ...]:
        remaining = list(_canon(atoms))
        for a in list(remaining):
            if any(b != a and self.implies(b, a) for b in remaining):
                remaining.remove(a)
        return tuple(remaining)

    def sequences(self, q: tuple[Atom, ...], sigma: str) -> list[tuple[tuple[Atom, ...], ...]]:
        k = self.table[sigma].rank
        holes = Term(sigma, [Param(f"${i + 1}") for i in range(k)])
        total = _TRUE
        for t, rel in q:
            if rel is SUB:
                dnf, _ = self.goal(t, holes, SUB, set())
            elif rel is SUP:
                dnf, _ = self.goal(holes, t, SUB, set())
            else:
                dnf, _ = self.goal(t, holes, EQ, set())
            total = _and(total, dnf)
            if not total:
                return []
        seqs = set()
        for conj in total:
            per = [[] for _ in range(k)]
            for i, t, rel in conj:
                per[i].append((t, rel))
            seqs.add(tuple(self.minimize(p) for p in per))
        ordered = sorted(seqs, key=lambda s: [[_atom_key(a) for a in c] for c in s])
        kept = []
        for s in ordered:
            dominated = any(o != s and all(self.implies_all(si, oi) for si, oi in zip(s, o))
                            and not (all(self.implies_all(oi, si) for si, oi in zip(s, o))
                                     and ordered.index(o) > ordered.index(s))
                            for o in ordered)
            if not dominated:
                kept.append(s)
        return kept


def _slot(p: Param) -> int:
    return int(p.name[1:]) - 1


def class_table_to_rtg(table: ClassTable, subtype: Term, sigma_top: Iterable[str] | None = None,
                       prefix: str = "v") -> RegularTreeGrammar:
    """Regular grammar for ``{t over sigma_top | subtype <: t}`` of a non-expansive table.

    Variables are minimal constraint sets, discovered breadth-first from
    ``{subtype <: x}`` and named ``v0, v1, ...``; each one's constraint set is
    kept as a grammar comment.
    """
    if classify(table).expansive:
        raise FragmentRefused("the class table has expansive inheritance")
    table.check_type(subtype)
    sigma = [n for n in table.names if sigma_top is None or n in set(sigma_top)]
    unknown = set(sigma_top or ()) - set(table.names)
    if unknown:
        raise TableError(f"super-alphabet names undeclared classes: {sorted(unknown)}")
    red = _Reducer(table)
    start = ((subtype, SUB),)
    order = [start]
    index = {start: 0}
    rules: list[tuple[int, str, tuple[int, ...]]] = []
    i = 0
    while i < len(order):
        q = order[i]
        for s in sigma:
            for seq in red.sequences(q, s):
                kids = []
                for child in seq:
                    if child not in index:
                        index[child] = len(order)
                        order.append(child)
                    kids.append(index[child])
                rules.append((i, s, tuple(kids)))
        i += 1

    productive: set[int] = set()
    changed = True
    while changed:
        changed = False
        for v, _, kids in rules:
            if v not in productive and all(k in productive for k in kids):
                productive.add(v)
                changed = True
    rules = [r for r in rules if r[0] in productive and all(k in productive for k in r[2])]
    reach = {0}
    frontier = deque([0])
    while frontier:
        v = frontier.popleft()
        for w, _, kids in rules:
            if w == v:
                for k in kids:
                    if k not in reach:
                        reach.add(k)
                        frontier.append(k)
    survivors = [v for v in range(len(order)) if v in reach and (v in productive or v == 0)]
    taken = set(table.names)
    while any(f"{prefix}{j}" in taken for j in range(len(survivors))):
        prefix += "_"
    name = {v: f"{prefix}{j}" for j, v in enumerate(survivors)}
    prods = tuple(Production(name[v], (), Term(s, [Term(name[k]) for k in kids]))
                  for v, s, kids in rules if v in reach)
    terminals = {s: table[s].rank for s in sigma}
    variables = {name[v]: 0 for v in survivors}
    comments = tuple((name[v], format_atoms(order[v])) for v in survivors)
    return RegularTreeGrammar(terminals, variables, Term(name[0]), prods, comments)


# -- GNF tree grammar -> table -------------------------------------------------


def gnf_cftg_to_class_table(g: TreeGrammar, dedup: bool = True) -> Encoding:
    """Terminals become covariant classes; each production ``v(x) -> σ(τ)``
    becomes the inheritance rule ``v(ox) : σ(τ)``.

    ``dedup`` drops repeated productions (after renaming parameters
    canonically), which is what keeps monadic encodings free of unifiable
    supertypes.
    """
    check = is_gnf(g)
    if not check:
        raise NotGnf(check.violations)
    prods = [p.canonical() for p in g.productions]
    if dedup:
        prods = list(dict.fromkeys(prods))
    decls = [ClassDecl(s, tuple((p, COV) for p in canonical_params(k)) if k else (), ())
             for s, k in g.terminals.items()]
    for v, k in g.variables.items():
        params = tuple((p, INV) for p in canonical_params(k)) if k else ()
        decls.append(ClassDecl(v, params, tuple(p.rhs for p in prods if p.lhs == v)))
    table = ClassTable(decls)
    return Encoding(table, g.initial, AlphabetSplit(frozenset(table.names), frozenset(g.terminals)))


def unifiable_supertype_pairs(table: ClassTable) -> list[tuple[str, Node, Node]]:
    """Pairs of distinct transitive supertypes of one class that some substitution unifies."""
    out = []
    for name in table.names:
        facts = [i.pattern for i in table.inheritance(name) if i.path]
        distinct = list(dict.fromkeys(facts))
        for a, b in itertools.combinations(distinct, 2):
            if a.head == b.head and unify(a, b) is not None:
                out.append((name, a, b))
    return out


# -- non-contravariant table -> GNF tree grammar --------------------------------


class _Annotator:
    def __init__(self, table: ClassTable, taken: Iterable[str]):
        self.table = table
        taken = set(taken)
        self.p: dict[str, str] = {}
        self.o: dict[str, str] = {}
        for n in table.names:
            self.p[n] = fresh_name(f"{n}_p", taken)
            taken.add(self.p[n])
            self.o[n] = fresh_name(f"{n}_o", taken)
            taken.add(self.o[n])

    def encode_o(self, t: Node) -> Node:
        """Invariant form: every node annotated ``o``; parameter ``x`` becomes ``x_o``."""
        if isinstance(t, Param):
            return Param(f"{t.name}_o")
        return Term(self.o[t.head], [self.encode_o(a) for a in t.args])

    def encode_p(self, t: Node) -> Node:
        """Covariant form: ``γ(τ)`` becomes ``γ_p(τ_p.., τ_o..)``; ``x`` becomes ``x_p``."""
        if isinstance(t, Param):
            return Param(f"{t.name}_p")
        return Term(self.p[t.head], [self.encode_p(a) for a in t.args] +
                    [self.encode_o(a) for a in t.args])


def encode_p(table: ClassTable, t: Node) -> Node:
    return _Annotator(table, ()).encode_p(t)


def encode_o(table: ClassTable, t: Node) -> Node:
    return _Annotator(table, ()).encode_o(t)


def class_table_to_gnf_cftg(table: ClassTable, subtype: Term,
                            sigma_top: Iterable[str] | None = None) -> TreeGrammar:
    """Extended GNF tree grammar for ``{t over sigma_top | subtype <: t}``.

    Each class γ gets a covariant variable ``γ_p`` (both argument encodings)
    and an invariant one ``γ_o``.  ``σ_o`` derives ``σ`` itself for every
    σ in ``sigma_top``, and ``γ_p`` derives ``σ`` applied to the annotated
    arguments of every transitive supertype ``σ(τ)`` of γ.  The initial tree
    is the covariant form of ``subtype``.
    """
    feats = classify(table)
    if feats.contravariant:
        raise FragmentRefused("the class table uses contravariance")
    table.check_type(subtype)
    sigma = [n for n in table.names if sigma_top is None or n in set(sigma_top)]
    unknown = set(sigma_top or ()) - set(table.names)
    if unknown:
        raise TableError(f"super-alphabet names undeclared classes: {sorted(unknown)}")
    ann = _Annotator(table, table.names)
    variables: dict[str, int] = {}
    for n in table.names:
        variables[ann.p[n]] = 2 * table[n].rank
        variables[ann.o[n]] = table[n].rank
    prods: list[Production] = []
    for s in sigma:
        names = tuple(f"{p}_o" for p in table[s].param_names)
        prods.append(Production(ann.o[s], names, Term(s, [Param(x) for x in names])))
    sig = set(sigma)
    for n in table.names:
        d = table[n]
        params = tuple(f"{p}_p" for p in d.param_names) + tuple(f"{p}_o" for p in d.param_names)
        seen = set()
        for inh in table.inheritance(n):
            if inh.target not in sig or inh.pattern in seen:
                continue
            seen.add(inh.pattern)
            vs = table[inh.target].variances
            kids = [ann.encode_p(a) if v is COV else ann.encode_o(a)
                    for a, v in zip(inh.pattern.args, vs)]
            prods.append(Production(ann.p[n], params, Term(inh.target, kids)))
    terminals = {s: table[s].rank for s in sigma}
    return TreeGrammar(terminals, variables, ann.encode_p(subtype), tuple(prods))


# -- determinism ----------------------------------------------------------------


class DeterminismReport(NamedTuple):
    grammar_deterministic: bool
    single_instantiation: bool

    @property
    def consistent(self) -> bool:
        return self.grammar_deterministic == self.single_instantiation


def check_determinism_correspondence(x: TreeGrammar | ClassTable,
                                     subtype: Term | None = None) -> DeterminismReport:
    """Compare grammar determinism with single-instantiation inheritance across an encoding.

    A grammar is encoded into a table; a table (without contravariance) is
    encoded into a grammar over its full alphabet.
    """
    if isinstance(x, TreeGrammar):
        enc = rtg_to_class_table(x) if x.is_regular else gnf_cftg_to_class_table(x)
        det = is_deterministic_gnf(x.deduplicated())
        return DeterminismReport(det, not classify(enc.table).multiple_instantiation)
    if subtype is None:
        leaves = [n for n in x.names if x[n].rank == 0]
        if not leaves:
            raise TableError("no leaf class to use as the fixed subtype")
        subtype = Term(leaves[0])
    g = class_table_to_gnf_cftg(x, subtype)
    return DeterminismReport(is_deterministic_gnf(g), not classify(x).multiple_instantiation)
