"""Deciding ``left <: right`` with the Var and Super rules.

Two engines are provided.  The non-expansive one searches the Var/Super
proof space with a cycle ledger: a query that recurs on the current proof
path is pruned, since any proof through it would be infinite.  The
non-contravariant one jumps straight to a transitive supertype with the
right head and recurses into the children; the right-hand side shrinks on
every step, so no ledger is needed.  Both run on an explicit stack because
monadic queries with thousands of nodes are routine.
"""

from __future__ import annotations

import enum
import re
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence, Union

from .core import (CONTRA, COV, INV, ClassTable, IllFormedTable, TableError, Variance,
                   check_well_formed, classify, supertypes_of)
from .terms import Term, TermSyntaxError, apply_subst, format_term, parse_term


class Relation(enum.Enum):
    SUB = "<:"
    EQ = "="
    SUP = ":>"

    @property
    def mirror(self) -> "Relation":
        return {Relation.SUB: Relation.SUP, Relation.SUP: Relation.SUB}.get(self, self)

    @classmethod
    def for_variance(cls, v: Variance) -> "Relation":
        return {COV: cls.SUB, INV: cls.EQ, CONTRA: cls.SUP}[v]

    def __str__(self) -> str:
        return self.value

    __hash__ = object.__hash__


SUB, EQ, SUP = Relation.SUB, Relation.EQ, Relation.SUP


class FragmentRefused(TableError):
    """The requested engine does not apply to this class table."""


@dataclass(frozen=True)
class AlphabetSplit:
    sub: frozenset[str] | None = None
    sup: frozenset[str] | None = None


@dataclass(frozen=True)
class Query:
    left: Term
    right: Term
    rel: Relation = SUB
    split: AlphabetSplit | None = None

    def mirror(self) -> "Query":
        split = self.split and AlphabetSplit(self.split.sup, self.split.sub)
        return Query(self.right, self.left, self.rel.mirror, split)

    def __str__(self) -> str:
        return f"{self.left} {self.rel} {self.right}"


_QUERY = re.compile(r"^(.*?)\s*(<:|:>|=|⊑|⊒)\s*(.*)$")


def parse_query(text: str, split: AlphabetSplit | None = None) -> Query:
    m = _QUERY.match(text.strip())
    if not m:
        raise TermSyntaxError(f"expected 'left <: right', 'left :> right' or 'left = right': {text!r}")
    rel = {"<:": SUB, "⊑": SUB, ":>": SUP, "⊒": SUP, "=": EQ}[m.group(2)]
    left, right = parse_term(m.group(1)), parse_term(m.group(3))
    return Query(left, right, rel, split)


# -- proof traces -----------------------------------------------------------


@dataclass(frozen=True)
class ProofTrace:
    """One rule application.

    ``var`` decomposes equal heads (children listed per argument, with the
    head's variances); ``super`` replaces the left side by its ``index``-th
    declared supertype of ``cls`` and has one child; ``eq`` closes an
    invariant position whose two sides are identical.  A ``var`` step with
    no children is the reflexive axiom on a leaf.
    """

    kind: str
    cls: str | None = None
    index: int | None = None
    children: tuple["ProofTrace", ...] = ()
    variances: tuple[Variance, ...] = ()


EQ_LEAF = ProofTrace("eq")
EMPTY_TRACE = ProofTrace("var")


def trace_nodes(trace: ProofTrace) -> Iterator[ProofTrace]:
    stack = [trace]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(reversed(t.children))


def _normalize(left: Term, right: Term, rel: Relation) -> tuple[Term, Term, Relation]:
    return (right, left, SUB) if rel is SUP else (left, right, rel)


def check_trace(table: ClassTable, q: Query, trace: ProofTrace) -> bool:
    """Replay ``trace`` against ``q``; True iff every step is a legal rule instance."""
    stack = [(trace, *_normalize(q.left, q.right, q.rel))]
    while stack:
        t, left, right, rel = stack.pop()
        if not isinstance(left, Term) or not isinstance(right, Term):
            return False
        if rel is EQ:
            if t.kind != "eq" or left is not right:
                return False
            continue
        if t.kind == "var":
            if left.head != right.head or left.head not in table:
                return False
            vs = table[left.head].variances
            if len(vs) != len(left.args) or len(right.args) != len(vs):
                return False
            if len(t.children) != len(vs) or (t.variances and t.variances != vs):
                return False
            for child, a, b, v in zip(t.children, left.args, right.args, vs):
                stack.append((child, *_normalize(a, b, Relation.for_variance(v))))
        elif t.kind == "super":
            if t.cls != left.head or left.head not in table or len(t.children) != 1:
                return False
            try:
                supers = supertypes_of(table, left)
            except TableError:
                return False
            if t.index is None or not 0 <= t.index < len(supers):
                return False
            stack.append((t.children[0], supers[t.index], right, SUB))
        else:
            return False
    return True


def trace_to_json(table: ClassTable, q: Query, trace: ProofTrace) -> list[dict]:
    """Flat node list (children by index) annotated with the query each step proves."""
    out: list[dict] = []
    stack = [(trace, *_normalize(q.left, q.right, q.rel), None)]
    while stack:
        t, left, right, rel, parent = stack.pop()
        idx = len(out)
        node = {"id": idx, "rule": t.kind, "query": f"{left} {rel} {right}", "children": []}
        if t.kind == "super":
            node["decl"] = {"class": t.cls, "index": t.index,
                            "supertype": format_term(table[t.cls].supers[t.index])}
        if t.kind == "var" and t.variances:
            node["variances"] = [v.value for v in t.variances]
        out.append(node)
        if parent is not None:
            out[parent]["children"].append(idx)
        if t.kind == "var":
            kids = list(zip(t.children, left.args, right.args, t.variances or table[left.head].variances))
            for child, a, b, v in reversed(kids):
                stack.append((child, *_normalize(a, b, Relation.for_variance(v)), idx))
        elif t.kind == "super":
            sup = supertypes_of(table, left)[t.index]
            stack.append((t.children[0], sup, right, SUB, idx))
    return out


# -- verdicts ---------------------------------------------------------------


@dataclass(frozen=True)
class Holds:
    trace: ProofTrace
    positive = True
    label = "holds"


@dataclass(frozen=True)
class Fails:
    positive = False
    label = "fails"


@dataclass(frozen=True)
class CycleRejected:
    """No finite proof exists; ``cycle`` is a proof path whose last query repeats an earlier one."""

    cycle: tuple[tuple[Term, Term, Relation], ...]
    positive = False
    label = "cycle-rejected"

    def describe(self) -> list[str]:
        return [f"{l} {r.value} {t}" for l, t, r in self.cycle]


@dataclass(frozen=True)
class Undecided:
    reason: str
    positive = False
    label = "undecided"


Verdict = Union[Holds, Fails, CycleRejected, Undecided]


# -- search engine ----------------------------------------------------------

Goal = tuple  # (left, right, Relation.SUB)


@dataclass
class SearchStats:
    """Instrumentation: number of goals expanded (memo misses)."""

    expansions: int = 0
    memo_hits: int = 0
    pruned: int = 0


@dataclass
class _Alt:
    subgoals: list
    build: Callable[[list[ProofTrace]], ProofTrace]


class SubtypingCache:
    """Opt-in persistent memo shared across calls, keyed by table fingerprint and engine.

    Each call reads through to the shared map and publishes its settled
    results when it finishes, so concurrent calls never observe partial state.
    """

    def __init__(self) -> None:
        self._maps: dict[tuple[str, str], dict] = {}
        self._lock = threading.Lock()

    def view(self, table: ClassTable, engine: str) -> dict:
        with self._lock:
            return self._maps.setdefault((table.fingerprint, engine), {})

    def publish(self, table: ClassTable, engine: str, results: dict) -> None:
        with self._lock:
            self._maps.setdefault((table.fingerprint, engine), {}).update(results)

    def __len__(self) -> int:
        return sum(len(m) for m in self._maps.values())


class _Frame:
    __slots__ = ("goal", "alts", "ai", "si", "kids", "depth", "low", "cut")

    def __init__(self, goal, depth):
        self.goal = goal
        self.alts = None
        self.ai = 0
        self.si = 0
        self.kids: list = []
        self.depth = depth
        self.low = depth + 1  # > depth means no dependence on an open ancestor
        self.cut = None  # cycle witness behind a failed alternative, if any


def _search(root: Goal, expand: Callable[[Goal], list[_Alt]], *, ledger: bool,
            shared: dict | None, stats: SearchStats, max_depth: int | None = None):
    """AND/OR search returning (holds, trace, cycle_witness, pruned_anything, settled).

    Memo entries are ``(holds, trace, cut)``; ``cut`` is the cycle witness a
    refutation relied on, so a cached refutation still reports its cycle.
    """
    memo: dict = {}
    on_path: dict = {}
    pruned = False
    frames = [_Frame(root, 0)]
    on_path[root] = 0
    result = None

    def lookup(g):
        r = memo.get(g)
        if r is None and shared is not None:
            r = shared.get(g)
        return r

    while frames:
        f = frames[-1]
        if f.alts is None:
            stats.expansions += 1
            f.alts = expand(f.goal)
        outcome = None
        if f.ai >= len(f.alts):
            outcome = (False, None, f.cut)
        else:
            alt = f.alts[f.ai]
            if f.si >= len(alt.subgoals):
                outcome = (True, alt.build(f.kids), None)
        if outcome is not None:
            frames.pop()
            del on_path[f.goal]
            ok, tr, cut = outcome
            if ok or f.low > f.depth:
                memo[f.goal] = outcome
            if not frames:
                result = outcome
                break
            parent = frames[-1]
            if not ok:
                parent.low = min(parent.low, f.low)
                parent.cut = parent.cut or cut
            _advance(parent, ok, tr)
            continue
        sub = alt.subgoals[f.si]
        if sub[2] is EQ:
            ok = sub[0] is sub[1]
            _advance(f, ok, EQ_LEAF if ok else None)
            continue
        hit = lookup(sub)
        if hit is not None:
            stats.memo_hits += 1
            ok, tr, cut = hit
            if not ok:
                f.cut = f.cut or cut
            _advance(f, ok, tr)
            continue
        if ledger and sub in on_path:
            d = on_path[sub]
            stats.pruned += 1
            pruned = True
            f.low = min(f.low, d)
            f.cut = f.cut or tuple(fr.goal for fr in frames[d:]) + (sub,)
            _advance(f, False, None)
            continue
        if max_depth is not None and len(frames) > max_depth:
            stats.pruned += 1
            pruned = True
            f.low = min(f.low, 0)
            _advance(f, False, None)
            continue
        on_path[sub] = len(frames)
        frames.append(_Frame(sub, len(frames)))

    if shared is not None:
        # only unconditional results are in memo, so they are safe to publish
        shared_updates = memo
    else:
        shared_updates = None
    ok, tr, witness = result
    return ok, tr, witness, pruned, shared_updates


def _advance(f: _Frame, ok: bool, tr) -> None:
    if ok:
        f.kids.append(tr)
        f.si += 1
    else:
        f.ai += 1
        f.si = 0
        f.kids = []


def _var_builder(variances: tuple[Variance, ...]):
    return lambda kids: ProofTrace("var", children=tuple(kids), variances=variances)


def _super_builder(cls: str, index: int):
    return lambda kids: ProofTrace("super", cls, index, (kids[0],))


def _chain_builder(path: tuple[tuple[str, int], ...], variances: tuple[Variance, ...]):
    def build(kids):
        t = ProofTrace("var", children=tuple(kids), variances=variances)
        for cls, idx in reversed(path):
            t = ProofTrace("super", cls, idx, (t,))
        return t
    return build


# -- engines ----------------------------------------------------------------


def _validate(table: ClassTable, q: Query) -> None:
    diags = check_well_formed(table)
    if diags:
        raise IllFormedTable(diags)
    table.check_type(q.left)
    table.check_type(q.right)
    if q.split is not None and q.rel is not EQ:
        sub, sup, _ = _normalize(q.left, q.right, q.rel)
        for t, alphabet, side in ((sub, q.split.sub, "subtype"), (sup, q.split.sup, "supertype")):
            if alphabet is None:
                continue
            bad = sorted({n.head for n in _nodes(t)} - set(alphabet))
            if bad:
                raise TableError(f"{side} side uses classes outside its alphabet: {', '.join(bad)}")


def _nodes(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(n.args)


def _finish(ok, tr, witness) -> Verdict:
    if ok:
        return Holds(tr)
    if witness is not None:
        return CycleRejected(witness)
    return Fails()


def _non_expansive_expander(table: ClassTable):
    reach: dict[str, frozenset[str]] = {}

    def reachable(name: str) -> frozenset[str]:
        r = reach.get(name)
        if r is None:
            r = reach[name] = frozenset(i.target for i in table.inheritance(name))
        return r

    def expand(goal):
        left, right, _ = goal
        d = table[left.head]
        if left.head == right.head:
            vs = d.variances
            subs = [_normalize(a, b, Relation.for_variance(v))
                    for a, b, v in zip(left.args, right.args, vs)]
            return [_Alt(subs, _var_builder(vs))]
        alts = []
        for i, u in enumerate(supertypes_of(table, left)):
            if right.head in reachable(u.head):
                alts.append(_Alt([(u, right, SUB)], _super_builder(left.head, i)))
        return alts

    return expand


def _non_contravariant_expander(table: ClassTable):
    def expand(goal):
        left, right, _ = goal
        binding = dict(zip(table[left.head].param_names, left.args))
        vs = table[right.head].variances
        alts = []
        seen = set()
        for inh in table.inheritance_to(left.head, right.head):
            u = apply_subst(inh.pattern, binding)
            if u in seen:
                continue
            seen.add(u)
            subs = [(a, b, SUB if v is COV else EQ) for a, b, v in zip(u.args, right.args, vs)]
            alts.append(_Alt(subs, _chain_builder(inh.path, vs)))
        return alts

    return expand


def _run(table: ClassTable, q: Query, engine: str, expand, ledger: bool,
         cache: SubtypingCache | None, stats: SearchStats | None,
         max_depth: int | None = None) -> Verdict:
    stats = stats if stats is not None else SearchStats()
    left, right, rel = _normalize(q.left, q.right, q.rel)
    if rel is EQ:
        return Holds(EQ_LEAF) if left is right else Fails()
    shared = cache.view(table, engine) if cache is not None else None
    ok, tr, witness, pruned, updates = _search((left, right, SUB), expand, ledger=ledger,
                                               shared=shared, stats=stats, max_depth=max_depth)
    if cache is not None and updates:
        cache.publish(table, engine, updates)
    return _finish(ok, tr, witness)


def decide_non_expansive(table: ClassTable, q: Query, *, cache: SubtypingCache | None = None,
                         stats: SearchStats | None = None) -> Verdict:
    """Var/Super search with a cycle ledger; requires a non-expansive table."""
    _validate(table, q)
    if classify(table).expansive:
        raise FragmentRefused("the class table has expansive inheritance")
    return _run(table, q, "nonexp", _non_expansive_expander(table), True, cache, stats)


def decide_non_contravariant(table: ClassTable, q: Query, *, cache: SubtypingCache | None = None,
                             stats: SearchStats | None = None) -> Verdict:
    """Transitive-inheritance search; requires a table without contravariance."""
    _validate(table, q)
    if any(v is CONTRA for d in table for v in d.variances):
        raise FragmentRefused("the class table uses contravariance")
    return _run(table, q, "noncontra", _non_contravariant_expander(table), False, cache, stats)


def decide(table: ClassTable, q: Query, *, bounded_depth: int | None = None,
           cache: SubtypingCache | None = None, stats: SearchStats | None = None) -> Verdict:
    """Route to the engine that fits the table's fragment.

    Tables with both contravariance and expansive inheritance are refused
    with ``Undecided``, unless ``bounded_depth`` asks for a best-effort search
    that can only confirm.
    """
    _validate(table, q)
    features = classify(table)
    if not features.contravariant:
        return decide_non_contravariant(table, q, cache=cache, stats=stats)
    if not features.expansive:
        return decide_non_expansive(table, q, cache=cache, stats=stats)
    if bounded_depth is None:
        return Undecided(f"{features.fragment} fragment: contravariance with expansive inheritance")
    v = _run(table, q, "bounded", _non_expansive_expander(table), True, None, stats, bounded_depth)
    if isinstance(v, Holds):
        return v
    return Undecided(f"no proof within depth {bounded_depth}")
