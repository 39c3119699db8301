"""Independent oracles and hypothesis strategies shared by the test modules."""

from __future__ import annotations

import itertools
from functools import lru_cache

from hypothesis import strategies as st

from submachine.core import ClassTable
from submachine.grammars import RegularTreeGrammar, regular_grammar
from submachine.terms import Param, Term


def nat_list_grammar() -> RegularTreeGrammar:
    return regular_grammar({"z": 0, "s": 1, "nil": 0, "cons": 2}, "List",
                           [("List", "nil", ()), ("List", "cons", ("Nat", "List")),
                            ("Nat", "z", ()), ("Nat", "s", ("Nat",))])


def rtg_accepts(g: RegularTreeGrammar, t: Term) -> bool:
    """Top-down membership for a regular grammar, written without the derivation engine."""
    rules: dict[str, list[tuple[str, tuple[str, ...]]]] = {}
    for p in g.productions:
        rules.setdefault(p.lhs, []).append((p.rhs.head, tuple(a.head for a in p.rhs.args)))

    @lru_cache(maxsize=None)
    def gen(v: str, t: Term) -> bool:
        return any(sym == t.head and len(kids) == len(t.args) and all(map(gen, kids, t.args))
                   for sym, kids in rules.get(v, ()))

    return gen(g.start, t)


def is_palindrome(w) -> bool:
    w = list(w)
    return w == w[::-1]


def all_words(alphabet, max_len: int, min_len: int = 0):
    for n in range(min_len, max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def in_ambiguous_language(w, min_exp: int = 1) -> bool:
    """a^n b^m c^m d^n or a^n b^n c^m d^m, with n, m >= min_exp."""
    s = "".join(w)
    n = len(s)
    for i in range(n + 1):
        for j in range(i, n + 1):
            for k in range(j, n + 1):
                a, b, c, d = s[:i], s[i:j], s[j:k], s[k:]
                if set(a) <= {"a"} and set(b) <= {"b"} and set(c) <= {"c"} and set(d) <= {"d"}:
                    na, nb, nc, nd = len(a), len(b), len(c), len(d)
                    if min(na, nb, nc, nd) < min_exp:
                        continue
                    if (na == nd and nb == nc) or (na == nb and nc == nd):
                        return True
    return False


def ground_types(table: ClassTable, max_height: int, names=None) -> st.SearchStrategy:
    """Random ground types over ``names`` of height at most ``max_height``."""
    names = list(table.names if names is None else names)
    leaves = [n for n in names if table[n].rank == 0]
    inner = [n for n in names if table[n].rank > 0]

    def build(h: int) -> st.SearchStrategy:
        base = st.sampled_from(leaves).map(Term)
        if h <= 1 or not inner:
            return base
        sub = build(h - 1)
        return st.one_of(base, st.sampled_from(inner).flatmap(
            lambda n: st.lists(sub, min_size=table[n].rank, max_size=table[n].rank)
            .map(lambda args, n=n: Term(n, args))))

    return build(max_height)


def patterns(ranks: dict[str, int], params: list[str], max_height: int) -> st.SearchStrategy:
    """Random terms over ``ranks`` whose leaves may be parameters."""
    leaves = [n for n, k in ranks.items() if k == 0]
    inner = [n for n, k in ranks.items() if k > 0]

    def build(h: int) -> st.SearchStrategy:
        base = st.sampled_from(leaves).map(Term)
        if params:
            base = st.one_of(base, st.sampled_from(params).map(Param))
        if h <= 1 or not inner:
            return base
        sub = build(h - 1)
        return st.one_of(base, st.sampled_from(inner).flatmap(
            lambda n: st.lists(sub, min_size=ranks[n], max_size=ranks[n])
            .map(lambda args, n=n: Term(n, args))))

    return build(max_height)


# -- small random class tables --------------------------------------------------

_CLASS_NAMES = ("A", "B", "C")


@st.composite
def small_tables(draw, variances=("+", "o", "-"), max_rank: int = 2, max_supers: int = 2):
    """Acyclic 3-class tables: ``A`` is a leaf, later classes inherit earlier ones only."""
    from submachine.core import ClassDecl, ClassTable, Variance
    ranks = {"A": 0}
    decls = [ClassDecl("A")]
    for i, name in enumerate(_CLASS_NAMES[1:], 1):
        k = draw(st.integers(0, max_rank))
        params = tuple((f"{name.lower()}{j}", Variance.parse(draw(st.sampled_from(variances))))
                       for j in range(k))
        earlier = {n: ranks[n] for n in _CLASS_NAMES[:i]}
        pool = patterns(earlier, [p for p, _ in params], 3).filter(lambda p: isinstance(p, Term))
        supers = draw(st.lists(pool, max_size=max_supers))
        ranks[name] = k
        decls.append(ClassDecl(name, params, tuple(supers)))
    return ClassTable(decls)


def brute_force_polarity_ok(table) -> bool:
    """Independent walk: a parameter's variance must agree with every polarity it is seen at."""
    from submachine.core import Variance
    for d in table:
        var = dict(d.params)
        for sup in d.supers:
            stack = [(sup, frozenset("+"))]
            while stack:
                node, pol = stack.pop()
                if isinstance(node, Param):
                    v = var[node.name]
                    if v is Variance.COVARIANT and pol != {"+"}:
                        return False
                    if v is Variance.CONTRAVARIANT and pol != {"-"}:
                        return False
                    continue
                for child, cv in zip(node.args, table[node.head].variances):
                    if cv is Variance.COVARIANT:
                        stack.append((child, pol))
                    elif cv is Variance.CONTRAVARIANT:
                        stack.append((child, frozenset({"-" if p == "+" else "+" for p in pol})))
                    else:
                        stack.append((child, frozenset("+-")))
    return True


def naive_sub(table, left: Term, right: Term) -> bool:
    """Var/Super by plain recursion; terminates on tables without contravariance.

    Super keeps the right side fixed and walks the acyclic class order; Var
    shrinks the right side.  Invariant positions demand identical children.
    """
    from submachine.core import Variance, supertypes_of

    @lru_cache(maxsize=None)
    def sub(l: Term, r: Term) -> bool:
        if l.head == r.head:
            ok = True
            for a, b, v in zip(l.args, r.args, table[l.head].variances):
                if v is Variance.INVARIANT:
                    ok = a is b
                elif v is Variance.COVARIANT:
                    ok = sub(a, b)
                else:
                    raise ValueError("contravariant table")
                if not ok:
                    break
            if ok:
                return True
        return any(sub(u, r) for u in supertypes_of(table, l))

    return sub(left, right)
