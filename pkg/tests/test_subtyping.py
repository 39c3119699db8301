import itertools
import random
import threading

import pytest
from hypothesis import HealthCheck, assume, given, settings

from helpers import naive_sub, small_tables
from submachine.core import ClassDecl, ClassTable, TableError, check_well_formed, classify, types_up_to_height
from submachine.subtyping import (EMPTY_TRACE, EQ, SUB, SUP, AlphabetSplit, CycleRejected, Fails,
                                  FragmentRefused, Holds, ProofTrace, Query, Relation, SearchStats,
                                  SubtypingCache, Undecided, check_trace, decide, decide_non_contravariant,
                                  decide_non_expansive, parse_query, trace_nodes, trace_to_json)
from submachine.tableio import load_table
from submachine.terms import Term, leaf, monadic, parse_term

T = parse_term
EQ19 = load_table("a(+x, oy) : _\nb(oz) : a(z, z)\nE : _").table


def word(w: str) -> Term:
    return monadic(w, leaf("E"))


def test_relation_mirror():
    assert SUB.mirror is SUP and SUP.mirror is SUB and EQ.mirror is EQ
    q = Query(T("C"), T("N(C)"), SUB, AlphabetSplit(frozenset("C"), frozenset("N")))
    m = q.mirror()
    assert (m.left, m.right, m.rel) == (T("N(C)"), T("C"), SUP)
    assert m.split == AlphabetSplit(frozenset("N"), frozenset("C"))


@pytest.mark.parametrize("text, rel", [("a <: b", SUB), ("a :> b", SUP), ("a = b", EQ), ("a ⊑ b", SUB),
                                       ("a ⊒ b", SUP)])
def test_parse_query(text, rel):
    q = parse_query(text)
    assert q.rel is rel and q.left == T("a") and q.right == T("b")


def test_parse_query_rejects_garbage():
    with pytest.raises(ValueError):
        parse_query("a b")


# -- non-expansive engine -------------------------------------------------------


def test_nc_holds(nc_table):
    v = decide_non_expansive(nc_table.table, Query(T("C"), T("N(N(C))")))
    assert isinstance(v, Holds)
    assert check_trace(nc_table.table, Query(T("C"), T("N(N(C))")), v.trace)


def test_nc_cycle_rejected(nc_table):
    v = decide_non_expansive(nc_table.table, Query(T("N(C)"), T("C"), SUP))
    assert isinstance(v, CycleRejected)
    assert v.cycle[0] == v.cycle[-1] or v.cycle[-1] in v.cycle[:-1]
    assert v.describe()


def test_nc_language(nc_table):
    for k in range(9):
        t = monadic(["N"] * k, leaf("C"))
        assert decide(nc_table.table, Query(T("C"), t)).positive == (k % 2 == 0)


def test_reflexivity_everywhere(nc_table, palindrome_table):
    for tab in (nc_table.table, palindrome_table.table, EQ19):
        for t in types_up_to_height(tab, 3):
            assert isinstance(decide(tab, Query(t, t)), Holds)
            assert isinstance(decide(tab, Query(t, t, EQ)), Holds)


def test_non_expansive_refuses_expansive(palindrome_table):
    with pytest.raises(FragmentRefused):
        decide_non_expansive(palindrome_table.table, Query(T("E"), T("E")))


# -- non-contravariant engine ---------------------------------------------------


def test_palindrome_examples(palindrome_table):
    tab, start = palindrome_table.table, palindrome_table.subtype
    assert isinstance(decide_non_contravariant(tab, Query(start, word("abbabba"))), Holds)
    assert isinstance(decide_non_contravariant(tab, Query(start, word("abbabaa"))), Fails)


def test_invariant_pair():
    assert isinstance(decide_non_contravariant(EQ19, Query(T("b(E)"), T("a(E, E)"))), Holds)
    assert not decide_non_contravariant(EQ19, Query(T("b(E)"), T("a(E, b(E))"))).positive


def test_non_contravariant_refuses_contravariance(nc_table):
    with pytest.raises(FragmentRefused):
        decide_non_contravariant(nc_table.table, Query(T("C"), T("C")))


def test_eq_is_structural(palindrome_table):
    tab = palindrome_table.table
    assert decide(tab, Query(T("a(E)"), T("a(E)"), EQ)).positive
    assert not decide(tab, Query(T("v0(E)"), T("a(E)"), EQ)).positive


# -- routing --------------------------------------------------------------------


def test_decide_routes_like_the_engine(palindrome_table):
    tab, start = palindrome_table.table, palindrome_table.subtype
    for w in ("abba", "ab", "a", "babab"):
        q = Query(start, word(w))
        assert decide(tab, q) == decide_non_contravariant(tab, q)


def test_decide_undecided_on_c_and_x(expansive_table):
    tab = ClassTable(list(expansive_table.table) + [ClassDecl("t")])
    v = decide(tab, Query(T("d(t)"), T("a(d(a(t)))")))
    assert isinstance(v, Undecided) and "Tcx" in v.reason


def test_bounded_depth_can_only_confirm(expansive_table):
    tab = ClassTable(list(expansive_table.table) + [ClassDecl("t")])
    v = decide(tab, Query(T("d(t)"), T("a(d(a(t)))")), bounded_depth=20)
    assert isinstance(v, Holds) and check_trace(tab, Query(T("d(t)"), T("a(d(a(t)))")), v.trace)
    v = decide(tab, Query(T("d(t)"), T("b(t)")), bounded_depth=20)
    assert isinstance(v, Undecided)


def test_undeclared_names_are_errors():
    with pytest.raises(TableError):
        decide(ClassTable([]), Query(T("a"), T("b")))


def test_ill_formed_table_refused():
    with pytest.raises(TableError):
        decide(load_table("a : a").table, Query(T("a"), T("a")))


def test_alphabet_split_enforced(nc_table):
    split = AlphabetSplit(None, frozenset({"N"}))
    with pytest.raises(TableError, match="supertype side"):
        decide(nc_table.table, Query(T("C"), T("N(N(C))"), SUB, split))


# -- traces ---------------------------------------------------------------------


def test_trace_replay(palindrome_table):
    tab, start = palindrome_table.table, palindrome_table.subtype
    good = Query(start, word("abbabba"))
    v = decide(tab, good)
    assert check_trace(tab, good, v.trace)
    assert not check_trace(tab, Query(start, word("abbabaa")), v.trace)
    supers = [n for n in trace_nodes(v.trace) if n.kind == "super"]
    assert supers and all(n.cls == "v0" for n in supers)


def test_empty_trace_is_reflexive_leaf():
    assert check_trace(EQ19, Query(T("E"), T("E")), EMPTY_TRACE)
    assert not check_trace(EQ19, Query(T("E"), T("b(E)")), EMPTY_TRACE)


def test_forged_traces_rejected(nc_table):
    q = Query(T("C"), T("N(N(C))"))
    assert not check_trace(nc_table.table, q, ProofTrace("super", "C", 5, (EMPTY_TRACE,)))
    assert not check_trace(nc_table.table, q, ProofTrace("bogus"))


def test_trace_json(nc_table):
    q = Query(T("C"), T("N(N(C))"))
    nodes = trace_to_json(nc_table.table, q, decide(nc_table.table, q).trace)
    assert nodes[0]["rule"] == "super" and nodes[0]["decl"] == {"class": "C", "index": 0,
                                                                 "supertype": "N(N(C))"}
    assert nodes[0]["query"] == "C <: N(N(C))"
    assert all(c > n["id"] for n in nodes for c in n["children"])


def test_deep_query_does_not_hit_recursion_limit(palindrome_table):
    rng = random.Random(3)
    half = "".join(rng.choice("ab") for _ in range(1500))
    w = half + "a" + half[::-1]
    v = decide(palindrome_table.table, Query(palindrome_table.subtype, word(w)))
    assert isinstance(v, Holds)
    assert check_trace(palindrome_table.table, Query(palindrome_table.subtype, word(w)), v.trace)
    assert not decide(palindrome_table.table, Query(palindrome_table.subtype, word(w + "b"))).positive


# -- caching --------------------------------------------------------------------


def test_persistent_cache_agrees(palindrome_table):
    tab, start = palindrome_table.table, palindrome_table.subtype
    cache = SubtypingCache()
    words = ["".join(p) for n in range(1, 8) for p in itertools.product("ab", repeat=n)]
    for w in words:
        q = Query(start, word(w))
        assert decide(tab, q, cache=cache).positive == decide(tab, q).positive
    assert len(cache) > 0
    stats = SearchStats()
    decide(tab, Query(start, word("abba")), cache=cache, stats=stats)
    assert stats.memo_hits >= 1


def test_cached_refutations_keep_their_cycle(nc_table):
    cache = SubtypingCache()
    for k in range(8):
        q = Query(T("C"), monadic(["N"] * k, leaf("C")))
        assert decide(nc_table.table, q, cache=cache).label == decide(nc_table.table, q).label
    assert isinstance(decide(nc_table.table, Query(T("C"), T("N(N(N(C)))")), cache=cache), CycleRejected)


def test_cache_concurrent_use(nc_table):
    cache = SubtypingCache()
    queries = [Query(T("C"), monadic(["N"] * k, leaf("C"))) for k in range(12)]
    expected = [decide(nc_table.table, q).label for q in queries]
    errors = []

    def worker():
        for q, e in zip(queries, expected):
            if decide(nc_table.table, q, cache=cache).label != e:
                errors.append(q)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []


# -- properties -----------------------------------------------------------------

_props = settings(max_examples=150, deadline=None,
                  suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])


def _well_formed(tab):
    return not check_well_formed(tab)


@_props
@given(tab=small_tables(variances=("+", "o")))
def test_non_contravariant_matches_naive_recursion(tab):
    assume(_well_formed(tab))
    types = types_up_to_height(tab, 3)[:40]
    for l, r in itertools.product(types, types):
        v = decide_non_contravariant(tab, Query(l, r))
        assert not isinstance(v, CycleRejected)
        assert v.positive == naive_sub(tab, l, r), (l, r)
        if isinstance(v, Holds):
            assert check_trace(tab, Query(l, r), v.trace)


@_props
@given(tab=small_tables(variances=("+", "o"), max_rank=1))
def test_engines_agree_on_tm_tables(tab):
    assume(_well_formed(tab) and not classify(tab).expansive)
    types = types_up_to_height(tab, 4)
    for l, r in itertools.product(types, types):
        a = decide_non_contravariant(tab, Query(l, r)).positive
        b = decide_non_expansive(tab, Query(l, r)).positive
        assert a == b, (l, r)


def test_engines_agree_with_a_binary_class():
    tab = load_table("A : _\nB(+x) : A\nC(+x, oy) : B(x), B(y)").table
    assert not classify(tab).expansive and classify(tab).multiple_instantiation
    types = types_up_to_height(tab, 4)
    assert len(types) > 100
    for l, r in itertools.product(types, types):
        assert decide_non_contravariant(tab, Query(l, r)).positive == \
            decide_non_expansive(tab, Query(l, r)).positive, (l, r)


@_props
@given(tab=small_tables())
def test_traces_sound_on_random_tables(tab):
    assume(_well_formed(tab))
    f = classify(tab)
    assume(f.decidable)
    types = types_up_to_height(tab, 3)[:25]
    for l, r in itertools.product(types, types):
        q = Query(l, r)
        v = decide(tab, q)
        if isinstance(v, Holds):
            assert check_trace(tab, q, v.trace)
        if isinstance(v, CycleRejected):
            assert f.contravariant and not f.expansive


@_props
@given(tab=small_tables(variances=("+", "o")))
def test_monotone_cost_bound_single_instantiation(tab):
    assume(_well_formed(tab))
    assume(not classify(tab).multiple_instantiation)
    facts = sum(len(tab.inheritance(n)) for n in tab.names)
    types = types_up_to_height(tab, 3)[:30]
    for l, r in itertools.product(types, types):
        stats = SearchStats()
        decide_non_contravariant(tab, Query(l, r), stats=stats)
        assert stats.expansions <= facts * r.size
