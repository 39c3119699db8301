import pytest

from helpers import all_words, is_palindrome, nat_list_grammar, rtg_accepts
from submachine.core import ClassDecl, ClassTable, COV, INV, classify, types_up_to_height
from submachine.grammars import (NotGnf, Production, TreeGrammar, derive_trees, is_gnf, parse_tree_grammar,
                                 regular_grammar)
from submachine.subtyping import FragmentRefused, Query, decide
from submachine.tableio import format_table, load_table
from submachine.terms import Param, Term, monadic, monadic_word, parse_term
from submachine.transforms import (NameClash, check_determinism_correspondence, class_table_to_gnf_cftg,
                                   class_table_to_rtg, encode_o, gnf_cftg_to_class_table, rtg_to_class_table,
                                   unifiable_supertype_pairs)

PAL_CFTG = """\
# terminals: a/1, b/1, E/0
# initial: v0(E)
v0(x) -> a(v0(a(x)))
v0(x) -> a(a(x))
v0(x) -> a(x)
v0(x) -> b(v0(b(x)))
v0(x) -> b(b(x))
v0(x) -> b(x)
"""

# a^n m b^n E
AMB_CFTG = """\
# terminals: a/1, b/1, m/1, E/0
# initial: v2(v1)
v0(x) -> b(x)
v1 -> E
v2(x) -> m(x)
v2(x) -> a(v2(v0(x)))
"""

BINARY = "a(+x, oy) : _\nb(oz) : a(z, z)\nE : _\n"


def rule_set(table):
    return {d.name: (d.params, d.supers) for d in table}


# -- regular grammar -> table ------------------------------------------------------


def test_nat_list_table():
    enc = rtg_to_class_table(nat_list_grammar())
    expected = load_table("z : _\ns(+x) : _\nnil : _\ncons(+x1, +x2) : _\n"
                          "List : nil, cons(Nat, List)\nNat : z, s(Nat)\n")
    assert rule_set(enc.table) == rule_set(expected.table)
    assert enc.subtype == Term("List")
    assert enc.split.sup == frozenset({"z", "s", "nil", "cons"})
    f = classify(enc.table)
    assert not f.contravariant and not f.expansive and not f.multiple_instantiation


def test_two_productions_with_one_head_give_multiple_instantiation():
    g = regular_grammar({"s": 1, "z": 0}, "A", [("A", "s", ("A",)), ("A", "s", ("B",)), ("A", "z", ()),
                                                ("B", "z", ())])
    assert classify(rtg_to_class_table(g).table).multiple_instantiation


def test_single_leaf_production():
    enc = rtg_to_class_table(regular_grammar({"leaf": 0}, "S", [("S", "leaf", ())]))
    assert [d.name for d in enc.table] == ["leaf", "S"]
    assert enc.table["S"].supers == (Term("leaf"),)


def test_name_clash():
    g = nat_list_grammar()
    g2 = type(g).__new__(type(g))
    object.__setattr__(g2, "terminals", {**g.terminals, "Nat": 0})
    for k in ("variables", "initial", "productions", "comments"):
        object.__setattr__(g2, k, getattr(g, k))
    with pytest.raises(NameClash):
        rtg_to_class_table(g2)


# -- non-expansive table -> regular grammar ---------------------------------------


def test_nc_extraction_has_no_cyclic_production(nc_table):
    g = class_table_to_rtg(nc_table.table, nc_table.subtype, nc_table.sigma_top)
    v1 = next(p.rhs.args[0].head for p in g.productions if p.lhs == "v0" and p.rhs.head == "N")
    assert Production(v1, (), Term("C")) not in g.productions
    assert dict(g.comments)["v0"] == "{C <: x}"


def test_expansive_table_is_refused(expansive_table, palindrome_table):
    with pytest.raises(FragmentRefused):
        class_table_to_rtg(palindrome_table.table, palindrome_table.subtype)
    with pytest.raises(FragmentRefused):
        class_table_to_gnf_cftg(expansive_table.table, Term("a", [Term("a", [Param("x")])]))


def test_regular_round_trip_small():
    g = nat_list_grammar()
    enc = rtg_to_class_table(g)
    back = class_table_to_rtg(enc.table, enc.subtype, g.terminals)
    rederived = derive_trees(back, 3)
    for t in types_up_to_height(enc.table, 3, names=g.terminals):
        assert (t in rederived) == rtg_accepts(g, t), t


# -- GNF tree grammar -> table ----------------------------------------------------


def test_palindrome_grammar_gives_palindrome_table(palindrome_table):
    enc = gnf_cftg_to_class_table(parse_tree_grammar(PAL_CFTG))
    assert rule_set(enc.table) == rule_set(palindrome_table.table)
    assert enc.subtype == palindrome_table.subtype
    assert enc.table["v0"].params == (("x", INV),)


def test_anbn_grammar_table():
    enc = gnf_cftg_to_class_table(parse_tree_grammar(AMB_CFTG))
    expected = load_table("a(+x) : _\nb(+x) : _\nm(+x) : _\nE : _\nv0(ox) : b(x)\nv1 : E\n"
                          "v2(ox) : m(x), a(v2(v0(x)))\n")
    assert rule_set(enc.table) == rule_set(expected.table)
    assert enc.subtype == parse_term("v2(v1)")
    for w, ok in [("aaambbb", True), ("ambb", False), ("aamb", False), ("m", True)]:
        assert decide(enc.table, Query(enc.subtype, monadic(w, Term("E")))).positive == ok, w


def test_duplicate_productions_deduplicated():
    g = TreeGrammar({"a": 1, "E": 0}, {"v": 1}, parse_term("v(E)"),
                    (Production("v", ("x",), Term("a", [Param("x")])),
                     Production("v", ("y",), Term("a", [Param("y")]))))
    table = gnf_cftg_to_class_table(g).table
    assert len(table["v"].supers) == 1 and unifiable_supertype_pairs(table) == []
    raw = gnf_cftg_to_class_table(g, dedup=False).table
    assert len(raw["v"].supers) == 2


def test_non_gnf_rejected():
    g = parse_tree_grammar("# terminals: leaf/0, node/2\nv0 -> v1(leaf)\nv1(x) -> x\n")
    with pytest.raises(NotGnf):
        gnf_cftg_to_class_table(g)


@pytest.mark.parametrize("text", [PAL_CFTG, AMB_CFTG])
def test_context_free_round_trip(text):
    g = parse_tree_grammar(text)
    enc = gnf_cftg_to_class_table(g)
    derived = derive_trees(g, 6)
    for t in types_up_to_height(enc.table, 6, names=[n for n, k in g.terminals.items() if k <= 1]):
        assert decide(enc.table, Query(enc.subtype, t)).positive == (t in derived), t


# -- non-contravariant table -> GNF tree grammar ----------------------------------


def test_binary_table_encoding():
    tf = load_table(BINARY)
    g = class_table_to_gnf_cftg(tf.table, parse_term("b(E)"))
    assert is_gnf(g)
    assert g.variables["a_p"] == 4 and g.variables["a_o"] == 2
    z_p, z_o = Param("z_p"), Param("z_o")
    assert Production("b_p", ("z_p", "z_o"), Term("a", [z_p, z_o])) in g.productions
    assert Production("b_o", ("z_o",), Term("b", [z_o])) in g.productions
    # invariant forms only ever derive their own class
    assert not any(p.lhs == "b_o" and p.rhs.head == "a" for p in g.productions)
    assert g.initial == parse_term("b_p(E_p, E_o)")


def test_binary_table_language():
    tf = load_table(BINARY)
    g = class_table_to_gnf_cftg(tf.table, parse_term("b(E)"))
    trees = derive_trees(g, 3)
    assert trees == {parse_term("b(E)"), parse_term("a(E, E)")}
    for t in trees:
        assert decide(tf.table, Query(parse_term("b(E)"), t)).positive


def test_single_leaf_table():
    tf = load_table("E : _\n")
    g = class_table_to_gnf_cftg(tf.table, Term("E"))
    assert set(g.productions) == {Production("E_o", (), Term("E")), Production("E_p", (), Term("E"))}
    assert derive_trees(g, 3) == {Term("E")}


def test_contravariant_table_refused(nc_table):
    with pytest.raises(FragmentRefused):
        class_table_to_gnf_cftg(nc_table.table, nc_table.subtype)


def test_invariant_forms_derive_only_themselves():
    tf = load_table(BINARY)
    g = class_table_to_gnf_cftg(tf.table, Term("E"))
    for t in types_up_to_height(tf.table, 3, names=["a", "b", "E"]):
        assert derive_trees(g.with_initial(encode_o(tf.table, t)), 4) == {t}, t


def test_palindrome_table_to_grammar(palindrome_table):
    g = class_table_to_gnf_cftg(palindrome_table.table, palindrome_table.subtype, palindrome_table.sigma_top)
    words = set()
    for t in derive_trees(g, 8, max_steps=10_000, strategy="outermost"):
        w, bottom = monadic_word(t)
        assert bottom == Term("E")
        words.add(tuple(w))
    assert words == {w for w in all_words("ab", 7, min_len=1) if is_palindrome(w)}


def test_subtype_outside_sigma_top_is_allowed(palindrome_table):
    g = class_table_to_gnf_cftg(palindrome_table.table, parse_term("v0(E)"), ["a", "E"])
    words = {tuple(monadic_word(t)[0]) for t in derive_trees(g, 6)}
    assert words == {w for w in all_words("a", 5, min_len=1)}


# -- determinism ------------------------------------------------------------------


def test_determinism_reports(palindrome_table):
    r = check_determinism_correspondence(nat_list_grammar())
    assert r.grammar_deterministic and r.single_instantiation and r.consistent
    r = check_determinism_correspondence(parse_tree_grammar(PAL_CFTG))
    assert not r.grammar_deterministic and r.consistent
    r = check_determinism_correspondence(palindrome_table.table)
    assert not r.single_instantiation and r.consistent
    r = check_determinism_correspondence(load_table(BINARY).table)
    assert r.consistent


def test_determinism_needs_a_leaf():
    table = ClassTable([ClassDecl("a", (("x", COV),))])
    with pytest.raises(Exception, match="leaf"):
        check_determinism_correspondence(table)


def test_format_of_encoded_table_round_trips(palindrome_table):
    enc = gnf_cftg_to_class_table(parse_tree_grammar(PAL_CFTG))
    again = load_table(format_table(enc.table, enc.subtype))
    assert rule_set(again.table) == rule_set(enc.table) and again.subtype == enc.subtype
