"""From a string grammar to a subtyping machine.

The grammar is reversed (a fluent chain type stacks its last call on top),
put in GNF, encoded as a monadic tree grammar over a bottom marker, and
turned into a class table with one inheritance rule per production.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import ClassTable
from .grammars.strings import StringCfg, cfg_to_gnf, cfg_to_monadic_cftg, monadic_tree, reverse_cfg
from .grammars.trees import TreeGrammar, fresh_name
from .subtyping import EMPTY_TRACE, Holds, Fails, Query, SearchStats, Verdict, decide_non_contravariant
from .terms import Term
from .transforms import gnf_cftg_to_class_table


@dataclass(frozen=True)
class Machine:
    grammar: StringCfg
    gnf: StringCfg          # GNF of the reversed grammar
    empty_word: bool
    cftg: TreeGrammar
    table: ClassTable
    subtype: Term           # start(bottom)
    bottom: str

    @property
    def entry(self) -> str:
        return self.grammar.start

    @property
    def tokens(self) -> tuple[str, ...]:
        return self.grammar.terminals

    def chain_type(self, tokens: Sequence[str]) -> Term:
        """The type a fluent chain calling ``tokens`` in order accumulates."""
        unknown = [t for t in tokens if t not in self.grammar.terminals]
        if unknown:
            raise ValueError(f"unknown tokens: {sorted(set(unknown))}")
        return monadic_tree(list(reversed(tokens)), self.bottom)

    def decide(self, tokens: Sequence[str], stats: SearchStats | None = None) -> Verdict:
        if not tokens:
            # the entry type also accepts the bare chain when ε is in the language
            return Holds(EMPTY_TRACE) if self.empty_word else Fails()
        return decide_non_contravariant(self.table, Query(self.subtype, self.chain_type(tokens)),
                                        stats=stats)

    def accepts(self, tokens: Sequence[str]) -> bool:
        return self.decide(tokens).positive


def build_machine(g: StringCfg, bottom: str = "BOTTOM") -> Machine:
    rev = reverse_cfg(g)
    conv = cfg_to_gnf(rev, terminal_tails=True)
    bottom = fresh_name(bottom, set(g.terminals) | set(conv.grammar.variables))
    cftg = cfg_to_monadic_cftg(conv.grammar, end_marker=bottom)
    enc = gnf_cftg_to_class_table(cftg, dedup=True)
    return Machine(g, conv.grammar, conv.empty_word, cftg, enc.table, enc.subtype, bottom)
