from .io import (GrammarSyntaxError, cfg_from_json, cfg_to_json, format_tree_grammar, load_grammar,
                 parse_tree_grammar, tree_grammar_from_json, tree_grammar_to_json)
from .strings import (CfgSyntaxError, GnfConversion, StringCfg, cfg_to_gnf, cfg_to_monadic_cftg,
                      bounded_language, cyk_member, format_cfg, is_string_gnf, monadic_tree, nullable_variables,
                      parse_cfg, reverse_cfg, words)
from .trees import (DerivationOverflow, GnfCheck, GrammarError, NotGnf, Production,
                    RegularTreeGrammar, TreeGrammar, canonical_params, derive_trees,
                    ecftg_to_cftg, fresh_name, is_deterministic_gnf, is_gnf, regular_grammar)

__all__ = [
    "CfgSyntaxError", "DerivationOverflow", "bounded_language", "GnfCheck", "GnfConversion", "GrammarError",
    "GrammarSyntaxError", "NotGnf", "Production", "RegularTreeGrammar", "StringCfg", "TreeGrammar",
    "canonical_params", "cfg_from_json", "cfg_to_gnf", "cfg_to_json", "cfg_to_monadic_cftg",
    "cyk_member", "derive_trees", "ecftg_to_cftg", "format_cfg", "format_tree_grammar",
    "fresh_name", "is_deterministic_gnf", "is_gnf", "is_string_gnf", "load_grammar",
    "monadic_tree", "nullable_variables", "parse_cfg", "parse_tree_grammar", "regular_grammar",
    "reverse_cfg", "tree_grammar_from_json", "tree_grammar_to_json", "words",
]
