"""Chomsky normal form and CYK, kept private as an independent membership oracle."""

from __future__ import annotations

import itertools
from functools import lru_cache


class _Cnf:
    __slots__ = ("start", "empty", "unary", "binary")

    def __init__(self, start, empty, unary, binary):
        self.start = start
        self.empty = empty
        self.unary = unary      # terminal -> set of variables
        self.binary = binary    # (B, C) -> set of variables


def _to_cnf(g) -> _Cnf:
    variables = set(g.variables)
    rules = [(lhs, tuple(rhs)) for lhs, rhs in g.productions]

    nullable: set[str] = set()
    while True:
        grown = {lhs for lhs, rhs in rules if lhs not in nullable and all(s in nullable for s in rhs)}
        if not grown:
            break
        nullable |= grown
    empty = g.start in nullable

    # terminals become fresh pseudo-variables; long bodies are binarized
    lifted = {}
    def lift(s):
        if s in variables:
            return s
        return lifted.setdefault(s, ("T", s))

    no_eps = set()
    for lhs, rhs in rules:
        opts = [((), (s,)) if s in nullable else ((s,),) for s in rhs]
        for choice in itertools.product(*opts):
            body = tuple(s for part in choice for s in part)
            if body:
                no_eps.add((lhs, body))

    # unit closure
    units: dict[str, set[str]] = {v: {v} for v in variables}
    changed = True
    while changed:
        changed = False
        for lhs, body in no_eps:
            if len(body) == 1 and body[0] in variables:
                for v in variables:
                    if lhs in units[v] and body[0] not in units[v]:
                        units[v].add(body[0])
                        changed = True
    proper = [(lhs, body) for lhs, body in no_eps if not (len(body) == 1 and body[0] in variables)]
    expanded = {(v, body) for v in variables for lhs, body in proper if lhs in units[v]}

    unary: dict[str, set] = {}
    binary: dict[tuple, set] = {}
    counter = itertools.count()
    for lhs, body in expanded:
        if len(body) == 1:
            unary.setdefault(body[0], set()).add(lhs)
            continue
        syms = [lift(s) for s in body]
        head = lhs
        while len(syms) > 2:
            nxt = ("B", next(counter))
            binary.setdefault((syms[0], nxt), set()).add(head)
            head, syms = nxt, syms[1:]
        binary.setdefault((syms[0], syms[1]), set()).add(head)
    for s, pseudo in lifted.items():
        unary.setdefault(s, set()).add(pseudo)
    return _Cnf(g.start, empty, unary, binary)


@lru_cache(maxsize=64)
def _cached(g) -> _Cnf:
    return _to_cnf(g)


def cyk(g, w: tuple[str, ...]) -> bool:
    cnf = _cached(g)
    n = len(w)
    if n == 0:
        return cnf.empty
    table = [[set() for _ in range(n + 1)] for _ in range(n)]
    for i, tok in enumerate(w):
        table[i][1] = set(cnf.unary.get(tok, ()))
    pairs = list(cnf.binary.items())
    for span in range(2, n + 1):
        for i in range(n - span + 1):
            cell = table[i][span]
            for split in range(1, span):
                left, right = table[i][split], table[i + split][span - split]
                if not left or not right:
                    continue
                for (b, c), heads in pairs:
                    if b in left and c in right:
                        cell |= heads
    return cnf.start in table[0][n]
