"""Engine-level membership benchmark over random token strings."""

from __future__ import annotations

import csv
import io
import math
import random
import time
from dataclasses import dataclass
from typing import Sequence

from .grammars.strings import StringCfg, cyk_member
from .pipeline import Machine, build_machine

CYK_LIMIT = 14


class BenchError(RuntimeError):
    pass


@dataclass(frozen=True)
class BenchRecord:
    grammar: str
    size: int
    elapsed_ms: float
    verdict: bool
    cyk: bool | None = None


def random_query(tokens: Sequence[str], n: int, rng: random.Random) -> list[str]:
    return [rng.choice(tokens) for _ in range(n)]


def run_bench(g: StringCfg, sizes: Sequence[int], seed: int = 0, name: str | None = None,
              machine: Machine | None = None, repeats: int = 1) -> list[BenchRecord]:
    """Time one random query per size through the generated machine.

    Tokens are drawn uniformly and independently with a seeded generator.
    The elapsed time is the best of ``repeats`` runs of the same query.
    Verdicts for queries of at most ``CYK_LIMIT`` tokens are checked against CYK.
    """
    name = name or g.start
    if any(n < 0 for n in sizes) or repeats < 1:
        raise ValueError("sizes must be non-negative and repeats positive")
    try:
        machine = machine or build_machine(g)
    except Exception as e:
        raise BenchError(f"{name}: {e}") from e
    rng = random.Random(seed)
    tokens = sorted(g.terminals)
    out = []
    for n in sizes:
        w = random_query(tokens, n, rng)
        best = math.inf
        verdict = False
        for _ in range(repeats):
            start = time.perf_counter()
            verdict = machine.accepts(w)
            best = min(best, (time.perf_counter() - start) * 1000.0)
        cyk = None
        if n <= CYK_LIMIT:
            cyk = cyk_member(g, w)
            if cyk != verdict:
                raise BenchError(f"{name}: machine and CYK disagree on {' '.join(w) or 'ε'}")
        out.append(BenchRecord(name, n, best, verdict, cyk))
    return out


def records_to_csv(records: Sequence[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["size", "elapsed_ms", "verdict"])
    for r in records:
        w.writerow([r.size, f"{r.elapsed_ms:.3f}", str(r.verdict).lower()])
    return buf.getvalue()


def loglog_slope(records: Sequence[BenchRecord], floor_ms: float = 1e-3) -> float:
    """Least-squares slope of log(elapsed) against log(size); sizes below 1 are skipped."""
    pts = [(math.log(r.size), math.log(max(r.elapsed_ms, floor_ms))) for r in records if r.size >= 1]
    if len(pts) < 2:
        raise ValueError("need at least two positive sizes")
    mx = sum(x for x, _ in pts) / len(pts)
    my = sum(y for _, y in pts) / len(pts)
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    if sxx == 0:
        raise ValueError("need at least two distinct sizes")
    return sum((x - mx) * (y - my) for x, y in pts) / sxx
