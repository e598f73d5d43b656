"""Monte Carlo congestion experiment on a k-by-k repeater grid.

Top terminal ``u`` activates with probability ``p_activation`` and picks a
bottom terminal ``b(u)`` uniformly at random.  Every active pair is routed
independently on hop count (lexicographic tie-break), and the most
congested repeater is sized with the analytic resource formulas.

Randomness comes from numpy's counter-based Philox generator; run ``i`` of
a scenario with seed ``s`` draws from ``Philox(s ^ i)``, so any run can be
reproduced on its own.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import analytic
from .analytic import Scheme
from .errors import EmptyInput
from .network import NetworkGraph, shortest_path

RNG_NAME = "philox"
CSV_COLUMNS = ("k", "run", "seed", "active", "reversals", "congestion", "ell", "qubits", "ops")
SUMMARY_METRICS = ("congestion", "qubits_at_max", "operations_at_max", "reversal_count")


def _width(k: int) -> int:
    return max(2, len(str(k)))


def repeater_id(k: int, row: int, col: int) -> str:
    """Repeater at 1-based ``(row, col)``."""
    w = _width(k)
    return f"r{row:0{w}d}_{col:0{w}d}"


def top_id(k: int, i: int) -> str:
    return f"top{i:0{_width(k)}d}"


def bottom_id(k: int, i: int) -> str:
    return f"bot{i:0{_width(k)}d}"


def build_grid(k: int) -> NetworkGraph:
    """``k * k`` repeaters with 4-neighbour links plus ``k`` terminals above and below.

    Top terminal ``i`` hangs off repeater ``(1, i)`` and bottom terminal ``i``
    off ``(k, i)``; indices are 1-based.
    """
    if k < 2:
        raise ValueError(f"grid side must be >= 2, got {k}")
    reps = [repeater_id(k, r, c) for r in range(1, k + 1) for c in range(1, k + 1)]
    tops = [top_id(k, i) for i in range(1, k + 1)]
    bots = [bottom_id(k, i) for i in range(1, k + 1)]
    edges = []
    for r in range(1, k + 1):
        for c in range(1, k + 1):
            if c < k:
                edges.append((repeater_id(k, r, c), repeater_id(k, r, c + 1)))
            if r < k:
                edges.append((repeater_id(k, r, c), repeater_id(k, r + 1, c)))
    for i in range(1, k + 1):
        edges.append((tops[i - 1], repeater_id(k, 1, i)))
        edges.append((bots[i - 1], repeater_id(k, k, i)))
    return NetworkGraph.build(reps, tops + bots, edges)


@dataclass(frozen=True)
class GridScenario:
    k: int
    p_activation: float = 0.5
    runs: int = 50
    seed: int = 0
    scheme: Scheme = analytic.PURIFICATION
    F0: float = 0.51
    target: float = 0.99

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if not 0.0 <= self.p_activation <= 1.0:
            raise ValueError(f"p_activation must lie in [0, 1], got {self.p_activation}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class GridRunReport:
    """One run.  Terminal indices are 0-based; ``paths`` follow ``active_terminals``."""

    k: int
    run: int
    seed: int
    active_terminals: tuple[int, ...]
    destinations: dict[int, int]
    paths: tuple[tuple[str, ...], ...]
    reversal_count: int
    crossing_count: int
    congestion: int
    congested_repeater: str | None
    path_length_at_max: int
    qubits_at_max: int
    operations_at_max: int

    def csv_row(self) -> tuple:
        return (
            self.k,
            self.run,
            self.seed,
            len(self.active_terminals),
            self.reversal_count,
            self.congestion,
            self.path_length_at_max,
            self.qubits_at_max,
            self.operations_at_max,
        )


def run_seed(seed: int, run: int) -> int:
    return seed ^ run


def run_rng(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(run_seed(seed, run)))


def draw_run(k: int, p_activation: float, seed: int, run: int) -> tuple[list[int], dict[int, int]]:
    """Active top terminals and their destinations for one run.

    Activation and destination are drawn for every terminal, so the stream
    layout does not depend on how many terminals end up active.
    """
    rng = run_rng(seed, run)
    active = rng.random(k) < p_activation
    dest = rng.integers(0, k, size=k)
    act = [int(u) for u in np.flatnonzero(active)]
    return act, {u: int(dest[u]) for u in act}


def count_reversals(active: Sequence[int], dest: dict[int, int]) -> int:
    """Pairs ``u < v`` of active terminals with ``b(u) >= b(v)``."""
    return sum(1 for u, v in itertools.combinations(sorted(active), 2) if dest[u] >= dest[v])


class GridRouter:
    """Caches the k*k deterministic routes of one grid."""

    def __init__(self, k: int):
        self.k = k
        self.graph = build_grid(k)
        self._paths: dict[tuple[int, int], tuple[str, ...]] = {}
        self._masks: dict[tuple[int, int], int] = {}
        self._index = {r: i for i, r in enumerate(self.graph.repeaters)}

    def path(self, u: int, b: int) -> tuple[str, ...]:
        key = (u, b)
        p = self._paths.get(key)
        if p is None:
            p = shortest_path(self.graph, top_id(self.k, u + 1), bottom_id(self.k, b + 1))
            self._paths[key] = p
            mask = 0
            for r in p[1:-1]:
                mask |= 1 << self._index[r]
            self._masks[key] = mask
        return p

    def mask(self, u: int, b: int) -> int:
        self.path(u, b)
        return self._masks[(u, b)]


_ROUTERS: dict[int, GridRouter] = {}


def router(k: int) -> GridRouter:
    if k not in _ROUTERS:
        _ROUTERS[k] = GridRouter(k)
    return _ROUTERS[k]


def count_crossings(masks: Sequence[int]) -> int:
    """Path pairs sharing one or more repeaters (paths given as repeater bitmasks)."""
    return sum(1 for a, b in itertools.combinations(masks, 2) if a & b)


def _simulate(
    k: int, run: int, seed: int, active: list[int], dest: dict[int, int], scheme: Scheme, n: int | None
) -> GridRunReport:
    rt = router(k)
    paths = tuple(rt.path(u, dest[u]) for u in active)
    masks = [rt.mask(u, dest[u]) for u in active]
    loads: dict[str, int] = {}
    longest: dict[str, int] = {}
    for p in paths:
        ell = len(p) - 1
        for r in p[1:-1]:
            loads[r] = loads.get(r, 0) + 1
            if ell > longest.get(r, 0):
                longest[r] = ell
    if loads:
        congestion = max(loads.values())
        hot = min(r for r, c in loads.items() if c == congestion)
        ell = longest[hot]
        qubits = congestion * analytic.memory_required(scheme, n, ell)
        ops = congestion * analytic.operations_required(scheme, n, ell)
    else:
        congestion, hot, ell, qubits, ops = 0, None, 0, 0, 0
    return GridRunReport(
        k=k,
        run=run,
        seed=run_seed(seed, run),
        active_terminals=tuple(active),
        destinations=dict(dest),
        paths=paths,
        reversal_count=count_reversals(active, dest),
        crossing_count=count_crossings(masks),
        congestion=congestion,
        congested_repeater=hot,
        path_length_at_max=ell,
        qubits_at_max=qubits,
        operations_at_max=ops,
    )


def scenario_iterations(s: GridScenario) -> int:
    return max(1, analytic.iterations_to_target(s.scheme, s.F0, s.target))


def run_scenario(s: GridScenario) -> list[GridRunReport]:
    """All runs of a scenario, in run order."""
    n = scenario_iterations(s)
    reports = []
    for run in range(s.runs):
        active, dest = draw_run(s.k, s.p_activation, s.seed, run)
        reports.append(_simulate(s.k, run, s.seed, active, dest, s.scheme, n))
    return reports


def run_forced(k: int, dest: dict[int, int], scheme: Scheme = analytic.PURIFICATION,
               F0: float = 0.51, target: float = 0.99) -> GridRunReport:
    """Single run with a hand-picked activation ``{u: b(u)}`` (0-based)."""
    n = max(1, analytic.iterations_to_target(scheme, F0, target))
    return _simulate(k, 0, 0, sorted(dest), dict(dest), scheme, n)


def reversal_probability_exact(k: int) -> Fraction:
    """Exact ``P[b(u) >= b(v)]`` for independent uniform destinations, by counting."""
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for i in range(k) for j in range(k) if i >= j)
    return Fraction(hits, k * k)


def expected_crossings_bound(k: int, p: float) -> float:
    """The closed-form crossing bound ``(p k)**2 (1/2 + 1/(2k))``."""
    if k < 1 or not 0.0 <= p <= 1.0:
        raise ValueError("need k >= 1 and 0 <= p <= 1")
    return (p * k) ** 2 * (0.5 + 1.0 / (2 * k))


def expected_reversals_pairwise(k: int, p: float) -> float:
    """``C(k, 2) p**2 (1/2 + 1/(2k))``: expected reversed pairs summed over pairs."""
    return math.comb(k, 2) * p * p * (0.5 + 1.0 / (2 * k))


@dataclass(frozen=True)
class Stats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def _stats(values: Iterable) -> Stats:
    # float conversion loses precision on astronomically large qubit counts;
    # summaries are descriptive only
    arr = np.array([float(v) for v in values])
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return Stats(float(arr.min()), float(q1), float(med), float(q3), float(arr.max()), float(arr.mean()))


def summarize(reports: Sequence[GridRunReport]) -> dict[str, Stats]:
    if not reports:
        raise EmptyInput("no reports to summarise")
    return {m: _stats(getattr(r, m) for r in reports) for m in SUMMARY_METRICS}


def summary_record(s: GridScenario, reports: Sequence[GridRunReport]) -> dict:
    """JSON-ready summary of one (k, scheme) scenario."""
    stats = summarize(reports)
    return {
        "k": s.k,
        "scheme": s.scheme.name,
        "runs": len(reports),
        "seed": s.seed,
        "rng": RNG_NAME,
        "p_activation": s.p_activation,
        "F0": s.F0,
        "target": s.target,
        "iterations": scenario_iterations(s),
        "metrics": {m: asdict(st) for m, st in stats.items()},
        "mean_active": float(np.mean([len(r.active_terminals) for r in reports])),
        "mean_reversals": float(np.mean([r.reversal_count for r in reports])),
        "mean_crossings": float(np.mean([r.crossing_count for r in reports])),
        "crossing_bound": expected_crossings_bound(s.k, s.p_activation),
        "pairwise_expected_reversals": expected_reversals_pairwise(s.k, s.p_activation),
    }


def reports_to_csv(reports: Iterable[GridRunReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()
