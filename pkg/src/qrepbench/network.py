"""Repeater/terminal graphs, path sets, capacities and swap schedules.

Vertex ids are strings.  All routing is deterministic: among equal-cost
paths the one whose vertex-id sequence is lexicographically smallest wins.
Only repeaters may appear inside a path; terminals other than the two
endpoints are removed from the search graph.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    GraphFormatError,
    InstanceTooLarge,
    NoRepeaterPath,
    NotARepeater,
    NotPowerOfTwo,
)

Pair = tuple[str, str]
Path = tuple[str, ...]


class Role(enum.Enum):
    REPEATER = "R"
    TERMINAL = "T"


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    roles: Mapping[str, Role]
    edges: frozenset[frozenset[str]]
    _adj: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        roles = dict(self.roles)
        adj: dict[str, set[str]] = {v: set() for v in roles}
        edges = set()
        for e in self.edges:
            a, b = tuple(e) if len(e) == 2 else (None, None)
            if a is None or a not in roles or b not in roles:
                raise ValueError(f"bad edge {sorted(e)}")
            adj[a].add(b)
            adj[b].add(a)
            edges.add(frozenset((a, b)))
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "_adj", {v: tuple(sorted(n)) for v, n in adj.items()})

    @classmethod
    def build(cls, repeaters: Iterable[str], terminals: Iterable[str], edges: Iterable[tuple[str, str]]):
        roles = {r: Role.REPEATER for r in repeaters}
        roles.update({t: Role.TERMINAL for t in terminals})
        return cls(roles, frozenset(frozenset(e) for e in edges))

    @property
    def vertices(self) -> list[str]:
        return sorted(self.roles)

    @property
    def repeaters(self) -> list[str]:
        return sorted(v for v, r in self.roles.items() if r is Role.REPEATER)

    @property
    def terminals(self) -> list[str]:
        return sorted(v for v, r in self.roles.items() if r is Role.TERMINAL)

    def neighbors(self, v: str) -> tuple[str, ...]:
        return self._adj[v]

    def is_repeater(self, v: str) -> bool:
        return self.roles.get(v) is Role.REPEATER

    def has_edge(self, a: str, b: str) -> bool:
        return b in self._adj.get(a, ())

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(tuple(sorted(e)) for e in self.edges)

    def terminal_pairs(self) -> list[Pair]:
        return list(itertools.combinations(self.terminals, 2))


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    kind: str
    items: tuple

    def __str__(self):
        return f"{self.kind}: {', '.join(map(str, self.items))}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


TERMINALS_ADJACENT = "terminals adjacent"
NO_REPEATER_NEIGHBOR = "no repeater neighbor"
DISCONNECTED = "disconnected"


def _components(G: NetworkGraph) -> list[list[str]]:
    seen, comps = set(), []
    for v in G.vertices:
        if v in seen:
            continue
        comp, queue = [], deque([v])
        seen.add(v)
        while queue:
            u = queue.popleft()
            comp.append(u)
            for w in G.neighbors(u):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def validate_graph(G: NetworkGraph) -> ValidationReport:
    """Check the three structural constraints; violations are returned, not raised."""
    out = []
    bad_edges = [
        (a, b) for a, b in G.sorted_edges() if not G.is_repeater(a) and not G.is_repeater(b)
    ]
    if bad_edges:
        out.append(Violation(TERMINALS_ADJACENT, tuple(bad_edges)))
    lonely = [t for t in G.terminals if not any(G.is_repeater(n) for n in G.neighbors(t))]
    if lonely:
        out.append(Violation(NO_REPEATER_NEIGHBOR, tuple(lonely)))
    comps = _components(G)
    if len(comps) > 1:
        out.append(Violation(DISCONNECTED, tuple(tuple(c) for c in comps)))
    return ValidationReport(tuple(out))


# ------------------------------------------------------------------- routing

VertexCost = Callable[[str], float]


def shortest_path(
    G: NetworkGraph, source: str, target: str, cost: VertexCost | None = None
) -> Path:
    """Cheapest repeater-interior path from ``source`` to ``target``.

    ``cost(v)`` is paid on entering ``v`` (default 1 for every vertex, i.e.
    hop count).  Ties go to the lexicographically smallest vertex sequence.
    """
    if source == target:
        raise ValueError("source and target coincide")
    if cost is None:
        return _bfs_path(G, source, target)
    heap = [(0.0, (source,))]
    settled = set()
    while heap:
        d, path = heapq.heappop(heap)
        v = path[-1]
        if v in settled:
            continue
        settled.add(v)
        if v == target:
            return path
        if v != source and not G.is_repeater(v):
            continue
        for w in G.neighbors(v):
            if w in settled or (w != target and not G.is_repeater(w)):
                continue
            heapq.heappush(heap, (d + cost(w), path + (w,)))
    raise NoRepeaterPath(f"no repeater-interior path between {source} and {target}")


def _bfs_path(G: NetworkGraph, source: str, target: str) -> Path:
    # distances to target over the allowed subgraph, then a greedy walk that
    # always takes the smallest-id neighbour one step closer
    dist = {target: 0}
    queue = deque([target])
    while queue:
        u = queue.popleft()
        if u != target and not G.is_repeater(u):
            continue
        for w in G.neighbors(u):
            if w in dist:
                continue
            if w != source and not G.is_repeater(w):
                continue
            dist[w] = dist[u] + 1
            queue.append(w)
    if source not in dist:
        raise NoRepeaterPath(f"no repeater-interior path between {source} and {target}")
    path = [source]
    v = source
    while v != target:
        v = min(
            w
            for w in G.neighbors(v)
            if dist.get(w) == dist[v] - 1 and (w == target or G.is_repeater(w))
        )
        path.append(v)
    return tuple(path)


@dataclass(frozen=True, eq=False)
class PathSet:
    """One path per (sorted) terminal pair, oriented from the smaller id."""

    graph: NetworkGraph
    paths: Mapping[Pair, Path]

    def __post_init__(self):
        fixed = {}
        for (a, b), p in self.paths.items():
            key = (a, b) if a < b else (b, a)
            p = tuple(p)
            if p[0] != key[0]:
                p = p[::-1]
            fixed[key] = p
        object.__setattr__(self, "paths", dict(sorted(fixed.items())))

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths.values())

    def loads(self) -> Counter:
        """Number of paths through each repeater (interior vertices only)."""
        c = Counter()
        for p in self.paths.values():
            c.update(p[1:-1])
        return c

    def is_complete(self) -> bool:
        return set(self.paths) == set(self.graph.terminal_pairs())

    def check(self) -> None:
        """Raise ``ValueError`` unless every path is a valid repeater-interior walk."""
        G = self.graph
        for (a, b), p in self.paths.items():
            if p[0] != a or p[-1] != b:
                raise ValueError(f"path for {(a, b)} has wrong endpoints: {p}")
            if not all(G.is_repeater(v) for v in p[1:-1]):
                raise ValueError(f"path for {(a, b)} has a non-repeater interior: {p}")
            if not all(G.has_edge(u, v) for u, v in zip(p, p[1:])):
                raise ValueError(f"path for {(a, b)} uses a missing edge: {p}")


def _norm_pairs(G: NetworkGraph, pairs: Iterable[Pair] | None) -> list[Pair]:
    if pairs is None:
        return G.terminal_pairs()
    out = []
    for a, b in pairs:
        for t in (a, b):
            if G.roles.get(t) is not Role.TERMINAL:
                raise ValueError(f"{t!r} is not a terminal")
        out.append((a, b) if a < b else (b, a))
    return sorted(set(out))


def complete_path_set(G: NetworkGraph, pairs: Iterable[Pair] | None = None) -> PathSet:
    """Hop-count shortest path for every terminal pair (or for ``pairs``)."""
    return PathSet(G, {(a, b): shortest_path(G, a, b) for a, b in _norm_pairs(G, pairs)})


def repeater_capacity(P: PathSet, r: str) -> int:
    if not P.graph.is_repeater(r):
        raise NotARepeater(r)
    return sum(1 for p in P.paths.values() if r in p[1:-1])


def induced_capacity(P: PathSet) -> int:
    """Largest number of paths through any single repeater."""
    loads = P.loads()
    return max((loads[r] for r in P.graph.repeaters), default=0)


def _score(P: PathSet) -> tuple[int, int, int]:
    loads = P.loads()
    top = max(loads.values(), default=0)
    at_top = sum(1 for v in loads.values() if v == top)
    length = sum(len(p) - 1 for p in P.paths.values())
    return top, at_top, length


def minimize_induced_capacity(
    G: NetworkGraph,
    effort: int = 20,
    pairs: Iterable[Pair] | None = None,
    seed: int = 0,
    passes: int = 4,
) -> PathSet:
    """Congestion-aware rip-up-and-reroute heuristic for the min-max capacity.

    Each of ``effort`` restarts routes the pairs in a random order with a
    vertex cost that grows steeply with the repeater's current load, then
    runs ``passes`` rounds rerouting one pair at a time against the others'
    loads.  The best result by (capacity, repeaters at capacity, total
    length) is kept; plain shortest-path routing is the starting incumbent,
    so the result is never worse than it.
    """
    pairs = _norm_pairs(G, pairs)
    best = complete_path_set(G, pairs)
    best_score = _score(best)
    if len(pairs) <= 1:
        return best
    # a vertex at load k costs more than any path over loads < k
    log_base = math.log(len(G.vertices) + 1)
    rng = random.Random(seed)

    def cost_for(loads):
        def cost(v):
            if not G.is_repeater(v):
                return 1.0
            return math.exp(min(loads[v] * log_base, 700.0))

        return cost

    for _ in range(max(0, effort)):
        order = pairs[:]
        rng.shuffle(order)
        loads: Counter = Counter()
        paths: dict[Pair, Path] = {}
        for a, b in order:
            p = shortest_path(G, a, b, cost_for(loads))
            paths[(a, b)] = p
            loads.update(p[1:-1])
        for _ in range(passes):
            changed = False
            rng.shuffle(order)
            for key in order:
                old = paths[key]
                loads.subtract(old[1:-1])
                new = shortest_path(G, key[0], key[1], cost_for(loads))
                loads.update(new[1:-1])
                if new != old:
                    paths[key] = new
                    changed = True
            if not changed:
                break
        cand = PathSet(G, paths)
        score = _score(cand)
        if score < best_score:
            best, best_score = cand, score
    return best


def simple_paths(G: NetworkGraph, source: str, target: str, limit: int | None = None) -> list[Path]:
    """All simple repeater-interior paths, shortest first then lexicographic."""
    found: list[Path] = []

    def walk(path, seen):
        v = path[-1]
        for w in G.neighbors(v):
            if w in seen:
                continue
            if w == target:
                found.append(tuple(path) + (w,))
                if limit is not None and len(found) > limit:
                    raise InstanceTooLarge(
                        f"more than {limit} candidate paths between {source} and {target}"
                    )
            elif G.is_repeater(w):
                seen.add(w)
                path.append(w)
                walk(path, seen)
                path.pop()
                seen.discard(w)

    walk([source], {source})
    return sorted(found, key=lambda p: (len(p), p))


def brute_force_min_capacity(
    G: NetworkGraph,
    pairs: Iterable[Pair] | None = None,
    max_paths_per_pair: int = 8,
    max_combinations: int = 200_000,
) -> tuple[PathSet, int]:
    """Exact minimum induced capacity by trying every path combination."""
    pairs = _norm_pairs(G, pairs)
    candidates = []
    for a, b in pairs:
        cands = simple_paths(G, a, b, limit=max_paths_per_pair)
        if not cands:
            raise NoRepeaterPath(f"no repeater-interior path between {a} and {b}")
        candidates.append(cands)
    total = math.prod(len(c) for c in candidates)
    if total > max_combinations:
        raise InstanceTooLarge(f"{total} path combinations exceed {max_combinations}")
    best, best_key = None, None
    for combo in itertools.product(*candidates):
        loads = Counter()
        for p in combo:
            loads.update(p[1:-1])
        cap = max(loads.values(), default=0)
        key = (cap, sum(len(p) for p in combo))
        if best_key is None or key < best_key:
            best, best_key = combo, key
    P = PathSet(G, dict(zip(pairs, best)))
    return P, best_key[0]


# ----------------------------------------------------------------- schedules


class SwapProtocol(enum.Enum):
    SEQUENTIAL = "sequential"
    NESTED = "nested"


@dataclass(frozen=True)
class SwapStep:
    round: int
    intermediate: str
    left: str
    right: str


@dataclass(frozen=True)
class SwapSchedule:
    protocol: SwapProtocol
    path: Path
    steps: tuple[SwapStep, ...]
    rounds: int


def make_schedule(path: Sequence[str], protocol: SwapProtocol) -> SwapSchedule:
    """Entanglement-swapping order along ``path`` (``len(path) - 1`` hops).

    Sequential extends a pair from the source one hop per round.  Nested
    joins adjacent segments pairwise, doubling the bridged length each
    round, and needs a power-of-two hop count.
    """
    path = tuple(path)
    n = len(path) - 1
    if n < 1:
        raise ValueError("a path needs at least one edge")
    steps = []
    if protocol is SwapProtocol.SEQUENTIAL:
        for i in range(1, n):
            steps.append(SwapStep(i, path[i], path[0], path[i + 1]))
        rounds = n - 1
    else:
        if n & (n - 1):
            raise NotPowerOfTwo(f"nested swapping needs a power-of-two length, got {n}")
        rounds = n.bit_length() - 1
        for j in range(1, rounds + 1):
            span = 2**j
            for i in range(0, n, span):
                steps.append(SwapStep(j, path[i + span // 2], path[i], path[i + span]))
    return SwapSchedule(protocol, path, tuple(steps), rounds)


def replay_schedule(schedule: SwapSchedule) -> int:
    """Replay a schedule on link-level pairs; return the peak qubits at any node.

    Starts with one Bell pair per edge, checks that each swap consumes two
    pairs meeting at its intermediate node, and that one end-to-end pair
    remains.
    """
    path = schedule.path
    pairs = {frozenset(e) for e in zip(path, path[1:])}

    def held():
        c = Counter()
        for pr in pairs:
            c.update(pr)
        return max(c.values(), default=0)

    peak = held()
    for rnd in range(1, schedule.rounds + 1):
        for st in (s for s in schedule.steps if s.round == rnd):
            left = frozenset((st.left, st.intermediate))
            right = frozenset((st.intermediate, st.right))
            if left not in pairs or right not in pairs:
                raise ValueError(f"swap at {st.intermediate} is missing an input pair")
            pairs -= {left, right}
            pairs.add(frozenset((st.left, st.right)))
        peak = max(peak, held())
    if pairs != {frozenset((path[0], path[-1]))}:
        raise ValueError("schedule does not end with a single end-to-end pair")
    return peak


# -------------------------------------------------------------------- file io


def format_graph(G: NetworkGraph) -> str:
    lines = [f"vertices {len(G.roles)}"]
    lines += [f"v {v} {G.roles[v].value}" for v in G.vertices]
    lines += [f"e {a} {b}" for a, b in G.sorted_edges()]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> tuple[NetworkGraph, list[Pair] | None]:
    """Parse the adjacency-list format.

    Besides ``vertices``, ``v`` and ``e`` lines, optional ``d <id> <id>``
    lines restrict routing to the listed terminal pairs.  Blank lines and
    ``#`` comments are ignored.  Returns the graph and the demand list
    (``None`` when no ``d`` line is present).
    """
    declared = None
    roles: dict[str, Role] = {}
    edges: list[tuple[str, str]] = []
    demands: list[Pair] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        head = tok[0]
        if head == "vertices":
            if declared is not None or len(tok) != 2 or not tok[1].isdigit():
                raise GraphFormatError("expected 'vertices <n>' once", lineno)
            declared = int(tok[1])
        elif declared is None:
            raise GraphFormatError("first record must be 'vertices <n>'", lineno)
        elif head == "v":
            if len(tok) != 3 or tok[2] not in ("R", "T"):
                raise GraphFormatError("expected 'v <id> <R|T>'", lineno)
            if tok[1] in roles:
                raise GraphFormatError(f"duplicate vertex {tok[1]!r}", lineno)
            roles[tok[1]] = Role(tok[2])
        elif head in ("e", "d"):
            if len(tok) != 3:
                raise GraphFormatError(f"expected '{head} <id> <id>'", lineno)
            a, b = tok[1], tok[2]
            for x in (a, b):
                if x not in roles:
                    raise GraphFormatError(f"unknown vertex {x!r}", lineno)
            if a == b:
                raise GraphFormatError("self loop", lineno)
            if head == "e":
                edges.append((a, b))
            else:
                if roles[a] is not Role.TERMINAL or roles[b] is not Role.TERMINAL:
                    raise GraphFormatError("demands must join two terminals", lineno)
                demands.append((a, b))
        else:
            raise GraphFormatError(f"unknown record {head!r}", lineno)
    if declared is None:
        raise GraphFormatError("empty graph file", 1)
    if declared != len(roles):
        raise GraphFormatError(f"header declares {declared} vertices, found {len(roles)}")
    G = NetworkGraph(roles, frozenset(frozenset(e) for e in edges))
    return G, (demands or None)


def read_graph(path) -> tuple[NetworkGraph, list[Pair] | None]:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def write_graph(G: NetworkGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_graph(G))
