"""Block visit orders: greedy nearest-neighbor SD-TSP, graph baselines,
and an exact enumeration oracle for small chips.

Choosing which qubit to optimize next is a traveling-salesman problem
whose step cost depends on the whole visit history: a qubit's block (and
hence its search and measurement cost) is determined by which incident
couplers earlier blocks already claimed.  Two step costs are supported:

* ``complexity`` -- the log of the block's epoch cost S * base**|B| *
  t**|C|; a route's total is the log-sum-exp of its steps, i.e. exactly
  the log epoch cost of the induced partition.
* ``neighbors`` -- the number of the qubit's graph neighbors not yet
  visited (a didactic cost; totals are plain sums and, in fact, every
  permutation totals |E|).
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .blocks import block_for_center, footprint as block_footprint
from .complexity import CostModel, log_sum_exp
from .topology import ChipTopology, Hypothesis


@dataclass(frozen=True)
class Route:
    """A visit permutation and, when known, its total cost."""

    order: tuple[int, ...]
    total_cost: float | None = None


@dataclass(frozen=True)
class SdCostFunction:
    """History-dependent step cost for the block-ordering problem."""

    mode: str = "complexity"
    model: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.mode not in ("complexity", "neighbors"):
            raise ValueError(f"unknown SD-cost mode: {self.mode!r}")

    def combine(self, step_costs) -> float:
        """Total route cost from per-step costs."""
        costs = list(step_costs)
        if self.mode == "complexity":
            return log_sum_exp(costs)
        return float(sum(costs))


@lru_cache(maxsize=65536)
def _block_and_footprint_size(
    topology: ChipTopology,
    hypothesis: Hypothesis,
    center: int,
    visited_neighbors: frozenset[int],
) -> tuple[int, int]:
    """(|B|, |C|) for a center given which of its neighbors were visited."""
    claimed = {
        (min(center, w), max(center, w)) for w in visited_neighbors
    }
    block = block_for_center(center, claimed, topology)
    fp = block_footprint(block, hypothesis, topology)
    return block.size, fp.size


def _step_cost(
    cf: SdCostFunction,
    topology: ChipTopology,
    hypothesis: Hypothesis,
    center: int,
    visited: frozenset[int],
) -> float:
    nbrs = topology.neighbors(center)
    visited_nbrs = frozenset(w for w in nbrs if w in visited)
    if cf.mode == "neighbors":
        return float(len(nbrs) - len(visited_nbrs))
    b_size, c_size = _block_and_footprint_size(
        topology, hypothesis, center, visited_nbrs
    )
    m = cf.model
    return (
        math.log(m.inner_iterations)
        + b_size * math.log(m.search_base)
        + c_size * math.log(m.t)
    )


def sd_cost(
    next_qubit: int,
    history,
    cf: SdCostFunction,
    topology: ChipTopology,
    hypothesis: Hypothesis,
) -> float:
    """Cost of visiting ``next_qubit`` after the qubits in ``history``."""
    visited = frozenset(history)
    if next_qubit in visited:
        raise ValueError(f"qubit {next_qubit} was already visited")
    return float(_step_cost(cf, topology, hypothesis, next_qubit, visited))


def route_cost(
    route: Route,
    cf: SdCostFunction,
    topology: ChipTopology,
    hypothesis: Hypothesis,
) -> float:
    """Total cost of a complete route, each step seeing its true prefix.

    In complexity mode this equals the log epoch cost of the partition
    the route induces.
    """
    if sorted(route.order) != list(range(topology.n_qubits)):
        raise ValueError("route must visit every qubit exactly once")
    visited: set[int] = set()
    steps = []
    for q in route.order:
        steps.append(_step_cost(cf, topology, hypothesis, q, frozenset(visited)))
        visited.add(q)
    return cf.combine(steps)


def nna_from_seed(
    seed_qubit: int,
    cf: SdCostFunction,
    topology: ChipTopology,
    hypothesis: Hypothesis,
) -> Route:
    """Greedy route from a fixed first qubit; ties go to the lowest index."""
    n = topology.n_qubits
    if not 0 <= seed_qubit < n:
        raise ValueError(f"seed qubit {seed_qubit} out of range")
    visited: set[int] = set()
    order = [seed_qubit]
    steps = [_step_cost(cf, topology, hypothesis, seed_qubit, frozenset())]
    visited.add(seed_qubit)
    remaining = set(range(n)) - visited
    while remaining:
        frozen = frozenset(visited)
        best_q, best_cost = -1, None
        for q in sorted(remaining):
            cost = _step_cost(cf, topology, hypothesis, q, frozen)
            if best_cost is None or cost < best_cost:
                best_q, best_cost = q, cost
        order.append(best_q)
        steps.append(best_cost)
        visited.add(best_q)
        remaining.remove(best_q)
    return Route(order=tuple(order), total_cost=cf.combine(steps))


def multi_start_nna(
    cf: SdCostFunction, topology: ChipTopology, hypothesis: Hypothesis
) -> Route:
    """Best greedy route over all N starting qubits.

    Ties between equal-cost routes resolve to the lexicographically
    smallest permutation, so the result is deterministic.
    """
    best: Route | None = None
    for seed in range(topology.n_qubits):
        r = nna_from_seed(seed, cf, topology, hypothesis)
        if (
            best is None
            or r.total_cost < best.total_cost
            or (r.total_cost == best.total_cost and r.order < best.order)
        ):
            best = r
    return best


def bfs_order(topology: ChipTopology, start: int = 0) -> Route:
    """Breadth-first visit order with ascending-index neighbor expansion."""
    _require_connected(topology, "BFS")
    seen = {start}
    order = []
    queue = deque([start])
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in topology.neighbors(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return Route(order=tuple(order))


def dfs_order(topology: ChipTopology, start: int = 0) -> Route:
    """Depth-first (preorder) visit order, expanding lowest index first."""
    _require_connected(topology, "DFS")
    seen: set[int] = set()
    order: list[int] = []
    stack = [start]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        order.append(v)
        for w in reversed(topology.neighbors(v)):
            if w not in seen:
                stack.append(w)
    return Route(order=tuple(order))


def random_order(topology: ChipTopology, rng: np.random.Generator) -> Route:
    """Uniformly random permutation, deterministic for a given rng state."""
    return Route(order=tuple(int(q) for q in rng.permutation(topology.n_qubits)))


def brute_force_sd_tsp(
    cf: SdCostFunction, topology: ChipTopology, hypothesis: Hypothesis
) -> Route:
    """Exact minimizer by full enumeration; the test oracle for N <= 9."""
    n = topology.n_qubits
    if n > 9:
        raise ValueError("brute-force enumeration is limited to N <= 9")
    best_order: tuple[int, ...] | None = None
    best_cost = None
    for perm in itertools.permutations(range(n)):
        visited: set[int] = set()
        steps = []
        for q in perm:
            steps.append(_step_cost(cf, topology, hypothesis, q, frozenset(visited)))
            visited.add(q)
        cost = cf.combine(steps)
        if best_cost is None or cost < best_cost:
            best_order, best_cost = perm, cost
    return Route(order=best_order, total_cost=float(best_cost))


def order_by_method(
    method: str,
    topology: ChipTopology,
    hypothesis: Hypothesis,
    model: CostModel | None = None,
    rng: np.random.Generator | None = None,
    start: int = 0,
    fixed_order=None,
    cf: SdCostFunction | None = None,
) -> Route:
    """Dispatch table shared by the optimizer, the CLI and the harness."""
    if method in ("nna", "oracle"):
        if cf is None:
            cf = SdCostFunction(mode="complexity", model=model or CostModel())
        solver = multi_start_nna if method == "nna" else brute_force_sd_tsp
        return solver(cf, topology, hypothesis)
    if method == "bfs":
        return bfs_order(topology, start)
    if method == "dfs":
        return dfs_order(topology, start)
    if method == "random":
        if rng is None:
            raise ValueError("random order needs an rng")
        return random_order(topology, rng)
    if method == "fixed":
        if fixed_order is None:
            raise ValueError("fixed order method needs an explicit order")
        return Route(order=tuple(fixed_order))
    raise ValueError(f"unknown order method: {method!r}")


def _require_connected(topology: ChipTopology, what: str) -> None:
    if not topology.is_connected():
        raise ValueError(f"{what} order needs a connected topology")
