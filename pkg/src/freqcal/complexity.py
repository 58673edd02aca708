"""Evaluation-cost accounting for blocks and epochs, kept in log-space.

Two cost models are tracked.  The empirical model charges a block the
number of objective evaluations the hypergrid search actually performs,
S * 3**|B|.  The search-space model charges the worst-case exhaustive
count k**|B| with k discrete frequency options per parameter.  Either
way, one evaluation of a block's reduced objective costs t**|C| for a
footprint of |C| qubits, and a block's total is

    S * base**|B| * t**|C|        (base = 3 or k)

with a single factor of S.  Linear-domain values overflow quickly
(k**|B| * t**|C| is astronomically large for big blocks), so all sums
are log-sum-exp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .blocks import (
    Block,
    Footprint,
    Partition,
    footprint as block_footprint,
    partition_from_order,
)
from .topology import ChipTopology, Hypothesis, build_grid_topology


def log_sum_exp(values: Iterable[float]) -> float:
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        return float("-inf")
    m = float(vals.max())
    return m + math.log(float(np.exp(vals - m).sum()))


@dataclass(frozen=True)
class CostModel:
    """Per-block search-count model plus the shared evaluation-cost base."""

    kind: str = "search_space"
    k: int = 100
    t: float = 2.0
    inner_iterations: int = 1

    def __post_init__(self):
        if self.kind not in ("empirical", "search_space"):
            raise ValueError(f"unknown cost model kind: {self.kind!r}")
        if self.kind == "search_space" and self.k < 2:
            raise ValueError("search_space model needs k >= 2")
        if self.t <= 1:
            raise ValueError("evaluation cost base t must exceed 1")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be >= 1")

    @property
    def search_base(self) -> float:
        return 3.0 if self.kind == "empirical" else float(self.k)


def block_search_count(block: Block, model: CostModel) -> float:
    """Log of the number of candidate evaluations spent on one block."""
    if model.kind == "empirical":
        return math.log(model.inner_iterations) + block.size * math.log(3.0)
    return block.size * math.log(model.k)


def eval_cost(footprint: Footprint, model: CostModel) -> float:
    """Log cost of measuring one reduced objective on |C| qubits."""
    if footprint.size < 1:
        raise ValueError("footprint must contain at least one qubit")
    return math.log(model.inner_iterations) + footprint.size * math.log(model.t)


def block_log_cost(block: Block, footprint: Footprint, model: CostModel) -> float:
    """Log of S * base**|B| * t**|C|, the block's epoch contribution.

    Composing block_search_count with eval_cost literally would charge
    the empirical model S twice; the epoch formula uses one S factor.
    """
    return (
        math.log(model.inner_iterations)
        + block.size * math.log(model.search_base)
        + footprint.size * math.log(model.t)
    )


@dataclass
class ComplexityLedger:
    """Per-block log costs under both models, with log-sum-exp totals."""

    block_sizes: list[int] = field(default_factory=list)
    footprint_sizes: list[int] = field(default_factory=list)
    log_costs_empirical: list[float] = field(default_factory=list)
    log_costs_search: list[float] = field(default_factory=list)

    def record(self, block: Block, footprint: Footprint,
               empirical: CostModel, search: CostModel) -> None:
        self.block_sizes.append(block.size)
        self.footprint_sizes.append(footprint.size)
        self.log_costs_empirical.append(block_log_cost(block, footprint, empirical))
        self.log_costs_search.append(block_log_cost(block, footprint, search))

    @property
    def total_empirical(self) -> float:
        return log_sum_exp(self.log_costs_empirical)

    @property
    def total_search(self) -> float:
        return log_sum_exp(self.log_costs_search)

    def cumulative_empirical(self) -> list[float]:
        return [log_sum_exp(self.log_costs_empirical[: i + 1])
                for i in range(len(self.log_costs_empirical))]

    def cumulative_search(self) -> list[float]:
        return [log_sum_exp(self.log_costs_search[: i + 1])
                for i in range(len(self.log_costs_search))]


def ledger_for_partition(
    partition: Partition,
    hypothesis: Hypothesis,
    topology: ChipTopology,
    k: int = 100,
    t: float = 2.0,
    inner_iterations: int = 1,
) -> ComplexityLedger:
    empirical = CostModel("empirical", k=k, t=t, inner_iterations=inner_iterations)
    search = CostModel("search_space", k=k, t=t, inner_iterations=inner_iterations)
    ledger = ComplexityLedger()
    for b in partition.blocks:
        fp = block_footprint(b, hypothesis, topology)
        ledger.record(b, fp, empirical, search)
    return ledger


def epoch_cost(
    partition: Partition,
    hypothesis: Hypothesis,
    topology: ChipTopology,
    model: CostModel,
) -> float:
    """Log of the summed per-block costs of one full epoch."""
    return log_sum_exp(
        block_log_cost(b, block_footprint(b, hypothesis, topology), model)
        for b in partition.blocks
    )


@dataclass(frozen=True)
class ScalingRow:
    n_qubits: int
    rows: int
    cols: int
    order_method: str
    log_epoch_cost: float
    log_bound: float
    bound_ok: bool
    cost_per_qubit: float
    cost_per_qubit_bound: float
    local_hypothesis: bool


def scaling_report(
    sizes: Sequence[tuple[int, int]],
    order_method: str,
    model: CostModel,
    rng: np.random.Generator | None = None,
    topologies: Sequence[ChipTopology] | None = None,
) -> list[ScalingRow]:
    """Epoch cost per grid size, with the M * S_max * T_max bound check.

    The bound uses S_max = S * base**max|B| and T_max = t**max|C|, both
    order-independent constants on bounded-degree graphs with a local
    hypothesis.  If a supplied topology carries nonlocal pairs the row
    is flagged, since |C| then stops being size-independent and the
    linear-in-N argument no longer applies.  Linear-domain columns fall
    back to inf when the log cost would overflow a float.
    """
    from .ordering import order_by_method  # deferred: ordering imports this module

    rows_out = []
    for i, (r, c) in enumerate(sizes):
        topo = topologies[i] if topologies is not None else build_grid_topology(r, c)
        local = not topo.nonlocal_pairs
        hypothesis = topo.true_pairs()
        route = order_by_method(order_method, topo, hypothesis, model, rng=rng)
        partition = partition_from_order(route.order, topo)
        fps = [block_footprint(b, hypothesis, topo) for b in partition.blocks]
        log_cost = log_sum_exp(
            block_log_cost(b, fp, model) for b, fp in zip(partition.blocks, fps)
        )
        b_max = max(b.size for b in partition.blocks)
        c_max = max(fp.size for fp in fps)
        log_smax = math.log(model.inner_iterations) + b_max * math.log(model.search_base)
        log_tmax = c_max * math.log(model.t)
        log_bound = math.log(topo.n_qubits) + log_smax + log_tmax
        rows_out.append(
            ScalingRow(
                n_qubits=topo.n_qubits,
                rows=r,
                cols=c,
                order_method=order_method,
                log_epoch_cost=log_cost,
                log_bound=log_bound,
                bound_ok=log_cost <= log_bound + 1e-12,
                cost_per_qubit=_safe_exp(log_cost - math.log(topo.n_qubits)),
                cost_per_qubit_bound=_safe_exp(log_smax + log_tmax),
                local_hypothesis=local,
            )
        )
    return rows_out


def _safe_exp(log_value: float) -> float:
    if log_value > 700.0:
        return float("inf")
    return math.exp(log_value)
