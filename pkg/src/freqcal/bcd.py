"""Block coordinate descent with a derivative-free hypergrid subsolver.

One run visits the blocks of a partition in a fixed order.  Each block
is optimized by an iterative local search: for a radius r that shrinks
with the epoch number (r_n = r1 / n), every sub-iteration evaluates the
block's reduced objective at the up-to-3**|B| points current + d * r
with direction components in {-1, 0, 1}, drops candidates outside the
feasible box, and moves to the noisy argmin.  Because the zero direction
is always a candidate, noiseless runs can never increase the reduced
objective, and with an exact local crosstalk hypothesis the recorded
global objective is non-increasing step by step.  Under noise the argmin
of the noisy values is accepted as-is; occasional uphill moves act like
annealing and are not rejected.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .blocks import Footprint, Partition, footprint as block_footprint, partition_from_order
from .complexity import CostModel, block_log_cost
from .error_model import (
    BlockObjective,
    ErrorModelParams,
    FrequencyAssignment,
    apply_relative_noise,
    global_objective,
)
from .ordering import order_by_method
from .topology import ChipTopology, Hypothesis


@lru_cache(maxsize=32)
def _direction_set_cached(n: int) -> np.ndarray:
    dirs = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))
    zero = np.flatnonzero((dirs == 0).all(axis=1))
    rest = np.flatnonzero(~(dirs == 0).all(axis=1))
    out = dirs[np.concatenate([zero, rest])]
    out.setflags(write=False)
    return out


def direction_set(n: int) -> np.ndarray:
    """All 3**n direction vectors with components in {-1, 0, 1}.

    The zero vector comes first so that argmin ties keep the current
    point instead of drifting.  The returned array is shared and
    read-only.
    """
    return _direction_set_cached(n)


@dataclass
class BcdConfig:
    """Knobs of one optimizer run."""

    max_epochs: int = 20
    inner_iterations: int = 5
    initial_radius: float | None = None
    rsd: float = 0.0
    order_method: str = "nna"
    fixed_order: tuple[int, ...] | None = None
    tol: float = 1e-6
    hypothesis: Hypothesis | None = None
    cost_k: int = 100
    cost_t: float = 2.0
    radius_schedule: Callable[[int], float] | None = None

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be >= 1")
        if self.rsd < 0:
            raise ValueError("rsd must be non-negative")
        if self.order_method not in ("nna", "bfs", "dfs", "random", "fixed", "oracle"):
            raise ValueError(f"unknown order method: {self.order_method!r}")
        if self.order_method == "fixed" and self.fixed_order is None:
            raise ValueError("fixed order method needs fixed_order")
        if self.initial_radius is not None and self.initial_radius <= 0:
            raise ValueError("initial_radius must be positive")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    step: int
    block_center: int
    g_noiseless: float
    g_noisy_local: float
    evals_cum: int
    logcost_empirical_cum: float
    logcost_search_cum: float


@dataclass
class BcdTrace:
    rows: list[TraceRow]
    order: tuple[int, ...]
    g_initial: float
    g_final: float
    total_evals: int
    logcost_empirical: float
    logcost_search: float
    epochs_run: int
    final_values: np.ndarray | None = None

    def g_noiseless_series(self) -> np.ndarray:
        return np.array([r.g_noiseless for r in self.rows])

    def epoch_end_values(self) -> list[float]:
        by_epoch: dict[int, float] = {}
        for r in self.rows:
            by_epoch[r.epoch] = r.g_noiseless
        return [by_epoch[e] for e in sorted(by_epoch)]


def hypergrid_step(
    values: np.ndarray,
    objective: Callable[[np.ndarray], np.ndarray],
    radius: float,
    lower: np.ndarray,
    upper: np.ndarray,
    rsd: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, int, float]:
    """One sub-iteration: evaluate the feasible hypergrid, take the argmin.

    Returns (new values, evaluations consumed, accepted noisy value).
    Every candidate gets a single noisy draw; the argmin is over those
    draws, so the chosen point is well defined within the sub-iteration.
    """
    dirs = direction_set(len(values))
    candidates = values + dirs * radius
    mask = ((candidates >= lower) & (candidates <= upper)).all(axis=1)
    candidates = candidates[mask]
    vals = objective(candidates)
    if rsd > 0:
        if rng is None:
            raise ValueError("noisy search needs an rng")
        vals = apply_relative_noise(vals, rsd, rng)
    best = int(np.argmin(vals))
    return candidates[best].copy(), len(candidates), float(vals[best])


def local_search_block(
    block_values: np.ndarray,
    objective: Callable[[np.ndarray], np.ndarray],
    radius: float,
    inner_iterations: int,
    lower: np.ndarray,
    upper: np.ndarray,
    rsd: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, int, float]:
    """Fixed-radius hypergrid descent for one block.

    Runs ``inner_iterations`` sub-iterations at the given radius and
    returns (final block values, total evaluations, last accepted noisy
    value).  ``objective`` maps an (m, |B|) candidate batch to m values.
    """
    current = np.asarray(block_values, dtype=float).copy()
    evals = 0
    last = float("nan")
    for _ in range(inner_iterations):
        current, used, last = hypergrid_step(
            current, objective, radius, lower, upper, rsd=rsd, rng=rng
        )
        evals += used
    return current, evals, last


def inexactness_check(
    objective: Callable[[np.ndarray], np.ndarray],
    minimizer: np.ndarray,
    start: np.ndarray,
    inner_iterations: int,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
) -> float:
    """Sup-norm gap to a known minimizer after S diminishing-radius steps.

    Runs sub-iterations t = 1..S with radius 1/t, so the final grid
    spacing is 1/S; on well-behaved convex objectives the returned
    distance stays below 1/S.  A probe for the subsolver's inexactness,
    not a runtime guarantee.
    """
    start = np.atleast_1d(np.asarray(start, dtype=float))
    minimizer = np.atleast_1d(np.asarray(minimizer, dtype=float))
    n = len(start)
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    current = start.copy()
    for t in range(1, inner_iterations + 1):
        current, _, _ = hypergrid_step(current, objective, 1.0 / t, lo, hi)
    return float(np.max(np.abs(current - minimizer)))


@dataclass
class _EpochStep:
    block_center: int
    g_noiseless: float
    g_noisy_local: float
    evals: int


def run_epoch(
    partition: Partition,
    footprints: Sequence[Footprint],
    f: FrequencyAssignment,
    params: ErrorModelParams,
    topology: ChipTopology,
    radius: float,
    inner_iterations: int = 1,
    rsd: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[_EpochStep]:
    """Optimize every block once, updating ``f`` in place.

    Returns one record per block with the noiseless global objective
    after the update, the accepted noisy local value, and the number of
    reduced-objective evaluations spent.
    """
    steps = []
    for block, fp in zip(partition.blocks, footprints):
        objective = BlockObjective(block, fp, f, params)
        bidx = objective.block_idx
        new_vals, evals, last = local_search_block(
            f.values[bidx],
            objective.values,
            radius,
            inner_iterations,
            f.lower[bidx],
            f.upper[bidx],
            rsd=rsd,
            rng=rng,
        )
        f.values[bidx] = new_vals
        g = global_objective(f, params, topology).value
        steps.append(_EpochStep(block.center, g, last, evals))
    return steps


def run(
    config: BcdConfig,
    topology: ChipTopology,
    params: ErrorModelParams,
    f0: FrequencyAssignment,
    rng: np.random.Generator | None = None,
) -> BcdTrace:
    """Full optimizer run: order, partition, epoch loop, trace.

    Stops when the noiseless global objective changes by less than
    ``config.tol`` over a full epoch, or after ``max_epochs``.
    """
    if not f0.is_feasible():
        raise ValueError("starting assignment is infeasible")
    if rng is None:
        rng = np.random.default_rng(0)
    hypothesis = (
        config.hypothesis if config.hypothesis is not None else topology.true_pairs()
    )
    model = CostModel(
        "search_space",
        k=config.cost_k,
        t=config.cost_t,
        inner_iterations=config.inner_iterations,
    )
    route = order_by_method(
        config.order_method,
        topology,
        hypothesis,
        model=model,
        rng=rng,
        fixed_order=config.fixed_order,
    )
    partition = partition_from_order(route.order, topology)
    footprints = [block_footprint(b, hypothesis, topology) for b in partition.blocks]
    empirical = CostModel(
        "empirical", k=config.cost_k, t=config.cost_t,
        inner_iterations=config.inner_iterations,
    )
    step_logcosts_emp = [
        block_log_cost(b, fp, empirical)
        for b, fp in zip(partition.blocks, footprints)
    ]
    step_logcosts_search = [
        block_log_cost(b, fp, model)
        for b, fp in zip(partition.blocks, footprints)
    ]

    f = f0.copy()
    g_initial = global_objective(f, params, topology).value
    r1 = config.initial_radius
    if r1 is None:
        r1 = 0.1 * float(np.mean(f.upper - f.lower))
    schedule = config.radius_schedule or (lambda n: r1 / n)

    rows: list[TraceRow] = []
    evals_cum = 0
    cum_emp = -np.inf
    cum_search = -np.inf
    g_prev_epoch = g_initial
    epochs_run = 0
    for epoch in range(1, config.max_epochs + 1):
        radius = schedule(epoch)
        steps = run_epoch(
            partition, footprints, f, params, topology, radius,
            inner_iterations=config.inner_iterations, rsd=config.rsd, rng=rng,
        )
        for k, s in enumerate(steps):
            evals_cum += s.evals
            cum_emp = float(np.logaddexp(cum_emp, step_logcosts_emp[k]))
            cum_search = float(np.logaddexp(cum_search, step_logcosts_search[k]))
            rows.append(
                TraceRow(
                    epoch=epoch,
                    step=k + 1,
                    block_center=s.block_center,
                    g_noiseless=s.g_noiseless,
                    g_noisy_local=s.g_noisy_local,
                    evals_cum=evals_cum,
                    logcost_empirical_cum=cum_emp,
                    logcost_search_cum=cum_search,
                )
            )
        epochs_run = epoch
        g_epoch = rows[-1].g_noiseless
        # |change| rather than signed improvement: a noisy epoch that went
        # uphill has not converged and must not trigger the stop
        if abs(g_prev_epoch - g_epoch) < config.tol:
            break
        g_prev_epoch = g_epoch

    return BcdTrace(
        rows=rows,
        order=route.order,
        g_initial=g_initial,
        g_final=rows[-1].g_noiseless,
        total_evals=evals_cum,
        logcost_empirical=cum_emp,
        logcost_search=cum_search,
        epochs_run=epochs_run,
        final_values=f.values.copy(),
    )
