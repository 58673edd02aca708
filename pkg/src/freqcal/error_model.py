"""Synthetic gate-error landscape with local and nonlocal crosstalk.

Each parameter p (a qubit or coupler frequency) contributes a gate-error
term

    e_p(f) = base_p + detune_p * (f_p - sweet_p)**2
             + sum over active pairs (p, q) of
               strength_pq * exp(-(f_p - f_q)**2 / (2 * width**2))

and the global objective is the average gate error G(f) = mean_p e_p(f).
A crosstalk pair penalizes *both* of its endpoints, so its Gaussian term
appears in e_p and in e_q.  The landscape is smooth, lower bounded by
the mean base error, and non-convex (one collision valley per pair).

The reduced objective averages e_p over the parameters inside a block's
crosstalk footprint only; with a purely local model and an exact
hypothesis it is an affine rescaling of the global objective as a
function of the block parameters, which is what makes block-local
optimization globally consistent.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .blocks import Block, Footprint, footprint as block_footprint
from .topology import ChipTopology, Hypothesis, Param, ParamPair


@dataclass(frozen=True)
class Evaluation:
    """One objective measurement: its value and the eval-count increment."""

    value: float
    eval_count_delta: int = 1


@dataclass(frozen=True)
class SamplingRanges:
    """Uniform sampling ranges for the error-model coefficients.

    Every range is a closed [min, max] interval.  ``nonlocal_strength``
    is the mismatch sweep variable: pairs tagged nonlocal get strengths
    from this range, typically [0, nonlocal_max].
    """

    base_error: tuple[float, float] = (0.001, 0.01)
    local_strength: tuple[float, float] = (0.02, 0.08)
    nonlocal_strength: tuple[float, float] = (0.0, 0.0)
    collision_width: tuple[float, float] = (0.06, 0.12)
    feasible_width: tuple[float, float] = (1.0, 1.0)
    detune: tuple[float, float] = (0.03, 0.1)
    nonlocal_density: float = 0.0
    nonlocal_radius: int = 2

    def __post_init__(self):
        names = ("base_error", "local_strength", "nonlocal_strength",
                 "collision_width", "feasible_width", "detune")
        for name in names:
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"{name} range must be finite, got ({lo}, {hi})")
            if lo > hi:
                raise ValueError(f"{name} range is empty: ({lo}, {hi})")
            if lo < 0:
                raise ValueError(f"{name} range must be non-negative")
        for name in ("collision_width", "feasible_width"):
            if getattr(self, name)[0] <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 <= self.nonlocal_density <= 1.0:
            raise ValueError("nonlocal_density must lie in [0, 1]")
        if self.nonlocal_radius < 2:
            raise ValueError("nonlocal_radius must be >= 2")


@dataclass(eq=False)
class ErrorModelParams:
    """Sampled coefficients of the synthetic landscape.

    Arrays are indexed by the owning topology's parameter order
    (qubit parameters first, then couplers).  ``pair_strengths`` maps
    each active crosstalk pair to its coupling strength; local and
    nonlocal pairs live in the same map and differ only in how they
    were sampled.
    """

    param_order: tuple[Param, ...]
    base_error: np.ndarray
    detune: np.ndarray
    sweet_spots: np.ndarray
    collision_width: float
    pair_strengths: dict[ParamPair, float]
    lower: np.ndarray
    upper: np.ndarray
    _pair_i: np.ndarray = field(init=False, repr=False)
    _pair_j: np.ndarray = field(init=False, repr=False)
    _pair_s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.param_order)
        for name in ("base_error", "detune", "sweet_spots", "lower", "upper"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
            setattr(self, name, arr)
        if self.collision_width <= 0:
            raise ValueError("collision_width must be positive")
        index = {p: i for i, p in enumerate(self.param_order)}
        pairs = sorted(self.pair_strengths)
        self._pair_i = np.array([index[p] for p, _ in pairs], dtype=int)
        self._pair_j = np.array([index[q] for _, q in pairs], dtype=int)
        self._pair_s = np.array([self.pair_strengths[pr] for pr in pairs], dtype=float)

    @property
    def n_params(self) -> int:
        return len(self.param_order)

    def pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._pair_i, self._pair_j, self._pair_s

    def per_param_errors(self, values: np.ndarray) -> np.ndarray:
        """Vector of e_p(f) for every parameter."""
        e = self.base_error + self.detune * (values - self.sweet_spots) ** 2
        if len(self._pair_s):
            diff = values[self._pair_i] - values[self._pair_j]
            term = self._pair_s * np.exp(-(diff**2) / (2.0 * self.collision_width**2))
            np.add.at(e, self._pair_i, term)
            np.add.at(e, self._pair_j, term)
        return e

    def to_json_dict(self) -> dict:
        return {
            "param_order": [_param_to_json(p) for p in self.param_order],
            "base_error": self.base_error.tolist(),
            "detune": self.detune.tolist(),
            "sweet_spots": self.sweet_spots.tolist(),
            "collision_width": self.collision_width,
            "pair_strengths": [
                [_param_to_json(p), _param_to_json(q), s]
                for (p, q), s in sorted(self.pair_strengths.items())
            ],
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ErrorModelParams":
        return cls(
            param_order=tuple(_param_from_json(p) for p in d["param_order"]),
            base_error=np.array(d["base_error"]),
            detune=np.array(d["detune"]),
            sweet_spots=np.array(d["sweet_spots"]),
            collision_width=float(d["collision_width"]),
            pair_strengths={
                (_param_from_json(p), _param_from_json(q)): float(s)
                for p, q, s in d["pair_strengths"]
            },
            lower=np.array(d["lower"]),
            upper=np.array(d["upper"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _param_to_json(p: Param):
    kind, key = p
    return [kind, key if kind == "q" else list(key)]


def _param_from_json(p) -> Param:
    kind, key = p
    return (kind, int(key)) if kind == "q" else (kind, (int(key[0]), int(key[1])))


@dataclass
class FrequencyAssignment:
    """One value per parameter, each confined to a closed interval."""

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_qubits: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if not (self.values.shape == self.lower.shape == self.upper.shape):
            raise ValueError("values/lower/upper must share a shape")

    @property
    def qubit_freqs(self) -> np.ndarray:
        return self.values[: self.n_qubits]

    @property
    def coupler_freqs(self) -> np.ndarray:
        return self.values[self.n_qubits:]

    def is_feasible(self) -> bool:
        return bool(
            np.all(self.values >= self.lower) and np.all(self.values <= self.upper)
        )

    def copy(self) -> "FrequencyAssignment":
        return FrequencyAssignment(
            self.values.copy(), self.lower, self.upper, self.n_qubits
        )


def sample_error_model(
    topology: ChipTopology, ranges: SamplingRanges, rng: np.random.Generator
) -> ErrorModelParams:
    """Draw landscape coefficients uniformly from the configured ranges.

    The draw order is fixed (base, detune, widths, sweet spots, then
    pair strengths over the sorted pair list) so a given rng state
    always produces the same model.
    """
    order = topology.all_params()
    n = len(order)
    base = rng.uniform(*ranges.base_error, size=n)
    detune = rng.uniform(*ranges.detune, size=n)
    width = float(rng.uniform(*ranges.collision_width))
    feas_width = rng.uniform(*ranges.feasible_width, size=n)
    lower = np.zeros(n)
    upper = feas_width
    sweet = rng.uniform(lower, upper)
    strengths: dict[ParamPair, float] = {}
    for pair in sorted(topology.local_pairs()):
        strengths[pair] = float(rng.uniform(*ranges.local_strength))
    for pair in sorted(topology.nonlocal_param_pairs()):
        strengths[pair] = float(rng.uniform(*ranges.nonlocal_strength))
    return ErrorModelParams(
        param_order=order,
        base_error=base,
        detune=detune,
        sweet_spots=sweet,
        collision_width=width,
        pair_strengths=strengths,
        lower=lower,
        upper=upper,
    )


def scale_nonlocal_strengths(
    params: ErrorModelParams, topology: ChipTopology, factor: float
) -> ErrorModelParams:
    """New params with every nonlocal pair strength multiplied by ``factor``.

    Lets a mismatch sweep reuse one set of unit-range draws, so sweep
    points share common random numbers.
    """
    nonlocal_set = topology.nonlocal_param_pairs()
    scaled = {
        pair: (s * factor if pair in nonlocal_set else s)
        for pair, s in params.pair_strengths.items()
    }
    return replace(params, pair_strengths=scaled)


def random_assignment(
    params: ErrorModelParams, topology: ChipTopology, rng: np.random.Generator
) -> FrequencyAssignment:
    values = rng.uniform(params.lower, params.upper)
    return FrequencyAssignment(values, params.lower, params.upper, topology.n_qubits)


def sweet_spot_assignment(
    params: ErrorModelParams, topology: ChipTopology
) -> FrequencyAssignment:
    return FrequencyAssignment(
        params.sweet_spots.copy(), params.lower, params.upper, topology.n_qubits
    )


def global_objective(
    f: FrequencyAssignment, params: ErrorModelParams, topology: ChipTopology
) -> Evaluation:
    """Average gate error over every parameter of the chip."""
    if len(f.values) != params.n_params or params.n_params != topology.n_params:
        raise ValueError("assignment, params and topology disagree on size")
    if not f.is_feasible():
        raise ValueError("assignment lies outside its feasible box")
    e = params.per_param_errors(f.values)
    return Evaluation(value=float(e.mean()))


def reduced_objective(
    block: Block,
    footprint: Footprint,
    f: FrequencyAssignment,
    params: ErrorModelParams,
    topology: ChipTopology,
) -> Evaluation:
    """Average gate error over the footprint's parameters only.

    Every e_p keeps its full set of active pair terms (a reduced
    experiment still measures real physics, including interactions with
    parameters outside the footprint); the footprint controls which
    gates are measured, not which couplings exist.
    """
    if not footprint.params:
        raise ValueError("footprint has no parameters")
    if not f.is_feasible():
        raise ValueError("assignment lies outside its feasible box")
    index = {p: i for i, p in enumerate(params.param_order)}
    idx = sorted(index[p] for p in footprint.params)
    e = params.per_param_errors(f.values)
    return Evaluation(value=float(e[idx].mean()))


def apply_relative_noise(
    values: np.ndarray, rsd: float, rng: np.random.Generator
) -> np.ndarray:
    """Multiplicative noise value * (1 + rsd * xi), clipped at zero."""
    if rsd < 0:
        raise ValueError("rsd must be non-negative")
    if rsd == 0:
        return values
    xi = rng.standard_normal(np.shape(values))
    return np.maximum(0.0, values * (1.0 + rsd * xi))


def noisy_eval(
    clean: Evaluation, rsd: float, rng: np.random.Generator
) -> Evaluation:
    """Corrupt a measurement with relative Gaussian noise."""
    if rsd == 0:
        return clean
    value = float(apply_relative_noise(np.asarray(clean.value), rsd, rng))
    return Evaluation(value=value, eval_count_delta=clean.eval_count_delta)


def objective_gradient(
    f: FrequencyAssignment, params: ErrorModelParams, topology: ChipTopology
) -> np.ndarray:
    """Analytic gradient of the global objective with respect to f."""
    n = params.n_params
    grad = 2.0 * params.detune * (f.values - params.sweet_spots)
    pi, pj, ps = params.pair_arrays()
    if len(ps):
        diff = f.values[pi] - f.values[pj]
        w2 = params.collision_width**2
        # each pair term appears in e_i and e_j, hence the factor 2
        dterm = 2.0 * ps * np.exp(-(diff**2) / (2.0 * w2)) * (-diff / w2)
        np.add.at(grad, pi, dterm)
        np.add.at(grad, pj, -dterm)
    return grad / n


class BlockObjective:
    """Reduced objective as a fast function of one block's values.

    Precomputes, for a fixed assignment of the non-block parameters,
    the static part of the footprint sum and the index structure of
    every pair term that involves a block parameter.  ``values`` then
    evaluates a whole batch of block-parameter candidates at once.
    Matches ``reduced_objective`` exactly (tested).
    """

    def __init__(
        self,
        block: Block,
        footprint: Footprint,
        f: FrequencyAssignment,
        params: ErrorModelParams,
    ):
        index = {p: i for i, p in enumerate(params.param_order)}
        self.block_idx = np.array([index[p] for p in block.params], dtype=int)
        fp_idx = np.array(sorted(index[p] for p in footprint.params), dtype=int)
        self.n_fp = len(fp_idx)
        fp_set = set(fp_idx.tolist())
        block_pos = {int(i): k for k, i in enumerate(self.block_idx)}
        rest = f.values

        static = float(
            np.sum(
                params.base_error[fp_idx]
                + np.where(
                    np.isin(fp_idx, self.block_idx),
                    0.0,
                    params.detune[fp_idx] * (rest[fp_idx] - params.sweet_spots[fp_idx]) ** 2,
                )
            )
        )
        self.quad_detune = params.detune[self.block_idx]
        self.quad_sweet = params.sweet_spots[self.block_idx]

        single_k, single_val, single_w = [], [], []
        intra_k, intra_l, intra_w = [], [], []
        pi, pj, ps = params.pair_arrays()
        for i, j, s in zip(pi.tolist(), pj.tolist(), ps.tolist()):
            weight = float((i in fp_set) + (j in fp_set))
            if weight == 0.0:
                continue
            bi, bj = i in block_pos, j in block_pos
            if bi and bj:
                intra_k.append(block_pos[i])
                intra_l.append(block_pos[j])
                intra_w.append(weight * s)
            elif bi or bj:
                k = block_pos[i] if bi else block_pos[j]
                other = j if bi else i
                single_k.append(k)
                single_val.append(rest[other])
                single_w.append(weight * s)
            else:
                d = rest[i] - rest[j]
                static += weight * s * math.exp(
                    -(d**2) / (2.0 * params.collision_width**2)
                )
        self.static = static
        self.single_k = np.array(single_k, dtype=int)
        self.single_val = np.array(single_val, dtype=float)
        self.single_w = np.array(single_w, dtype=float)
        self.intra_k = np.array(intra_k, dtype=int)
        self.intra_l = np.array(intra_l, dtype=int)
        self.intra_w = np.array(intra_w, dtype=float)
        self.inv_two_w2 = 1.0 / (2.0 * params.collision_width**2)

    def values(self, candidates: np.ndarray) -> np.ndarray:
        """Reduced objective for each row of block-parameter settings."""
        u = np.atleast_2d(np.asarray(candidates, dtype=float))
        total = np.full(u.shape[0], self.static)
        total += np.sum(self.quad_detune * (u - self.quad_sweet) ** 2, axis=1)
        if len(self.single_w):
            d = u[:, self.single_k] - self.single_val
            total += np.sum(self.single_w * np.exp(-(d**2) * self.inv_two_w2), axis=1)
        if len(self.intra_w):
            d = u[:, self.intra_k] - u[:, self.intra_l]
            total += np.sum(self.intra_w * np.exp(-(d**2) * self.inv_two_w2), axis=1)
        return total / self.n_fp


def check_order_preservation(
    block: Block,
    f: FrequencyAssignment,
    params: ErrorModelParams,
    topology: ChipTopology,
    hypothesis: Hypothesis,
    grid: np.ndarray,
    tol: float = 1e-12,
) -> bool:
    """Whether the reduced objective orders a grid like the global one.

    For every pair of block-parameter settings u, u' in ``grid`` (rows),
    compares sign(G_B(u) - G_B(u')) with sign(G(u|rest) - G(u'|rest)),
    treating differences below ``tol`` as ties.  True means the reduced
    experiment is a faithful surrogate on this grid.
    """
    fp = block_footprint(block, hypothesis, topology)
    index = {p: i for i, p in enumerate(params.param_order)}
    bidx = [index[p] for p in block.params]
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    reduced_vals = np.empty(len(grid))
    global_vals = np.empty(len(grid))
    work = f.copy()
    for m, u in enumerate(grid):
        work.values[bidx] = u
        if not work.is_feasible():
            raise ValueError(f"grid setting {u} is infeasible")
        reduced_vals[m] = reduced_objective(block, fp, work, params, topology).value
        global_vals[m] = global_objective(work, params, topology).value

    def signs(diff):
        return np.where(np.abs(diff) <= tol, 0, np.sign(diff))

    # a disagreement only counts when at least one side is clearly
    # resolved; pairs where both differences sit near the tie threshold
    # are rounding noise, not order violations
    significant = 1e3 * tol
    chunk = 512
    for start in range(0, len(grid), chunk):
        ra = reduced_vals[start:start + chunk, None] - reduced_vals[None, :]
        ga = global_vals[start:start + chunk, None] - global_vals[None, :]
        disagree = signs(ra) != signs(ga)
        resolved = np.maximum(np.abs(ra), np.abs(ga)) > significant
        if np.any(disagree & resolved):
            return False
    return True
