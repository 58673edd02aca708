import math

import numpy as np
import pytest

from freqcal.blocks import Block, Footprint, block_for_center, footprint, partition_from_order
from freqcal.error_model import (
    BlockObjective,
    ErrorModelParams,
    Evaluation,
    FrequencyAssignment,
    SamplingRanges,
    check_order_preservation,
    global_objective,
    noisy_eval,
    objective_gradient,
    random_assignment,
    reduced_objective,
    sample_error_model,
    scale_nonlocal_strengths,
    sweet_spot_assignment,
)
from freqcal.topology import (
    add_nonlocal_pairs,
    build_graph_topology,
    build_grid_topology,
    make_pair,
    qubit_param,
)


def reference_global(values, params):
    """Straight-loop transcription of the landscape formula."""
    n = len(params.param_order)
    idx = {p: i for i, p in enumerate(params.param_order)}
    e = [
        params.base_error[i]
        + params.detune[i] * (values[i] - params.sweet_spots[i]) ** 2
        for i in range(n)
    ]
    for (p, q), s in params.pair_strengths.items():
        i, j = idx[p], idx[q]
        g = math.exp(
            -((values[i] - values[j]) ** 2) / (2 * params.collision_width**2)
        )
        e[i] += s * g
        e[j] += s * g
    return sum(e) / n


def flat_params(topology, base=0.005, detune=0.0, width=0.05, strengths=None):
    n = topology.n_params
    return ErrorModelParams(
        param_order=topology.all_params(),
        base_error=np.full(n, base),
        detune=np.full(n, detune),
        sweet_spots=np.full(n, 0.5),
        collision_width=width,
        pair_strengths=strengths if strengths is not None else {},
        lower=np.zeros(n),
        upper=np.ones(n),
    )


def assignment(params, topology, values):
    return FrequencyAssignment(
        np.asarray(values, dtype=float), params.lower, params.upper,
        topology.n_qubits,
    )


# -- sampling ---------------------------------------------------------


def test_sampling_deterministic():
    t = build_grid_topology(3, 3)
    r = SamplingRanges()
    a = sample_error_model(t, r, np.random.default_rng(9))
    b = sample_error_model(t, r, np.random.default_rng(9))
    assert np.array_equal(a.base_error, b.base_error)
    assert a.pair_strengths == b.pair_strengths
    assert a.collision_width == b.collision_width


def test_sampling_zero_nonlocal_range():
    t = add_nonlocal_pairs(
        build_grid_topology(3, 3), 2, np.random.default_rng(2), density=0.5
    )
    params = sample_error_model(
        t, SamplingRanges(nonlocal_strength=(0.0, 0.0)), np.random.default_rng(0)
    )
    for pair in t.nonlocal_param_pairs():
        assert params.pair_strengths[pair] == 0.0


def test_sampling_point_mass_ranges():
    t = build_grid_topology(2, 2)
    r = SamplingRanges(
        base_error=(0.004, 0.004),
        local_strength=(0.03, 0.03),
        collision_width=(0.05, 0.05),
        detune=(0.08, 0.08),
    )
    params = sample_error_model(t, r, np.random.default_rng(1))
    assert np.all(params.base_error == 0.004)
    assert np.all(params.detune == 0.08)
    assert params.collision_width == 0.05
    assert all(s == 0.03 for s in params.pair_strengths.values())


def test_sampling_bounds_and_sweet_spots():
    t = build_grid_topology(3, 3)
    params = sample_error_model(t, SamplingRanges(), np.random.default_rng(4))
    assert np.all(params.lower == 0)
    assert np.all(params.upper == 1.0)
    assert np.all(params.sweet_spots >= params.lower)
    assert np.all(params.sweet_spots <= params.upper)


def test_bad_ranges_rejected():
    with pytest.raises(ValueError):
        SamplingRanges(base_error=(0.01, 0.001))
    with pytest.raises(ValueError):
        SamplingRanges(collision_width=(0.0, 0.1))
    with pytest.raises(ValueError):
        SamplingRanges(local_strength=(-0.1, 0.1))
    with pytest.raises(ValueError):
        SamplingRanges(base_error=(0.001, float("inf")))
    with pytest.raises(ValueError):
        SamplingRanges(nonlocal_density=1.5)


def test_scale_nonlocal_strengths():
    t = add_nonlocal_pairs(
        build_grid_topology(3, 3), 2, np.random.default_rng(3), density=0.5
    )
    params = sample_error_model(
        t, SamplingRanges(nonlocal_strength=(0.0, 1.0)), np.random.default_rng(0)
    )
    scaled = scale_nonlocal_strengths(params, t, 0.25)
    for pair in t.nonlocal_param_pairs():
        assert scaled.pair_strengths[pair] == 0.25 * params.pair_strengths[pair]
    for pair in t.local_pairs():
        assert scaled.pair_strengths[pair] == params.pair_strengths[pair]


def test_params_json_round_trip():
    t = build_grid_topology(2, 2)
    params = sample_error_model(t, SamplingRanges(), np.random.default_rng(5))
    back = ErrorModelParams.from_json_dict(params.to_json_dict())
    assert np.array_equal(back.base_error, params.base_error)
    assert back.pair_strengths == params.pair_strengths
    assert back.param_order == params.param_order


# -- global objective -------------------------------------------------


def test_global_zero_coupling_at_sweet_spots():
    t = build_grid_topology(2, 3)
    params = flat_params(t, base=0.007)
    f = sweet_spot_assignment(params, t)
    assert global_objective(f, params, t).value == pytest.approx(0.007)


def test_global_single_qubit():
    t = build_grid_topology(1, 1)
    params = flat_params(t, base=0.01)
    f = assignment(params, t, [0.5])
    assert global_objective(f, params, t).value == pytest.approx(0.01)


def test_global_two_qubit_chain_hand_formula():
    # one active pair at zero detuning: the Gaussian term is 1 and shows
    # up in both endpoint error terms, so G = mean(base) + 2 * s / P
    t = build_grid_topology(1, 2)
    s = 0.04
    params = flat_params(
        t, base=0.006,
        strengths={make_pair(qubit_param(0), qubit_param(1)): s},
    )
    f = assignment(params, t, [0.3, 0.3, 0.9])
    expected = 0.006 + 2 * s / 3
    assert global_objective(f, params, t).value == pytest.approx(expected)


def test_global_matches_reference_loop():
    t = add_nonlocal_pairs(
        build_grid_topology(3, 3), 2, np.random.default_rng(8), density=0.3
    )
    params = sample_error_model(
        t, SamplingRanges(nonlocal_strength=(0.0, 0.05)), np.random.default_rng(21)
    )
    rng = np.random.default_rng(33)
    for _ in range(10):
        f = random_assignment(params, t, rng)
        got = global_objective(f, params, t).value
        assert got == pytest.approx(reference_global(f.values, params), rel=1e-12)


def test_global_rejects_infeasible():
    t = build_grid_topology(1, 2)
    params = flat_params(t)
    f = assignment(params, t, [0.5, 1.5, 0.5])
    with pytest.raises(ValueError):
        global_objective(f, params, t)


def test_eval_count_delta_is_one():
    t = build_grid_topology(1, 2)
    params = flat_params(t)
    f = sweet_spot_assignment(params, t)
    assert global_objective(f, params, t).eval_count_delta == 1
    fp = footprint(Block(center=0), t.local_pairs(), t)
    assert reduced_objective(Block(center=0), fp, f, params, t).eval_count_delta == 1


# -- reduced objective ------------------------------------------------


def test_reduced_whole_chip_equals_global():
    t = build_grid_topology(2, 2)
    params = sample_error_model(t, SamplingRanges(), np.random.default_rng(2))
    f = random_assignment(params, t, np.random.default_rng(3))
    fp = Footprint(qubits=frozenset(range(4)), params=frozenset(t.all_params()))
    b = block_for_center(0, set(), t)
    assert reduced_objective(b, fp, f, params, t).value == pytest.approx(
        global_objective(f, params, t).value
    )


def test_reduced_isolated_qubit():
    t = build_grid_topology(1, 2)
    params = flat_params(t, base=0.003, detune=0.1)
    f = assignment(params, t, [0.7, 0.2, 0.4])
    b = Block(center=0)
    fp = footprint(b, frozenset(), t)
    expected = 0.003 + 0.1 * (0.7 - 0.5) ** 2
    assert reduced_objective(b, fp, f, params, t).value == pytest.approx(expected)


def test_reduced_empty_footprint_rejected():
    t = build_grid_topology(1, 2)
    params = flat_params(t)
    f = sweet_spot_assignment(params, t)
    empty = Footprint(qubits=frozenset(), params=frozenset())
    with pytest.raises(ValueError):
        reduced_objective(Block(center=0), empty, f, params, t)


def test_affine_identity_local_exact():
    # pure local model, exact hypothesis: G*P - R*|fp| is constant as the
    # block parameters sweep a grid
    t = build_grid_topology(2, 2)
    params = sample_error_model(t, SamplingRanges(), np.random.default_rng(14))
    f = random_assignment(params, t, np.random.default_rng(15))
    hyp = t.local_pairs()
    b = block_for_center(0, set(), t)
    fp = footprint(b, hyp, t)
    idx = {p: i for i, p in enumerate(params.param_order)}
    bidx = [idx[p] for p in b.params]
    n_total = t.n_params
    n_fp = len(fp.params)
    consts = []
    for u0 in np.linspace(0.05, 0.95, 4):
        for u1 in np.linspace(0.05, 0.95, 4):
            for u2 in np.linspace(0.05, 0.95, 4):
                f.values[bidx] = [u0, u1, u2]
                g = global_objective(f, params, t).value
                r = reduced_objective(b, fp, f, params, t).value
                consts.append(g * n_total - r * n_fp)
    assert np.ptp(consts) < 1e-12


def test_block_objective_matches_reduced():
    t = add_nonlocal_pairs(
        build_grid_topology(3, 3), 2, np.random.default_rng(1), density=0.3
    )
    params = sample_error_model(
        t, SamplingRanges(nonlocal_strength=(0.0, 0.05)), np.random.default_rng(6)
    )
    f = random_assignment(params, t, np.random.default_rng(7))
    hyp = t.local_pairs()
    rng = np.random.default_rng(11)
    for b in partition_from_order(tuple(range(9)), t).blocks:
        fp = footprint(b, hyp, t)
        obj = BlockObjective(b, fp, f, params)
        cands = rng.uniform(0, 1, size=(6, b.size))
        fast = obj.values(cands)
        work = f.copy()
        for row, u in enumerate(cands):
            work.values[obj.block_idx] = u
            slow = reduced_objective(b, fp, work, params, t).value
            assert fast[row] == pytest.approx(slow, rel=1e-12)


# -- noise -------------------------------------------------------------


def test_noisy_eval_rsd_zero_is_identity():
    ev = Evaluation(value=0.42)
    assert noisy_eval(ev, 0.0, np.random.default_rng(0)) is ev


def test_noisy_eval_zero_value_stays_zero():
    ev = Evaluation(value=0.0)
    for rsd in (0.1, 0.5, 2.0):
        assert noisy_eval(ev, rsd, np.random.default_rng(1)).value == 0.0


def test_noisy_eval_monte_carlo_std():
    rng = np.random.default_rng(123)
    draws = np.array(
        [noisy_eval(Evaluation(1.0), 0.2, rng).value for _ in range(100_000)]
    )
    assert 0.19 < draws.std() < 0.21


def test_noisy_eval_clipping_bias_small():
    rng = np.random.default_rng(321)
    draws = np.array(
        [noisy_eval(Evaluation(1.0), 0.2, rng).value for _ in range(400_000)]
    )
    assert abs(draws.mean() - 1.0) < 1e-3


def test_noisy_eval_reproducible():
    a = noisy_eval(Evaluation(1.0), 0.2, np.random.default_rng(77)).value
    b = noisy_eval(Evaluation(1.0), 0.2, np.random.default_rng(77)).value
    assert a == b


def test_noisy_eval_negative_rsd_rejected():
    with pytest.raises(ValueError):
        noisy_eval(Evaluation(1.0), -0.1, np.random.default_rng(0))


# -- gradient ----------------------------------------------------------


def test_gradient_matches_central_differences():
    t = add_nonlocal_pairs(
        build_grid_topology(3, 3), 2, np.random.default_rng(5), density=0.3
    )
    params = sample_error_model(
        t, SamplingRanges(nonlocal_strength=(0.0, 0.05)), np.random.default_rng(50)
    )
    rng = np.random.default_rng(51)
    h = 1e-6
    for _ in range(20):
        f = random_assignment(params, t, rng)
        f.values = np.clip(f.values, params.lower + 2 * h, params.upper - 2 * h)
        grad = objective_gradient(f, params, t)
        for i in rng.choice(t.n_params, size=4, replace=False):
            fp_ = f.copy()
            fp_.values[i] += h
            fm = f.copy()
            fm.values[i] -= h
            fd = (
                global_objective(fp_, params, t).value
                - global_objective(fm, params, t).value
            ) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-10)


# -- order preservation ------------------------------------------------


def grid_for_block(block, params, idx, points=5):
    axes = []
    for p in block.params:
        i = idx[p]
        axes.append(np.linspace(params.lower[i], params.upper[i], points))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def test_order_preservation_local_exact():
    t = build_grid_topology(2, 2)
    params = sample_error_model(t, SamplingRanges(), np.random.default_rng(61))
    f = random_assignment(params, t, np.random.default_rng(62))
    hyp = t.local_pairs()
    idx = {p: i for i, p in enumerate(params.param_order)}
    for b in partition_from_order((0, 1, 2, 3), t).blocks:
        grid = grid_for_block(b, params, idx)
        assert check_order_preservation(b, f, params, t, hyp, grid)


def test_order_preservation_single_qubit_chip():
    t = build_grid_topology(1, 1)
    params = flat_params(t, detune=0.3)
    f = assignment(params, t, [0.2])
    grid = np.linspace(0, 1, 7)[:, None]
    assert check_order_preservation(
        Block(center=0), f, params, t, frozenset(), grid
    )


def test_order_preservation_fails_with_hidden_nonlocal_pair():
    # a strong unmodeled pair between qubit 0 and qubit 2: pulling f0
    # toward its sweet spot walks it into collision with f2, and the
    # local-footprint objective sees only half the penalty the global
    # objective pays
    base = build_grid_topology(1, 3)
    t = build_graph_topology(3, base.couplers, nonlocal_pairs=((0, 2),))
    n = t.n_params
    strengths = {p: 0.0 for p in t.local_pairs()}
    strengths[make_pair(qubit_param(0), qubit_param(2))] = 0.05
    params = ErrorModelParams(
        param_order=t.all_params(),
        base_error=np.full(n, 0.005),
        detune=np.array([1.4, 0.0, 0.0, 0.1, 0.0]),
        sweet_spots=np.array([0.45, 0.5, 0.5, 0.3, 0.5]),
        collision_width=0.1,
        pair_strengths=strengths,
        lower=np.zeros(n),
        upper=np.ones(n),
    )
    f = assignment(params, t, [0.1, 0.5, 0.45, 0.5, 0.5])
    b = partition_from_order((0, 1, 2), t).blocks[0]
    assert b.params == (("q", 0), ("c", (0, 1)))
    idx = {p: i for i, p in enumerate(params.param_order)}
    grid = grid_for_block(b, params, idx)
    assert not check_order_preservation(b, f, params, t, t.local_pairs(), grid)
    # with the pair in the hypothesis the footprint covers it again
    assert check_order_preservation(b, f, params, t, t.true_pairs(), grid)
