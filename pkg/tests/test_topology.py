import json

import numpy as np
import pytest

from freqcal.topology import (
    ChipTopology,
    add_nonlocal_pairs,
    build_graph_topology,
    build_grid_topology,
    coupler_param,
    eligible_nonlocal_pairs,
    make_pair,
    qubit_param,
)


def lattice_edges(rows, cols):
    """Edge-enumeration oracle, independent of the constructor."""
    edges = set()
    for q in range(rows * cols):
        r, c = divmod(q, cols)
        for dr, dc in ((0, 1), (1, 0)):
            rr, cc = r + dr, c + dc
            if rr < rows and cc < cols:
                edges.add((q, rr * cols + cc))
    return edges


def bfs_distance(topology, a, b):
    """Graph-distance oracle via plain BFS written here."""
    frontier = {a}
    seen = {a}
    d = 0
    while frontier:
        if b in frontier:
            return d
        nxt = set()
        for v in frontier:
            for w in topology.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    nxt.add(w)
        frontier = nxt
        d += 1
    return -1


def test_degenerate_lattice():
    t = build_grid_topology(1, 1)
    assert t.n_qubits == 1
    assert t.couplers == ()


def test_2x2_lattice_enumeration():
    t = build_grid_topology(2, 2)
    assert t.n_qubits == 4
    assert set(t.couplers) == {(0, 1), (0, 2), (1, 3), (2, 3)}


@pytest.mark.parametrize("rows,cols", [(3, 3), (2, 5), (4, 4), (1, 7), (6, 6)])
def test_grid_coupler_count_oracle(rows, cols):
    t = build_grid_topology(rows, cols)
    assert set(t.couplers) == lattice_edges(rows, cols)
    assert len(t.couplers) == 2 * rows * cols - rows - cols


def test_grid_degree_bound():
    t = build_grid_topology(5, 5)
    assert max(len(t.neighbors(q)) for q in range(25)) <= 4


def test_neighbors_examples():
    assert set(build_grid_topology(2, 2).neighbors(0)) == {1, 2}
    assert len(build_grid_topology(3, 3).neighbors(4)) == 4
    assert build_grid_topology(1, 1).neighbors(0) == ()


def test_neighbors_out_of_range():
    with pytest.raises(ValueError):
        build_grid_topology(2, 2).neighbors(4)


def test_bad_constructions():
    with pytest.raises(ValueError):
        build_grid_topology(0, 3)
    with pytest.raises(ValueError):
        ChipTopology(n_qubits=2, couplers=((0, 5),))
    with pytest.raises(ValueError):
        ChipTopology(n_qubits=3, couplers=((0, 1), (0, 1)))
    with pytest.raises(ValueError):
        coupler_param(2, 2)
    with pytest.raises(ValueError):
        make_pair(qubit_param(1), qubit_param(1))


def test_eligible_nonlocal_pairs_2x2():
    t = build_grid_topology(2, 2)
    assert set(eligible_nonlocal_pairs(t, 2)) == {(0, 3), (1, 2)}


def test_no_eligible_pairs_on_dimer():
    t = build_grid_topology(1, 2)
    rng = np.random.default_rng(0)
    assert add_nonlocal_pairs(t, 2, rng, density=1.0) is t


def test_add_nonlocal_determinism():
    t = build_grid_topology(3, 3)
    a = add_nonlocal_pairs(t, 2, np.random.default_rng(5), density=0.5)
    b = add_nonlocal_pairs(t, 2, np.random.default_rng(5), density=0.5)
    assert a.nonlocal_pairs == b.nonlocal_pairs
    assert len(a.nonlocal_pairs) > 0


def test_nonlocal_pairs_respect_distance_and_uniqueness():
    t = build_grid_topology(3, 4)
    out = add_nonlocal_pairs(t, 3, np.random.default_rng(11), density=1.0)
    assert len(set(out.nonlocal_pairs)) == len(out.nonlocal_pairs)
    for a, b in out.nonlocal_pairs:
        assert (a, b) not in t.couplers
        assert 2 <= bfs_distance(t, a, b) <= 3


def test_radius_beyond_diameter_means_every_distant_pair():
    t = build_grid_topology(2, 2)
    out = add_nonlocal_pairs(t, 99, np.random.default_rng(0), density=1.0)
    assert set(out.nonlocal_pairs) == {(0, 3), (1, 2)}


def test_local_pairs_rule():
    t = build_grid_topology(2, 2)
    pairs = t.local_pairs()
    # adjacent qubits interact, diagonal qubits do not
    assert make_pair(qubit_param(0), qubit_param(1)) in pairs
    assert make_pair(qubit_param(0), qubit_param(3)) not in pairs
    # a coupler interacts with its endpoints but not other qubits
    assert make_pair(qubit_param(0), coupler_param(0, 1)) in pairs
    assert make_pair(qubit_param(3), coupler_param(0, 1)) not in pairs
    # couplers sharing an endpoint interact
    assert make_pair(coupler_param(0, 1), coupler_param(0, 2)) in pairs
    assert make_pair(coupler_param(0, 1), coupler_param(2, 3)) not in pairs


def test_true_pairs_includes_nonlocal():
    t = build_grid_topology(2, 2)
    out = add_nonlocal_pairs(t, 2, np.random.default_rng(0), density=1.0)
    extra = out.true_pairs() - out.local_pairs()
    assert extra == {make_pair(qubit_param(a), qubit_param(b))
                     for a, b in out.nonlocal_pairs}


def test_param_order_and_count():
    t = build_grid_topology(2, 3)
    params = t.all_params()
    assert len(params) == t.n_params == 6 + 7
    assert params[0] == ("q", 0)
    assert params[6] == ("c", t.couplers[0])


def test_connectivity():
    assert build_grid_topology(3, 3).is_connected()
    assert not build_graph_topology(3, [(0, 1)]).is_connected()
    assert build_grid_topology(1, 1).is_connected()


def test_json_round_trip():
    t = add_nonlocal_pairs(
        build_grid_topology(3, 3), 2, np.random.default_rng(1), density=0.4
    )
    s = t.to_json()
    back = ChipTopology.from_json(s)
    assert back == t
    assert json.loads(s)["n_qubits"] == 9
