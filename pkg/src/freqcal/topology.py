"""Chip topology: qubit/coupler graph plus crosstalk structure.

A chip is an undirected graph of qubits (vertices) and couplers (edges).
Every qubit carries one tunable frequency parameter and every coupler
carries one more, so a chip with N qubits and E couplers exposes N + E
parameters.  Crosstalk is represented as a set of unordered parameter
pairs; the "local" pairs are derived from the graph (gate supports that
share a qubit, graph-adjacent qubits, or couplers sharing an endpoint)
and "nonlocal" pairs are qubit-qubit pairs at graph distance >= 2 that
are injected explicitly.

A crosstalk *hypothesis* is simply a frozenset of parameter pairs that
an optimizer assumes to be active.  It may differ from the pairs the
error simulator actually uses; that gap is the model-mismatch degree of
freedom exercised by the experiment harness.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

# A parameter label is ("q", qubit_index) or ("c", (a, b)) with a < b.
Param = tuple
# An unordered parameter pair, stored as a sorted tuple so it hashes stably.
ParamPair = tuple
Hypothesis = frozenset


def qubit_param(q: int) -> Param:
    return ("q", q)


def coupler_param(a: int, b: int) -> Param:
    if a == b:
        raise ValueError(f"coupler endpoints must differ, got ({a}, {b})")
    return ("c", (min(a, b), max(a, b)))


def param_support(p: Param) -> tuple[int, ...]:
    """Qubits on which the parameter's gate acts."""
    kind, key = p
    return (key,) if kind == "q" else key


def make_pair(p: Param, q: Param) -> ParamPair:
    if p == q:
        raise ValueError(f"crosstalk pair must join distinct parameters: {p}")
    return tuple(sorted((p, q)))


@dataclass(frozen=True)
class ChipTopology:
    """Immutable qubit/coupler graph with optional nonlocal crosstalk pairs.

    ``couplers`` are unordered qubit pairs stored as sorted tuples;
    ``nonlocal_pairs`` are qubit-qubit pairs at graph distance >= 2 whose
    crosstalk the simulator treats as active in addition to the derived
    local pairs.
    """

    n_qubits: int
    couplers: tuple[tuple[int, int], ...]
    nonlocal_pairs: tuple[tuple[int, int], ...] = ()
    _adjacency: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("topology needs at least one qubit")
        seen = set()
        adjacency: dict[int, set[int]] = {q: set() for q in range(self.n_qubits)}
        for a, b in self.couplers:
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ValueError(f"coupler ({a}, {b}) out of range")
            if a >= b:
                raise ValueError(f"coupler ({a}, {b}) must be stored as (low, high)")
            if (a, b) in seen:
                raise ValueError(f"duplicate coupler ({a}, {b})")
            seen.add((a, b))
            adjacency[a].add(b)
            adjacency[b].add(a)
        for a, b in self.nonlocal_pairs:
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits) or a >= b:
                raise ValueError(f"bad nonlocal pair ({a}, {b})")
            if (a, b) in seen:
                raise ValueError(f"nonlocal pair ({a}, {b}) duplicates a coupler")
        object.__setattr__(
            self, "_adjacency", {q: tuple(sorted(nb)) for q, nb in adjacency.items()}
        )

    # -- graph queries ------------------------------------------------

    def neighbors(self, q: int) -> tuple[int, ...]:
        """Qubits sharing a coupler with ``q``, in ascending index order."""
        if not 0 <= q < self.n_qubits:
            raise ValueError(f"qubit {q} out of range for {self.n_qubits}-qubit chip")
        return self._adjacency[q]

    def incident_couplers(self, q: int) -> tuple[tuple[int, int], ...]:
        return tuple((min(q, w), max(q, w)) for w in self.neighbors(q))

    def is_connected(self) -> bool:
        if self.n_qubits == 1:
            return True
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in self._adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.n_qubits

    def graph_distances(self, source: int) -> list[int]:
        """BFS hop counts from ``source``; unreachable qubits get -1."""
        dist = [-1] * self.n_qubits
        dist[source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for w in self._adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    # -- parameters and crosstalk pairs -------------------------------

    def all_params(self) -> tuple[Param, ...]:
        """Qubit parameters in index order, then coupler parameters."""
        qubits = tuple(qubit_param(q) for q in range(self.n_qubits))
        return qubits + tuple(("c", c) for c in self.couplers)

    @property
    def n_params(self) -> int:
        return self.n_qubits + len(self.couplers)

    def param_index(self) -> dict[Param, int]:
        return {p: i for i, p in enumerate(self.all_params())}

    def local_pairs(self) -> frozenset[ParamPair]:
        """Parameter pairs whose gate supports share a qubit or are adjacent.

        Concretely: adjacent qubit pairs, qubit-coupler pairs where the
        qubit is an endpoint, and coupler pairs sharing an endpoint.
        """
        pairs = set()
        for a, b in self.couplers:
            pairs.add(make_pair(qubit_param(a), qubit_param(b)))
            pairs.add(make_pair(qubit_param(a), coupler_param(a, b)))
            pairs.add(make_pair(qubit_param(b), coupler_param(a, b)))
        for c1, c2 in itertools.combinations(self.couplers, 2):
            if set(c1) & set(c2):
                pairs.add(make_pair(("c", c1), ("c", c2)))
        return frozenset(pairs)

    def nonlocal_param_pairs(self) -> frozenset[ParamPair]:
        return frozenset(
            make_pair(qubit_param(a), qubit_param(b)) for a, b in self.nonlocal_pairs
        )

    def true_pairs(self) -> frozenset[ParamPair]:
        """Every crosstalk pair the error simulator treats as active."""
        return self.local_pairs() | self.nonlocal_param_pairs()

    def local_hypothesis(self) -> Hypothesis:
        return self.local_pairs()

    def full_hypothesis(self) -> Hypothesis:
        return self.true_pairs()

    # -- serialization -------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "couplers": [list(c) for c in self.couplers],
            "nonlocal_pairs": [list(p) for p in self.nonlocal_pairs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "ChipTopology":
        return cls(
            n_qubits=int(d["n_qubits"]),
            couplers=tuple(sorted(tuple(int(x) for x in c) for c in d["couplers"])),
            nonlocal_pairs=tuple(
                sorted(tuple(int(x) for x in p) for p in d.get("nonlocal_pairs", []))
            ),
        )

    @classmethod
    def from_json(cls, s: str) -> "ChipTopology":
        return cls.from_json_dict(json.loads(s))


def build_graph_topology(
    n_qubits: int,
    couplers: Iterable[tuple[int, int]],
    nonlocal_pairs: Iterable[tuple[int, int]] = (),
) -> ChipTopology:
    """Generic constructor accepting any undirected qubit graph."""
    cs = tuple(sorted((min(a, b), max(a, b)) for a, b in couplers))
    nl = tuple(sorted((min(a, b), max(a, b)) for a, b in nonlocal_pairs))
    return ChipTopology(n_qubits=n_qubits, couplers=cs, nonlocal_pairs=nl)


def build_grid_topology(rows: int, cols: int) -> ChipTopology:
    """Square-lattice chip with row-major qubit numbering.

    Couplers connect horizontal and vertical lattice neighbors, giving
    2*rows*cols - rows - cols edges and maximum qubit degree 4.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid needs rows >= 1 and cols >= 1")
    edges = []
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.append((q, q + 1))
            if r + 1 < rows:
                edges.append((q, q + cols))
    return ChipTopology(n_qubits=rows * cols, couplers=tuple(sorted(edges)))


def eligible_nonlocal_pairs(
    topology: ChipTopology, radius: int
) -> tuple[tuple[int, int], ...]:
    """Qubit pairs at graph distance in [2, radius], sorted."""
    if radius < 2:
        raise ValueError("nonlocal radius must be >= 2")
    out = []
    for a in range(topology.n_qubits):
        dist = topology.graph_distances(a)
        for b in range(a + 1, topology.n_qubits):
            if 2 <= dist[b] <= radius:
                out.append((a, b))
    return tuple(out)


def add_nonlocal_pairs(
    topology: ChipTopology,
    radius: int,
    rng: np.random.Generator,
    density: float = 1.0,
) -> ChipTopology:
    """Return a copy of ``topology`` with random nonlocal qubit pairs added.

    Pairs are drawn without replacement from the qubit pairs at graph
    distance in [2, radius]; ``density`` is the fraction of eligible
    pairs activated (rounded to the nearest count).  A radius beyond the
    graph diameter just means every distance >= 2 pair is eligible.
    Deterministic for a given rng state.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    eligible = eligible_nonlocal_pairs(topology, radius)
    n_pick = int(round(density * len(eligible)))
    if n_pick == 0:
        return topology
    picked = rng.choice(len(eligible), size=n_pick, replace=False)
    chosen = tuple(sorted(eligible[i] for i in picked))
    return ChipTopology(
        n_qubits=topology.n_qubits,
        couplers=topology.couplers,
        nonlocal_pairs=tuple(sorted(set(topology.nonlocal_pairs) | set(chosen))),
    )
