"""Qubit-centric parameter blocks and their crosstalk footprints.

A visit order over qubits induces a partition of all chip parameters:
each qubit's block takes its own frequency parameter plus every incident
coupler parameter that no earlier block claimed.  On a grid this gives
blocks of one to five parameters.  A block's footprint is the one-step
dependency closure under a crosstalk hypothesis: the parameters whose
error terms the hypothesis says react to the block, and the qubits
needed to measure them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .topology import (
    ChipTopology,
    Hypothesis,
    Param,
    param_support,
    qubit_param,
)


@dataclass(frozen=True)
class Block:
    """One center qubit's parameter plus the couplers it claimed."""

    center: int
    couplers: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for a, b in self.couplers:
            if self.center not in (a, b):
                raise ValueError(
                    f"coupler ({a}, {b}) does not touch block center {self.center}"
                )

    @property
    def params(self) -> tuple[Param, ...]:
        return (qubit_param(self.center),) + tuple(("c", c) for c in self.couplers)

    @property
    def size(self) -> int:
        return 1 + len(self.couplers)


@dataclass(frozen=True)
class Footprint:
    """Qubits and parameters a block's reduced experiment must cover."""

    qubits: frozenset[int]
    params: frozenset[Param]

    @property
    def size(self) -> int:
        return len(self.qubits)


@dataclass(frozen=True)
class Partition:
    """Ordered, disjoint blocks covering every chip parameter once."""

    blocks: tuple[Block, ...]

    @property
    def order(self) -> tuple[int, ...]:
        return tuple(b.center for b in self.blocks)

    def all_params(self) -> list[Param]:
        out: list[Param] = []
        for b in self.blocks:
            out.extend(b.params)
        return out

    def to_json(self) -> str:
        return json.dumps(
            [{"center": b.center, "couplers": [list(c) for c in b.couplers]}
             for b in self.blocks]
        )

    @classmethod
    def from_json(cls, s: str) -> "Partition":
        return cls(
            blocks=tuple(
                Block(
                    center=int(d["center"]),
                    couplers=tuple(tuple(int(x) for x in c) for c in d["couplers"]),
                )
                for d in json.loads(s)
            )
        )


def block_for_center(
    center: int, claimed: Iterable[tuple[int, int]], topology: ChipTopology
) -> Block:
    """Block for ``center``: its qubit parameter plus unclaimed couplers.

    The caller owns the claimed set and must add the returned couplers
    to it before building the next block.
    """
    claimed = set(claimed)
    mine = tuple(c for c in topology.incident_couplers(center) if c not in claimed)
    return Block(center=center, couplers=mine)


def partition_from_order(
    order: Sequence[int], topology: ChipTopology
) -> Partition:
    """Blocks induced by visiting qubits in ``order``."""
    if sorted(order) != list(range(topology.n_qubits)):
        raise ValueError("order must be a permutation of all qubit indices")
    claimed: set[tuple[int, int]] = set()
    blocks = []
    for center in order:
        b = block_for_center(center, claimed, topology)
        claimed.update(b.couplers)
        blocks.append(b)
    return Partition(blocks=tuple(blocks))


@lru_cache(maxsize=512)
def _hypothesis_partners(hypothesis: Hypothesis) -> dict[Param, tuple[Param, ...]]:
    partners: dict[Param, list[Param]] = {}
    for p, q in hypothesis:
        partners.setdefault(p, []).append(q)
        partners.setdefault(q, []).append(p)
    return {p: tuple(v) for p, v in partners.items()}


def footprint(
    block: Block, hypothesis: Hypothesis, topology: ChipTopology
) -> Footprint:
    """One-step dependency closure of a block under a hypothesis.

    Contains the block's own parameters, every parameter the hypothesis
    couples to one of them, and the union of those parameters' gate
    supports (always including the block's own gate qubits).
    """
    partners = _hypothesis_partners(hypothesis)
    params = set(block.params)
    for p in block.params:
        params.update(partners.get(p, ()))
    qubits = set()
    for p in params:
        qubits.update(param_support(p))
    for p in block.params:
        qubits.update(param_support(p))
    return Footprint(qubits=frozenset(qubits), params=frozenset(params))
