"""Offline link prioritization from a sparsity sweep.

Blocks that vanish at smaller beta are less important and receive lower
priority numbers (q = 1 is the least important link, q = r1 the most).
Ties among blocks vanishing at the same schedule step, and the ordering of
blocks that never vanish, are resolved by the leave-one-out performance
loss, then lexicographically by block index for determinism. The resulting
table is the hand-off artifact consumed by the online rerouting step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySweep,
    IndexOutOfRange,
    InvalidAssumption,
    NotStabilizing,
    PatternNotStabilizable,
)
from .plant import GainMatrix, LtiPlant, SparsityPattern
from .sparse import SweepResult
from .structured import AugLagConfig, synthesize_structured_info


@dataclass(frozen=True)
class PriorityRow:
    """One ranked link: block (i, j), priority q, size s = m_i * n_j, and the
    block's gain values flattened row-major, zero-padded to the table width."""

    i: int
    j: int
    q: int
    size: int
    values: tuple[float, ...]


@dataclass(frozen=True)
class PriorityTable:
    """Rows in ascending priority; row k (0-based) has q = k + 1."""

    rows: tuple[PriorityRow, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        if sorted(r.q for r in rows) != list(range(1, len(rows) + 1)):
            raise DimensionMismatch("priorities must be a permutation of 1..r1")
        if any(r.q != k + 1 for k, r in enumerate(rows)):
            raise DimensionMismatch("rows must be stored in ascending priority")
        if rows:
            width = len(rows[0].values)
            if any(len(r.values) != width for r in rows):
                raise DimensionMismatch("all value rows must share the padded width")
            if any(r.size > width for r in rows):
                raise DimensionMismatch("row size exceeds the padded width")
            if any(any(v != 0.0 for v in r.values[r.size:]) for r in rows):
                raise DimensionMismatch("padding beyond a row's size must be zero")

    @property
    def r1(self) -> int:
        return len(self.rows)

    @property
    def r2(self) -> int:
        return len(self.rows[0].values) if self.rows else 0

    def row(self, q: int) -> PriorityRow:
        if not 1 <= q <= self.r1:
            raise IndexOutOfRange(f"priority {q} outside 1..{self.r1}")
        return self.rows[q - 1]

    def sizes(self) -> tuple[int, ...]:
        return tuple(r.size for r in self.rows)

    def is_zero_row(self, q: int) -> bool:
        return all(v == 0.0 for v in self.row(q).values)

    def with_zeroed_rows(self, priorities) -> "PriorityTable":
        dead = set(priorities)
        rows = tuple(
            PriorityRow(r.i, r.j, r.q, r.size, (0.0,) * len(r.values))
            if r.q in dead
            else r
            for r in self.rows
        )
        return PriorityTable(rows)


def table_from_gain(gain: GainMatrix, priorities: dict[tuple[int, int], int]) -> PriorityTable:
    """Assemble a table from a gain and an explicit block -> priority map.

    Used by tests and by callers that already know the ranking; rank_links
    derives the map from a sweep.
    """
    part = gain.partition
    sizes = part.block_sizes()
    r2 = max(int(sizes[i, j]) for (i, j) in priorities)
    rows = []
    for (i, j), q in priorities.items():
        blk = gain.block(i, j).ravel(order="C")
        size = int(sizes[i, j])
        values = tuple(float(v) for v in blk) + (0.0,) * (r2 - size)
        rows.append(PriorityRow(int(i), int(j), int(q), size, values))
    rows.sort(key=lambda r: r.q)
    return PriorityTable(tuple(rows))


def removal_loss(
    plant: LtiPlant,
    base_pattern: SparsityPattern,
    block: tuple[int, int],
    config: AugLagConfig | None = None,
    *,
    base_cost: float | None = None,
    base_gain: GainMatrix | None = None,
) -> float:
    """Performance loss J*(pattern minus block) - J*(pattern).

    Returns +inf when the reduced pattern cannot be stabilized. A known
    base synthesis (cost and gain) may be passed in to avoid recomputing
    it and to warm-start the reduced problem.
    """
    i, j = block
    n_nodes = base_pattern.partition.n_nodes
    if not (0 <= i < n_nodes and 0 <= j < n_nodes):
        raise IndexOutOfRange(f"block ({i},{j}) outside the {n_nodes}x{n_nodes} grid")
    if not base_pattern.mask[i, j]:
        raise InvalidAssumption(f"block ({i},{j}) is not free in the base pattern")
    cfg = config or AugLagConfig()
    if base_cost is None or base_gain is None:
        base_info = synthesize_structured_info(plant, base_pattern, cfg)
        base_cost, base_gain = base_info.cost, base_info.gain
    reduced = base_pattern.without_block(i, j)
    init = base_gain.project(reduced)
    try:
        info = synthesize_structured_info(plant, reduced, cfg, init=init)
    except NotStabilizing:
        try:
            info = synthesize_structured_info(plant, reduced, cfg)
        except PatternNotStabilizable:
            return math.inf
    except PatternNotStabilizable:
        return math.inf
    return info.cost - base_cost


def rank_links(
    plant: LtiPlant,
    sweep: SweepResult,
    config: AugLagConfig | None = None,
) -> PriorityTable:
    """Rank the first sweep entry's blocks by vanish order across the schedule.

    A block's vanish step is the first schedule index from which it stays
    zero for the rest of the sweep; blocks still present at the end never
    vanish and take the highest priorities. Removal losses order blocks
    within a tied vanish step and within the never-vanished group.
    """
    if not sweep.entries:
        raise EmptySweep("sweep has no entries")
    cfg = config or AugLagConfig()
    entries = sweep.entries
    base = entries[0]
    blocks = base.pattern.free_blocks()
    if not blocks:
        raise EmptySweep("first sweep entry has no free blocks")

    n_steps = len(entries)
    masks = np.stack([e.pattern.mask for e in entries])
    never = n_steps  # sort key sentinel above every real vanish index

    vanish: dict[tuple[int, int], int] = {}
    for (i, j) in blocks:
        present = masks[:, i, j]
        last = int(np.max(np.nonzero(present)[0]))
        vanish[(i, j)] = never if last == n_steps - 1 else last + 1

    # Removal losses are only needed where the vanish key ties.
    groups: dict[int, list[tuple[int, int]]] = {}
    for blk, v in vanish.items():
        groups.setdefault(v, []).append(blk)
    losses: dict[tuple[int, int], float] = {}
    for v, members in groups.items():
        if len(members) < 2:
            continue
        for blk in members:
            losses[blk] = removal_loss(
                plant,
                base.pattern,
                blk,
                cfg,
                base_cost=base.cost_polished,
                base_gain=base.polished_gain,
            )

    ordered = sorted(
        blocks,
        key=lambda blk: (vanish[blk], losses.get(blk, 0.0), blk[0], blk[1]),
    )
    priorities = {blk: rank + 1 for rank, blk in enumerate(ordered)}
    return table_from_gain(base.gain, priorities)
