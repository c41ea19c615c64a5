"""One-to-one matching of predicted items to ground-truth items.

Costs are embedding cosine distances; the solver is the O(n^3) potential
(shortest augmenting path) variant of the Hungarian method. Rectangular
matrices are padded with a dummy dimension at a cost strictly above the
matrix maximum, so dummy pairs can never displace a real optimal pair;
they are reported as unmatched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .gateway import EmbeddingVector, Gateway, ModelSpec
from .model import PartyRole, Strategy


class AlignmentError(Exception):
    pass


class DimensionMismatchError(AlignmentError):
    pass


class EmptyListError(AlignmentError):
    pass


#: Matched pairs at cosine distance above this are kept but flagged.
DISTANCE_FLAG_THRESHOLD = 0.5


@dataclass
class CostMatrix:
    """rows = ground-truth items, cols = predicted items. Values must be
    finite; matrices built from cosine distances lie in [0, 2]."""

    rows: int
    cols: int
    values: list[list[float]]

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("cost matrix needs at least one row and one column")
        if len(self.values) != self.rows or any(len(r) != self.cols for r in self.values):
            raise ValueError("cost matrix shape does not match rows x cols")
        for row in self.values:
            for value in row:
                if not math.isfinite(value):
                    raise ValueError("cost matrix entries must be finite")


@dataclass
class Assignment:
    """A minimal-cost partial injection of size min(rows, cols).

    pairs are (row_index, col_index), sorted by row; among equal-cost
    optima the lexicographically smallest pair list is returned.
    """

    pairs: list[tuple[int, int]]
    unmatched_rows: list[int]
    unmatched_cols: list[int]
    total_cost: float
    pair_distances: list[float] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class AlignedItems:
    """One model's predicted items aligned onto the GT items of one
    (dispute, strategy, party, kind) cell, with the texts kept for audit
    and for downstream stages that only see the persisted record."""

    dispute_id: str
    model: str
    strategy: Strategy
    kind: str  # "demand" or "argument"
    party: PartyRole
    gt_texts: list[str]
    pred_texts: list[str]
    assignment: Assignment

    def __post_init__(self) -> None:
        if self.kind not in ("demand", "argument"):
            raise ValueError(f"unknown item kind {self.kind!r}")


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    if u.dimension != v.dimension:
        raise DimensionMismatchError(
            f"cannot compare embeddings of dimension {u.dimension} and {v.dimension}"
        )
    dot = sum(a * b for a, b in zip(u.values, v.values))
    norm_u = math.sqrt(sum(a * a for a in u.values))
    norm_v = math.sqrt(sum(b * b for b in v.values))
    if norm_u == 0.0 or norm_v == 0.0:
        raise AlignmentError("zero vector has no direction")
    return max(-1.0, min(1.0, dot / (norm_u * norm_v)))


def _hungarian_square(cost: list[list[float]]) -> list[int]:
    """Minimal assignment of an n x n matrix; returns column per row."""
    n = len(cost)
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # match[j] = row (1-based) assigned to column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        row_to_col[match[j] - 1] = j - 1
    return row_to_col


def _padded_minimum(values: list[list[float]], rows: list[int], cols: list[int]) -> float:
    """Minimal total over partial injections of size min(|rows|, |cols|)
    within the given row/col subsets."""
    if not rows or not cols:
        return 0.0
    high = max(values[r][c] for r in rows for c in cols) + 1.0
    n = max(len(rows), len(cols))
    square = [
        [values[rows[i]][cols[j]] if i < len(rows) and j < len(cols) else high for j in range(n)]
        for i in range(n)
    ]
    assigned = _hungarian_square(square)
    total = 0.0
    for i, j in enumerate(assigned):
        if i < len(rows) and j < len(cols):
            total += values[rows[i]][cols[j]]
    return total


def solve_assignment(cost: CostMatrix) -> Assignment:
    """Minimal-total-cost partial injection of size min(rows, cols).

    Ties among equal-cost optima are broken toward the lexicographically
    smallest pair list by fixing pairs greedily in (row, col) order and
    keeping a candidate only if the fixed prefix still extends to an
    optimal solution (checked by re-solving the remaining subproblem).
    """
    rows, cols, values = cost.rows, cost.cols, cost.values
    size = min(rows, cols)
    optimal = _padded_minimum(values, list(range(rows)), list(range(cols)))
    tolerance = 1e-9 * max(1.0, abs(optimal))

    pairs: list[tuple[int, int]] = []
    fixed_cost = 0.0
    used_cols: set[int] = set()
    next_row = 0
    while len(pairs) < size:
        remaining = size - len(pairs) - 1
        # Rows may be skipped only when rows outnumber columns.
        last_start = rows - 1 - remaining if rows > cols else next_row
        placed = False
        for r in range(next_row, last_start + 1):
            for c in range(cols):
                if c in used_cols:
                    continue
                rest_rows = list(range(r + 1, rows))
                rest_cols = [j for j in range(cols) if j not in used_cols and j != c]
                achievable = (
                    fixed_cost + values[r][c] + _padded_minimum(values, rest_rows, rest_cols)
                )
                if achievable <= optimal + tolerance:
                    pairs.append((r, c))
                    fixed_cost += values[r][c]
                    used_cols.add(c)
                    next_row = r + 1
                    placed = True
                    break
            if placed:
                break
        assert placed, "optimal assignment must always be extendable"

    matched_rows = {r for r, _ in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=[r for r in range(rows) if r not in matched_rows],
        unmatched_cols=[c for c in range(cols) if c not in used_cols],
        total_cost=sum(values[r][c] for r, c in pairs),
    )


def build_cost_matrix(
    gt_vectors: list[EmbeddingVector], pred_vectors: list[EmbeddingVector]
) -> CostMatrix:
    """value(i, j) = 1 - cosine_similarity(gt_i, pred_j), clamped to [0, 2]."""
    values = [
        [min(2.0, max(0.0, 1.0 - cosine_similarity(g, p))) for p in pred_vectors]
        for g in gt_vectors
    ]
    return CostMatrix(rows=len(gt_vectors), cols=len(pred_vectors), values=values)


def align_items(
    gt_texts: list[str],
    pred_texts: list[str],
    gateway: Gateway,
    model: ModelSpec,
) -> Assignment:
    """Embed both lists, build the cosine-distance matrix, and solve.

    Deterministic given cached embeddings. Matched pairs at distance above
    DISTANCE_FLAG_THRESHOLD are flagged in diagnostics, never excluded.
    """
    if not gt_texts or not pred_texts:
        raise EmptyListError("cannot align empty item lists")
    vectors = gateway.embed_texts(list(gt_texts) + list(pred_texts), model)
    matrix = build_cost_matrix(vectors[: len(gt_texts)], vectors[len(gt_texts) :])
    assignment = solve_assignment(matrix)
    assignment.pair_distances = [matrix.values[r][c] for r, c in assignment.pairs]
    for (r, c), distance in zip(assignment.pairs, assignment.pair_distances):
        if distance > DISTANCE_FLAG_THRESHOLD:
            assignment.diagnostics.append(
                f"pair ({r}, {c}) matched at distance {distance:.3f}"
            )
    return assignment
