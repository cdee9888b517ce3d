"""Gated minimum-cost linear assignment on track/detection cost matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

#: Marks a pair that must never be matched (cross-class, missing feature, ...).
INADMISSIBLE = np.inf

# Finite stand-in for INADMISSIBLE entries during the solve; any value far
# above the [0, 1] cost range works, the pairs are filtered out afterwards.
_SENTINEL = 1e9


@dataclass
class AssociationResult:
    """Outcome of one association step, index-based.

    ``matches`` holds (row, col) pairs; unmatched lists hold the leftover row
    (track) and column (detection) indices.
    """

    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)


def solve_gated_assignment(costs: np.ndarray, gate: float) -> AssociationResult:
    """Minimum-cost assignment over entries with cost <= gate.

    Entries above the gate (or INADMISSIBLE) are excluded; among the
    admissible pairs the returned matching minimizes total cost. Empty inputs
    yield an all-unmatched result.
    """
    costs = np.asarray(costs, dtype=np.float64)
    n_rows, n_cols = costs.shape
    if n_rows == 0 or n_cols == 0:
        return AssociationResult([], list(range(n_rows)), list(range(n_cols)))

    gated = np.where(costs <= gate, costs, _SENTINEL)
    rows, cols = linear_sum_assignment(gated)

    result = AssociationResult()
    matched_rows, matched_cols = set(), set()
    for r, c in zip(rows, cols):
        if gated[r, c] < _SENTINEL:
            result.matches.append((int(r), int(c)))
            matched_rows.add(int(r))
            matched_cols.add(int(c))
    result.unmatched_tracks = [r for r in range(n_rows) if r not in matched_rows]
    result.unmatched_detections = [c for c in range(n_cols) if c not in matched_cols]
    return result
