"""Edit distance between intra-expedition graphs on the shared feature set.

All graphs carry the same six labeled nodes, so no node matching or
insertion is ever needed and the edit distance collapses to the total cost
of substituting edge weights: the L1 difference over the unique entries
(upper triangle with diagonal).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bipartite import IntraExpeditionGraph


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray
    expedition_ids: tuple[str, ...]
    degenerate: bool = False

    def to_csv_rows(self) -> list[list]:
        header = ["expedition_id", *self.expedition_ids]
        return [header] + [
            [eid, *(repr(float(v)) for v in row)] for eid, row in zip(self.expedition_ids, self.values)
        ]


def _matrix(g) -> np.ndarray:
    return np.asarray(g.matrix if isinstance(g, IntraExpeditionGraph) else g, dtype=float)


def unique_entries(matrix: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(matrix.shape[0])
    return matrix[iu]


def edit_distance(a, b) -> float:
    A, B = _matrix(a), _matrix(b)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.abs(unique_entries(A) - unique_entries(B)).sum())


def pairwise_distances(graphs: Sequence, expedition_ids: Sequence[str] | None = None) -> DistanceMatrix:
    if len(graphs) < 2:
        raise ValueError("need at least two graphs")
    mats = [_matrix(g) for g in graphs]
    if any(m.shape != mats[0].shape for m in mats):
        raise ValueError("all graphs must share one shape")
    if expedition_ids is None:
        expedition_ids = [getattr(g, "expedition_id", "") or str(i) for i, g in enumerate(graphs)]
    V = np.array([unique_entries(m) for m in mats])
    n = len(V)
    D = np.zeros((n, n))
    for i in range(n - 1):
        row = np.abs(V[i + 1 :] - V[i]).sum(axis=1)
        D[i, i + 1 :] = row
        D[i + 1 :, i] = row
    return DistanceMatrix(D, tuple(expedition_ids))


def normalize_unit(D: DistanceMatrix) -> DistanceMatrix:
    """Scale so the largest distance is 1; an all-zero matrix is flagged
    ``degenerate`` and returned as is."""
    top = D.values.max()
    if top <= 0:
        return DistanceMatrix(D.values.copy(), D.expedition_ids, True)
    return DistanceMatrix(D.values / top, D.expedition_ids, False)


def to_similarity(D: DistanceMatrix, *, as_distance: bool = False) -> np.ndarray:
    """Layer adjacency from normalized distances: ``1 - d`` off the
    diagonal, or ``d`` itself with ``as_distance``.  No self-loops."""
    S = D.values.copy() if as_distance else 1.0 - D.values
    np.fill_diagonal(S, 0.0)
    return S
