"""Louvain community detection and per-community profiles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .bipartite import IntraExpeditionGraph, normalize_by_size
from .centrality import DegenerateGraphError, aggregate_group, eigenvector_centrality
from .multiplex import FACTOR_LAYERS, LayerKind, MultiplexGraph, layer_values
from .records import Dataset, success_rate

MOVE_TOL = 1e-9


def _check(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    if np.any(np.abs(S - S.T) > 1e-12):
        raise ValueError("similarity graph is not symmetric")
    if np.any(S < 0):
        raise ValueError("similarity graph has negative weights")
    if S.sum() <= 0:
        raise ValueError("graph has zero total weight")
    return S


def modularity(S, labels: Sequence[int], resolution: float = 1.0) -> float:
    """Newman-Girvan modularity of a weighted undirected graph.

    Diagonal entries are treated as self-loop weight counted once in the
    sum over ordered pairs, which keeps the value unchanged when
    communities are collapsed into single nodes.
    """
    S = _check(S)
    labels = np.asarray(labels)
    two_m = S.sum()
    k = S.sum(axis=1)
    q = 0.0
    for c in np.unique(labels):
        idx = labels == c
        q += S[np.ix_(idx, idx)].sum() / two_m - resolution * (k[idx].sum() / two_m) ** 2
    return float(q)


def _relabel(labels: np.ndarray) -> np.ndarray:
    """Contiguous labels in order of first appearance."""
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, c in enumerate(labels):
        out[i] = mapping.setdefault(int(c), len(mapping))
    return out


def _local_moves(A: np.ndarray, resolution: float, rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    n = len(A)
    two_m = A.sum()
    m = two_m / 2.0
    k = A.sum(axis=1)
    labels = np.arange(n)
    tot = k.copy()
    moved_any = False
    improved = True
    while improved:
        improved = False
        for i in rng.permutation(n):
            ci = labels[i]
            row = A[i].copy()
            row[i] = 0.0
            links = np.bincount(labels, weights=row, minlength=n)
            tot[ci] -= k[i]
            # gain of inserting the isolated node i into each community
            gain = links / m - resolution * tot * k[i] / (2.0 * m * m)
            candidates = np.flatnonzero(links > 0)
            best = ci
            best_gain = gain[ci]
            if len(candidates):
                top = candidates[np.argmax(gain[candidates])]  # lowest label on ties
                if gain[top] - best_gain > MOVE_TOL:
                    best = top
            tot[best] += k[i]
            if best != ci:
                labels[i] = best
                improved = True
                moved_any = True
    return _relabel(labels), moved_any


@dataclass(frozen=True)
class Partition:
    expedition_ids: tuple[str, ...]
    labels: np.ndarray
    modularity: float
    seed: int
    resolution: float = 1.0

    @property
    def assignment(self) -> dict[str, int]:
        return {e: int(c) for e, c in zip(self.expedition_ids, self.labels)}

    @property
    def n_communities(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0


def louvain(S, seed: int = 0, resolution: float = 1.0, expedition_ids: Sequence[str] | None = None) -> Partition:
    """Two-phase Louvain modularity maximization.

    Nodes are visited in a seeded random order; a node moves to the
    neighbouring community with the largest gain only if that beats
    staying by more than ``MOVE_TOL``.  Communities are then collapsed
    and the procedure repeats until a level makes no move.
    """
    ids = None
    if hasattr(S, "matrix"):
        ids = getattr(S, "expedition_ids", None)
        S = S.matrix
    S = _check(S)
    if np.any(np.diag(S) != 0):
        raise ValueError("similarity graph must have a zero diagonal")
    n = len(S)
    ids = tuple(expedition_ids or ids or (str(i) for i in range(n)))
    rng = np.random.default_rng(seed)

    node_labels = np.arange(n)
    A = S
    while True:
        labels, moved = _local_moves(A, resolution, rng)
        if not moved:
            break
        node_labels = labels[node_labels]
        H = np.zeros((len(A), labels.max() + 1))
        H[np.arange(len(A)), labels] = 1.0
        A = H.T @ A @ H
    node_labels = _relabel(node_labels)
    return Partition(ids, node_labels, modularity(S, node_labels, resolution), seed, resolution)


@dataclass(frozen=True)
class CommunityRow:
    label: int
    size: int
    success_rate: float
    factor_means: dict[LayerKind, float]
    centrality: np.ndarray


@dataclass(frozen=True)
class CommunityProfile:
    rows: tuple[CommunityRow, ...]  # ascending success rate
    features: tuple[str, ...]

    def to_rows(self) -> list[dict]:
        out = []
        for r in self.rows:
            row = {"community": r.label, "size": r.size, "success_rate": r.success_rate}
            row.update({k.value: v for k, v in r.factor_means.items()})
            row.update({f"centrality_{f}": float(c) for f, c in zip(self.features, r.centrality)})
            out.append(row)
        return out


def community_profiles(
    partition: Partition,
    dataset: Dataset,
    intra_graphs: Mapping[str, IntraExpeditionGraph],
    E: MultiplexGraph | None = None,
    *,
    include_hired: bool = True,
    centrality_of_mean_graph: bool = False,
) -> CommunityProfile:
    """Mean success rate, factor values and feature centralities per
    community.

    Centralities are averaged over the expeditions of a community, or with
    ``centrality_of_mean_graph`` taken from the community's mean graph.
    """
    ids = partition.expedition_ids
    success = np.array([success_rate(e, dataset, include_hired=include_hired) for e in ids])
    values = {}
    for kind in FACTOR_LAYERS:
        v = E.values.get(kind) if E is not None else None
        values[kind] = v if v is not None else layer_values(dataset, kind, ids)
    graphs = [normalize_by_size(intra_graphs[e]) for e in ids]
    features = graphs[0].feature_order

    def centrality(g) -> np.ndarray:
        try:
            return eigenvector_centrality(g).values
        except DegenerateGraphError:
            return np.zeros(len(features))

    per_exp = None if centrality_of_mean_graph else np.array([centrality(g) for g in graphs])

    rows = []
    for c in range(partition.n_communities):
        idx = np.flatnonzero(partition.labels == c)
        means = {}
        for kind in FACTOR_LAYERS:
            v = values[kind][idx]
            v = v[~np.isnan(v)]
            means[kind] = float(v.mean()) if len(v) else float("nan")
        if centrality_of_mean_graph:
            cent = centrality(aggregate_group([graphs[i] for i in idx]))
        else:
            cent = per_exp[idx].mean(axis=0)
        rows.append(CommunityRow(c, len(idx), float(success[idx].mean()), means, cent))
    rows.sort(key=lambda r: (r.success_rate, r.label))
    return CommunityProfile(tuple(rows), tuple(features))
