"""Five-layer expedition similarity multiplex and its aggregation."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .bipartite import IntraExpeditionGraph, normalize_by_size
from .graphdist import normalize_unit, pairwise_distances, to_similarity
from .records import Dataset

logger = logging.getLogger(__name__)


class LayerKind(str, Enum):
    DAYS_TO_SUMMIT = "days_to_summit"
    CAMPS_ABOVE_BC = "camps_above_bc"
    EXPEDITION_SIZE = "expedition_size"
    MEMBER_HIRED_RATIO = "member_hired_ratio"
    INTRA_EXPEDITION = "intra_expedition_graph"


FACTOR_LAYERS = (
    LayerKind.DAYS_TO_SUMMIT,
    LayerKind.CAMPS_ABOVE_BC,
    LayerKind.EXPEDITION_SIZE,
    LayerKind.MEMBER_HIRED_RATIO,
)
REPORT_ORDER = (
    LayerKind.DAYS_TO_SUMMIT,
    LayerKind.CAMPS_ABOVE_BC,
    LayerKind.MEMBER_HIRED_RATIO,
    LayerKind.EXPEDITION_SIZE,
    LayerKind.INTRA_EXPEDITION,
)


@dataclass(frozen=True)
class MultiplexGraph:
    expedition_ids: tuple[str, ...]
    layers: dict[LayerKind, np.ndarray]
    layer_means: dict[LayerKind, float | None]
    values: dict[LayerKind, np.ndarray]  # raw factor values; nan = undefined
    distance_degenerate: bool = False

    def to_json(self) -> dict:
        layers = {}
        for kind in REPORT_ORDER:
            A = self.layers[kind]
            i, j = np.nonzero(np.triu(A, 1))
            layers[kind.value] = [[int(a), int(b), float(A[a, b])] for a, b in zip(i, j)]
        return {
            "expedition_ids": list(self.expedition_ids),
            "layer_means": {k.value: self.layer_means[k] for k in REPORT_ORDER},
            "layers": layers,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MultiplexGraph":
        ids = tuple(data["expedition_ids"])
        n = len(ids)
        layers = {}
        for kind in REPORT_ORDER:
            A = np.zeros((n, n))
            for i, j, w in data["layers"][kind.value]:
                A[i, j] = A[j, i] = w
            layers[kind] = A
        means = {LayerKind(k): v for k, v in data["layer_means"].items()}
        return cls(ids, layers, means, {})


@dataclass(frozen=True)
class SimilarityGraph:
    matrix: np.ndarray
    weights: tuple[float, ...]
    expedition_ids: tuple[str, ...]


def layer_values(dataset: Dataset, kind: LayerKind, expedition_ids: Sequence[str] | None = None) -> np.ndarray:
    """Raw value of an expedition-wide factor for each expedition.

    The member/hired ratio is ``nan`` for expeditions without hired
    personnel.
    """
    kind = LayerKind(kind)
    ids = list(expedition_ids) if expedition_ids is not None else sorted(dataset.expeditions)
    out = np.empty(len(ids))
    for k, eid in enumerate(ids):
        e = dataset.expeditions[eid]
        if kind is LayerKind.DAYS_TO_SUMMIT:
            out[k] = e.days_to_summit
        elif kind is LayerKind.CAMPS_ABOVE_BC:
            out[k] = e.camps_above_bc
        elif kind is LayerKind.EXPEDITION_SIZE:
            out[k] = e.n_members + e.n_hired
        elif kind is LayerKind.MEMBER_HIRED_RATIO:
            if e.n_hired == 0:
                logger.info("expedition %s has no hired personnel; ratio undefined", eid)
                out[k] = np.nan
            else:
                out[k] = e.n_members / e.n_hired
        else:
            raise ValueError(f"{kind} has no scalar values")
    return out


def layer_mean(values: np.ndarray) -> float:
    defined = values[~np.isnan(values)]
    return float(defined.mean()) if len(defined) else float("nan")


def threshold_layer(values, mean: float | None = None) -> np.ndarray:
    """Binary adjacency linking every pair whose values both exceed the mean.

    Undefined (``nan``) values never exceed the mean.  No self-loops.
    """
    v = np.asarray(values, dtype=float)
    mu = layer_mean(v) if mean is None else mean
    above = v > mu  # nan compares False
    A = np.outer(above, above).astype(np.int8)
    np.fill_diagonal(A, 0)
    return A


def build_multiplex(
    dataset: Dataset,
    intra_graphs: Mapping[str, IntraExpeditionGraph],
    *,
    as_distance: bool = False,
) -> MultiplexGraph:
    """Four threshold layers plus the intra-expedition similarity layer.

    Nodes are the dataset's expeditions in sorted id order; each needs an
    entry in ``intra_graphs``.
    """
    ids = tuple(sorted(dataset.expeditions))
    if len(ids) < 2:
        raise ValueError("a multiplex needs at least two expeditions")
    missing = [e for e in ids if e not in intra_graphs]
    if missing:
        raise KeyError(f"no intra-expedition graph for {missing[:5]}")

    layers, means, values = {}, {}, {}
    for kind in FACTOR_LAYERS:
        v = layer_values(dataset, kind, ids)
        mu = layer_mean(v)
        values[kind] = v
        means[kind] = mu
        layers[kind] = threshold_layer(v, mu)

    graphs = [normalize_by_size(intra_graphs[e]) for e in ids]
    D = normalize_unit(pairwise_distances(graphs, ids))
    if D.degenerate:
        logger.warning("all intra-expedition graphs are identical")
    layers[LayerKind.INTRA_EXPEDITION] = to_similarity(D, as_distance=as_distance)
    means[LayerKind.INTRA_EXPEDITION] = None
    return MultiplexGraph(ids, layers, means, values, D.degenerate)


def aggregate(E: MultiplexGraph, weights=None) -> SimilarityGraph:
    """Weighted sum of layers; uniform weights by default.

    ``weights`` is a sequence in :class:`LayerKind` order or a mapping from
    kind to weight.  Weights must be nonnegative and sum to one.
    """
    kinds = list(LayerKind)
    if weights is None:
        w = np.full(len(kinds), 1.0 / len(kinds))
    elif isinstance(weights, Mapping):
        w = np.array([float(weights.get(k, weights.get(k.value, 0.0))) for k in kinds])
    else:
        w = np.asarray(weights, dtype=float)
    if w.shape != (len(kinds),):
        raise ValueError(f"expected {len(kinds)} layer weights, got {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("layer weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"layer weights must sum to 1, got {w.sum()}")
    S = sum(wk * E.layers[k].astype(float) for wk, k in zip(w, kinds))
    return SimilarityGraph(S, tuple(float(x) for x in w), E.expedition_ids)
