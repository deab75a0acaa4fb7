"""Eigenvector centrality of feature graphs and summit/no-summit comparisons."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import FEATURES
from .bipartite import BipartiteGraph, IntraExpeditionGraph, normalize_by_size, project
from .records import Dataset

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12


class DegenerateGraphError(ValueError):
    pass


@dataclass(frozen=True)
class CentralityVector:
    values: np.ndarray
    converged: bool
    iterations: int


def _as_matrix(graph) -> np.ndarray:
    if isinstance(graph, IntraExpeditionGraph):
        graph = graph.matrix
    return np.asarray(graph, dtype=float)


def eigenvector_centrality(graph, tol: float = 1e-10, max_iter: int = 100_000) -> CentralityVector:
    """Perron vector of a symmetric nonnegative matrix by power iteration.

    The matrix is scaled by its largest entry and shifted by the identity
    before iterating.  Neither changes the eigenvectors, but the shift keeps
    bipartite-like graphs (eigenvalues ``+l`` and ``-l``) from oscillating
    and the scaling makes the iterate sequence independent of overall
    weight scale.  Iteration starts from the uniform vector and stops when
    successive L2-normalized iterates differ by less than ``tol``.
    """
    A = _as_matrix(graph)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.any(np.abs(A - A.T) > SYMMETRY_TOL):
        raise ValueError("matrix is not symmetric")
    if np.any(A < 0):
        raise ValueError("matrix has negative entries")
    top = A.max()
    if top <= 0:
        raise DegenerateGraphError("all-zero graph has no eigenvector centrality")
    A = (A + A.T) / (2.0 * top)

    n = A.shape[0]
    x = np.full(n, 1.0 / np.sqrt(n))
    for it in range(1, max_iter + 1):
        y = A @ x + x
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) < tol:
            return CentralityVector(y, True, it)
        x = y
    logger.warning("power iteration did not converge in %d iterations", max_iter)
    return CentralityVector(x, False, max_iter)


def split_by_outcome(
    dataset: Dataset,
    bipartites: Mapping[str, BipartiteGraph] | Sequence[BipartiteGraph],
    min_climbers: int = 2,
) -> tuple[list[IntraExpeditionGraph], list[IntraExpeditionGraph]]:
    """Project summiters and non-summiters of each expedition separately.

    Returns size-normalized graphs; a side with fewer than ``min_climbers``
    rows contributes nothing for that expedition.
    """
    if isinstance(bipartites, Mapping):
        bipartites = [bipartites[k] for k in sorted(bipartites)]
    success, nosummit = [], []
    for P in bipartites:
        summited = np.array(
            [dataset.climbers[(cid, P.expedition_id)].summited for cid in P.climber_ids], dtype=bool
        )
        for mask, bucket in ((summited, success), (~summited, nosummit)):
            if mask.sum() >= min_climbers:
                bucket.append(normalize_by_size(project(P.rows(mask))))
    return success, nosummit


@dataclass(frozen=True)
class GroupCentralityTable:
    features: tuple[str, ...]
    mean_success: np.ndarray
    stderr_success: np.ndarray
    mean_nosummit: np.ndarray
    stderr_nosummit: np.ndarray
    n_success: int
    n_nosummit: int

    @property
    def difference(self) -> np.ndarray:
        return self.mean_success - self.mean_nosummit

    def order(self) -> list[int]:
        """Feature indices by ascending success minus no-summit mean."""
        return sorted(range(len(self.features)), key=lambda k: (self.difference[k], k))

    def rows(self) -> list[dict]:
        return [
            {
                "feature": self.features[k],
                "mean_success": float(self.mean_success[k]),
                "stderr_success": float(self.stderr_success[k]),
                "mean_nosummit": float(self.mean_nosummit[k]),
                "stderr_nosummit": float(self.stderr_nosummit[k]),
            }
            for k in self.order()
        ]


def _centralities(graphs: Sequence) -> np.ndarray:
    out = []
    for g in graphs:
        try:
            out.append(eigenvector_centrality(g).values)
        except DegenerateGraphError:
            logger.info("skipping all-zero group graph %s", getattr(g, "expedition_id", ""))
    return np.array(out)


def _mean_stderr(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = values.mean(axis=0)
    if len(values) < 2:
        return mean, np.zeros_like(mean)
    return mean, values.std(axis=0, ddof=1) / np.sqrt(len(values))


def group_centrality(success_graphs: Sequence, nosummit_graphs: Sequence) -> GroupCentralityTable:
    """Mean and standard error of feature centralities per outcome group.

    Standard error uses the sample standard deviation; a group of one graph
    has standard error zero.  All-zero graphs carry no centrality and are
    skipped.
    """
    cs, cn = _centralities(success_graphs), _centralities(nosummit_graphs)
    if len(cs) == 0 or len(cn) == 0:
        raise ValueError("both outcome groups need at least one non-degenerate graph")
    ms, ss = _mean_stderr(cs)
    mn, sn = _mean_stderr(cn)
    first = success_graphs[0]
    features = first.feature_order if isinstance(first, IntraExpeditionGraph) else FEATURES[: cs.shape[1]]
    return GroupCentralityTable(tuple(features), ms, ss, mn, sn, len(cs), len(cn))


def aggregate_group(graphs: Sequence[IntraExpeditionGraph]) -> IntraExpeditionGraph:
    """Entrywise mean of size-normalized graphs."""
    if len(graphs) == 0:
        raise ValueError("cannot aggregate an empty group")
    graphs = [normalize_by_size(g) for g in graphs]
    mean = np.mean([g.matrix for g in graphs], axis=0)
    return IntraExpeditionGraph(mean, sum(g.m for g in graphs), True, "", graphs[0].feature_order)
