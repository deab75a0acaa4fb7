"""Graph-to-scalar regression, Pearson correlation and t-test p-values."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bipartite import IntraExpeditionGraph, normalize_by_size
from .multiplex import REPORT_ORDER, LayerKind, MultiplexGraph, layer_values
from .records import Dataset, success_rate

SYMMETRY_TOL = 1e-12


class ConditioningWarning(UserWarning):
    pass


class UndefinedCorrelationError(ValueError):
    pass


def vectorize_graph(graph, *, include_diagonal: bool = True) -> np.ndarray:
    """Upper triangle of a symmetric matrix, row-major.

    With the diagonal a 6x6 graph gives 21 values; without, 15.
    """
    A = np.asarray(graph.matrix if isinstance(graph, IntraExpeditionGraph) else graph, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.any(np.abs(A - A.T) > SYMMETRY_TOL):
        raise ValueError("matrix is not symmetric")
    return A[np.triu_indices(A.shape[0], 0 if include_diagonal else 1)]


@dataclass(frozen=True)
class RegressionProjection:
    coefficients: np.ndarray
    intercept: float
    fit_residual: float
    include_diagonal: bool = True
    rank: int = 0

    def to_json(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "fit_residual": self.fit_residual,
            "include_diagonal": self.include_diagonal,
            "rank": self.rank,
        }


def _design(graphs: Sequence, include_diagonal: bool) -> np.ndarray:
    return np.array([vectorize_graph(g, include_diagonal=include_diagonal) for g in graphs])


def fit_projection(graphs: Sequence, success_rates: Sequence[float], *, include_diagonal: bool = True) -> RegressionProjection:
    """Least-squares linear map from vectorized graphs to success rates.

    The intercept is handled by centering, and the coefficients are the
    minimum-norm solution of the centered problem (SVD-based ``lstsq``).
    Constant targets therefore give zero coefficients, and rank-deficient
    designs give a warning rather than an error.
    """
    X = _design(graphs, include_diagonal)
    y = np.asarray(success_rates, dtype=float)
    if X.shape[0] != len(y):
        raise ValueError("graphs and success rates differ in length")
    if len(y) == 0:
        raise ValueError("no samples")
    n, p = X.shape
    if n < p + 2:
        warnings.warn(f"{n} samples for {p + 1} unknowns; minimum-norm solution", ConditioningWarning, stacklevel=2)
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    coef, _, rank, _ = np.linalg.lstsq(Xc, yc, rcond=None)
    if rank < min(n - 1, p):
        warnings.warn(f"design has rank {rank} < {min(n - 1, p)}", ConditioningWarning, stacklevel=2)
    intercept = float(y_mean - x_mean @ coef)
    resid = X @ coef + intercept - y
    rmse = float(np.sqrt(np.mean(resid**2)))
    return RegressionProjection(coef, intercept, rmse, include_diagonal, int(rank))


def project(graph, proj: RegressionProjection) -> float:
    return float(vectorize_graph(graph, include_diagonal=proj.include_diagonal) @ proj.coefficients + proj.intercept)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 samples")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    r = (dx @ dy) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def _betacf(a: float, b: float, x: float, max_iter: int = 10_000, eps: float = 1e-16) -> float:
    # modified Lentz continued fraction for the incomplete beta function
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def p_value(r: float, n: int) -> float:
    """Two-sided p-value of a Pearson correlation under the t-test with
    ``n - 2`` degrees of freedom."""
    if n < 3:
        raise ValueError("need n >= 3")
    if abs(r) > 1.0:
        raise ValueError("|r| must not exceed 1")
    if abs(r) == 1.0:
        return 0.0
    if r == 0.0:
        return 1.0
    df = n - 2.0
    # P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2) and df/(df+t^2) = 1 - r^2
    x = (1.0 - r) * (1.0 + r)
    return min(1.0, max(0.0, betainc(df / 2.0, 0.5, x)))


@dataclass(frozen=True)
class LayerCorrelation:
    layer: LayerKind
    r: float
    p: float
    n: int


@dataclass(frozen=True)
class CorrelationReport:
    rows: tuple[LayerCorrelation, ...]
    eta: dict[str, float] = field(default_factory=dict)

    def by_layer(self) -> dict[LayerKind, LayerCorrelation]:
        return {row.layer: row for row in self.rows}

    def to_rows(self) -> list[dict]:
        return [{"layer": c.layer.value, "r": c.r, "p": c.p, "n": c.n} for c in self.rows]


def layer_success_correlations(
    dataset: Dataset,
    E: MultiplexGraph,
    proj: RegressionProjection,
    intra_graphs: Mapping[str, IntraExpeditionGraph],
    *,
    include_hired: bool = True,
) -> CorrelationReport:
    """Pearson r and p between each layer and expedition success rate.

    Factor layers correlate their raw values (expeditions with an undefined
    value are dropped for that layer); the intra-expedition layer
    correlates the regression projection of each expedition's graph.
    """
    ids = E.expedition_ids
    y = np.array([success_rate(e, dataset, include_hired=include_hired) for e in ids])
    eta = {e: project(normalize_by_size(intra_graphs[e]), proj) for e in ids}
    rows = []
    for kind in REPORT_ORDER:
        if kind is LayerKind.INTRA_EXPEDITION:
            x = np.array([eta[e] for e in ids])
        else:
            x = E.values.get(kind)
            if x is None:
                x = layer_values(dataset, kind, ids)
        ok = ~np.isnan(x)
        r = pearson(x[ok], y[ok])
        rows.append(LayerCorrelation(kind, r, p_value(r, int(ok.sum())), int(ok.sum())))
    return CorrelationReport(tuple(rows), eta)
