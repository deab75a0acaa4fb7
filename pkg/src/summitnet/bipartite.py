"""Climber-feature bipartite networks and their projection onto features."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import FEATURES
from .records import ClimberRecord, Dataset, ExpeditionRecord, Sex, experience_above_8000

N_FEATURES = len(FEATURES)
REFERENCE_MEDIAN_AGE = 40.0


class BinarizationError(ValueError):
    def __init__(self, climber_id: str, field_name: str):
        super().__init__(f"climber {climber_id!r}: missing {field_name}")
        self.climber_id = climber_id
        self.field_name = field_name


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class BipartiteGraph:
    matrix: np.ndarray  # m x 6, entries 0/1
    climber_ids: tuple[str, ...]
    expedition_id: str = ""
    excluded: tuple[tuple[str, str], ...] = ()  # (climber_id, reason)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def rows(self, mask: np.ndarray) -> "BipartiteGraph":
        ids = tuple(c for c, keep in zip(self.climber_ids, mask) if keep)
        return BipartiteGraph(self.matrix[mask], ids, self.expedition_id)


@dataclass(frozen=True)
class IntraExpeditionGraph:
    matrix: np.ndarray  # f x f symmetric
    m: int
    normalized: bool = False
    expedition_id: str = ""
    feature_order: tuple[str, ...] = field(default=FEATURES)

    def to_json(self) -> dict:
        return {
            "expedition_id": self.expedition_id,
            "m": self.m,
            "normalized": self.normalized,
            "feature_order": list(self.feature_order),
            "matrix": self.matrix.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "IntraExpeditionGraph":
        return cls(
            matrix=np.asarray(data["matrix"], dtype=float),
            m=int(data["m"]),
            normalized=bool(data.get("normalized", False)),
            expedition_id=data.get("expedition_id", ""),
            feature_order=tuple(data.get("feature_order", FEATURES)),
        )


def median_age(climbers: Iterable[ClimberRecord], default: float = REFERENCE_MEDIAN_AGE) -> float:
    ages = [c.age for c in climbers if c.age is not None]
    return float(statistics.median(ages)) if ages else default


def binarize(
    climber: ClimberRecord,
    median_age: float,
    experience_count: int,
    *,
    age_below: bool = True,
) -> np.ndarray:
    """Six-bit feature vector in :data:`summitnet.FEATURES` order.

    With ``age_below`` the age bit is set for climbers strictly younger than
    the median; otherwise for climbers strictly older.
    """
    for name in ("age", "o2_ascent", "o2_descent", "hired"):
        if getattr(climber, name) is None:
            raise BinarizationError(climber.climber_id, name)
    if age_below:
        young = climber.age < median_age
    else:
        young = climber.age > median_age
    return np.array(
        [
            young,
            climber.sex is Sex.MALE,
            climber.o2_ascent,
            climber.o2_descent,
            climber.hired,
            experience_count >= 1,
        ],
        dtype=np.int64,
    )


def build_bipartite(
    expedition: ExpeditionRecord | str,
    dataset: Dataset,
    median_age: float,
    *,
    history: Dataset | None = None,
    include_hired: bool = True,
    age_below: bool = True,
) -> BipartiteGraph:
    """Bipartite matrix for the binarizable members of one expedition.

    ``history`` is the dataset used to count prior 8000 m climbs; pass the
    unfiltered dataset so that climbs on other peaks count.  Rows follow
    the expedition's member list, which is sorted by climber id.

    Raises:
        ConstructionError: if no member can be binarized.
    """
    eid = expedition if isinstance(expedition, str) else expedition.expedition_id
    exp = dataset.expeditions[eid]
    history = history if history is not None else dataset
    rows, ids, excluded = [], [], []
    for climber in dataset.members_of(eid):
        if not include_hired and climber.hired:
            excluded.append((climber.climber_id, "hired personnel excluded"))
            continue
        if climber.missing_fields:
            excluded.append((climber.climber_id, "missing " + ", ".join(climber.missing_fields)))
            continue
        exp_count = experience_above_8000(climber.climber_id, history, exp.year)
        rows.append(binarize(climber, median_age, exp_count, age_below=age_below))
        ids.append(climber.climber_id)
    if not rows:
        raise ConstructionError(f"expedition {eid!r} has no binarizable members")
    return BipartiteGraph(np.vstack(rows), tuple(ids), eid, tuple(excluded))


def project(P: BipartiteGraph | np.ndarray) -> IntraExpeditionGraph:
    """Feature co-occurrence graph ``P.T @ P``.

    Entry ``(a, b)`` counts climbers holding both feature ``a`` and ``b``.
    """
    if isinstance(P, BipartiteGraph):
        mat, eid = P.matrix, P.expedition_id
    else:
        mat, eid = np.asarray(P), ""
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise ConstructionError("bipartite matrix must be nonempty and 2-D")
    mat = mat.astype(np.int64)
    order = FEATURES if mat.shape[1] == N_FEATURES else tuple(f"f{i}" for i in range(mat.shape[1]))
    return IntraExpeditionGraph(mat.T @ mat, mat.shape[0], False, eid, order)


def normalize_by_size(graph: IntraExpeditionGraph) -> IntraExpeditionGraph:
    if graph.normalized:
        return graph
    if graph.m < 1:
        raise ConstructionError("cannot normalize a graph with no climbers")
    return IntraExpeditionGraph(
        graph.matrix / graph.m, graph.m, True, graph.expedition_id, graph.feature_order
    )
