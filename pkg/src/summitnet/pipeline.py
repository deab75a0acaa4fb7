"""End-to-end orchestration: configuration, stages and the report bundle."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import FEATURES, __version__
from .bipartite import ConstructionError, IntraExpeditionGraph, build_bipartite, median_age, normalize_by_size, project
from .centrality import GroupCentralityTable, aggregate_group, group_centrality, split_by_outcome
from .community import CommunityProfile, Partition, community_profiles, louvain
from .graphdist import normalize_unit, pairwise_distances
from .multiplex import MultiplexGraph, SimilarityGraph, aggregate, build_multiplex
from .partners import PartnerEffectTable, partner_effect
from .records import (
    Dataset,
    FilterCriteria,
    FilterEntry,
    dataset_from_dict,
    dataset_to_dict,
    filter_expeditions,
    load_dataset,
    success_rate,
)
from .stats import CorrelationReport, RegressionProjection, fit_projection, layer_success_correlations

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

PUBLISHED_CORRELATIONS = {
    "days_to_summit": (-0.45, 5.5e-10),
    "camps_above_bc": (-0.36, 1.15e-6),
    "member_hired_ratio": (-0.12, 0.1),
    "expedition_size": (0.57, 5.7e-16),
    "intra_expedition_graph": (0.84, 8.9e-47),
}
PUBLISHED_COMMUNITY_SUCCESS = (0.28, 0.32, 0.68)


class ConfigError(ValueError):
    """Invalid configuration or unreadable input; maps to exit status 2."""


class InputError(ConfigError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    expeditions: str = "expeditions.csv"
    members: str = "members.csv"
    code_map: str | None = None
    dataset_cache: str | None = None
    output_dir: str = "report"
    peak_id: str | None = "EVER"
    min_size: int = 12
    exclude_death: bool = True
    median_age: float | None = None
    layer_weights: tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)
    seed: int = 0
    resolution: float = 1.0
    min_climbs: int = 15
    bin_width: int = 5
    max_climbs: int = 40
    age_below_median: bool = True
    similarity_layer: bool = True
    regression_diagonal: bool = True
    include_hired: bool = True
    success_include_hired: bool = True
    pooled_partner_ratio: bool = False
    centrality_of_mean_graph: bool = False
    real_data: bool = False

    # not part of the analysis identity
    _LOCATION_KEYS = ("expeditions", "members", "code_map", "dataset_cache", "output_dir")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        cfg = cls()
        for key, raw in values.items():
            cfg.set(key, raw)
        return cfg

    def set(self, key: str, raw: Any) -> None:
        key = key.strip().replace("-", "_")
        fields = {f.name: f for f in dataclasses.fields(self)}
        if key not in fields or key.startswith("_"):
            raise ConfigError(f"unknown configuration key {key!r}")
        setattr(self, key, _coerce(key, fields[key].type, raw))

    def analysis_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in self._LOCATION_KEYS:
            d.pop(k, None)
        d["layer_weights"] = list(self.layer_weights)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.analysis_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


_NONE = {"", "none", "auto", "null"}


def _coerce(key: str, typ: str, raw: Any):
    if not isinstance(raw, str):
        return tuple(raw) if key == "layer_weights" else raw
    text = raw.strip()
    try:
        if key == "layer_weights":
            return tuple(float(x) for x in text.replace(";", ",").split(","))
        if typ.startswith("bool"):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "None" in typ and text.lower() in _NONE:
            return None
        if typ.startswith("int"):
            return int(text)
        if typ.startswith("float"):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ}") from None


def load_config(path: str | Path) -> dict[str, str]:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        if f.name.startswith("_"):
            continue
        v = getattr(cfg, f.name)
        if v is None:
            v = "auto" if f.name == "median_age" else "none"
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# stages


def ingest(cfg: RunConfig) -> Dataset:
    """Load the full linked dataset from CSVs or an ingest cache."""
    if cfg.dataset_cache:
        path = Path(cfg.dataset_cache)
        if not path.is_file():
            raise InputError(f"dataset cache not found: {path}")
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("schema_version") != SCHEMA_VERSION:
            raise InputError(f"{path}: unsupported schema_version {data.get('schema_version')!r}")
        return dataset_from_dict(data["dataset"])
    for p in (cfg.expeditions, cfg.members) + ((cfg.code_map,) if cfg.code_map else ()):
        if not Path(p).is_file():
            raise InputError(f"input file not found: {p}")
    return load_dataset(cfg.expeditions, cfg.members, cfg.code_map)


def dataset_hash(dataset: Dataset) -> str:
    data = dataset_to_dict(dataset)
    for key in ("source", "diagnostics", "filter_log"):
        data.pop(key, None)
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()


@dataclass
class Prepared:
    """Filtered dataset with per-expedition graphs."""

    full: Dataset
    dataset: Dataset
    median_age: float
    bipartites: dict
    intra_graphs: dict[str, IntraExpeditionGraph]


def prepare(full: Dataset, cfg: RunConfig) -> Prepared:
    criteria = FilterCriteria(cfg.peak_id, cfg.min_size, cfg.exclude_death)
    filtered = filter_expeditions(full, criteria)
    med = cfg.median_age if cfg.median_age is not None else median_age(filtered.climbers.values())
    bipartites, graphs = {}, {}
    for eid in sorted(filtered.expeditions):
        try:
            P = build_bipartite(
                eid, filtered, med, history=full, include_hired=cfg.include_hired, age_below=cfg.age_below_median
            )
        except ConstructionError as exc:
            filtered.filter_log.append(FilterEntry("expedition", eid, str(exc)))
            continue
        bipartites[eid] = P
        graphs[eid] = normalize_by_size(project(P))
    dropped = set(filtered.expeditions) - set(graphs)
    if dropped:
        filtered = Dataset(
            expeditions={e: x for e, x in filtered.expeditions.items() if e in graphs},
            climbers={k: c for k, c in filtered.climbers.items() if k[1] in graphs},
            code_map=filtered.code_map,
            source=filtered.source,
            filter_log=filtered.filter_log,
            diagnostics=filtered.diagnostics,
        )
    if len(graphs) < 2:
        raise ValueError(f"only {len(graphs)} expeditions survive filtering; need at least 2")
    return Prepared(full, filtered, med, bipartites, graphs)


def stage_partners(full: Dataset, cfg: RunConfig) -> PartnerEffectTable:
    return partner_effect(full, cfg.min_climbs, cfg.bin_width, cfg.max_climbs, pooled=cfg.pooled_partner_ratio)


def stage_centrality(prep: Prepared):
    success, nosummit = split_by_outcome(prep.dataset, prep.bipartites)
    table = group_centrality(success, nosummit)
    return table, aggregate_group(success), aggregate_group(nosummit)


def stage_multiplex(prep: Prepared, cfg: RunConfig) -> MultiplexGraph:
    return build_multiplex(prep.dataset, prep.intra_graphs, as_distance=not cfg.similarity_layer)


def stage_correlate(prep: Prepared, E: MultiplexGraph, cfg: RunConfig) -> tuple[RegressionProjection, CorrelationReport]:
    ids = E.expedition_ids
    y = [success_rate(e, prep.dataset, include_hired=cfg.success_include_hired) for e in ids]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        proj = fit_projection([prep.intra_graphs[e] for e in ids], y, include_diagonal=cfg.regression_diagonal)
    for w in caught:
        logger.warning("regression: %s", w.message)
    report = layer_success_correlations(
        prep.dataset, E, proj, prep.intra_graphs, include_hired=cfg.success_include_hired
    )
    return proj, report


def stage_communities(prep: Prepared, E: MultiplexGraph, cfg: RunConfig) -> tuple[SimilarityGraph, Partition, CommunityProfile]:
    S = aggregate(E, cfg.layer_weights)
    partition = louvain(S.matrix, cfg.seed, cfg.resolution, S.expedition_ids)
    profiles = community_profiles(
        partition,
        prep.dataset,
        prep.intra_graphs,
        E,
        include_hired=cfg.success_include_hired,
        centrality_of_mean_graph=cfg.centrality_of_mean_graph,
    )
    return S, partition, profiles


# ---------------------------------------------------------------------------
# report


@dataclass
class AnalysisReport:
    provenance: dict
    counts: dict
    correlations: CorrelationReport | None = None
    regression: RegressionProjection | None = None
    centrality: GroupCentralityTable | None = None
    group_graphs: tuple[IntraExpeditionGraph, IntraExpeditionGraph] | None = None
    partition: Partition | None = None
    profiles: CommunityProfile | None = None
    partner_effect: PartnerEffectTable | None = None
    multiplex: MultiplexGraph | None = None
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "provenance": self.provenance,
            "counts": self.counts,
        }
        if self.correlations is not None:
            out["correlations"] = self.correlations.to_rows()
        if self.regression is not None:
            out["regression"] = self.regression.to_json()
        if self.centrality is not None:
            out["group_centrality"] = {
                "n_success": self.centrality.n_success,
                "n_nosummit": self.centrality.n_nosummit,
                "rows": self.centrality.rows(),
            }
        if self.partition is not None:
            out["communities"] = {
                "seed": self.partition.seed,
                "resolution": self.partition.resolution,
                "modularity": self.partition.modularity,
                "n_communities": self.partition.n_communities,
                "assignment": self.partition.assignment,
                "profiles": self.profiles.to_rows() if self.profiles is not None else [],
            }
        if self.partner_effect is not None:
            out["partner_effect"] = {"pooled": self.partner_effect.pooled, "rows": self.partner_effect.to_rows()}
        return _clean(out)


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, dict):
        return {str(k.value if hasattr(k, "value") else k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def _provenance(full: Dataset, cfg: RunConfig) -> dict:
    return {
        "tool": "summitnet",
        "tool_version": __version__,
        "config_hash": cfg.hash(),
        "dataset_hash": dataset_hash(full),
        "seeds": {"louvain": cfg.seed},
        "real_data": cfg.real_data,
        "config": cfg.analysis_dict(),
    }


def _counts(prep: Prepared) -> dict:
    return {
        "expeditions_total": len(prep.full.expeditions),
        "participations_total": len(prep.full.climbers),
        "expeditions_analyzed": len(prep.intra_graphs),
        "participations_analyzed": len(prep.dataset.climbers),
        "median_age": prep.median_age,
        "diagnostics": len(prep.full.diagnostics),
        "filter_log_entries": len(prep.dataset.filter_log),
    }


def write_partner_artifacts(out: Path, table: PartnerEffectTable) -> None:
    _write_csv(out / "fig1_partner_effect.csv", table.to_rows())
    (out / "fig1_partner_effect.json").write_text(
        dumps({"pooled": table.pooled, "bins": [f"{lo}-{hi}" for lo, hi in table.bins()], "rows": table.to_rows()}),
        encoding="utf-8",
    )


def write_centrality_artifacts(out: Path, table: GroupCentralityTable, success, nosummit) -> None:
    _write_csv(out / "fig2_centrality.csv", table.rows())
    (out / "fig2_group_graphs.json").write_text(
        dumps({
            "feature_order": list(FEATURES),
            "centrality_rows": table.rows(),
            "success": success.to_json(),
            "nosummit": nosummit.to_json(),
        }),
        encoding="utf-8",
    )


def write_multiplex_artifacts(out: Path, prep: Prepared, E: MultiplexGraph) -> None:
    (out / "multiplex.json").write_text(dumps(E.to_json()), encoding="utf-8")
    (out / "intra_graphs.json").write_text(
        dumps([prep.intra_graphs[e].to_json() for e in E.expedition_ids]), encoding="utf-8"
    )
    D = pairwise_distances([prep.intra_graphs[e] for e in E.expedition_ids], E.expedition_ids)
    with open(out / "distances.csv", "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(normalize_unit(D).to_csv_rows())


def write_correlation_artifacts(out: Path, proj: RegressionProjection, corr: CorrelationReport) -> None:
    _write_csv(out / "fig4_correlations.csv", corr.to_rows())
    (out / "fig4_correlations.json").write_text(dumps(corr.to_rows()), encoding="utf-8")
    (out / "regression.json").write_text(
        dumps({**proj.to_json(), "feature_order": list(FEATURES), "eta": corr.eta}), encoding="utf-8"
    )


def write_community_artifacts(out: Path, partition: Partition, profiles: CommunityProfile) -> None:
    _write_csv(out / "partition.csv", [{"expedition_id": e, "community": c} for e, c in partition.assignment.items()])
    _write_csv(out / "fig5_profiles.csv", profiles.to_rows())
    (out / "fig5_profiles.json").write_text(
        dumps({"modularity": partition.modularity, "seed": partition.seed, "communities": profiles.to_rows()}),
        encoding="utf-8",
    )


def summary_text(report: AnalysisReport) -> str:
    lines = [f"summitnet {__version__} analysis report", ""]
    c = report.counts
    lines.append(
        f"expeditions analyzed: {c['expeditions_analyzed']} of {c['expeditions_total']}; "
        f"median age {c['median_age']:g}"
    )
    if report.correlations is not None:
        lines += ["", "layer correlations with success rate:"]
        for row in report.correlations.rows:
            lines.append(f"  {row.layer.value:<24} r = {row.r:+.3f}  p = {row.p:.3g}  n = {row.n}")
    if report.centrality is not None:
        lines += ["", "feature centrality, summit minus no-summit:"]
        for row in report.centrality.rows():
            lines.append(f"  {row['feature']:<24} {row['mean_success'] - row['mean_nosummit']:+.4f}")
    if report.partition is not None and report.profiles is not None:
        lines += ["", f"communities: {report.partition.n_communities} (Q = {report.partition.modularity:.4f})"]
        for r in report.profiles.rows:
            lines.append(f"  community {r.label}: size {r.size}, success rate {r.success_rate:.3f}")
    if report.partner_effect is not None:
        lines += ["", "repeat-partner rate ratios:"]
        for cell in report.partner_effect.cells:
            ratio = "n/a" if cell.ratio is None else f"{cell.ratio:.3f}"
            lines.append(f"  {cell.bin_label:>6} {cell.category.value:<10} {ratio:>6}  (n = {cell.n_climbers})")
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig, *, write: bool = True) -> AnalysisReport:
    """Run every stage and, with ``write``, emit the artifact bundle into
    ``cfg.output_dir``."""
    full = ingest(cfg)
    prep = prepare(full, cfg)
    partners = stage_partners(full, cfg)
    table, success_graph, nosummit_graph = stage_centrality(prep)
    E = stage_multiplex(prep, cfg)
    proj, corr = stage_correlate(prep, E, cfg)
    _, partition, profiles = stage_communities(prep, E, cfg)
    report = AnalysisReport(
        provenance=_provenance(full, cfg),
        counts=_counts(prep),
        correlations=corr,
        regression=proj,
        centrality=table,
        group_graphs=(success_graph, nosummit_graph),
        partition=partition,
        profiles=profiles,
        partner_effect=partners,
        multiplex=E,
    )
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_partner_artifacts(out, partners)
        write_centrality_artifacts(out, table, success_graph, nosummit_graph)
        write_multiplex_artifacts(out, prep, E)
        write_correlation_artifacts(out, proj, corr)
        write_community_artifacts(out, partition, profiles)
        (out / "report.json").write_text(dumps(report.to_json()), encoding="utf-8")
        (out / "summary.txt").write_text(summary_text(report), encoding="utf-8")
    return report


# ---------------------------------------------------------------------------
# comparison with published values


@dataclass(frozen=True)
class ComparisonRow:
    quantity: str
    published: float
    computed: float | None

    @property
    def abs_diff(self) -> float | None:
        return None if self.computed is None else abs(self.computed - self.published)


@dataclass(frozen=True)
class Comparison:
    rows: tuple[ComparisonRow, ...]
    banner: str | None

    def to_rows(self) -> list[dict]:
        return [
            {"quantity": r.quantity, "published": r.published, "computed": r.computed, "abs_diff": r.abs_diff}
            for r in self.rows
        ]

    def render(self) -> str:
        lines = [self.banner, ""] if self.banner else []
        lines.append(f"{'quantity':<34} {'published':>12} {'computed':>12} {'|diff|':>10}")
        for r in self.rows:
            comp = "n/a" if r.computed is None else f"{r.computed:.4g}"
            diff = "n/a" if r.abs_diff is None else f"{r.abs_diff:.3g}"
            lines.append(f"{r.quantity:<34} {r.published:>12.4g} {comp:>12} {diff:>10}")
        return "\n".join(lines) + "\n"


NOT_PAPER_DATA = "NOTE: not the paper's dataset (report was not produced with real_data = true); differences are not meaningful."


def compare_to_paper(report: AnalysisReport | Mapping) -> Comparison:
    """Side-by-side published vs computed values, without a verdict."""
    data = report.to_json() if isinstance(report, AnalysisReport) else report
    correlations = {row["layer"]: row for row in data.get("correlations") or []}
    profiles = (data.get("communities") or {}).get("profiles") or []
    if not correlations and not profiles:
        raise ValueError("report has no correlations or community profiles to compare")
    rows = []
    for layer, (r_pub, p_pub) in PUBLISHED_CORRELATIONS.items():
        row = correlations.get(layer)
        rows.append(ComparisonRow(f"r[{layer}]", r_pub, None if row is None else row["r"]))
        rows.append(ComparisonRow(f"p[{layer}]", p_pub, None if row is None else row["p"]))
    rates = sorted(p["success_rate"] for p in profiles)
    for k, pub in enumerate(PUBLISHED_COMMUNITY_SUCCESS):
        rows.append(ComparisonRow(f"community_success[{k}]", pub, rates[k] if k < len(rates) else None))
    real = bool((data.get("provenance") or {}).get("real_data"))
    return Comparison(tuple(rows), None if real else NOT_PAPER_DATA)
