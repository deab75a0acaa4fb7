"""Ingestion, validation, filtering and enrichment of expedition records.

Two CSV exports feed the analysis: one row per expedition and one row per
(climber, expedition) participation.  Malformed rows never disappear
silently; they are turned into :class:`Diagnostic` entries that travel with
the parsed records.
"""

from __future__ import annotations

import csv
import io
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Mapping, NamedTuple, Union

logger = logging.getLogger(__name__)

Source = Union[str, Path, IO[str]]

EXPEDITION_COLUMNS = (
    "exp_id",
    "peak_id",
    "peak_height_m",
    "year",
    "days_to_summit",
    "camps_above_bc",
    "n_members",
    "n_hired",
    "any_death",
)
MEMBER_COLUMNS = (
    "climber_id",
    "exp_id",
    "age",
    "sex",
    "nationality",
    "o2_ascent",
    "o2_descent",
    "hired",
    "summited",
    "termination_code",
)
CODE_MAP_COLUMNS = ("termination_code", "cause")

DEATH_ZONE_M = 8000.0
AGE_RANGE = (10, 100)


class SchemaError(ValueError):
    """A CSV source is missing a required column or is unreadable."""


class DuplicateExpeditionError(ValueError):
    pass


class UndefinedRateError(ValueError):
    pass


class UnknownClimberError(KeyError):
    pass


class Sex(str, Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"


class FailureCause(str, Enum):
    SUCCESS = "success"
    ALTITUDE = "altitude"
    LOGISTICS = "logistics"
    FATIGUE = "fatigue"
    ACCIDENT = "accident"
    OTHER = "other"


@dataclass(frozen=True)
class Diagnostic:
    source: str
    row: int | None
    message: str
    field: str | None = None

    def __str__(self) -> str:
        where = self.source if self.row is None else f"{self.source}:{self.row}"
        if self.field:
            where += f" [{self.field}]"
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class FilterEntry:
    kind: str  # "expedition" or "climber"
    record_id: str
    reason: str


@dataclass(frozen=True)
class ClimberRecord:
    climber_id: str
    expedition_id: str
    age: int | None
    sex: Sex
    nationality: str
    o2_ascent: bool | None
    o2_descent: bool | None
    hired: bool | None
    summited: bool
    termination_code: str = ""

    @property
    def key(self) -> tuple[str, str]:
        return (self.climber_id, self.expedition_id)

    @property
    def missing_fields(self) -> tuple[str, ...]:
        """Names of the binarization fields that are absent."""
        names = ("age", "o2_ascent", "o2_descent", "hired")
        return tuple(n for n in names if getattr(self, n) is None)


@dataclass(frozen=True)
class ExpeditionRecord:
    expedition_id: str
    peak_id: str
    peak_height: float
    year: int
    days_to_summit: float
    camps_above_bc: int
    n_members: int
    n_hired: int
    any_death: bool
    members: tuple[str, ...] = ()


class ParseResult(NamedTuple):
    records: list
    diagnostics: list[Diagnostic]


@dataclass
class Dataset:
    """Linked expeditions and climber participations.

    ``climbers`` is keyed by ``(climber_id, expedition_id)``; one climber
    appears once per expedition they joined.
    """

    expeditions: dict[str, ExpeditionRecord]
    climbers: dict[tuple[str, str], ClimberRecord]
    code_map: dict[str, FailureCause]
    source: str = ""
    filter_log: list[FilterEntry] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def members_of(self, expedition_id: str) -> list[ClimberRecord]:
        exp = self.expeditions[expedition_id]
        return [self.climbers[(cid, expedition_id)] for cid in exp.members]

    @cached_property
    def climber_history(self) -> dict[str, list[str]]:
        """climber_id -> expedition ids, ordered by (year, expedition_id)."""
        hist: dict[str, list[str]] = defaultdict(list)
        for cid, eid in self.climbers:
            hist[cid].append(eid)
        for cid, eids in hist.items():
            eids.sort(key=lambda e: (self.expeditions[e].year, e))
        return dict(hist)

    def outcome(self, climber: ClimberRecord) -> FailureCause:
        return climber_outcome(climber, self.code_map)


# ---------------------------------------------------------------------------
# parsing helpers


def _open(source: Source) -> tuple[IO[str], str, bool]:
    if isinstance(source, (str, Path)):
        path = Path(source)
        return open(path, newline="", encoding="utf-8"), str(path), True
    return source, getattr(source, "name", "<stream>"), False


def _reader(source: Source, required: Iterable[str]):
    fh, name, owned = _open(source)
    try:
        text = fh.read()
    finally:
        if owned:
            fh.close()
    reader = csv.DictReader(io.StringIO(text, newline=""))
    header = reader.fieldnames or []
    header = [h.strip() for h in header]
    reader.fieldnames = header
    for col in required:
        if col not in header:
            raise SchemaError(f"{name}: missing required column '{col}'")
    return reader, name


_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}


def _parse_bool(raw: str | None, column: str) -> bool | None:
    value = (raw or "").strip().lower()
    if value == "":
        return None
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"{column}: expected 0/1, got {raw!r}")


def _parse_int(raw: str | None, column: str, *, minimum: int | None = None) -> int | None:
    value = (raw or "").strip()
    if value == "":
        return None
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"{column}: not a number: {raw!r}") from None
    if not number.is_integer():
        raise ValueError(f"{column}: expected an integer, got {raw!r}")
    if minimum is not None and number < minimum:
        raise ValueError(f"{column}: must be >= {minimum}, got {raw!r}")
    return int(number)


def _parse_float(raw: str | None, column: str, *, minimum: float | None = None) -> float | None:
    value = (raw or "").strip()
    if value == "":
        return None
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"{column}: not a number: {raw!r}") from None
    if number != number or number in (float("inf"), float("-inf")):
        raise ValueError(f"{column}: not finite: {raw!r}")
    if minimum is not None and number < minimum:
        raise ValueError(f"{column}: must be >= {minimum}, got {raw!r}")
    return number


def _required(value, column: str):
    if value is None:
        raise ValueError(f"{column}: required value is empty")
    return value


_SEX = {
    "m": Sex.MALE,
    "male": Sex.MALE,
    "f": Sex.FEMALE,
    "female": Sex.FEMALE,
}


def parse_sex(raw: str | None) -> Sex:
    return _SEX.get((raw or "").strip().lower(), Sex.UNKNOWN)


# ---------------------------------------------------------------------------
# operations


def parse_expeditions(source: Source) -> ParseResult:
    """Parse an expeditions CSV into records plus row diagnostics.

    Raises:
        SchemaError: if a required column is absent from the header.
    """
    reader, name = _reader(source, EXPEDITION_COLUMNS)
    records: list[ExpeditionRecord] = []
    diagnostics: list[Diagnostic] = []
    for row_no, row in enumerate(reader, start=2):
        try:
            exp_id = (row["exp_id"] or "").strip()
            if not exp_id:
                raise ValueError("exp_id: required value is empty")
            rec = ExpeditionRecord(
                expedition_id=exp_id,
                peak_id=(row["peak_id"] or "").strip(),
                peak_height=_required(_parse_float(row["peak_height_m"], "peak_height_m", minimum=0), "peak_height_m"),
                year=_required(_parse_int(row["year"], "year"), "year"),
                days_to_summit=_required(_parse_float(row["days_to_summit"], "days_to_summit", minimum=0), "days_to_summit"),
                camps_above_bc=_required(_parse_int(row["camps_above_bc"], "camps_above_bc", minimum=0), "camps_above_bc"),
                n_members=_required(_parse_int(row["n_members"], "n_members", minimum=0), "n_members"),
                n_hired=_required(_parse_int(row["n_hired"], "n_hired", minimum=0), "n_hired"),
                any_death=_required(_parse_bool(row["any_death"], "any_death"), "any_death"),
            )
        except ValueError as exc:
            column = str(exc).split(":", 1)[0]
            diagnostics.append(Diagnostic(name, row_no, str(exc), column))
            continue
        records.append(rec)
    return ParseResult(records, diagnostics)


def parse_members(source: Source) -> ParseResult:
    """Parse a members CSV.

    Age and the oxygen/hired flags are optional; an empty cell becomes
    ``None`` and shows up in :attr:`ClimberRecord.missing_fields`.  Ages
    outside ``AGE_RANGE`` reject the row.
    """
    reader, name = _reader(source, MEMBER_COLUMNS)
    records: list[ClimberRecord] = []
    diagnostics: list[Diagnostic] = []
    for row_no, row in enumerate(reader, start=2):
        try:
            climber_id = (row["climber_id"] or "").strip()
            exp_id = (row["exp_id"] or "").strip()
            if not climber_id:
                raise ValueError("climber_id: required value is empty")
            if not exp_id:
                raise ValueError("exp_id: required value is empty")
            age = _parse_int(row["age"], "age")
            if age is not None and not AGE_RANGE[0] <= age <= AGE_RANGE[1]:
                raise ValueError(f"age: {age} outside [{AGE_RANGE[0]}, {AGE_RANGE[1]}]")
            rec = ClimberRecord(
                climber_id=climber_id,
                expedition_id=exp_id,
                age=age,
                sex=parse_sex(row["sex"]),
                nationality=(row["nationality"] or "").strip(),
                o2_ascent=_parse_bool(row["o2_ascent"], "o2_ascent"),
                o2_descent=_parse_bool(row["o2_descent"], "o2_descent"),
                hired=_parse_bool(row["hired"], "hired"),
                summited=_required(_parse_bool(row["summited"], "summited"), "summited"),
                termination_code=(row["termination_code"] or "").strip(),
            )
        except ValueError as exc:
            column = str(exc).split(":", 1)[0]
            diagnostics.append(Diagnostic(name, row_no, str(exc), column))
            continue
        records.append(rec)
    return ParseResult(records, diagnostics)


def normalize_code(code: str) -> str:
    return re.sub(r"\s+", " ", code.strip().casefold())


def load_code_map(source: Source | None = None) -> dict[str, FailureCause]:
    """Load a termination-code table; ``None`` loads the shipped default."""
    if source is None:
        text = resources.files("summitnet").joinpath("data/code_map.csv").read_text(encoding="utf-8")
        source = io.StringIO(text)
    reader, name = _reader(source, CODE_MAP_COLUMNS)
    mapping: dict[str, FailureCause] = {}
    for row_no, row in enumerate(reader, start=2):
        cause = (row["cause"] or "").strip().lower()
        try:
            mapping[normalize_code(row["termination_code"] or "")] = FailureCause(cause)
        except ValueError:
            raise SchemaError(f"{name}:{row_no}: unknown cause {row['cause']!r}") from None
    return mapping


def classify_failure(termination_code: str, code_map: Mapping[str, FailureCause] | None = None) -> FailureCause:
    """Map a raw termination code onto a :class:`FailureCause`.

    Matching is case- and whitespace-insensitive; anything unmapped is
    ``OTHER``.
    """
    if code_map is None:
        code_map = default_code_map()
    return code_map.get(normalize_code(termination_code), FailureCause.OTHER)


_DEFAULT_MAP: dict[str, FailureCause] | None = None


def default_code_map() -> dict[str, FailureCause]:
    global _DEFAULT_MAP
    if _DEFAULT_MAP is None:
        _DEFAULT_MAP = load_code_map()
    return dict(_DEFAULT_MAP)


def climber_outcome(climber: ClimberRecord, code_map: Mapping[str, FailureCause] | None = None) -> FailureCause:
    """Outcome category of one participation.

    The summit flag wins over the code: a summiter is ``SUCCESS`` whatever the
    code says, and a non-summiter whose code maps to success is ``OTHER``.
    """
    if climber.summited:
        return FailureCause.SUCCESS
    cause = classify_failure(climber.termination_code, code_map)
    return FailureCause.OTHER if cause is FailureCause.SUCCESS else cause


def link_and_validate(
    expeditions: Iterable[ExpeditionRecord],
    climbers: Iterable[ClimberRecord],
    code_map: Mapping[str, FailureCause] | None = None,
    *,
    source: str = "",
    diagnostics: Iterable[Diagnostic] = (),
) -> Dataset:
    """Join climbers to expeditions and populate member lists.

    Raises:
        DuplicateExpeditionError: if two expedition records share an id.
    """
    exps: dict[str, ExpeditionRecord] = {}
    for exp in expeditions:
        if exp.expedition_id in exps:
            raise DuplicateExpeditionError(f"duplicate expedition id {exp.expedition_id!r}")
        exps[exp.expedition_id] = exp

    diags = list(diagnostics)
    linked: dict[tuple[str, str], ClimberRecord] = {}
    members: dict[str, list[str]] = defaultdict(list)
    for c in climbers:
        if c.expedition_id not in exps:
            diags.append(Diagnostic("link", None, f"climber {c.climber_id!r} references unknown expedition {c.expedition_id!r}"))
            continue
        if c.key in linked:
            diags.append(Diagnostic("link", None, f"duplicate participation {c.climber_id!r} in {c.expedition_id!r}"))
            continue
        linked[c.key] = c
        members[c.expedition_id].append(c.climber_id)

    for eid, exp in exps.items():
        exps[eid] = replace(exp, members=tuple(sorted(members.get(eid, ()))))

    return Dataset(
        expeditions=exps,
        climbers=linked,
        code_map=dict(code_map) if code_map is not None else default_code_map(),
        source=source,
        diagnostics=diags,
    )


def load_dataset(expeditions_csv: Source, members_csv: Source, code_map_csv: Source | None = None) -> Dataset:
    exps, exp_diags = parse_expeditions(expeditions_csv)
    climbers, mem_diags = parse_members(members_csv)
    code_map = load_code_map(code_map_csv)
    names = [str(s) for s in (expeditions_csv, members_csv) if isinstance(s, (str, Path))]
    return link_and_validate(
        exps, climbers, code_map, source=", ".join(names), diagnostics=exp_diags + mem_diags
    )


@dataclass(frozen=True)
class FilterCriteria:
    peak_id: str | None = "EVER"
    min_size: int = 12
    exclude_death: bool = True


def filter_expeditions(dataset: Dataset, criteria: FilterCriteria = FilterCriteria()) -> Dataset:
    """Keep expeditions on ``peak_id`` with at least ``min_size`` listed
    members and, optionally, no deaths.

    Climber rows of dropped expeditions are dropped too.  Each exclusion is
    appended to the returned dataset's filter log.
    """
    kept: dict[str, ExpeditionRecord] = {}
    log = list(dataset.filter_log)
    for eid, exp in dataset.expeditions.items():
        reason = None
        if criteria.peak_id is not None and exp.peak_id != criteria.peak_id:
            reason = f"peak {exp.peak_id!r} != {criteria.peak_id!r}"
        elif len(exp.members) < criteria.min_size:
            reason = f"{len(exp.members)} members < {criteria.min_size}"
        elif criteria.exclude_death and exp.any_death:
            reason = "expedition recorded a death"
        if reason is None:
            kept[eid] = exp
        else:
            log.append(FilterEntry("expedition", eid, reason))

    climbers = {}
    for key, c in dataset.climbers.items():
        if c.expedition_id in kept:
            climbers[key] = c
        else:
            log.append(FilterEntry("climber", f"{key[0]}@{key[1]}", "expedition excluded"))
    return Dataset(
        expeditions=kept,
        climbers=climbers,
        code_map=dataset.code_map,
        source=dataset.source,
        filter_log=log,
        diagnostics=list(dataset.diagnostics),
    )


def success_rate(expedition: ExpeditionRecord | str, dataset: Dataset, *, include_hired: bool = True) -> float:
    """Fraction of listed members that summited."""
    eid = expedition if isinstance(expedition, str) else expedition.expedition_id
    members = dataset.members_of(eid)
    if not include_hired:
        members = [c for c in members if not c.hired]
    if not members:
        raise UndefinedRateError(f"expedition {eid!r} has no members")
    return sum(c.summited for c in members) / len(members)


def experience_above_8000(climber_id: str, dataset: Dataset, before_year: int) -> int:
    """Number of expeditions on peaks of 8000 m or more joined by the
    climber in years strictly before ``before_year``."""
    try:
        history = dataset.climber_history[climber_id]
    except KeyError:
        raise UnknownClimberError(climber_id) from None
    count = 0
    for eid in history:
        exp = dataset.expeditions[eid]
        if exp.year < before_year and exp.peak_height >= DEATH_ZONE_M:
            count += 1
    return count


# ---------------------------------------------------------------------------
# serialization


def dataset_to_dict(dataset: Dataset) -> dict:
    return {
        "source": dataset.source,
        "expeditions": [
            {
                "expedition_id": e.expedition_id,
                "peak_id": e.peak_id,
                "peak_height": e.peak_height,
                "year": e.year,
                "days_to_summit": e.days_to_summit,
                "camps_above_bc": e.camps_above_bc,
                "n_members": e.n_members,
                "n_hired": e.n_hired,
                "any_death": e.any_death,
                "members": list(e.members),
            }
            for e in dataset.expeditions.values()
        ],
        "climbers": [
            {
                "climber_id": c.climber_id,
                "expedition_id": c.expedition_id,
                "age": c.age,
                "sex": c.sex.value,
                "nationality": c.nationality,
                "o2_ascent": c.o2_ascent,
                "o2_descent": c.o2_descent,
                "hired": c.hired,
                "summited": c.summited,
                "termination_code": c.termination_code,
            }
            for c in dataset.climbers.values()
        ],
        "code_map": {k: v.value for k, v in dataset.code_map.items()},
        "filter_log": [[f.kind, f.record_id, f.reason] for f in dataset.filter_log],
        "diagnostics": [str(d) for d in dataset.diagnostics],
    }


def dataset_from_dict(data: Mapping) -> Dataset:
    exps = {}
    for e in data["expeditions"]:
        e = dict(e)
        e["members"] = tuple(e["members"])
        exps[e["expedition_id"]] = ExpeditionRecord(**e)
    climbers = {}
    for c in data["climbers"]:
        c = dict(c)
        c["sex"] = Sex(c["sex"])
        rec = ClimberRecord(**c)
        climbers[rec.key] = rec
    return Dataset(
        expeditions=exps,
        climbers=climbers,
        code_map={k: FailureCause(v) for k, v in data["code_map"].items()},
        source=data.get("source", ""),
        filter_log=[FilterEntry(*f) for f in data.get("filter_log", [])],
        diagnostics=[Diagnostic("cache", None, d) for d in data.get("diagnostics", [])],
    )
