"""Repeat-partner detection and partner effect on outcome rates."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import groupby
from typing import Iterable

from .records import Dataset, FailureCause

CATEGORIES = (
    FailureCause.SUCCESS,
    FailureCause.ALTITUDE,
    FailureCause.LOGISTICS,
    FailureCause.FATIGUE,
    FailureCause.ACCIDENT,
)


def repeat_partner_flags(dataset: Dataset) -> dict[tuple[str, str], bool]:
    """Flag each (climber, expedition) where some co-member already shared
    an expedition with the climber in a strictly earlier year."""
    partners: dict[str, set[str]] = defaultdict(set)
    flags: dict[tuple[str, str], bool] = {}
    exps = sorted(dataset.expeditions.values(), key=lambda e: (e.year, e.expedition_id))
    for _, same_year in groupby(exps, key=lambda e: e.year):
        same_year = list(same_year)
        for exp in same_year:
            roster = set(exp.members)
            for cid in exp.members:
                flags[(cid, exp.expedition_id)] = bool(partners[cid] & (roster - {cid}))
        # history only becomes visible once the whole year is processed
        for exp in same_year:
            for cid in exp.members:
                partners[cid].update(exp.members)
                partners[cid].discard(cid)
    return flags


def climber_outcome_rates(
    climber_id: str,
    dataset: Dataset,
    subset: Iterable[str] | None = None,
) -> dict[FailureCause, float]:
    """Fraction of the climber's expeditions ending in each category.

    ``subset`` restricts the expeditions considered (by id).  The six
    categories, ``OTHER`` included, sum to one.
    """
    counts, n = _outcome_counts(climber_id, dataset, subset)
    if n == 0:
        raise ValueError(f"climber {climber_id!r} has no expeditions in the subset")
    return {cat: counts[cat] / n for cat in FailureCause}


def _outcome_counts(climber_id, dataset, subset=None):
    eids = dataset.climber_history.get(climber_id, [])
    if subset is not None:
        keep = set(subset)
        eids = [e for e in eids if e in keep]
    counts = {cat: 0 for cat in FailureCause}
    for eid in eids:
        counts[dataset.outcome(dataset.climbers[(climber_id, eid)])] += 1
    return counts, len(eids)


@dataclass(frozen=True)
class PartnerCell:
    bin_lo: int
    bin_hi: int
    category: FailureCause
    ratio: float | None
    n_climbers: int
    status: str  # "ok", "undefined" (no usable baseline) or "empty" (no climbers in bin)

    @property
    def bin_label(self) -> str:
        return f"{self.bin_lo}-{self.bin_hi}"


@dataclass(frozen=True)
class PartnerEffectTable:
    cells: tuple[PartnerCell, ...]
    pooled: bool = False

    def cell(self, bin_lo: int, category: FailureCause) -> PartnerCell:
        for c in self.cells:
            if c.bin_lo == bin_lo and c.category is category:
                return c
        raise KeyError((bin_lo, category))

    def bins(self) -> list[tuple[int, int]]:
        return sorted({(c.bin_lo, c.bin_hi) for c in self.cells})

    def to_rows(self) -> list[dict]:
        return [
            {
                "bin": c.bin_label,
                "category": c.category.value,
                "ratio": c.ratio,
                "n_climbers": c.n_climbers,
                "status": c.status,
            }
            for c in self.cells
        ]


def experience_bins(min_climbs: int = 15, bin_width: int = 5, max_climbs: int = 40) -> list[tuple[int, int]]:
    """Inclusive bins ``(min_climbs+1 .. min_climbs+bin_width)`` up to
    ``max_climbs``; the defaults give 16-20, 21-25, ..., 36-40."""
    bins = []
    lo = min_climbs + 1
    while lo <= max_climbs:
        bins.append((lo, min(lo + bin_width - 1, max_climbs)))
        lo += bin_width
    return bins


def partner_effect(
    dataset: Dataset,
    min_climbs: int = 15,
    bin_width: int = 5,
    max_climbs: int = 40,
    *,
    pooled: bool = False,
) -> PartnerEffectTable:
    """Outcome rate with repeat partners over the climber's overall rate.

    Experience is the climber's total number of logged expeditions.  By
    default each climber's ratio is computed first and then averaged over
    the climbers of a bin; climbers without repeat-partner expeditions are
    left out, and so is a category whose overall rate is zero for that
    climber.  ``pooled`` instead divides bin-wide pooled rates.
    """
    flags = repeat_partner_flags(dataset)
    bins = experience_bins(min_climbs, bin_width, max_climbs)
    members: dict[tuple[int, int], list[str]] = {b: [] for b in bins}
    for cid, eids in sorted(dataset.climber_history.items()):
        for b in bins:
            if b[0] <= len(eids) <= b[1]:
                members[b].append(cid)
                break

    cells = []
    for b in bins:
        per_climber = []  # (partner counts, n_partner, all counts, n_all)
        for cid in members[b]:
            eids = dataset.climber_history[cid]
            with_partner = [e for e in eids if flags[(cid, e)]]
            if not with_partner:
                continue
            pc, pn = _outcome_counts(cid, dataset, with_partner)
            ac, an = _outcome_counts(cid, dataset)
            per_climber.append((pc, pn, ac, an))
        for cat in CATEGORIES:
            if not members[b]:
                cells.append(PartnerCell(b[0], b[1], cat, None, 0, "empty"))
                continue
            usable = [t for t in per_climber if t[2][cat] > 0]
            if not usable:
                cells.append(PartnerCell(b[0], b[1], cat, None, 0, "undefined"))
                continue
            if pooled:
                partner_rate = sum(t[0][cat] for t in usable) / sum(t[1] for t in usable)
                base_rate = sum(t[2][cat] for t in usable) / sum(t[3] for t in usable)
                ratio = partner_rate / base_rate
            else:
                ratios = [(pc[cat] / pn) / (ac[cat] / an) for pc, pn, ac, an in usable]
                ratio = sum(ratios) / len(ratios)
            cells.append(PartnerCell(b[0], b[1], cat, ratio, len(usable), "ok"))
    return PartnerEffectTable(tuple(cells), pooled)
