import numpy as np
import pytest

from summitnet.partners import (
    CATEGORIES,
    climber_outcome_rates,
    experience_bins,
    partner_effect,
    repeat_partner_flags,
)
from summitnet.records import FailureCause, load_dataset

from conftest import make_climber, make_dataset, make_expedition


def brute_flags(ds):
    out = {}
    for (cid, eid) in ds.climbers:
        year = ds.expeditions[eid].year
        mates = set(ds.expeditions[eid].members) - {cid}
        out[(cid, eid)] = any(
            cid in e.members and mates & set(e.members)
            for e in ds.expeditions.values()
            if e.year < year
        )
    return out


def career(prefix, n, partner_idx, fatigue_idx, year0=2000):
    """A climber with ``n`` yearly expeditions.

    A buddy joins the first expedition and every index in ``partner_idx``,
    which makes those repeat-partner expeditions.  Expeditions in
    ``fatigue_idx`` end in exhaustion; the rest succeed.
    """
    exps, climbers = [], []
    for k in range(n):
        eid = f"{prefix}{k:02d}"
        exps.append(make_expedition(eid, year=year0 + k))
        tired = k in fatigue_idx
        climbers.append(make_climber(prefix, eid, summited=not tired, code="exhaustion" if tired else ""))
        climbers.append(make_climber(f"{eid}-filler", eid))
        if k == 0 or k in partner_idx:
            climbers.append(make_climber(f"{prefix}-buddy", eid))
    return exps, climbers


class TestFlags:
    def test_fixture_matches_bruteforce(self, fixture_dataset):
        assert repeat_partner_flags(fixture_dataset) == brute_flags(fixture_dataset)

    def test_fixture_values(self, fixture_dataset):
        flags = repeat_partner_flags(fixture_dataset)
        # A and C shared E3 in 2017, so both are repeat partners on E1 and E2
        assert flags[("A", "E1")] and flags[("C", "E1")]
        assert not flags[("A", "E3")] and not flags[("B", "E1")]

    def test_same_year_not_repeat(self):
        exps = [make_expedition("X", year=2010), make_expedition("Y", year=2010)]
        cl = [make_climber(c, e) for e in ("X", "Y") for c in ("p", "q")]
        assert not any(repeat_partner_flags(make_dataset(exps, cl)).values())

    def test_synth_matches_bruteforce(self, synth_files):
        ds = load_dataset(synth_files["expeditions"], synth_files["members"])
        # brute force on a slice of veterans keeps runtime low
        sub_ids = sorted(ds.climber_history)[:40]
        flags = repeat_partner_flags(ds)
        for cid in sub_ids:
            for eid in ds.climber_history[cid]:
                year = ds.expeditions[eid].year
                mates = set(ds.expeditions[eid].members) - {cid}
                expected = any(
                    mates & set(ds.expeditions[e].members)
                    for e in ds.climber_history[cid]
                    if ds.expeditions[e].year < year
                )
                assert flags[(cid, eid)] == expected


class TestRates:
    def test_sum_to_one(self, synth_files):
        ds = load_dataset(synth_files["expeditions"], synth_files["members"])
        for cid in sorted(ds.climber_history)[:200]:
            assert abs(sum(climber_outcome_rates(cid, ds).values()) - 1.0) < 1e-12

    def test_counts(self):
        exps, cl = career("v", 10, set(), {1, 4, 7})
        ds = make_dataset(exps, cl)
        rates = climber_outcome_rates("v", ds)
        assert rates[FailureCause.FATIGUE] == 0.3 and rates[FailureCause.SUCCESS] == 0.7

    def test_empty_subset(self):
        exps, cl = career("v", 3, set(), set())
        with pytest.raises(ValueError):
            climber_outcome_rates("v", make_dataset(exps, cl), subset=[])


def test_bins():
    assert experience_bins() == [(16, 20), (21, 25), (26, 30), (31, 35), (36, 40)]
    assert experience_bins(10, 10, 25) == [(11, 20), (21, 25)]


class TestPartnerEffect:
    def test_half_ratio(self):
        # 20 climbs; partner climbs 10..19 with 2 fatigue, 6 fatigue elsewhere:
        # partner rate 2/10, overall 8/20 -> 0.5
        exps, cl = career("v", 20, set(range(10, 20)), {1, 2, 3, 4, 5, 6, 12, 15})
        table = partner_effect(make_dataset(exps, cl))
        cell = table.cell(16, FailureCause.FATIGUE)
        assert cell.status == "ok" and cell.n_climbers == 1
        assert cell.ratio == pytest.approx(0.5)

    def test_equal_rates_give_one(self):
        exps, cl = career("v", 16, set(range(8, 16)), {1, 2, 9, 10})
        cell = partner_effect(make_dataset(exps, cl)).cell(16, FailureCause.FATIGUE)
        assert cell.ratio == pytest.approx(1.0)

    def test_per_climber_vs_pooled(self):
        e1, c1 = career("v", 20, set(range(10, 20)), {1, 2, 3, 4, 5, 6, 12, 15})
        e2, c2 = career("w", 16, set(range(8, 16)), {8, 9, 10, 11}, year0=1980)
        ds = make_dataset(e1 + e2, c1 + c2)
        mean_cell = partner_effect(ds).cell(16, FailureCause.FATIGUE)
        pooled_cell = partner_effect(ds, pooled=True).cell(16, FailureCause.FATIGUE)
        # v: 0.5, w: (4/8)/(4/16) = 2 -> mean 1.25; pooled (6/18)/(12/36) = 1
        assert mean_cell.ratio == pytest.approx(1.25)
        assert pooled_cell.ratio == pytest.approx(1.0)

    def test_undefined_and_empty(self):
        exps, cl = career("v", 18, set(range(9, 18)), set())
        table = partner_effect(make_dataset(exps, cl))
        assert table.cell(16, FailureCause.ACCIDENT).status == "undefined"
        assert table.cell(36, FailureCause.FATIGUE).status == "empty"
        assert table.cell(16, FailureCause.SUCCESS).ratio == pytest.approx(1.0)

    def test_table_shape(self, synth_files):
        ds = load_dataset(synth_files["expeditions"], synth_files["members"])
        table = partner_effect(ds)
        assert len(table.cells) == 5 * len(CATEGORIES)
        for c in table.cells:
            assert c.status in {"ok", "undefined", "empty"}
            if c.status == "ok":
                assert c.ratio > 0 and np.isfinite(c.ratio)
