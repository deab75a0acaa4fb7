"""Seeded synthetic expedition data in the ingestion CSV schema.

Two populations are generated:

* Everest expeditions drawn from planted communities.  Each community has
  its own ranges for size, member/hired ratio, days and camps, its own
  success rate and feature prevalences, so that both the multiplex layers
  and the intra-expedition graphs carry community signal.
* Veteran climbers with long careers on other peaks.  Every veteran has a
  small roster of buddies met on their first climb; later climbs are either
  with one buddy (a repeat-partner climb) or with first-time strangers.
  Failure probabilities on repeat-partner climbs are scaled by planted
  multipliers.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .records import EXPEDITION_COLUMNS, MEMBER_COLUMNS, FailureCause

EVEREST = ("EVER", 8849)
OTHER_PEAKS = (("AMAD", 6812), ("BARU", 7129), ("CHOY", 8188), ("MANA", 8163), ("LHOT", 8516))
PRIOR_PEAK = ("CHOY", 8188)
NATIONALITIES = ("Nepal", "USA", "UK", "France", "Japan", "India", "China", "Germany")

OUTCOME_CODES = {
    FailureCause.SUCCESS: "success",
    FailureCause.ALTITUDE: "AMS symptoms",
    FailureCause.LOGISTICS: "lack of supplies",
    FailureCause.FATIGUE: "exhaustion",
    FailureCause.ACCIDENT: "injury",
    FailureCause.OTHER: "bad weather",
}


class InfeasibleConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CommunitySpec:
    n_expeditions: int
    paying: tuple[int, int]  # inclusive ranges
    hired: tuple[int, int]
    days: tuple[float, float]
    camps: tuple[int, int]
    success_rate: float
    age_mean: float
    p_male: float = 0.8
    p_o2_ascent: float = 0.5
    p_o2_descent: float = 0.4
    p_experience: float = 0.3


def default_communities() -> tuple[CommunitySpec, ...]:
    return (
        # long, camp-heavy sieges with poor success
        CommunitySpec(30, (6, 8), (6, 8), (40.0, 50.0), (5, 6), 0.25, 45.0,
                      p_o2_ascent=0.45, p_o2_descent=0.3, p_experience=0.3),
        # small independent teams, few hired staff
        CommunitySpec(30, (12, 14), (3, 4), (25.0, 30.0), (3, 3), 0.35, 47.0,
                      p_male=0.85, p_o2_ascent=0.3, p_o2_descent=0.2, p_experience=0.7),
        # large, fast, well-supplied commercial teams
        CommunitySpec(30, (14, 16), (14, 16), (18.0, 24.0), (2, 3), 0.72, 33.0,
                      p_male=0.7, p_o2_ascent=0.95, p_o2_descent=0.85, p_experience=0.15),
    )


def _default_base_probs() -> dict[str, float]:
    # fatigue-heavy so the planted partner effect is measurable per bin
    return {"success": 0.1, "altitude": 0.1, "logistics": 0.12, "fatigue": 0.5, "accident": 0.04, "other": 0.14}


def _default_multipliers() -> dict[str, float]:
    return {"altitude": 0.8, "logistics": 0.7, "fatigue": 0.5, "accident": 1.0, "other": 1.0}


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    communities: tuple[CommunitySpec, ...] = field(default_factory=default_communities)
    start_year: int = 1990
    end_year: int = 2021
    youth_effect: float = 0.15
    o2_effect: float = 0.15
    n_veterans: int = 400
    veteran_climbs: tuple[int, int] = (16, 40)
    partner_fraction: float = 0.25
    n_buddies: int = 3
    base_outcome_probs: dict[str, float] = field(default_factory=_default_base_probs)
    partner_multipliers: dict[str, float] = field(default_factory=_default_multipliers)

    @property
    def n_expeditions(self) -> int:
        return sum(c.n_expeditions for c in self.communities)

    def validate(self) -> None:
        if not self.communities:
            raise InfeasibleConfigError("at least one community is required")
        for k, c in enumerate(self.communities):
            for name in ("paying", "hired", "days", "camps"):
                lo, hi = getattr(c, name)
                if lo > hi or lo < 0:
                    raise InfeasibleConfigError(f"community {k}: bad {name} range {(lo, hi)}")
            if c.paying[0] + c.hired[0] < 1:
                raise InfeasibleConfigError(f"community {k}: expedition size < 1")
            if c.n_expeditions < 1:
                raise InfeasibleConfigError(f"community {k}: needs at least one expedition")
            for name in ("success_rate", "p_male", "p_o2_ascent", "p_o2_descent", "p_experience"):
                if not 0.0 <= getattr(c, name) <= 1.0:
                    raise InfeasibleConfigError(f"community {k}: {name} outside [0, 1]")
        if self.start_year > self.end_year:
            raise InfeasibleConfigError("start_year after end_year")
        probs = np.array([self.base_outcome_probs.get(c.value, 0.0) for c in FailureCause])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise InfeasibleConfigError("base outcome probabilities must be nonnegative and sum to 1")
        scaled = sum(
            self.base_outcome_probs.get(c.value, 0.0) * self.partner_multipliers.get(c.value, 1.0)
            for c in FailureCause
            if c is not FailureCause.SUCCESS
        )
        if scaled > 1.0 or any(m < 0 for m in self.partner_multipliers.values()):
            raise InfeasibleConfigError("partner multipliers give invalid probabilities")
        if not 0.0 <= self.partner_fraction <= 1.0:
            raise InfeasibleConfigError("partner_fraction outside [0, 1]")
        lo, hi = self.veteran_climbs
        if self.n_veterans and (lo < 1 or lo > hi):
            raise InfeasibleConfigError(f"bad veteran_climbs range {(lo, hi)}")
        if self.n_veterans and self.n_buddies < 1:
            raise InfeasibleConfigError("veterans need at least one buddy")


@dataclass(frozen=True)
class SynthOutput:
    expeditions_csv: str
    members_csv: str
    ground_truth: dict

    def write(self, directory: str | Path) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "expeditions": directory / "expeditions.csv",
            "members": directory / "members.csv",
            "ground_truth": directory / "ground_truth.json",
        }
        paths["expeditions"].write_text(self.expeditions_csv, encoding="utf-8", newline="")
        paths["members"].write_text(self.members_csv, encoding="utf-8", newline="")
        paths["ground_truth"].write_text(
            json.dumps(self.ground_truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return paths


def _uniform_int(rng, lo_hi) -> int:
    return int(rng.integers(lo_hi[0], lo_hi[1] + 1))


def _flag(value: bool) -> int:
    return 1 if value else 0


def _planted_sign(communities, attr) -> int:
    weights = np.array([c.n_expeditions for c in communities], dtype=float)
    x = np.array([attr(c) for c in communities])
    y = np.array([c.success_rate for c in communities])
    cov = np.sum(weights * (x - np.average(x, weights=weights)) * (y - np.average(y, weights=weights)))
    return int(np.sign(round(cov, 12)))


class _Writer:
    def __init__(self):
        self.exp_rows: list[list] = []
        self.member_rows: list[list] = []

    def expedition(self, eid, peak, year, days, camps, n_members, n_hired, death=False):
        self.exp_rows.append([eid, peak[0], peak[1], year, f"{days:g}", camps, n_members, n_hired, _flag(death)])

    def member(self, cid, eid, age, sex, nat, o2a, o2d, hired, cause: FailureCause):
        self.member_rows.append([
            cid, eid, age, sex, nat, _flag(o2a), _flag(o2d), _flag(hired),
            _flag(cause is FailureCause.SUCCESS), OUTCOME_CODES[cause],
        ])

    @staticmethod
    def _render(header, rows) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()

    def render(self) -> tuple[str, str]:
        return (
            self._render(EXPEDITION_COLUMNS, self.exp_rows),
            self._render(MEMBER_COLUMNS, self.member_rows),
        )


def _everest(config: SynthConfig, rng: np.random.Generator, out: _Writer) -> dict[str, int]:
    labels: dict[str, int] = {}
    order = [k for k, c in enumerate(config.communities) for _ in range(c.n_expeditions)]
    order = [order[i] for i in rng.permutation(len(order))]
    failure = (FailureCause.ALTITUDE, FailureCause.LOGISTICS, FailureCause.FATIGUE, FailureCause.OTHER)
    for n, k in enumerate(order):
        spec = config.communities[k]
        eid = f"EVER{n + 1:04d}"
        labels[eid] = k
        year = int(rng.integers(config.start_year + 2, config.end_year + 1))
        n_pay, n_hired = _uniform_int(rng, spec.paying), _uniform_int(rng, spec.hired)
        days = round(float(rng.uniform(*spec.days)))
        camps = _uniform_int(rng, spec.camps)
        out.expedition(eid, EVEREST, year, days, camps, n_pay, n_hired)

        m = n_pay + n_hired
        hired = np.array([False] * n_pay + [True] * n_hired)
        ages = np.where(
            hired,
            rng.normal(32.0, 6.0, m),
            rng.normal(spec.age_mean, 9.0, m),
        ).round().clip(18, 75).astype(int)
        male = np.where(hired, rng.random(m) < 0.95, rng.random(m) < spec.p_male)
        o2a = rng.random(m) < spec.p_o2_ascent
        o2d = o2a & (rng.random(m) < spec.p_o2_descent / max(spec.p_o2_ascent, 1e-12))
        experienced = rng.random(m) < np.where(hired, max(spec.p_experience, 0.5), spec.p_experience)

        effect = config.youth_effect * (ages < 40) + config.o2_effect * o2a
        p = np.clip(spec.success_rate + effect - effect.mean(), 0.02, 0.98)
        summit = rng.random(m) < p
        causes = rng.integers(0, len(failure), m)

        ids = [f"{eid}-C{i + 1:02d}" for i in range(m)]
        for i, cid in enumerate(ids):
            cause = FailureCause.SUCCESS if summit[i] else failure[causes[i]]
            nat = "Nepal" if hired[i] else NATIONALITIES[int(rng.integers(len(NATIONALITIES)))]
            out.member(cid, eid, int(ages[i]), "M" if male[i] else "F", nat, o2a[i], o2d[i], hired[i], cause)

        prior = [i for i in range(m) if experienced[i]]
        if prior:
            pid = f"PRIOR{n + 1:04d}"
            out.expedition(pid, PRIOR_PEAK, year - 2, 20, 3, len(prior), 0)
            for i in prior:
                cause = FailureCause.SUCCESS if rng.random() < 0.5 else FailureCause.OTHER
                out.member(ids[i], pid, int(ages[i]) - 2, "M" if male[i] else "F", "Nepal" if hired[i] else "USA",
                           o2a[i], o2d[i], False, cause)
    return labels


def _veterans(config: SynthConfig, rng: np.random.Generator, out: _Writer) -> None:
    causes = list(FailureCause)
    base = np.array([config.base_outcome_probs.get(c.value, 0.0) for c in causes])
    partner = base.copy()
    for j, c in enumerate(causes):
        if c is not FailureCause.SUCCESS:
            partner[j] = base[j] * config.partner_multipliers.get(c.value, 1.0)
    partner[causes.index(FailureCause.SUCCESS)] = 1.0 - (partner.sum() - partner[causes.index(FailureCause.SUCCESS)])

    novice = 0
    exp_no = 0

    def strangers(eid, year, count):
        nonlocal novice
        for _ in range(count):
            novice += 1
            cause = FailureCause.SUCCESS if rng.random() < 0.5 else FailureCause.OTHER
            out.member(f"N{novice:06d}", eid, int(rng.integers(20, 60)), "M", "USA", False, False, False, cause)

    for v in range(config.n_veterans):
        vid = f"V{v + 1:04d}"
        buddies = [f"{vid}-B{b + 1}" for b in range(config.n_buddies)]
        n_climbs = _uniform_int(rng, config.veteran_climbs)
        start = int(rng.integers(1950, 1975))
        age0 = int(rng.integers(22, 32))
        next_buddy = 0
        for t in range(n_climbs):
            exp_no += 1
            eid = f"X{exp_no:06d}"
            year = start + t
            peak = OTHER_PEAKS[int(rng.integers(len(OTHER_PEAKS)))]
            with_partner = t > 0 and rng.random() < config.partner_fraction
            n_strangers = int(rng.integers(1, 4))
            if t == 0:
                party = buddies
            elif with_partner:
                party = [buddies[next_buddy % len(buddies)]]
                next_buddy += 1
            else:
                party = []
            size = 1 + len(party) + n_strangers
            out.expedition(eid, peak, year, int(rng.integers(8, 30)), int(rng.integers(1, 5)), size, 0)
            probs = partner if with_partner else base
            cause = causes[int(rng.choice(len(causes), p=probs))]
            out.member(vid, eid, min(age0 + t, 100), "M", "UK", False, False, False, cause)
            for b in party:
                bcause = FailureCause.SUCCESS if rng.random() < 0.5 else FailureCause.OTHER
                out.member(b, eid, 30, "M", "Nepal", False, False, True, bcause)
            strangers(eid, year, n_strangers)


def generate(config: SynthConfig = SynthConfig()) -> SynthOutput:
    """Generate expeditions/members CSV text and a ground-truth record.

    Output depends only on ``config``; the same seed gives byte-identical
    text.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    out = _Writer()
    labels = _everest(config, rng, out)
    _veterans(config, rng, out)
    expeditions_csv, members_csv = out.render()

    comms = config.communities
    truth = {
        "seed": config.seed,
        "peak_id": EVEREST[0],
        "community_labels": labels,
        "community_specs": [asdict(c) for c in comms],
        "planted_means": [
            {
                "days_to_summit": sum(c.days) / 2,
                "camps_above_bc": sum(c.camps) / 2,
                "expedition_size": (sum(c.paying) + sum(c.hired)) / 2,
                "success_rate": c.success_rate,
            }
            for c in comms
        ],
        "correlation_signs": {
            "days_to_summit": _planted_sign(comms, lambda c: sum(c.days) / 2),
            "expedition_size": _planted_sign(comms, lambda c: (sum(c.paying) + sum(c.hired)) / 2),
        },
        "partner_multipliers": dict(config.partner_multipliers),
        "partner_fraction": config.partner_fraction,
        "n_veterans": config.n_veterans,
    }
    return SynthOutput(expeditions_csv, members_csv, truth)
