import json
from dataclasses import replace

import numpy as np
import pytest

from summitnet.records import load_dataset, success_rate
from summitnet.synth import CommunitySpec, InfeasibleConfigError, SynthConfig, default_communities, generate


def test_byte_identical(tmp_path):
    a = generate(SynthConfig(seed=3))
    b = generate(SynthConfig(seed=3))
    assert a.expeditions_csv == b.expeditions_csv and a.members_csv == b.members_csv
    pa, pb = a.write(tmp_path / "a"), b.write(tmp_path / "b")
    for key in pa:
        assert pa[key].read_bytes() == pb[key].read_bytes()


def test_seeds_differ():
    assert generate(SynthConfig(seed=1, n_veterans=5)).members_csv != generate(SynthConfig(seed=2, n_veterans=5)).members_csv


def test_loads_cleanly(synth_files):
    ds = load_dataset(synth_files["expeditions"], synth_files["members"])
    assert ds.diagnostics == []
    for e in ds.expeditions.values():
        assert len(e.members) == e.n_members + e.n_hired


def test_single_community():
    spec = default_communities()[2]
    out = generate(SynthConfig(seed=0, communities=(replace(spec, n_expeditions=10),), n_veterans=0))
    labels = out.ground_truth["community_labels"]
    assert len(labels) == 10 and set(labels.values()) == {0}


def test_ground_truth_keys(synth_output):
    truth = json.loads(json.dumps(synth_output.ground_truth))
    assert {"community_labels", "planted_means", "correlation_signs", "partner_multipliers"} <= set(truth)
    assert truth["correlation_signs"] == {"days_to_summit": -1, "expedition_size": 1}


def test_planted_means_recovered(synth_files, synth_output):
    ds = load_dataset(synth_files["expeditions"], synth_files["members"])
    truth = synth_output.ground_truth
    for k, planted in enumerate(truth["planted_means"]):
        ids = [e for e, c in truth["community_labels"].items() if c == k]
        samples = {
            "days_to_summit": [ds.expeditions[e].days_to_summit for e in ids],
            "camps_above_bc": [ds.expeditions[e].camps_above_bc for e in ids],
            "success_rate": [success_rate(e, ds) for e in ids],
        }
        for key, vals in samples.items():
            vals = np.array(vals, dtype=float)
            se = vals.std(ddof=1) / np.sqrt(len(vals))
            # constant-valued layers have zero spread: compare exactly
            assert abs(vals.mean() - planted[key]) <= max(3 * se, 1e-9), (k, key)


def test_size_matches_members(synth_files):
    ds = load_dataset(synth_files["expeditions"], synth_files["members"])
    e = ds.expeditions["EVER0001"]
    assert len(e.members) == e.n_members + e.n_hired


@pytest.mark.parametrize("change", [
    {"communities": ()},
    {"start_year": 2030},
    {"partner_fraction": 1.5},
    {"base_outcome_probs": {"success": 0.5, "fatigue": 0.6}},
    {"veteran_climbs": (10, 5)},
])
def test_infeasible(change):
    with pytest.raises(InfeasibleConfigError):
        generate(replace(SynthConfig(), **change))


def test_infeasible_community():
    bad = CommunitySpec(5, (8, 4), (1, 2), (20, 30), (2, 3), 0.5, 40.0)
    with pytest.raises(InfeasibleConfigError):
        generate(SynthConfig(communities=(bad,)))
