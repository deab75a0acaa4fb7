import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from summitnet import FEATURES
from summitnet.bipartite import (
    BinarizationError,
    BipartiteGraph,
    ConstructionError,
    build_bipartite,
    binarize,
    median_age,
    normalize_by_size,
    project,
)
from summitnet.records import Sex

from conftest import make_climber, make_dataset, make_expedition


def cooccurrence(P):
    """Double-loop co-occurrence counts."""
    P = np.asarray(P)
    f = P.shape[1]
    out = np.zeros((f, f), dtype=np.int64)
    for a in range(f):
        for b in range(f):
            out[a, b] = sum(1 for row in P if row[a] and row[b])
    return out


class TestBinarize:
    def test_young(self):
        assert binarize(make_climber("a", "E", age=39), 40, 0)[0] == 1

    def test_median_tie_is_zero(self):
        assert binarize(make_climber("a", "E", age=40), 40, 0)[0] == 0

    def test_all_ones(self):
        c = make_climber("a", "E", age=35, sex=Sex.MALE, o2a=True, o2d=True, hired=True)
        assert binarize(c, 40, 2).tolist() == [1, 1, 1, 1, 1, 1]

    def test_all_zeros(self):
        c = make_climber("a", "E", age=60, sex=Sex.FEMALE, o2a=False, o2d=False, hired=False)
        assert binarize(c, 40, 0).tolist() == [0] * 6

    def test_age_direction_switch(self):
        c = make_climber("a", "E", age=50)
        assert binarize(c, 40, 0, age_below=False)[0] == 1
        assert binarize(c, 40, 0, age_below=True)[0] == 0

    def test_missing_field(self):
        c = make_climber("a", "E", o2d=None)
        with pytest.raises(BinarizationError, match="o2_descent"):
            binarize(c, 40, 0)

    def test_feature_order_is_frozen(self):
        assert FEATURES == (
            "age_below_median", "male", "o2_ascent", "o2_descent", "hired_sherpa", "experience_above_8000m",
        )


class TestBuild:
    def test_rows(self):
        exp = make_expedition("E")
        ds = make_dataset([exp], [
            make_climber("a", "E", age=30, sex=Sex.FEMALE, o2a=True, o2d=False),
            make_climber("b", "E", age=30, sex=Sex.MALE, o2a=False, o2d=False),
        ])
        P = build_bipartite("E", ds, 40)
        assert P.matrix.tolist() == [[1, 0, 1, 0, 0, 0], [1, 1, 0, 0, 0, 0]]
        assert P.climber_ids == ("a", "b")

    def test_missing_age_excluded(self, fixture_dataset):
        P = build_bipartite("E1", fixture_dataset, 40)
        assert "D" not in P.climber_ids
        assert P.excluded == (("D", "missing age"),)

    def test_experience_from_history(self, fixture_dataset):
        # A and C climbed CHOY (8188 m) in 2017 before E1 (2019)
        P = build_bipartite("E1", fixture_dataset, 40)
        exp_bit = dict(zip(P.climber_ids, P.matrix[:, 5]))
        assert exp_bit == {"A": 1, "B": 0, "C": 1}

    def test_twelve_members(self):
        exp = make_expedition("E")
        ds = make_dataset([exp], [make_climber(f"c{i:02d}", "E") for i in range(12)])
        assert build_bipartite("E", ds, 40).matrix.shape == (12, 6)

    def test_exclude_hired(self):
        exp = make_expedition("E")
        ds = make_dataset([exp], [make_climber("a", "E", hired=True), make_climber("b", "E")])
        assert build_bipartite("E", ds, 40, include_hired=False).climber_ids == ("b",)

    def test_empty(self):
        exp = make_expedition("E")
        ds = make_dataset([exp], [make_climber("a", "E", age=None)])
        with pytest.raises(ConstructionError):
            build_bipartite("E", ds, 40)

    def test_median_age(self):
        assert median_age([make_climber("a", "E", age=30), make_climber("b", "E", age=50),
                           make_climber("c", "E", age=None)]) == 40
        assert median_age([]) == 40.0


class TestProject:
    def test_reduced_example(self):
        I = project(np.array([[1, 0, 1], [1, 1, 0]]))
        assert I.matrix.tolist() == cooccurrence([[1, 0, 1], [1, 1, 0]]).tolist() == [[2, 1, 1], [1, 1, 0], [1, 0, 1]]

    def test_all_zero(self):
        assert not project(np.zeros((4, 6), dtype=int)).matrix.any()

    def test_rank_one(self):
        v = np.array([1, 0, 1, 1, 0, 1])
        assert np.array_equal(project(v[None, :]).matrix, np.outer(v, v))

    def test_bipartite_graph_input(self):
        P = BipartiteGraph(np.array([[1, 1, 0, 0, 0, 0]] * 3), ("a", "b", "c"), "E")
        I = project(P)
        assert I.m == 3 and I.expedition_id == "E" and I.matrix[0, 1] == 3

    @settings(max_examples=60)
    @given(arrays(np.int64, st.tuples(st.integers(1, 50), st.just(6)), elements=st.integers(0, 1)))
    def test_matches_bruteforce(self, P):
        I = project(P).matrix
        assert np.array_equal(I, cooccurrence(P))
        assert np.array_equal(I, I.T)
        assert np.all(np.diag(I)[:, None] >= I)  # a climber with a and b has a
        assert np.linalg.eigvalsh(I.astype(float)).min() >= -1e-9


class TestNormalize:
    def test_max_entry(self):
        P = np.ones((12, 6), dtype=int)
        assert normalize_by_size(project(P)).matrix.max() == 1.0

    def test_zero(self):
        assert not normalize_by_size(project(np.zeros((3, 6), dtype=int))).matrix.any()

    def test_fixture_counts(self):
        rng = np.random.default_rng(7)
        P = rng.integers(0, 2, (12, 6))
        N = normalize_by_size(project(P))
        assert np.allclose(N.matrix, cooccurrence(P) / 12, rtol=0, atol=0)
        assert N.normalized and N.m == 12

    @settings(max_examples=30)
    @given(arrays(np.int64, st.tuples(st.integers(1, 30), st.just(6)), elements=st.integers(0, 1)))
    def test_preserves_order(self, P):
        raw = project(P).matrix.ravel()
        norm = normalize_by_size(project(P)).matrix.ravel()
        assert np.array_equal(np.argsort(raw, kind="stable"), np.argsort(norm, kind="stable"))
        assert norm.min() >= 0 and norm.max() <= 1

    def test_json_roundtrip(self):
        from summitnet.bipartite import IntraExpeditionGraph

        I = normalize_by_size(project(np.eye(6, dtype=int)))
        data = I.to_json()
        assert set(data) >= {"expedition_id", "m", "feature_order", "matrix"}
        back = IntraExpeditionGraph.from_json(data)
        assert np.array_equal(back.matrix, I.matrix) and back.m == I.m
