import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbnet import (BetaTable, BinaryFunction, OneMax, ProjectionPlan, SampleSet, build_graph,
                   check_forest, cnbsd, cnbsd_local, cnbsi, cnbsrp, edge_distance, generate_rue,
                   merge_beta, partition_by_domain, required_projections, sample_global,
                   sample_local)
from nbnet.builder import round_seeds
from nbnet.errors import ConfigurationError, NbnError
from conftest import full_cube


def brute_force(S):
    """Nearest strictly better solution by direct enumeration (ties: lower id)."""
    n = len(S)
    parent = np.full(n, -1)
    dist = np.full(n, np.inf)
    for i in range(n):
        for j in range(n):
            if S.fitness[j] <= S.fitness[i]:
                continue
            if S.problem.metric == "hamming":
                d = float(np.sum(S.values[i] != S.values[j]))
            else:
                d = float(edge_distance(S.values[i], S.values[j]))
            if d < dist[i] or (d == dist[i] and j < parent[i]):
                dist[i], parent[i] = d, j
    return parent, dist


def assert_sound(S, table):
    check_forest(S, table)


def bits(s):
    return np.array([int(c) for c in s], dtype=np.int8)


def test_cnbsi_three_chain():
    S = SampleSet.from_values(OneMax(3), [bits("000"), bits("001"), bits("011")])
    t = cnbsi(S)
    assert t.parent.tolist() == [1, 2, -1]
    assert t.distance.tolist() == [1.0, 1.0, np.inf]


def test_cnbsi_all_equal_fitness_all_roots():
    S = SampleSet.from_values(BinaryFunction(6, lambda X: np.zeros(len(X))), full_cube(6))
    assert (cnbsi(S).parent == -1).all()


def test_cnbsi_single_best_single_root(rng):
    p = BinaryFunction(10, lambda X: X @ (2.0 ** np.arange(10)))
    S = SampleSet.from_values(p, rng.integers(0, 2, (300, 10)))
    assert (cnbsi(S).parent == -1).sum() == 1


@pytest.mark.parametrize("kind", ["onemax", "tsp"])
def test_cnbsi_matches_brute_force(kind, rng):
    if kind == "onemax":
        S = sample_global(OneMax(12), 250, seed=4)
    else:
        S = sample_global(generate_rue(9, 2), 250, seed=4)
    parent, dist = brute_force(S)
    t = cnbsi(S)
    assert np.array_equal(t.parent, parent)
    assert np.array_equal(t.distance, dist)


def test_cnbsi_threads_identical():
    S = sample_global(OneMax(24), 3000, seed=1)
    a, b = cnbsi(S), cnbsi(S, threads=4)
    assert np.array_equal(a.parent, b.parent) and np.array_equal(a.distance, b.distance)


def test_cnbsi_subset():
    S = sample_global(OneMax(10), 200, seed=1)
    ids = np.arange(0, 200, 3)
    t = cnbsi(S, ids)
    sub = cnbsi(S.subset(ids))
    mapped = np.where(sub.parent >= 0, ids[sub.parent], -1)
    assert np.array_equal(t.parent[ids], mapped)
    rest = np.setdiff1d(np.arange(200), ids)
    assert (t.parent[rest] == -1).all()


class TestPartition:
    def test_binary(self):
        S = sample_global(OneMax(10), 100, seed=0)
        groups = partition_by_domain(S, np.arange(100), 0)
        assert len(groups) <= 2
        assert sorted(np.concatenate(groups).tolist()) == list(range(100))
        for g in groups:
            assert len(set(S.values[g, 0].tolist())) == 1

    def test_tsp_successor_domain(self):
        p = generate_rue(12, 0)
        S = sample_global(p, 400, seed=0)
        groups = partition_by_domain(S, np.arange(400), 0)
        assert len(groups) <= 11
        assert sum(len(g) for g in groups) == 400
        for g in groups:
            succ = set(S.codes[g, 0].tolist())
            assert len(succ) == 1 and 1 not in succ


class TestCnbsd:
    def test_small_set_equals_cnbsi(self):
        S = sample_global(OneMax(16), 20, seed=2)
        t, best = cnbsd(S, ProjectionPlan.full(16, n_min=20, seed=1))
        exact = cnbsi(S)
        assert np.array_equal(t.parent, exact.parent)
        assert best == int(np.argmax(S.fitness))

    def test_no_domains_left_falls_back_to_exact(self):
        S = sample_global(OneMax(16), 300, seed=2)
        t, _ = cnbsd(S, ProjectionPlan([], n_min=2))
        assert np.array_equal(t.distance, cnbsi(S).distance)

    @pytest.mark.parametrize("seed", range(5))
    def test_single_round_one_sided_and_sound(self, seed):
        S = sample_global(OneMax(32), 2000, seed=seed)
        t, best = cnbsd(S, ProjectionPlan.full(32, seed=seed))
        assert_sound(S, t)
        assert (t.distance >= cnbsi(S).distance).all()
        assert S.fitness[best] == S.fitness.max()
        assert best == int(np.flatnonzero(S.fitness == S.fitness.max())[0])

    def test_tsp_round_sound(self):
        S = sample_global(generate_rue(30, 1), 1500, seed=0)
        t, _ = cnbsd(S, ProjectionPlan.full(30, seed=3))
        assert_sound(S, t)
        assert (t.distance >= cnbsi(S).distance).all()

    def test_subset_ids(self):
        S = sample_global(OneMax(16), 500, seed=1)
        ids = np.arange(100, 400)
        t, best = cnbsd(S, ProjectionPlan.full(16, seed=0), ids)
        assert (t.parent[:100] == -1).all() and (t.parent[400:] == -1).all()
        assert set(t.parent[ids][t.parent[ids] >= 0].tolist()) <= set(ids.tolist())
        assert 100 <= best < 400

    def test_plan_validation(self):
        with pytest.raises(ConfigurationError):
            ProjectionPlan.full(8, n_min=1)

    def test_empty_ids(self):
        S = sample_global(OneMax(8), 10, seed=0)
        with pytest.raises(NbnError):
            cnbsd(S, ProjectionPlan.full(8), [])


class TestMerge:
    def _tables(self, seed, n=400):
        S = sample_global(OneMax(20), n, seed=seed)
        return S, [cnbsd(S, ProjectionPlan.full(20, seed=s))[0] for s in range(4)]

    def test_idempotent_and_identity(self):
        S, (a, *_) = self._tables(0)
        m = merge_beta(a, a)
        assert np.array_equal(m.parent, a.parent)
        e = merge_beta(BetaTable.empty(len(S), S.fingerprint), a)
        assert np.array_equal(e.parent, a.parent) and np.array_equal(e.distance, a.distance)

    def test_exact_absorbs(self):
        S, tables = self._tables(1)
        exact = cnbsi(S)
        for t in tables:
            for m in (merge_beta(exact, t), merge_beta(t, exact)):
                assert np.array_equal(m.parent, exact.parent)

    def test_associative_commutative(self):
        _, (a, b, c, d) = self._tables(2)
        x = merge_beta(merge_beta(a, b), merge_beta(c, d))
        y = merge_beta(d, merge_beta(c, merge_beta(b, a)))
        assert np.array_equal(x.parent, y.parent) and np.array_equal(x.distance, y.distance)

    def test_monotone(self):
        _, (a, b, *_) = self._tables(3)
        m = merge_beta(a, b)
        assert (m.distance <= a.distance).all() and (m.distance <= b.distance).all()

    @given(st.lists(st.tuples(st.integers(-1, 5), st.integers(0, 3)), min_size=6, max_size=6),
           st.lists(st.tuples(st.integers(-1, 5), st.integers(0, 3)), min_size=6, max_size=6),
           st.lists(st.tuples(st.integers(-1, 5), st.integers(0, 3)), min_size=6, max_size=6))
    @settings(max_examples=200)
    def test_tie_rule_algebra(self, xa, xb, xc):
        def mk(x):
            p = np.array([a for a, _ in x])
            d = np.where(p < 0, np.inf, [float(b) for _, b in x])
            return BetaTable(p, d)
        a, b, c = mk(xa), mk(xb), mk(xc)
        ab = merge_beta(a, b)
        ba = merge_beta(b, a)
        assert np.array_equal(ab.parent, ba.parent) and np.array_equal(ab.distance, ba.distance)
        l, r = merge_beta(ab, c), merge_beta(a, merge_beta(b, c))
        assert np.array_equal(l.parent, r.parent) and np.array_equal(l.distance, r.distance)

    def test_mismatch(self):
        S, (a, *_) = self._tables(0)
        T = sample_global(OneMax(20), 400, seed=99)
        with pytest.raises(NbnError):
            merge_beta(a, BetaTable.empty(len(T), T.fingerprint))
        with pytest.raises(NbnError):
            merge_beta(a, BetaTable.empty(10))


class TestRequiredProjections:
    def test_examples(self):
        assert required_projections(math.e ** 2, 1 / math.sqrt(2)) == 5
        assert required_projections(10 ** 6, 0.3) == 155
        assert required_projections(2000, 0.3) == 86

    def test_near_one(self):
        for N in (10, 1000, 10 ** 6):
            assert required_projections(N, 0.999999) == math.ceil(math.log(N)) + 1

    @pytest.mark.parametrize("eps", [0, 1, -0.5, 1.5])
    def test_bad_epsilon(self, eps):
        with pytest.raises(ConfigurationError):
            required_projections(100, eps)

    def test_bad_n(self):
        with pytest.raises(ConfigurationError):
            required_projections(1, 0.3)


class TestCnbsrp:
    def test_single_round_equals_cnbsd(self):
        S = sample_global(OneMax(24), 800, seed=0)
        a = cnbsrp(S, L=1, seed=11)
        b, _ = cnbsd(S, ProjectionPlan.full(24, seed=int(round_seeds(11, 1)[0])))
        assert np.array_equal(a.parent, b.parent)

    def test_more_rounds_never_worse(self):
        S = sample_global(OneMax(32), 1500, seed=0)
        prev = None
        for L in (1, 5, 20, 60):
            t = cnbsrp(S, L=L, seed=3)
            if prev is not None:
                assert (t.distance <= prev).all()
            prev = t.distance

    def test_error_rate_within_epsilon(self):
        S = sample_global(OneMax(32), 2000, seed=5)
        t = cnbsrp(S, epsilon=0.3, seed=1)
        err = np.mean(t.distance > cnbsi(S).distance)
        assert err <= 0.3

    def test_full_cube_reaches_exact(self):
        p = BinaryFunction(8, lambda X: X.sum(axis=1) + (X @ np.arange(1, 9)) / 100.0)
        S = SampleSet.from_values(p, full_cube(8))
        t = cnbsrp(S, L=len(S), n_min=2, seed=0)
        assert np.array_equal(t.distance, cnbsi(S).distance)

    def test_thread_count_irrelevant(self):
        S = sample_global(generate_rue(40, 1), 1000, seed=0)
        a = cnbsrp(S, L=12, seed=9, threads=1)
        b = cnbsrp(S, L=12, seed=9, threads=5)
        assert np.array_equal(a.parent, b.parent) and np.array_equal(a.distance, b.distance)

    def test_argument_checks(self):
        S = sample_global(OneMax(8), 50, seed=0)
        with pytest.raises(ConfigurationError):
            cnbsrp(S)
        with pytest.raises(ConfigurationError):
            cnbsrp(S, L=0)
        with pytest.raises(ConfigurationError):
            cnbsrp(S, L=3, n_min=1)


class TestLocal:
    def _local(self, N=6000, K=40, seed=0):
        p = OneMax(120)
        c = np.random.default_rng(seed).integers(0, 2, 120).astype(np.int8)
        return sample_local(p, c, K, N, seed=seed), c

    def test_smaller_subsets_than_plain(self):
        S, c = self._local()
        plan = ProjectionPlan.full(120, seed=4)
        plain, loc = {}, {}
        cnbsd(S, plan, stats=plain)
        cnbsd_local(S, plan, c, stats=loc)
        depth = 3
        assert loc["level_max"][depth] < plain["level_max"][depth]
        assert (loc["level_max"][1:6] < plain["level_max"][1:6]).all()

    def test_sound_and_accurate(self):
        S, c = self._local(N=3000, K=30, seed=1)
        exact = cnbsi(S).distance
        t = cnbsrp(S, epsilon=0.3, seed=2, center=c)
        assert_sound(S, t)
        assert (t.distance >= exact).all()
        assert np.mean(t.distance > exact) <= 0.3

    def test_uniform_data_comparable(self):
        S = sample_global(OneMax(32), 2000, seed=3)
        c = S.values[0]
        exact = cnbsi(S).distance
        e_plain = np.mean(cnbsrp(S, L=30, seed=1).distance > exact)
        e_loc = np.mean(cnbsrp(S, L=30, seed=1, center=c).distance > exact)
        assert abs(e_plain - e_loc) < 0.05

    def test_tsp_local(self):
        p = generate_rue(100, 3)
        c = np.arange(1, 101)
        S = sample_local(p, c, 20, 2000, seed=0)
        t = cnbsrp(S, epsilon=0.3, seed=0, center=c)
        assert_sound(S, t)
        assert np.mean(t.distance > cnbsi(S).distance) <= 0.3


class TestBuildGraph:
    def test_meta(self):
        S = sample_global(OneMax(16), 300, seed=0)
        g = build_graph(S, epsilon=0.3)
        assert g.meta["algo"] == "cnbsrp" and g.meta["L"] == required_projections(300, 0.3)
        assert build_graph(S, "cnbsi").meta == {"algo": "cnbsi"}
        assert build_graph(S, L=4).meta["L"] == 4

    def test_errors(self):
        S = sample_global(OneMax(16), 300, seed=0)
        with pytest.raises(ConfigurationError):
            build_graph(S, "magic")
        with pytest.raises(NbnError):
            build_graph(S.subset([0]))
