import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbnet import (OneMax, TspInstance, WModel, WModelParams, evaluate, generate_rue,
                   parse_tsplib, read_tsplib, wmodel_evaluate)
from nbnet.errors import ConfigurationError, ParseError, ValidationError
from nbnet.problems import (_epistasis_matrix, epistasis, neutrality, problem_from_descriptor,
                            ruggedness_permutation)
from conftest import full_cube


def test_onemax_examples():
    p = OneMax(4)
    assert evaluate(p, [1, 1, 1, 1]) == 4
    assert evaluate(p, [0, 0, 0, 0]) == 0
    with pytest.raises(ValidationError):
        evaluate(p, [1, 1, 1])


def test_tsp_unit_triangle():
    p = TspInstance([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])
    assert evaluate(p, [1, 2, 3]) == -3


def test_tsp_validation():
    p = generate_rue(5, 0)
    with pytest.raises(ValidationError):
        p.evaluate([1, 2, 3, 4, 4])
    with pytest.raises(ValidationError):
        p.evaluate([1, 2, 3, 4])


@given(st.permutations(range(1, 9)), st.integers(0, 7))
@settings(max_examples=100, deadline=None)
def test_tsp_fitness_rotation_reversal(perm, k):
    p = generate_rue(8, 3)
    t = np.array(perm)
    f = p.evaluate(t)
    assert p.evaluate(np.roll(t, k)) == f
    assert p.evaluate(t[::-1]) == f


def test_tsp_rounding_nearest_integer():
    p = TspInstance([[0, 0], [3, 0], [3, 4.6], [0, 5.5]])
    assert p.dist[0, 2] == 5  # 5.49
    assert p.dist[0, 3] == 6  # 5.5 rounds up
    assert p.dist[1, 2] == 5  # 4.6


class TestWModel:
    @pytest.mark.parametrize("n", [1, 2, 5, 8, 16])
    def test_degenerate_equals_onemax_exhaustive(self, n):
        X = full_cube(n)
        assert np.array_equal(WModel(WModelParams(n)).evaluate_batch(X), X.sum(axis=1))

    def test_all_ones_and_zeros(self):
        p = WModelParams(120)
        assert wmodel_evaluate(p, np.ones(120, dtype=np.int8)) == 120
        assert wmodel_evaluate(p, np.zeros(120, dtype=np.int8)) == 0

    @pytest.mark.parametrize("params", [WModelParams(120, 0, 12, 0), WModelParams(120, 100, 6, 4),
                                        WModelParams(120, 0, 0, 14), WModelParams(120, 1452, 0, 0),
                                        WModelParams(36, 60, 3, 5)])
    def test_optimum_is_reachable(self, params):
        # pull the all-ones target back through the epistasis layer block by block
        p = WModel(params)
        q = params.reduced_length
        h = params.upsilon if params.upsilon > 1 else 1
        y = np.empty(q, dtype=np.int8)
        for s in range(0, q, h):
            hh = min(h, q - s)
            M = _epistasis_matrix(hh) if hh > 1 else np.ones((1, 1), np.int8)
            sols = full_cube(hh)
            img = (sols.astype(int) @ M.T.astype(int)) % 2
            y[s:s + hh] = sols[np.flatnonzero((img == 1).all(axis=1))[0]]
        mu = params.mu if params.mu > 1 else 1
        x = np.zeros(params.n_bits, dtype=np.int8)
        x[: q * mu] = np.repeat(y, mu)
        assert p.evaluate(x) == p.max_fitness == q

    @given(st.data())
    @settings(max_examples=50, deadline=None)
    def test_neutral_pairs_evaluate_equal(self, data):
        mu = data.draw(st.sampled_from([2, 3, 4, 6, 12]))
        p = WModel(WModelParams(24, 0, mu, 0))
        x = np.array(data.draw(st.lists(st.integers(0, 1), min_size=24, max_size=24)), np.int8)
        # shuffling bits inside a block cannot change its majority vote
        y = x.copy()
        for s in range(0, 24 - 24 % mu, mu):
            y[s:s + mu] = np.array(data.draw(st.permutations(list(x[s:s + mu]))))
        assert np.array_equal(neutrality(x, mu), neutrality(y, mu))
        assert p.evaluate(x) == p.evaluate(y)

    def test_neutrality_ties_vote_one(self):
        assert neutrality(np.array([1, 0, 0, 0, 1, 1], np.int8), 2).tolist() == [[1, 0, 1]]
        assert neutrality(np.ones(7, np.int8), 3).shape == (1, 2)

    @pytest.mark.parametrize("h", range(2, 13))
    def test_epistasis_is_bijective(self, h):
        Y = epistasis(full_cube(h), h)
        assert len({row.tobytes() for row in Y}) == 2 ** h

    def test_epistasis_single_flip_spreads(self):
        x = np.zeros(8, np.int8)
        y = x.copy()
        y[3] = 1
        assert np.count_nonzero(epistasis(x, 8) != epistasis(y, 8)) == 7

    @pytest.mark.parametrize("q", range(1, 12))
    def test_ruggedness_permutation_every_gamma(self, q):
        for gamma in range(q * (q - 1) // 2 + 1):
            r = ruggedness_permutation(gamma, q)
            assert sorted(r.tolist()) == list(range(q + 1))
            assert r[0] == 0
            assert np.abs(np.diff(r)).sum() == q + gamma

    def test_ruggedness_identity_and_extremes(self):
        assert ruggedness_permutation(0, 5).tolist() == [0, 1, 2, 3, 4, 5]
        assert ruggedness_permutation(10, 5).tolist() == [0, 5, 1, 4, 2, 3]

    def test_ruggedness_keeps_optimum(self):
        p = WModel(WModelParams(20, 150, 0, 0))
        assert p.evaluate(np.ones(20, np.int8)) == 20
        X = np.random.default_rng(0).integers(0, 2, (500, 20))
        assert (p.evaluate_batch(X[X.sum(axis=1) < 20]) < 20).all()

    def test_parameter_ranges(self):
        assert WModelParams(120).max_gamma == 7140
        WModel(WModelParams(120, 5808))
        with pytest.raises(ConfigurationError):
            WModel(WModelParams(120, 7260))
        with pytest.raises(ConfigurationError):
            WModel(WModelParams(120, 0, 121))
        with pytest.raises(ConfigurationError):
            WModel(WModelParams(120, 0, 48, 3))
        with pytest.raises(ConfigurationError):
            WModel(WModelParams(120, 0, 0, -1))

    def test_wrong_length(self):
        with pytest.raises(ValidationError):
            wmodel_evaluate(WModelParams(10), np.ones(9))


MINI = """NAME : mini
COMMENT : three cities
TYPE : TSP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 0
3 0 4
EOF
"""


class TestTsplib:
    def test_minimal(self):
        p = parse_tsplib(MINI)
        assert p.D == 3 and p.name == "mini"
        assert p.evaluate([1, 2, 3]) == -12
        assert parse_tsplib(MINI.encode()).D == 3

    def test_large_dimension(self):
        rng = np.random.default_rng(0)
        lines = ["NAME : big", "TYPE : TSP", "DIMENSION : 574", "EDGE_WEIGHT_TYPE : EUC_2D",
                 "NODE_COORD_SECTION"]
        lines += [f"{i} {x:.3f} {y:.3f}" for i, (x, y) in enumerate(rng.random((574, 2)) * 1e4, 1)]
        assert parse_tsplib("\n".join(lines) + "\nEOF\n").D == 574

    @pytest.mark.parametrize("text,line", [
        (MINI.replace("3 0 4\n", ""), 6),
        (MINI.replace("EUC_2D", "GEO"), 5),
        (MINI.replace("TYPE : TSP", "TYPE : ATSP"), 3),
        (MINI.replace("2 3 0", "2 x 0"), 8),
        (MINI.replace("NODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\n", ""), None),
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(ParseError) as exc:
            parse_tsplib(text)
        assert exc.value.line == line

    def test_read_file(self, tmp_path):
        f = tmp_path / "mini.tsp"
        f.write_text(MINI)
        assert read_tsplib(f).D == 3


class TestRue:
    def test_size_and_determinism(self):
        a, b = generate_rue(500, 1), generate_rue(500, 1)
        assert a.D == 500
        assert np.array_equal(a.coords, b.coords)
        assert not np.array_equal(a.coords, generate_rue(500, 2).coords)
        assert (a.coords == np.rint(a.coords)).all()

    def test_too_small(self):
        with pytest.raises(ConfigurationError):
            generate_rue(2, 0)


@pytest.mark.parametrize("p", [OneMax(7), WModel(WModelParams(30, 10, 2, 3)), generate_rue(9, 4)])
def test_descriptor_round_trip(p):
    q = problem_from_descriptor(p.descriptor())
    assert q.fingerprint == p.fingerprint
    rng = np.random.default_rng(0)
    if p.kind == "tsp":
        X = np.array([rng.permutation(9) + 1 for _ in range(20)])
    else:
        X = rng.integers(0, 2, (20, p.D))
    assert np.array_equal(p.evaluate_batch(X), q.evaluate_batch(X))
