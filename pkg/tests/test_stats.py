import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roomdims.features import FEATURE_COLUMNS, FeatureTable, FeatureVector
from roomdims.mds import Embedding
from roomdims.stats import (
    DegenerateRanksError,
    correlation_matrix,
    kendall_counts,
    kendall_tau_b,
    write_correlation_csv,
)


def brute_counts(x, y):
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    c = d = tx = ty = 0
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            a = (x[j] > x[i]) - (x[j] < x[i])
            b = (y[j] > y[i]) - (y[j] < y[i])
            if a * b > 0:
                c += 1
            elif a * b < 0:
                d += 1
            elif a == 0 and b != 0:
                tx += 1
            elif b == 0 and a != 0:
                ty += 1
    return c, d, tx, ty


def brute_tau_and_p(x, y):
    """tau-b and the two-sided permutation p-value over all n! orderings of y."""
    c, d, tx, ty = brute_counts(x, y)
    tau = (c - d) / math.sqrt((c + d + tx) * (c + d + ty))
    s_obs = abs(c - d)
    hits = total = 0
    for perm in itertools.permutations(y):
        c2, d2, _, _ = brute_counts(x, perm)
        hits += abs(c2 - d2) >= s_obs
        total += 1
    return tau, hits / total


def make_sets():
    rng = np.random.default_rng(0)
    out = []
    for n in range(3, 8):
        for _ in range(4):
            x = rng.integers(0, n, n).astype(float)  # ties likely
            y = rng.integers(0, n + 2, n).astype(float)
            if np.ptp(x) and np.ptp(y):
                out.append((x, y))
        out.append((rng.standard_normal(n), rng.standard_normal(n)))
    return out


TEST_SETS = make_sets()


@pytest.mark.parametrize("x,y", TEST_SETS)
def test_counts_match_brute_force(x, y):
    assert kendall_counts(x, y) == brute_counts(x, y)


@pytest.mark.parametrize("x,y", TEST_SETS)
def test_exact_p_matches_enumeration(x, y):
    tau, p = brute_tau_and_p(x, y)
    cell = kendall_tau_b(x, y)
    assert cell.tau_b == pytest.approx(tau, abs=1e-15)
    assert cell.p_value == pytest.approx(p, abs=1e-12)


def test_perfect_agreement():
    cell = kendall_tau_b([1, 2, 3, 4, 5], [10, 20, 30, 40, 50])
    assert cell.tau_b == 1.0
    assert cell.p_value == pytest.approx(2 / 120)


def test_sign_flip():
    rng = np.random.default_rng(1)
    x, y = rng.standard_normal(9), rng.standard_normal(9)
    a, b = kendall_tau_b(x, y), kendall_tau_b(x, -y)
    assert b.tau_b == -a.tau_b
    assert b.p_value == a.p_value


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(3, 9))
def test_monotone_transform_invariance(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 6, n).astype(float)
    y = rng.standard_normal(n)
    if np.ptp(x) == 0:
        x[0] += 1
    a = kendall_tau_b(x, y)
    b = kendall_tau_b(np.exp(x) * 3 + 1, y**3 - 2)
    assert a.tau_b == b.tau_b
    assert a.p_value == b.p_value


def test_normal_approximation_for_large_n():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(40)
    y = x + rng.standard_normal(40)
    cell = kendall_tau_b(x, y)
    from scipy.stats import kendalltau

    ref = kendalltau(x, y, method="asymptotic")
    assert cell.tau_b == pytest.approx(ref.statistic, abs=1e-12)
    assert cell.p_value == pytest.approx(ref.pvalue, rel=1e-6)


def test_degenerate():
    with pytest.raises(DegenerateRanksError, match="degenerate"):
        kendall_tau_b([1, 1, 1], [1, 2, 3])


def _table(labels, rng):
    rows = []
    for lab in labels:
        vals = rng.uniform(0.5, 2, len(FEATURE_COLUMNS))
        rows.append(FeatureVector(lab, *vals))
    return FeatureTable(rows)


class TestMatrix:
    def test_shape_and_degenerate_column(self, tmp_path):
        rng = np.random.default_rng(3)
        labels = list("abcdefg")
        table = _table(labels, rng)
        table.rows = [FeatureVector(**{**r.__dict__, "K": 0.0}) for r in table.rows]
        emb = Embedding(labels, rng.standard_normal((7, 2)), [0.1], 0.1, [0.9], 0.9, 2)
        m = correlation_matrix(emb, table)
        assert len(m) == 2 and len(m[0]) == len(FEATURE_COLUMNS)
        assert m[0][FEATURE_COLUMNS.index("K")] is None
        write_correlation_csv(m, tmp_path / "c.csv", 0.1, "Fair")
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0].startswith("dimension,N_tau_b,N_p,S_tau_b")
        assert lines[0].endswith("n,solution_stress1,fit")
        assert ",,," in lines[1]  # the empty K cells
        assert lines[1].endswith(",7,0.100000,Fair")

    def test_label_mismatch(self):
        rng = np.random.default_rng(4)
        table = _table(list("abcd"), rng)
        emb = Embedding(list("abdc"), rng.standard_normal((4, 1)), [0.1], 0.1, [0.9], 0.9, 1)
        with pytest.raises(ValueError, match="label mismatch"):
            correlation_matrix(emb, table)
