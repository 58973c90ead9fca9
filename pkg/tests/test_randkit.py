import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxcount.randkit import RandStream, bernoulli_pow2, derive_stream, geometric
from approxcount.stats import chi_square_gof

ALPHA = 1e-3


def draws(s, k=1000):
    return [s.raw64() for _ in range(k)]


def test_same_seed_and_path_same_sequence():
    assert draws(RandStream(7, [1, 2])) == draws(RandStream(7, [1, 2]))


def test_derive_is_deterministic():
    s = RandStream(123)
    assert draws(derive_stream(s, 0)) == draws(derive_stream(s, 0))


def test_sibling_streams_differ():
    s = RandStream(123)
    assert draws(derive_stream(s, 0)) != draws(derive_stream(s, 1))


def test_derive_composes_paths():
    s = RandStream(99)
    assert draws(derive_stream(derive_stream(s, 2), 3)) == draws(RandStream(99, [2, 3]))


def test_derive_leaves_parent_untouched():
    a, b = RandStream(5), RandStream(5)
    a.derive(4)
    assert a.raw64() == b.raw64()


@given(st.integers(0, 2**64 - 1), st.lists(st.integers(0, 2**64 - 1), max_size=4))
@settings(max_examples=30, deadline=None)
def test_any_seed_and_path_reproducible(seed, path):
    assert draws(RandStream(seed, path), 5) == draws(RandStream(seed, path), 5)


def test_rejects_out_of_range_seed():
    with pytest.raises(ValueError):
        RandStream(-1)
    with pytest.raises(ValueError):
        RandStream(0, [2**64])


def test_bernoulli_pow2_t0_always_true():
    s = RandStream(1)
    assert all(bernoulli_pow2(s, 0) for _ in range(1000))


def test_bernoulli_pow2_t0_consumes_nothing():
    a, b = RandStream(1), RandStream(1)
    a.bernoulli_pow2(0)
    assert a.raw64() == b.raw64()


def test_bernoulli_pow2_fair_coin():
    s = RandStream(2)
    freq = sum(bernoulli_pow2(s, 1) for _ in range(100_000)) / 100_000
    assert abs(freq - 0.5) <= 0.01


@pytest.mark.parametrize("t", [3, 7])
def test_bernoulli_pow2_rate(t):
    s = RandStream(3, [t])
    n = 100_000
    p = 2.0 ** -t
    freq = sum(s.bernoulli_pow2(t) for _ in range(n)) / n
    assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_bernoulli_pow2_fixed_entropy():
    # t = 70 spans two words regardless of the outcome of the first
    a, b = RandStream(4), RandStream(4)
    a.bernoulli_pow2(70)
    b.raw64()
    b.raw64()
    assert a.raw64() == b.raw64()


def test_bernoulli_pow2_rejects_negative():
    with pytest.raises(ValueError):
        RandStream(0).bernoulli_pow2(-1)


def test_geometric_p1_is_one():
    s = RandStream(5)
    assert all(geometric(s, 1.0) == 1 for _ in range(100))


@pytest.mark.parametrize("p", [0.0, -0.5, 1.5])
def test_geometric_domain(p):
    with pytest.raises(ValueError):
        geometric(RandStream(0), p)


def geometric_pmf(p, lmax):
    q = Fraction(p)
    pmf = {l: float((1 - q) ** (l - 1) * q) for l in range(1, lmax)}
    pmf[lmax] = 1 - sum(pmf.values())  # tail cell
    return pmf


def test_geometric_quarter_pmf_value():
    assert Fraction(3, 4) ** 2 * Fraction(1, 4) == Fraction(9, 64)


def test_geometric_quarter_chi_square():
    s = RandStream(6)
    lmax = 40
    samples = [min(geometric(s, 0.25), lmax) for _ in range(100_000)]
    _, _, pval = chi_square_gof(samples, geometric_pmf(0.25, lmax))
    assert pval > ALPHA


def test_geometric_half_mean():
    s = RandStream(7)
    mean = sum(geometric(s, 0.5) for _ in range(100_000)) / 100_000
    assert abs(mean - 2) <= 0.05


def test_geometric_array_matches_pmf():
    s = RandStream(8)
    lmax = 40
    g = np.minimum(s.geometric_array(0.25, 100_000), lmax).astype(int)
    _, _, pval = chi_square_gof(g.tolist(), geometric_pmf(0.25, lmax))
    assert pval > ALPHA


def test_geometric_array_per_element_parameters():
    s = RandStream(9)
    g = s.geometric_array(np.array([1.0, 1.0, 1.0]), 3)
    assert g.tolist() == [1.0, 1.0, 1.0]


@pytest.mark.parametrize("t", [2, 4])
def test_bernoulli_gaps_are_geometric(t):
    s = RandStream(10, [t])
    gaps, run = [], 0
    while len(gaps) < 100_000:
        run += 1
        if s.bernoulli_pow2(t):
            gaps.append(run)
            run = 0
    lmax = 12 * 2**t
    gaps = [min(g, lmax) for g in gaps]
    _, _, pval = chi_square_gof(gaps, geometric_pmf(2.0 ** -t, lmax))
    assert pval > ALPHA
