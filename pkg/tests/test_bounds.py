from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsatbench import bounds
from qsatbench.bounds import (
    DetectionConfig,
    GroverParams,
    cached_config,
    detection_queries,
    grover_expected_queries,
    majority_error,
    optimize_detection_config,
    search_amplification,
    search_queries,
    walk_intermediates,
)
from qsatbench.errors import InvalidDepthError, NoAmplificationError
from qsatbench.oracles import amplification_exact, grover_reference, majority_error_exact, search_bound_reference

TABLE = [
    (1e-1, 4.107, 3, 25.701),
    (1e-2, 3.698, 13, 95.751),
    (1e-3, 3.735, 23, 171.894),
    (1e-4, 3.778, 33, 250.710),
    (1e-5, 3.813, 43, 331.004),
    (1e-6, 3.742, 55, 412.068),
]


def test_majority_error_examples():
    assert majority_error(4.107, 3) == pytest.approx(0.100, abs=1e-3)
    # 3.735 is C rounded down; the error is 1e-3 up to that rounding
    assert majority_error(3.735, 23) == pytest.approx(1e-3, rel=1e-3)
    assert majority_error(3.7354, 23) <= 1e-3
    for C in (1.5, 4.0, 17.0):
        assert majority_error(C, 1) == pytest.approx(1 / (1 + C), rel=1e-14)


@given(st.fractions(Fraction(1, 10), Fraction(50)), st.integers(0, 100))
@settings(max_examples=60, deadline=None)
def test_majority_error_exact_rationals(C, half):
    l = 2 * half + 1
    assert majority_error(float(C), l) == pytest.approx(float(majority_error_exact(C, l)), rel=1e-12)


def test_majority_error_monotone():
    Cs = np.linspace(1.05, 20, 40)
    for l in range(1, 60, 2):
        errs = [majority_error(C, l) for C in Cs]
        assert all(a > b for a, b in zip(errs, errs[1:]))
    for C in (1.5, 3.7, 10.0):
        errs = [majority_error(C, l) for l in range(1, 80, 2)]
        assert all(a > b for a, b in zip(errs, errs[1:]))


def test_majority_error_rejects_even_l():
    with pytest.raises(ValueError):
        majority_error(3.0, 4)


@pytest.mark.parametrize("delta,C,l,coeff", TABLE)
def test_configuration_table(delta, C, l, coeff):
    cfg = optimize_detection_config(delta)
    assert cfg.l == l
    assert cfg.C == pytest.approx(C, abs=0.01)
    assert cfg.coefficient == pytest.approx(coeff, abs=0.2)
    assert cfg.C > 1
    assert majority_error(cfg.C, cfg.l) == pytest.approx(delta, rel=1e-4)


@pytest.mark.parametrize("delta", [0.5, 0.7, 0.0])
def test_no_amplification(delta):
    with pytest.raises(NoAmplificationError):
        optimize_detection_config(delta)


def test_detection_example():
    cfg = optimize_detection_config(0.1)
    q = detection_queries(cfg, 10, 10)
    assert q.smooth == pytest.approx(25.701 * math.sqrt(100 + 1 / 4.107) - 3, abs=0.1)
    assert q.precision_bits == 7
    assert q.rounded == 381


def test_detection_smooth_closed_form():
    cfg = cached_config(1e-3)
    for RW in (1.0, 7.5, 1e3, 1e9):
        closed = cfg.coefficient * math.sqrt(RW + 1 / cfg.C) - cfg.l
        assert detection_queries(cfg, 1, RW).smooth == pytest.approx(closed, rel=1e-12)


def test_detection_small_limit():
    cfg = cached_config(1e-2)
    q = detection_queries(cfg, 1e-12, 1e-12)
    assert q.smooth == pytest.approx(cfg.l * (math.sqrt(1 + cfg.C**2) - 1), rel=1e-9)


@given(st.floats(1, 1e4), st.floats(1, 1e12), st.sampled_from([1e-1, 1e-3, 1e-6]))
@settings(deadline=None)
def test_rounding_bracket(R, W, delta):
    cfg = cached_config(delta)
    q = detection_queries(cfg, R, W)
    M = walk_intermediates(cfg, R, W).M
    assert cfg.l * (M - 1) <= q.rounded <= cfg.l * (2 * M - 1)
    assert M <= 2**q.precision_bits < 2 * M


def test_walk_intermediates_optimum():
    w = walk_intermediates(cached_config(1e-3), 10, 1000)
    assert w.a == pytest.approx(math.sqrt(w.b))


def test_detection_rejects_nonpositive():
    with pytest.raises(ValueError):
        detection_queries(cached_config(0.1), 0, 5)


def test_power_of_two_boundary():
    # M exactly 2**6 must give 6 bits, not 7
    cfg = DetectionConfig(0.1, 1.0, 1)
    RW = (64**2 / 2 - 1) / 1.0
    assert detection_queries(cfg, 1, RW).precision_bits == 6


def test_search_amplification_examples():
    for delta in (0.1, 1e-3, 0.3):
        assert search_amplification(delta, 1) == 1
    assert search_amplification(1e-3, 20) == amplification_exact(Fraction(1, 1000), 20)


@pytest.mark.parametrize("delta", [0.1, 0.01, 1e-3])
def test_search_amplification_nondecreasing(delta):
    ls = [search_amplification(delta, n) for n in range(1, 101)]
    assert all(a <= b for a, b in zip(ls, ls[1:]))
    assert all(l % 2 == 1 for l in ls)


def test_search_amplification_matches_exact():
    for n in (1, 2, 3, 7, 50, 200):
        for delta in (Fraction(1, 10), Fraction(1, 100)):
            assert search_amplification(float(delta), n) == amplification_exact(delta, n)


def test_search_single_term():
    cfg = cached_config(1e-3)
    want = search_amplification(1e-3, 5) * detection_queries(cfg, 5, 2).rounded
    assert search_queries(1e-3, 5, 1, 5, None) == want


def test_search_against_reference():
    cfg = cached_config(1e-3)
    ref = search_bound_reference(cfg.C, cfg.l, search_amplification(1e-3, 10), 10, 1000, 10, 4)
    assert search_queries(1e-3, 10, 1000, 10, 4) == pytest.approx(float(ref), rel=1e-12)


def test_search_monotone_in_T():
    prev = 0.0
    for T in range(1, 2**12):
        q = search_queries(1e-3, 12, T, 12, 5)
        assert q >= prev
        prev = q
    # each extra doubling round adds strictly positive cost
    vals = [search_queries(1e-3, 12, 2**j, 12, None) for j in range(21)]
    assert all(a < b for a, b in zip(vals[1:], vals[2:]))


def test_search_invalid_depth():
    with pytest.raises(InvalidDepthError):
        search_queries(1e-3, 5, 10, 5, 6)


def test_grover_unsat_coefficient():
    p = GroverParams(1e-3, 0)
    for n in (4, 10, 20, 30):
        assert grover_expected_queries(p, 2**n, 0) == pytest.approx(64.4 * 2 ** (n / 2), rel=1e-12)


def test_grover_all_marked():
    N = 2**10
    want = 2.0344 * (1 + 1 / (1 - 2.0344 / (9.2 * math.sqrt(N))))
    assert grover_expected_queries(GroverParams(), N, N) == pytest.approx(want, rel=1e-12)


def test_grover_single_mark():
    assert grover_expected_queries(GroverParams(), 1024, 1) == pytest.approx(float(grover_reference(1024, 1)), rel=1e-12)


@given(st.integers(4, 40), st.floats(0, 1), st.integers(0, 50))
@settings(deadline=None)
def test_grover_against_reference(n, frac, samples):
    N = 2**n
    t = int(frac * N)
    got = grover_expected_queries(GroverParams(1e-3, samples), N, t)
    assert got == pytest.approx(float(grover_reference(N, t, 1e-3, samples)), rel=1e-9)


def test_grover_alpha_fixed():
    with pytest.raises(ValueError):
        GroverParams(alpha=3.0)


def test_grover_rejects_t_above_N():
    with pytest.raises(ValueError):
        grover_expected_queries(GroverParams(), 8, 9)


def test_ceil_log2_exact():
    assert bounds._ceil_log2(8.0) == 3
    assert bounds._ceil_log2(8.000001) == 4
    assert bounds._ceil_log2(1.0) == 0
