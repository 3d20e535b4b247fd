import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxthirding import (BanditInstance, BoxThirding, NoiseModel, RandomSource, UniformSampling,
                         candidate_set, candidate_sets, c0_bounds, decompose_error, is_data_poor,
                         make_alpha_instance, n_eps, non_inclusion_exact)
from boxthirding.analysis import b3_processing_cost, candidate_bound_report
from oracles import non_inclusion_enumerated, non_inclusion_fraction

DET = NoiseModel("deterministic")


def _trace(policy, inst, T, seed=0):
    rng = RandomSource(seed)
    policy.start(inst.n_arms)
    for _ in range(T):
        policy.step(inst, rng)
    return policy.trace_


@pytest.mark.parametrize("N, n_good, c0, expected", [
    (10, 1, 9, 0.1),
    (5, 2, 1, 0.6),
    (6, 3, 4, 0.0),
    (8, 0, 5, 1.0),
    (8, 3, 0, 1.0),
])
def test_non_inclusion_examples(N, n_good, c0, expected):
    assert non_inclusion_exact(N, n_good, c0) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12).flatmap(
    lambda N: st.tuples(st.just(N), st.integers(0, N), st.integers(0, N))))
def test_non_inclusion_matches_enumeration(args):
    N, n_good, c0 = args
    exact = non_inclusion_enumerated(N, n_good, c0)
    assert non_inclusion_exact(N, n_good, c0) == pytest.approx(float(exact), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3000).flatmap(
    lambda N: st.tuples(st.just(N), st.integers(0, N), st.integers(0, N))))
def test_non_inclusion_large_counts(args):
    N, n_good, c0 = args
    exact = float(non_inclusion_fraction(N, n_good, c0))
    assert non_inclusion_exact(N, n_good, c0) == pytest.approx(exact, rel=1e-9, abs=1e-300)


@pytest.mark.parametrize("args", [(0, 0, 0), (5, 6, 1), (5, 1, 6), (5, -1, 2)])
def test_non_inclusion_rejects_bad_counts(args):
    with pytest.raises(ValueError):
        non_inclusion_exact(*args)


def test_non_inclusion_matches_random_candidate_sets():
    # US with T < N pulls a uniform random subset of T arms, so its
    # non-inclusion frequency should follow the hypergeometric formula.
    N, good, T, trials = 50, 5, 10, 10_000
    base = make_alpha_instance(N, 1.0, noise=DET)
    rng = RandomSource(99)
    misses = 0
    for trial in range(trials):
        inst = base.shuffled(rng)
        trace = _trace(UniformSampling(), inst, T, seed=trial)
        arms = candidate_set(trace, "us", N, T).arms
        misses += all(inst.natural(a) >= good for a in arms)
    p = non_inclusion_exact(N, good, T)
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(misses / trials - p) <= 4 * se


@pytest.mark.parametrize("N, n_good, c0, expected", [
    (100, 5, 95, True),
    (100, 5, 96, False),
    (100, 0, 99, True),
    (100, 0, 100, False),
    (10, 10, 0, True),
    (10, 10, 1, False),
])
def test_is_data_poor(N, n_good, c0, expected):
    assert is_data_poor(N, n_good, c0) is expected


def test_data_poor_iff_non_inclusion_possible():
    for N in range(1, 9):
        for good in range(1, N + 1):
            for c0 in range(N + 1):
                assert is_data_poor(N, good, c0) == (non_inclusion_exact(N, good, c0) > 0)


def test_c0_bounds_examples():
    assert c0_bounds("bsh", 1024) == (28, 44)
    assert c0_bounds("us", 50) == (50, 50)
    lower, upper = c0_bounds("b3", 3000)
    assert 0 < lower <= upper
    assert b3_processing_cost(lower) <= 1500 <= 3000 <= b3_processing_cost(upper)


@pytest.mark.parametrize("args", [("bsh", 1), ("us", 0), ("sh", 100), ("bucb", 100)])
def test_c0_bounds_errors(args):
    with pytest.raises(ValueError):
        c0_bounds(*args)


def test_c0_bounds_b3_approach_linear_growth():
    # the per-arm processing cost converges, so c0 / T settles to a constant
    ratios = [c0_bounds("b3", 10 ** k)[1] / 10 ** k for k in range(3, 8)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    steps = [a / b for a, b in zip(ratios, ratios[1:])]
    assert all(a > b for a, b in zip(steps, steps[1:]))
    assert ratios[-1] > 0.13


def test_bound_report_fields():
    report = candidate_bound_report("bsh", 1024)
    assert json.loads(report.to_json()) == {"algorithm": "bsh", "T": 1024, "c0": 28,
                                            "method": "closed_form_bound", "bounds": [28, 44]}


def test_b3_candidate_set_worked_example(worked_example):
    trace = _trace(BoxThirding(order="sequential"), worked_example, 6)
    report = candidate_set(trace, "b3", 5, 6)
    assert report.arms == (0, 1, 2) and report.c0 == 3
    assert json.loads(report.to_json()) == {"T": 6, "algorithm": "b3", "arms": [0, 1, 2],
                                            "c0": 3, "method": "trace"}


def test_candidate_sets_single_pass_agrees():
    inst = make_alpha_instance(40, 0.5, random_state=3, noise=NoiseModel("gaussian", 0.5))
    for name, policy in (("b3", BoxThirding()), ("us", UniformSampling())):
        trace = _trace(policy, inst, 300, seed=4)
        budgets = [0, 1, 17, 100, 250, 300, 500]
        many = candidate_sets(trace, name, 40, budgets)
        assert [r.T for r in many] == budgets
        for report in many:
            assert report == candidate_set(trace, name, 40, report.T)
        assert many[0].c0 == 0
        # a budget past the end of the trace reads the final state
        assert many[-1].arms == many[-2].arms


def test_candidate_sets_nested_for_pulled_rules():
    inst = make_alpha_instance(30, 1.0, noise=DET)
    trace = _trace(UniformSampling(), inst, 60, seed=2)
    reports = candidate_sets(trace, "us", 30, range(1, 61))
    for a, b in zip(reports, reports[1:]):
        assert set(a.arms) <= set(b.arms)
    assert reports[-1].c0 == 30


def test_candidate_set_mismatches():
    inst = make_alpha_instance(10, 1.0, noise=DET)
    trace = _trace(UniformSampling(), inst, 5)
    with pytest.raises(ValueError):
        candidate_set(trace, "b3", 10, 5)
    with pytest.raises(ValueError):
        candidate_set(trace, "us", 11, 5)
    with pytest.raises(ValueError):
        candidate_set(trace, "thompson", 10, 5)
    with pytest.raises(ValueError):
        candidate_set(trace, "us", 10, -1)


def test_decompose_example():
    inst = BanditInstance([1.0, 0.9, 0.5], DET)
    outcomes = [([1, 2], 2), ([2], 2), ([0, 1], 1)]
    d = decompose_error(outcomes, inst, 0.3, algorithm="x", T=7)
    assert (d.non_inclusion_rate, d.within_set_rate, d.total_rate) == (1 / 3, 1 / 3, 2 / 3)
    assert d.flags == ((False, True, True), (True, False, True), (False, False, False))
    assert set(json.loads(d.to_json())) == {"algorithm", "T", "eps", "non_inclusion_rate",
                                            "within_set_rate", "total_rate", "n"}


@pytest.mark.parametrize("eps", [0.0, -0.1])
def test_decompose_rejects_nonpositive_eps(eps):
    inst = BanditInstance([1.0, 0.5], DET)
    with pytest.raises(ValueError):
        decompose_error([([0], 0)], inst, eps)


def test_decompose_rejects_bad_outcomes():
    inst = BanditInstance([1.0, 0.5], DET)
    with pytest.raises(ValueError):
        decompose_error([([0], 1)], inst, 0.1)
    with pytest.raises(ValueError):
        decompose_error([([], 0)], inst, 0.1)
    with pytest.raises(ValueError):
        decompose_error([], inst, 0.1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=12), st.floats(0.001, 1.0),
       st.integers(0, 2 ** 32 - 1))
def test_total_error_bounded_by_its_parts(means, eps, seed):
    inst = BanditInstance(means, DET)
    rng = np.random.default_rng(seed)
    outcomes = []
    for _ in range(20):
        size = int(rng.integers(1, len(means) + 1))
        cand = rng.choice(len(means), size, replace=False).tolist()
        outcomes.append((cand, int(rng.choice(cand))))
    d = decompose_error(outcomes, inst, eps)
    for non_incl, within, total in d.flags:
        assert not total or non_incl or within
    assert d.total_rate <= d.non_inclusion_rate + d.within_set_rate + 1e-12


def test_decompose_reads_presented_labels():
    inst = BanditInstance([1.0, 0.2], DET, order=[1, 0])
    d = decompose_error([([1], 1)], inst, 0.1)
    assert d.total_rate == 0.0
    assert n_eps(inst.means, 0.1) == 1
