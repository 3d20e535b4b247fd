import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxthirding import (BanditInstance, BracketedSH, BracketedUCB, ConfigError,
                         InsufficientBudgetError, NoiseModel, NoRecommendationError,
                         RandomSource, Schedule, SequentialHalving, UniformSampling,
                         candidate_set, make_alpha_instance, make_policy, sh_run, sh_t0)
from boxthirding.analysis import c0_bounds
from boxthirding.baselines import POLICIES, bracket_open_time, halving_sizes, open_brackets
from oracles import sh_t0_by_search

DET = NoiseModel("deterministic")


def _steps(policy, inst, T, seed=0, budget=None):
    rng = RandomSource(seed)
    policy.start(inst.n_arms, budget)
    for _ in range(T):
        policy.step(inst, rng)
    return policy


def test_us_data_poor_pulls_distinct_arms():
    inst = make_alpha_instance(10, 1.0, noise=DET)
    p = _steps(UniformSampling(), inst, 4, seed=3)
    assert sorted(p.pulls_) == [0] * 6 + [1] * 4
    assert candidate_set(p.trace_, "us", 10, 4).c0 == 4


def test_us_rotation_counts():
    inst = make_alpha_instance(3, 1.0, noise=DET)
    p = _steps(UniformSampling(), inst, 7, seed=1)
    assert [p.pulls_[a] for a in p._order] == [3, 2, 2]


def test_us_finds_best_without_noise():
    inst = make_alpha_instance(25, 0.7, random_state=2, noise=DET)
    p = _steps(UniformSampling(), inst, 25, seed=5)
    assert inst.natural(p.recommend()) == 0


def test_sh_t0_example():
    sched = Schedule("custom", table=(1, 2, 4))
    assert sh_t0(4, 24, sched) == 2 == sh_t0_by_search(4, 24, sched.table)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 300), st.integers(0, 20_000))
def test_sh_t0_matches_search(n, T):
    sched = Schedule()
    table = [sched(l) for l in range(12)]
    assert sh_t0(n, T) == sh_t0_by_search(n, T, table)


def test_sh_t0_equals_per_arm_rule_for_powers_of_two():
    sched = Schedule()
    for n in (2, 8, 64):
        levels = int(math.log2(n)) + 1
        weight = sum(sched(l) / 2 ** l for l in range(levels))
        for T in (300, 5000, 12345):
            rule = max(t for t in range(T + 1) if t * weight <= T / n + 1e-12)
            assert sh_t0(n, T) == rule


def test_sh_two_arms_returns_better_mean():
    inst = BanditInstance([0.3, 0.8], NoiseModel("gaussian", 0.01))
    assert sh_run(2, 50, "geometric", inst, 0) == 1


def test_sh_noise_free_eight_arms():
    inst = make_alpha_instance(8, 1.0, random_state=4, noise=DET)
    assert sh_t0(8, 30) == 1
    arm = sh_run(8, 30, "geometric", inst, 0)
    assert inst.natural(arm) == 0


def test_sh_insufficient_budget():
    inst = make_alpha_instance(16, 1.0, noise=DET)
    with pytest.raises(InsufficientBudgetError):
        SequentialHalving().start(16, 20)
    with pytest.raises(InsufficientBudgetError):
        sh_run(16, 20, "geometric", inst)
    with pytest.raises(ValueError):
        SequentialHalving().start(16)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5000))
def test_halving_sizes(n):
    sizes = halving_sizes(n)
    assert len(sizes) == n.bit_length() == math.floor(math.log2(n)) + 1
    assert sizes[0] == n
    assert all(b == math.ceil(a / 2) for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] in (1, 2)


def test_sh_survivors_halve_and_plan_fits_budget():
    inst = make_alpha_instance(37, 0.5, random_state=1, noise=NoiseModel("gaussian", 0.5))
    T = 900
    p = SequentialHalving()
    rng = RandomSource(0)
    p.start(37, T)
    sizes = []
    for _ in range(T):
        p.step(inst, rng)
        if not sizes or sizes[-1] != len(p.survivors_):
            sizes.append(len(p.survivors_))
    assert sizes == halving_sizes(37) + [1]
    halves = [e for e in p.trace_.events if e[3] == "halve"]
    assert len(halves) == len(halving_sizes(37))
    assert halves[-1][0] <= T


def test_sh_t0_scales_linearly_in_budget():
    ratios = [sh_t0(64, T) * 64 / T for T in (10 ** 3, 10 ** 4, 10 ** 5)]
    assert min(ratios) > 0
    assert max(ratios) / min(ratios) <= 1.5


def test_bracket_opening_times():
    assert [bracket_open_time(b) for b in range(1, 10)] == [0, 2, 8, 24, 64, 160, 384, 896, 2048]
    for B in range(2, 10):
        assert open_brackets(bracket_open_time(B) - 1) == B - 1
        assert open_brackets(bracket_open_time(B)) == B


@pytest.mark.parametrize("cls", [BracketedSH, BracketedUCB])
def test_brackets_open_on_schedule_with_doubling_sizes(cls):
    inst = make_alpha_instance(5000, 1.0, noise=DET)
    p = cls()
    rng = RandomSource(3)
    p.start(inst.n_arms)
    for t in range(1000):
        assert len(p.brackets_) == (open_brackets(t - 1) if t else 0)
        p.step(inst, rng)
        assert len(p.brackets_) == open_brackets(t)
    assert [len(br.members) for br in p.brackets_] == [2 ** b for b in range(1, 9)]
    assert all(len(set(br.members)) == len(br.members) for br in p.brackets_)
    opens = [(e[0], e[4][0]) for e in p.trace_.events if e[3] == "bracket_open"]
    assert opens == [(bracket_open_time(b), b) for b in range(1, 9)]


def test_bracket_size_capped_by_arm_count():
    inst = make_alpha_instance(5, 1.0, noise=DET)
    p = _steps(BracketedSH(), inst, 30)
    assert [len(br.members) for br in p.brackets_] == [2, 4, 5, 5]


def test_bsh_single_pull():
    inst = make_alpha_instance(10, 1.0, noise=DET)
    p = _steps(BracketedSH(), inst, 1, seed=7)
    assert len(p.brackets_) == 1 and len(p.brackets_[0].members) == 2
    pulled = [a for a in range(10) if p.pulls_[a]]
    assert len(pulled) == 1 and p.recommend() == pulled[0]


def test_bsh_recommends_champion():
    inst = make_alpha_instance(64, 1.0, random_state=1, noise=DET)
    p = _steps(BracketedSH(), inst, 400, seed=2)
    champions = {br.champion for br in p.brackets_ if br.champion is not None}
    assert p.recommend() in champions
    best = max(champions, key=lambda a: inst.arm_means[a])
    assert p.recommend() == best


@pytest.mark.parametrize("T", [300, 1000])
def test_bsh_candidate_size_within_closed_form(T):
    inst = make_alpha_instance(100_000, 1.0, noise=DET)
    p = _steps(BracketedSH(), inst, T, seed=1)
    lower, upper = c0_bounds("bsh", T)
    assert lower <= candidate_set(p.trace_, "bsh", inst.n_arms, T).c0 <= upper


def test_bucb_unpulled_arm_first():
    inst = BanditInstance([0.9, 0.1, 0.5], DET)
    p = _steps(BracketedUCB(), inst, 2, seed=0)
    (bracket,) = p.brackets_
    assert sorted(a for a in bracket.members if bracket.stats[a][0]) == sorted(bracket.members)


def test_bucb_radius():
    p = BracketedUCB(delta=0.1).start(2)
    for n in (1, 4, 100):
        assert p.radius(n) == pytest.approx(math.sqrt(2 * math.log(10) / n))
    assert p.radius(1) == pytest.approx(2.146, abs=1e-3)


def test_bucb_index_follows_radius():
    inst = BanditInstance([0.5, 0.6], NoiseModel("deterministic"))
    p = _steps(BracketedUCB(), inst, 2, seed=0)
    # both pulled once: indices 0.5+r(1), 0.6+r(1), so the next pull goes to arm 1
    arm, _ = p.step(inst, RandomSource(0))
    assert arm == 1


def test_bucb_two_arms_noise_free():
    inst = BanditInstance([0.2, 0.7], DET)
    p = _steps(BracketedUCB(), inst, 2, seed=0)
    assert p.recommend() == 1


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.5, 2.0, "x"])
def test_bucb_delta_validation(delta):
    with pytest.raises(ConfigError):
        BracketedUCB(delta=delta).start(4)


@pytest.mark.parametrize("name", sorted(POLICIES))
def test_recommend_before_pull(name):
    p = make_policy(name)
    p.start(4, 100)
    with pytest.raises(NoRecommendationError):
        p.recommend()


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(sorted(POLICIES)), st.integers(0, 10 ** 6), st.integers(1, 60),
       st.integers(1, 300))
def test_contract_conformance(name, seed, n, T):
    inst = make_alpha_instance(n, 0.5, random_state=seed, noise=NoiseModel("gaussian", 0.5))
    p = make_policy(name)
    budget = T if p.requires_budget else None
    try:
        p.start(n, budget)
    except InsufficientBudgetError:
        assert name == "sh"
        return
    rng = RandomSource(seed)
    for t in range(1, T + 1):
        p.step(inst, rng)
        assert sum(p.pulls_) == t == p.t_
        snapshot = (list(p.pulls_), list(p.sums_), len(p.trace_))
        first = p.recommend()
        assert p.recommend() == first
        assert snapshot == (list(p.pulls_), list(p.sums_), len(p.trace_))
        assert 0 <= first < n and p.pulls_[first] > 0


def test_unknown_policy():
    with pytest.raises(ConfigError):
        make_policy("thompson")
    with pytest.raises(ConfigError):
        make_policy("us", delta=0.1)


def test_requires_budget_flags():
    assert {n for n, c in POLICIES.items() if c.requires_budget} == {"sh"}
