import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from boxthirding import Schedule, schedule_budget, solve_rate
from boxthirding.schedules import bisect_root, ceil_guarded


def test_geometric_rate():
    r = solve_rate("geometric")
    assert round(r, 3) == 1.728
    assert abs(r + r ** 1.5 - 4) < 1e-12
    assert r == pytest.approx(brentq(lambda x: x + x ** 1.5 - 4, 1, 2, xtol=1e-14), abs=1e-11)


def test_linear_geometric_rate():
    r = solve_rate("linear_geometric")
    assert round(r, 3) == 1.434
    assert abs(r - 2 * r ** 1.5 + 2) < 1e-12


def test_unknown_rate_kind():
    with pytest.raises(ValueError):
        solve_rate("cubic")


def test_bisect_requires_sign_change():
    with pytest.raises(ValueError):
        bisect_root(lambda x: x * x + 1, -1, 1)


def test_schedule_examples():
    geo = Schedule()
    assert schedule_budget(0, geo) == 1
    assert schedule_budget(1, geo) == 2
    assert schedule_budget(4, geo) == 9
    lin = Schedule("linear_geometric")
    r = brentq(lambda x: x - 2 * x ** 1.5 + 2, 1, 2, xtol=1e-14)
    assert schedule_budget(2, lin) == math.ceil(3 * r ** 2) == 7


def test_custom_schedule_lookup():
    sched = Schedule("custom", table=(1, 2, 4))
    assert [sched(l) for l in range(3)] == [1, 2, 4]
    with pytest.raises(ValueError):
        sched(3)


@pytest.mark.parametrize("table", [(), (0, 1), (3, 2)])
def test_custom_schedule_validation(table):
    with pytest.raises(ValueError):
        Schedule("custom", table=table)


@pytest.mark.parametrize("r0", [1.0, 2.5])
def test_rate_must_lie_in_unit_to_two(r0):
    with pytest.raises(ValueError):
        Schedule("geometric", r0)


def test_negative_level_rejected():
    with pytest.raises(ValueError):
        schedule_budget(-1, Schedule())


def test_ceil_guard_snaps_near_integers():
    assert ceil_guarded(1.0) == 1
    assert ceil_guarded(2.0 + 5e-10) == 2
    assert ceil_guarded(2.0 - 5e-10) == 2
    assert ceil_guarded(2.01) == 3
    assert schedule_budget(3, Schedule("geometric", 2.0)) == 8


def test_coerce():
    assert Schedule.coerce(None) == Schedule()
    assert Schedule.coerce("linear_geometric").kind == "linear_geometric"
    assert Schedule.coerce(2.0).r0 == 2.0
    assert Schedule.coerce({"kind": "custom", "table": [1, 1, 2]}).table == (1, 1, 2)
    with pytest.raises(ValueError):
        Schedule.coerce([1, 2])


@given(st.sampled_from(["geometric", "linear_geometric"]), st.floats(1.01, 2.0), st.integers(0, 30))
def test_schedules_are_positive_and_nondecreasing(kind, r0, level):
    sched = Schedule(kind, r0)
    assert sched(level) >= 1
    assert sched(level + 1) >= sched(level)
