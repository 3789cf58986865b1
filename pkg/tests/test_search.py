import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dltune.search import (
    Axis,
    Budget,
    ParamSpace,
    TrialResult,
    budget_estimate,
    default_lr_grid,
    default_space,
    grid_assignments,
    grid_search,
    lr_sweep,
    nelder_mead,
    nelder_mead_search,
    random_assignments,
    random_search,
    select_best,
)


def stub(score):
    return lambda a: TrialResult(dict(a), score(a), score(a))


def small_space():
    return ParamSpace((Axis("learning_rate", (0.1, 0.2)), Axis("hidden_dim", (1, 2, 3))), "FFNN")


def test_grid_is_lexicographic_with_last_axis_fastest():
    assert grid_assignments(small_space()) == [
        {"learning_rate": lr, "hidden_dim": h} for lr in (0.1, 0.2) for h in (1, 2, 3)
    ]


def test_default_spaces():
    for kind in ("FFNN", "SAE", "DBN"):
        assert default_space(kind).names == ["learning_rate", "batch_size", "hidden_dim"]
    assert default_space("RNN").names == ["learning_rate", "numepochs", "hidden_dim"]
    assert default_space("FFNN").axes[0].values == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    with pytest.raises(ValueError):
        default_space("CNN")


def test_grid_search_picks_best_and_earliest_on_ties():
    best, trials = grid_search(small_space(), stub(lambda a: 0.5 if a["hidden_dim"] < 3 else 0.9))
    assert len(trials) == 6
    assert best.assignment == {"learning_rate": 0.1, "hidden_dim": 3}


def test_grid_refuses_continuous_axes():
    space = ParamSpace((Axis("learning_rate", low=0.1, high=0.9),))
    with pytest.raises(ValueError):
        grid_assignments(space)


@given(st.integers(1, 60), st.integers(0, 2**32 - 1))
def test_random_draws_stay_in_space_and_are_seeded(n, seed):
    space = ParamSpace((Axis("learning_rate", low=0.01, high=0.5), Axis("batch_size", (10, 20))))
    a = random_assignments(space, n, seed)
    assert a == random_assignments(space, n, seed)
    assert len(a) == n and all(space.contains(x) for x in a)


def test_random_search_budget():
    best, trials = random_search(default_space("FFNN"), 50, 1, stub(lambda a: a["learning_rate"]))
    assert len(trials) == 50
    assert best.validation_accuracy == max(t.validation_accuracy for t in trials)


def test_map_fn_is_used_and_order_kept():
    calls = []

    def recording_map(fn, items):
        calls.append(len(items))
        return [fn(x) for x in reversed(items)][::-1]

    _, trials = grid_search(small_space(), stub(lambda a: a["hidden_dim"] / 10), map_fn=recording_map)
    assert calls == [6]
    assert [t.assignment for t in trials] == grid_assignments(small_space())


def test_trial_result_validation():
    with pytest.raises(ValueError):
        TrialResult({}, 1.5, 0.5)
    with pytest.raises(ValueError):
        TrialResult({}, 0.5, 0.5, status="weird")
    with pytest.raises(ValueError):
        select_best([])


def test_space_from_dict():
    s = ParamSpace.from_dict({"learning_rate": {"low": 0.1, "high": 0.2}, "hidden_dim": [1, 2]}, "SAE")
    assert not s.is_discrete and s.names == ["learning_rate", "hidden_dim"]
    with pytest.raises(ValueError):
        ParamSpace((Axis("a", (1,)), Axis("a", (2,))))


def test_nelder_mead_quadratic_1d():
    r = nelder_mead(lambda x: (x[0] - 3.0) ** 2, [0.0])
    assert abs(r.x[0] - 3.0) < 1e-3


def test_nelder_mead_bowl_2d_within_budget():
    r = nelder_mead(lambda x: x[0] ** 2 + x[1] ** 2, [1.0, 1.0], max_evals=200)
    assert r.fun < 1e-6 and r.n_evals <= 200


def test_nelder_mead_rosenbrock():
    rosen = lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2  # noqa: E731
    r = nelder_mead(rosen, [-1.2, 1.0], tolerance=1e-10, max_evals=2000)
    np.testing.assert_allclose(r.x, [1, 1], atol=1e-3)


def test_nelder_mead_constant_objective_stops_at_once():
    r = nelder_mead(lambda x: 4.0, [1.0, 2.0])
    assert r.n_evals == 3 and r.fun == 4.0


def test_nelder_mead_respects_bounds_and_budget():
    seen = []

    def f(x):
        seen.append(x.copy())
        return -x[0]

    r = nelder_mead(f, [0.5], bounds=[(0.0, 1.0)], max_evals=25)
    assert len(seen) <= 25
    assert all(0.0 <= x[0] <= 1.0 for x in seen)
    assert r.x[0] == pytest.approx(1.0)


def test_nelder_mead_rejects_non_finite_start():
    with pytest.raises(ValueError):
        nelder_mead(lambda x: 0.0, [math.nan])


def test_nelder_mead_search_snaps_to_grid():
    space = default_space("FFNN")
    best, trials = nelder_mead_search(space, stub(lambda a: 1 - abs(a["learning_rate"] - 0.7) / 2), 40)
    assert 1 <= len(trials) <= 40
    assert all(space.contains(t.assignment) for t in trials)
    assert best.assignment["learning_rate"] == 0.7


def test_lr_grid_has_208_points_over_the_range():
    g = default_lr_grid()
    assert len(g) == 208 and g[0] == 0.005 and g[-1] == pytest.approx(0.823)
    assert all(b > a for a, b in zip(g, g[1:]))


def test_lr_sweep_averages_samples():
    curve = lr_sweep(lambda lr: [lr, lr + 0.2], [0.1, 0.3])
    assert curve.mean_accuracy == pytest.approx((0.2, 0.4))
    assert curve.points[1] == (0.3, pytest.approx(0.4))


@settings(max_examples=30)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 100), st.integers(1, 50), st.integers(1, 50))
def test_budget_estimate_matches_enumeration(d, c, trials, volume, iterations):
    space = ParamSpace(tuple(Axis(f"a{i}", tuple(range(c))) for i in range(d)))
    b = Budget(trials, volume, iterations)
    est = budget_estimate(space, b, "grid")
    assert est.evaluations == c ** d == len(grid_assignments(space))
    assert est.relative_cost == pytest.approx(c ** d * volume / iterations)
    assert budget_estimate(space, b, "random").evaluations == trials
