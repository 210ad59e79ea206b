"""Builtin example builders and the duopoly analytics."""

import numpy as np
import pytest

from seqmeas.errors import GridTooCoarseError, SeqMeasError
from seqmeas.library import (
    DuopolyParams,
    build_duopoly,
    build_example,
    duopoly_analytics,
    is_pure_profile,
)
from seqmeas.measures import full_support_profile
from seqmeas.relevance import assert_full_support_reach


@pytest.mark.parametrize("which,kwargs", [
    (1, {"k": 10}),
    (2, {"k": 10}),
    (3, {"c": 0.9}),
    (4, {}),
    (5, {"k": 4}),
])
def test_builders_validate(which, kwargs):
    game = build_example(which, **kwargs)
    assert game.horizon >= 2
    # uniform full-support profile reaches every atomic set
    report = assert_full_support_reach(game)
    assert report.all_positive


def test_build_example_rejects_unknown():
    with pytest.raises(SeqMeasError):
        build_example(9)


def test_matching_signal_game_payoffs():
    game = build_example(3, c=0.9)
    # payoff tables over (a1, a2), independent of the signal realization
    v1 = game.payoff[1]
    v2 = game.payoff[2]
    assert v1[0, 0, 0, 0, 0] == 2.0 and v1[0, 0, 0, 0, 1] == 4.0
    assert v1[0, 0, 1, 0, 0] == 1.0 and v1[0, 0, 1, 0, 1] == 2.0
    assert v2[0, 0, 0, 0, 0] == 4.0 and v2[0, 0, 1, 0, 1] == 1.0
    # density: signal matches Ann's action with probability c
    d = game.spec.density[2]
    mu = game.mu[2]
    assert float(d.table[0] @ mu * 0 + d.table[0, 0] * mu[0]) == pytest.approx(0.9)
    assert float(d.table[1, 1] * mu[1]) == pytest.approx(0.9)


def test_signaling_game_structure():
    game = build_example(2, k=10)
    # Ann learns the state exactly; Bob observes Ann's action exactly
    assert game.spec.actions[1].size == 21
    assert game.spec.signals[2].size == 21
    assert game.spec.actions[2].size == 2


def test_product_observation_game_structure():
    game = build_example(1, k=10)
    assert game.spec.active == (0, 1, 2, 3)[:1] + game.spec.active[1:]
    # Ann's observed signal is the product a1*b: grids match
    assert game.spec.signals[3].size == game.spec.actions[2].size


def test_duopoly_analytics_closed_forms():
    p = DuopolyParams(a=1.0, b=1.0, cost=0.0)
    an = duopoly_analytics(p)
    assert an["q_cournot"] == pytest.approx(1.0 / 3.0)
    assert an["q_leader"] == pytest.approx(0.5)
    assert an["q_follower"] == pytest.approx(0.25)
    assert an["profit_leader"] == pytest.approx(0.125)
    assert an["profit_cournot"] == pytest.approx(1.0 / 9.0)
    assert an["profit_leader"] > an["profit_cournot"] > 1.0 / 16.0
    assert an["reaction"](0.5) == pytest.approx(0.25)


def test_duopoly_analytics_with_cost():
    p = DuopolyParams(a=2.0, b=1.0, cost=0.5)
    an = duopoly_analytics(p)
    assert an["q_cournot"] == pytest.approx(0.5)
    assert an["q_leader"] == pytest.approx(0.75)


def test_duopoly_density_rows_normalized():
    game = build_duopoly(DuopolyParams(grid_n=21, delta=0.2))
    d = game.spec.density[2]
    mu = game.mu[2]
    rows = d.table @ mu
    assert np.max(np.abs(rows - 1.0)) <= 1e-12


def test_duopoly_grid_too_coarse():
    with pytest.raises(GridTooCoarseError):
        build_duopoly(DuopolyParams(grid_n=11, delta=0.05))


def test_is_pure_profile():
    game = build_example(3, c=0.9)
    profile = full_support_profile(game)
    assert not is_pure_profile(game, profile)
    from seqmeas.measures import BehaviorStrategy, induce_measure

    pure = {
        1: induce_measure(
            game, BehaviorStrategy(player=1, rules={(1, (), 0): np.array([1.0, 0.0])})
        ),
        2: induce_measure(
            game,
            BehaviorStrategy(
                player=2,
                rules={
                    (2, (), 0): np.array([1.0, 0.0]),
                    (2, (), 1): np.array([0.0, 1.0]),
                },
            ),
        ),
    }
    assert is_pure_profile(game, pure)
