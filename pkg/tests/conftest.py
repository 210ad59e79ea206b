"""Shared fixtures: solver certificates for the builtin games (computed
once per session) and random game/strategy generators."""

import time

import numpy as np
import pytest

from seqmeas.library import DuopolyParams, build_duopoly, build_example
from seqmeas.measures import BehaviorStrategy, induce_measure
from seqmeas.model import FULL, GameSpec, Grid, validate_game
from seqmeas.solver import sequential_equilibrium


# ---------------------------------------------------------------------------
# random generators (deterministic through an explicit rng)


def random_game(rng, min_horizon=3, max_horizon=4):
    """Small random multistage game: 3-4 periods, 2-3 element grids,
    random strictly positive densities normalized against random base
    measures, occasional action restriction at first-move periods."""
    horizon = int(rng.integers(min_horizon, max_horizon + 1))
    active = (0,) + tuple(int(rng.integers(1, 3)) for _ in range(horizon - 1))
    sizes_a = [int(rng.integers(2, 4)) for _ in range(horizon)]
    sizes_s = [None] + [int(rng.integers(2, 4)) for _ in range(horizon - 1)]
    actions = tuple(
        Grid(tuple(f"a{tau}_{k}" for k in range(sizes_a[tau])))
        for tau in range(horizon)
    )
    signals = (None,) + tuple(
        Grid(tuple(f"s{tau}_{k}" for k in range(sizes_s[tau])))
        for tau in range(1, horizon)
    )

    def simplex(n):
        v = rng.uniform(0.2, 1.0, n)
        return v / v.sum()

    nature = simplex(sizes_a[0])
    base = [None]
    density = [None]
    correspondence = [None]
    hist_sizes = [sizes_a[0]]
    seen = {0: True}
    for tau in range(1, horizon):
        mu = simplex(sizes_s[tau])
        base.append(mu)
        n_coords = len(hist_sizes)
        k = int(rng.integers(0, min(n_coords, 2) + 1))
        mask = tuple(sorted(rng.choice(n_coords, size=k, replace=False).tolist()))
        shape = tuple(hist_sizes[c] for c in mask) + (sizes_s[tau],)
        table = rng.uniform(0.5, 2.0, shape)
        table = table / (table @ mu)[..., None]
        from seqmeas.model import DensityTable, Correspondence

        density.append(DensityTable(mask=mask, table=table))
        corr = FULL
        i = active[tau]
        if i not in seen and sizes_a[tau] >= 2 and rng.random() < 0.25:
            # restrict one first-move information set to a strict subset
            s_lab = signals[tau].labels[int(rng.integers(sizes_s[tau]))]
            keep = actions[tau].labels[: sizes_a[tau] - 1]
            corr = Correspondence({((), s_lab): keep})
        seen[i] = True
        correspondence.append(corr)
        hist_sizes += [sizes_s[tau], sizes_a[tau]]

    shape = tuple(
        n for tau in range(horizon)
        for n in ([sizes_a[0]] if tau == 0 else [sizes_s[tau], sizes_a[tau]])
    )
    payoffs = {
        i: rng.uniform(-1.0, 1.0, shape) for i in sorted(set(active[1:]))
    }
    spec = GameSpec(
        horizon=horizon,
        active=active,
        actions=actions,
        signals=signals,
        nature=nature,
        base=tuple(base),
        density=tuple(density),
        correspondence=tuple(correspondence),
        payoffs=payoffs,
        name="random",
    )
    return validate_game(spec)


def random_strategy(game, player, rng):
    rules = {}
    for tau in game.periods_of[player]:
        avail = game.avail[player][tau]
        for flat in game.own_prefixes(player, tau):
            for s_idx in range(game.spec.signals[tau].size):
                mask = avail[flat + (s_idx,)]
                vec = np.zeros(mask.size)
                w = rng.uniform(0.05, 1.0, int(mask.sum()))
                vec[mask] = w / w.sum()
                rules[(tau, flat, s_idx)] = vec
    return BehaviorStrategy(player=player, rules=rules)


def random_profile(game, rng):
    return {
        i: induce_measure(game, random_strategy(game, i, rng))
        for i in game.players
    }


# ---------------------------------------------------------------------------
# session-wide solver runs (timed, shared between module and acceptance tests)


def _timed(fn):
    t0 = time.monotonic()
    out = fn()
    return out, time.monotonic() - t0


@pytest.fixture(scope="session")
def cert_ex3():
    game = build_example(3, c=0.9)
    cert, elapsed = _timed(
        lambda: sequential_equilibrium(game, schedule=(2, 4, 8, 16, 32))
    )
    return game, cert, elapsed


@pytest.fixture(scope="session")
def cert_ex4():
    game = build_example(4)
    cert, elapsed = _timed(
        lambda: sequential_equilibrium(game, schedule=(2, 4, 8, 16, 32))
    )
    return game, cert, elapsed


@pytest.fixture(scope="session")
def cert_ex1():
    game = build_example(1, k=100)
    cert, elapsed = _timed(
        lambda: sequential_equilibrium(
            game,
            schedule=(2, 4, 8, 16, 32, 64),
            eps_target=0.05,
            tol=5e-3,
            nash_tol=4e-3,
            max_iterations=3000,
            polish_margin=5e-3,
        )
    )
    return game, cert, elapsed


@pytest.fixture(scope="session")
def cert_ex2():
    game = build_example(2, k=10)
    cert, elapsed = _timed(
        lambda: sequential_equilibrium(
            game,
            schedule=(2, 4, 8, 16, 32),
            eps_target=0.05,
            tol=5e-3,
            nash_tol=1e-3,
            max_iterations=3000,
        )
    )
    return game, cert, elapsed


@pytest.fixture(scope="session")
def cert_duopoly():
    game = build_duopoly(DuopolyParams())
    cert, elapsed = _timed(
        lambda: sequential_equilibrium(
            game,
            schedule=(2, 4, 8, 16, 32),
            eps_target=5e-3,
            tol=1e-3,
            nash_tol=1e-3,
            max_iterations=600,
        )
    )
    return game, cert, elapsed
