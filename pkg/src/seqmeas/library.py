"""Builders for the worked example games and the noisy sequential duopoly,
plus closed-form duopoly quantities used as oracles.

All builders return validated games.  Continuous intervals are represented
by explicit coordinate-carrying grids; deterministic observations are
point-mass density rows, which a finite signal grid supports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GameSpecError, GridTooCoarseError, SeqMeasError
from .measures import measure_to_strategy, UNCONSTRAINED
from .model import (
    FULL,
    DensityTable,
    GameSpec,
    Grid,
    ValidatedGame,
    validate_game,
)

DUMMY = Grid(("*",))  # single uninformative signal / trivial nature move


def _uninformative(size: int) -> DensityTable:
    return DensityTable(mask=(), table=np.ones(size))


def _grid01(k: int) -> Grid:
    return Grid.from_coords(np.linspace(0.0, 1.0, k + 1))


def build_matching_signal_game(c: float = 0.9) -> ValidatedGame:
    """Two movers, one noisy binary signal: the first mover picks L or R,
    the second sees the correct signal with probability ``c`` and then
    picks L or R as well."""
    if not 0.0 <= c <= 1.0:
        raise GameSpecError(f"signal accuracy must lie in [0, 1], got {c}")
    w = 1.0 - c
    lr = Grid(("L", "R"))
    v1 = np.array([[2.0, 4.0], [1.0, 2.0]]).reshape(1, 1, 2, 1, 2)
    v2 = np.array([[4.0, 2.0], [2.0, 1.0]]).reshape(1, 1, 2, 1, 2)
    spec = GameSpec(
        horizon=3,
        active=(0, 1, 2),
        actions=(DUMMY, lr, lr),
        signals=(None, DUMMY, Grid(("l", "r"))),
        nature=np.array([1.0]),
        base=(None, np.array([1.0]), np.array([0.5, 0.5])),
        density=(
            None,
            _uninformative(1),
            DensityTable(mask=(2,), table=np.array([[2 * c, 2 * w], [2 * w, 2 * c]])),
        ),
        correspondence=(None, FULL, FULL),
        payoffs={1: v1, 2: v2},
        name=f"ex3(c={c:g})",
    )
    return validate_game(spec)


def build_investment_game(payoffs: dict | None = None) -> ValidatedGame:
    """Single decision maker: learn the state or stay uninformed, then
    invest or not.  ``payoffs`` may override the default table with a map
    from (state, first action, signal, second action) labels to reals."""
    states = Grid(("f", "b"))
    first = Grid(("L", "U"))
    sig = Grid(("u", "f", "b"))
    second = Grid(("I", "N"))
    g = np.zeros((2, 2, 3))
    # signal u after U; signal equals the state after L
    g[0, 1, 0] = g[1, 1, 0] = 3.0
    g[0, 0, 1] = 3.0
    g[1, 0, 2] = 3.0
    v = np.zeros((2, 1, 2, 3, 2))
    for a0 in range(2):
        for a1 in range(2):
            for s in range(3):
                for a2 in range(2):
                    key = (
                        states.labels[a0],
                        first.labels[a1],
                        sig.labels[s],
                        second.labels[a2],
                    )
                    if payoffs is not None and key in payoffs:
                        v[a0, 0, a1, s, a2] = payoffs[key]
                    else:
                        gain = (1.0 if a0 == 0 else -1.0) if a2 == 0 else 0.0
                        cost = 0.2 if a1 == 0 else 0.0
                        v[a0, 0, a1, s, a2] = gain - cost
    spec = GameSpec(
        horizon=3,
        active=(0, 1, 1),
        actions=(states, first, second),
        signals=(None, DUMMY, sig),
        nature=np.array([0.5, 0.5]),
        base=(None, np.array([1.0]), np.full(3, 1.0 / 3.0)),
        density=(None, _uninformative(1), DensityTable(mask=(0, 2), table=g)),
        correspondence=(None, FULL, FULL),
        payoffs={1: v},
        name="ex4",
    )
    return validate_game(spec)


def build_twice_from_unit_interval(k: int = 4) -> ValidatedGame:
    """Single player choosing twice from a grid on [0, 1]; payoffs are
    identically zero (the game only exercises measure mixing)."""
    grid = _grid01(k)
    spec = GameSpec(
        horizon=3,
        active=(0, 1, 1),
        actions=(DUMMY, grid, grid),
        signals=(None, DUMMY, DUMMY),
        nature=np.array([1.0]),
        base=(None, np.array([1.0]), np.array([1.0])),
        density=(None, _uninformative(1), _uninformative(1)),
        correspondence=(None, FULL, FULL),
        payoffs={1: np.zeros((1, 1, k + 1, 1, k + 1))},
        name=f"ex5(k={k})",
    )
    return validate_game(spec)


def build_product_observation_game(k: int = 100) -> ValidatedGame:
    """Matching game with an observed product: the opponent secretly picks
    0 or 1, the main player picks a grid point from [0, 1], observes the
    product of the two choices exactly, then picks 0 or 1 to match."""
    grid = _grid01(k)
    n = k + 1
    binary = Grid.from_coords((0.0, 1.0))
    g = np.zeros((2, n, n))
    for a in range(n):
        g[0, a, 0] = float(n)
        g[1, a, a] = float(n)
    a1 = np.array(grid.coords).reshape(1, 1, 1, 1, n, 1, 1)
    b = np.array([0.0, 1.0]).reshape(1, 1, 2, 1, 1, 1, 1)
    a2 = np.array([0.0, 1.0]).reshape(1, 1, 1, 1, 1, 1, 2)
    v_ann = -a1 - np.abs(a2 - b)
    v_bob = np.abs(a2 - b) + 0.0 * a1
    spec = GameSpec(
        horizon=4,
        active=(0, 2, 1, 1),
        actions=(DUMMY, binary, grid, binary),
        signals=(None, DUMMY, DUMMY, grid),
        nature=np.array([1.0]),
        base=(None, np.array([1.0]), np.array([1.0]), np.full(n, 1.0 / n)),
        density=(
            None,
            _uninformative(1),
            _uninformative(1),
            DensityTable(mask=(2, 4), table=g),
        ),
        correspondence=(None, FULL, FULL, FULL),
        payoffs={1: v_ann, 2: v_bob},
        name=f"ex1(k={k})",
    )
    return validate_game(spec)


def build_signaling_game(k: int = 10) -> ValidatedGame:
    """Type revealed to the sender, action observed exactly by the
    receiver: sender of type t in {-1, 1} picks a grid point a from
    [-1, 1], the receiver sees a and picks b in {-1, 1}; sender wants
    |t - b + a| small, receiver wants a*b large."""
    coords = np.linspace(-1.0, 1.0, 2 * k + 1)
    agrid = Grid.from_coords(coords)
    n = 2 * k + 1
    types = Grid.from_coords((-1.0, 1.0))
    tsig = Grid.from_coords((-1.0, 1.0))
    bgrid = Grid.from_coords((-1.0, 1.0))
    g1 = np.zeros((2, 2))
    g1[0, 0] = g1[1, 1] = 2.0
    g2 = np.zeros((n, n))
    for a in range(n):
        g2[a, a] = float(n)
    t = np.array(types.coords).reshape(2, 1, 1, 1, 1)
    a = np.array(coords).reshape(1, 1, n, 1, 1)
    bvals = np.array(bgrid.coords).reshape(1, 1, 1, 1, 2)
    v_ann = -np.abs(t - bvals + a)
    v_bob = a * bvals + 0.0 * t
    spec = GameSpec(
        horizon=3,
        active=(0, 1, 2),
        actions=(types, agrid, bgrid),
        signals=(None, tsig, agrid),
        nature=np.array([0.5, 0.5]),
        base=(None, np.array([0.5, 0.5]), np.full(n, 1.0 / n)),
        density=(
            None,
            DensityTable(mask=(0,), table=g1),
            DensityTable(mask=(2,), table=g2),
        ),
        correspondence=(None, FULL, FULL),
        payoffs={1: v_ann, 2: v_bob},
        name=f"ex2(k={k})",
    )
    return validate_game(spec)


def build_example(which: int, **params) -> ValidatedGame:
    """Builder dispatch for the five stress games."""
    builders = {
        1: build_product_observation_game,
        2: build_signaling_game,
        3: build_matching_signal_game,
        4: build_investment_game,
        5: build_twice_from_unit_interval,
    }
    if which not in builders:
        raise GameSpecError(f"unknown example {which}; choose 1-5")
    return builders[which](**params)


@dataclass(frozen=True)
class DuopolyParams:
    """Linear-demand quantity duopoly with a triangular observation kernel
    of half-width ``delta`` around the leader's quantity."""

    a: float = 1.0
    b: float = 1.0
    cost: float = 0.0
    delta: float = 0.05
    grid_n: int = 101
    q_max: float | None = None

    def __post_init__(self):
        if self.a <= self.cost:
            raise GameSpecError("demand intercept must exceed unit cost")
        if self.b <= 0:
            raise GameSpecError("demand slope must be positive")
        if self.delta <= 0:
            raise GameSpecError("noise half-width must be positive")
        if self.grid_n < 3:
            raise GameSpecError("quantity grid needs at least 3 points")

    @property
    def upper(self) -> float:
        if self.q_max is not None:
            return self.q_max
        # default: just above the monopoly quantity, rounded up
        return 2.0 * (self.a - self.cost) / (2.0 * self.b)

    def profit(self, q_own, q_other):
        return q_own * (self.a - self.b * (q_own + q_other)) - self.cost * q_own


def duopoly_analytics(p: DuopolyParams) -> dict:
    """Closed-form reaction function and benchmark quantities from the
    first-order conditions of the linear-demand profit."""
    m = p.a - p.cost

    def reaction(q):
        return np.maximum((m - p.b * np.asarray(q, dtype=float)) / (2.0 * p.b), 0.0)

    q_cournot = m / (3.0 * p.b)
    q_leader = m / (2.0 * p.b)
    q_follower = m / (4.0 * p.b)
    return {
        "reaction": reaction,
        "q_cournot": q_cournot,
        "q_leader": q_leader,
        "q_follower": q_follower,
        "profit_leader": p.profit(q_leader, q_follower),
        "profit_cournot": p.profit(q_cournot, q_cournot),
        "profit_follower": p.profit(q_follower, q_leader),
    }


def build_duopoly(p: DuopolyParams) -> ValidatedGame:
    """Two-period quantity game: leader moves, follower sees only a noisy
    signal of the leader's quantity drawn from the triangular kernel."""
    qs = np.linspace(0.0, p.upper, p.grid_n)
    cell = qs[1] - qs[0]
    if p.delta <= 2.0 * cell:
        raise GridTooCoarseError(
            f"noise half-width {p.delta} must span more than two signal cells "
            f"(cell width {cell:g})"
        )
    grid = Grid.from_coords(qs)
    n = p.grid_n
    mu = np.full(n, 1.0 / n)
    g = np.maximum(0.0, 1.0 - np.abs(qs[None, :] - qs[:, None]) / p.delta)
    g = np.where(np.abs(qs[None, :] - qs[:, None]) < p.delta, g, 0.0)
    g /= (g @ mu)[:, None]
    q1 = qs.reshape(1, 1, n, 1, 1)
    q2 = qs.reshape(1, 1, 1, 1, n)
    v_leader = p.profit(q1, q2) + 0.0 * q2
    v_follower = p.profit(q2, q1) + 0.0 * q1
    spec = GameSpec(
        horizon=3,
        active=(0, 1, 2),
        actions=(DUMMY, grid, grid),
        signals=(None, DUMMY, grid),
        nature=np.array([1.0]),
        base=(None, np.array([1.0]), mu),
        density=(
            None,
            _uninformative(1),
            DensityTable(mask=(2,), table=g),
        ),
        correspondence=(None, FULL, FULL),
        payoffs={1: v_leader, 2: v_follower},
        name=f"duopoly(delta={p.delta:g},n={p.grid_n})",
    )
    return validate_game(spec)


def is_pure_profile(game: ValidatedGame, profile: dict, tol: float = 1e-9) -> bool:
    """True iff every defined conditional rule of every measure is a point
    mass."""
    for i in game.players:
        partial = measure_to_strategy(game, profile[i])
        for vec in partial.rules.values():
            if vec is UNCONSTRAINED:
                continue
            if vec.max() < 1.0 - tol:
                return False
    return True


def first_mover_check(cert, p: DuopolyParams, eps: float) -> tuple[bool, dict]:
    """Whether the leader's expected payoff in the certified limit clears
    the sequential-play benchmark minus ``eps``; the report also states
    whether the limit profile is pure."""
    from .engine import expected_payoff

    game = build_duopoly(p)
    for i in game.players:
        if i not in cert.limit or cert.limit[i].table.shape != game.own_shape[i]:
            raise SeqMeasError("certificate does not match the duopoly game")
    analytics = duopoly_analytics(p)
    threshold = analytics["profit_leader"] - eps
    leader_payoff = expected_payoff(game, cert.limit, 1)
    pure = is_pure_profile(game, cert.limit)
    ok = leader_payoff >= threshold
    report = {
        "leader_payoff": leader_payoff,
        "threshold": threshold,
        "profit_leader_benchmark": analytics["profit_leader"],
        "epsilon": eps,
        "pure_limit": pure,
        "passed": ok,
    }
    return ok, report
