"""Play distributions and expected payoffs from profiles of strategic
measures, plus the density-folding game transformation.

The probability of a complete play is the product of the nature mass, each
player's trajectory mass under their strategic measure, and the density
product evaluated along the play.  Everything is a finite sum over the
dense play tensor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import SeqMeasError, ZeroReachError
from .measures import StrategicMeasure, validate_measure
from .model import DensityTable, GameSpec, ValidatedGame, validate_game

DIST_TOL = 1e-10


@dataclass(frozen=True)
class PlayDistribution:
    """Distribution over complete plays (label tuples)."""

    support: tuple
    prob: np.ndarray

    def __post_init__(self):
        if abs(self.prob.sum() - 1.0) > DIST_TOL:
            raise SeqMeasError(
                f"play probabilities sum to {self.prob.sum()!r}, not 1"
            )


def check_profile(game: ValidatedGame, profile: dict):
    missing = [i for i in game.players if i not in profile]
    if missing:
        raise SeqMeasError(f"profile is missing players {missing}")
    for i in game.players:
        validate_measure(game, profile[i])


def profile_tensor(
    game: ValidatedGame, profile: dict, validate: bool = False
) -> np.ndarray:
    """Probability of every conceivable play under the profile (infeasible
    plays get zero weight)."""
    if validate:
        check_profile(game, profile)
    t = game.weight.copy()
    for i in game.players:
        t *= game.expand_own(i, profile[i].table)
    t[~game.feasible] = 0.0
    return t


def play_distribution(game: ValidatedGame, profile: dict) -> PlayDistribution:
    """Materialized play distribution; keeps only positive-probability
    plays."""
    t = profile_tensor(game, profile, validate=True)
    idx = np.argwhere(t > 0)
    support = tuple(game.play_labels(tuple(int(k) for k in row)) for row in idx)
    prob = np.array([t[tuple(row)] for row in idx])
    return PlayDistribution(support=support, prob=prob)


def expected_payoff(game: ValidatedGame, profile: dict, player: int) -> float:
    t = profile_tensor(game, profile)
    return float((t * game.payoff[player]).sum())


def conditional_payoff(game: ValidatedGame, profile, F, player: int) -> float:
    """Expected payoff over the plays passing through ``F``, divided by the
    probability of reaching ``F``."""
    t = profile_tensor(game, profile)
    ind = F.indicator(game)
    reach = float((t * ind).sum())
    if reach <= 0.0:
        raise ZeroReachError(
            f"set at period {F.period} for player {F.player} has zero reach "
            "under the profile"
        )
    return float((t * ind * game.payoff[player]).sum()) / reach


def fold_densities(game: ValidatedGame) -> ValidatedGame:
    """Equivalent game without informative signals: densities replaced by 1
    and payoffs multiplied by the density product.  Expected payoffs agree
    with the original game for every profile."""
    spec = game.spec
    gprod = np.ones(game.shape)
    for tau in range(1, game.horizon):
        gprod = gprod * game.density_factor(tau)
    new_density = [None]
    for tau in range(1, game.horizon):
        new_density.append(
            DensityTable(mask=(), table=np.ones(spec.signals[tau].size))
        )
    new_payoffs = {i: game.payoff[i] * gprod for i in game.players}
    new_spec = GameSpec(
        horizon=spec.horizon,
        active=spec.active,
        actions=spec.actions,
        signals=spec.signals,
        nature=spec.nature,
        base=spec.base,
        density=tuple(new_density),
        correspondence=spec.correspondence,
        payoffs=new_payoffs,
        tail_bound=spec.tail_bound,
        name=(spec.name + " (folded)").strip(),
    )
    return validate_game(new_spec)


def export_play_distribution(game: ValidatedGame, dist: PlayDistribution, path):
    """One CSV row per play: labels, probability, per-player payoff."""
    payoff_lookup = {}
    for i in game.players:
        payoff_lookup[i] = game.payoff[i]
    header = []
    for tau, kind in game.axes:
        header.append(f"{'action' if kind == 'a' else 'signal'}_{tau}")
    header.append("probability")
    header += [f"payoff_{i}" for i in game.players]
    index_of = {}
    for k, (tau, kind) in enumerate(game.axes):
        grid = game.spec.actions[tau] if kind == "a" else game.spec.signals[tau]
        index_of[k] = {lab: n for n, lab in enumerate(grid.labels)}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for labels, p in zip(dist.support, dist.prob):
            idx = tuple(index_of[k][lab] for k, lab in enumerate(labels))
            row = list(labels) + [repr(float(p))]
            row += [repr(float(payoff_lookup[i][idx])) for i in game.players]
            w.writerow(row)
