"""Strategically relevant sets and reach probabilities.

On a finite grid every action section is open, so strategic relevance
reduces to positive reachability under some profile, which coincides with
positive reachability under the uniform full-support profile.  Atomic
(singleton) sets are the testing granularity: conditional optimality at
every union follows from optimality at all positive-reach atoms, because
finite conditional expectations are convex combinations of atomic ones.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .engine import profile_tensor
from .errors import InvalidInformationSetError, SeqMeasError
from .measures import full_support_profile
from .model import PrivateHistory, ValidatedGame


@dataclass(frozen=True)
class RelevantSet:
    """A set of information sets of one player at one period, certified
    reachable by a witnessing full-support profile probability."""

    player: int
    period: int
    members: tuple  # of (flattened own index prefix, signal index)
    witness_reach: float

    def __post_init__(self):
        if not self.members:
            raise SeqMeasError("relevant set must be nonempty")
        if self.witness_reach <= 0:
            raise SeqMeasError(
                "relevant set must carry a positive witness reach probability"
            )

    def indicator(self, game: ValidatedGame) -> np.ndarray:
        """Indicator over plays whose period information set lies in the
        set, shaped for broadcasting."""
        i, tau = self.player, self.period
        j = game.period_index(i, tau)
        axes = game.own_axes[i][: 2 * j + 1]
        shape = tuple(game.shape[k] for k in axes)
        ind = np.zeros(shape, dtype=bool)
        for flat, s_idx in self.members:
            ind[tuple(flat) + (s_idx,)] = True
        full = [1] * len(game.shape)
        for pos, size in zip(axes, shape):
            full[pos] = size
        return ind.reshape(full)

    def set_id(self, game: ValidatedGame) -> str:
        parts = []
        for flat, s_idx in self.members:
            pairs = game._prefix_pairs(self.player, self.period, tuple(flat))
            s_lab = game.spec.signals[self.period].labels[s_idx]
            hist = ",".join(f"{s}:{a}" for s, a in pairs)
            parts.append(f"({hist}|{s_lab})")
        return f"p{self.player}.t{self.period}." + "+".join(parts)

    def information_sets(self, game: ValidatedGame):
        out = []
        for flat, s_idx in self.members:
            pairs = game._prefix_pairs(self.player, self.period, tuple(flat))
            h = PrivateHistory(
                player=self.player,
                period=self.period,
                own_signals=tuple(p[0] for p in pairs),
                own_actions=tuple(p[1] for p in pairs),
            )
            out.append((h, game.spec.signals[self.period].labels[s_idx]))
        return out


def _cell_reach(game: ValidatedGame, tensor: np.ndarray, player: int, tau: int):
    """Reach probability of every (prefix, signal) cell of the player at
    ``tau``."""
    j = game.period_index(player, tau)
    keep = set(game.own_axes[player][: 2 * j + 1])
    other = tuple(k for k in range(len(game.shape)) if k not in keep)
    return tensor.sum(axis=other)


def atomic_relevant_sets(game: ValidatedGame, player: int, tau: int):
    """One singleton set per information set with positive probability
    under the uniform full-support profile, with the witness attached."""
    t = profile_tensor(game, full_support_profile(game))
    reach = _cell_reach(game, t, player, tau)
    out = []
    for flat in game.own_prefixes(player, tau):
        for s_idx in range(game.spec.signals[tau].size):
            r = float(reach[tuple(flat) + (s_idx,)])
            if r > 0:
                out.append(
                    RelevantSet(
                        player=player,
                        period=tau,
                        members=((tuple(flat), s_idx),),
                        witness_reach=r,
                    )
                )
    return out


def all_atomic_relevant_sets(game: ValidatedGame):
    out = []
    for i in game.players:
        for tau in game.periods_of[i]:
            out.extend(atomic_relevant_sets(game, i, tau))
    return out


def reach_probability(game: ValidatedGame, profile: dict, F: RelevantSet) -> float:
    """Total probability of plays whose period information set lies in
    ``F``."""
    t = profile_tensor(game, profile)
    return float((t * F.indicator(game)).sum())


@dataclass(frozen=True)
class ReachReport:
    """Per-set reach under the uniform full-support profile."""

    entries: tuple  # of (player, period, set_id, reach)
    min_reach: float
    all_positive: bool
    note: str = (
        "finite-scale reduction: every grid set has open action sections, "
        "so relevance equals positive reach under the full-support profile"
    )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["period", "player", "set_id", "witness_reach"])
            for player, period, set_id, reach in self.entries:
                w.writerow([period, player, set_id, repr(reach)])


def assert_full_support_reach(game: ValidatedGame) -> ReachReport:
    """Verify positive reach of every atomic relevant set under the uniform
    full-support profile; failures show up as report entries."""
    profile = full_support_profile(game)
    t = profile_tensor(game, profile)
    entries = []
    min_reach = float("inf")
    all_positive = True
    for i in game.players:
        for tau in game.periods_of[i]:
            for F in atomic_relevant_sets(game, i, tau):
                r = float((t * F.indicator(game)).sum())
                entries.append((i, tau, F.set_id(game), r))
                min_reach = min(min_reach, r)
                if r <= 0:
                    all_positive = False
    return ReachReport(
        entries=tuple(entries),
        min_reach=min_reach if entries else 0.0,
        all_positive=all_positive,
    )


def relevant_set_from_information_sets(
    game: ValidatedGame, player: int, tau: int, sets
) -> RelevantSet:
    """Build a (possibly non-atomic) relevant set from (PrivateHistory,
    signal) pairs, certifying reachability via the full-support profile."""
    from .model import _prefix_flat

    members = []
    for h, s_lab in sets:
        if h.player != player or h.period != tau:
            raise InvalidInformationSetError(
                "information set does not belong to the requested player/period"
            )
        flat = _prefix_flat(game, h, tau)
        members.append((flat, game.spec.signals[tau].index(s_lab)))
    t = profile_tensor(game, full_support_profile(game))
    probe = RelevantSet.__new__(RelevantSet)
    object.__setattr__(probe, "player", player)
    object.__setattr__(probe, "period", tau)
    object.__setattr__(probe, "members", tuple(members))
    object.__setattr__(probe, "witness_reach", 1.0)
    r = float((t * probe.indicator(game)).sum())
    if r <= 0:
        raise SeqMeasError(
            "set has zero reach under the full-support profile, hence is not "
            "strategically relevant"
        )
    return RelevantSet(player=player, period=tau, members=tuple(members), witness_reach=r)
