"""Strategic measures and behavior strategies.

A strategic measure for a player is a distribution over the player's own
(signal, action) trajectories whose period signals are distributed
according to the base measures, independently of the player's own past.
Behavior strategies induce strategic measures by a recursive product;
going back, conditional rules are only pinned down at trajectory prefixes
of positive probability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    MeasureInvariantError,
    PlayerNotActiveError,
    SeqMeasError,
    SizeCapExceededError,
)
from .model import PROB_TOL, PrivateHistory, ValidatedGame

MARGINAL_TOL = 1e-12


class _Unconstrained:
    def __repr__(self):
        return "UNCONSTRAINED"


#: Marker for rules a strategic measure does not pin down.
UNCONSTRAINED = _Unconstrained()


@dataclass(frozen=True)
class BehaviorStrategy:
    """Per information set, a distribution over available actions.

    ``rules`` maps ``(period, flattened own index prefix, signal index)`` to
    a probability vector over the period's full action grid (zero off the
    available set).
    """

    player: int
    rules: dict

    def rule(self, game: ValidatedGame, tau: int, h: PrivateHistory, signal: str):
        from .model import _prefix_flat

        flat = _prefix_flat(game, h, tau)
        s_idx = game.spec.signals[tau].index(signal)
        return self.rules[(tau, flat, s_idx)]


@dataclass(frozen=True)
class PartialBehaviorStrategy:
    """Like :class:`BehaviorStrategy`, but rules at unreached prefixes carry
    the :data:`UNCONSTRAINED` marker."""

    player: int
    rules: dict

    def defined(self) -> dict:
        return {k: v for k, v in self.rules.items() if v is not UNCONSTRAINED}


@dataclass(frozen=True)
class StrategicMeasure:
    """Distribution over a player's own (signal, action) trajectories."""

    player: int
    table: np.ndarray

    def support(self, game: ValidatedGame):
        """Positive-probability trajectories as label tuples."""
        out = []
        for idx in np.argwhere(self.table > 0):
            labels = []
            for j, tau in enumerate(game.periods_of[self.player]):
                labels.append(game.spec.signals[tau].labels[idx[2 * j]])
                labels.append(game.spec.actions[tau].labels[idx[2 * j + 1]])
            out.append((tuple(labels), float(self.table[tuple(idx)])))
        return out


def _check_player_active(game: ValidatedGame, player: int, tau: int):
    if game.spec.active[tau] != player:
        raise PlayerNotActiveError(f"player {player} is not active at period {tau}")


def validate_strategy(game: ValidatedGame, strategy: BehaviorStrategy):
    """Every feasible information set must carry a probability vector
    supported inside the available action set."""
    i = strategy.player
    for tau in game.periods_of[i]:
        avail = game.avail[i][tau]
        sgrid = game.spec.signals[tau]
        for flat in game.own_prefixes(i, tau):
            for s_idx in range(sgrid.size):
                key = (tau, flat, s_idx)
                if key not in strategy.rules:
                    raise SeqMeasError(
                        f"strategy of player {i} missing a rule at period {tau}, "
                        f"prefix {flat}, signal {s_idx}"
                    )
                vec = np.asarray(strategy.rules[key], dtype=float)
                mask = avail[flat + (s_idx,)]
                if (
                    vec.shape != mask.shape
                    or np.any(vec < 0)
                    or abs(vec.sum() - 1.0) > PROB_TOL
                    or np.any(vec[~mask] != 0)
                ):
                    raise SeqMeasError(
                        f"rule of player {i} at period {tau}, prefix {flat}, "
                        f"signal {s_idx} is not a probability vector on the "
                        "available actions"
                    )


def induce_measure(game: ValidatedGame, strategy: BehaviorStrategy) -> StrategicMeasure:
    """The strategic measure built recursively from a behavior strategy:
    signals drawn from the base measures independently of the past, actions
    drawn from the strategy's rules."""
    validate_strategy(game, strategy)
    i = strategy.player
    arr = np.array(1.0)
    for tau in game.periods_of[i]:
        sgrid, agrid = game.spec.signals[tau], game.spec.actions[tau]
        mu = game.mu[tau]
        nxt = np.zeros(arr.shape + (sgrid.size, agrid.size))
        for flat in game.own_prefixes(i, tau):
            base = float(arr[flat]) if flat else float(arr)
            if base == 0.0:
                continue
            for s_idx in range(sgrid.size):
                vec = np.asarray(strategy.rules[(tau, flat, s_idx)], dtype=float)
                nxt[flat + (s_idx,)] = base * mu[s_idx] * vec
        arr = nxt
    return StrategicMeasure(player=i, table=arr)


def validate_measure(
    game: ValidatedGame, m: StrategicMeasure, tol: float = MARGINAL_TOL
):
    """Factorization check for externally supplied measures: nonnegative,
    normalized, supported on feasible trajectories, and with each period's
    signal conditionally distributed like the base measure."""
    i = m.player
    arr = np.asarray(m.table, dtype=float)
    if arr.shape != game.own_shape[i]:
        raise MeasureInvariantError(
            f"measure of player {i} has shape {arr.shape}, "
            f"expected {game.own_shape[i]}"
        )
    if np.any(arr < 0) or abs(arr.sum() - 1.0) > PROB_TOL:
        raise MeasureInvariantError(
            f"measure of player {i} is not a probability distribution "
            f"(sum {arr.sum()!r})"
        )
    if np.any(arr[~game.own_feasible[i]] > 0):
        idx = np.argwhere((arr > 0) & ~game.own_feasible[i])[0]
        raise MeasureInvariantError(
            f"measure of player {i} puts mass on the infeasible trajectory "
            f"{tuple(int(k) for k in idx)}"
        )
    for j, tau in enumerate(game.periods_of[i]):
        # marginal over (prefix, s_tau): sum out everything from a_tau on
        marg = arr.sum(axis=tuple(range(2 * j + 1, arr.ndim)))
        prefix_mass = marg.sum(axis=-1)
        want = prefix_mass[..., None] * game.mu[tau]
        dev = np.abs(marg - want)
        if dev.max() > tol:
            idx = tuple(int(k) for k in np.argwhere(dev > tol)[0])
            raise MeasureInvariantError(
                f"signal-independence violation for player {i} at period {tau}, "
                f"prefix cell {idx[:-1]}, signal {idx[-1]} "
                f"(deviation {dev.max():.3e})",
                period=tau,
                prefix=idx[:-1],
            )


def measure_to_strategy(
    game: ValidatedGame, m: StrategicMeasure
) -> PartialBehaviorStrategy:
    """Conditional rules at every positive-probability trajectory prefix;
    :data:`UNCONSTRAINED` elsewhere."""
    validate_measure(game, m)
    i = m.player
    arr = m.table
    rules = {}
    for j, tau in enumerate(game.periods_of[i]):
        sgrid = game.spec.signals[tau]
        # joint over (prefix, s, a), future summed out
        joint = arr.sum(axis=tuple(range(2 * j + 2, arr.ndim)))
        for flat in game.own_prefixes(i, tau):
            for s_idx in range(sgrid.size):
                row = joint[flat + (s_idx,)]
                total = row.sum()
                if total > 0:
                    rules[(tau, flat, s_idx)] = row / total
                else:
                    rules[(tau, flat, s_idx)] = UNCONSTRAINED
    return PartialBehaviorStrategy(player=i, rules=rules)


def mix(measures, weights) -> StrategicMeasure:
    """Convex combination of strategic measures of one player."""
    if not measures:
        raise SeqMeasError("mix requires at least one measure")
    players = {m.player for m in measures}
    if len(players) != 1:
        raise SeqMeasError(f"mix requires measures of a single player, got {players}")
    w = np.asarray(list(weights), dtype=float)
    if len(w) != len(measures) or np.any(w < 0) or abs(w.sum() - 1.0) > MARGINAL_TOL:
        raise SeqMeasError("weights must be nonnegative and sum to 1")
    table = sum(wk * m.table for wk, m in zip(w, measures))
    return StrategicMeasure(player=measures[0].player, table=table)


def prefix_marginal(game: ValidatedGame, m: StrategicMeasure, tau: int) -> np.ndarray:
    """Marginal of ``m`` on the player's own coordinates strictly before
    period ``tau`` (one of the player's decision periods)."""
    j = game.period_index(m.player, tau)
    return m.table.sum(axis=tuple(range(2 * j, m.table.ndim)))


def is_continuation(
    game: ValidatedGame,
    m_new: StrategicMeasure,
    m_old: StrategicMeasure,
    tau: int,
    tol: float = MARGINAL_TOL,
) -> bool:
    """True iff the own-prefix marginals before ``tau`` coincide."""
    _check_player_active(game, m_old.player, tau)
    if m_new.player != m_old.player:
        raise SeqMeasError("continuation check requires measures of one player")
    a = prefix_marginal(game, m_new, tau)
    b = prefix_marginal(game, m_old, tau)
    return bool(np.max(np.abs(a - b), initial=0.0) <= tol)


@dataclass(frozen=True)
class ContinuationConstraints:
    """Linear description of the continuations of a measure at a period.

    Variables are the feasible own-trajectory cells (in ``variables``
    order); the solution set of ``a_eq x = b_eq, x >= 0`` is exactly the
    continuation polytope.  ``vertices`` enumerates the extreme points when
    the game is below the size cap, else is None.
    """

    player: int
    period: int
    variables: tuple
    a_eq: np.ndarray
    b_eq: np.ndarray
    vertices: tuple | None
    vertex_cap_exceeded: bool

    def contains(
        self, game: ValidatedGame, m: StrategicMeasure, tol: float = 1e-9
    ) -> bool:
        x = np.array([m.table[v] for v in self.variables])
        off = m.table.copy()
        for v in self.variables:
            off[v] = 0.0
        if np.any(x < -tol) or np.abs(off).max(initial=0.0) > tol:
            return False
        return bool(np.max(np.abs(self.a_eq @ x - self.b_eq), initial=0.0) <= tol)


def _signal_independence_rows(game, i, variables, var_index):
    """Equality rows encoding that each period's signal is conditionally
    distributed like the base measure."""
    rows, rhs = [], []
    shape = game.own_shape[i]
    for j, tau in enumerate(game.periods_of[i]):
        mu = game.mu[tau]
        sgrid = game.spec.signals[tau]
        cells = {}
        for k, v in enumerate(variables):
            cells.setdefault((v[: 2 * j], v[2 * j]), []).append(k)
        prefixes = sorted({p for (p, _) in cells})
        for p in prefixes:
            members = {s: cells.get((p, s), []) for s in range(sgrid.size)}
            all_k = [k for ks in members.values() for k in ks]
            for s in range(sgrid.size):
                row = np.zeros(len(variables))
                for k in members[s]:
                    row[k] += 1.0
                for k in all_k:
                    row[k] -= mu[s]
                rows.append(row)
                rhs.append(0.0)
    return rows, rhs


def continuation_polytope(
    game: ValidatedGame,
    m: StrategicMeasure,
    tau: int,
    vertex_cap: int = 10**4,
) -> ContinuationConstraints:
    """Explicit linear-constraint description of the ``tau``-continuations
    of ``m``: fixed own-prefix marginal, signal independence, and simplex
    constraints over the feasible trajectory cells."""
    _check_player_active(game, m.player, tau)
    validate_measure(game, m)
    i = m.player
    j = game.period_index(i, tau)
    variables = tuple(
        tuple(int(c) for c in idx) for idx in np.argwhere(game.own_feasible[i])
    )
    var_index = {v: k for k, v in enumerate(variables)}
    rows, rhs = [], []
    # normalization
    rows.append(np.ones(len(variables)))
    rhs.append(1.0)
    # fixed prefix marginal before tau
    pref = prefix_marginal(game, m, tau)
    by_prefix = {}
    for k, v in enumerate(variables):
        by_prefix.setdefault(v[: 2 * j], []).append(k)
    for p in sorted(set(itertools.chain(by_prefix, map(tuple, np.ndindex(*pref.shape))))):
        row = np.zeros(len(variables))
        for k in by_prefix.get(p, []):
            row[k] = 1.0
        rows.append(row)
        rhs.append(float(pref[p]) if p else float(pref))
    si_rows, si_rhs = _signal_independence_rows(game, i, variables, var_index)
    rows += si_rows
    rhs += si_rhs
    a_eq = np.array(rows)
    b_eq = np.array(rhs)

    vertices, cap_exceeded = _continuation_vertices(game, m, tau, vertex_cap)
    return ContinuationConstraints(
        player=i,
        period=tau,
        variables=variables,
        a_eq=a_eq,
        b_eq=b_eq,
        vertices=vertices,
        vertex_cap_exceeded=cap_exceeded,
    )


def _pure_continuation_count(game, i, tau):
    count = 1
    for t in game.periods_of[i]:
        if t < tau:
            continue
        n_sets = len(game.own_prefixes(i, t)) * game.spec.signals[t].size
        count *= game.spec.actions[t].size ** n_sets
        if count > 10**9:
            break
    return count


def _continuation_vertices(game, m, tau, cap):
    """Extreme points: the fixed prefix marginal combined with a pure
    continuation rule at every feasible information set from ``tau`` on."""
    i = m.player
    j = game.period_index(i, tau)
    pref = prefix_marginal(game, m, tau)
    pos_prefixes = [tuple(int(c) for c in idx) for idx in np.argwhere(pref > 0)]
    if pref.ndim == 0:
        pos_prefixes = [()]
    # information sets from tau on, per positive prefix of the anchor
    info_sets = []  # (period_index, prefix_flat, s_idx) reachable cells
    later = [t for t in game.periods_of[i] if t >= tau]

    def policies():
        # choose one available action per (future info set); enumerate
        # lazily as nested products
        keys = []
        options = []
        for t in later:
            for flat in game.own_prefixes(i, t):
                if flat[: 2 * j] not in pos_prefixes and pref.ndim > 0:
                    continue
                for s in range(game.spec.signals[t].size):
                    acts = np.flatnonzero(game.avail[i][t][flat + (s,)])
                    keys.append((t, flat, s))
                    options.append(list(acts))
        for combo in itertools.product(*options):
            yield dict(zip(keys, combo))

    n = _pure_continuation_count(game, i, tau)
    # restrict count to reachable info sets is messy; use the coarse bound
    if n > cap:
        return None, True

    out = []
    for pol in policies():
        table = np.zeros(game.own_shape[i])
        stack = [(p, float(pref[p]) if pref.ndim else float(pref)) for p in pos_prefixes]
        for p, q in stack:
            if q == 0:
                continue
            _fill_pure(game, i, later, pol, table, p, q)
        out.append(StrategicMeasure(player=i, table=table))
    return tuple(out), False


def _fill_pure(game, i, later, pol, table, prefix, mass):
    """Forward-fill the deterministic continuation mass from a prefix."""
    if not later:
        table[prefix] += mass
        return
    t, rest = later[0], later[1:]
    mu = game.mu[t]
    for s in range(game.spec.signals[t].size):
        a = pol[(t, prefix, s)]
        _fill_pure(game, i, rest, pol, table, prefix + (s, int(a)), mass * mu[s])


def full_support_strategy(game: ValidatedGame, player: int) -> BehaviorStrategy:
    """Uniform over the available actions at every information set."""
    rules = {}
    for tau in game.periods_of[player]:
        for flat in game.own_prefixes(player, tau):
            for s_idx in range(game.spec.signals[tau].size):
                mask = game.avail[player][tau][flat + (s_idx,)]
                vec = mask.astype(float)
                rules[(tau, flat, s_idx)] = vec / vec.sum()
    return BehaviorStrategy(player=player, rules=rules)


def full_support_profile(game: ValidatedGame) -> dict:
    """Uniform full-support strategic measure per proper player."""
    return {
        i: induce_measure(game, full_support_strategy(game, i)) for i in game.players
    }


def total_variation(m1: StrategicMeasure, m2: StrategicMeasure) -> float:
    return 0.5 * float(np.abs(m1.table - m2.table).sum())


def profile_distance(p1: dict, p2: dict) -> float:
    """Maximum total-variation distance across players."""
    return max(total_variation(p1[i], p2[i]) for i in p1)


def pure_strategies(game: ValidatedGame, player: int):
    """All pure behavior strategies of a player (tiny games only)."""
    keys = []
    options = []
    for tau in game.periods_of[player]:
        for flat in game.own_prefixes(player, tau):
            for s_idx in range(game.spec.signals[tau].size):
                acts = np.flatnonzero(game.avail[player][tau][flat + (s_idx,)])
                keys.append((tau, flat, s_idx))
                options.append(list(acts))
    n = math.prod(len(o) for o in options)
    if n > 10**6:
        raise SizeCapExceededError(f"{n} pure strategies is above the enumeration cap")
    for combo in itertools.product(*options):
        rules = {}
        for key, a in zip(keys, combo):
            tau = key[0]
            vec = np.zeros(game.spec.actions[tau].size)
            vec[int(a)] = 1.0
            rules[key] = vec
        yield BehaviorStrategy(player=player, rules=rules)
