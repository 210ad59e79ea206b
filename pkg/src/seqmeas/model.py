"""Finite multistage games with noisy signals.

A game runs over periods ``0..T-1`` with exactly one active player per
period.  Period 0 belongs to nature (player 0), which draws an initial
action from ``nature``.  In every later period the active player first
receives a signal drawn from a conditional density against a fixed base
measure on that period's signal grid, then picks an action from the set
allowed by the action correspondence at their private history and signal.

A complete play is the tuple ``(a0, s1, a1, ..., s_{T-1}, a_{T-1})``.
All tables are dense numpy arrays over the play coordinates, so every
quantity downstream is an exact finite sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .errors import (
    EmptyActionSetError,
    GameSpecError,
    InvalidInformationSetError,
    NegativeDensityError,
    NormalizationError,
    NotProbabilityError,
    NoTailBoundError,
    NoTailBoundSumError,
    PlayerNotActiveError,
    SizeCapExceededError,
)

PROB_TOL = 1e-12
DEFAULT_PLAY_CAP = 10**7


@dataclass(frozen=True)
class Grid:
    """Finite ordered list of labels, optionally carrying real coordinates."""

    labels: tuple[str, ...]
    coords: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.labels:
            raise GameSpecError("grid must be nonempty")
        if len(set(self.labels)) != len(self.labels):
            raise GameSpecError("grid labels must be distinct")
        if self.coords is not None and len(self.coords) != len(self.labels):
            raise GameSpecError("grid coords must match labels")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise GameSpecError(f"unknown label {label!r}") from None

    @staticmethod
    def from_coords(values) -> "Grid":
        vals = tuple(float(v) for v in values)
        return Grid(tuple(format(v, "g") for v in vals), vals)


@dataclass(frozen=True)
class PrivateHistory:
    """A player's own past signals and actions before some period."""

    player: int
    period: int
    own_signals: tuple[str, ...]
    own_actions: tuple[str, ...]

    def __post_init__(self):
        if len(self.own_signals) != len(self.own_actions):
            raise InvalidInformationSetError(
                "own_signals and own_actions must have equal length"
            )

    @property
    def pairs(self) -> tuple[tuple[str, str], ...]:
        return tuple(zip(self.own_signals, self.own_actions))


@dataclass(frozen=True)
class DensityTable:
    """Conditional density ``g(history, signal)`` for one period.

    ``mask`` lists which history coordinates the density depends on.  The
    history coordinate list for period tau is ``(a0, s1, a1, ..., s_{tau-1},
    a_{tau-1})``; masked indices refer to positions in that list.  ``table``
    has one axis per masked coordinate plus a trailing signal axis.
    """

    mask: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        if len(self.mask) != len(set(self.mask)):
            raise GameSpecError("density mask indices must be distinct")
        if tuple(sorted(self.mask)) != self.mask:
            raise GameSpecError("density mask indices must be increasing")
        if self.table.ndim != len(self.mask) + 1:
            raise GameSpecError("density table rank must be len(mask) + 1")


@dataclass(frozen=True)
class Correspondence:
    """Available-action sets per (private history, signal).

    ``restrictions`` maps ``(own (signal, action) prefix, signal label)`` to
    the allowed action labels; information sets not listed allow the whole
    grid.
    """

    restrictions: dict = field(default_factory=dict)

    def available(self, prefix_pairs, signal_label: str, grid: Grid) -> tuple[str, ...]:
        key = (tuple(prefix_pairs), signal_label)
        if key in self.restrictions:
            return tuple(self.restrictions[key])
        return grid.labels


FULL = Correspondence()


@dataclass(frozen=True)
class TailBound:
    """Per-period bound on payoff dependence, with a value for all periods
    beyond the last declared one (``rest``)."""

    values: dict
    rest: float = 0.0

    def at(self, t: int) -> float:
        return float(self.values.get(t, self.rest))


@dataclass
class GameSpec:
    """Full description of a finite multistage game with noisy signals."""

    horizon: int
    active: tuple[int, ...]
    actions: tuple[Grid, ...]
    signals: tuple  # Grid per nonzero period, None at index 0
    nature: np.ndarray
    base: tuple  # base measure per nonzero period, None at index 0
    density: tuple  # DensityTable per nonzero period, None at index 0
    correspondence: tuple  # Correspondence per nonzero period, None at index 0
    payoffs: dict  # proper player id -> array over complete plays
    tail_bound: TailBound | None = None
    name: str = ""

    @property
    def shape(self) -> tuple[int, ...]:
        out = [self.actions[0].size]
        for tau in range(1, self.horizon):
            out += [self.signals[tau].size, self.actions[tau].size]
        return tuple(out)

    @property
    def n_plays(self) -> int:
        return math.prod(self.shape)


def _check_prob_vector(v: np.ndarray, what: str):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or np.any(v < 0) or abs(v.sum() - 1.0) > PROB_TOL:
        raise NotProbabilityError(
            f"{what} is not a probability vector (sum {v.sum()!r})"
        )


class ValidatedGame:
    """A :class:`GameSpec` with all invariants checked and index structures
    built.  Immutable after construction; safe for concurrent reads."""

    def __init__(self, spec: GameSpec, play_cap: int = DEFAULT_PLAY_CAP):
        self.spec = spec
        T = spec.horizon
        if T < 2:
            raise GameSpecError("horizon must be at least 2 (nature plus one mover)")
        if len(spec.active) != T:
            raise GameSpecError("active player map must cover every period")
        if spec.active[0] != 0:
            raise GameSpecError("period 0 must belong to nature (player 0)")
        if any(p == 0 for p in spec.active[1:]):
            raise GameSpecError("nature may only act in period 0")
        if spec.n_plays > play_cap:
            raise SizeCapExceededError(
                f"game declares {spec.n_plays} plays, above the cap {play_cap}"
            )

        self.horizon = T
        self.shape = spec.shape
        # play axes in order: a0, s1, a1, s2, a2, ...
        self.axes = [(0, "a")]
        for tau in range(1, T):
            self.axes += [(tau, "s"), (tau, "a")]
        self.axis_index = {ax: k for k, ax in enumerate(self.axes)}

        self.players = tuple(sorted(set(spec.active[1:])))
        self.periods_of = {
            i: tuple(t for t in range(1, T) if spec.active[t] == i)
            for i in self.players
        }
        self.own_axes = {
            i: tuple(
                self.axis_index[(tau, kind)]
                for tau in self.periods_of[i]
                for kind in ("s", "a")
            )
            for i in self.players
        }
        self.own_shape = {
            i: tuple(self.shape[k] for k in self.own_axes[i]) for i in self.players
        }

        _check_prob_vector(spec.nature, "nature move")
        self.nature = np.asarray(spec.nature, dtype=float)

        self.mu = [None]
        for tau in range(1, T):
            mu = np.asarray(spec.base[tau], dtype=float)
            _check_prob_vector(mu, f"base measure of period {tau}")
            if np.any(mu <= 0):
                raise NotProbabilityError(
                    f"base measure of period {tau} must be strictly positive"
                )
            self.mu.append(mu)

        self._check_densities()
        self._build_availability()
        self._build_weight()
        self._check_payoffs()

    # -- validation pieces -------------------------------------------------

    def _check_densities(self):
        spec = self.spec
        for tau in range(1, self.horizon):
            dens = spec.density[tau]
            hist_sizes = self.shape[: 2 * tau - 1]
            for k in dens.mask:
                if not 0 <= k < len(hist_sizes):
                    raise GameSpecError(
                        f"density mask {k} out of range for period {tau}"
                    )
            want = tuple(hist_sizes[k] for k in dens.mask) + (self.shape[2 * tau - 1],)
            if dens.table.shape != want:
                raise GameSpecError(
                    f"density table of period {tau} has shape {dens.table.shape}, "
                    f"expected {want}"
                )
            if np.any(dens.table < 0):
                idx = np.argwhere(dens.table < 0)[0]
                raise NegativeDensityError(
                    f"negative density entry at period {tau}, index {tuple(idx)}"
                )
            rows = np.asarray(dens.table @ self.mu[tau]).reshape(
                dens.table.shape[:-1]
            )
            bad = np.abs(rows - 1.0) > PROB_TOL
            if np.any(bad):
                idx = tuple(int(j) for j in np.argwhere(bad.reshape(rows.shape))[0])
                labels = tuple(
                    self._coord_label(dens.mask[p], idx[p]) for p in range(len(idx))
                )
                val = float(rows[idx]) if idx else float(rows)
                raise NormalizationError(
                    f"density row at period {tau}, history {labels} integrates to "
                    f"{val!r} against the base measure",
                    period=tau,
                    history=labels,
                    deviation=val - 1.0,
                )

    def _coord_label(self, hist_pos: int, idx: int) -> str:
        tau, kind = self.axes[hist_pos]
        grid = self.spec.actions[tau] if kind == "a" else self.spec.signals[tau]
        return grid.labels[idx]

    def _build_availability(self):
        """Per player and own period: boolean availability tensor over the
        player's own coordinates up to and including that period.

        Rows at infeasible own prefixes stay all-True so downstream dynamic
        programs never see an empty action set there; such prefixes carry
        zero probability in every valid measure.
        """
        spec = self.spec
        self.avail = {i: {} for i in self.players}
        self.own_feasible = {}
        self._feasible_prefixes = {i: {} for i in self.players}
        for i in self.players:
            prefixes = [()]  # list of flattened (s_idx, a_idx, ...) tuples
            prefix_shape: tuple[int, ...] = ()
            for tau in self.periods_of[i]:
                self._feasible_prefixes[i][tau] = list(prefixes)
                sgrid, agrid = spec.signals[tau], spec.actions[tau]
                mask = np.ones(prefix_shape + (sgrid.size, agrid.size), dtype=bool)
                corr = spec.correspondence[tau]
                nxt = []
                for p in prefixes:
                    pairs = self._prefix_pairs(i, tau, p)
                    for s_idx, s_lab in enumerate(sgrid.labels):
                        allowed = corr.available(pairs, s_lab, agrid)
                        if not allowed:
                            raise EmptyActionSetError(
                                f"empty action set at period {tau}, "
                                f"history {pairs}, signal {s_lab!r}"
                            )
                        a_idx = [agrid.index(a) for a in allowed]
                        row = np.zeros(agrid.size, dtype=bool)
                        row[a_idx] = True
                        mask[p + (s_idx,)] = row
                        nxt.extend(p + (s_idx, a) for a in a_idx)
                self.avail[i][tau] = mask
                prefixes = nxt
                prefix_shape = prefix_shape + (sgrid.size, agrid.size)
            feas = np.ones(self.own_shape[i], dtype=bool)
            nd = len(self.own_shape[i])
            for j, tau in enumerate(self.periods_of[i]):
                m = self.avail[i][tau]
                feas &= m.reshape(m.shape + (1,) * (nd - m.ndim))
            self.own_feasible[i] = feas

    def _prefix_pairs(self, i: int, tau: int, flat: tuple[int, ...]):
        """Translate a flattened own index prefix into (signal, action) label
        pairs for the correspondence lookup."""
        pairs = []
        for j, t in enumerate(self.periods_of[i]):
            if t >= tau:
                break
            s_idx, a_idx = flat[2 * j], flat[2 * j + 1]
            pairs.append(
                (self.spec.signals[t].labels[s_idx], self.spec.actions[t].labels[a_idx])
            )
        return tuple(pairs)

    def _build_weight(self):
        """Play weight = nature mass times the density product; base-measure
        factors live inside the players' strategic measures."""
        w = self.nature.reshape((self.shape[0],) + (1,) * (len(self.shape) - 1))
        w = np.broadcast_to(w, self.shape).copy()
        for tau in range(1, self.horizon):
            w *= self.density_factor(tau)
        self.weight = w
        feas = np.ones(self.shape, dtype=bool)
        for i in self.players:
            feas &= self.expand_own(i, self.own_feasible[i]).astype(bool)
        self.feasible = feas

    def _check_payoffs(self):
        spec = self.spec
        self.payoff = {}
        for i in self.players:
            if i not in spec.payoffs:
                raise GameSpecError(f"missing payoff table for player {i}")
            v = np.asarray(spec.payoffs[i], dtype=float)
            try:
                v = np.broadcast_to(v, self.shape)
            except ValueError:
                raise GameSpecError(
                    f"payoff table of player {i} has shape {v.shape}, "
                    f"not broadcastable to {self.shape}"
                ) from None
            if not np.all(np.isfinite(v)):
                raise GameSpecError(f"payoff table of player {i} has non-finite entries")
            self.payoff[i] = v

    # -- helpers used across the package ----------------------------------

    def density_factor(self, tau: int) -> np.ndarray:
        """Density of period ``tau`` reshaped for broadcasting over plays."""
        dens = self.spec.density[tau]
        dims = list(dens.mask) + [2 * tau - 1]
        shape = [1] * len(self.shape)
        for d, s in zip(dims, dens.table.shape):
            shape[d] = s
        return dens.table.reshape(shape)

    def expand_own(self, i: int, arr: np.ndarray) -> np.ndarray:
        """Reshape an array over player ``i``'s own coordinates so it
        broadcasts over full plays."""
        shape = [1] * len(self.shape)
        for pos, size in zip(self.own_axes[i], arr.shape):
            shape[pos] = size
        return arr.reshape(shape)

    def other_axes(self, i: int) -> tuple[int, ...]:
        own = set(self.own_axes[i])
        return tuple(k for k in range(len(self.shape)) if k not in own)

    def collapse_to_own(self, i: int, arr: np.ndarray) -> np.ndarray:
        """Sum a full play tensor down to player ``i``'s own coordinates."""
        return arr.sum(axis=self.other_axes(i))

    def payoff_range(self, i: int) -> float:
        v = self.payoff[i][self.feasible]
        return float(v.max() - v.min()) if v.size else 0.0

    def payoff_span(self) -> float:
        return max(self.payoff_range(i) for i in self.players)

    def period_index(self, i: int, tau: int) -> int:
        try:
            return self.periods_of[i].index(tau)
        except ValueError:
            raise PlayerNotActiveError(
                f"player {i} is not active at period {tau}"
            ) from None

    def own_prefixes(self, i: int, tau: int) -> list:
        """Feasible flattened own index prefixes of player ``i`` before
        period ``tau`` (one of the player's decision periods)."""
        self.period_index(i, tau)
        return self._feasible_prefixes[i][tau]

    def play_labels(self, idx: tuple[int, ...]) -> tuple[str, ...]:
        out = []
        for k, (tau, kind) in enumerate(self.axes):
            grid = self.spec.actions[tau] if kind == "a" else self.spec.signals[tau]
            out.append(grid.labels[idx[k]])
        return tuple(out)

    def iter_plays(self) -> Iterator[tuple[int, ...]]:
        return np.ndindex(*self.shape)


def validate_game(spec: GameSpec, play_cap: int = DEFAULT_PLAY_CAP) -> ValidatedGame:
    """Check all structural invariants of ``spec`` and build index
    structures.  Raises a :class:`GameSpecError` subclass on violation."""
    return ValidatedGame(spec, play_cap=play_cap)


def enumerate_information_sets(game: ValidatedGame, player: int, tau: int):
    """All (private history, signal) pairs at which ``player`` moves in
    period ``tau``, consistent with the grids and action correspondences."""
    game.period_index(player, tau)
    spec = game.spec
    out = []
    for flat in game.own_prefixes(player, tau):
        pairs = game._prefix_pairs(player, tau, flat)
        h = PrivateHistory(
            player=player,
            period=tau,
            own_signals=tuple(p[0] for p in pairs),
            own_actions=tuple(p[1] for p in pairs),
        )
        for s_lab in spec.signals[tau].labels:
            out.append((h, s_lab))
    return out


def _prefix_flat(game: ValidatedGame, h: PrivateHistory, tau: int) -> tuple[int, ...]:
    """Validate a private history against the grids and return its flattened
    index form; raises when the prefix is infeasible."""
    spec = game.spec
    periods_before = [t for t in game.periods_of[h.player] if t < tau]
    if len(h.own_signals) != len(periods_before):
        raise InvalidInformationSetError(
            f"private history has {len(h.own_signals)} entries, expected "
            f"{len(periods_before)} for player {h.player} at period {tau}"
        )
    flat = []
    for t, s_lab, a_lab in zip(periods_before, h.own_signals, h.own_actions):
        flat += [spec.signals[t].index(s_lab), spec.actions[t].index(a_lab)]
    flat = tuple(flat)
    if flat not in set(game.own_prefixes(h.player, tau)):
        raise InvalidInformationSetError(
            f"private history {h.pairs} is infeasible for the action correspondences"
        )
    return flat


def available_actions(
    game: ValidatedGame, tau: int, h: PrivateHistory, signal: str
) -> tuple[str, ...]:
    """The action set allowed at the information set ``(h, signal)``."""
    if game.spec.active[tau] != h.player:
        raise PlayerNotActiveError(f"player {h.player} is not active at period {tau}")
    _prefix_flat(game, h, tau)
    game.spec.signals[tau].index(signal)
    return game.spec.correspondence[tau].available(
        h.pairs, signal, game.spec.actions[tau]
    )


def truncate_horizon(game: ValidatedGame, eps: float):
    """Smallest ``T*`` with declared payoff tail mass at most ``eps`` beyond
    it, plus the game with payoffs restricted to the first ``T*`` periods.

    Actions (and, inside the payoff lookup, signals) after ``T*`` are pinned
    to the first grid element; expected payoffs under any profile change by
    at most ``eps``, provided the declared bounds are valid.
    """
    if eps <= 0:
        raise GameSpecError(f"epsilon must be positive, got {eps}")
    tb = game.spec.tail_bound
    if tb is None:
        raise NoTailBoundError("game declares no tail bounds")
    if tb.rest > 0:
        raise NoTailBoundSumError(
            "tail bounds do not have a finite sum (rest > 0 extends to all periods)"
        )
    T = game.horizon
    tail = 0.0
    t_star = T - 1
    # walk down from the end; tail(t) = sum of bounds strictly beyond t
    for t in range(T - 1, -1, -1):
        if tail + tb.at(t) > eps:
            break
        tail += tb.at(t)
        t_star = t - 1
    t_star = max(t_star, 0)
    if t_star >= T - 1:
        return T - 1, game

    spec = game.spec
    idx = []
    for tau, kind in game.axes:
        idx.append(slice(None) if tau <= t_star else slice(0, 1))
    new_payoffs = {}
    for i, v in game.payoff.items():
        trimmed = v[tuple(idx)]
        new_payoffs[i] = np.broadcast_to(trimmed, game.shape).copy()
    new_corr = list(spec.correspondence)
    for tau in range(max(t_star + 1, 1), T):
        sentinel = (spec.actions[tau].labels[0],)
        restrictions = {}
        for h, s in enumerate_information_sets(game, spec.active[tau], tau):
            restrictions[(h.pairs, s)] = sentinel
        new_corr[tau] = Correspondence(restrictions)
    new_spec = replace(
        spec,
        payoffs=new_payoffs,
        correspondence=tuple(new_corr),
        name=(spec.name + f" (truncated at {t_star})").strip(),
    )
    return t_star, validate_game(new_spec)
