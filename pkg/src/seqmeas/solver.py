"""Sequential-equilibrium computation on restricted strategy spaces.

The solver follows a constructive scheme: for each level ``n`` it finds an
approximate Nash equilibrium of the game in which every player is confined
to a Minkowski sum of continuation polytopes around a full-support anchor
(weight ``1/n^tau`` per own period ``tau`` plus an anchor component at
weight ``1/n^T``), then drives the level upward until the residual
components form a Cauchy sequence and all conditional optimality gaps at
atomic relevant sets fall below the target.  Certificates always report
gaps obtained by exact best-response searches, so the iteration scheme
never affects soundness.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linprog

from .engine import conditional_payoff, check_profile
from .errors import NonConvergenceError, SeqMeasError, ZeroReachError
from .measures import (
    StrategicMeasure,
    _signal_independence_rows,
    full_support_profile,
    mix,
    prefix_marginal,
    profile_distance,
    total_variation,
)
from .model import ValidatedGame

DEFAULT_SCHEDULE = (2, 4, 8, 16, 32)
DEFAULT_NASH_TOL = 1e-9
DEFAULT_CONV_TOL = 1e-4
DEFAULT_MAX_ITERATIONS = 3000
_REACH_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# exact best-continuation machinery


def _own_tensors(game: ValidatedGame, profile: dict, player: int, F=None):
    """Payoff-weighted (W) and reach-weighted (Q) tensors over the player's
    own trajectories, with everything else (nature, densities, opponents)
    summed out.  ``profile[player]`` is ignored."""
    base = game.weight * game.feasible
    for j in game.players:
        if j != player:
            base = base * game.expand_own(j, profile[j].table)
    if F is not None:
        base = base * F.indicator(game)
    W = game.collapse_to_own(player, base * game.payoff[player])
    Q = game.collapse_to_own(player, base)
    return W, Q


def _backward_pass(game: ValidatedGame, player: int, W: np.ndarray):
    """Backward induction over the player's own decision periods.

    Returns ``(top, values, policies)`` where ``values[j]`` holds the
    optimal continuation value at every (prefix, signal) cell of the j-th
    own period (actions maximized, later signals integrated against the
    base measures), ``policies[j]`` the maximizing action indices (lowest
    index on ties), and ``top`` the overall optimum.
    """
    periods = game.periods_of[player]
    V = W
    values, policies = {}, {}
    for j in range(len(periods) - 1, -1, -1):
        tau = periods[j]
        masked = np.where(game.avail[player][tau], V, -np.inf)
        policies[j] = np.argmax(masked, axis=-1)
        values[j] = np.max(masked, axis=-1)
        V = values[j] @ game.mu[tau]
    return float(V), values, policies


def _policy_measure(game, player, policies, j0, pref):
    """Measure following the argmax policies from own period index ``j0``
    on, with prefix distribution ``pref`` (ignored when ``j0`` is 0)."""
    periods = game.periods_of[player]
    table = np.zeros(game.own_shape[player])

    def fill(j, prefix, mass):
        if j == len(periods):
            table[prefix] += mass
            return
        mu = game.mu[periods[j]]
        pol = policies[j]
        for s in range(len(mu)):
            fill(j + 1, prefix + (s, int(pol[prefix + (s,)])), mass * mu[s])

    if j0 == 0:
        fill(0, (), 1.0)
    else:
        for idx in np.argwhere(pref > 0):
            p = tuple(int(c) for c in idx)
            fill(j0, p, float(pref[p]))
    return StrategicMeasure(player=player, table=table)


def _action_values(game: ValidatedGame, player: int, W, Q):
    """Per-action weighted continuation values and reach weights at every
    own (prefix, signal) cell, following the greedy policy afterwards.
    The ratio value/reach is the conditional value of taking the action."""
    periods = game.periods_of[player]
    V, U = W, Q
    act_vals, act_reach = {}, {}
    for j in range(len(periods) - 1, -1, -1):
        tau = periods[j]
        avail = game.avail[player][tau]
        masked = np.where(avail, V, -np.inf)
        pol = np.argmax(masked, axis=-1)
        act_vals[j] = masked
        act_reach[j] = np.where(avail, U, 0.0)
        V = np.take_along_axis(masked, pol[..., None], axis=-1)[..., 0]
        U = np.take_along_axis(act_reach[j], pol[..., None], axis=-1)[..., 0]
        V = V @ game.mu[tau]
        U = U @ game.mu[tau]
    return act_vals, act_reach


def _polish_measure(game, player, m, act_vals, act_reach, margin, j_min=0):
    """Remove measure mass from actions whose conditional continuation
    value is more than ``margin`` below the cell optimum, renormalizing the
    conditional action rules cell by cell.  Iterative averaging leaves
    vanishing-rate mass on strictly suboptimal actions; genuinely
    indifferent mixing (deficit within ``margin``) is preserved.  Own
    periods before index ``j_min`` are kept verbatim (for components whose
    early coordinates are pinned)."""
    periods = game.periods_of[player]
    arr = m.table
    table = np.zeros_like(arr)
    joints = [
        arr.sum(axis=tuple(range(2 * j + 2, arr.ndim)))
        for j in range(len(periods))
    ]

    def fill(j, prefix, mass):
        if j == len(periods):
            table[prefix] += mass
            return
        tau = periods[j]
        mu = game.mu[tau]
        feas = game.avail[player][tau]
        for s in range(len(mu)):
            cell = prefix + (s,)
            vals = act_vals[j][cell]
            reach = act_reach[j][cell]
            with np.errstate(divide="ignore", invalid="ignore"):
                cond = np.where(reach > 0.0, vals / np.where(reach > 0.0, reach, 1.0), -np.inf)
            cond = np.where(feas[cell], cond, -np.inf)
            row = joints[j][cell]
            total = row.sum()
            if total > 0.0:
                row = row / total
            elif np.any(np.isfinite(cond)):
                # the trimmed measure reaches a cell the original never
                # visited: continue with the greedy action
                row = np.zeros_like(row)
                row[int(np.argmax(cond))] = 1.0
            else:
                row = np.where(feas[cell], 1.0, 0.0)
                row = row / row.sum()
            if j < j_min or not np.any(np.isfinite(cond)):
                keep = feas[cell]
            else:
                keep = cond >= cond.max() - margin
            kept = np.where(keep, row, 0.0)
            ks = kept.sum()
            if ks <= 0.0:
                kept = np.zeros_like(row)
                kept[int(np.argmax(np.where(keep, 1.0, 0.0)))] = 1.0
                ks = 1.0
            kept = kept / ks
            for a in np.nonzero(kept > 0.0)[0]:
                fill(j + 1, prefix + (s, int(a)), mass * mu[s] * kept[a])

    fill(0, (), 1.0)
    return StrategicMeasure(player=player, table=table)


def polish_profile(game: ValidatedGame, profile: dict, margin: float) -> dict:
    """Trim every player's measure against the others (held fixed) as in
    :func:`_polish_measure`."""
    out = {}
    for i in game.players:
        W, Q = _own_tensors(game, profile, i)
        act_vals, act_reach = _action_values(game, i, W, Q)
        out[i] = _polish_measure(game, i, profile[i], act_vals, act_reach, margin)
    return out


def best_continuation(
    game: ValidatedGame,
    player: int,
    tau: int,
    F,
    opponents: dict,
    m_i: StrategicMeasure,
):
    """Maximal conditional payoff given ``F`` over all tau-continuations of
    ``m_i``, with an optimal pure continuation as witness.

    The reach probability of ``F`` is the same for every continuation (the
    indicator depends only on coordinates up to the period-``tau`` signal
    and later signal factors integrate to one), so maximizing the
    conditional payoff reduces to maximizing the F-restricted expected
    payoff by backward induction.
    """
    j0 = game.period_index(player, tau)
    profile = dict(opponents)
    profile[player] = m_i
    W, Q = _own_tensors(game, profile, player, F=F)
    reach = float((m_i.table * Q).sum())
    if reach <= 0.0:
        raise ZeroReachError(
            f"set at period {tau} for player {player} has zero reach"
        )
    _, values, policies = _backward_pass(game, player, W)
    pref = prefix_marginal(game, m_i, tau)
    cont = values[j0] @ game.mu[tau]
    best_num = float((pref * cont).sum())
    witness = _policy_measure(game, player, policies, j0, pref if j0 else None)
    return best_num / reach, witness


def epsilon_optimal_at(game: ValidatedGame, profile: dict, F, eps: float):
    """Whether no continuation improves the conditional payoff at ``F`` by
    more than ``eps``; returns the exact gap as well."""
    i = F.player
    opponents = {j: profile[j] for j in game.players if j != i}
    value, _ = best_continuation(game, i, F.period, F, opponents, profile[i])
    current = conditional_payoff(game, profile, F, i)
    gap = max(0.0, value - current)
    return gap <= eps, gap


def conditional_gap_report(game: ValidatedGame, profile: dict, player: int):
    """Exact conditional optimality gap of the player at every atomic
    (prefix, signal) cell, for all own periods at once.

    Returns ``{tau: (gaps, reach)}`` with arrays over the cell coordinates;
    gaps are NaN at cells of zero reach.
    """
    W, Q = _own_tensors(game, profile, player)
    m = profile[player].table
    _, values, _ = _backward_pass(game, player, W)
    out = {}
    nd = m.ndim
    for j, tau in enumerate(game.periods_of[player]):
        cell_nd = 2 * j + 1
        current = (m * W).sum(axis=tuple(range(cell_nd, nd)))
        reach = (m * Q).sum(axis=tuple(range(cell_nd, nd)))
        pref = m.sum(axis=tuple(range(cell_nd - 1, nd)))
        best = pref[..., None] * game.mu[tau] * values[j]
        with np.errstate(invalid="ignore", divide="ignore"):
            gaps = np.where(
                reach > 0.0,
                (best - current) / np.maximum(reach, _REACH_FLOOR),
                np.nan,
            )
        out[tau] = (np.maximum(gaps, 0.0), reach)
    return out


def nash_gap(game: ValidatedGame, profile: dict) -> dict:
    """Exact unconditional best-response gap per player."""
    out = {}
    for i in game.players:
        W, _ = _own_tensors(game, profile, i)
        top, _, _ = _backward_pass(game, i, W)
        out[i] = max(0.0, top - float((profile[i].table * W).sum()))
    return out


# ---------------------------------------------------------------------------
# restricted spaces


@dataclass(frozen=True)
class RestrictedSpace:
    """Minkowski-sum strategy space around a full-support anchor.

    Components: per own period ``tau`` the tau-continuations of the anchor
    at weight ``1/n^tau``, plus the anchor itself at weight ``1/n^T``
    (T = horizon; the T-continuation of the anchor is the anchor), plus an
    unrestricted residual.  The extra anchor component guarantees that
    every player covers all of their actions even when they have no later
    own period, so every atomic relevant set keeps positive reach.
    """

    player: int
    n: int
    anchor: StrategicMeasure
    weights: dict  # period -> weight; key == horizon pins the anchor itself
    residual: float

    @staticmethod
    def build(game: ValidatedGame, player: int, n: int, anchor=None):
        if n < 2:
            raise SeqMeasError(f"restriction level must be at least 2, got {n}")
        if anchor is None:
            anchor = full_support_profile(game)[player]
        weights = {tau: float(n) ** -tau for tau in game.periods_of[player]}
        weights[game.horizon] = float(n) ** -game.horizon
        residual = 1.0 - sum(weights.values())
        if residual <= 0.0:
            raise SeqMeasError(
                f"residual weight {residual} of player {player} at level {n} "
                "must be positive"
            )
        return RestrictedSpace(
            player=player, n=n, anchor=anchor, weights=weights, residual=residual
        )

    def free_periods(self, game: ValidatedGame):
        """Periods with a non-degenerate continuation component."""
        return tuple(t for t in sorted(self.weights) if t < game.horizon)

    def assemble(self, game: ValidatedGame, components: dict) -> StrategicMeasure:
        """Weighted sum of the component measures plus the pinned anchor."""
        table = self.residual * components["free"].table
        table = table + self.weights[game.horizon] * self.anchor.table
        for tau in self.free_periods(game):
            table = table + self.weights[tau] * components[tau].table
        return StrategicMeasure(player=self.player, table=table)

    def contains(self, game: ValidatedGame, m: StrategicMeasure, tol: float = 1e-7):
        """Membership by linear feasibility: does ``m`` decompose into
        anchor-continuation components plus a residual measure?  Solved as
        an L1 slack minimization."""
        i = self.player
        if m.player != i or m.table.shape != game.own_shape[i]:
            raise SeqMeasError("measure does not match the restricted space")
        cells = tuple(
            tuple(int(c) for c in idx) for idx in np.argwhere(game.own_feasible[i])
        )
        if np.abs(m.table[~game.own_feasible[i]]).max(initial=0.0) > tol:
            return False
        blocks = list(self.free_periods(game)) + ["free"]
        nc = len(cells)
        nv = len(blocks) * nc
        rows, rhs = [], []

        def block_slice(b):
            k = blocks.index(b)
            return slice(k * nc, (k + 1) * nc)

        si_rows, si_rhs = _signal_independence_rows(game, i, cells, None)
        for k, b in enumerate(blocks):
            sl = block_slice(b)
            row = np.zeros(nv)
            row[sl] = 1.0
            rows.append(row)
            rhs.append(1.0)
            for r, v in zip(si_rows, si_rhs):
                full = np.zeros(nv)
                full[sl] = r
                rows.append(full)
                rhs.append(v)
            if b == "free":
                continue
            j = game.period_index(i, b)
            pref = prefix_marginal(game, self.anchor, b)
            by_prefix = {}
            for kk, v in enumerate(cells):
                by_prefix.setdefault(v[: 2 * j], []).append(kk)
            for p, ks in sorted(by_prefix.items()):
                row = np.zeros(nv)
                for kk in ks:
                    row[sl][kk] = 1.0
                rows.append(row)
                rhs.append(float(pref[p]) if p else float(pref))
        # coupling: weighted blocks reproduce the target measure
        target = m.table.copy() - self.weights[game.horizon] * self.anchor.table
        for kk, v in enumerate(cells):
            row = np.zeros(nv)
            for b in blocks:
                w = self.residual if b == "free" else self.weights[b]
                row[block_slice(b)][kk] = w
            rows.append(row)
            rhs.append(float(target[v]))
        a = np.array(rows)
        b_vec = np.array(rhs)
        n_rows = len(rows)
        # x >= 0 plus signed slack per row; minimize total slack
        a_full = np.hstack([a, np.eye(n_rows), -np.eye(n_rows)])
        c = np.concatenate([np.zeros(nv), np.ones(2 * n_rows)])
        res = linprog(c, A_eq=a_full, b_eq=b_vec, bounds=(0, None), method="highs")
        return bool(res.status == 0 and res.fun <= tol)


# ---------------------------------------------------------------------------
# restricted Nash equilibrium


@dataclass(frozen=True)
class RestrictedNashResult:
    """Outcome of the fixed-level equilibrium search; ``gap`` is the exact
    maximal unilateral gain within the restricted spaces."""

    n: int
    profile: dict
    components: dict
    free_profile: dict
    gap: float
    player_gaps: dict
    iterations: int
    converged: bool


def _fresh_components(game, spaces):
    return {
        i: {
            "free": spaces[i].anchor,
            **{tau: spaces[i].anchor for tau in spaces[i].free_periods(game)},
        }
        for i in game.players
    }


def _evaluate_components(game: ValidatedGame, spaces: dict, components: dict):
    """Assemble the component decomposition and measure, per player, the
    weighted sum of per-component deviation gains plus the best responses
    (one backward pass serves every component of a player)."""
    assembled = {
        i: spaces[i].assemble(game, components[i]) for i in game.players
    }
    player_gaps = {}
    responses = {}
    for i in game.players:
        W, _ = _own_tensors(game, assembled, i)
        _, values, policies = _backward_pass(game, i, W)
        gap_i = 0.0
        resp = {}
        space = spaces[i]
        for tau in space.free_periods(game):
            j = game.period_index(i, tau)
            pref = prefix_marginal(game, space.anchor, tau)
            cont = values[j] @ game.mu[tau]
            best_val = float((pref * cont).sum())
            cur = float((components[i][tau].table * W).sum())
            gap_i += space.weights[tau] * max(0.0, best_val - cur)
            resp[tau] = _policy_measure(
                game, i, policies, j, pref if j else None
            )
        top = values[0] @ game.mu[game.periods_of[i][0]]
        best_val = float(top)
        cur = float((components[i]["free"].table * W).sum())
        gap_i += space.residual * max(0.0, best_val - cur)
        resp["free"] = _policy_measure(game, i, policies, 0, None)
        player_gaps[i] = gap_i
        responses[i] = resp
    gap = max(player_gaps.values())
    return assembled, gap, player_gaps, responses


def _restricted_nash_core(
    game: ValidatedGame,
    n: int,
    anchor_profile: dict,
    tol: float,
    max_iterations: int,
    components: dict | None = None,
) -> RestrictedNashResult:
    spaces = {
        i: RestrictedSpace.build(game, i, n, anchor_profile[i]) for i in game.players
    }
    if components is None:
        components = _fresh_components(game, spaces)
    else:
        components = {i: dict(components[i]) for i in game.players}

    best = None
    best_gap = np.inf
    averaging_from = None
    stall = 0
    last_result = None
    for k in range(max_iterations):
        assembled, gap, player_gaps, responses = _evaluate_components(
            game, spaces, components
        )
        last_result = RestrictedNashResult(
            n=n,
            profile=assembled,
            components={i: dict(components[i]) for i in game.players},
            free_profile={i: components[i]["free"] for i in game.players},
            gap=gap,
            player_gaps=dict(player_gaps),
            iterations=k,
            converged=gap <= tol,
        )
        if gap < best_gap:
            best = last_result
        # progress bookkeeping: only a relative improvement counts, so a
        # slowly drifting best-response cycle still triggers averaging
        if gap < best_gap * (1.0 - 1e-3) - 1e-15:
            best_gap = gap
            stall = 0
        else:
            best_gap = min(best_gap, gap)
            stall += 1
        if gap <= tol:
            return last_result
        # step size: pure best response first; switch to averaging once the
        # pure dynamic stops making progress (mixed equilibria)
        if averaging_from is None and stall >= 8:
            averaging_from = k
        if averaging_from is None:
            lam = 1.0
        else:
            # linearly increasing weights: the averaged profile forgets the
            # early transient quadratically fast instead of harmonically
            lam = 2.0 / (k - averaging_from + 3.0)
        for i in game.players:
            for key, br in responses[i].items():
                components[i][key] = mix(
                    [components[i][key], br], [1.0 - lam, lam]
                )
    return replace(best if best is not None else last_result, converged=False)


def restricted_nash(
    game: ValidatedGame,
    n: int,
    anchor_profile: dict | None = None,
    tol: float = DEFAULT_NASH_TOL,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
):
    """Approximate Nash equilibrium within the level-``n`` restricted
    spaces; the result's ``gap`` field is an exact deviation bound."""
    if anchor_profile is None:
        anchor_profile = full_support_profile(game)
    result = _restricted_nash_core(
        game, n, anchor_profile, tol, max_iterations
    )
    if not result.converged:
        raise NonConvergenceError(
            f"restricted equilibrium at level {n} did not reach gap {tol} "
            f"within {max_iterations} iterations (best gap {result.gap:.3e})",
            best_gap=result.gap,
            result=result,
        )
    return result.profile, result


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class GapRecord:
    n: int
    player: int
    period: int
    set_id: str
    reach: float
    gap: float


@dataclass(frozen=True)
class SeqEqStep:
    n: int
    profile: dict
    free_profile: dict
    nash_gap: float
    records: tuple
    max_conditional_gap: float


def _cell_set_id(game, player, tau, cell):
    prefix, s_idx = cell[:-1], cell[-1]
    pairs = game._prefix_pairs(player, tau, prefix)
    hist = ",".join(f"{s}:{a}" for s, a in pairs)
    s_lab = game.spec.signals[tau].labels[s_idx]
    return f"p{player}.t{tau}.({hist}|{s_lab})"


def _gap_records(game, profile, n):
    records = []
    for i in game.players:
        report = conditional_gap_report(game, profile, i)
        for tau, (gaps, reach) in report.items():
            for idx in np.ndindex(*gaps.shape):
                r = float(reach[idx])
                if r <= 0.0:
                    continue
                records.append(
                    GapRecord(
                        n=n,
                        player=i,
                        period=tau,
                        set_id=_cell_set_id(game, i, tau, idx),
                        reach=r,
                        gap=float(gaps[idx]),
                    )
                )
    return tuple(records)


@dataclass(frozen=True)
class SeqEqCertificate:
    """Full record of a solver run: the limit candidate (the residual
    components of the last restricted equilibrium), the per-level profiles
    and exact gap tables, and the tolerances used."""

    game_name: str
    limit: dict
    sequence: tuple
    schedule: tuple
    eps_target: float
    nash_tol: float
    conv_tol: float
    burn_in: int
    converged: bool
    failure_reason: str | None
    limit_nash_gap: float
    seed: int | None = None

    def max_gaps(self):
        return tuple(step.max_conditional_gap for step in self.sequence)

    def to_report(self) -> str:
        out = io.StringIO()
        out.write(f"game: {self.game_name}\n")
        out.write(f"schedule: {','.join(str(s.n) for s in self.sequence)}\n")
        out.write(
            f"tolerances: eps_target={self.eps_target!r} "
            f"nash_tol={self.nash_tol!r} conv_tol={self.conv_tol!r}\n"
        )
        out.write(f"seed: {self.seed}\n")
        out.write(f"converged: {self.converged}\n")
        if self.failure_reason:
            out.write(f"failure: {self.failure_reason}\n")
        out.write(f"burn_in_index: {self.burn_in}\n")
        out.write(f"limit_nash_gap: {self.limit_nash_gap!r}\n")
        for step in self.sequence:
            out.write(
                f"level n={step.n}: nash_gap={step.nash_gap!r} "
                f"max_conditional_gap={step.max_conditional_gap!r} "
                f"relevant_sets={len(step.records)}\n"
            )
        for i in sorted(self.limit):
            out.write(f"limit measure player {i}:\n")
            table = self.limit[i].table
            for idx in np.argwhere(table > 0):
                key = ",".join(str(int(c)) for c in idx)
                out.write(f"  [{key}] {float(table[tuple(idx)])!r}\n")
        return out.getvalue()

    def write_report(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_report())

    def write_gaps_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["n", "player", "period", "set_id", "reach_prob",
                 "conditional_gap", "nash_gap"]
            )
            for step in self.sequence:
                for rec in step.records:
                    w.writerow(
                        [rec.n, rec.player, rec.period, rec.set_id,
                         repr(rec.reach), repr(rec.gap), repr(step.nash_gap)]
                    )


def _burn_in_index(max_gaps):
    """Smallest index from which the recorded maximal gaps are
    nonincreasing."""
    b = len(max_gaps) - 1
    for k in range(len(max_gaps) - 2, -1, -1):
        if max_gaps[k] >= max_gaps[k + 1] - 1e-12:
            b = k
        else:
            break
    return b


def sequential_equilibrium(
    game: ValidatedGame,
    schedule=DEFAULT_SCHEDULE,
    eps_target: float = 1e-3,
    tol: float = DEFAULT_CONV_TOL,
    nash_tol: float = DEFAULT_NASH_TOL,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    seed: int | None = None,
    polish_margin: float | None = None,
) -> SeqEqCertificate:
    """Run the restricted-equilibrium scheme along an increasing level
    schedule until the residual components are Cauchy in total variation
    and all conditional gaps at atomic relevant sets fall below the
    target.  The limit candidate is the residual component of the last
    level (the part the restricted equilibria converge to as the anchor
    weights vanish), polished by trimming iteration residue from strictly
    suboptimal actions (margin ``polish_margin``, default ``10 *
    nash_tol``).  Levels are warm-started from each other.
    """
    schedule = tuple(int(n) for n in schedule)
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise SeqMeasError("schedule must be nonempty and strictly increasing")
    anchor_profile = full_support_profile(game)
    for i in game.players:
        for n in schedule:
            RestrictedSpace.build(game, i, n, anchor_profile[i])

    if polish_margin is None:
        polish_margin = 10.0 * nash_tol
    steps = []
    components = None
    converged = False
    failure = None
    for n in schedule:
        result = _restricted_nash_core(
            game, n, anchor_profile, nash_tol, max_iterations,
            components=components,
        )
        components = result.components
        # exhibit the level's profile with the iteration residue trimmed
        # from the residual component (still inside the restricted space);
        # its gap is re-measured after trimming
        spaces = {
            i: RestrictedSpace.build(game, i, n, anchor_profile[i])
            for i in game.players
        }
        polished_free = {}
        polished_components = {}
        for i in game.players:
            W, Q = _own_tensors(game, result.profile, i)
            act_vals, act_reach = _action_values(game, i, W, Q)
            comps = {}
            for key, comp in result.components[i].items():
                j_min = 0 if key == "free" else game.period_index(i, key)
                comps[key] = _polish_measure(
                    game, i, comp, act_vals, act_reach, polish_margin,
                    j_min=j_min,
                )
            polished_free[i] = comps["free"]
            polished_components[i] = comps
        assembled, polished_gap, _, _ = _evaluate_components(
            game, spaces, polished_components
        )
        records = _gap_records(game, assembled, n)
        max_gap = max((r.gap for r in records), default=0.0)
        steps.append(
            SeqEqStep(
                n=n,
                profile=assembled,
                free_profile=polished_free,
                nash_gap=polished_gap,
                records=records,
                max_conditional_gap=max_gap,
            )
        )
        if not result.converged:
            failure = (
                f"restricted equilibrium at level {n} stalled at gap "
                f"{result.gap:.3e} (> {nash_tol})"
            )
            break
        if len(steps) >= 2:
            dist = profile_distance(
                steps[-2].free_profile, steps[-1].free_profile
            )
            if dist <= tol and max_gap <= eps_target:
                converged = True
                break
    if not converged and failure is None:
        failure = (
            "schedule exhausted before the Cauchy/gap stopping rule was met "
            f"(last max gap {steps[-1].max_conditional_gap:.3e}, "
            f"target {eps_target})"
        )
    limit = steps[-1].free_profile
    return SeqEqCertificate(
        game_name=game.spec.name,
        limit=limit,
        sequence=tuple(steps),
        schedule=schedule,
        eps_target=eps_target,
        nash_tol=nash_tol,
        conv_tol=tol,
        burn_in=_burn_in_index([s.max_conditional_gap for s in steps]),
        converged=converged,
        failure_reason=failure,
        limit_nash_gap=max(nash_gap(game, limit).values()),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# the semi-decision checker


@dataclass(frozen=True)
class CheckResult:
    verdict: str  # ACCEPT / REJECT / INCONCLUSIVE
    reason: str
    violated_set: str | None = None
    irreducible_gap: float | None = None
    trail: tuple = ()  # (eps, mix weight, distance, max gap) per accepted eps


ACCEPT = "ACCEPT"
REJECT = "REJECT"
INCONCLUSIVE = "INCONCLUSIVE"


def _positive_reach_rejection(game, candidate, threshold):
    """A set of positive reach under the candidate itself with conditional
    gap above the threshold is irreducible: conditional payoffs are
    continuous at positive-reach sets, so every nearby profile keeps
    essentially the same gap."""
    worst = None
    for i in game.players:
        report = conditional_gap_report(game, candidate, i)
        for tau, (gaps, reach) in report.items():
            for idx in np.ndindex(*gaps.shape):
                if reach[idx] > 0.0 and gaps[idx] > threshold:
                    if worst is None or gaps[idx] > worst[2]:
                        worst = (i, tau, float(gaps[idx]), idx)
    if worst is None:
        return None
    i, tau, gap, idx = worst
    return CheckResult(
        verdict=REJECT,
        reason=(
            "conditional gap at a set the candidate itself reaches with "
            "positive probability"
        ),
        violated_set=_cell_set_id(game, i, tau, idx),
        irreducible_gap=gap,
    )


def _damped_policy_measure(game, player, policies, damp):
    """Measure of the behavior strategy that plays the greedy policy with
    probability ``1 - damp`` and spreads ``damp`` uniformly over the
    available actions, at every information set (full support)."""
    periods = game.periods_of[player]
    table = np.zeros(game.own_shape[player])

    def fill(j, prefix, mass):
        if j == len(periods):
            table[prefix] += mass
            return
        tau = periods[j]
        mu = game.mu[tau]
        pol = policies[j]
        for s in range(len(mu)):
            cell = prefix + (s,)
            avail = game.avail[player][tau][cell]
            probs = np.where(avail, damp / avail.sum(), 0.0)
            probs[int(pol[cell])] += 1.0 - damp
            for a in np.nonzero(probs > 0.0)[0]:
                fill(j + 1, cell + (int(a),), mass * mu[s] * probs[a])

    fill(0, (), 1.0)
    return StrategicMeasure(player=player, table=table)


def _improved_support_profile(game, candidate, anchor, mix_weight, rounds=3):
    """Full-support profile close to optimal against the mixed profile:
    best-response policies damped towards uniform at every information
    set, so every cell's conditional rule is within ``mix_weight`` of the
    greedy one."""
    support = dict(anchor)
    for _ in range(rounds):
        mixed = {
            i: mix([candidate[i], support[i]], [1.0 - mix_weight, mix_weight])
            for i in game.players
        }
        new = {}
        for i in game.players:
            W, _ = _own_tensors(game, mixed, i)
            _, _, policies = _backward_pass(game, i, W)
            new[i] = _damped_policy_measure(game, i, policies, mix_weight)
        support = new
    return support


def _max_positive_gap(game, profile):
    worst = 0.0
    for i in game.players:
        report = conditional_gap_report(game, profile, i)
        for _, (gaps, reach) in report.items():
            pos = gaps[reach > 0.0]
            if pos.size:
                worst = max(worst, float(np.nanmax(pos)))
    return worst


def _zero_reach_rejection(game, candidate, threshold, reach_tol=1e-12):
    """Lower-bound the irreducible gap at unreached cells of a player's
    final decision period via a minimax linear program over limit
    posteriors.

    Only applies when nobody moves after the player (the payoff given the
    opponents' trajectories is then determined by the current action) and
    when the candidate's own measure pins the conditional rule at the cell
    (positive own-section mass).  The posterior may concentrate on any
    structurally compatible opponent behavior in the limit, so minimizing
    over the whole simplex is a sound lower bound.
    """
    from .measures import measure_to_strategy, UNCONSTRAINED

    for i in game.players:
        tau = game.periods_of[i][-1]
        if tau != game.horizon - 1:
            continue
        j = game.period_index(i, tau)
        report = conditional_gap_report(game, candidate, i)
        _, reach = report[tau]
        partial = measure_to_strategy(game, candidate[i])
        other = game.other_axes(i)
        # structural compatibility weight over plays (no measures)
        w = game.weight * game.feasible
        for flat in game.own_prefixes(i, tau):
            for s_idx in range(game.spec.signals[tau].size):
                cell = flat + (s_idx,)
                if reach[cell] > reach_tol:
                    continue
                sigma = partial.rules.get((tau, flat, s_idx), UNCONSTRAINED)
                if sigma is UNCONSTRAINED:
                    continue
                own_idx = [slice(None)] * len(game.shape)
                own_pos = game.own_axes[i]
                for pos, c in zip(own_pos, cell):
                    own_idx[pos] = c
                sub_w = w[tuple(own_idx)]  # axes: other coords + own action
                # trailing own action axis is the last own coordinate
                act_axis = sub_w.ndim - 1
                pay = game.payoff[i][tuple(own_idx)]
                compat = sub_w.max(axis=act_axis) > 0.0
                states = np.argwhere(compat)
                if len(states) == 0:
                    continue
                avail = game.avail[i][tau][cell]
                n_act = game.spec.actions[tau].size
                u = np.zeros((n_act, len(states)))
                for kk, st in enumerate(states):
                    u[:, kk] = pay[tuple(st) + (slice(None),)]
                # min over posteriors of (best available action - candidate)
                adv = np.where(avail[:, None], u, -np.inf) - sigma @ u
                finite = adv[np.isfinite(adv).all(axis=1)]
                # minimize z subject to z >= row . lam for each action row
                n_states = len(states)
                c_vec = np.concatenate([np.zeros(n_states), [1.0]])
                a_ub = np.hstack([finite, -np.ones((len(finite), 1))])
                res = linprog(
                    c_vec,
                    A_ub=a_ub,
                    b_ub=np.zeros(len(finite)),
                    A_eq=np.concatenate([np.ones(n_states), [0.0]])[None, :],
                    b_eq=[1.0],
                    bounds=[(0, None)] * n_states + [(None, None)],
                    method="highs",
                )
                if res.status == 0 and res.fun > threshold:
                    return CheckResult(
                        verdict=REJECT,
                        reason=(
                            "irreducible conditional gap at an unreached set "
                            "whose conditional rule the candidate pins down "
                            "(minimax over limit posteriors)"
                        ),
                        violated_set=_cell_set_id(game, i, tau, cell),
                        irreducible_gap=float(res.fun),
                    )
    return None


def check_sequential(
    game: ValidatedGame,
    candidate: dict,
    eps_schedule=(1e-1, 1e-2, 1e-3),
    tol: float = 1e-2,
    budget: int = 12,
) -> CheckResult:
    """Semi-decide whether the candidate is a sequential-equilibrium limit.

    ACCEPT constructs, per epsilon in the schedule, a nearby full-support
    profile whose exact conditional gaps all fall below epsilon; REJECT
    exhibits an irreducible gap (at a positively reached set, or via a
    minimax posterior bound at a pinned unreached set); otherwise the
    verdict is INCONCLUSIVE.
    """
    check_profile(game, candidate)
    eps_schedule = tuple(sorted(eps_schedule, reverse=True))
    if not eps_schedule or min(eps_schedule) <= 0:
        raise SeqMeasError("epsilon schedule must be positive")
    threshold = min(eps_schedule)

    rejection = _positive_reach_rejection(game, candidate, threshold)
    if rejection is not None:
        return rejection

    anchor = full_support_profile(game)
    trail = []
    all_found = True
    for eps in eps_schedule:
        found = None
        t = min(tol, 0.5)
        for _ in range(budget):
            support = _improved_support_profile(game, candidate, anchor, t)
            probe = {
                i: mix([candidate[i], support[i]], [1.0 - t, t])
                for i in game.players
            }
            gap = _max_positive_gap(game, probe)
            dist = profile_distance(probe, candidate)
            if gap <= eps and dist <= tol:
                found = (eps, t, dist, gap)
                break
            t /= 2.0
        if found is None:
            all_found = False
            break
        trail.append(found)
    if all_found:
        return CheckResult(
            verdict=ACCEPT,
            reason=(
                "nearby full-support profiles drive all conditional gaps "
                "below every epsilon in the schedule"
            ),
            trail=tuple(trail),
        )

    rejection = _zero_reach_rejection(game, candidate, threshold)
    if rejection is not None:
        return rejection
    return CheckResult(
        verdict=INCONCLUSIVE,
        reason=(
            "mixing search exhausted its budget without certifying the "
            "schedule, and no irreducible gap could be exhibited"
        ),
        trail=tuple(trail),
    )
