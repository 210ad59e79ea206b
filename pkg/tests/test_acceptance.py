"""End-to-end acceptance suite.

Each test prints one ``ACCEPTANCE <criterion>: PASS/FAIL`` line (to the
real stderr, bypassing capture) and enforces the stated tolerances and
runtime budgets.
"""

import contextlib
import itertools
import sys
import time

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import random_game, random_profile, random_strategy
from seqmeas.cli import main as cli_main
from seqmeas.engine import expected_payoff, fold_densities, profile_tensor
from seqmeas.library import (
    DuopolyParams,
    build_duopoly,
    build_example,
    duopoly_analytics,
    first_mover_check,
    is_pure_profile,
)
from seqmeas.measures import (
    UNCONSTRAINED,
    BehaviorStrategy,
    StrategicMeasure,
    continuation_polytope,
    full_support_profile,
    induce_measure,
    measure_to_strategy,
    mix,
    prefix_marginal,
    pure_strategies,
    total_variation,
    validate_measure,
)
from seqmeas.engine import conditional_payoff
from seqmeas.relevance import (
    all_atomic_relevant_sets,
    assert_full_support_reach,
    reach_probability,
)
from seqmeas.solver import ACCEPT, REJECT, check_sequential


@contextlib.contextmanager
def criterion(name, cap):
    """Times the block and emits one ``ACCEPTANCE <name>: PASS/FAIL`` line
    on the real stderr (visible despite pytest's capture)."""

    def emit(text):
        with cap.disabled():
            print(text, file=sys.stderr, flush=True)

    t0 = time.monotonic()
    try:
        yield
    except BaseException:
        emit(f"ACCEPTANCE {name}: FAIL")
        raise
    emit(f"ACCEPTANCE {name}: PASS ({time.monotonic() - t0:.1f}s)")


def _signal_independence_violation(game, m):
    i = m.player
    arr = m.table
    worst = 0.0
    for j, tau in enumerate(game.periods_of[i]):
        joint = arr.sum(axis=tuple(range(2 * j + 1, arr.ndim)))
        for flat in game.own_prefixes(i, tau):
            row = joint[flat]
            tot = row.sum()
            if tot <= 0:
                continue
            worst = max(worst, float(np.max(np.abs(row / tot - game.mu[tau]))))
    return worst


def _random_continuation(game, m, player, tau, rng):
    """Vectorized random tau-continuation of ``m``: keeps the prefix
    marginal up to tau, redraws behavior from tau on."""
    periods = game.periods_of[player]
    j0 = game.period_index(player, tau)
    feas = game.own_feasible[player]
    nd = feas.ndim
    table = prefix_marginal(game, m, tau) if j0 else np.ones(())
    for j in range(j0, len(periods)):
        t_j = periods[j]
        a_axis = 2 * j + 1
        mask = feas
        if a_axis + 1 < nd:
            mask = feas.any(axis=tuple(range(a_axis + 1, nd)))
        raw = rng.uniform(0.5, 1.5, mask.shape) * mask
        tot = raw.sum(axis=-1, keepdims=True)
        pi = np.where(tot > 0, raw / np.where(tot > 0, tot, 1.0), 0.0)
        factor = pi * game.mu[t_j].reshape((1,) * (2 * j) + (-1, 1))
        table = table[..., None, None] * factor
    return StrategicMeasure(player=player, table=table)


# ---------------------------------------------------------------------------


def test_criterion_01_strategic_measure_invariants(capfd):
    with criterion("01 strategic-measure invariants", capfd):
        t0 = time.monotonic()
        rng = np.random.default_rng(1001)
        for g in range(20):
            game = random_game(rng)
            for _ in range(50):
                i = int(rng.choice(game.players))
                strat = random_strategy(game, i, rng)
                m = induce_measure(game, strat)
                validate_measure(game, m)
                assert _signal_independence_violation(game, m) <= 1e-12
                back = measure_to_strategy(game, m)
                for key, vec in back.rules.items():
                    if vec is not UNCONSTRAINED:
                        assert np.max(np.abs(vec - strat.rules[key])) <= 1e-9
        assert time.monotonic() - t0 < 30.0


def test_criterion_02_multilinearity_and_off_support_equality(capfd):
    with criterion("02 multilinearity / off-support equality", capfd):
        t0 = time.monotonic()
        rng = np.random.default_rng(2002)
        for g in range(3):
            game = random_game(rng)
            pool = [random_profile(game, rng) for _ in range(8)]
            for _ in range(1000):
                p = pool[int(rng.integers(len(pool)))]
                q = pool[int(rng.integers(len(pool)))]
                i = int(rng.choice(game.players))
                w = float(rng.uniform(0, 1))
                mixed = dict(p)
                mixed[i] = mix([p[i], q[i]], [w, 1.0 - w])
                only_q = dict(p)
                only_q[i] = q[i]
                lhs = expected_payoff(game, mixed, i)
                rhs = w * expected_payoff(game, p, i) + (
                    1.0 - w
                ) * expected_payoff(game, only_q, i)
                assert abs(lhs - rhs) <= 1e-10
        # strategies differing only after a zero-probability own action
        # induce bit-identical measures, hence exactly equal payoffs
        game = build_example(1, k=10)
        rng = np.random.default_rng(7)
        base = random_strategy(game, 1, rng)
        rules = dict(base.rules)
        first = (2, (), 0)
        vec = np.zeros_like(rules[first])
        vec[3] = 1.0
        rules[first] = vec  # period-2 action index 3 with certainty
        variant = dict(rules)
        for key in rules:
            if key[0] == 3 and key[1][1] != 3:  # histories off the played a1
                variant[key] = np.roll(rules[key], 1)
        m1 = induce_measure(game, BehaviorStrategy(player=1, rules=rules))
        m2 = induce_measure(game, BehaviorStrategy(player=1, rules=variant))
        assert np.array_equal(m1.table, m2.table)
        other = {2: induce_measure(game, random_strategy(game, 2, rng))}
        pay1 = expected_payoff(game, {**other, 1: m1}, 1)
        pay2 = expected_payoff(game, {**other, 1: m2}, 1)
        assert pay1 == pay2
        assert time.monotonic() - t0 < 30.0


def test_criterion_03_density_folding(capfd):
    with criterion("03 density folding", capfd):
        t0 = time.monotonic()
        rng = np.random.default_rng(3003)
        games = [build_example(3, c=0.9), build_example(4)]
        games += [random_game(rng) for _ in range(2)]
        for game in games:
            folded = fold_densities(game)
            for _ in range(100):
                profile = random_profile(game, rng)
                for i in game.players:
                    a = expected_payoff(game, profile, i)
                    b = expected_payoff(folded, profile, i)
                    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
        for c in (0.5, 0.9, 1.0):
            folded = fold_densities(build_example(3, c=c))
            w = 1.0 - c
            vals = sorted(np.unique(np.round(folded.payoff[1].ravel(), 12)))
            expect = sorted(
                {round(x, 12) for x in (4 * c, 8 * c, 2 * c, 4 * w, 8 * w, 2 * w)}
            )
            assert vals == expect
        assert time.monotonic() - t0 < 10.0


def test_criterion_04_reach_positivity_and_invariance(capfd):
    with criterion("04 reach positivity / continuation invariance", capfd):
        t0 = time.monotonic()
        builtins = {
            "ex1": build_example(1),
            "ex2": build_example(2),
            "ex3": build_example(3),
            "ex4": build_example(4),
            "ex5": build_example(5),
            "duopoly": build_duopoly(DuopolyParams()),
        }
        rng = np.random.default_rng(4004)
        for name, game in builtins.items():
            report = assert_full_support_reach(game)
            assert report.all_positive and report.min_reach > 0, name
            profile = full_support_profile(game)
            sets = all_atomic_relevant_sets(game)
            if name in ("ex1", "duopoly"):
                # full sweep with a reduced sample, deep sample on a few
                plan = [(sets, 20)]
                picks = [sets[k] for k in rng.choice(len(sets), 5, replace=False)]
                plan.append((picks, 200))
            else:
                plan = [(sets, 200)]
            for chosen, n_cont in plan:
                for F in chosen:
                    r0 = reach_probability(game, profile, F)
                    assert r0 > 0
                    for _ in range(n_cont):
                        probe = dict(profile)
                        probe[F.player] = _random_continuation(
                            game, profile[F.player], F.player, F.period, rng
                        )
                        r = reach_probability(game, probe, F)
                        assert abs(r - r0) <= 1e-12
        assert time.monotonic() - t0 < 60.0


def test_criterion_05_conditional_gap_bound(capfd, cert_ex3, cert_ex4, cert_duopoly):
    with criterion("05 conditional-gap bound per level", capfd):
        for (game, cert, _), nash_tol in (
            (cert_ex3, 1e-9),
            (cert_ex4, 1e-9),
            (cert_duopoly, 1e-3),
        ):
            span = game.payoff_span()
            by_n = {step.n: step for step in cert.sequence}
            for n in (2, 4, 8):
                assert n in by_n, (game.spec.name, n)
                bound = span / n + nash_tol
                assert by_n[n].max_conditional_gap <= bound, (
                    game.spec.name, n, by_n[n].max_conditional_gap, bound
                )


def _vertex_max_gap(game, profile, sets):
    worst = 0.0
    for F in sets:
        i = F.player
        cur = conditional_payoff(game, profile, F, i)
        poly = continuation_polytope(game, profile[i], F.period)
        assert not poly.vertex_cap_exceeded
        for v in poly.vertices:
            probe = dict(profile)
            probe[i] = v
            worst = max(worst, conditional_payoff(game, probe, F, i) - cur)
    return worst


def test_criterion_06_example3_oracle(capfd, cert_ex3):
    with criterion("06 ex3 brute-force oracle", capfd):
        t0 = time.monotonic()
        game, cert, elapsed = cert_ex3
        sets = all_atomic_relevant_sets(game)
        anchor = full_support_profile(game)
        pures = {
            1: [induce_measure(game, s) for s in pure_strategies(game, 1)],
            2: [induce_measure(game, s) for s in pure_strategies(game, 2)],
        }
        survivors = []
        for m1, m2 in itertools.product(pures[1], pures[2]):
            cand = {1: m1, 2: m2}
            ok_all = True
            for eps in (1e-1, 1e-2, 1e-3):
                found = False
                t = 0.25
                for _ in range(14):
                    probe = {
                        i: mix([cand[i], anchor[i]], [1.0 - t, t])
                        for i in game.players
                    }
                    if _vertex_max_gap(game, probe, sets) <= eps:
                        found = True
                        break
                    t /= 2.0
                if not found:
                    ok_all = False
                    break
            if ok_all:
                survivors.append(cand)
        assert len(survivors) == 1
        oracle = survivors[0]
        for i in game.players:
            assert total_variation(cert.limit[i], oracle[i]) <= 1e-3
        assert _vertex_max_gap(game, cert.limit, sets) <= 1e-3
        assert elapsed + (time.monotonic() - t0) < 10.0


def test_criterion_07_entanglement_example(capfd, cert_ex1):
    with criterion("07 ex1 entanglement limit", capfd):
        game, cert, elapsed = cert_ex1
        assert cert.converged
        limit = cert.limit
        # Ann's first action sits on the grid point 0.01 with certainty
        coords = np.asarray(game.spec.actions[2].coords)
        a1_marg = limit[1].table.sum(
            axis=tuple(range(2, limit[1].table.ndim))
        ).ravel()
        idx = int(np.argmax(a1_marg))
        assert coords[idx] == pytest.approx(0.01, abs=1e-12)
        assert a1_marg[idx] == pytest.approx(1.0, abs=1e-9)
        assert expected_payoff(game, limit, 1) == pytest.approx(-0.01, abs=1e-3)
        # perfect limit correlation between Ann's match and Bob's secret bit
        t = profile_tensor(game, limit)
        joint = t.sum(axis=(0, 1, 3, 4, 5))  # over everything but (b, a2)
        xs = np.array([0.0, 1.0])
        px, py = joint.sum(axis=1), joint.sum(axis=0)
        ex, ey = px @ xs, py @ xs
        cov = (joint * np.outer(xs - ex, xs - ey)).sum()
        vx = px @ (xs - ex) ** 2
        vy = py @ (xs - ey) ** 2
        assert vx > 0 and vy > 0
        corr = cov / np.sqrt(vx * vy)
        assert corr >= 1.0 - 1e-9
        assert elapsed < 300.0


def test_criterion_08_signaling_example(capfd, cert_ex2):
    with criterion("08 ex2 negative payoff / sign matching", capfd):
        game, cert, elapsed = cert_ex2
        assert cert.converged
        limit = cert.limit
        assert expected_payoff(game, limit, 1) < 0.0
        acoords = np.asarray(game.spec.actions[1].coords)
        bcoords = np.asarray(game.spec.actions[2].coords)
        ann_act = limit[1].table.sum(axis=0)
        ann_act = ann_act / ann_act.sum()
        for s, weight in enumerate(ann_act):
            a = acoords[s]
            if weight <= 1e-9 or a == 0.0:
                continue
            row = limit[2].table[s]
            cond = row / row.sum()
            match = cond[bcoords * a > 0].sum()
            assert match > 0.5, (a, cond)
        assert elapsed < 300.0


def test_criterion_09_duopoly_first_mover(capfd, cert_duopoly):
    with criterion("09 duopoly first-mover advantage", capfd):
        game, cert, elapsed = cert_duopoly
        params = DuopolyParams()
        assert cert.converged
        leader_payoff = expected_payoff(game, cert.limit, 1)
        assert leader_payoff >= 0.105
        assert not is_pure_profile(game, cert.limit)
        passed, report = first_mover_check(cert, params, eps=0.02)
        assert passed and report["passed"]
        assert elapsed < 900.0


def test_criterion_10_checker_soundness(
    capfd, cert_ex1, cert_ex2, cert_ex3, cert_ex4, cert_duopoly
):
    with criterion("10 checker soundness", capfd):
        t0 = time.monotonic()
        for game, cert, _ in (
            cert_ex1, cert_ex2, cert_ex3, cert_ex4, cert_duopoly
        ):
            res = check_sequential(game, cert.limit)
            assert res.verdict == ACCEPT, (game.spec.name, res.reason)
        # negative 1: the matching-signal game with a signal-ignoring
        # second mover locked on the dominated action
        game3, _, _ = cert_ex3
        ann = induce_measure(
            game3,
            BehaviorStrategy(player=1, rules={(1, (), 0): np.array([1.0, 0.0])}),
        )
        bad_bob = np.zeros(game3.own_shape[2])
        bad_bob[:, 1] = 0.5
        res = check_sequential(
            game3, {1: ann, 2: StrategicMeasure(player=2, table=bad_bob)}
        )
        assert res.verdict == REJECT
        # negative 2: the duopoly at the pure static (Cournot, best-reply)
        # profile, which the leader can profitably abandon
        game_d, _, _ = cert_duopoly
        params = DuopolyParams()
        an = duopoly_analytics(params)
        coords = np.asarray(game_d.spec.actions[1].coords)
        i_c = int(np.argmin(np.abs(coords - an["q_cournot"])))
        i_r = int(np.argmin(np.abs(coords - an["reaction"](coords[i_c]))))
        lead = np.zeros(game_d.own_shape[1])
        lead[..., i_c] = 1.0
        fol = np.zeros(game_d.own_shape[2])
        fol[:, i_r] = game_d.mu[2]
        res = check_sequential(
            game_d,
            {
                1: StrategicMeasure(player=1, table=lead),
                2: StrategicMeasure(player=2, table=fol),
            },
        )
        assert res.verdict == REJECT
        assert time.monotonic() - t0 < 600.0


def test_criterion_11_deterministic_artifacts(capfd, tmp_path):
    with criterion("11 deterministic artifacts", capfd):
        runner = CliRunner()
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            res = runner.invoke(
                cli_main,
                ["solve", "--example", "ex3", "--schedule", "2,4,8,16,32",
                 "--seed", "7", "--workers", "1", "--out", str(out)],
            )
            assert res.exit_code == 0, res.output
            outs.append(out)
        for fname in ("report.txt", "gaps.csv", "limit_profile.txt"):
            b0 = (outs[0] / fname).read_bytes()
            b1 = (outs[1] / fname).read_bytes()
            assert b0 == b1, fname
