"""Command-line surface: solve, check, and transform games in batch.

Exit codes: 0 success / ACCEPT, 1 parse or spec errors, 2 solver
non-convergence, 3 checker REJECT, 4 checker INCONCLUSIVE.
"""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from .engine import fold_densities
from .errors import NonConvergenceError, ParseError, SeqMeasError
from .library import (
    DuopolyParams,
    build_duopoly,
    build_example,
    first_mover_check,
)
from .solver import (
    ACCEPT,
    INCONCLUSIVE,
    REJECT,
    check_sequential,
    sequential_equilibrium,
)
from .specfile import load_game, parse_profile, serialize_game, serialize_profile

log = logging.getLogger("seqmeas")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NON_CONVERGENCE = 2
EXIT_REJECT = 3
EXIT_INCONCLUSIVE = 4

_EXAMPLES = ("ex1", "ex2", "ex3", "ex4", "ex5", "duopoly")


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters shared by the subcommands."""

    command: str
    spec: str | None
    example: str | None
    schedule: tuple
    eps_target: float
    eps_schedule: tuple
    conv_tol: float
    nash_tol: float
    seed: int | None
    out: str
    workers: int

    def __post_init__(self):
        if (self.spec is None) == (self.example is None):
            raise SeqMeasError("give exactly one of --spec or --example")
        if not self.schedule or any(
            b <= a for a, b in zip(self.schedule, self.schedule[1:])
        ):
            raise SeqMeasError("schedule must be nonempty and increasing")
        for value, what in (
            (self.eps_target, "eps"),
            (self.conv_tol, "tol"),
            (self.nash_tol, "nash tolerance"),
        ):
            if value <= 0:
                raise SeqMeasError(f"{what} must be positive, got {value}")
        if any(e <= 0 for e in self.eps_schedule):
            raise SeqMeasError("epsilon schedule entries must be positive")
        if self.workers < 1:
            raise SeqMeasError("worker count must be at least 1")


def _setup_logging():
    level = os.environ.get("SEQMEAS_LOG", "WARNING").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(name)s %(levelname)s %(message)s",
    )


def _parse_floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _parse_ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _build(config: RunConfig, params: dict):
    """The game to operate on, plus duopoly parameters when applicable."""
    if config.spec is not None:
        return load_game(config.spec), None
    name = config.example
    if name not in _EXAMPLES:
        raise SeqMeasError(
            f"unknown example {name!r}; choose one of {', '.join(_EXAMPLES)}"
        )
    if name == "duopoly":
        dp = DuopolyParams(
            a=params["a"],
            b=params["b"],
            cost=params["cost"],
            delta=params["delta"],
            grid_n=params["grid"],
        )
        return build_duopoly(dp), dp
    which = int(name[2:])
    kwargs = {}
    if which in (1, 2, 5) and params.get("k") is not None:
        kwargs["k"] = params["k"]
    if which == 3:
        kwargs["c"] = params["c"]
    return build_example(which, **kwargs), None


def _fail(err: SeqMeasError) -> int:
    click.echo(f"error[{err.code}]: {err}", err=True)
    return EXIT_ERROR


_GAME_OPTIONS = [
    click.option("--spec", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="Game spec file."),
    click.option("--example", type=str, default=None,
                 help=f"Builtin game: {', '.join(_EXAMPLES)}."),
    click.option("--c", type=float, default=0.9, show_default=True,
                 help="Signal accuracy for ex3."),
    click.option("--k", type=int, default=None,
                 help="Grid resolution 1/k for ex1, ex2, ex5."),
    click.option("--a", type=float, default=1.0, show_default=True,
                 help="Duopoly demand intercept."),
    click.option("--b", type=float, default=1.0, show_default=True,
                 help="Duopoly demand slope."),
    click.option("--cost", type=float, default=0.0, show_default=True,
                 help="Duopoly unit cost."),
    click.option("--delta", type=float, default=0.05, show_default=True,
                 help="Duopoly observation noise half-width."),
    click.option("--grid", type=int, default=101, show_default=True,
                 help="Duopoly quantity/signal grid size."),
]


def _with_game_options(fn):
    for opt in reversed(_GAME_OPTIONS):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Solve and inspect finite multistage games with noisy signals."""
    _setup_logging()


@main.command()
@_with_game_options
@click.option("--schedule", default="2,4,8,16,32", show_default=True,
              help="Increasing restriction levels, comma separated.")
@click.option("--eps", default=1e-3, show_default=True,
              help="Conditional-gap target for the certificate.")
@click.option("--tol", default=1e-4, show_default=True,
              help="Total-variation convergence tolerance.")
@click.option("--nash-tol", default=1e-9, show_default=True,
              help="Per-level restricted equilibrium gap tolerance.")
@click.option("--max-iterations", default=3000, show_default=True)
@click.option("--polish-margin", type=float, default=None,
              help="Limit-trimming margin (default 10x the nash tolerance).")
@click.option("--seed", type=int, default=None, help="Recorded in artifacts.")
@click.option("--workers", default=1, show_default=True,
              help="Worker count (computation is serial; 1 is bit-stable).")
@click.option("--out", type=click.Path(file_okay=False), default="out",
              show_default=True, help="Artifact directory.")
def solve(spec, example, c, k, a, b, cost, delta, grid, schedule, eps, tol,
          nash_tol, max_iterations, polish_margin, seed, workers, out):
    """Compute a sequential equilibrium and write its certificate."""
    try:
        config = RunConfig(
            command="solve", spec=spec, example=example,
            schedule=_parse_ints(schedule), eps_target=eps, eps_schedule=(eps,),
            conv_tol=tol, nash_tol=nash_tol, seed=seed, out=out, workers=workers,
        )
        if polish_margin is not None and polish_margin <= 0:
            raise SeqMeasError(
                f"polish margin must be positive, got {polish_margin}"
            )
        game, duopoly_params = _build(
            config,
            {"c": c, "k": k, "a": a, "b": b, "cost": cost, "delta": delta,
             "grid": grid},
        )
        log.info("solving %s over schedule %s", game.spec.name, config.schedule)
        cert = sequential_equilibrium(
            game,
            schedule=config.schedule,
            eps_target=config.eps_target,
            tol=config.conv_tol,
            nash_tol=config.nash_tol,
            max_iterations=max_iterations,
            seed=config.seed,
            polish_margin=polish_margin,
        )
    except SeqMeasError as err:
        sys.exit(_fail(err))
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = cert.to_report()
    if duopoly_params is not None:
        _, fm = first_mover_check(cert, duopoly_params, eps=0.02)
        report += "first_mover_check (epsilon=0.02):\n"
        for key in sorted(fm):
            report += f"  {key} = {fm[key]!r}\n"
    (out_dir / "report.txt").write_text(report)
    cert.write_gaps_csv(out_dir / "gaps.csv")
    (out_dir / "limit_profile.txt").write_text(serialize_profile(cert.limit))
    click.echo(f"converged: {cert.converged}")
    if not cert.converged:
        click.echo(f"failure: {cert.failure_reason}", err=True)
        sys.exit(EXIT_NON_CONVERGENCE)
    sys.exit(EXIT_OK)


@main.command()
@_with_game_options
@click.option("--profile", "profile_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Profile file with one [measure] section per player.")
@click.option("--eps-schedule", default="0.1,0.01,0.001", show_default=True,
              help="Decreasing epsilons the candidate must certify.")
@click.option("--tol", default=1e-2, show_default=True,
              help="Allowed distance of the verifying profiles.")
@click.option("--seed", type=int, default=None)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="out",
              show_default=True)
def check(spec, example, c, k, a, b, cost, delta, grid, profile_path,
          eps_schedule, tol, seed, workers, out):
    """Semi-decide whether a profile is a sequential-equilibrium limit."""
    try:
        config = RunConfig(
            command="check", spec=spec, example=example, schedule=(2,),
            eps_target=1.0, eps_schedule=_parse_floats(eps_schedule),
            conv_tol=tol, nash_tol=1.0, seed=seed, out=out, workers=workers,
        )
        game, _ = _build(
            config,
            {"c": c, "k": k, "a": a, "b": b, "cost": cost, "delta": delta,
             "grid": grid},
        )
        with open(profile_path) as fh:
            candidate = parse_profile(fh.read())
        for i in game.players:
            if i not in candidate:
                raise SeqMeasError(f"profile file is missing player {i}")
            if candidate[i].table.shape != game.own_shape[i]:
                raise SeqMeasError(
                    f"measure of player {i} has shape "
                    f"{candidate[i].table.shape}, the game needs "
                    f"{game.own_shape[i]}"
                )
        result = check_sequential(
            game, candidate, eps_schedule=config.eps_schedule, tol=config.conv_tol
        )
    except SeqMeasError as err:
        sys.exit(_fail(err))
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"verdict: {result.verdict}", f"reason: {result.reason}"]
    if result.violated_set is not None:
        lines.append(f"violated_set: {result.violated_set}")
        lines.append(f"irreducible_gap: {result.irreducible_gap!r}")
    for eps, t, dist, gap in result.trail:
        lines.append(
            f"certified eps={eps!r} mix_weight={t!r} distance={dist!r} "
            f"max_gap={gap!r}"
        )
    (out_dir / "verdict.txt").write_text("\n".join(lines) + "\n")
    click.echo(result.verdict)
    if result.verdict == ACCEPT:
        sys.exit(EXIT_OK)
    if result.verdict == REJECT:
        sys.exit(EXIT_REJECT)
    sys.exit(EXIT_INCONCLUSIVE)


@main.command()
@_with_game_options
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Where to write the transformed spec.")
def transform(spec, example, c, k, a, b, cost, delta, grid, out):
    """Fold the signal densities into the payoffs and emit the equivalent
    game without informative signals."""
    try:
        config = RunConfig(
            command="transform", spec=spec, example=example, schedule=(2,),
            eps_target=1.0, eps_schedule=(1.0,), conv_tol=1.0, nash_tol=1.0,
            seed=None, out=out, workers=1,
        )
        game, _ = _build(
            config,
            {"c": c, "k": k, "a": a, "b": b, "cost": cost, "delta": delta,
             "grid": grid},
        )
        folded = fold_densities(game)
    except SeqMeasError as err:
        sys.exit(_fail(err))
    Path(out).write_text(serialize_game(folded))
    click.echo(f"wrote {out}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
