"""Text format for game specs and strategic-measure profiles.

The format is line-based: ``[section]`` headers followed by ``key = value``
entries.  Labels are JSON strings, numbers are plain floats, lists are
comma-separated.  Serialization uses ``repr`` for floats, so values
round-trip exactly and identical inputs produce identical bytes.

Game file sections::

    [game]              name, horizon, active
    [nature]            values
    [actions T]         labels or coords      (one per period)
    [signals T]         labels or coords      (periods 1..)
    [mu T]              values
    [density T]         mask, values          (values row-major)
    [correspondence T]  rule = "s:a",... | "sig" -> "a",...
    [payoff I]          shape, values
    [tailbound]         values (t:bound,...), rest

Profile files hold ``[measure I]`` sections with shape and values.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ParseError
from .measures import StrategicMeasure
from .model import (
    Correspondence,
    DensityTable,
    GameSpec,
    Grid,
    TailBound,
    ValidatedGame,
    validate_game,
)


# ---------------------------------------------------------------------------
# low-level scanning


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    prev = ""
    for ch in line:
        if ch == '"' and prev != "\\":
            in_string = not in_string
        if ch == "#" and not in_string:
            break
        out.append(ch)
        prev = ch
    return "".join(out)


def _split_top(text: str, sep: str, lineno: int):
    """Split on a separator outside JSON strings."""
    parts, buf, in_string, prev = [], [], False, ""
    for col, ch in enumerate(text, start=1):
        if ch == '"' and prev != "\\":
            in_string = not in_string
        if ch == sep and not in_string:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
        prev = ch
    if in_string:
        raise ParseError("unterminated string", line=lineno, column=len(text))
    parts.append("".join(buf))
    return parts


def _parse_label(token: str, lineno: int) -> str:
    token = token.strip()
    try:
        value = json.loads(token)
    except ValueError:
        raise ParseError(
            f"expected a quoted label, got {token!r}", line=lineno, column=1
        ) from None
    if not isinstance(value, str):
        raise ParseError(
            f"expected a quoted label, got {token!r}", line=lineno, column=1
        )
    return value


def _parse_float(token: str, lineno: int) -> float:
    try:
        return float(token.strip())
    except ValueError:
        raise ParseError(
            f"expected a number, got {token.strip()!r}", line=lineno, column=1
        ) from None


def _parse_int(token: str, lineno: int) -> int:
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        raise ParseError(
            f"expected an integer, got {token!r}", line=lineno, column=1
        ) from None


def _float_list(value: str, lineno: int):
    value = value.strip()
    if not value:
        return []
    return [_parse_float(t, lineno) for t in _split_top(value, ",", lineno)]


def _int_list(value: str, lineno: int):
    value = value.strip()
    if not value:
        return []
    return [_parse_int(t, lineno) for t in _split_top(value, ",", lineno)]


def _label_list(value: str, lineno: int):
    value = value.strip()
    if not value:
        return []
    return [_parse_label(t, lineno) for t in _split_top(value, ",", lineno)]


class _Section:
    def __init__(self, kind, arg, lineno):
        self.kind = kind
        self.arg = arg
        self.lineno = lineno
        self.entries = []  # (key, value, lineno)


_SECTION_KINDS = {
    "game": False,
    "nature": False,
    "tailbound": False,
    "actions": True,
    "signals": True,
    "mu": True,
    "density": True,
    "correspondence": True,
    "payoff": True,
    "measure": True,
}


def _scan(text: str):
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(
                    "malformed section header", line=lineno, column=len(line)
                )
            head = line[1:-1].split()
            kind = head[0] if head else ""
            if kind not in _SECTION_KINDS:
                raise ParseError(
                    f"unknown section {kind!r}", line=lineno, column=2
                )
            takes_arg = _SECTION_KINDS[kind]
            if takes_arg:
                if len(head) != 2:
                    raise ParseError(
                        f"section {kind!r} needs exactly one argument",
                        line=lineno,
                        column=2,
                    )
                arg = _parse_int(head[1], lineno)
            else:
                if len(head) != 1:
                    raise ParseError(
                        f"section {kind!r} takes no argument", line=lineno, column=2
                    )
                arg = None
            current = _Section(kind, arg, lineno)
            sections.append(current)
            continue
        if "=" not in line:
            raise ParseError(
                "expected 'key = value'", line=lineno, column=1
            )
        if current is None:
            raise ParseError(
                "entry outside any section", line=lineno, column=1
            )
        key, _, value = line.partition("=")
        current.entries.append((key.strip(), value.strip(), lineno))
    return sections


def _entries_dict(section: _Section, allowed, repeatable=()):
    out = {}
    for key, value, lineno in section.entries:
        if key not in allowed:
            raise ParseError(
                f"unknown key {key!r} in section [{section.kind}]",
                line=lineno,
                column=1,
            )
        if key in repeatable:
            out.setdefault(key, []).append((value, lineno))
        elif key in out:
            raise ParseError(
                f"duplicate key {key!r}", line=lineno, column=1
            )
        else:
            out[key] = (value, lineno)
    return out


def _require(entries, key, section):
    if key not in entries:
        raise ParseError(
            f"section [{section.kind}] is missing key {key!r}",
            line=section.lineno,
            column=1,
        )
    return entries[key]


# ---------------------------------------------------------------------------
# game parsing


def _parse_grid(section: _Section) -> Grid:
    entries = _entries_dict(section, {"labels", "coords"})
    if "labels" in entries and "coords" in entries:
        raise ParseError(
            "give either labels or coords, not both",
            line=section.lineno,
            column=1,
        )
    if "coords" in entries:
        value, lineno = entries["coords"]
        return Grid.from_coords(_float_list(value, lineno))
    value, lineno = _require(entries, "labels", section)
    return Grid(tuple(_label_list(value, lineno)))


def _parse_correspondence(section: _Section) -> Correspondence:
    entries = _entries_dict(section, {"rule"}, repeatable=("rule",))
    restrictions = {}
    for value, lineno in entries.get("rule", []):
        bar = _split_top(value, "|", lineno)
        if len(bar) != 2:
            raise ParseError(
                "rule must look like: prefix | \"signal\" -> actions",
                line=lineno,
                column=1,
            )
        prefix_part, rest = bar
        if "->" not in rest:
            raise ParseError(
                "rule is missing '->'", line=lineno, column=1
            )
        signal_part, _, actions_part = rest.partition("->")
        pairs = []
        for token in _label_list(prefix_part, lineno):
            if ":" not in token:
                raise ParseError(
                    f"prefix entry {token!r} must look like \"signal:action\"",
                    line=lineno,
                    column=1,
                )
            s, _, a = token.partition(":")
            pairs.append((s, a))
        signal = _parse_label(signal_part, lineno)
        actions = tuple(_label_list(actions_part, lineno))
        restrictions[(tuple(pairs), signal)] = actions
    return Correspondence(restrictions)


def _parse_shaped_array(section: _Section, entries) -> np.ndarray:
    shape_value, shape_line = _require(entries, "shape", section)
    values_value, values_line = _require(entries, "values", section)
    shape = tuple(_int_list(shape_value, shape_line))
    flat = _float_list(values_value, values_line)
    expected = int(np.prod(shape)) if shape else 1
    if len(flat) != expected:
        raise ParseError(
            f"shape {shape} needs {expected} values, got {len(flat)}",
            line=values_line,
            column=1,
        )
    return np.array(flat).reshape(shape)


def parse_game(text: str) -> GameSpec:
    """Parse the game-spec text format into an (unvalidated) GameSpec."""
    sections = _scan(text)
    game_sec = None
    by_kind = {}
    for sec in sections:
        if sec.kind == "measure":
            raise ParseError(
                "profile sections do not belong in a game file",
                line=sec.lineno,
                column=1,
            )
        key = (sec.kind, sec.arg)
        if key in by_kind:
            raise ParseError(
                f"duplicate section [{sec.kind}"
                + (f" {sec.arg}" if sec.arg is not None else "")
                + "]",
                line=sec.lineno,
                column=1,
            )
        by_kind[key] = sec
        if sec.kind == "game":
            game_sec = sec
    if game_sec is None:
        raise ParseError("missing [game] section", line=1, column=1)
    entries = _entries_dict(game_sec, {"name", "horizon", "active"})
    name = ""
    if "name" in entries:
        name = _parse_label(*entries["name"])
    horizon = _parse_int(*_require(entries, "horizon", game_sec))
    active_value, active_line = _require(entries, "active", game_sec)
    active = tuple(_int_list(active_value, active_line))
    if horizon < 1 or len(active) != horizon:
        raise ParseError(
            f"active must list one player per period (horizon {horizon})",
            line=active_line,
            column=1,
        )

    nature_sec = by_kind.get(("nature", None))
    if nature_sec is None:
        raise ParseError("missing [nature] section", line=1, column=1)
    nat_entries = _entries_dict(nature_sec, {"values"})
    nature = np.array(_float_list(*_require(nat_entries, "values", nature_sec)))

    def grid_for(kind, tau):
        sec = by_kind.get((kind, tau))
        if sec is None:
            raise ParseError(f"missing [{kind} {tau}] section", line=1, column=1)
        return _parse_grid(sec)

    actions = tuple(grid_for("actions", tau) for tau in range(horizon))
    signals = [None]
    base = [None]
    density = [None]
    correspondence = [None]
    for tau in range(1, horizon):
        signals.append(grid_for("signals", tau))
        mu_sec = by_kind.get(("mu", tau))
        if mu_sec is None:
            raise ParseError(f"missing [mu {tau}] section", line=1, column=1)
        mu_entries = _entries_dict(mu_sec, {"values"})
        base.append(np.array(_float_list(*_require(mu_entries, "values", mu_sec))))
        dens_sec = by_kind.get(("density", tau))
        if dens_sec is None:
            raise ParseError(f"missing [density {tau}] section", line=1, column=1)
        dens_entries = _entries_dict(dens_sec, {"mask", "values"})
        mask_value, mask_line = _require(dens_entries, "mask", dens_sec)
        mask = tuple(_int_list(mask_value, mask_line))
        values_value, values_line = _require(dens_entries, "values", dens_sec)
        flat = _float_list(values_value, values_line)
        hist_shape = [actions[0].size]
        for t in range(1, tau):
            hist_shape += [signals[t].size, actions[t].size]
        try:
            shape = tuple(hist_shape[k] for k in mask) + (signals[tau].size,)
        except IndexError:
            raise ParseError(
                f"density mask {mask} out of range for period {tau}",
                line=mask_line,
                column=1,
            ) from None
        expected = int(np.prod(shape))
        if len(flat) != expected:
            raise ParseError(
                f"density table for period {tau} needs {expected} values, "
                f"got {len(flat)}",
                line=values_line,
                column=1,
            )
        density.append(DensityTable(mask=mask, table=np.array(flat).reshape(shape)))
        corr_sec = by_kind.get(("correspondence", tau))
        correspondence.append(
            _parse_correspondence(corr_sec) if corr_sec is not None
            else Correspondence()
        )

    payoffs = {}
    for (kind, arg), sec in by_kind.items():
        if kind != "payoff":
            continue
        entries = _entries_dict(sec, {"shape", "values"})
        payoffs[arg] = _parse_shaped_array(sec, entries)
    proper = sorted(set(active[1:]))
    for i in proper:
        if i not in payoffs:
            raise ParseError(f"missing [payoff {i}] section", line=1, column=1)

    tail_bound = None
    tb_sec = by_kind.get(("tailbound", None))
    if tb_sec is not None:
        entries = _entries_dict(tb_sec, {"values", "rest"})
        values = {}
        if "values" in entries:
            value, lineno = entries["values"]
            for token in _split_top(value, ",", lineno) if value.strip() else []:
                if ":" not in token:
                    raise ParseError(
                        f"tail bound entry {token!r} must look like period:bound",
                        line=lineno,
                        column=1,
                    )
                t, _, b = token.partition(":")
                values[_parse_int(t, lineno)] = _parse_float(b, lineno)
        rest = 0.0
        if "rest" in entries:
            rest = _parse_float(*entries["rest"])
        tail_bound = TailBound(values=values, rest=rest)

    return GameSpec(
        horizon=horizon,
        active=active,
        actions=actions,
        signals=tuple(signals),
        nature=nature,
        base=tuple(base),
        density=tuple(density),
        correspondence=tuple(correspondence),
        payoffs=payoffs,
        tail_bound=tail_bound,
        name=name,
    )


def load_game(path, play_cap=None) -> ValidatedGame:
    with open(path) as fh:
        spec = parse_game(fh.read())
    if play_cap is None:
        return validate_game(spec)
    return validate_game(spec, play_cap=play_cap)


# ---------------------------------------------------------------------------
# serialization


def _fmt_labels(labels):
    return ",".join(json.dumps(lab) for lab in labels)


def _fmt_floats(values):
    return ",".join(repr(float(v)) for v in values)


def _grid_lines(kind, tau, grid: Grid):
    lines = [f"[{kind} {tau}]"]
    if grid.coords is not None:
        lines.append(f"coords = {_fmt_floats(grid.coords)}")
    else:
        lines.append(f"labels = {_fmt_labels(grid.labels)}")
    return lines


def serialize_game(game) -> str:
    """Emit a GameSpec (or ValidatedGame) in the spec text format; parsing
    the output reproduces the spec exactly."""
    spec = game.spec if isinstance(game, ValidatedGame) else game
    lines = ["[game]"]
    if spec.name:
        lines.append(f"name = {json.dumps(spec.name)}")
    lines.append(f"horizon = {spec.horizon}")
    lines.append("active = " + ",".join(str(p) for p in spec.active))
    lines.append("")
    lines.append("[nature]")
    lines.append(f"values = {_fmt_floats(np.asarray(spec.nature).ravel())}")
    for tau in range(spec.horizon):
        lines.append("")
        lines.extend(_grid_lines("actions", tau, spec.actions[tau]))
    for tau in range(1, spec.horizon):
        lines.append("")
        lines.extend(_grid_lines("signals", tau, spec.signals[tau]))
        lines.append("")
        lines.append(f"[mu {tau}]")
        lines.append(f"values = {_fmt_floats(np.asarray(spec.base[tau]).ravel())}")
        lines.append("")
        lines.append(f"[density {tau}]")
        dens = spec.density[tau]
        lines.append("mask = " + ",".join(str(k) for k in dens.mask))
        lines.append(f"values = {_fmt_floats(dens.table.ravel())}")
        corr = spec.correspondence[tau]
        if corr is not None and corr.restrictions:
            lines.append("")
            lines.append(f"[correspondence {tau}]")
            for (pairs, signal), allowed in sorted(corr.restrictions.items()):
                prefix = ",".join(json.dumps(f"{s}:{a}") for s, a in pairs)
                lines.append(
                    f"rule = {prefix} | {json.dumps(signal)} -> "
                    + _fmt_labels(allowed)
                )
    for i in sorted(spec.payoffs):
        v = np.asarray(spec.payoffs[i], dtype=float)
        lines.append("")
        lines.append(f"[payoff {i}]")
        lines.append("shape = " + ",".join(str(s) for s in v.shape))
        lines.append(f"values = {_fmt_floats(v.ravel())}")
    if spec.tail_bound is not None:
        lines.append("")
        lines.append("[tailbound]")
        lines.append(
            "values = "
            + ",".join(
                f"{t}:{repr(float(b))}"
                for t, b in sorted(spec.tail_bound.values.items())
            )
        )
        lines.append(f"rest = {repr(float(spec.tail_bound.rest))}")
    return "\n".join(lines) + "\n"


def parse_profile(text: str) -> dict:
    """Parse ``[measure I]`` sections into strategic measures keyed by
    player id (tables unvalidated; validate against a game separately)."""
    sections = _scan(text)
    profile = {}
    for sec in sections:
        if sec.kind != "measure":
            raise ParseError(
                f"unexpected section [{sec.kind}] in a profile file",
                line=sec.lineno,
                column=1,
            )
        if sec.arg in profile:
            raise ParseError(
                f"duplicate [measure {sec.arg}] section",
                line=sec.lineno,
                column=1,
            )
        entries = _entries_dict(sec, {"shape", "values"})
        table = _parse_shaped_array(sec, entries)
        profile[sec.arg] = StrategicMeasure(player=sec.arg, table=table)
    if not profile:
        raise ParseError("profile file holds no [measure] sections", line=1, column=1)
    return profile


def serialize_profile(profile: dict) -> str:
    lines = []
    for i in sorted(profile):
        table = np.asarray(profile[i].table, dtype=float)
        if lines:
            lines.append("")
        lines.append(f"[measure {i}]")
        lines.append("shape = " + ",".join(str(s) for s in table.shape))
        lines.append(f"values = {_fmt_floats(table.ravel())}")
    return "\n".join(lines) + "\n"
