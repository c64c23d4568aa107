"""Parser for indicator definition files.

One definition per line::

    eu_cagr = CAGR(eu_ai_2021, eu_ai_2025, 4) ~ 26.95%
    regional_hhi = HHI(share_asia, share_europe, share_americas, share_other, scope=Regional)

Arguments are dataset ids, optionally followed by a bare year count (CAGR
only) and ``key=value`` options. ``~ text`` gives the figure as published, to
be checked within half a unit of its last digit. ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Iterable

from .concentration import Scope
from .errors import DefinitionParseError, SpecError
from .formulas import FormulaId, Show
from .ledger import ReportedValue

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<int>\d+)
  | (?P<str>"[^"]*")
  | (?P<punct>[=(),~])
    """,
    re.VERBOSE,
)

OPTION_KEYS = {"n", "scope", "show", "compare", "group"}


@dataclass(frozen=True)
class Definition:
    out_id: str
    formula: FormulaId
    inputs: tuple[str, ...]
    n: int | None = None
    scope: Scope | None = None
    show: Show | None = None
    scale_comparison: bool = False
    group: str = ""
    reported: str | None = None
    line: int = 0
    options: dict = field(default_factory=dict, compare=False)

    @property
    def presentation(self) -> Show:
        return self.show or self.formula.spec.show


class _Cursor:
    def __init__(self, text: str, line: int):
        self.text = text
        self.line = line
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                self.fail(f"unexpected character {text[pos]!r}", pos)
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.i = 0

    def fail(self, msg: str, pos: int | None = None):
        if pos is None:
            pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        raise DefinitionParseError(msg, self.line, pos + 1)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, kind: str, value: str | None = None):
        k, v, pos = self.peek()
        if k != kind or (value is not None and v != value):
            want = value or kind
            got = v if v is not None else "end of line"
            self.fail(f"expected {want}, found {got!r}")
        self.i += 1
        return v, pos


def _parse_line(text: str, lineno: int) -> Definition:
    tilde = text.find("~")
    reported = None
    if tilde >= 0:
        after = text[tilde + 1 :]
        reported = after.strip()
        try:
            ReportedValue.parse(reported)
        except ValueError:
            col = tilde + 2 + len(after) - len(after.lstrip())
            raise DefinitionParseError(f"cannot read published value {reported!r}", lineno, col) from None
        text = text[:tilde]
    cur = _Cursor(text, lineno)
    out_id, _ = cur.take("ident")
    cur.take("punct", "=")
    fname, fpos = cur.take("ident")
    try:
        formula = FormulaId.from_token(fname)
    except SpecError:
        cur.fail(f"unknown formula {fname!r}", fpos)
    cur.take("punct", "(")
    inputs: list[str] = []
    options: dict[str, tuple[str, int]] = {}
    n_pos = None
    while True:
        kind, val, pos = cur.peek()
        if kind == "ident":
            cur.i += 1
            if cur.peek()[1] == "=":
                cur.i += 1
                vkind, vval, vpos = cur.peek()
                if vkind not in ("ident", "int", "str"):
                    cur.fail(f"missing value for option {val!r}")
                cur.i += 1
                if val not in OPTION_KEYS:
                    cur.fail(f"unknown option {val!r}", pos)
                if val in options:
                    cur.fail(f"option {val!r} given twice", pos)
                options[val] = (vval.strip('"'), vpos)
            else:
                if options or n_pos is not None:
                    cur.fail("input ids must come before the year count and options", pos)
                inputs.append(val)
        elif kind == "int":
            cur.i += 1
            if options or n_pos is not None:
                cur.fail("year count must follow the inputs", pos)
            options["n"] = (val, pos)
            n_pos = pos
        else:
            cur.fail("expected an input id")
        kind, val, pos = cur.peek()
        if val == ",":
            cur.i += 1
            continue
        if val == ")":
            cur.i += 1
            break
        cur.fail("expected ',' or ')'")
    if cur.peek()[0] is not None:
        cur.fail("trailing text after definition")

    spec = formula.spec
    if len(inputs) < spec.min_args or (spec.max_args is not None and len(inputs) > spec.max_args):
        want = f"{spec.min_args}" if spec.max_args == spec.min_args else f"at least {spec.min_args}"
        cur.fail(f"{formula.token} takes {want} input(s), got {len(inputs)}", fpos)
    if formula is FormulaId.CFINDEX:
        cur.fail("CFINDEX values come from sector series, not definitions", fpos)

    n = None
    if "n" in options:
        if formula is not FormulaId.CAGR:
            cur.fail(f"{formula.token} takes no year count", options["n"][1])
        try:
            n = int(options["n"][0])
        except ValueError:
            cur.fail("year count must be an integer", options["n"][1])
        if n < 1:
            cur.fail("year count must be at least 1", options["n"][1])
    scope = None
    if "scope" in options:
        try:
            scope = Scope.parse(options["scope"][0])
        except ValueError as exc:
            cur.fail(str(exc), options["scope"][1])
    if spec.needs_scope and scope is None:
        cur.fail(f"{formula.token} needs scope=... declared before shares are computed", fpos)
    show = None
    if "show" in options:
        try:
            show = Show(options["show"][0].lower())
        except ValueError:
            cur.fail(f"show must be one of {[s.value for s in Show]}", options["show"][1])
    scale = False
    if "compare" in options:
        if options["compare"][0].lower() != "scale":
            cur.fail("compare only accepts 'scale'", options["compare"][1])
        scale = True
    return Definition(
        out_id=out_id,
        formula=formula,
        inputs=tuple(inputs),
        n=n,
        scope=scope,
        show=show,
        scale_comparison=scale,
        group=options.get("group", ("", 0))[0],
        reported=reported,
        line=lineno,
        options={k: v for k, (v, _) in options.items()},
    )


def parse_definitions(text: str, known_ids: Collection[str] | None = None) -> list[Definition]:
    defs: list[Definition] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        d = _parse_line(line, lineno)
        if d.out_id in seen:
            raise DefinitionParseError(f"duplicate definition {d.out_id!r}", lineno, 1)
        if known_ids is not None:
            if d.out_id in known_ids:
                raise DefinitionParseError(f"{d.out_id!r} is already a dataset id", lineno, 1)
            for inp in d.inputs:
                if inp not in known_ids:
                    col = line.find(inp) + 1
                    raise DefinitionParseError(f"unknown input id {inp!r}", lineno, max(col, 1))
        seen.add(d.out_id)
        defs.append(d)
    return defs


def parse_indicator_defs(path: str | Path, known_ids: Iterable[str] | None = None) -> list[Definition]:
    text = Path(path).read_text(encoding="utf-8")
    return parse_definitions(text, set(known_ids) if known_ids is not None else None)
