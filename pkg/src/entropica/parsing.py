"""Text grammar for density specifications.

::

    spec   := 'file:' PATH | NAME '(' args ')'
    args   := (number | weighted) (',' (number | weighted))*
    weighted := number ':' spec          (mixture components only)

Examples: ``gaussian(0,1)``, ``laplace(0,0.7)``,
``mix(0.5:gaussian(-2,1),0.5:uniform(0,1))``, ``file:noise.csv``.
"""

from __future__ import annotations

import re

from .families import Family, FamilyError, Mixture, Tabulated, make_family

__all__ = ["SpecSyntaxError", "parse_density_spec", "ARITY"]

ARITY = {"gaussian": 2, "normal": 2, "uniform": 2, "laplace": 2}

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class SpecSyntaxError(ValueError):
    """Malformed spec; ``position`` is the 0-based character offset of the problem."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg, pos=None):
        raise SpecSyntaxError(msg, self.text, self.pos if pos is None else pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch):
        self.skip_ws()
        if not self.text.startswith(ch, self.pos):
            found = repr(self.text[self.pos]) if self.pos < len(self.text) else "end of input"
            self.error(f"expected {ch!r}, found {found}")
        self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def number(self) -> float:
        self.skip_ws()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            self.error("expected a number")
        self.pos = m.end()
        return float(m.group())

    def spec(self):
        self.skip_ws()
        start = self.pos
        if self.text.startswith("file:", self.pos):
            path = self.text[self.pos + 5 :].strip()
            if not path:
                self.error("empty file path", self.pos + 5)
            self.pos = len(self.text)
            return Tabulated(path)
        m = _NAME.match(self.text, self.pos)
        if not m:
            self.error("expected a family name")
        name = m.group().lower()
        self.pos = m.end()
        if name == "mix":
            return self.mixture(start)
        if name not in ARITY:
            self.error(f"unknown family {name!r}", start)
        self.expect("(")
        args = [self.number()]
        while self.peek() == ",":
            self.pos += 1
            args.append(self.number())
        self.expect(")")
        if len(args) != ARITY[name]:
            self.error(f"{name} takes {ARITY[name]} arguments, got {len(args)}", start)
        try:
            return make_family(name, args)
        except FamilyError as exc:
            self.error(str(exc), start)

    def mixture(self, start):
        self.expect("(")
        comps = []
        while True:
            w = self.number()
            self.expect(":")
            sub = self.spec()
            if isinstance(sub, Tabulated):
                self.error("tabulated files cannot be mixture components", start)
            comps.append((w, sub))
            if self.peek() != ",":
                break
            self.pos += 1
        self.expect(")")
        try:
            return Mixture(tuple(comps))
        except FamilyError as exc:
            self.error(str(exc), start)


def parse_density_spec(text: str) -> Family | Tabulated:
    """Parse ``text`` into a family or a tabulated-file reference."""
    p = _Parser(text)
    result = p.spec()
    p.skip_ws()
    if p.pos != len(text):
        p.error("unexpected trailing input")
    return result
