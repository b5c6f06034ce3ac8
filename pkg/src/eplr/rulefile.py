"""Text persistence for chains of polynomial lattice rules, and weight specs.

A rule file looks like::

    eplr-rules 1
    base 2
    alpha 2
    weights j^-2
    c_alpha 1.0
    s 3
    rule 9
    modulus 1 0 0 0 1 0 0 0 0 1
    q 1
    q 0 1 1
    q 1 1 0 1
    criterion 0.0123
    bound 0.0456
    end

Polynomial coefficients are listed from the constant term upwards.  Floats
are written with ``repr`` so a parse/serialise cycle is the identity.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import UsageError
from .gfpoly import GFPoly
from .pointset import LatticeRule

FORMAT_TAG = "eplr-rules"
FORMAT_VERSION = 1


class RuleFileError(UsageError):
    """Malformed or inconsistent rule file."""


def parse_weights(spec: str, s: int) -> tuple[float, ...]:
    """Weights gamma_1..gamma_s from "j^-2", "const:0.5" or "1,0.5,0.25"."""
    text = spec.strip()
    m = re.fullmatch(r"j\^(-?\d+(?:\.\d+)?)", text)
    if m:
        e = float(m.group(1))
        return tuple(float(j) ** e for j in range(1, s + 1))
    if text.startswith("const:"):
        try:
            v = float(text[len("const:"):])
        except ValueError:
            raise UsageError(f"bad constant weight in {spec!r}") from None
        return (v,) * s
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"cannot parse weight spec {spec!r}; use j^-2, const:0.5 or a list") from None
    if len(values) < s:
        raise UsageError(f"weight list has {len(values)} entries, need {s}")
    return values[:s]


@dataclass
class RuleEntry:
    rule: LatticeRule
    criterion: float
    bound: float


@dataclass
class RuleFile:
    base: int
    alpha: int
    weights: str
    c_alpha: float
    s: int
    entries: list[RuleEntry] = field(default_factory=list)

    def gamma(self) -> tuple[float, ...]:
        return parse_weights(self.weights, self.s)

    @property
    def m_values(self) -> list[int]:
        return [e.rule.m for e in self.entries]

    def rule_for(self, m: int) -> LatticeRule:
        for e in self.entries:
            if e.rule.m == m:
                return e.rule
        raise UsageError(f"rule file has no rule with m={m} (available: {self.m_values})")

    def validate(self) -> None:
        for e in self.entries:
            if e.rule.base != self.base or e.rule.s != self.s:
                raise RuleFileError(f"rule m={e.rule.m} disagrees with the file header")
            e.rule.validate()


def _coeffs(p: GFPoly) -> str:
    return " ".join(str(c) for c in p.coeffs) if p.coeffs else "0"


def serialize(rf: RuleFile) -> str:
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"base {rf.base}",
        f"alpha {rf.alpha}",
        f"weights {rf.weights}",
        f"c_alpha {rf.c_alpha!r}",
        f"s {rf.s}",
    ]
    for e in rf.entries:
        lines.append(f"rule {e.rule.m}")
        lines.append(f"modulus {_coeffs(e.rule.modulus)}")
        lines.extend(f"q {_coeffs(q)}" for q in e.rule.gen)
        lines.append(f"criterion {e.criterion!r}")
        lines.append(f"bound {e.bound!r}")
        lines.append("end")
    return "\n".join(lines) + "\n"


def _poly(fields: list[str], b: int, lineno: int) -> GFPoly:
    try:
        coeffs = [int(x) for x in fields]
    except ValueError:
        raise RuleFileError(f"line {lineno}: coefficients must be integers") from None
    if any(not 0 <= c < b for c in coeffs):
        raise RuleFileError(f"line {lineno}: coefficients must lie in 0..{b - 1}")
    return GFPoly(b, tuple(coeffs))


def parse(text: str, validate: bool = True) -> RuleFile:
    lines = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), 1)]
    lines = [(i, f) for i, f in lines if f and not f[0].startswith("#")]
    if not lines or lines[0][1] != [FORMAT_TAG, str(FORMAT_VERSION)]:
        raise RuleFileError(f"missing header '{FORMAT_TAG} {FORMAT_VERSION}'")
    header = {}
    pos = 1
    for key in ("base", "alpha", "weights", "c_alpha", "s"):
        if pos >= len(lines) or lines[pos][1][0] != key or len(lines[pos][1]) < 2:
            raise RuleFileError(f"expected '{key}' in the header")
        header[key] = " ".join(lines[pos][1][1:])
        pos += 1
    try:
        rf = RuleFile(
            base=int(header["base"]),
            alpha=int(header["alpha"]),
            weights=header["weights"],
            c_alpha=float(header["c_alpha"]),
            s=int(header["s"]),
        )
    except ValueError as exc:
        raise RuleFileError(f"bad header value: {exc}") from None
    b = rf.base
    while pos < len(lines):
        lineno, f = lines[pos]
        if f[0] != "rule" or len(f) != 2:
            raise RuleFileError(f"line {lineno}: expected 'rule <m>'")
        m = int(f[1])
        pos += 1
        block = {"q": []}
        while pos < len(lines) and lines[pos][1][0] != "end":
            ln, g = lines[pos]
            if g[0] == "q":
                block["q"].append(_poly(g[1:], b, ln))
            elif g[0] == "modulus":
                block["modulus"] = _poly(g[1:], b, ln)
            elif g[0] in ("criterion", "bound") and len(g) == 2:
                block[g[0]] = float(g[1])
            else:
                raise RuleFileError(f"line {ln}: unexpected '{g[0]}'")
            pos += 1
        if pos >= len(lines):
            raise RuleFileError(f"rule m={m} is not terminated by 'end'")
        pos += 1
        missing = {"modulus", "criterion", "bound"} - block.keys()
        if missing:
            raise RuleFileError(f"rule m={m} lacks {sorted(missing)}")
        rule = LatticeRule(b, m, block["modulus"], tuple(block["q"]))
        rf.entries.append(RuleEntry(rule, block["criterion"], block["bound"]))
    if validate:
        rf.validate()
    return rf


def read_rule_file(path: str, validate: bool = True) -> RuleFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), validate)


def write_rule_file(rf: RuleFile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(rf))


def format_float(x: float) -> str:
    return "undefined" if x is None or math.isnan(x) else repr(float(x))
