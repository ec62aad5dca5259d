"""Text format for problem instances.

Layout::

    TATINST <n> <d>
    A1
    <n rows of d whitespace-separated decimals>
    ...
    Y2
    <d rows of d decimals>

The eleven blocks appear in the fixed order A1 A2 A3 A4 A5 E X1 X2 X3 Y1 Y2.
Values are serialized with the shortest representation that round-trips a
double, so write(parse(text)) reproduces files this module wrote byte for
byte.  The parser is strict: wrong order, wrong counts, or non-finite values
fail with a line-numbered message.
"""

import math

import numpy as np

from .errors import ValidationError
from .instance import MATRIX_FIELDS, AttnInstance

HEADER = "TATINST"


def format_instance(inst):
    lines = [f"{HEADER} {inst.n} {inst.d}"]
    for name in MATRIX_FIELDS:
        lines.append(name)
        for row in getattr(inst, name):
            lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_instance(inst, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_instance(inst))


def _fail(lineno, msg):
    raise ValidationError(f"line {lineno}: {msg}")


def parse_instance(text):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pos = 0

    def next_line(what):
        nonlocal pos
        if pos >= len(lines):
            _fail(len(lines) + 1, f"unexpected end of file, expected {what}")
        pos += 1
        return lines[pos - 1], pos

    header, ln = next_line("header")
    parts = header.split()
    if len(parts) != 3 or parts[0] != HEADER:
        _fail(ln, f"expected header '{HEADER} <n> <d>', got {header!r}")
    try:
        n, d = int(parts[1]), int(parts[2])
    except ValueError:
        _fail(ln, f"header dimensions must be integers, got {header!r}")
    if n < 1 or d < 1:
        _fail(ln, f"header dimensions must be positive, got n={n} d={d}")

    blocks = {}
    for name in MATRIX_FIELDS:
        label, ln = next_line(f"block label {name}")
        if label != name:
            _fail(ln, f"expected block {name!r}, got {label!r}")
        rows, cols = (n, d) if name in ("A1", "A2", "A3", "A4", "A5", "E") else (d, d)
        block = np.empty((rows, cols))
        for r in range(rows):
            line, ln = next_line(f"row {r + 1} of {name}")
            vals = line.split()
            if len(vals) != cols:
                _fail(ln, f"{name} row {r + 1}: expected {cols} values, got {len(vals)}")
            for c, tok in enumerate(vals):
                try:
                    v = float(tok)
                except ValueError:
                    _fail(ln, f"{name} row {r + 1}: bad number {tok!r}")
                if not math.isfinite(v):
                    _fail(ln, f"{name} row {r + 1}: non-finite value {tok!r}")
                block[r, c] = v
        blocks[name] = block
    if pos != len(lines):
        _fail(pos + 1, f"trailing content after the {MATRIX_FIELDS[-1]} block")
    return AttnInstance(n=n, d=d, **blocks)


def read_instance(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_instance(fh.read())
