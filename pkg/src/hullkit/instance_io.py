"""Sectioned text format for problem instances.

A document carries a mandatory schema version, the dimension, the support
family, optional offset, the vectors a and b, and either the quadratic Q
(row-major, one row per line) or a factor F with its shape.  Numbers are
written with 17 significant digits so parse -> serialize is the identity on
canonical documents.
"""

from __future__ import annotations

import math
from typing import TextIO

import numpy as np

from .errors import ParseError
from .model import FactorizedInstance, MiqoInstance, SupportFamily

SCHEMA = "hullkit-instance v1"

__all__ = ["read_instance", "write_instance", "SCHEMA"]


def _num(x: float) -> str:
    return format(x, ".17g")


def _support_line(support: SupportFamily) -> str:
    if support.kind == "hypercube":
        return "support hypercube"
    if support.kind == "cardinality":
        return f"support cardinality {support.r}"
    if support.kind == "choose_one":
        return "support choose-one"
    return "support explicit " + " ".join(str(m) for m in support.masks)


def write_instance(inst: MiqoInstance | FactorizedInstance, destination) -> None:
    lines = [SCHEMA, f"n {inst.n}"]
    if inst.offset != 0.0:
        lines.append(f"offset {_num(inst.offset)}")
    lines.append(_support_line(inst.support))
    if isinstance(inst, FactorizedInstance):
        lines.append(f"F {inst.F.shape[0]} {inst.F.shape[1]}")
        for row in inst.F:
            lines.append(" ".join(_num(v) for v in row))
    else:
        lines.append("Q")
        for row in inst.Q:
            lines.append(" ".join(_num(v) for v in row))
    lines.append("a")
    lines.append(" ".join(_num(v) for v in inst.a))
    lines.append("b")
    lines.append(" ".join(_num(v) for v in inst.b))
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w") as fh:
            fh.write(text)


def _parse_floats(line: str, count: int, lineno: int) -> np.ndarray:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"expected {count} numbers, got {len(parts)}", lineno)
    try:
        vals = np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from exc
    if not np.all(np.isfinite(vals)):
        raise ParseError("non-finite value", lineno)
    return vals


def read_instance(source) -> MiqoInstance | FactorizedInstance:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCHEMA:
        raise ParseError(f"missing schema header {SCHEMA!r}", 1)
    n = None
    offset = 0.0
    support = None
    Q = None
    F = None
    a = None
    b = None
    i = 1
    while i < len(lines):
        raw = lines[i].strip()
        i += 1
        if not raw or raw.startswith("#"):
            continue
        head, *rest = raw.split()
        lineno = i
        if head == "n":
            n = int(rest[0])
        elif head == "offset":
            offset = float(rest[0])
        elif head == "support":
            kind = rest[0]
            if kind == "hypercube":
                support = SupportFamily.hypercube()
            elif kind == "cardinality":
                support = SupportFamily.cardinality_at_most(int(rest[1]))
            elif kind == "choose-one":
                support = SupportFamily.choose_one()
            elif kind == "explicit":
                support = SupportFamily.explicit([int(v) for v in rest[1:]])
            else:
                raise ParseError(f"unknown support family {kind!r}", lineno)
        elif head == "Q":
            if n is None:
                raise ParseError("n must precede Q", lineno)
            rows = []
            for r in range(n):
                if i >= len(lines):
                    raise ParseError("unexpected end of Q block", i)
                rows.append(_parse_floats(lines[i], n, i + 1))
                i += 1
            Q = np.vstack(rows)
        elif head == "F":
            rows_n, cols_k = int(rest[0]), int(rest[1])
            rows = []
            for r in range(rows_n):
                if i >= len(lines):
                    raise ParseError("unexpected end of F block", i)
                rows.append(_parse_floats(lines[i], cols_k, i + 1))
                i += 1
            F = np.vstack(rows)
        elif head in ("a", "b"):
            if n is None:
                raise ParseError(f"n must precede {head}", lineno)
            if i >= len(lines):
                raise ParseError(f"missing data line for {head}", i)
            vec = _parse_floats(lines[i], n, i + 1)
            i += 1
            if head == "a":
                a = vec
            else:
                b = vec
        else:
            raise ParseError(f"unknown section {head!r}", lineno)
    if n is None or support is None or a is None or b is None:
        raise ParseError("incomplete document (need n, support, a, b)", len(lines))
    if (Q is None) == (F is None):
        raise ParseError("document must carry exactly one of Q or F", len(lines))
    if Q is not None:
        return MiqoInstance(Q, a, b, support, offset)
    return FactorizedInstance(F, a, b, support, offset)
