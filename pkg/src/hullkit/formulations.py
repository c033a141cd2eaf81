"""Explicit optimization models over the base polytope.

The centerpiece is the mixed-integer *linear* model whose feasible (z, W)
pairs are exactly the polytope vertices: trace equalities tie diag(WQ) to z,
big-M rows force the off-diagonal rows of WQ to vanish on the active support,
and cap rows bound every W entry by lambda_max(Q^{-1}) * min{z_i, z_j}.  With
z integral those rows pin W to the padded submatrix inverse, so minimizing
-<aa', W>/2 + b'z over the model solves the indicator problem exactly.

Also here: the LP relaxation helper, the "natural" big-M bound heuristic and
the perspective diagonal extraction used by the convex baselines, and a
CPLEX-LP text reader/writer for interchange with external solvers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    ParseError,
    UnsupportedSupportFamily,
)
from .linalg import cholesky, eig_sym, solve_cholesky, symmetrize
from .model import MiqoInstance, SupportFamily, mask_to_indices

__all__ = [
    "Variable",
    "LinearRow",
    "LinearModel",
    "BigMData",
    "big_m_constants",
    "build_milo",
    "milo_variable_layout",
    "milo_vertex_solution",
    "relax",
    "natural_bound_heuristic",
    "perspective_delta",
    "write_lp_file",
    "read_lp_file",
    "write_lp_string",
    "read_lp_string",
]

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    integer: bool = False


@dataclass
class LinearRow:
    coeffs: dict[int, float]
    relation: str  # '<=', '=', '>='
    rhs: float
    name: str


@dataclass
class LinearModel:
    """Minimization model: objective' x + constant over linear rows and bounds."""

    variables: list[Variable] = field(default_factory=list)
    rows: list[LinearRow] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    constant: float = 0.0
    _names: dict[str, int] = field(default_factory=dict, repr=False)

    def add_variable(self, name, lb=0.0, ub=math.inf, integer=False) -> int:
        if not _NAME_RE.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if lb > ub:
            raise ValueError(f"variable {name}: lower bound {lb} exceeds upper {ub}")
        self.variables.append(Variable(name, float(lb), float(ub), bool(integer)))
        self._names[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_row(self, coeffs: dict[int, float], relation: str, rhs: float,
                name: str = "") -> int:
        if relation not in ("<=", "=", ">="):
            raise ValueError(f"bad relation {relation!r}")
        nv = len(self.variables)
        clean = {}
        for j, c in coeffs.items():
            if not 0 <= j < nv:
                raise ValueError(f"row references undeclared variable index {j}")
            if c != 0.0:
                clean[int(j)] = clean.get(int(j), 0.0) + float(c)
        self.rows.append(LinearRow(clean, relation, float(rhs),
                                   name or f"c{len(self.rows)}"))
        return len(self.rows) - 1

    def set_objective(self, coeffs: dict[int, float], constant: float = 0.0) -> None:
        nv = len(self.variables)
        self.objective = {int(j): float(c) for j, c in coeffs.items()
                          if 0 <= j < nv and c != 0.0}
        if any(not 0 <= j < nv for j in coeffs):
            raise ValueError("objective references undeclared variable")
        self.constant = float(constant)

    def var_index(self, name: str) -> int:
        return self._names[name]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, v in self.objective.items():
            c[j] = v
        return c

    def lower_bounds(self) -> np.ndarray:
        return np.array([v.lb for v in self.variables])

    def upper_bounds(self) -> np.ndarray:
        return np.array([v.ub for v in self.variables])

    def integer_indices(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.integer]

    def copy(self) -> "LinearModel":
        m = LinearModel()
        m.variables = [replace(v) for v in self.variables]
        m.rows = [LinearRow(dict(r.coeffs), r.relation, r.rhs, r.name)
                  for r in self.rows]
        m.objective = dict(self.objective)
        m.constant = self.constant
        m._names = dict(self._names)
        return m


@dataclass(frozen=True)
class BigMData:
    lambda_max_inv: float  # largest eigenvalue of Q^{-1}
    max_row_norm: float    # largest Euclidean row norm of Q
    M: float


def big_m_constants(Q: np.ndarray, tols: Tolerances = DEFAULT_TOLS) -> BigMData:
    """lambda_max(Q^{-1}) and the row-norm product bounding off-diagonals of W Q."""
    Q = symmetrize(Q)
    vals, _ = eig_sym(Q, tols)
    if vals[0] <= tols.rank_floor * max(1.0, abs(float(vals[-1]))):
        raise NotPositiveDefinite(f"lambda_min(Q) = {vals[0]:.3e}")
    lam_inv = 1.0 / float(vals[0])
    row_norm = float(np.sqrt((Q**2).sum(axis=1)).max())
    return BigMData(lam_inv, row_norm, lam_inv * row_norm)


def _w_name(i: int, j: int) -> str:
    return f"w_{i}_{j}"


def milo_variable_layout(n: int) -> tuple[list[str], list[tuple[int, int]]]:
    """Variable order of the explicit model: z_0..z_{n-1} then w_i_j, i <= j."""
    names = [f"z_{i}" for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    names += [_w_name(i, j) for i, j in pairs]
    return names, pairs


def build_milo(inst: MiqoInstance, tols: Tolerances = DEFAULT_TOLS) -> LinearModel:
    """The explicit mixed-integer linear formulation over polytope vertices.

    Only the upper triangle of W is materialized; every occurrence of W_{ji}
    maps onto the same variable as W_{ij}.  Support families beyond the three
    closed forms are encoded with no-good rows when the complement is small.
    """
    n = inst.n
    Q = inst.Q
    data = big_m_constants(Q, tols)
    lam, M = data.lambda_max_inv, data.M
    m = LinearModel()
    for i in range(n):
        m.add_variable(f"z_{i}", 0.0, 1.0, integer=True)
    widx = {}
    for i in range(n):
        for j in range(i, n):
            # free variables; the cap rows below enforce |W_ij| <= lam min z
            widx[(i, j)] = m.add_variable(_w_name(i, j), -math.inf, math.inf)

    def w(i, j):
        return widx[(min(i, j), max(i, j))]

    # trace equalities: sum_k Q_ik W_ki = z_i
    for i in range(n):
        coeffs: dict[int, float] = {}
        for k in range(n):
            if Q[i, k] != 0.0:
                jj = w(k, i)
                coeffs[jj] = coeffs.get(jj, 0.0) + Q[i, k]
        coeffs[i] = coeffs.get(i, 0.0) - 1.0
        m.add_row(coeffs, "=", 0.0, f"trace_{i}")

    # big-M rows: |sum_k Q_ik W_kj| <= M (1 - z_i) for i != j
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            expr: dict[int, float] = {}
            for k in range(n):
                if Q[i, k] != 0.0:
                    jj = w(k, j)
                    expr[jj] = expr.get(jj, 0.0) + Q[i, k]
            up = dict(expr)
            up[i] = up.get(i, 0.0) + M
            m.add_row(up, "<=", M, f"offdiag_up_{i}_{j}")
            lo = dict(expr)
            lo[i] = lo.get(i, 0.0) - M
            m.add_row(lo, ">=", -M, f"offdiag_lo_{i}_{j}")

    # cap rows: |W_ij| <= lam * min{z_i, z_j}
    for i in range(n):
        for j in range(i, n):
            jj = widx[(i, j)]
            if i == j:
                m.add_row({jj: 1.0, i: -lam}, "<=", 0.0, f"cap_up_{i}_{j}")
                m.add_row({jj: -1.0, i: -lam}, "<=", 0.0, f"cap_lo_{i}_{j}")
            else:
                m.add_row({jj: 1.0, i: -lam}, "<=", 0.0, f"cap_up_{i}_{j}_i")
                m.add_row({jj: 1.0, j: -lam}, "<=", 0.0, f"cap_up_{i}_{j}_j")
                m.add_row({jj: -1.0, i: -lam}, "<=", 0.0, f"cap_lo_{i}_{j}_i")
                m.add_row({jj: -1.0, j: -lam}, "<=", 0.0, f"cap_lo_{i}_{j}_j")

    _append_support_rows(m, inst.support, n)

    obj: dict[int, float] = {}
    for i in range(n):
        if inst.b[i] != 0.0:
            obj[i] = inst.b[i]
    for i in range(n):
        for j in range(i, n):
            coef = -0.5 * inst.a[i] ** 2 if i == j else -inst.a[i] * inst.a[j]
            if coef != 0.0:
                obj[widx[(i, j)]] = coef
    m.set_objective(obj, inst.offset)
    return m


def _append_support_rows(m: LinearModel, support: SupportFamily, n: int) -> None:
    if support.kind == "hypercube":
        return
    if support.kind == "cardinality":
        m.add_row({i: 1.0 for i in range(n)}, "<=", float(support.r), "card")
        return
    if support.kind == "choose_one":
        m.add_row({i: 1.0 for i in range(n)}, "<=", 1.0, "choose1")
        return
    # explicit list: forbid each non-member pattern with a no-good row
    members = set(support.masks)
    complement = [mm for mm in range(1 << n) if mm not in members]
    if len(complement) > 64:
        raise UnsupportedSupportFamily(
            f"explicit family complement has {len(complement)} patterns (limit 64)"
        )
    for t, mm in enumerate(complement):
        ones = mask_to_indices(mm)
        coeffs = {i: (1.0 if i in ones else -1.0) for i in range(n)}
        m.add_row(coeffs, "<=", float(len(ones) - 1), f"nogood_{t}")


def milo_vertex_solution(inst: MiqoInstance, support: tuple[int, ...],
                         tols: Tolerances = DEFAULT_TOLS) -> tuple[np.ndarray, float]:
    """The model point (z, vec W) at a given support, with its objective value."""
    from .linalg import padded_submatrix_inverse

    n = inst.n
    W = padded_submatrix_inverse(inst.Q, support, tols)
    z = np.zeros(n)
    z[list(support)] = 1.0
    _, pairs = milo_variable_layout(n)
    x = np.concatenate([z, [W[i, j] for i, j in pairs]])
    value = float(-0.5 * inst.a @ W @ inst.a + inst.b @ z + inst.offset)
    return x, value


def milo_incumbent_hook(inst: MiqoInstance, tols: Tolerances = DEFAULT_TOLS):
    """Rounding heuristic for branch and bound on the explicit model.

    Maps a node's fractional point to an admissible support (largest z first)
    and completes it to the exact vertex, whose objective value is feasible
    by construction.  Returns None for families without a cheap rounding.
    """
    n = inst.n
    kind = inst.support.kind

    def hook(x: np.ndarray):
        z = np.clip(x[:n], 0.0, 1.0)
        order = sorted(range(n), key=lambda i: (-z[i], i))
        if kind == "hypercube":
            support = tuple(sorted(i for i in range(n) if z[i] > 0.5))
        elif kind == "cardinality":
            support = tuple(sorted(order[: inst.support.r]))
        elif kind == "choose_one":
            support = (order[0],) if z[order[0]] > 0.5 else ()
        else:
            return None
        point, value = milo_vertex_solution(inst, support, tols)
        return value, point

    return hook


def relax(model: LinearModel) -> LinearModel:
    """Same model with integrality dropped; declared bounds stay in force."""
    m = model.copy()
    for v in m.variables:
        v.integer = False
    return m


def natural_bound_heuristic(inst: MiqoInstance, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Uniform per-coordinate bound 5 * ||x*||_inf from the unconstrained minimizer.

    Not guaranteed valid for the integer problem; degenerate (all-zero) when
    a = 0, which callers should flag rather than silently solve.
    """
    try:
        L = cholesky(inst.Q, tols)
    except NotPositiveDefinite:
        raise
    x_star = solve_cholesky(L, -inst.a)
    return np.full(inst.n, 5.0 * float(np.abs(x_star).max(initial=0.0)))


def perspective_delta(Q: np.ndarray, tols: Tolerances = DEFAULT_TOLS) -> float:
    """Smallest eigenvalue of Q, floored at zero (diagonal extraction weight)."""
    vals, _ = eig_sym(symmetrize(Q), tols)
    return max(float(vals[0]), 0.0)


# ---------------------------------------------------------------------------
# CPLEX-LP text format (subset: minimize, <=/=/>= rows, bounds, binaries,
# generals).  The writer emits every variable in the Bounds section in
# declaration order, so parse -> serialize is the identity on its own output.
# ---------------------------------------------------------------------------


def _num(x: float) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return format(x, ".17g")


def _terms(coeffs: dict[int, float], names: list[str]) -> str:
    parts = []
    for j in sorted(coeffs):
        c = coeffs[j]
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {_num(abs(c))} {names[j]}")
    if not parts:
        return ""
    return " ".join(parts)


def write_lp_string(model: LinearModel) -> str:
    names = [v.name for v in model.variables]
    out = ["Minimize"]
    pieces = [" obj:"]
    obj = _terms(model.objective, names)
    if obj:
        pieces.append(obj)
    if model.constant != 0.0 or not obj:
        pieces.append(f"+ {_num(model.constant)}")
    out.append(" ".join(pieces))
    out.append("Subject To")
    for r in model.rows:
        rel = r.relation
        out.append(f" {r.name}: {_terms(r.coeffs, names)} {rel} {_num(r.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(f" {v.name} free")
        elif v.lb == v.ub:
            out.append(f" {v.name} = {_num(v.lb)}")
        else:
            out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    binaries = [v.name for v in model.variables
                if v.integer and v.lb == 0.0 and v.ub == 1.0]
    generals = [v.name for v in model.variables
                if v.integer and not (v.lb == 0.0 and v.ub == 1.0)]
    if binaries:
        out.append("Binaries")
        out.append(" " + " ".join(binaries))
    if generals:
        out.append("Generals")
        out.append(" " + " ".join(generals))
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp_file(model: LinearModel, destination) -> None:
    text = write_lp_string(model)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w") as fh:
            fh.write(text)


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf(?:inity)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<rel><=|>=|=<|=>|=|<|>)"
    r"|(?P<sign>[+-])"
    r"|(?P<colon>:)"
    r")"
)

_SECTION_WORDS = {
    "minimize": "objective",
    "min": "objective",
    "maximize": "reject",
    "max": "reject",
    "subject": "rows",
    "st": "rows",
    "bounds": "bounds",
    "bound": "bounds",
    "binaries": "binaries",
    "binary": "binaries",
    "bin": "binaries",
    "generals": "generals",
    "general": "generals",
    "gen": "generals",
    "end": "end",
}


def _tokenize(line: str, lineno: int):
    pos = 0
    out = []
    stripped = line.split("\\", 1)[0]  # backslash starts a comment
    while pos < len(stripped):
        mm = _TOKEN_RE.match(stripped, pos)
        if not mm or mm.end() == pos:
            if stripped[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {stripped[pos]!r}", lineno, pos + 1)
        for kind in ("num", "name", "rel", "sign", "colon"):
            if mm.group(kind) is not None:
                out.append((kind, mm.group(kind), pos + 1))
                break
        pos = mm.end()
    return out


def _parse_float(text: str) -> float:
    t = text.lower()
    if t in ("inf", "infinity", "+inf", "+infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(text)


class _LpReader:
    def __init__(self):
        self.var_order: list[str] = []
        self.bounds_order: list[str] = []
        self.seen: set[str] = set()
        self.bounds: dict[str, tuple[float, float]] = {}
        self.explicit_bounds: set[str] = set()
        self.integers: set[str] = set()
        self.binaries: set[str] = set()
        self.objective: dict[str, float] = {}
        self.constant = 0.0
        self.rows: list[tuple[str, dict[str, float], str, float]] = []

    def note_var(self, name: str) -> None:
        if name not in self.seen:
            self.seen.add(name)
            self.var_order.append(name)

    def parse_expr(self, tokens, lineno, allow_relation=False):
        """Linear expression; returns (coeffs, constant, rest-after-relation)."""
        coeffs: dict[str, float] = {}
        const = 0.0
        sign = 1.0
        coef: float | None = None
        i = 0
        while i < len(tokens):
            kind, text, col = tokens[i]
            if kind == "rel" and allow_relation:
                break
            if kind == "sign":
                if coef is not None:
                    const += sign * coef
                    coef = None
                sign = -1.0 if text == "-" else 1.0
            elif kind == "num":
                if coef is not None:
                    const += sign * coef
                    sign = 1.0
                coef = _parse_float(text)
            elif kind == "name":
                c = sign * (coef if coef is not None else 1.0)
                coeffs[text] = coeffs.get(text, 0.0) + c
                self.note_var(text)
                sign, coef = 1.0, None
            else:
                raise ParseError(f"unexpected token {text!r}", lineno, col)
            i += 1
        if coef is not None:
            const += sign * coef
        return coeffs, const, tokens[i:]


def read_lp_string(text: str) -> LinearModel:
    rd = _LpReader()
    section = None
    pending: list[tuple[int, list]] = []

    def flush_row():
        if not pending:
            return
        lineno = pending[0][0]
        tokens = [t for _, toks in pending for t in toks]
        pending.clear()
        name = ""
        if len(tokens) >= 2 and tokens[0][0] == "name" and tokens[1][0] == "colon":
            name = tokens[0][1]
            tokens = tokens[2:]
        if section == "objective":
            coeffs, const, rest = rd.parse_expr(tokens, lineno)
            if rest:
                raise ParseError("trailing tokens in objective", lineno, rest[0][2])
            rd.objective = coeffs
            rd.constant = const
            return
        coeffs, const, rest = rd.parse_expr(tokens, lineno, allow_relation=True)
        if not rest:
            raise ParseError("constraint missing relation", lineno, 1)
        rel = rest[0][1]
        rel = {"=<": "<=", "=>": ">=", "<": "<=", ">": ">="}.get(rel, rel)
        rhs_coeffs, rhs_const, tail = rd.parse_expr(rest[1:], lineno)
        if rhs_coeffs or tail:
            raise ParseError("right-hand side must be a single number", lineno, 1)
        rd.rows.append((name, coeffs, rel, rhs_const - const))

    lines = text.splitlines()
    if not any(ln.split("\\", 1)[0].strip() for ln in lines):
        raise ParseError("empty model file", 1, 1)
    for lineno, raw in enumerate(lines, start=1):
        tokens = _tokenize(raw, lineno)
        if not tokens:
            continue
        # section keyword?
        first = tokens[0]
        key = first[1].lower() if first[0] == "name" else None
        if key in _SECTION_WORDS and (len(tokens) == 1 or key in ("subject", "end")):
            kind = _SECTION_WORDS[key]
            if kind == "reject":
                raise ParseError("only minimization models are supported",
                                 lineno, first[2])
            flush_row()
            section = kind
            if kind == "end":
                break
            continue
        if section is None:
            raise ParseError("content before the objective section", lineno, first[2])
        if section == "objective" or section == "rows":
            starts_new = (len(tokens) >= 2 and tokens[0][0] == "name"
                          and tokens[1][0] == "colon")
            if starts_new:
                flush_row()
            pending.append((lineno, tokens))
            if section == "objective":
                continue
        elif section == "bounds":
            _parse_bounds_line(rd, tokens, lineno)
        elif section in ("binaries", "generals"):
            for kind, val, col in tokens:
                if kind != "name":
                    raise ParseError(f"expected variable name, got {val!r}",
                                     lineno, col)
                rd.note_var(val)
                rd.integers.add(val)
                if section == "binaries":
                    rd.binaries.add(val)
    flush_row()

    # Final variable order: bounds-section order first, then other appearances.
    order = list(rd.bounds_order)
    for name in rd.var_order:
        if name not in rd.bounds_order:
            order.append(name)
    model = LinearModel()
    for name in order:
        lb, ub = rd.bounds.get(name, (0.0, math.inf))
        if name in rd.binaries and name not in rd.explicit_bounds:
            lb, ub = 0.0, 1.0
        model.add_variable(name, lb, ub, integer=name in rd.integers)
    for name, coeffs, rel, rhs in rd.rows:
        model.add_row({model.var_index(v): c for v, c in coeffs.items()},
                      rel, rhs, name)
    model.set_objective({model.var_index(v): c for v, c in rd.objective.items()},
                        rd.constant)
    return model


def _parse_bounds_line(rd: _LpReader, tokens, lineno: int) -> None:
    kinds = [t[0] for t in tokens]
    texts = [t[1] for t in tokens]

    def reg(name, lb, ub):
        rd.note_var(name)
        if name not in rd.bounds:
            rd.bounds_order.append(name)
        old = rd.bounds.get(name, (0.0, math.inf))
        rd.bounds[name] = (lb if lb is not None else old[0],
                           ub if ub is not None else old[1])
        rd.explicit_bounds.add(name)

    # name free
    if kinds == ["name", "name"] and texts[1].lower() == "free":
        reg(texts[0], -math.inf, math.inf)
        return
    # num rel name rel num
    if kinds == ["num", "rel", "name", "rel", "num"]:
        if texts[1] not in ("<=", "<") or texts[3] not in ("<=", "<"):
            raise ParseError("malformed double bound", lineno, tokens[1][2])
        reg(texts[2], _parse_float(texts[0]), _parse_float(texts[4]))
        return
    # name rel num
    if kinds == ["name", "rel", "num"]:
        val = _parse_float(texts[2])
        if texts[1] in ("<=", "<"):
            reg(texts[0], None, val)
        elif texts[1] in (">=", ">"):
            reg(texts[0], val, None)
        else:
            reg(texts[0], val, val)
        return
    # num rel name
    if kinds == ["num", "rel", "name"]:
        val = _parse_float(texts[0])
        if texts[1] in ("<=", "<"):
            reg(texts[2], val, None)
        elif texts[1] in (">=", ">"):
            reg(texts[2], None, val)
        else:
            reg(texts[2], val, val)
        return
    raise ParseError("malformed bounds line", lineno, tokens[0][2])


def read_lp_file(source) -> LinearModel:
    if hasattr(source, "read"):
        return read_lp_string(source.read())
    with open(source) as fh:
        return read_lp_string(fh.read())
