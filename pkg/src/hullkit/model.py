"""Problem data for quadratic minimization with indicator variables.

An instance is

    min  a'x + b'z + t/2 + offset   s.t.  t >= x'Qx,  x_i (1 - z_i) = 0,
                                          z in the support family

with Q positive semidefinite and the support family a set of admissible 0/1
patterns.  Supports are encoded as integer bitmasks (bit i has weight 2**i),
which bounds exact enumeration at 2**24 patterns.

The enumeration oracle exploits that for a fixed support S the inner
minimization has the closed form value  -a_S' Q_S^{-1} a_S / 2 + b' 1_S  with
minimizer x_S = -Q_S^{-1} a_S, so solving the instance exactly reduces to a
scan over admissible supports.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .errors import DimensionMismatch, SingularSubmatrix, TooManySupports
from .linalg import column_space_basis, eig_sym, symmetrize

MAX_ENUMERABLE = 1 << 24
_BATCH = 1 << 16

__all__ = [
    "SupportFamily",
    "MiqoInstance",
    "FactorizedInstance",
    "SolutionPoint",
    "BruteForceResult",
    "mask_to_indices",
    "indices_to_mask",
    "evaluate_objective",
    "is_feasible",
    "brute_force_solve",
    "brute_force_solve_factorized",
    "gen_best_subset",
    "gen_gmrf",
    "gen_random_psd",
    "grid_laplacian",
]


def mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def indices_to_mask(indices: Sequence[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


@dataclass(frozen=True)
class SupportFamily:
    """Admissible indicator patterns Z as one of four closed forms."""

    kind: str  # 'hypercube' | 'cardinality' | 'choose_one' | 'explicit'
    r: int | None = None
    masks: tuple[int, ...] | None = None

    @staticmethod
    def hypercube() -> "SupportFamily":
        return SupportFamily("hypercube")

    @staticmethod
    def cardinality_at_most(r: int) -> "SupportFamily":
        if r < 0:
            raise ValueError("cardinality bound must be nonnegative")
        return SupportFamily("cardinality", r=int(r))

    @staticmethod
    def choose_one() -> "SupportFamily":
        return SupportFamily("choose_one")

    @staticmethod
    def explicit(masks: Sequence[int]) -> "SupportFamily":
        mm = tuple(sorted(set(int(m) for m in masks)))
        if any(m < 0 for m in mm):
            raise ValueError("bitmasks must be nonnegative")
        return SupportFamily("explicit", masks=mm)

    def validate(self, n: int) -> None:
        if self.kind == "cardinality" and not 0 <= self.r <= n:
            raise ValueError(f"cardinality bound {self.r} outside [0, {n}]")
        if self.kind == "explicit" and any(m >> n for m in self.masks):
            raise ValueError("explicit bitmask uses indices outside [0, n)")

    def contains(self, mask: int, n: int) -> bool:
        if mask >> n:
            return False
        if self.kind == "hypercube":
            return True
        if self.kind == "cardinality":
            return bin(mask).count("1") <= self.r
        if self.kind == "choose_one":
            return bin(mask).count("1") <= 1
        return mask in self.masks

    def count(self, n: int) -> int:
        if self.kind == "hypercube":
            return 1 << n
        if self.kind == "cardinality":
            return sum(math.comb(n, s) for s in range(min(self.r, n) + 1))
        if self.kind == "choose_one":
            return n + 1
        return len(self.masks)

    def iter_index_tuples(self, n: int) -> Iterator[tuple[int, ...]]:
        """Admissible supports as sorted index tuples, smaller supports first,
        lexicographic within each cardinality class."""
        self.validate(n)
        if self.count(n) > MAX_ENUMERABLE:
            raise TooManySupports(f"{self.count(n)} supports exceed {MAX_ENUMERABLE}")
        if self.kind in ("hypercube", "cardinality", "choose_one"):
            if self.kind == "hypercube":
                rmax = n
            elif self.kind == "cardinality":
                rmax = min(self.r, n)
            else:
                rmax = min(1, n)
            for s in range(rmax + 1):
                yield from itertools.combinations(range(n), s)
        else:
            for m in sorted(self.masks, key=lambda m: (bin(m).count("1"), m)):
                yield mask_to_indices(m)

    def enumerate_masks(self, n: int) -> list[int]:
        """All admissible bitmasks in ascending numeric order."""
        return sorted(indices_to_mask(t) for t in self.iter_index_tuples(n))

    def describe(self) -> str:
        if self.kind == "hypercube":
            return "hypercube"
        if self.kind == "cardinality":
            return f"cardinality<={self.r}"
        if self.kind == "choose_one":
            return "choose-one"
        return f"explicit({len(self.masks)})"


@dataclass(frozen=True)
class MiqoInstance:
    Q: np.ndarray
    a: np.ndarray
    b: np.ndarray
    support: SupportFamily
    offset: float = 0.0

    def __post_init__(self):
        Q = symmetrize(self.Q)
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        n = Q.shape[0]
        if a.shape != (n,) or b.shape != (n,):
            raise DimensionMismatch(
                f"Q is {n}x{n} but a has shape {a.shape}, b has shape {b.shape}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("instance vectors must be finite")
        vals, _ = eig_sym(Q)
        if vals.size and vals[0] < -1e-8 * (1.0 + abs(float(vals[-1]))):
            raise ValueError(f"Q is not positive semidefinite (lambda_min={vals[0]:.3e})")
        self.support.validate(n)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class FactorizedInstance:
    """Instance given through a factor F with Q = F F'."""

    F: np.ndarray
    a: np.ndarray
    b: np.ndarray
    support: SupportFamily
    offset: float = 0.0

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        if F.ndim == 1:
            F = F.reshape(-1, 1)
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        n = F.shape[0]
        if a.shape != (n,) or b.shape != (n,):
            raise DimensionMismatch(
                f"F has {n} rows but a has shape {a.shape}, b has shape {b.shape}"
            )
        if not np.all(np.isfinite(F)):
            raise ValueError("factor must be finite")
        self.support.validate(n)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def k(self) -> int:
        return self.F.shape[1]

    def has_full_column_rank(self, tols: Tolerances = DEFAULT_TOLS) -> bool:
        return column_space_basis(self.F, tols).shape[1] == self.k

    def to_canonical(self) -> MiqoInstance:
        return MiqoInstance(self.F @ self.F.T, self.a, self.b, self.support, self.offset)


@dataclass(frozen=True)
class SolutionPoint:
    x: np.ndarray
    z: np.ndarray
    t: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        z = np.asarray(self.z, dtype=float).reshape(-1)
        if x.shape != z.shape:
            raise DimensionMismatch("x and z must have the same length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z)) and np.isfinite(self.t)):
            raise ValueError("solution point must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", float(self.t))


def evaluate_objective(inst: MiqoInstance, p: SolutionPoint) -> float:
    """a'x + b'z + x'Qx/2 + offset (the epigraph variable at its tight value)."""
    if p.x.shape != (inst.n,):
        raise DimensionMismatch(f"point has {p.x.size} coordinates, expected {inst.n}")
    return float(
        inst.a @ p.x + inst.b @ p.z + 0.5 * p.x @ inst.Q @ p.x + inst.offset
    )


def is_feasible(inst: MiqoInstance, p: SolutionPoint, tol: float = 1e-9) -> bool:
    """Integral z, admissible support, and complementarity within tol."""
    if p.x.shape != (inst.n,):
        return False
    z_round = np.round(p.z)
    if np.abs(p.z - z_round).max(initial=0.0) > tol:
        return False
    if np.any(z_round < -0.5) or np.any(z_round > 1.5):
        return False
    mask = indices_to_mask(np.flatnonzero(z_round > 0.5))
    if not inst.support.contains(mask, inst.n):
        return False
    return bool(np.all(np.abs(p.x) * (1.0 - z_round) <= tol))


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    support: tuple[int, ...]
    x_star: np.ndarray
    n_supports: int
    bounded: bool = True


def _batched_support_values(
    Q: np.ndarray, a: np.ndarray, combos: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Values -a_S'Q_S^{-1}a_S/2 and minimizers for a batch of equal-size supports."""
    QS = Q[combos[:, :, None], combos[:, None, :]]
    aS = a[combos]
    try:
        xS = np.linalg.solve(QS, -aS[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSubmatrix("singular principal submatrix in enumeration") from exc
    values = 0.5 * np.einsum("bi,bi->b", aS, xS)  # = -a_S'Q_S^{-1}a_S/2
    return values, xS


def brute_force_solve(
    inst: MiqoInstance, tols: Tolerances = DEFAULT_TOLS
) -> BruteForceResult:
    """Exact minimum by support enumeration.

    Ties in the optimal value are broken toward the smallest bitmask.  Raises
    TooManySupports past the enumeration guard and SingularSubmatrix when some
    admissible principal submatrix is not invertible.
    """
    n = inst.n
    Q, a, b = inst.Q, inst.a, inst.b
    best: tuple[float, int] | None = None
    best_x = np.zeros(n)
    n_sup = 0
    by_size: dict[int, list[tuple[int, ...]]] = {}
    for combo in inst.support.iter_index_tuples(n):
        by_size.setdefault(len(combo), []).append(combo)
    for size in sorted(by_size):
        group = by_size[size]
        n_sup += len(group)
        if size == 0:
            best = (inst.offset, 0)
            continue
        for lo in range(0, len(group), _BATCH):
            chunk = np.asarray(group[lo : lo + _BATCH], dtype=np.int64)
            values, xS = _batched_support_values(Q, a, chunk)
            values = values + b[chunk].sum(axis=1) + inst.offset
            masks = np.left_shift(np.int64(1), chunk).sum(axis=1)
            vmin = float(values.min())
            tie = np.flatnonzero(values == vmin)
            j = int(tie[np.argmin(masks[tie])])
            cand = (float(values[j]), int(masks[j]))
            if best is None or cand < best:
                best = cand
                best_x = np.zeros(n)
                best_x[chunk[j]] = xS[j]
    if best is None:
        raise ValueError("support family admits no pattern at all")
    return BruteForceResult(best[0], mask_to_indices(best[1]), best_x, n_sup)


def brute_force_solve_factorized(
    inst: FactorizedInstance, tols: Tolerances = DEFAULT_TOLS
) -> BruteForceResult:
    """Exact enumeration oracle for Q = F F', valid for rank-deficient Q.

    Per support S the inner problem is bounded iff a_S lies in col(F_S), in
    which case its value is  b'1_S - ||F_S^+ a_S||^2 / 2 + offset  with
    minimizer x_S = -(F_S^+)' F_S^+ a_S.  If some admissible support admits an
    unbounded ray the result has ``bounded=False`` and value -inf.
    """
    from .linalg import pseudoinverse

    n = inst.n
    F, a, b = inst.F, inst.a, inst.b
    best: tuple[float, int] | None = None
    best_x = np.zeros(n)
    n_sup = 0
    for combo in inst.support.iter_index_tuples(n):
        n_sup += 1
        mask = indices_to_mask(combo)
        if not combo:
            cand = (inst.offset, 0)
            x_cand = np.zeros(n)
        else:
            idx = np.asarray(combo, dtype=int)
            FS = F[idx, :]
            aS = a[idx]
            pinv = pseudoinverse(FS, tols)
            u = pinv @ aS
            if np.abs(FS @ u - aS).max(initial=0.0) > 1e-8 * (1.0 + np.abs(aS).max(initial=0.0)):
                return BruteForceResult(-np.inf, combo, np.zeros(n), n_sup, bounded=False)
            cand = (float(b[idx].sum() - 0.5 * u @ u + inst.offset), mask)
            x_cand = np.zeros(n)
            x_cand[idx] = -pinv.T @ u
        if best is None or cand < best:
            best = cand
            best_x = x_cand
    if best is None:
        raise ValueError("support family admits no pattern at all")
    return BruteForceResult(best[0], mask_to_indices(best[1]), best_x, n_sup)


def gen_best_subset(F: np.ndarray, beta: np.ndarray, k: float) -> MiqoInstance:
    """Sparse least-squares instance: minimize ||beta - F x||^2 with at most
    ceil(k * n) active columns.

    The quadratic is scaled so the instance objective equals the squared loss
    itself: Q = 2 F'F, a = -2 F'beta, offset = beta'beta.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] < 1:
        raise DimensionMismatch("F must be a matrix with at least one row")
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != F.shape[0]:
        raise DimensionMismatch(
            f"beta has {beta.shape[0]} entries, F has {F.shape[0]} rows"
        )
    if not 0.0 < k <= 1.0:
        raise ValueError("sparsity fraction k must lie in (0, 1]")
    n = F.shape[1]
    r = math.ceil(k * n)
    return MiqoInstance(
        Q=2.0 * F.T @ F,
        a=-2.0 * F.T @ beta,
        b=np.zeros(n),
        support=SupportFamily.cardinality_at_most(min(r, n)),
        offset=float(beta @ beta),
    )


def grid_laplacian(rows: int, cols: int) -> np.ndarray:
    """Combinatorial Laplacian of the rows x cols grid graph."""
    N = rows * cols
    L = np.zeros((N, N))
    for i in range(rows):
        for j in range(cols):
            u = i * cols + j
            for v in ((i + 1) * cols + j if i + 1 < rows else None,
                      i * cols + j + 1 if j + 1 < cols else None):
                if v is None:
                    continue
                L[u, u] += 1.0
                L[v, v] += 1.0
                L[u, v] -= 1.0
                L[v, u] -= 1.0
    return L


def gen_gmrf(rows: int, cols: int, sigma: float, k: float, y: np.ndarray) -> MiqoInstance:
    """Sparse denoising on a grid: minimize
    sum_i (y_i - x_i)^2 / sigma^2 + sum_{(i,j) in grid edges} (x_i - x_j)^2
    with at most ceil(k * rows * cols) nonzero coordinates.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < k <= 1.0:
        raise ValueError("sparsity fraction k must lie in (0, 1]")
    N = rows * cols
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != N:
        raise DimensionMismatch(f"y has {y.shape[0]} entries, grid has {N} nodes")
    inv_s2 = 1.0 / sigma**2
    Q = 2.0 * (inv_s2 * np.eye(N) + grid_laplacian(rows, cols))
    return MiqoInstance(
        Q=Q,
        a=-2.0 * inv_s2 * y,
        b=np.zeros(N),
        support=SupportFamily.cardinality_at_most(min(math.ceil(k * N), N)),
        offset=float(inv_s2 * y @ y),
    )


def gen_random_psd(n: int, seed: int, diag_dominance: float = 0.0) -> np.ndarray:
    """Deterministic G G' + diag_dominance * I with seeded standard normals."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    return G @ G.T + diag_dominance * np.eye(n)
