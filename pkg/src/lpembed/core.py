"""Pairwise l_p distance maps, their derivatives and the rank conditions.

Index conventions used throughout the package (all 0-based):

* pairs ``(i, j)`` with ``i < j`` are enumerated lexicographically,
  ``(0, 1), (0, 2), ..., (n-2, n-1)``;
* Jacobian columns are point-major: direction ``(l, k)`` (point ``l``,
  coordinate ``k``) sits in column ``l * N + k``.

Reports and files written by the CLI use 1-based coordinate indices.
"""

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionError,
    LinearDependenceError,
    PreconditionError,
)

PTH_POWER = "pth_power"
RAW = "raw"

DEFAULT_RANK_TOL = 1e-10
TIE_REL_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Configuration:
    """An ordered tuple of ``n`` points in R^N, measured in the l_p norm."""

    p: float
    points: np.ndarray

    def __post_init__(self):
        p = float(self.p)
        if not np.isfinite(p) or p < 1:
            raise PreconditionError(f"exponent p must satisfy 1 <= p < inf, got {self.p}")
        pts = _frozen(self.points)
        if pts.ndim != 2:
            raise DimensionError("points must be a 2-d array of shape (n, N)")
        if pts.shape[0] < 2 or pts.shape[1] < 1:
            raise DimensionError(f"need n >= 2 points in N >= 1 dimensions, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise PreconditionError("configuration entries must be finite")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def N(self):
        return self.points.shape[1]

    def with_points(self, points):
        return Configuration(self.p, points)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.points, other.points)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class UpperTriangularMatrix:
    """Values on the pairs ``i < j`` of an ``n``-point set, lexicographic order."""

    n: int
    entries: np.ndarray
    kind: str = PTH_POWER

    def __post_init__(self):
        e = _frozen(self.entries).reshape(-1)
        if self.kind not in (PTH_POWER, RAW):
            raise PreconditionError(f"unknown matrix kind {self.kind!r}")
        if self.n < 2 or e.size != comb(self.n, 2):
            raise DimensionError(f"expected C({self.n},2) = {comb(self.n, 2)} entries, got {e.size}")
        if not np.all(np.isfinite(e)):
            raise PreconditionError("matrix entries must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "entries", e)

    def __getitem__(self, ij):
        i, j = ij
        if i > j:
            i, j = j, i
        return self.entries[pair_position(self.n, i, j)]

    def to_square(self):
        """Symmetric n x n array with zero diagonal."""
        out = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        out[iu] = self.entries
        return out + out.T


def pair_indices(n):
    """Row/column index arrays of the pairs ``i < j``, lexicographic."""
    return np.triu_indices(n, 1)


def pair_list(n):
    return list(combinations(range(n), 2))


def pair_position(n, i, j):
    # position of (i, j), i < j, in lexicographic order
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def _pair_differences(points):
    i, j = pair_indices(points.shape[0])
    return points[i] - points[j]


def eval_F(config):
    """p-th powers of all pairwise l_p distances."""
    d = _pair_differences(config.points)
    return UpperTriangularMatrix(config.n, np.sum(np.abs(d) ** config.p, axis=1), PTH_POWER)


def eval_F_tilde(config):
    """Raw pairwise l_p distances."""
    d = _pair_differences(config.points)
    return UpperTriangularMatrix(config.n, np.linalg.norm(d, ord=config.p, axis=1), RAW)


def lp_norm(y, p, axis=-1):
    return np.linalg.norm(np.asarray(y, dtype=float), ord=p, axis=axis)


def jacobian_F(config):
    """Derivative of ``eval_F`` as a ``C(n,2) x (n*N)`` array.

    Entry ``(i, j), (l, k)`` is ``p |x_i^k - x_j^k|^(p-1) sgn(x_i^k - x_j^k)``
    times ``delta_il - delta_jl``, with ``sgn(0) = 0``.
    """
    if config.p <= 1:
        raise PreconditionError("jacobian_F needs p > 1; use jacobian_signs_p1 for p = 1")
    n, N, p = config.n, config.N, config.p
    d = _pair_differences(config.points)
    vals = p * np.abs(d) ** (p - 1) * np.sign(d)
    return _assemble(n, N, vals)


def _assemble(n, N, vals):
    i, j = pair_indices(n)
    rows = np.arange(len(i))
    jac = np.zeros((len(i), n * N))
    cols = np.arange(N)
    jac[rows[:, None], i[:, None] * N + cols] = vals
    jac[rows[:, None], j[:, None] * N + cols] = -vals
    return jac


def find_tie(config, rel_tol=TIE_REL_TOL):
    """First ``(i, j, k)`` with ``x_i^k`` and ``x_j^k`` tied, or None."""
    pts = config.points
    band = rel_tol * (1.0 + np.max(np.abs(pts)))
    d = np.abs(_pair_differences(pts))
    hit = np.argwhere(d <= band)
    if hit.size == 0:
        return None
    r, k = hit[0]
    i, j = pair_list(config.n)[r]
    return int(i), int(j), int(k)


def jacobian_signs_p1(config):
    """Sign-matrix derivative of the l_1 distance map, for rank diagnostics."""
    tie = find_tie(config)
    if tie is not None:
        raise DegenerateInputError(f"coordinate tie at (i, j, k) = {tie}", triple=tie)
    d = _pair_differences(config.points)
    return _assemble(config.n, config.N, np.sign(d))


@dataclass(frozen=True)
class RankReport:
    singular_values: np.ndarray
    numeric_rank: int
    full_rank: bool
    tolerance_used: float
    rows: int = field(default=0)

    @property
    def smallest_retained(self):
        """Smallest singular value counted in the rank (0.0 if none)."""
        if self.numeric_rank == 0:
            return 0.0
        return float(self.singular_values[self.numeric_rank - 1])

    @property
    def relative_gap(self):
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return 0.0
        return self.smallest_retained / float(s[0])


def rank_test(jac, tolerance=DEFAULT_RANK_TOL):
    """Numerical rank of a Jacobian relative to its largest singular value.

    ``full_rank`` means the rank equals the row count ``C(n,2)``.
    """
    if not 0 < tolerance < 1:
        raise PreconditionError("tolerance must lie in (0, 1)")
    jac = np.asarray(jac, dtype=float)
    s = np.linalg.svd(jac, compute_uv=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > tolerance * smax)) if smax > 0 else 0
    s = _frozen(s)
    return RankReport(s, rank, rank == jac.shape[0], float(tolerance), jac.shape[0])


def in_G(config, tolerance=DEFAULT_RANK_TOL):
    return rank_test(jacobian_F(config), tolerance).full_rank


def project(config, subset):
    """Configuration restricted to the coordinates in ``subset``."""
    idx = list(subset)
    return config.with_points(config.points[:, idx])


EXHAUSTIVE = "exhaustive"
GREEDY = "greedy"


def has_property_K(config, strategy=EXHAUSTIVE, tolerance=DEFAULT_RANK_TOL):
    """Search for ``n`` coordinates whose projection has a full-rank Jacobian.

    Returns ``(True, witness)`` with the witness a sorted tuple of 0-based
    coordinate indices, or ``(False, None)``.
    """
    n, N = config.n, config.N
    if N < n:
        raise DimensionError(f"Property K needs N >= n, got n={n}, N={N}")
    if strategy not in (EXHAUSTIVE, GREEDY):
        raise PreconditionError(f"unknown strategy {strategy!r}")

    tried = set()
    if strategy == GREEDY:
        order = np.argsort(-np.var(config.points, axis=0), kind="stable")
        head = tuple(sorted(int(k) for k in order[:n]))
        tried.add(head)
        if in_G(project(config, head), tolerance):
            return True, head

    for subset in combinations(range(N), n):
        if subset in tried:
            continue
        if in_G(project(config, subset), tolerance):
            return True, subset
    return False, None


def make_H_configuration(n, tail_coefficients, p):
    """Points ``x_i = e_i + sum_{j > i} c_ij e_j`` in R^n.

    ``tail_coefficients`` is either an ``n x n`` array whose strict upper
    triangle is used, or a flat array of ``C(n,2)`` values in pair order.
    """
    c = np.asarray(tail_coefficients, dtype=float)
    pts = np.eye(n)
    iu = np.triu_indices(n, 1)
    if c.ndim == 2:
        if c.shape != (n, n):
            raise DimensionError(f"tail array must be {n} x {n}")
        pts[iu] = c[iu]
    else:
        if c.size != comb(n, 2):
            raise DimensionError(f"need C({n},2) tail coefficients, got {c.size}")
        pts[iu] = c.reshape(-1)
    return Configuration(p, pts)


@dataclass(frozen=True)
class PermutationMap:
    """A permutation ``pi`` of ``range(n)``, stored as a tuple of images."""

    pi: tuple

    def __post_init__(self):
        pi = tuple(int(v) for v in self.pi)
        if sorted(pi) != list(range(len(pi))):
            raise PreconditionError(f"{self.pi} is not a permutation")
        object.__setattr__(self, "pi", pi)

    @property
    def n(self):
        return len(self.pi)

    def is_identity(self):
        return self.pi == tuple(range(self.n))

    def apply_points(self, config):
        """``A_pi``: reorder points as ``(x_pi(0), ..., x_pi(n-1))``."""
        return config.with_points(config.points[list(self.pi)])

    def _pair_source(self):
        pi = np.asarray(self.pi)
        i, j = pair_indices(self.n)
        a, b = pi[i], pi[j]
        return np.array([pair_position(self.n, lo, hi)
                         for lo, hi in zip(np.minimum(a, b), np.maximum(a, b))], dtype=int)

    def apply_pairs(self, matrix):
        """``B_pi``: entry ``(i, j)`` becomes the old entry at ``{pi(i), pi(j)}``."""
        return UpperTriangularMatrix(matrix.n, matrix.entries[self._pair_source()], matrix.kind)

    def unapply_pairs(self, matrix):
        """Inverse of ``apply_pairs``."""
        out = np.empty_like(matrix.entries)
        out[self._pair_source()] = matrix.entries
        return UpperTriangularMatrix(matrix.n, out, matrix.kind)


def in_R(config):
    """True when ``x_i^i > x_j^i`` for all ``i < j``."""
    pts = config.points
    return all(pts[i, i] > pts[j, i] for i in range(config.n) for j in range(i + 1, config.n))


def normalize_to_R(config):
    """Reorder the points so that coordinate ``j`` is maximised by point ``j``.

    Point ``pi(j)`` is the remaining point with the largest ``j``-th
    coordinate. Returns ``(PermutationMap, reordered configuration)``.
    """
    if config.N != config.n:
        raise DimensionError("normalize_to_R needs N = n")
    tie = find_tie(config)
    if tie is not None:
        raise DegenerateInputError(f"coordinate tie at (i, j, k) = {tie}", triple=tie)
    remaining = list(range(config.n))
    pi = []
    for j in range(config.n):
        best = max(remaining, key=lambda i: config.points[i, j])
        pi.append(best)
        remaining.remove(best)
    perm = PermutationMap(tuple(pi))
    return perm, perm.apply_points(config)


def gram_schmidt_rotate(config, rel_tol=1e-10):
    """Rotate linearly independent points so that ``x_i`` lies in ``span(e_0..e_i)``.

    Classical Gram-Schmidt with one re-orthogonalisation pass; the rotated
    frame has positive diagonal ``<q_i, x_i>``.
    """
    if config.p != 2:
        raise PreconditionError("gram_schmidt_rotate is an l_2 isometry; p must be 2")
    X = config.points
    n, N = X.shape
    if n > N:
        raise LinearDependenceError(f"{n} points in R^{N} cannot be linearly independent")
    Q = np.zeros((n, N))
    R = np.zeros((n, n))
    for i in range(n):
        v = X[i].copy()
        coef = Q[:i] @ v
        v -= coef @ Q[:i]
        again = Q[:i] @ v
        v -= again @ Q[:i]
        coef += again
        norm = np.linalg.norm(v)
        if norm <= rel_tol * max(np.linalg.norm(X[i]), 1e-300):
            raise LinearDependenceError(f"point {i} is in the span of the previous points")
        Q[i] = v / norm
        R[:i, i] = coef
        R[i, i] = norm
    out = np.zeros((n, N))
    out[:, :n] = R.T
    return config.with_points(out)


def square_jacobian(config):
    """Square block of the Jacobian on the directions ``(l, k)`` with ``k < l``.

    Rows are the pairs, columns the directions moving point ``l`` along
    coordinate ``k < l``, both in lexicographic order of ``(k, l)``.
    Requires ``N >= n``; only the first ``n`` coordinates are used.
    """
    n, N = config.n, config.N
    if N < n:
        raise DimensionError("square_jacobian needs N >= n")
    jac = jacobian_F(config)
    k, l = pair_indices(n)
    return jac[:, l * N + k]
