"""Monte Carlo and line-probe experiments on the full-rank set G.

Every random draw comes from a substream keyed by ``(seed, ..., trial)``,
so campaigns are reproducible and trials can run in any order.
"""

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_RANK_TOL,
    EXHAUSTIVE,
    TIE_REL_TOL,
    Configuration,
    has_property_K,
    jacobian_F,
    pair_indices,
    rank_test,
)
from .errors import DimensionError, PreconditionError

STANDARD_GAUSSIAN = "standard_gaussian"
UNIFORM_CUBE = "uniform_cube"


@dataclass(frozen=True)
class SampleCampaign:
    n: int
    N: int
    p: float
    trials: int
    seed: int
    distribution: str = STANDARD_GAUSSIAN

    def __post_init__(self):
        if self.trials < 1:
            raise PreconditionError("trials must be >= 1")
        if self.distribution not in (STANDARD_GAUSSIAN, UNIFORM_CUBE):
            raise PreconditionError(f"unknown distribution {self.distribution!r}")


def _p_key(p):
    return int(np.float64(p).view(np.uint64))


def draw_configuration(n, N, p, rng, distribution=STANDARD_GAUSSIAN):
    if distribution == STANDARD_GAUSSIAN:
        pts = rng.standard_normal((n, N))
    else:
        pts = rng.uniform(-1.0, 1.0, (n, N))
    return Configuration(p, pts)


def _map(fn, items, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(t) for t in items]


def sample_G_density(campaign, tolerance=DEFAULT_RANK_TOL, jobs=1):
    """Count how many random configurations have a full-rank Jacobian.

    Returns ``(in_G_count, report)``; the report holds the per-trial
    smallest retained singular values and their ratio to the largest.
    """
    c = campaign
    if c.N != c.n:
        raise DimensionError("density sampling is defined for N = n")

    def one(t):
        rng = np.random.default_rng([c.seed, c.n, c.N, _p_key(c.p), t])
        rep = rank_test(jacobian_F(draw_configuration(c.n, c.N, c.p, rng, c.distribution)), tolerance)
        return rep.full_rank, rep.smallest_retained, rep.relative_gap

    rows = _map(one, range(c.trials), jobs)
    full = np.array([r[0] for r in rows])
    report = {
        "n": c.n, "N": c.N, "p": c.p, "trials": c.trials, "seed": c.seed,
        "distribution": c.distribution, "tolerance": tolerance,
        "in_G_count": int(full.sum()),
        "failures": [int(t) for t in np.flatnonzero(~full)],
        "smallest_singular_values": [r[1] for r in rows],
        "relative_gaps": [r[2] for r in rows],
    }
    return int(full.sum()), report


def singular_value_histogram(report, bins=20):
    """Histogram of log10 relative gaps, as CSV rows ``(lo, hi, count)``."""
    gaps = np.log10(np.maximum(np.asarray(report["relative_gaps"]), 1e-300))
    counts, edges = np.histogram(gaps, bins=bins)
    return [{"log10_lo": float(a), "log10_hi": float(b), "count": int(k)}
            for a, b, k in zip(edges[:-1], edges[1:], counts)]


@dataclass(frozen=True, eq=False)
class LineProbe:
    endpoint_a: Configuration
    endpoint_b: Configuration
    samples: int = 10_000


@dataclass(frozen=True, eq=False)
class LineProbeResult:
    zero_bracket_count: int
    refined_zeros: list
    t: np.ndarray
    g: np.ndarray
    isolated: bool
    longest_plateau: int

    def trace_rows(self):
        return [{"t": float(a), "g": float(b)} for a, b in zip(self.t, self.g)]


def _order_signs(pts):
    band = TIE_REL_TOL * (1.0 + np.max(np.abs(pts)))
    i, j = pair_indices(pts.shape[0])
    d = pts[i] - pts[j]
    return np.where(np.abs(d) <= band, 0.0, np.sign(d))


def square_partials_batch(points, p):
    """Square partials matrices for a stack of configurations ``(T, n, N)``.

    Row ``(i, j)``, column ``(k, l)`` with ``k < l`` holds the derivative of
    the ``(i, j)`` entry in the direction moving point ``l`` along
    coordinate ``k``.
    """
    T, n, _ = points.shape
    i, j = pair_indices(n)
    k, l = pair_indices(n)
    # diff[t, row, col] = x_i^k - x_j^k
    diff = points[:, i[:, None], k[None, :]] - points[:, j[:, None], k[None, :]]
    mask = (i[:, None] == l[None, :]).astype(float) - (j[:, None] == l[None, :]).astype(float)
    return p * np.abs(diff) ** (p - 1) * np.sign(diff) * mask


def g_along(a, b, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pts = (1 - t)[:, None, None] * a.points + t[:, None, None] * b.points
    return np.linalg.det(square_partials_batch(pts, a.p))


def line_probe_determinant(probe, zero_tol=1e-12, plateau_rel=1e-8):
    """Track the square-partials determinant along a segment and locate its zeros.

    Sign changes on the grid are refined by bisection to width
    ``zero_tol`` in ``t``. A zero plateau (consecutive grid values below
    ``plateau_rel * max|g|``) longer than two cells marks the zeros as
    not isolated.
    """
    a, b = probe.endpoint_a, probe.endpoint_b
    if a.points.shape != b.points.shape or a.p != b.p:
        raise DimensionError("endpoints must share n, N and p")
    if a.N < a.n:
        raise DimensionError("line probe needs N >= n")
    if a.p <= 1:
        raise PreconditionError("line probe needs p > 1")
    sa, sb = _order_signs(a.points), _order_signs(b.points)
    bad = np.argwhere(sa != sb)
    if bad.size:
        r, k = bad[0]
        i, j = pair_indices(a.n)
        raise PreconditionError(
            f"endpoints lie in different components: order of x_{i[r]}^{k} and x_{j[r]}^{k} differs")

    t = np.linspace(0.0, 1.0, probe.samples + 1)
    g = g_along(a, b, t)
    scale = float(np.max(np.abs(g)))
    entry_scale = float(np.max(np.abs(square_partials_batch(a.points[None], a.p))))
    if abs(g[0]) <= 1e-12 * max(entry_scale, 1e-300) ** (a.n * (a.n - 1) // 2):
        raise PreconditionError("g(0) vanishes: partials at endpoint_a are not independent")

    zeros = []
    sgn = np.sign(g)
    for idx in np.flatnonzero(sgn[:-1] * sgn[1:] < 0):
        lo, hi = t[idx], t[idx + 1]
        glo = g[idx]
        while hi - lo > zero_tol:
            mid = 0.5 * (lo + hi)
            gm = g_along(a, b, mid)[0]
            if gm == 0:
                lo = hi = mid
                break
            if np.sign(gm) == np.sign(glo):
                lo, glo = mid, gm
            else:
                hi = mid
        zeros.append(0.5 * (lo + hi))
    for idx in np.flatnonzero(g[1:] == 0):
        if not any(abs(z - t[idx + 1]) <= 2 * zero_tol for z in zeros):
            zeros.append(float(t[idx + 1]))
    zeros.sort()

    small = np.abs(g) <= plateau_rel * scale
    longest = run = 0
    for s in small:
        run = run + 1 if s else 0
        longest = max(longest, run)
    return LineProbeResult(len(zeros), zeros, t, g, longest <= 2, longest)


def same_component_partner(config, rng, spread=1.0):
    """Random configuration with the same coordinate orderings as ``config``.

    Each coordinate's values are replaced by fresh sorted draws assigned in
    the original rank order; tied values stay tied.
    """
    pts = config.points
    out = np.empty_like(pts)
    for k in range(pts.shape[1]):
        col = pts[:, k]
        uniq, inv = np.unique(col, return_inverse=True)
        fresh = np.sort(rng.standard_normal(uniq.size) * spread)
        while np.any(np.diff(fresh) <= 1e-9):
            fresh = np.sort(rng.standard_normal(uniq.size) * spread)
        out[:, k] = fresh[inv]
    return config.with_points(out)


def property_k_survey(n_range, N_range, p_list, trials, seed, strategy=EXHAUSTIVE,
                      tolerance=DEFAULT_RANK_TOL, jobs=1):
    """Empirical Property K frequency per ``(n, N, p)`` cell; cells with ``N < n`` are skipped."""
    rows = []
    for n in n_range:
        for N in N_range:
            if N < n:
                continue
            for p in p_list:
                def one(t, n=n, N=N, p=p):
                    rng = np.random.default_rng([seed, n, N, _p_key(p), t])
                    ok, _ = has_property_K(draw_configuration(n, N, p, rng), strategy, tolerance)
                    return ok
                hits = sum(_map(one, range(trials), jobs))
                rows.append({"n": n, "N": N, "p": p, "trials": trials, "frequency": hits / trials})
    return rows


def to_csv(rows, fieldnames=None):
    """Render dict rows as CSV text; floats use round-trip ``repr``."""
    buf = io.StringIO()
    if not rows:
        return ""
    fieldnames = fieldnames or list(rows[0])
    w = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()
