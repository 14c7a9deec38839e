"""Realizing prescribed distance matrices near a known configuration.

``realize_distance_matrix`` is a local right inverse of ``eval_F``:
Gauss-Newton with minimum-norm least-squares steps, started at a base
configuration whose Jacobian has full row rank. ``realize_perturbation``
lifts this to raw distances for configurations in higher dimension that
have Property K, and ``reduce_dimension`` folds a long configuration into
fewer coordinates without changing any pairwise distance.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_RANK_TOL,
    PTH_POWER,
    RAW,
    Configuration,
    UpperTriangularMatrix,
    eval_F,
    eval_F_tilde,
    has_property_K,
    in_G,
    jacobian_F,
    project,
    rank_test,
)
from .errors import DimensionError, FoldingFailureError, PreconditionError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 100
    residual_tolerance: float = 1e-9
    step_damping: float = 1.0
    regularization: float = 0.0
    max_halvings: int = 30

    def __post_init__(self):
        if self.max_iterations < 1:
            raise PreconditionError("max_iterations must be >= 1")
        if not self.residual_tolerance > 0:
            raise PreconditionError("residual_tolerance must be > 0")
        if not 0 < self.step_damping <= 1:
            raise PreconditionError("step_damping must lie in (0, 1]")
        if self.regularization < 0:
            raise PreconditionError("regularization must be >= 0")


@dataclass(frozen=True)
class RealizationResult:
    configuration: Configuration
    residual_inf_norm: float
    iterations_used: int
    converged: bool
    tie_crossings: int = 0
    trace: tuple = field(default=(), repr=False)


def _min_norm_step(jac, r, reg):
    if reg > 0:
        # J^T (J J^T + reg I)^{-1} r
        gram = jac @ jac.T
        gram[np.diag_indices_from(gram)] += reg
        return jac.T @ np.linalg.solve(gram, r)
    return np.linalg.lstsq(jac, r, rcond=None)[0]


def realize_distance_matrix(base, target, opts=None, rank_tol=DEFAULT_RANK_TOL):
    """Find ``y`` near ``base`` with ``eval_F(y) == target``.

    Non-convergence is reported through ``converged=False`` together with
    the best iterate; it is not an exception.
    """
    opts = opts or SolveOptions()
    if target.kind != PTH_POWER:
        raise PreconditionError("target must hold p-th power distances")
    if target.n != base.n:
        raise DimensionError(f"target is for {target.n} points, base has {base.n}")
    if np.any(target.entries < 0):
        raise PreconditionError("negative p-th power distances cannot be realized")
    if not rank_test(jacobian_F(base), rank_tol).full_rank:
        raise PreconditionError("base configuration is not in G (Jacobian rank deficient)")
    base_f = eval_F(base).entries
    if np.any((target.entries == 0) & (base_f > 0)):
        raise PreconditionError("zero target entries are only allowed where the base distance is zero")

    p, tol = base.p, opts.residual_tolerance
    goal = target.entries
    x = base.points.copy()
    shape = x.shape

    def residual(pts):
        return goal - eval_F(base.with_points(pts)).entries

    r = residual(x)
    res = float(np.max(np.abs(r)))
    trace = [(0, res)]
    crossings = 0
    it = 0
    while res > tol and it < opts.max_iterations:
        cur = base.with_points(x)
        step = _min_norm_step(jacobian_F(cur), r, opts.regularization).reshape(shape)
        merit = float(r @ r)
        alpha = opts.step_damping
        accepted = False
        for _ in range(opts.max_halvings + 1):
            trial = x + alpha * step
            r_trial = residual(trial)
            if float(r_trial @ r_trial) < merit:
                accepted = True
                break
            alpha *= 0.5
        it += 1
        if not accepted:
            log.debug("backtracking exhausted at iteration %d, residual %.3e", it, res)
            break
        old_sign = np.sign(x[:, None, :] - x[None, :, :])
        new_sign = np.sign(trial[:, None, :] - trial[None, :, :])
        if np.any(old_sign != new_sign):
            crossings += 1
            log.info("iteration %d crossed a coordinate tie (p=%g)", it, p)
        x, r = trial, r_trial
        res = float(np.max(np.abs(r)))
        trace.append((it, res))

    return RealizationResult(
        configuration=base.with_points(x),
        residual_inf_norm=res,
        iterations_used=it,
        converged=res <= tol,
        tie_crossings=crossings,
        trace=tuple(trace),
    )


def _resolve_witness(config, witness, rank_tol):
    if witness is None:
        ok, witness = has_property_K(config, tolerance=rank_tol)
        if not ok:
            raise PreconditionError("configuration does not have Property K")
        return witness
    witness = tuple(sorted(int(k) for k in witness))
    if len(witness) != config.n or not in_G(project(config, witness), rank_tol):
        raise PreconditionError(f"coordinates {witness} are not a Property K witness")
    return witness


def realize_perturbation(base, raw_target, opts=None, witness=None, rank_tol=DEFAULT_RANK_TOL):
    """Move the witness coordinates of ``base`` so its raw distances become ``raw_target``.

    The coordinates outside the witness are left untouched. The p-th power
    increment of each pair is pushed entirely onto the witness block, so
    the block target is ``|head_i - head_j|^p + (target^p - dist^p)``.
    """
    opts = opts or SolveOptions()
    if raw_target.kind != RAW:
        raise PreconditionError("raw_target must hold raw distances")
    if raw_target.n != base.n:
        raise DimensionError(f"target is for {raw_target.n} points, base has {base.n}")
    if np.any(raw_target.entries <= 0):
        raise PreconditionError("raw target distances must be positive")
    M = _resolve_witness(base, witness, rank_tol)
    p = base.p

    dist = eval_F_tilde(base).entries
    increment = raw_target.entries ** p - dist ** p
    head = project(base, M)
    head_goal = eval_F(head).entries + increment
    if np.any(head_goal <= 0):
        raise PreconditionError("perturbation too large: witness block would need a non-positive distance")

    inner = realize_distance_matrix(head, UpperTriangularMatrix(base.n, head_goal), opts, rank_tol)
    pts = base.points.copy()
    pts[:, list(M)] = inner.configuration.points
    y = base.with_points(pts)
    res = float(np.max(np.abs(eval_F(y).entries - raw_target.entries ** p)))
    return RealizationResult(
        configuration=y,
        residual_inf_norm=res,
        iterations_used=inner.iterations_used,
        converged=inner.converged and res <= opts.residual_tolerance,
        tie_crossings=inner.tie_crossings,
        trace=inner.trace,
    )


def reduce_dimension(x, opts=None, witness=None, rank_tol=DEFAULT_RANK_TOL, isometry_rtol=1e-9):
    """Fold an ``n``-point configuration in R^d into R^N, ``n <= N <= d``.

    The witness coordinates move to the front. For ``N = n, n+1, ...`` the
    p-th power mass of the discarded coordinates beyond ``N`` is absorbed
    into the witness block by ``realize_distance_matrix``; the first ``N``
    that converges, stays in G and preserves all distances is returned.
    """
    opts = opts or SolveOptions()
    n, d, p = x.n, x.N, x.p
    M = _resolve_witness(x, witness, rank_tol)
    others = [k for k in range(d) if k not in M]
    xr = x.points[:, list(M) + others]
    full_f = eval_F(x).entries
    full_dist = eval_F_tilde(x).entries
    head = x.with_points(xr[:, :n])
    head_f = eval_F(head).entries

    best = np.inf
    for N in range(n, d + 1):
        rho = full_f - eval_F(x.with_points(xr[:, :N])).entries
        goal = head_f + rho
        result = realize_distance_matrix(head, UpperTriangularMatrix(n, goal), opts, rank_tol)
        best = min(best, result.residual_inf_norm)
        if not result.converged:
            log.debug("fold to N=%d did not converge (residual %.3e)", N, result.residual_inf_norm)
            continue
        solved = result.configuration
        if not in_G(solved, rank_tol):
            log.debug("fold to N=%d left G", N)
            continue
        y = x.with_points(np.hstack([solved.points, xr[:, n:N]]))
        rel = np.max(np.abs(eval_F_tilde(y).entries - full_dist) / full_dist)
        if rel <= isometry_rtol:
            return y
        best = min(best, float(rel))
    raise FoldingFailureError(f"no N <= {d} gave an isometric fold", residual=best)


def estimate_perturbation_radius(base, trials, seed, opts=None, initial=None, min_radius=1e-8,
                                 witness=None, rank_tol=DEFAULT_RANK_TOL):
    """Halving search for a radius whose random perturbations all realize.

    Trial ``t`` always draws the same direction from the stream
    ``(seed, t)``, so a run with more trials only adds constraints. The
    result is a certified lower bound, not the supremum; 0.0 is returned
    when no radius above ``min_radius`` passes.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    opts = opts or SolveOptions()
    M = _resolve_witness(base, witness, rank_tol)
    dist = eval_F_tilde(base).entries
    n = base.n
    dirs = [np.random.default_rng([seed, t]).uniform(-1.0, 1.0, dist.size) for t in range(trials)]
    floor = 1e-3 * float(np.min(dist))

    def all_pass(eps):
        for u in dirs:
            target = UpperTriangularMatrix(n, np.maximum(dist + eps * u, floor), RAW)
            try:
                res = realize_perturbation(base, target, opts, M, rank_tol)
            except PreconditionError:
                return False
            if not res.converged or not in_G(project(res.configuration, M), rank_tol):
                return False
        return True

    eps = 0.5 * float(np.min(dist)) if initial is None else float(initial)
    if eps <= 0:
        return 0.0
    while eps >= min_radius:
        if all_pass(eps):
            return eps
        eps *= 0.5
    return 0.0
