"""Isometric embedding of a finite l_p configuration into a nearby norm.

A ``NormOracle`` is a norm on R^N normalised so that

    ||y||_E <= ||y||_p <= (1 + delta) ||y||_E.

For a configuration ``x`` with Property K, ``phi_map`` compares the
E-distances of ``y = Psi(d + rho)`` (``Psi`` being ``realize_perturbation``)
with the target l_p distances ``d``; a fixed point ``rho* = phi(rho*)``
gives points whose E-distances equal ``d`` exactly.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .core import RAW, DEFAULT_RANK_TOL, UpperTriangularMatrix, eval_F_tilde, pair_indices
from .errors import CapacityError, DimensionError, NonConvergenceError, PreconditionError
from .realization import SolveOptions, _resolve_witness, estimate_perturbation_radius, realize_perturbation

log = logging.getLogger(__name__)

LP_EXACT = "lp_exact"
LINEAR_DISTORTION = "linear_distortion"
WEIGHTED_P = "weighted_p"
ORACLE_KINDS = (LP_EXACT, LINEAR_DISTORTION, WEIGHTED_P)

CERTIFY_SAMPLES = 10_000
SAFETY_FACTOR = 2.0


@dataclass(frozen=True, eq=False)
class NormOracle:
    kind: str
    N: int
    p: float
    delta: float
    matrix: np.ndarray = None
    weights: np.ndarray = None
    scale: float = 1.0
    measured_slack: float = 0.0

    def evaluate(self, y):
        """E-norm of ``y`` (or of each row, for a 2-d array)."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.N:
            raise DimensionError(f"oracle is on R^{self.N}, got vectors of length {y.shape[-1]}")
        if self.kind == LP_EXACT:
            return np.linalg.norm(y, ord=self.p, axis=-1)
        if self.kind == WEIGHTED_P:
            return np.sum(self.weights * np.abs(y) ** self.p, axis=-1) ** (1.0 / self.p)
        return self.scale * np.linalg.norm(y @ self.matrix.T, ord=self.p, axis=-1)

    def to_dict(self):
        doc = {"kind": self.kind, "N": self.N, "p": self.p, "delta": self.delta}
        if self.kind == LINEAR_DISTORTION:
            doc["matrix"] = self.matrix.tolist()
            doc["scale"] = self.scale
            doc["measured_slack"] = self.measured_slack
        elif self.kind == WEIGHTED_P:
            doc["weights"] = self.weights.tolist()
        return doc


def _unit_samples(N, count, seed):
    rng = np.random.default_rng([seed, 0x5A17])
    v = rng.standard_normal((count, N))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _ratio_range(T, p, samples):
    r = np.linalg.norm(samples @ T.T, ord=p, axis=1) / np.linalg.norm(samples, ord=p, axis=1)
    lo, hi = float(r.min()), float(r.max())
    if p == 2:
        s = np.linalg.svd(T, compute_uv=False)
        lo, hi = min(lo, float(s[-1])), max(hi, float(s[0]))
    return lo, hi


def make_norm_oracle(kind, N, p, delta=None, *, matrix=None, weights=None, distortion=None,
                     seed=0, samples=CERTIFY_SAMPLES):
    """Build and certify a norm oracle on R^N.

    * ``LP_EXACT``: the l_p norm itself, ``delta = 0``.
    * ``WEIGHTED_P``: ``(sum w_k |y_k|^p)^(1/p)`` with weights in
      ``[(1+delta)^-p, 1]``; drawn from ``seed`` when not given. Certified
      analytically.
    * ``LINEAR_DISTORTION``: ``c ||T y||_p``. ``T`` defaults to
      ``I + distortion * G`` with ``G`` a seeded Gaussian matrix; if only
      ``delta`` is given the distortion is shrunk until the certificate
      fits. The ratio ``||Ty||_p / ||y||_p`` is sampled on ``samples`` unit
      directions (plus the exact singular values when ``p = 2``); the
      declared ``delta`` must be at least twice the measured slack, and
      ``c`` splits the remaining margin evenly between the two sides.
    """
    p = float(p)
    if not 1 < p < np.inf:
        raise PreconditionError("norm oracles need 1 < p < inf")
    if kind == LP_EXACT:
        return NormOracle(LP_EXACT, N, p, 0.0)

    if kind == WEIGHTED_P:
        if weights is None:
            if delta is None:
                raise PreconditionError("WEIGHTED_P needs weights or delta")
            lo = (1.0 + delta) ** -p
            weights = np.random.default_rng(seed).uniform(lo, 1.0, N)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size != N:
            raise DimensionError(f"need {N} weights, got {w.size}")
        if np.any(w > 1) or np.any(w <= 0):
            raise PreconditionError("weights must lie in (0, 1]")
        needed = float(w.min()) ** (-1.0 / p) - 1.0
        if delta is None:
            delta = needed
        elif needed > delta * (1 + 1e-12) + 1e-15:
            raise PreconditionError(f"weights need delta >= {needed:.3e}, declared {delta:.3e}")
        w.setflags(write=False)
        return NormOracle(WEIGHTED_P, N, p, float(delta), weights=w)

    if kind != LINEAR_DISTORTION:
        raise PreconditionError(f"unknown oracle kind {kind!r}")

    dirs = _unit_samples(N, samples, seed)
    if matrix is None:
        G = np.random.default_rng(seed).standard_normal((N, N))
        if distortion is None:
            if delta is None:
                raise PreconditionError("LINEAR_DISTORTION needs a matrix, a distortion or a delta")
            # slack is roughly linear in the distortion for small distortions
            unit = 1e-3
            lo, hi = _ratio_range(np.eye(N) + unit * G, p, dirs)
            distortion = 0.5 * delta / (SAFETY_FACTOR * (hi / lo - 1.0) / unit)
            while True:
                lo, hi = _ratio_range(np.eye(N) + distortion * G, p, dirs)
                if SAFETY_FACTOR * (hi / lo - 1.0) <= delta:
                    break
                distortion *= 0.8
        matrix = np.eye(N) + distortion * G
    T = np.array(matrix, dtype=float)
    if T.shape != (N, N):
        raise DimensionError(f"matrix must be {N} x {N}")
    if not np.all(np.isfinite(T)) or np.linalg.cond(T) > 1e12:
        raise PreconditionError("distortion matrix is singular")
    lo, hi = _ratio_range(T, p, dirs)
    slack = hi / lo - 1.0
    certified = SAFETY_FACTOR * slack
    if delta is None:
        delta = certified
    elif delta < certified:
        raise PreconditionError(f"measured slack needs delta >= {certified:.3e}, declared {delta:.3e}")
    margin = np.sqrt((1.0 + delta) * lo / hi)
    T.setflags(write=False)
    return NormOracle(LINEAR_DISTORTION, N, p, float(delta), matrix=T,
                      scale=1.0 / (hi * margin), measured_slack=slack)


def sandwich_violation(oracle, samples=CERTIFY_SAMPLES, seed=1):
    """Largest violation of ``|y|_E <= |y|_p <= (1+delta)|y|_E`` on random vectors.

    Non-positive means the comparison held on every sample.
    """
    rng = np.random.default_rng([seed, 0xC0DE])
    y = rng.standard_normal((samples, oracle.N)) * rng.exponential(1.0, (samples, 1))
    e = oracle.evaluate(y)
    lp = np.linalg.norm(y, ord=oracle.p, axis=1)
    return float(max(np.max((e - lp) / lp), np.max((lp - (1 + oracle.delta) * e) / lp)))


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    points: np.ndarray
    e_norm_distances: UpperTriangularMatrix
    target_distances: UpperTriangularMatrix
    max_isometry_defect: float
    source: object = None
    oracle: NormOracle = None
    rho: np.ndarray = None
    fixed_point_residual: float = 0.0
    iterations: int = 0
    epsilon_cap: float = 0.0
    phi_bound_violation: float = 0.0
    converged: bool = True
    method: str = "iteration"
    history: tuple = field(default=(), repr=False)


def _e_distances(oracle, pts):
    i, j = pair_indices(pts.shape[0])
    return oracle.evaluate(pts[i] - pts[j])


def _evaluate_phi(x, oracle, rho, opts, witness, dist, rank_tol):
    target = UpperTriangularMatrix(x.n, dist + rho, RAW)
    res = realize_perturbation(x, target, opts, witness, rank_tol)
    if not res.converged:
        raise NonConvergenceError(
            f"realization of Z(rho) failed (residual {res.residual_inf_norm:.3e})",
            best=res, residual=res.residual_inf_norm)
    pts = res.configuration.points
    return dist + rho - _e_distances(oracle, pts), pts


def phi_bounds(oracle, dist, rho):
    """The interval ``[0, delta/(1+delta) (d + rho)]`` each phi entry must lie in."""
    return np.zeros_like(dist), oracle.delta / (1.0 + oracle.delta) * (dist + rho)


def phi_map(x, oracle, rho, epsilon_cap, opts=None, witness=None, rank_tol=DEFAULT_RANK_TOL):
    """``phi(rho)_ij = |x_i - x_j|_p + rho_ij - |y_i - y_j|_E`` with ``y = Psi(d + rho)``."""
    opts = opts or SolveOptions()
    if oracle.N != x.N or oracle.p != x.p:
        raise DimensionError("oracle dimension/exponent does not match the configuration")
    rho = np.asarray(rho, dtype=float)
    slack = 1e-12 * max(1.0, epsilon_cap)
    if np.any(rho < -slack) or np.any(rho > epsilon_cap + slack):
        raise PreconditionError("rho must lie in [0, epsilon_cap]")
    witness = _resolve_witness(x, witness, rank_tol)
    dist = eval_F_tilde(x).entries
    return _evaluate_phi(x, oracle, rho, opts, witness, dist, rank_tol)[0]


def embed_into_norm(x, oracle, opts=None, max_outer=200, *, epsilon_cap=None, witness=None,
                    radius_trials=10, seed=0, damping=1.0, damping_floor=1.0 / 64,
                    rank_tol=DEFAULT_RANK_TOL):
    """Find points whose E-distances reproduce the l_p distances of ``x``.

    Runs the damped iteration ``rho <- (1 - lam) rho + lam phi(rho)`` from
    ``rho = 0``, halving ``lam`` whenever the fixed-point residual grows,
    and hands over to a Broyden root solve on ``rho - phi(rho)`` if the
    iteration stalls at the damping floor. ``epsilon_cap`` defaults to half
    of ``estimate_perturbation_radius``.

    Raises ``CapacityError`` when ``delta/(1+delta) (max d + cap) > cap``,
    and ``NonConvergenceError`` (with the best ``EmbeddingResult`` attached
    as ``.best``) when no certified fixed point is found.
    """
    opts = opts or SolveOptions()
    if oracle.N != x.N or oracle.p != x.p:
        raise DimensionError("oracle dimension/exponent does not match the configuration")
    witness = _resolve_witness(x, witness, rank_tol)
    tol = opts.residual_tolerance
    inner = replace(opts, residual_tolerance=max(1e-3 * tol, 1e-13))
    dist = eval_F_tilde(x).entries

    if epsilon_cap is None:
        epsilon_cap = 0.5 * estimate_perturbation_radius(x, radius_trials, seed, inner, witness=witness,
                                                         rank_tol=rank_tol)
    cap = float(epsilon_cap)
    required = oracle.delta / (1.0 + oracle.delta) * (float(dist.max()) + cap)
    if required > cap:
        raise CapacityError(
            f"phi can reach {required:.3e} but the perturbation cap is {cap:.3e}",
            required=required, available=cap)

    violation = -np.inf
    history = []

    def phi(rho):
        nonlocal violation
        val, pts = _evaluate_phi(x, oracle, rho, inner, witness, dist, rank_tol)
        lo, hi = phi_bounds(oracle, dist, rho)
        violation = max(violation, float(np.max(lo - val)), float(np.max(val - hi)))
        return val, pts

    rho = np.zeros_like(dist)
    val, pts = phi(rho)
    res = float(np.max(np.abs(rho - val)))
    history.append(res)
    best = (res, rho, val, pts)
    lam, it, method = damping, 0, "iteration"
    stalled = False
    while res > tol and it < max_outer:
        it += 1
        cand = np.clip((1 - lam) * rho + lam * val, 0.0, cap)
        cand_val, cand_pts = phi(cand)
        cand_res = float(np.max(np.abs(cand - cand_val)))
        if cand_res < res or lam <= damping_floor:
            if cand_res >= res:
                stalled = True
            rho, val, pts, res = cand, cand_val, cand_pts, cand_res
            history.append(res)
            if res < best[0]:
                best = (res, rho, val, pts)
            if stalled:
                break
        else:
            lam = max(lam * 0.5, damping_floor)

    if best[0] > tol:
        log.info("fixed-point iteration stalled at residual %.3e; trying Broyden", best[0])
        method = "broyden"

        def g(r):
            r = np.clip(r, 0.0, cap)
            return r - phi(r)[0]

        try:
            sol = optimize.root(g, best[1], method="broyden1", tol=0.1 * tol,
                                options={"maxiter": max_outer})
            r = np.clip(sol.x, 0.0, cap)
            v, q = phi(r)
            rr = float(np.max(np.abs(r - v)))
            history.append(rr)
            if rr < best[0]:
                best = (rr, r, v, q)
        except (NonConvergenceError, np.linalg.LinAlgError, ValueError) as exc:
            log.info("Broyden fallback failed: %s", exc)

    res, rho, val, pts = best
    e_dist = _e_distances(oracle, pts)
    result = EmbeddingResult(
        points=pts,
        e_norm_distances=UpperTriangularMatrix(x.n, e_dist, RAW),
        target_distances=UpperTriangularMatrix(x.n, dist, RAW),
        max_isometry_defect=float(np.max(np.abs(e_dist - dist))),
        source=x,
        oracle=oracle,
        rho=rho,
        fixed_point_residual=res,
        iterations=it,
        epsilon_cap=cap,
        phi_bound_violation=max(violation, 0.0),
        converged=res <= tol,
        method=method,
        history=tuple(history),
    )
    if not result.converged:
        raise NonConvergenceError(f"no fixed point within {max_outer} outer iterations "
                                  f"(best residual {res:.3e})", best=result, residual=res)
    return result


def verify_embedding(result, tolerance):
    """Recompute both distance tables from the stored points and compare."""
    pts = np.asarray(result.points, dtype=float)
    src = np.asarray(result.source.points, dtype=float)
    p = result.source.p
    worst = 0.0
    n = pts.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            target = sum(abs(a - b) ** p for a, b in zip(src[i], src[j])) ** (1.0 / p)
            got = float(result.oracle.evaluate(pts[i] - pts[j]))
            worst = max(worst, abs(got - target))
    return worst <= tolerance
