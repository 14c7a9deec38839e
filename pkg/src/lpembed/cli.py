"""Command-line front end: ``python -m lpembed <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or failed precondition,
3 solver non-convergence, 4 capacity error (the oracle distortion is
too large for the available perturbation radius).
"""

import argparse
import datetime
import logging
import sys

import numpy as np

from . import core, embedding, experiments, io, realization
from .errors import CapacityError, NonConvergenceError, PreconditionError

EXIT_OK, EXIT_INPUT, EXIT_NONCONV, EXIT_CAPACITY = 0, 2, 3, 4

log = logging.getLogger("lpembed")


def _ints(text):
    out = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _floats(text):
    return [float(v) for v in text.split(",")]


def _opts(args):
    return realization.SolveOptions(max_iterations=args.max_iter, residual_tolerance=args.tol)


_NOT_RECORDED = {"func", "report", "out", "trace", "csv", "verbose"}


def _emit(args, doc, text=None):
    doc = dict(doc)
    # output destinations do not affect results, so they stay out of the record
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_RECORDED}
    doc["parameters"] = params
    if not args.deterministic:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    body = io.dumps(doc)
    if args.report:
        io.write_atomic(args.report, body)
    else:
        sys.stdout.write(body)
    if text:
        print(text, file=sys.stderr)


def cmd_gen(args):
    rng = np.random.default_rng(args.seed)
    n, N = args.n, args.N or args.n
    if args.family == "gaussian":
        pts = rng.standard_normal((n, N))
    elif args.family == "uniform":
        pts = rng.uniform(-1, 1, (n, N))
    elif args.family == "simplex":
        pts = np.zeros((n, N))
        pts[:, :n] = np.eye(n)
    else:
        if N < n:
            raise PreconditionError("family 'h' needs N >= n")
        h = core.make_H_configuration(n, rng.uniform(-1, 1, (n, n)) * args.tail_scale, args.p).points
        pts = np.hstack([h, rng.uniform(-1, 1, (n, N - n)) * args.tail_scale])
    config = core.Configuration(args.p, pts)
    io.save_configuration(args.out, config)
    return EXIT_OK


def cmd_check_k(args):
    config = io.load_configuration(args.config)
    ok, witness = core.has_property_K(config, args.strategy, args.rank_tol)
    _emit(args, {"property_k": ok, "witness": [k + 1 for k in witness] if ok else None},
          f"property_k: {str(ok).lower()}, witness: {[k + 1 for k in witness] if ok else None}")
    return EXIT_OK


def cmd_jacobian(args):
    config = io.load_configuration(args.config)
    jac = core.jacobian_signs_p1(config) if config.p == 1 else core.jacobian_F(config)
    rep = core.rank_test(jac, args.rank_tol)
    _emit(args, {"rows": jac.shape[0], "cols": jac.shape[1], "jacobian": jac,
                 "singular_values": rep.singular_values, "numeric_rank": rep.numeric_rank,
                 "full_rank": rep.full_rank, "tolerance_used": rep.tolerance_used})
    return EXIT_OK


def _write_trace(path, trace):
    rows = [{"iteration": i, "residual": r} for i, r in trace]
    io.write_atomic(path, experiments.to_csv(rows, ["iteration", "residual"]))


def cmd_realize(args):
    base = io.load_configuration(args.config)
    target = io.load_matrix(args.target)
    if target.kind == core.RAW:
        res = realization.realize_perturbation(base, target, _opts(args))
    else:
        res = realization.realize_distance_matrix(base, target, _opts(args), args.rank_tol)
    if args.out:
        io.save_configuration(args.out, res.configuration)
    if args.trace:
        _write_trace(args.trace, res.trace)
    _emit(args, {"converged": res.converged, "residual_inf_norm": res.residual_inf_norm,
                 "iterations_used": res.iterations_used, "tie_crossings": res.tie_crossings,
                 "configuration": io.configuration_to_dict(res.configuration)})
    return EXIT_OK if res.converged else EXIT_NONCONV


def cmd_fold(args):
    x = io.load_configuration(args.config)
    y = realization.reduce_dimension(x, _opts(args), rank_tol=args.rank_tol)
    if args.out:
        io.save_configuration(args.out, y)
    dx = core.eval_F_tilde(x).entries
    dy = core.eval_F_tilde(y).entries
    _emit(args, {"N": y.N, "max_relative_distance_error": float(np.max(np.abs(dy - dx) / dx)),
                 "configuration": io.configuration_to_dict(y)})
    return EXIT_OK


def cmd_gen_norm(args):
    kind = args.kind.replace("-", "_")
    oracle = embedding.make_norm_oracle(kind, args.N, args.p, None if kind == embedding.LP_EXACT else args.delta,
                                        distortion=args.distortion, seed=args.seed)
    io.save_oracle(args.out, oracle)
    return EXIT_OK


def cmd_embed(args):
    x = io.load_configuration(args.config)
    oracle = io.load_oracle(args.norm)
    try:
        res = embedding.embed_into_norm(x, oracle, _opts(args), args.max_outer, epsilon_cap=args.epsilon_cap,
                                        radius_trials=args.trials, seed=args.seed)
    except NonConvergenceError as exc:
        if isinstance(exc.best, embedding.EmbeddingResult):
            _emit(args, io.embedding_report(exc.best))
        raise
    _emit(args, io.embedding_report(res), f"max isometry defect: {res.max_isometry_defect:.3e}")
    return EXIT_OK


def cmd_survey(args):
    if args.density:
        reports, hist = [], []
        for n in _ints(args.n):
            for p in _floats(args.p):
                campaign = experiments.SampleCampaign(n, n, p, args.trials, args.seed, args.distribution)
                count, rep = experiments.sample_G_density(campaign, args.rank_tol, args.jobs)
                reports.append(rep)
                for row in experiments.singular_value_histogram(rep):
                    hist.append({"n": n, "p": p, **row})
        if args.csv:
            io.write_atomic(args.csv, experiments.to_csv(hist))
        _emit(args, {"campaigns": reports})
        return EXIT_OK
    rows = experiments.property_k_survey(_ints(args.n), _ints(args.N or args.n), _floats(args.p),
                                         args.trials, args.seed, args.strategy, args.rank_tol, args.jobs)
    text = experiments.to_csv(rows, ["n", "N", "p", "trials", "frequency"])
    if args.csv:
        io.write_atomic(args.csv, text)
    _emit(args, {"table": rows})
    return EXIT_OK


def cmd_line_probe(args):
    a = io.load_configuration(args.config)
    if args.config_b:
        b = io.load_configuration(args.config_b)
    else:
        b = experiments.same_component_partner(a, np.random.default_rng(args.seed))
    res = experiments.line_probe_determinant(experiments.LineProbe(a, b, args.samples))
    if args.csv:
        io.write_atomic(args.csv, experiments.to_csv(res.trace_rows(), ["t", "g"]))
    _emit(args, {"zero_bracket_count": res.zero_bracket_count, "refined_zeros": res.refined_zeros,
                 "isolated": res.isolated, "longest_plateau": res.longest_plateau,
                 "g0": float(res.g[0]), "g1": float(res.g[-1]),
                 "endpoint_b": io.configuration_to_dict(b)})
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9, help="residual tolerance")
    common.add_argument("--rank-tol", type=float, default=core.DEFAULT_RANK_TOL)
    common.add_argument("--max-iter", type=int, default=100)
    common.add_argument("--trials", type=int, default=10)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--deterministic", action="store_true", help="omit the timestamp from reports")
    common.add_argument("--report", help="write the JSON report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lpembed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a configuration file")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--family", choices=["gaussian", "uniform", "h", "simplex"], default="gaussian")
    p.add_argument("--tail-scale", type=float, default=1.0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check-k", parents=[common], help="test Property K")
    p.add_argument("config")
    p.add_argument("--strategy", choices=[core.EXHAUSTIVE, core.GREEDY], default=core.EXHAUSTIVE)
    p.set_defaults(func=cmd_check_k)

    p = sub.add_parser("jacobian", parents=[common], help="Jacobian and rank report")
    p.add_argument("config")
    p.set_defaults(func=cmd_jacobian)

    p = sub.add_parser("realize", parents=[common], help="realize a distance matrix near a base")
    p.add_argument("config")
    p.add_argument("target")
    p.add_argument("-o", "--out")
    p.add_argument("--trace", help="CSV file for the (iteration, residual) trace")
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("fold", parents=[common], help="isometric dimension reduction")
    p.add_argument("config")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("gen-norm", parents=[common], help="generate a norm-oracle file")
    p.add_argument("--kind", choices=["lp_exact", "weighted_p", "linear_distortion"], required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--distortion", type=float)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_gen_norm)

    p = sub.add_parser("embed", parents=[common], help="embed a configuration into an oracle norm")
    p.add_argument("config")
    p.add_argument("norm")
    p.add_argument("--epsilon-cap", type=float)
    p.add_argument("--max-outer", type=int, default=200)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("survey", parents=[common], help="Monte Carlo Property K / density survey")
    p.add_argument("--n", default="3")
    p.add_argument("--N")
    p.add_argument("--p", default="2")
    p.add_argument("--strategy", choices=[core.EXHAUSTIVE, core.GREEDY], default=core.EXHAUSTIVE)
    p.add_argument("--density", action="store_true", help="sample G density with N = n instead")
    p.add_argument("--distribution", choices=[experiments.STANDARD_GAUSSIAN, experiments.UNIFORM_CUBE],
                   default=experiments.STANDARD_GAUSSIAN)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("line-probe", parents=[common], help="determinant along a segment")
    p.add_argument("config")
    p.add_argument("--config-b", help="second endpoint; drawn in the same component when omitted")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_line_probe)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
