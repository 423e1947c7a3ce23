"""Command line front end: solver orchestration, certification checks,
and rate fitting with machine-readable outputs.

Exit codes: 0 on success, 1 for configuration problems, 2 for numerical
failures inside a run, 3 when a certification check reports violations.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import certify, trace
from .errors import InvalidInputError, InvalidSpecError, NumericalFailureError, ToolkitError
from .objective import PROBLEM_KINDS, ProblemSpec
from .solvers import SolverConfig, run_solver

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VIOLATIONS = 0, 1, 2, 3

# usable out of the box for certification smoke checks
_DEFAULT_PARAMS = {
    "quadratic": {"spectrum": [1.0]},
    "least_squares": {"rows": 20, "cols": 20,
                      "singular_values": [1.0 / i for i in range(1, 21)]},
    "power": {"p": 4.0, "dim": 1, "ball_radius": 4.0},
    "abs_value": {},
    "radon": {"grid_n": 8, "num_angles": 6, "rays_per_angle": 12, "phantom": "blocks"},
}

_DEFAULT_COMPARE_RUNS = (
    {"method": "ahb", "mu0": 0.96, "beta_cap": 1.0},
    {"method": "alrhb", "alrhb_beta": 0.96},
    {"method": "nesterov", "nesterov_nu": 3.0},
    {"method": "gd", "gd_mu": 1.96},
)

_SOLVER_FLAG_FIELDS = ("method", "mu0", "beta_cap", "gd_mu", "nesterov_nu",
                       "alrhb_beta", "max_iters", "gap_tol", "record_every")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; config errors must be 1
    def error(self, message):
        raise _UsageError(message)


def _json_flag(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not valid JSON: {exc}") from exc


def _add_common(parser):
    parser.add_argument("--config", help="JSON experiment config file")
    parser.add_argument("--out", help="output directory (default: out_dir from "
                                      "the config, else the working directory)")
    parser.add_argument("--seed", type=int, default=None,
                        help="fallback seed for problem construction and sampling")


def _add_problem_flags(parser):
    parser.add_argument("--problem", choices=PROBLEM_KINDS, default=None,
                        help="built-in problem kind")
    parser.add_argument("--params", type=_json_flag, default=None,
                        help="JSON object of factory parameters")
    parser.add_argument("--problem-seed", type=int, default=None)


def _add_solver_flags(parser):
    parser.add_argument("--method", choices=("ahb", "gd", "nesterov", "alrhb"))
    parser.add_argument("--mu0", type=float)
    parser.add_argument("--beta-cap", dest="beta_cap", type=float)
    parser.add_argument("--gd-mu", dest="gd_mu", type=float)
    parser.add_argument("--nesterov-nu", dest="nesterov_nu", type=float)
    parser.add_argument("--alrhb-beta", dest="alrhb_beta", type=float)
    parser.add_argument("--max-iters", dest="max_iters", type=int)
    parser.add_argument("--gap-tol", dest="gap_tol", type=float)
    parser.add_argument("--record-every", dest="record_every", type=int)
    parser.add_argument("--x0", default=None,
                        help='"zeros" or JSON like {"seed": 1, "norm": 10}')


def _load_config_file(path):
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise InvalidSpecError("experiment config must be a JSON object")
    return data


def _problem_from(args, file_data):
    spec_data = dict(file_data.get("problem") or {})
    if args.problem is not None:
        if spec_data.get("kind") not in (None, args.problem):
            spec_data.pop("params", None)
        spec_data["kind"] = args.problem
    if "kind" not in spec_data:
        raise InvalidSpecError("no problem given; pass --problem or a config file")
    if args.params is not None:
        spec_data["params"] = args.params
    if "params" not in spec_data:
        spec_data["params"] = dict(_DEFAULT_PARAMS[spec_data["kind"]])
    if args.problem_seed is not None:
        spec_data["seed"] = args.problem_seed
    elif "seed" not in spec_data and args.seed is not None:
        spec_data["seed"] = args.seed
    return ProblemSpec.from_dict(spec_data)


def _solver_overrides(args):
    return {f: getattr(args, f) for f in _SOLVER_FLAG_FIELDS
            if getattr(args, f, None) is not None}


def _resolve_x0(x0_spec, dim, fallback_seed):
    if x0_spec in (None, "zeros"):
        return np.zeros(dim), None
    if isinstance(x0_spec, str):
        x0_spec = json.loads(x0_spec)
    if not isinstance(x0_spec, dict):
        raise InvalidSpecError('x0 must be "zeros" or an object with seed and norm')
    kind = x0_spec.get("kind", "seeded_random")
    if kind != "seeded_random":
        raise InvalidSpecError(f"unknown x0 kind '{kind}'")
    seed = int(x0_spec.get("seed", 0 if fallback_seed is None else fallback_seed))
    norm = float(x0_spec.get("norm", 1.0))
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(dim)
    direction *= norm / np.linalg.norm(direction)
    return direction, seed


def _out_dir(args, file_data):
    out = args.out or file_data.get("out_dir") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _execute_run(spec, obj, cfg, x0_spec, out_dir, fallback_seed, name):
    x0, x0_seed = _resolve_x0(x0_spec, obj.dim, fallback_seed)
    run_trace = run_solver(obj, cfg, x0, problem_spec=spec, x0_seed=x0_seed)
    csv_path = os.path.join(out_dir, f"{name}.csv")
    trace.write_csv(run_trace, csv_path)
    summary = trace.summarize(run_trace)
    _write_json(os.path.join(out_dir, f"{name}.summary.json"), summary)
    print(csv_path)
    return summary


def cmd_solve(args) -> int:
    file_data = _load_config_file(args.config) if args.config else {}
    spec = _problem_from(args, file_data)
    runs = file_data.get("runs") or [{}]
    base = dict(runs[0])
    base.pop("problem", None)
    base.update(_solver_overrides(args))
    cfg = SolverConfig.from_json_dict(base)
    obj = spec.build()
    out_dir = _out_dir(args, file_data)
    x0_spec = args.x0 if args.x0 is not None else file_data.get("x0")
    _execute_run(spec, obj, cfg, x0_spec, out_dir, args.seed, cfg.method)
    return EXIT_OK


def cmd_compare(args) -> int:
    file_data = _load_config_file(args.config) if args.config else {}
    spec = _problem_from(args, file_data)
    run_datas = file_data.get("runs") or [dict(r) for r in _DEFAULT_COMPARE_RUNS]
    overrides = _solver_overrides(args)
    overrides.pop("method", None)
    configs = []
    for run_data in run_datas:
        run_data = dict(run_data)
        embedded = run_data.pop("problem", None)
        if embedded is not None and ProblemSpec.from_dict(embedded) != spec:
            raise InvalidSpecError("runs disagree on the problem spec; "
                                   "compare needs one shared problem")
        run_data.update(overrides)
        configs.append(SolverConfig.from_json_dict(run_data))
    obj = spec.build()
    out_dir = _out_dir(args, file_data)
    x0_spec = args.x0 if args.x0 is not None else file_data.get("x0")
    names, seen = [], {}
    for cfg in configs:
        count = seen.get(cfg.method, 0) + 1
        seen[cfg.method] = count
        names.append(cfg.method if count == 1 else f"{cfg.method}-{count}")
    summaries = {}
    for cfg, name in zip(configs, names):
        summaries[name] = _execute_run(spec, obj, cfg, x0_spec, out_dir,
                                       args.seed, name)
    compare_path = os.path.join(out_dir, "compare.json")
    _write_json(compare_path, summaries)
    print(compare_path)
    return EXIT_OK


def _parse_point(text, dim):
    if text in (None, "zeros"):
        return np.zeros(dim)
    value = json.loads(text)
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1 or arr.size != dim:
        raise InvalidInputError(f"point must have dimension {dim}")
    return arr


def _finite_eta(args, notes):
    if math.isinf(args.eta):
        # the slice sampler needs a finite band; substitute a huge one
        notes.append("eta was infinite; used surrogate 1e300")
        return 1e300
    return args.eta


def _emit_report(report) -> int:
    print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    return EXIT_OK if report.violations == 0 else EXIT_VIOLATIONS


def cmd_certify(args) -> int:
    if args.certify_cmd == "rate":
        # the recursion check is self-contained; no problem needed
        report = certify.verify_recursive_rate(args.delta0, args.c, args.theta,
                                               args.steps)
        return _emit_report(report)
    spec = _problem_from(args, {})
    obj = spec.build()
    seed = args.seed if args.seed is not None else 0
    notes = []
    if args.certify_cmd == "kl":
        phi = certify.HolderFunction(c=args.phi_c, alpha=args.phi_alpha)
        report = certify.check_kl(obj, _parse_point(args.xbar, obj.dim), args.r,
                                  _finite_eta(args, notes), phi,
                                  num_samples=args.samples, seed=seed)
    elif args.certify_cmd == "growth":
        phi = certify.HolderFunction(c=args.phi_c, alpha=args.phi_alpha)
        report = certify.certify_growth_direct(obj, _parse_point(args.xbar, obj.dim),
                                               args.r, _finite_eta(args, notes), phi,
                                               factor=args.factor,
                                               num_samples=args.samples, seed=seed)
    elif args.certify_cmd == "growth-ppa":
        phi = certify.HolderFunction(c=args.phi_c, alpha=args.phi_alpha)
        taus = [float(t) for t in args.tau_list.split(",") if t]
        report = certify.certify_growth_via_ppa(obj, _parse_point(args.x, obj.dim),
                                                phi, taus, num_steps=args.steps)
    else:
        report = certify.check_moreau_exponent(obj, args.lam,
                                               _parse_point(args.xbar, obj.dim),
                                               args.r, num_samples=args.samples,
                                               seed=seed)
    if notes:
        report.notes = report.notes + tuple(notes)
    return _emit_report(report)


def cmd_fit_rate(args) -> int:
    fitted_trace = trace.read_csv(args.trace)
    value, residual = certify.fit_rate_from_trace(fitted_trace, args.model,
                                                  k_min=args.k_min, k_max=args.k_max)
    key = "rho" if args.model == "linear" else "exponent"
    print(json.dumps({"model": args.model, key: value, "residual": residual},
                     indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="ahbopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one solver and write its trace")
    _add_common(solve)
    _add_problem_flags(solve)
    _add_solver_flags(solve)
    solve.set_defaults(func=cmd_solve)

    compare = sub.add_parser("compare", help="run several methods on one problem")
    _add_common(compare)
    _add_problem_flags(compare)
    _add_solver_flags(compare)
    compare.set_defaults(func=cmd_compare)

    cert = sub.add_parser("certify", help="sample-based condition checks")
    cert_sub = cert.add_subparsers(dest="certify_cmd", required=True)

    def _cert_parser(name, **kwargs):
        p = cert_sub.add_parser(name, **kwargs)
        _add_common(p)
        _add_problem_flags(p)
        p.set_defaults(func=cmd_certify)
        return p

    kl = _cert_parser("kl", help="sharpness of the gauge derivative")
    kl.add_argument("--xbar", default="zeros")
    kl.add_argument("--r", type=float, default=1.0)
    kl.add_argument("--eta", type=float, default=1.0)
    kl.add_argument("--phi-c", dest="phi_c", type=float, default=1.0)
    kl.add_argument("--phi-alpha", dest="phi_alpha", type=float, default=0.5)
    kl.add_argument("--samples", type=int, default=200)

    growth = _cert_parser("growth", help="distance bounded by the gauged gap")
    growth.add_argument("--xbar", default="zeros")
    growth.add_argument("--r", type=float, default=1.0)
    growth.add_argument("--eta", type=float, default=1.0)
    growth.add_argument("--phi-c", dest="phi_c", type=float, default=1.0)
    growth.add_argument("--phi-alpha", dest="phi_alpha", type=float, default=0.5)
    growth.add_argument("--factor", type=float, default=1.0)
    growth.add_argument("--samples", type=int, default=200)

    ppa = _cert_parser("growth-ppa", help="growth via proximal path lengths")
    ppa.add_argument("--x", required=True, help="start point as JSON")
    ppa.add_argument("--phi-c", dest="phi_c", type=float, default=1.0)
    ppa.add_argument("--phi-alpha", dest="phi_alpha", type=float, default=0.5)
    ppa.add_argument("--tau-list", dest="tau_list", default="1,0.1,0.01")
    ppa.add_argument("--steps", type=int, default=200)

    moreau = _cert_parser("moreau", help="envelope growth exponent")
    moreau.add_argument("--lam", type=float, default=1.0)
    moreau.add_argument("--xbar", default="zeros")
    moreau.add_argument("--r", type=float, default=0.5)
    moreau.add_argument("--samples", type=int, default=100)

    rate = cert_sub.add_parser("rate", help="sublinear envelope of a damped recursion")
    rate.set_defaults(func=cmd_certify)
    rate.add_argument("--delta0", type=float, required=True)
    rate.add_argument("--c", type=float, required=True)
    rate.add_argument("--theta", type=float, required=True)
    rate.add_argument("--steps", type=int, default=10000)

    fit = sub.add_parser("fit-rate", help="fit convergence rates from a trace CSV")
    _add_common(fit)
    fit.add_argument("--trace", required=True)
    fit.add_argument("--model", choices=("linear", "power"), required=True)
    fit.add_argument("--k-min", dest="k_min", type=int, default=None)
    fit.add_argument("--k-max", dest="k_max", type=int, default=None)
    fit.set_defaults(func=cmd_fit_rate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ToolkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
