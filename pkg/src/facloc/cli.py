"""Command-line front end: ``facloc gen | eval | sweep | check | rerun``.

Exit codes: 0 success, 1 a verification check failed, 2 an optimum did not
converge (or argparse rejected the command line), 3 invalid input.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .evaluation import (
    EvalConfig,
    EvaluationError,
    choose_method,
    consistency_robustness_sweep,
    grd_floor_check,
    opt_value,
    prediction_for,
    ratio,
    result_row,
    rows_to_csv,
    scost,
)
from .instances import RECIPES, build, certificates
from .mechanisms import FOUR_OVER_PI, PREDICTION_KINDS, Kind, MechanismSpec
from .medians import Instance, cwmed
from .verification import CWM_RD_UPPER, check_hd_lower_bound, reports_table, reports_to_json, run_suite

EXIT_OK, EXIT_CHECK_FAILED, EXIT_NOT_CONVERGED, EXIT_BAD_INPUT = 0, 1, 2, 3

DEFAULTS = {
    "seed": None,
    "workers": 1,
    "format": "csv",
    "out": None,
    "panels": 20_000,
    "samples": 2000,
    "opt_tol": 1e-10,
    "q": 2.0,
    "method": "auto",
}


class InputError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _common() -> argparse.ArgumentParser:
    # SUPPRESS keeps unset flags out of the namespace so config files can fill them in
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (required for Monte Carlo)")
    g.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="worker processes for Monte Carlo")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output file path")
    g.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON file with default option values")
    return p


def _eval_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("auto", "quadrature", "monte_carlo", "exact"), default=argparse.SUPPRESS)
    p.add_argument("--panels", type=int, default=argparse.SUPPRESS, help="Simpson panels over a quarter turn")
    p.add_argument("--samples", type=int, default=argparse.SUPPRESS, help="Monte Carlo rotations")
    p.add_argument("--q", type=float, default=argparse.SUPPRESS, help="l_q cost exponent")
    p.add_argument("--opt-tol", dest="opt_tol", type=float, default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="facloc", parents=[common],
                                     description="Strategyproof facility-location mechanisms: generate, evaluate, verify.")
    parser.add_argument("--version", action="version", version=f"facloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write an instance file from a named recipe")
    g.add_argument("recipe", choices=RECIPES)
    g.add_argument("--M", type=float)
    g.add_argument("--k", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--d", type=int)

    e = sub.add_parser("eval", parents=[common], help="approximation ratio of one mechanism on an instance")
    e.add_argument("instance")
    e.add_argument("--mech", required=True, choices=[k.value for k in Kind])
    e.add_argument("--c", type=float, help="confidence in the prediction")
    e.add_argument("--prediction", type=_floats, help="predicted optimum, comma-separated")
    e.add_argument("--eta", type=float, help="place the prediction at this normalized error from the optimum")
    _eval_options(e)

    s = sub.add_parser("sweep", parents=[common], help="grid sweeps")
    s.add_argument("kind", choices=("cmp-tradeoff", "grd-floor", "hd-ratio"))
    s.add_argument("--instance", help="instance file for cmp-tradeoff (default: paper-lb-2d with M=20)")
    s.add_argument("--c", type=_floats, default=[0.1, 0.3, 0.5])
    s.add_argument("--eta", type=_floats, default=[0.0, 0.5, 1.0, 10.0])
    s.add_argument("--n", type=_ints, default=[10, 100, 1000])
    s.add_argument("--d", type=_ints, default=[16, 64, 256])
    _eval_options(s)

    c = sub.add_parser("check", parents=[common], help="run a verification suite")
    c.add_argument("suite", choices=("all", "lemmas", "sp", "robustness"))
    c.add_argument("--quick", action="store_true", help="tenfold smaller sample sizes")

    r = sub.add_parser("rerun", help="re-execute the command recorded in a run manifest")
    r.add_argument("manifest")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Option values with precedence flags > config file > defaults."""
    opts = dict(DEFAULTS)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            loaded = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {cfg_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InputError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        opts.update(loaded)
    for key in DEFAULTS:
        if hasattr(args, key):
            opts[key] = getattr(args, key)
    opts["config"] = cfg_path
    return opts


def _eval_config(opts: dict, method: str | None = None) -> EvalConfig:
    return EvalConfig(seed=opts["seed"] if opts["seed"] is not None else 0, mc_samples=int(opts["samples"]),
                      quad_panels=int(opts["panels"]), opt_tol=float(opts["opt_tol"]), q=float(opts["q"]),
                      workers=int(opts["workers"]), method=method or opts["method"])


def _need_seed(opts: dict, what: str) -> None:
    if opts["seed"] is None:
        raise InputError(f"{what} is randomized: pass --seed (or set it in the config file)")


def _config_hash(opts: dict) -> str:
    blob = json.dumps({k: opts[k] for k in sorted(opts) if k != "config"}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(out_path: Path, argv: list[str], opts: dict, outputs: list[str]) -> Path:
    manifest = {
        "argv": list(argv),
        "cwd": os.getcwd(),
        "config": {k: opts[k] for k in sorted(opts)},
        "config_hash": _config_hash(opts),
        "seed": opts["seed"],
        "version": __version__,
        "backend": kernels.BACKEND,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": outputs,
    }
    path = out_path.with_name(out_path.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_instance(path: str) -> Instance:
    try:
        return Instance.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read instance {path}: {exc}") from exc


def _fmt_point(p) -> str:
    return "(" + ", ".join(f"{float(x):.6g}" for x in p) + ")"


def cmd_gen(args, opts, argv) -> int:
    params = {k: getattr(args, k) for k in ("M", "k", "n", "d") if getattr(args, k) is not None}
    if args.recipe == "paper-lb-2d" and "M" in params:
        if params["M"] != int(params["M"]) or params["M"] < 1:
            raise InputError("paper-lb-2d needs a positive integer M")
        params["M"] = int(params["M"])
    if args.recipe.startswith("random-"):
        _need_seed(opts, args.recipe)
        params["seed"] = opts["seed"]
    try:
        P = build(args.recipe, **params)
    except KeyError as exc:
        raise InputError(f"recipe {args.recipe} needs parameter --{exc.args[0]}") from exc
    out = Path(opts["out"] or f"{args.recipe}.json")
    _write(out, _dump_json(P.to_dict()))
    write_manifest(out, argv, opts, [str(out)])
    print(f"wrote {out}: n={P.n} d={P.dim} atoms={P.m}")
    for cert in certificates(P):
        print(f"OPT certificate {_fmt_point(cert)}: cost {scost(P, cert):.10g}")
    if args.recipe == "fig1":
        print(f"CWM cost 2k = {scost(P, cwmed(P)):.10g}")
    return EXIT_OK


def _mechanism(args, P: Instance, opts: dict) -> MechanismSpec:
    kind = Kind(args.mech)
    if kind not in PREDICTION_KINDS:
        if args.c is not None or args.prediction is not None or args.eta is not None:
            raise InputError(f"{kind.value} takes no --c / --prediction / --eta")
        return MechanismSpec(kind)
    if args.c is None or (args.prediction is None) == (args.eta is None):
        raise InputError(f"{kind.value} needs --c and exactly one of --prediction / --eta")
    if args.prediction is not None:
        pred = np.array(args.prediction)
    else:
        opt = opt_value(P, float(opts["q"]), _eval_config(opts))
        pred = prediction_for(opt.solver_point, args.eta, opt.value, P.n)
    return MechanismSpec(kind, c=args.c, prediction=pred)


def cmd_eval(args, opts, argv) -> int:
    P = load_instance(args.instance)
    mech = _mechanism(args, P, opts)
    method = choose_method(P, mech, opts["method"])
    if method == "monte_carlo":
        _need_seed(opts, "Monte Carlo evaluation")
    cfg = _eval_config(opts, method)
    est = ratio(P, mech, cfg)
    row = result_row(Path(args.instance).stem, mech, cfg.q, est)
    fmt = opts["format"]
    out = Path(opts["out"] or f"{Path(args.instance).stem}-{mech.kind.value}.{fmt}")
    if fmt == "csv":
        _write(out, rows_to_csv([row]))
    else:
        _write(out, _dump_json({"row": row, "estimate": est.to_dict(), "flagged": not est.opt_converged}))
    write_manifest(out, argv, opts, [str(out)])
    ci = f" ci95=[{est.ci95[0]:.6f}, {est.ci95[1]:.6f}]" if est.std_error > 0 else ""
    print(f"{mech.label()} on {args.instance} ({est.method}): ratio={est.mean:.8f}{ci} "
          f"cost={est.expected_cost:.8g} opt={est.opt_value:.8g}")
    if not est.opt_converged:
        print("optimum solver did not converge; result flagged", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


SWEEP_COLUMNS = {
    "cmp-tradeoff": ("instance_id", "c", "eta", "method", "ratio", "std_error", "ci_lo", "ci_hi", "opt",
                     "paper_bound", "within_bound"),
    "grd-floor": ("n", "ratio", "uniform_ratio", "opt", "floor", "paper_bound", "passed"),
    "hd-ratio": ("d", "ratio", "std_error", "ci_lo", "ci_hi", "opt", "paper_bound", "within_bound"),
}


def cmd_sweep(args, opts, argv) -> int:
    r = lambda x: repr(float(x))  # noqa: E731
    rows = []
    if args.kind == "cmp-tradeoff":
        if not args.c or not args.eta:
            raise InputError("grids must be nonempty")
        if args.instance:
            P, iid = load_instance(args.instance), Path(args.instance).stem
        else:
            P, iid = build("paper-lb-2d", M=20), "paper-lb-2d-M20"
        if P.dim != 2 or opts["method"] == "monte_carlo":
            _need_seed(opts, "Monte Carlo evaluation")
        for pt in consistency_robustness_sweep(P, args.c, args.eta, _eval_config(opts)):
            est = pt.measured_ratio
            rows.append({"instance_id": iid, "c": r(pt.c), "eta": r(pt.eta), "method": est.method,
                         "ratio": r(est.mean), "std_error": r(est.std_error), "ci_lo": r(est.ci95[0]),
                         "ci_hi": r(est.ci95[1]), "opt": r(est.opt_value), "paper_bound": r(pt.paper_bound),
                         "within_bound": str(pt.within_bound).lower()})
        ok = all(row["within_bound"] == "true" for row in rows)
    elif args.kind == "grd-floor":
        if not args.n:
            raise InputError("grids must be nonempty")
        for fr in grd_floor_check(args.n, _eval_config(opts)):
            rows.append({"n": str(fr.n), "ratio": r(fr.ratio), "uniform_ratio": r(fr.uniform_ratio),
                         "opt": r(fr.opt), "floor": r(fr.floor), "paper_bound": r(FOUR_OVER_PI),
                         "passed": str(fr.passed).lower()})
        ok = all(row["passed"] == "true" for row in rows)
    else:
        if not args.d:
            raise InputError("grids must be nonempty")
        _need_seed(opts, "hd-ratio")
        reports, ests = check_hd_lower_bound(args.d, int(opts["samples"]), seed=opts["seed"],
                                             workers=int(opts["workers"]))
        for d, est in ests:
            rows.append({"d": str(d), "ratio": r(est.mean), "std_error": r(est.std_error), "ci_lo": r(est.ci95[0]),
                         "ci_hi": r(est.ci95[1]), "opt": r(est.opt_value), "paper_bound": r(CWM_RD_UPPER),
                         "within_bound": str(est.mean <= CWM_RD_UPPER + 3 * est.std_error).lower()})
        ok = all(rep.passed for rep in reports if not rep.name.startswith("hd_ratio_floor"))
    columns = SWEEP_COLUMNS[args.kind]
    fmt = opts["format"]
    out = Path(opts["out"] or f"sweep-{args.kind}.{fmt}")
    _write(out, rows_to_csv(rows, columns) if fmt == "csv" else _dump_json(rows))
    write_manifest(out, argv, opts, [str(out)])
    print(f"{args.kind}: {len(rows)} rows written to {out}; {'all within bounds' if ok else 'SOME OUT OF BOUNDS'}")
    return EXIT_OK


def cmd_check(args, opts, argv) -> int:
    _need_seed(opts, "check")
    reports = run_suite(args.suite, seed=int(opts["seed"]), workers=int(opts["workers"]), quick=args.quick)
    out = Path(opts["out"] or f"check-{args.suite}.json")
    _write(out, reports_to_json(reports) + "\n")
    write_manifest(out, argv, opts, [str(out)])
    print(reports_table(reports))
    failed = [rep for rep in reports if not rep.passed]
    for rep in failed:
        print(f"FAILED {rep.name}: {rep.detail}\n  witness: {json.dumps(rep.witness, sort_keys=True)}")
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed; report in {out}")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_rerun(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        argv = manifest["argv"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise InputError(f"cannot read manifest {args.manifest}: {exc}") from exc
    prev = os.getcwd()
    os.chdir(manifest.get("cwd", prev))
    try:
        return main(argv)
    finally:
        os.chdir(prev)


COMMANDS = {"gen": cmd_gen, "eval": cmd_eval, "sweep": cmd_sweep, "check": cmd_check}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rerun":
            return cmd_rerun(args)
        opts = resolve(args)
        return COMMANDS[args.command](args, opts, argv)
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
