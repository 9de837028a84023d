"""Command-line front end: ``snlp <verb> --config FILE [options]``.

Exit status: 0 success, 1 validation or domain error, 2 numerical failure,
3 I/O error.  Outputs are written atomically; on error no output file is
created.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import asymptotics, levy_model, mc_harness, path_sim, scale_fn
from .errors import NumericalError, ValidationError
from .serialize import atomic_write, dumps

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class ConfigIOError(Exception):
    pass


# --------------------------------------------------------------------------
# Config handling
# --------------------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(obj: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` overrides; dotted keys address nested objects."""
    obj = json.loads(json.dumps(obj))
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        parts = key.split(".")
        node = obj
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ValidationError(f"--set {key}: '{p}' is not an object in the config")
            node = node[p]
        node[parts[-1]] = _parse_value(value)
    return obj


def read_config(path: str | None, overrides: list[str]) -> dict:
    if path is None:
        raise ValidationError("--config is required")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigIOError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    return apply_overrides(obj, overrides)


def spec_from_config(obj: dict) -> levy_model.ProcessSpec:
    return levy_model.ProcessSpec.from_json(obj["spec"] if "spec" in obj else obj)


def _num(text: str) -> float:
    return float(text)


def _short(v: float) -> str:
    """Human summary: 15 significant digits, shown as a Python float literal."""
    return repr(float(f"{v:.15g}"))


def _write(args, text: str):
    if args.output:
        try:
            atomic_write(args.output, text)
        except OSError as exc:
            raise ConfigIOError(f"cannot write {args.output}: {exc.strerror or exc}") from None


def _scalar(args, verb: str, value: float, **inputs):
    if args.output:
        if args.format == "csv":
            keys = list(inputs) + ["value"]
            row = [repr(float(v)) for v in inputs.values()] + [repr(float(value))]
            _write(args, ",".join(keys) + "\n" + ",".join(row) + "\n")
        else:
            _write(args, dumps({"verb": verb, **inputs, "value": value}))
    print(_short(value))


# --------------------------------------------------------------------------
# Verbs
# --------------------------------------------------------------------------

def cmd_psi(args):
    spec = spec_from_config(read_config(args.config, args.set))
    if not args.lam >= 0:
        raise levy_model.DomainError(f"lambda must be >= 0, got {args.lam}")
    _scalar(args, "psi", spec.psi(args.lam), **{"lambda": args.lam})


def cmd_phi(args):
    spec = spec_from_config(read_config(args.config, args.set))
    if not args.q >= 0:
        raise levy_model.DomainError(f"q must be >= 0 (phi is the right inverse of psi on [0, inf)), got {args.q}")
    _scalar(args, "phi", levy_model.phi(spec, args.q), q=args.q)


def _sf(args):
    spec = spec_from_config(read_config(args.config, args.set))
    return scale_fn.scale_function(spec, args.method, args.gs_terms)


def cmd_scale(args):
    sf = _sf(args)
    if args.grid:
        parts = args.grid.split(",")
        if len(parts) != 3:
            raise ValidationError("--grid expects start,stop,count")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        xs = np.linspace(lo, hi, n)
        rows = scale_fn.tabulate(sf, xs)
        if args.format == "json":
            _write(args, dumps({"rows": rows}))
        else:
            _write(args, scale_fn.to_csv(rows))
        print(f"tabulated W at {n} points with {sf.method.value}")
        return
    if args.x is None:
        raise ValidationError("scale needs --x or --grid")
    value, err = sf.W_with_error(args.x)
    if args.output and args.format == "csv":
        _write(args, scale_fn.to_csv(scale_fn.tabulate(sf, [args.x])))
        print(_short(value))
        return
    _scalar(args, "scale", value, x=args.x, err_estimate=err)


def cmd_exit(args):
    _scalar(args, "exit", scale_fn.exit_prob(_sf(args), args.x, args.y), x=args.x, y=args.y)


def cmd_minlaw(args):
    _scalar(args, "minlaw", scale_fn.min_law(_sf(args), args.x, args.y), x=args.x, y=args.y)


def cmd_rates(args):
    spec = spec_from_config(read_config(args.config, args.set))
    fn = asymptotics.rate_h if args.kind == "h" else asymptotics.rate_g
    _scalar(args, f"rate_{args.kind}", fn(spec, args.t), t=args.t)


def cmd_constants(args):
    c, cc = asymptotics.lil_constants(args.alpha)
    if args.output:
        _write(args, dumps({"alpha": args.alpha, "c_upper": c, "c_chung": cc}) if args.format == "json"
               else f"alpha,c_upper,c_chung\n{args.alpha!r},{c!r},{cc!r}\n")
    print(f"{_short(c)} {_short(cc)}")


def cmd_inttest(args):
    side = asymptotics.Side(args.side)
    if args.envelope:
        f = asymptotics.EnvelopeFunction.from_json(_parse_value(args.envelope))
    else:
        f = asymptotics.EnvelopeFunction.power_log(args.p, args.kappa, args.K)
    if args.test == "stable":
        if args.alpha is None:
            raise ValidationError("inttest --test stable needs --alpha")
        res = asymptotics.integral_test_stable(f, args.alpha, side)
    else:
        spec = spec_from_config(read_config(args.config, args.set))
        if args.test == "phi":
            res = asymptotics.integral_test_phi(f, spec, side)
        else:
            sub = levy_model.subordinator_of(spec)
            fn = asymptotics.integral_test_nu if args.test == "nu" else asymptotics.integral_test_nubar
            res = fn(f, sub, side)
    _write(args, dumps(res.to_json()))
    print(res.verdict.value)


def _seed(value):
    env = os.environ.get("SNLP_SEED")
    seed = int(env) if env is not None else int(value)
    if not 0 <= seed < 2 ** 64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def cmd_simulate(args):
    spec = spec_from_config(read_config(args.config, args.set))
    rng = np.random.default_rng(_seed(args.seed))
    if args.kind == "subordinator":
        sub = levy_model.subordinator_of(spec)
        p = path_sim.sample_subordinator(sub, args.horizon, args.dt, rng)
        lines = ["level,time"] + [f"{a!r},{b!r}" for a, b in zip(p.levels.tolist(), p.times.tolist())]
        text, n = "\n".join(lines) + "\n", p.levels.size
    else:
        if args.kind == "unconditioned":
            p = path_sim.sample_unconditioned(spec, args.horizon, args.dt, rng, x0=args.x0)
        elif args.kind == "killed":
            p = path_sim.sample_killed(spec, args.x0, args.horizon, args.dt, rng)
        else:
            p = path_sim.sample_conditioned(spec, scale_fn.scale_function(spec), args.x0, args.horizon, args.dt, rng)
        text, n = p.to_csv(), p.times.size
    _write(args, text)
    if not args.output:
        sys.stdout.write(text)
    print(f"simulated {args.kind} path with {n} points")


def cmd_experiment(args):
    obj = read_config(args.config, args.set)
    if os.environ.get("SNLP_SEED") is not None:
        obj["seed"] = _seed(0)
    if args.threads is not None:
        obj["workers"] = args.threads
    elif "workers" not in obj:
        obj["workers"] = os.cpu_count() or 1
    cfg = mc_harness.ExperimentConfig.from_json(obj)
    report = mc_harness.run_experiment(cfg)
    if args.output:
        out = Path(args.output)
        stem = out.with_suffix("")
        if args.format == "csv":
            _write(args, report.per_path_csv())
        else:
            _write(args, report.to_json_text())
            _atomic(stem.with_name(stem.name + ".paths.csv"), report.per_path_csv())
        _atomic(stem.with_name(stem.name + ".meta.json"), report.meta_json_text())
    else:
        sys.stdout.write(report.to_json_text())
    main_key = next(iter(report.estimates))
    print(f"{report.experiment.value}: {main_key}={_short(report.estimates[main_key])} "
          f"verdict={report.verdict.value}")


def _atomic(path, text):
    try:
        atomic_write(path, text)
    except OSError as exc:
        raise ConfigIOError(f"cannot write {path}: {exc.strerror or exc}") from None


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="snlp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON config (process spec or experiment)")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="override a config field; dotted keys reach nested objects")
        p.add_argument("--output", help="write the result to this file")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--threads", type=int, default=None, help="worker processes for experiments")

    p = sub.add_parser("psi", help="Laplace exponent")
    common(p)
    p.add_argument("--lambda", dest="lam", type=_num, required=True)
    p.set_defaults(fn=cmd_psi)

    p = sub.add_parser("phi", help="right inverse of psi")
    common(p)
    p.add_argument("--q", type=_num, required=True)
    p.set_defaults(fn=cmd_phi)

    for name, fn, help_ in (("scale", cmd_scale, "scale function W"),
                            ("exit", cmd_exit, "two-sided exit probability W(x)/W(x+y)"),
                            ("minlaw", cmd_minlaw, "minimum law W(x-y)/W(x)")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--method", choices=[m.value for m in scale_fn.Method], default=None)
        p.add_argument("--gs-terms", dest="gs_terms", type=int, default=scale_fn.DEFAULT_TERMS)
        if name == "scale":
            p.add_argument("--x", type=_num)
            p.add_argument("--grid", help="start,stop,count for a CSV table")
        else:
            p.add_argument("--x", type=_num, required=True)
            p.add_argument("--y", type=_num, required=True)
        p.set_defaults(fn=fn)

    p = sub.add_parser("rates", help="rate functions h and g")
    common(p)
    p.add_argument("--t", type=_num, required=True)
    p.add_argument("--kind", choices=["h", "g"], default="h")
    p.set_defaults(fn=cmd_rates)

    p = sub.add_parser("constants", help="iterated-logarithm constants for index alpha")
    common(p, config=False)
    p.add_argument("--alpha", type=_num, required=True)
    p.set_defaults(fn=cmd_constants)

    p = sub.add_parser("inttest", help="integral-test classifier")
    common(p)
    p.add_argument("--test", choices=["stable", "nu", "phi", "nubar"], required=True)
    p.add_argument("--side", choices=[s.value for s in asymptotics.Side], default="AtZero")
    p.add_argument("--alpha", type=_num)
    p.add_argument("--envelope", help='JSON envelope, e.g. {"family": "power_log", "params": {"p": 1}}')
    p.add_argument("--p", type=_num, default=1.0)
    p.add_argument("--kappa", type=_num, default=0.0)
    p.add_argument("--K", type=_num, default=1.0)
    p.set_defaults(fn=cmd_inttest)

    p = sub.add_parser("simulate", help="sample a path as CSV")
    common(p)
    p.add_argument("--kind", choices=["unconditioned", "conditioned", "killed", "subordinator"],
                   default="unconditioned")
    p.add_argument("--horizon", type=_num, default=1.0, help="time horizon (level_max for subordinators)")
    p.add_argument("--dt", type=_num, default=1e-3, help="time step (level step for subordinators)")
    p.add_argument("--x0", type=_num, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    common(p)
    p.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigIOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
