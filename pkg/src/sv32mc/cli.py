"""Command-line front end: pricing, CDF dumps, path dumps, cross-validation.

Configuration is a flat key = value file; every key can be overridden by a
flag of the same name.  All output is CSV (or whitespace pairs for the CDF
dump) on stdout, with a leading '# key=value' metadata comment naming the
seed, so runs are reproducible from their own output.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import dist, engine, oracle
from .model import CallContract, ModelParams, ValidationError, validate, validate_contract

__all__ = ["main", "build_parser", "DEFAULTS"]

DEFAULTS = {
    "kappa": 2.0,
    "theta": 1.5,
    "epsilon": 0.2,
    "rho": -0.5,
    "r": 0.05,
    "s0": 1.0,
    "v0": 1.0,
    "strike": 1.0,
    "maturity": 1.0,
    "method": "exact-mc",
    "paths": 10240,
    "m": 8,
    "reps": 30,
    "steps": 512,
    "seed": 42,
    "tol": dist.DEFAULT_TOL,
    "inversion": "interpolate",
}

_FLOAT_KEYS = ("kappa", "theta", "epsilon", "rho", "r", "s0", "v0", "strike", "maturity", "tol")
_INT_KEYS = ("paths", "m", "reps", "steps", "seed")
_METHODS = ("exact-mc", "cond-mc", "qmc-cond-mc", "euler")

_HEADER = "method,n_trials,estimate,std_error,wall_seconds"


def _parse_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key = value, got {raw.rstrip()!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _coerce(key, raw):
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        return int(raw)
    return raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sv32mc",
        description="Exact Monte Carlo pricing under the 3/2 stochastic volatility model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="flat key = value config file")
        for key in _FLOAT_KEYS:
            sp.add_argument(f"--{key}", type=float, default=None)
        for key in _INT_KEYS:
            sp.add_argument(f"--{key}", type=int, default=None)
        sp.add_argument("--method", choices=_METHODS, default=None)
        sp.add_argument("--inversion", choices=("interpolate", "nearest"), default=None)
        sp.add_argument(
            "--print-config",
            action="store_true",
            help="print the effective key = value configuration and exit",
        )

    add_common(sub.add_parser("price", help="price a European call with one method"))
    add_common(sub.add_parser("validate", help="run all methods and report consistency"))
    add_common(sub.add_parser("paths", help="dump exact path samples as CSV"))
    cdf = sub.add_parser("cdf", help="dump the conditional integrated-variance CDF grid")
    add_common(cdf)
    cdf.add_argument("--x-t", type=float, required=True, dest="x_t")
    cdf.add_argument("--x-u", type=float, required=True, dest="x_u")
    return parser


def _effective_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        for key, raw in _parse_config_file(args.config).items():
            if key not in cfg:
                raise ValueError(f"unknown config key: {key}")
            cfg[key] = _coerce(key, raw)
    for key in cfg:
        override = getattr(args, key, None)
        if override is not None:
            cfg[key] = override
    return cfg


def _model_from(cfg) -> ModelParams:
    return validate(
        ModelParams(
            kappa=cfg["kappa"],
            theta=cfg["theta"],
            epsilon=cfg["epsilon"],
            rho=cfg["rho"],
            r=cfg["r"],
            s0=cfg["s0"],
            v0=cfg["v0"],
        )
    )


def _contract_from(cfg) -> CallContract:
    return validate_contract(CallContract(strike=cfg["strike"], maturity=cfg["maturity"]))


def _print_config(cfg, out):
    for key, value in cfg.items():
        print(f"{key} = {value}", file=out)


def _fmt(x) -> str:
    return f"{x:.9g}"


def _run_method(cfg, method):
    params = _model_from(cfg)
    contract = _contract_from(cfg)
    if method == "exact-mc":
        return engine.price_call_exact(
            params, contract, cfg["paths"], cfg["seed"], tol=cfg["tol"], inversion=cfg["inversion"]
        )
    if method == "cond-mc":
        points = engine.pseudo_points(cfg["paths"], cfg["seed"])
        return engine.price_call_cond_mc(
            params, contract, points, tol=cfg["tol"], inversion=cfg["inversion"]
        )
    if method == "qmc-cond-mc":
        return engine.price_call_qmc(
            params, contract, cfg["m"], cfg["reps"], cfg["seed"], tol=cfg["tol"], inversion=cfg["inversion"]
        )
    if method == "euler":
        ecfg = oracle.EulerConfig(n_steps=cfg["steps"], n_paths=cfg["paths"], seed=cfg["seed"])
        return oracle.price_call_euler(params, contract, ecfg)
    raise ValueError(f"unknown method: {method}")


def _result_row(res) -> str:
    return ",".join(
        [res.method, str(res.n_trials), _fmt(res.estimate), _fmt(res.std_error), _fmt(res.wall_seconds)]
    )


def cmd_price(cfg, out) -> int:
    res = _run_method(cfg, cfg["method"])
    print(f"# seed={cfg['seed']}", file=out)
    print(_HEADER, file=out)
    print(_result_row(res), file=out)
    return 0


def cmd_validate(cfg, out) -> int:
    results = [_run_method(cfg, method) for method in _METHODS]
    print(f"# seed={cfg['seed']}", file=out)
    print(_HEADER, file=out)
    for res in results:
        print(_result_row(res), file=out)
    # Pairwise |difference| / combined standard error; the Euler row gets a
    # discretization-bias allowance on top of its statistical error.
    bias = 0.002
    ratios = []
    for i in range(len(results)):
        for k in range(i + 1, len(results)):
            a, b = results[i], results[k]
            se = (a.std_error**2 + b.std_error**2) ** 0.5
            allow = bias if "euler" in (a.method, b.method) else 0.0
            gap = max(abs(a.estimate - b.estimate) - allow, 0.0)
            ratios.append(f"{a.method}|{b.method}={_fmt(gap / se)}")
    print("consistency," + ";".join(ratios), file=out)
    return 0


def cmd_paths(cfg, out) -> int:
    params = _model_from(cfg)
    contract = _contract_from(cfg)
    print(f"# seed={cfg['seed']}", file=out)
    print("path,x_terminal,int_inv_x,int_sqrt_inv_dw,log_s_terminal", file=out)
    for i in range(cfg["paths"]):
        rng = engine.path_rng(cfg["seed"], i)
        sample = engine.step_exact(
            params,
            params.s0,
            params.x0,
            contract.maturity,
            rng,
            tol=cfg["tol"],
            inversion=cfg["inversion"],
        )
        fields = (
            sample.x_terminal,
            sample.int_inv_x,
            sample.int_sqrt_inv_dw,
            sample.log_s_terminal,
        )
        print(f"{i}," + ",".join(_fmt(v) for v in fields), file=out)
    return 0


def cmd_cdf(cfg, x_t, x_u, out) -> int:
    params = _model_from(cfg)
    bridge = dist.BridgeState(x_t=x_t, x_u=x_u, dt=cfg["maturity"])
    built = dist.build_cond_iv_cdf(params, bridge, tol=cfg["tol"])
    for x, f in zip(built.grid_x, built.grid_f):
        print(f"{x:.12g} {f:.12g}", file=out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = sys.stdout
    try:
        cfg = _effective_config(args)
        if args.print_config:
            _print_config(cfg, out)
            return 0
        if args.command == "price":
            return cmd_price(cfg, out)
        if args.command == "validate":
            return cmd_validate(cfg, out)
        if args.command == "paths":
            return cmd_paths(cfg, out)
        if args.command == "cdf":
            return cmd_cdf(cfg, args.x_t, args.x_u, out)
        raise ValueError(f"unknown command: {args.command}")
    except (ValidationError, ValueError, OSError, dist.MomentError, dist.CdfBuildError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
