"""Command-line front end.

Every subcommand accepts ``--config FILE`` (flat ``key = value`` lines, keys
spelled like the long flags without dashes); explicit flags win over the file.
Outputs start with a ``#`` line holding the JSON run header (schema version and
the resolved config), followed by the CSV body.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimator import DEFAULT_ALPHA, analytic_mise, estimate_coeffs, truncation_level
from .legendre import (
    DEFAULT_ESTIMATION_CAP,
    DEFAULT_SWEEP_CAP,
    coeffs_csv,
    gram_check,
    verify_binomial_lower,
    verify_binomial_upper,
    verify_sigma_bounds,
)
from .minimax import fano_check, rate_experiment
from .model import DEFAULT_PREC, MomentData, forward_moments, simulate
from .sobolev import make_test_function

SCHEMA_VERSION = 1
OUT_DIR_ENV = "LEGMOMENTS_OUT_DIR"


class CLIError(Exception):
    def __init__(self, code: str, message: str, status: int = 1):
        super().__init__(message)
        self.code = code
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("usage", message, status=2)


# -- config ----------------------------------------------------------------------

def read_config(path: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError("config", f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def _resolve(args: argparse.Namespace, parser: argparse.ArgumentParser, defaults: dict) -> dict:
    """defaults < config file < explicit flags."""
    explicit = {k: v for k, v in vars(args).items() if v is not None}
    file_cfg = read_config(args.config) if getattr(args, "config", None) else {}
    actions = {a.dest: a for a in parser._actions}
    cfg = dict(defaults)
    for key, value in file_cfg.items():
        if key not in defaults:
            raise CLIError("config", f"unknown config key {key!r}")
        action = actions.get(key)
        cfg[key] = action.type(value) if action is not None and action.type else value
    cfg.update({k: v for k, v in explicit.items() if k in defaults})
    return cfg


def _out_path(cfg: dict, suffix: str = "") -> Path | None:
    out = cfg.get("out")
    if not out:
        return None
    p = Path(out + suffix)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _header(command: str, cfg: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "tool": f"legmoments {__version__}",
            "command": command, "config": {k: v for k, v in sorted(cfg.items()) if k != "config"}}


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _with_header(header: dict, body: str) -> str:
    return "# " + json.dumps(header, sort_keys=True) + "\n" + body


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _test_function(cfg: dict):
    params = {}
    if cfg.get("c") is not None:
        params["c"] = float(cfg["c"])
    if cfg.get("coef"):
        params["coef"] = _floats(cfg["coef"])
    try:
        return make_test_function(cfg["kind"], float(cfg["r"]), **params)
    except ValueError as exc:
        raise CLIError("config", str(exc)) from exc


def read_moment_file(path: str) -> tuple[dict, MomentData]:
    """Parse a MomentData file written by ``simulate``."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise CLIError("input", f"{path}: missing JSON header line")
    header = json.loads(lines[0][2:])
    rows = list(csv.DictReader(lines[1:]))
    mu = [float(r["mu_k"]) for r in rows]
    y = [float(r["y_k"]) for r in rows]
    meta = header["data"]
    if meta["K"] != len(y) - 1:
        raise CLIError("input", f"{path}: header K={meta['K']} but {len(y)} rows")
    return header, MomentData(mu=mu, y=y, epsilon=meta["epsilon"], seed=meta["seed"])


# -- subcommands -----------------------------------------------------------------

def cmd_coeffs(cfg: dict) -> int:
    k_max = int(cfg["k_max"])
    cap = int(cfg["cap"])
    if k_max > cap:
        raise CLIError("cap_exceeded", f"k_max={k_max} exceeds cap {cap}")
    if k_max < 0:
        raise CLIError("config", "k_max must be >= 0")
    _emit(_with_header(_header("coeffs", cfg), coeffs_csv(k_max, cap=cap)), _out_path(cfg))
    return 0


def run_verification(n_max: int) -> dict:
    upper = verify_binomial_upper(n_max)
    lower = verify_binomial_lower(n_max)
    sigma = verify_sigma_bounds(n_max)
    gram_deg = min(n_max, 25)
    return {
        "n_max": n_max,
        "binomial_upper": all(h for _, h in upper),
        "binomial_lower": all(h for _, h in lower),
        "sigma_lower": all(lo for _, lo, _ in sigma),
        "sigma_upper": all(up for _, _, up in sigma),
        f"orthonormal_to_{gram_deg}": gram_check(gram_deg),
        "failures": [n for n, h in upper if not h] + [n for n, h in lower if not h]
        + [k for k, lo, up in sigma if not (lo and up)],
    }


def cmd_verify(cfg: dict) -> int:
    n_max = int(cfg["k_max"])
    if n_max < 1:
        raise CLIError("config", "k_max must be >= 1")
    report = run_verification(n_max)
    report["header"] = _header("verify", cfg)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _emit(text, _out_path(cfg))
    ok = all(v for k, v in report.items() if k not in ("n_max", "failures", "header"))
    if not ok:
        raise CLIError("inequality_failed", f"inequality failures at n={report['failures']}")
    return 0


def cmd_simulate(cfg: dict) -> int:
    eps = float(cfg["epsilon"])
    if eps < 0 or eps >= 1:
        raise CLIError("config", "epsilon must lie in [0, 1)")
    f = _test_function(cfg)
    if cfg.get("k") is not None:
        K = int(cfg["k"])
    elif eps > 0:
        K = truncation_level(eps, float(cfg["alpha"]))
    else:
        raise CLIError("config", "--K is required when epsilon = 0")
    if K < 0 or K > DEFAULT_ESTIMATION_CAP and not cfg.get("allow_large"):
        raise CLIError("config", f"K must lie in [0, {DEFAULT_ESTIMATION_CAP}]")
    prec = int(cfg["precision_bits"])
    mu = forward_moments(f, K, prec=prec)
    data = simulate(mu, eps, int(cfg["seed"]))
    header = _header("simulate", cfg)
    header["data"] = {"epsilon": eps, "seed": int(cfg["seed"]), "K": K}
    header["function"] = f.describe()
    body = _csv(zip(range(K + 1), data.mu, data.y), ["k", "mu_k", "y_k"])
    _emit(_with_header(header, body), _out_path(cfg))
    return 0


def cmd_estimate(cfg: dict) -> int:
    if not cfg.get("input"):
        raise CLIError("config", "--input is required")
    src, data = read_moment_file(cfg["input"])
    if cfg.get("n_terms") is not None:
        N = int(cfg["n_terms"])
    elif data.epsilon > 0:
        N = truncation_level(data.epsilon, float(cfg["alpha"]))
    else:
        N = data.K
    if N > data.K:
        raise CLIError("too_few_moments", f"N={N} needs moments 0..{N}, file has 0..{data.K}")
    est = estimate_coeffs(data, N, alpha=float(cfg["alpha"]), prec=int(cfg["precision_bits"]))
    header = _header("estimate", cfg)
    header["source"] = src
    header["N"] = N
    body = _csv(zip(range(N + 1), est.theta_hat), ["k", "theta_hat_k"])
    _emit(_with_header(header, body), _out_path(cfg))

    fn = src.get("function")
    if fn:
        fn_cfg = {"kind": fn["kind"], "r": fn["r"], "c": fn.get("c"),
                  "coef": ",".join(map(repr, fn["coef"])) if "coef" in fn else None}
        f = _test_function(fn_cfg)
        theta = f.theta_vec(N)
        mise = analytic_mise(f, data.epsilon, N)
        report = {
            "header": header,
            "mise": mise.to_dict(),
            "coefficient_error_sq": math.fsum((est.theta_hat - theta) ** 2),
        }
        report["reconstruction_error_sq"] = report["coefficient_error_sq"] + mise.bias_sq
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
        path = _out_path(cfg, ".json")
        if path is None:
            sys.stdout.write(text)
        else:
            path.write_text(text)
    return 0


def cmd_rate(cfg: dict) -> int:
    f = _test_function(cfg)
    try:
        table = rate_experiment(f, alpha=float(cfg["alpha"]), eps_grid=_floats(cfg["eps_grid"]),
                                reps=int(cfg["reps"]), seed=int(cfg["seed"]))
    except ValueError as exc:
        raise CLIError("config", str(exc)) from exc
    header = _header("rate", cfg)
    rows = [(r.epsilon, r.N, r.mise_analytic, r.mise_mc, r.stderr, r.ratio) for r in table.rows]
    body = _csv(rows, ["epsilon", "N", "mise_analytic", "mise_mc", "stderr", "ratio"])
    _emit(_with_header(header, body), _out_path(cfg))
    summary = {"header": header, "slope": table.slope, "intercept": table.intercept,
               "stability_last3": table.stability(), "target_slope": -2 * f.r}
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    path = _out_path(cfg, ".json")
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)
    return 0


def cmd_fano(cfg: dict) -> int:
    eps = float(cfg["epsilon"])
    if not 0 < eps < 1:
        raise CLIError("config", "epsilon must lie in (0, 1)")
    c0 = None if cfg.get("c0") is None else float(cfg["c0"])
    rep = fano_check(eps, float(cfg["r"]), c0, seed=int(cfg["seed"]))
    out = {"header": _header("fano", cfg), "report": rep.to_dict()}
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", _out_path(cfg))
    if not rep.ok:
        raise CLIError("precondition_failed", ",".join(rep.failures))
    return 0


# -- parser ------------------------------------------------------------------------

COMMON = {"out": None, "seed": 0, "precision_bits": DEFAULT_PREC}
FUNC = {"kind": "b", "r": 1.0, "c": None, "coef": None, "alpha": DEFAULT_ALPHA}

COMMANDS = {
    "coeffs": (cmd_coeffs, "dump exact Legendre coefficients as CSV",
               {"k_max": 10, "cap": DEFAULT_SWEEP_CAP}),
    "verify": (cmd_verify, "run the exact binomial and noise-intensity inequality sweeps",
               {"k_max": DEFAULT_SWEEP_CAP}),
    "simulate": (cmd_simulate, "simulate noisy moments of a test function",
                 {**FUNC, "epsilon": 1e-3, "k": None, "allow_large": None}),
    "estimate": (cmd_estimate, "estimate Legendre coefficients from a moment file",
                 {"input": None, "alpha": DEFAULT_ALPHA, "n_terms": None}),
    "rate": (cmd_rate, "risk of the truncation rule over a noise grid",
             {**FUNC, "eps_grid": ",".join(f"1e-{e}" for e in range(2, 11)), "reps": 0}),
    "fano": (cmd_fano, "build and check the Fano lower-bound construction",
             {"epsilon": 1e-8, "r": 1.0, "c0": None}),
}


def build_parser() -> _Parser:
    p = _Parser(prog="legmoments", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_, _) in COMMANDS.items():
        s = sub.add_parser(name, help=help_, description=help_)
        s.add_argument("--config", help="flat key = value file; flags override it")
        s.add_argument("--out", help=f"output path (relative paths go under ${OUT_DIR_ENV} if set)")
        s.add_argument("--seed", type=int, help="master RNG seed (default 0)")
        s.add_argument("--precision-bits", type=int, help=f"extra bits in exact sums (default {DEFAULT_PREC})")
        if name in ("coeffs", "verify"):
            s.add_argument("--k-max", type=int, help="highest degree / n to process")
        if name == "coeffs":
            s.add_argument("--cap", type=int, help=f"refuse k_max above this (default {DEFAULT_SWEEP_CAP})")
        if name in ("simulate", "rate"):
            s.add_argument("--kind", choices=["a", "b", "c", "polynomial", "near_extremal", "power_law"],
                           help="test function: a polynomial, b near-extremal, c power law (default b)")
            s.add_argument("--c", type=float, help="amplitude of kinds b and c (default 1)")
            s.add_argument("--coef", help="comma-separated Legendre coefficients for kind a")
        if name in ("simulate", "rate", "fano"):
            s.add_argument("--r", type=float, help="smoothness index (default 1)")
        if name in ("simulate", "estimate", "rate"):
            s.add_argument("--alpha", type=float, help="truncation constant (default 1/ln 4)")
        if name in ("simulate", "fano"):
            s.add_argument("--epsilon", type=float, help="noise level")
        if name == "simulate":
            s.add_argument("--K", dest="k", type=int, help="highest moment index (default: N of the rule)")
            s.add_argument("--allow-large", action="store_const", const=True,
                           help=f"permit K above {DEFAULT_ESTIMATION_CAP}")
        if name == "estimate":
            s.add_argument("--input", help="moment file written by simulate")
            s.add_argument("--n-terms", type=int, help="override the truncation level N")
        if name == "rate":
            s.add_argument("--eps-grid", help="comma-separated decreasing noise levels")
            s.add_argument("--reps", type=int, help="Monte Carlo replicates per level (0 = analytic only)")
        if name == "fano":
            s.add_argument("--c0", type=float, help="amplitude constant (default: largest admissible)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        func, _, defaults = COMMANDS[args.command]
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        cfg = _resolve(args, subparser, {**COMMON, **defaults})
        return func(cfg)
    except CLIError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return exc.status
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {type(exc).__name__.lower()}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
