"""Command-line entry point: ``robust-scatter <command> [options]``.

Every option can also come from a JSON file passed with ``--config``; flags
given on the command line take precedence. Config files are validated
against a per-command schema before anything is computed, and unknown keys
are rejected.
"""

import argparse
import json
import logging
from pathlib import Path
import sys

import jsonschema
import numpy as np

from . import checks
from .errors import (
    ConfigError,
    DataShapeMismatch,
    DimensionMismatch,
    ParseError,
    RobustScatterError,
    WrongShape,
)
from .estimators import (
    FitConfig,
    fit_chordal_joint_mean,
    fit_direct_cholesky,
    fit_fixed_point,
    fit_graphical_mm,
    fit_l1_cholesky,
)
from .experiments import (
    ESTIMATORS,
    THREADS_ENV,
    SonarConfig,
    exp1_spec,
    exp2_spec,
    exp3_spec,
    grid_precision,
    run_synthetic,
    sonar_experiment,
    toeplitz_banded_precision,
)
from .graphs import SparsityPattern
from .io import SONAR_URL, load_sonar, parse_pattern, read_samples_csv, write_matrix_csv
from .models import huber_rho, mggd_rho, mggd_sample, tyler_rho

logger = logging.getLogger("robust_scatter")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_DATA = 4
EXIT_ESTIMATOR = 5
EXIT_CHECK_FAILED = 6

SEEDING = f"""\
seeding:
  sample       numpy.random.default_rng(seed)
  exp1-3       trial t (0-based) draws its data from default_rng(seed + t); each
               trial draws max(n_grid) observations once and every n uses the
               leading n rows, so curves over n are nested
  sonar        held-out observation i, class k (order of first appearance)
               uses default_rng([seed, i, k]) for its random splits
Results are merged in trial order, so any --workers value (capped by
${THREADS_ENV}) gives byte-identical output.

exit codes: 0 ok, 2 usage or config, 3 missing file, 4 malformed data,
5 estimator failure, 6 self-test failure, 1 unexpected error
"""

_POS_INT = {"type": "integer", "minimum": 1}
_PATTERN = {
    "oneOf": [
        {"type": "string"},
        {"type": "object", "properties": {"banded": _POS_INT},
         "required": ["banded"], "additionalProperties": False},
        {"type": "object", "properties": {"grid": {
            "type": "array", "items": _POS_INT, "minItems": 2, "maxItems": 2}},
         "required": ["grid"], "additionalProperties": False},
        {"type": "object", "properties": {
            "p": _POS_INT,
            "edges": {"type": "array", "items": {
                "type": "array", "items": _POS_INT, "minItems": 2, "maxItems": 2}}},
         "required": ["edges"], "additionalProperties": False},
    ]
}
_PROPERTIES = {
    "beta": {"type": "number", "exclusiveMinimum": 0},
    "p": _POS_INT,
    "n": {"type": "integer", "minimum": 0},
    "pattern": _PATTERN,
    "n_grid": {"type": "array", "items": _POS_INT, "minItems": 1},
    "trials": _POS_INT,
    "seed": {"type": "integer", "minimum": 0},
    "estimators": {"type": "array", "items": {"enum": list(ESTIMATORS)}, "minItems": 1},
    "data": {"type": "string"},
    "out": {"type": "string"},
    "truth": {"type": "string"},
    "rho": {"enum": ["mggd", "tyler", "huber"]},
    "threshold": {"type": "number", "exclusiveMinimum": 0},
    "method": {"enum": ["auto", "fixed_point", "mm", "direct", "l1", "joint_mean"]},
    "lam": {"type": "number", "minimum": 0},
    "max_iter": _POS_INT,
    "rel_tol": {"type": "number", "exclusiveMinimum": 0},
    "init": {"enum": ["identity", "sample"]},
    "workers": _POS_INT,
    "format": {"enum": ["wide", "long"]},
    "diagnostics": {"type": "string"},
    "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "n_splits": _POS_INT,
    "max_band": _POS_INT,
    "betas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
              "minItems": 1},
    "suites": {"type": "array", "items": {"enum": list(checks.SUITES)}, "minItems": 1},
}
_SWEEP_KEYS = ("trials", "seed", "n_grid", "estimators", "max_iter", "workers",
               "out", "format", "diagnostics")
COMMAND_KEYS = {
    "sample": ("n", "beta", "p", "truth", "seed", "out"),
    "fit": ("data", "rho", "beta", "p", "threshold", "pattern", "method", "lam",
            "max_iter", "rel_tol", "init", "out"),
    "exp1": _SWEEP_KEYS + ("beta",),
    "exp2": _SWEEP_KEYS,
    "exp3": _SWEEP_KEYS,
    "sonar": ("data", "seed", "train_fraction", "n_splits", "max_band", "betas",
              "max_iter", "workers", "out"),
    "selftest": ("suites", "out"),
}
DEFAULTS = {
    "sample": {"n": 100, "beta": 0.5, "truth": "identity", "seed": 0},
    "fit": {"rho": "mggd", "beta": 0.5, "pattern": "full", "method": "auto", "lam": 0.0,
            "max_iter": 30, "rel_tol": 1e-8, "init": "identity"},
    "exp1": {"trials": 500, "seed": 0, "n_grid": [20, 40, 60, 80, 100], "beta": 0.5,
             "max_iter": 30, "format": "wide"},
    "exp2": {"trials": 500, "seed": 0, "n_grid": [20, 40, 60, 80, 100], "max_iter": 30,
             "format": "wide"},
    "exp3": {"trials": 100, "seed": 0, "n_grid": [20, 40, 60, 80, 100], "max_iter": 30,
             "format": "wide"},
    "sonar": {"seed": 0, "train_fraction": SonarConfig.train_fraction,
              "n_splits": SonarConfig.n_splits, "max_band": max(SonarConfig.bands),
              "betas": list(SonarConfig.betas), "max_iter": SonarConfig.max_iter},
    "selftest": {},
}


def config_schema(command):
    keys = COMMAND_KEYS[command]
    return {"type": "object", "properties": {k: _PROPERTIES[k] for k in keys},
            "additionalProperties": False}


def validate_config(command, values):
    """Raise :class:`ConfigError` unless ``values`` fits the schema of ``command``."""
    try:
        jsonschema.validate(values, config_schema(command))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config for {command!r} invalid at {where}: {exc.message}") from None
    return values


def load_config(path, command):
    try:
        values = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return validate_config(command, values)


def resolve_options(command, args):
    """Merge defaults, config file and explicit flags (in that order of precedence)."""
    values = dict(DEFAULTS[command])
    if args.config:
        values.update(load_config(args.config, command))
    flags = {k: v for k, v in vars(args).items()
             if k in COMMAND_KEYS[command] and v is not None}
    values.update(flags)
    return validate_config(command, values)


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _rho_family(opts, p):
    if opts["rho"] == "mggd":
        return mggd_rho(opts["beta"])
    if opts["rho"] == "tyler":
        return tyler_rho(p)
    if "threshold" not in opts:
        raise ConfigError("huber loss needs --threshold")
    return huber_rho(opts["threshold"])


def _truth_matrix(name, p):
    if name == "identity":
        if p is None:
            raise ConfigError("--truth identity needs --p")
        return np.eye(p)
    if name == "exp1":
        return toeplitz_banded_precision(10, 4).scatter
    if name == "exp3":
        return grid_precision(3, 3).scatter
    path = Path(name)
    if not path.exists():
        raise FileNotFoundError(f"scatter file {name} not found")
    S = read_samples_csv(path)
    if S.shape[0] != S.shape[1]:
        raise WrongShape(f"scatter file has shape {S.shape}, expected square")
    return S


def cmd_sample(opts):
    S = _truth_matrix(opts["truth"], opts.get("p"))
    if "p" in opts and opts["p"] != S.shape[0]:
        raise ConfigError(f"--p {opts['p']} disagrees with the {S.shape[0]}x{S.shape[0]} truth")
    X = mggd_sample(opts["n"], np.zeros(S.shape[0]), S, opts["beta"], opts["seed"])
    _emit(write_matrix_csv(X) if X.size else "", opts.get("out"))


def cmd_fit(opts):
    if "data" not in opts:
        raise ConfigError("fit needs a data file")
    if not Path(opts["data"]).exists():
        raise FileNotFoundError(f"data file {opts['data']} not found")
    Z = read_samples_csv(opts["data"])
    p = Z.shape[1]
    if "p" in opts and opts["p"] != p:
        raise DataShapeMismatch(f"data has {p} columns, config says p={opts['p']}")
    f = _rho_family(opts, p)
    G = parse_pattern(opts["pattern"], p)
    cfg = FitConfig(max_iter=opts["max_iter"], rel_tol=opts["rel_tol"], init=opts["init"])
    full = G == SparsityPattern.complete(p)
    method = opts["method"]
    if method == "auto":
        method = "fixed_point" if full else "mm"
    extra = {}
    if method == "fixed_point":
        if not full:
            raise ConfigError("fixed_point estimates an unconstrained scatter; use --pattern full")
        report = fit_fixed_point(Z, f, cfg)
    elif method == "mm":
        report = fit_graphical_mm(Z, f, G, cfg)
    elif method == "direct":
        report = fit_direct_cholesky(Z, f, G)
    elif method == "l1":
        if not full:
            raise ConfigError("the L1 estimator chooses its own support; use --pattern full")
        report = fit_l1_cholesky(Z, f, opts["lam"])
    else:
        report, mu = fit_chordal_joint_mean(Z, f, G, cfg)
        extra["mean"] = mu.tolist()
    out = report.to_dict()
    out.update(extra)
    out["settings"] = {"method": method, "rho": f.name, "beta": f.beta,
                       "huber_threshold": f.huber_threshold, "n": int(Z.shape[0]),
                       "p": p, "pattern": G.to_json_dict()}
    _emit(_json_text(out), opts.get("out"))


def _cmd_sweep(command, opts):
    common = {"trials": opts["trials"], "seed": opts["seed"], "n_grid": opts["n_grid"]}
    if command == "exp1":
        spec = exp1_spec(beta=opts["beta"], **common)
    elif command == "exp2":
        spec = exp2_spec(**common)
    else:
        spec = exp3_spec(**common)
    spec.max_iter = opts["max_iter"]
    if "estimators" in opts:
        spec.estimators = tuple(opts["estimators"])
    table = run_synthetic(spec, workers=opts.get("workers"))
    if opts["format"] == "wide":
        _emit(table.to_wide_csv(spec.estimators), opts.get("out"))
    else:
        _emit(table.to_csv(), opts.get("out"))
    if "diagnostics" in opts:
        diag = dict(table.diagnostics)
        diag["max_init_gap"] = {str(k): v for k, v in diag["max_init_gap"].items()}
        Path(opts["diagnostics"]).write_text(_json_text(diag), encoding="utf-8")
    failures = table.diagnostics["failures"]
    if failures:
        logger.warning("%d estimator fits failed; see --diagnostics", len(failures))


def cmd_sonar(opts):
    if "data" not in opts:
        raise ConfigError(f"sonar needs --data (canonical file: {SONAR_URL})")
    if not Path(opts["data"]).exists():
        raise FileNotFoundError(f"data file {opts['data']} not found")
    data = load_sonar(opts["data"])
    cfg = SonarConfig(bands=tuple(range(1, opts["max_band"] + 1)), betas=tuple(opts["betas"]),
                      n_splits=opts["n_splits"], train_fraction=opts["train_fraction"],
                      max_iter=opts["max_iter"], seed=opts["seed"])
    table = sonar_experiment(data, cfg, workers=opts.get("workers"))
    _emit(table.to_csv(), opts.get("out"))


def cmd_selftest(opts):
    results = checks.run_all(opts.get("suites"))
    _emit("".join(r.line() + "\n" for r in results), opts.get("out"))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


COMMANDS = {
    "sample": cmd_sample,
    "fit": cmd_fit,
    "exp1": lambda o: _cmd_sweep("exp1", o),
    "exp2": lambda o: _cmd_sweep("exp2", o),
    "exp3": lambda o: _cmd_sweep("exp3", o),
    "sonar": cmd_sonar,
    "selftest": cmd_selftest,
}


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _str_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="robust-scatter",
        description="Robust and structured scatter estimation for elliptical data.",
        epilog=SEEDING, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text, epilog=SEEDING,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", help="JSON file with any of this command's options")
        sp.add_argument("--out", help="output file (default: stdout)")
        return sp

    sp = add("sample", "Draw MGGD observations and write them as CSV.")
    sp.add_argument("--n", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--p", type=int, help="dimension (for --truth identity)")
    sp.add_argument("--truth", help="identity, exp1 (banded Toeplitz), exp3 (3x3 grid) "
                                    "or a CSV file holding the scatter")
    sp.add_argument("--seed", type=int)

    sp = add("fit", "Fit one estimator to a headerless CSV dataset; report as JSON.")
    sp.add_argument("data", nargs="?")
    sp.add_argument("--rho", choices=["mggd", "tyler", "huber"])
    sp.add_argument("--beta", type=float)
    sp.add_argument("--p", type=int, help="expected number of columns")
    sp.add_argument("--threshold", type=float, help="Huber threshold")
    sp.add_argument("--pattern", help="full, diagonal, banded:D, grid:RxC or a JSON file")
    sp.add_argument("--method", choices=["auto", "fixed_point", "mm", "direct", "l1",
                                         "joint_mean"])
    sp.add_argument("--lam", type=float, help="L1 penalty (method l1)")
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--rel-tol", dest="rel_tol", type=float)
    sp.add_argument("--init", choices=["identity", "sample"])

    for name, text in (("exp1", "Banded Toeplitz sweep, p=10, band 4, beta 0.5."),
                       ("exp2", "Banded Toeplitz sweep, p=10, band 4, beta 0.2."),
                       ("exp3", "3x3 grid sweep, beta 0.5.")):
        sp = add(name, text + " CSV of mean normalized squared Frobenius error.")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--n-grid", dest="n_grid", type=_int_list, help="e.g. 20,40,60")
        sp.add_argument("--estimators", type=_str_list, help=",".join(ESTIMATORS))
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--format", choices=["wide", "long"],
                        help="wide: n by estimator means; long: adds stderr, trial "
                             "counts and uncorrected Gaussian rows")
        sp.add_argument("--diagnostics", help="JSON file for failures and init gaps")
        if name == "exp1":
            sp.add_argument("--beta", type=float)

    sp = add("sonar", "Leave-one-out QDA error on the SONAR data.")
    sp.add_argument("--data", help=f"path to sonar.all-data ({SONAR_URL})")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--train-fraction", dest="train_fraction", type=float)
    sp.add_argument("--n-splits", dest="n_splits", type=int)
    sp.add_argument("--max-band", dest="max_band", type=int)
    sp.add_argument("--betas", type=_float_list)
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--workers", type=int)

    sp = add("selftest", "Run the randomized invariant suites.")
    sp.add_argument("--suites", type=_str_list, help=",".join(checks.SUITES))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s: %(message)s")
    try:
        opts = resolve_options(args.command, args)
        code = COMMANDS[args.command](opts)
        return EXIT_OK if code is None else code
    except ConfigError as exc:
        return _fail(args.command, EXIT_CONFIG, "config error", exc)
    except FileNotFoundError as exc:
        return _fail(args.command, EXIT_MISSING_FILE, "missing file", exc)
    except (ParseError, WrongShape, DataShapeMismatch, DimensionMismatch) as exc:
        return _fail(args.command, EXIT_BAD_DATA, "bad data", exc)
    except RobustScatterError as exc:
        return _fail(args.command, EXIT_ESTIMATOR, "estimator failure", exc)
    except ValueError as exc:
        return _fail(args.command, EXIT_CONFIG, "invalid value", exc)


def _fail(command, code, kind, exc):
    print(f"robust-scatter {command}: {kind}: {exc}", file=sys.stderr)
    return code

if __name__ == "__main__":
    sys.exit(main())
