"""Command-line frontend.

Exit codes: 0 ok, 2 usage or parse error, 3 sample not realizable,
4 an asserted invariant failed, 5 a search budget was exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from . import __version__, bounds
from .classes import (
    BINARY,
    DEFAULT_BUDGET,
    MULTICLASS,
    PARTIAL,
    REAL,
    STAR,
    Budget,
    HypothesisClass,
    ds_dimension,
    fat_dimension,
    load_class,
    load_sample,
    v_gamma_dimension,
    vc_dimension,
)
from .corpus import builtin_class
from .errors import AssertionFailure, BudgetExceeded, InvalidArgument, OigLabError, ParseError
from .harness import (
    PROCESSES,
    SETTINGS,
    FiniteDistribution,
    run_pac_experiment,
    slack,
    verify_martingale_bounds,
)
from .hypergraph import densest_projection, max_density, projected_graph
from .orientation import min_out_degree_orientation, orient, orientation_to_json
from .predictors import VARIANTS, loo_audit, make_predictor

CONFIG_KEYS = {
    "class",
    "builtin",
    "weights",
    "target",
    "n",
    "delta",
    "trials",
    "seed",
    "setting",
    "gamma",
    "assert",
    "plot",
    "threads",
    "lambda",
    "eta",
    "budget",
}
ASSERTIONS = ("bound", "quantile", "forward", "reverse", "loo")

DEMO_CONFIG = {
    "builtin": {"name": "thresholds", "k": 8},
    "weights": "uniform",
    "target": 4,
    "n": [16, 32, 64],
    "delta": [0.1],
    "trials": 200,
    "seed": 7,
    "setting": "binary",
    "assert": ["bound", "quantile", "forward", "reverse", "loo"],
    "plot": True,
}


def _text(v) -> str:
    if v is STAR:
        return "*"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if v is STAR:
        return "*"
    return v


def _emit(obj) -> None:
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def header_line(seed, chash: str) -> str:
    return f"# oig-lab {__version__} seed={seed} config={chash}"


def _budget_from(args_or_dict) -> Budget:
    overrides = args_or_dict or {}
    unknown = set(overrides) - set(Budget.__dataclass_fields__)
    if unknown:
        raise InvalidArgument(f"unknown budget keys: {sorted(unknown)}")
    for k, v in overrides.items():
        if not isinstance(v, int) or v < 1:
            raise InvalidArgument(f"budget {k} must be a positive integer")
    return replace(DEFAULT_BUDGET, **overrides)


def _budget_arg(items) -> Budget:
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidArgument(f"--budget expects key=value, got {item!r}")
        try:
            overrides[key.strip()] = int(value)
        except ValueError:
            raise InvalidArgument(f"budget {key} must be an integer") from None
    return _budget_from(overrides)


# ---------------------------------------------------------------------------
# subcommands


def cmd_dims(args) -> int:
    cls = load_class(args.class_file)
    out = {"alphabet": cls.alphabet, "rows": len(cls), "domain_size": cls.domain_size}
    budget = _budget_arg(args.budget)

    def attempt(name, fn, secondary=False):
        try:
            out[name] = fn().as_dict()
        except BudgetExceeded as exc:
            if not (args.lenient or secondary):
                raise
            out[name] = {"skipped": str(exc)}

    if cls.alphabet == BINARY:
        attempt("vc", lambda: vc_dimension(cls, budget))
        # DS equals VC on binary classes, so an over-budget DS search is not fatal here
        attempt("ds", lambda: ds_dimension(cls, budget), secondary=True)
    elif cls.alphabet == PARTIAL:
        attempt("vc", lambda: vc_dimension(cls, budget))
    elif cls.alphabet == MULTICLASS:
        attempt("ds", lambda: ds_dimension(cls, budget))
    else:
        if args.gamma is None:
            raise InvalidArgument("a real-valued class needs --gamma")
        out["gamma"] = args.gamma
        attempt("fat_v", lambda: v_gamma_dimension(cls, args.gamma, budget))
        attempt("fat", lambda: fat_dimension(cls, args.gamma, budget))
    _emit(out)
    return 0


def cmd_density(args) -> int:
    cls = load_class(args.class_file)
    prune = cls.alphabet == PARTIAL
    n = args.n or cls.domain_size
    budget = _budget_arg(args.budget)
    mu, pts = densest_projection(cls, n, budget, prune_star=prune)
    out = {"n": n, "dens_n": str(mu), "ceil_dens_n": -(-mu.numerator // mu.denominator), "witness_points": list(pts)}
    if pts:
        g = projected_graph(cls, pts, prune)
        out["witness_graph"] = max_density(g, budget).as_dict()
    _emit(out)
    return 0


def _points_arg(text: str | None, cls: HypothesisClass) -> tuple[int, ...]:
    if not text:
        return tuple(range(cls.domain_size))
    try:
        return tuple(sorted({int(p) for p in text.split(",")}))
    except ValueError:
        raise InvalidArgument(f"--points expects comma-separated integers, got {text!r}") from None


def cmd_orient(args) -> int:
    cls = load_class(args.class_file)
    if cls.alphabet == REAL:
        raise InvalidArgument("orient needs a discrete class")
    pts = _points_arg(args.points, cls)
    g = projected_graph(cls, pts, cls.alphabet == PARTIAL)
    if g is None:
        raise InvalidArgument("every row abstains on the chosen points")
    if args.d is None:
        d, o = min_out_degree_orientation(g)
    else:
        d, o = args.d, orient(g, args.d)
    out = {"points": list(pts), "d": d, "feasible": o is not None}
    if o is not None:
        out["max_out_degree"] = o.max_out_degree
        out["graph"] = orientation_to_json(g, o)
    _emit(out)
    return 0


def _predictor_and_sample(args):
    cls = load_class(args.class_file)
    s = load_sample(args.sample_file, cls.alphabet)
    pred = make_predictor(cls, args.variant, args.gamma)
    return cls, s, pred


def _loo_rows(pred, s, bound=None):
    audit = loo_audit(pred, s, bound=bound)
    rows = [
        {"index": i, "point": p, "label": y, "prediction": pred.predict(s.without(i), p), "loss": audit.losses[i]}
        for i, (p, y) in enumerate(s.entries)
    ]
    return audit, rows


def cmd_predict(args) -> int:
    cls, s, pred = _predictor_and_sample(args)
    value = pred.predict(s, args.point)
    if not args.audit:
        print(_text(value))
        return 0
    audit, rows = _loo_rows(pred, s, args.bound)
    _emit({"prediction": value, "loo": rows, "loo_total": audit.total, "bound": args.bound, "within_bound": audit.within_bound})
    return 0


def cmd_loo(args) -> int:
    _, s, pred = _predictor_and_sample(args)
    audit, rows = _loo_rows(pred, s, args.bound)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["index", "point", "label", "prediction", "loss"])
    for r in rows:
        w.writerow([_text(r[k]) for k in ("index", "point", "label", "prediction", "loss")])
    w.writerow(["total", "", "", "", _text(audit.total)])
    if audit.within_bound is False:
        raise AssertionFailure(f"LOO total {audit.total} exceeds bound {args.bound}")
    return 0


def _num_list(text: str, kind=float) -> list:
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgument(f"expected a comma-separated list, got {text!r}") from None


def cmd_bounds(args) -> int:
    ns = _num_list(args.n, int)
    deltas = _num_list(args.delta)
    w = csv.writer(sys.stdout, lineterminator="\n")
    coef_m, coef_log = bounds.main_constant(args.lam, args.eta)
    print(f"# C={max(coef_m, coef_log)!r} coef_M={coef_m!r} coef_log={coef_log!r}")
    w.writerow(["setting", "n", "delta", "bound"])
    for n in ns:
        for delta in deltas:
            p = bounds.BoundParams(
                n, delta, args.lam, args.eta, m_n=args.m_n, d=args.d, ceil_dens=args.ceil_dens, gamma=args.gamma, fat_v=args.fat_v
            )
            w.writerow([args.setting, n, repr(delta), repr(bounds.risk_bound(args.setting, p))])
    return 0


# experiment -----------------------------------------------------------------


def load_config(path: str | None, demo: bool) -> dict:
    if demo:
        cfg = json.loads(json.dumps(DEMO_CONFIG))
    elif path:
        try:
            cfg = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc}") from None
    else:
        raise InvalidArgument("experiment needs a config file or --demo")
    if not isinstance(cfg, dict):
        raise InvalidArgument("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
    return cfg


def resolve_experiment(cfg: dict, base_dir: Path):
    """Validate a config and build (class, distribution, normalized config)."""
    if ("class" in cfg) == ("builtin" in cfg):
        raise InvalidArgument("config needs exactly one of 'class' and 'builtin'")
    if "class" in cfg:
        path = Path(cfg["class"])
        cls = load_class(path if path.is_absolute() else base_dir / path)
    else:
        b = cfg["builtin"]
        if not isinstance(b, dict) or set(b) - {"name", "k"} or "name" not in b:
            raise InvalidArgument("'builtin' must be an object with 'name' and optional 'k'")
        cls = builtin_class(b["name"], int(b.get("k", 8)))
    setting = cfg.get("setting", cls.alphabet if cls.alphabet != REAL else "regression")
    if setting not in SETTINGS:
        raise InvalidArgument(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    target = cfg.get("target", 0)
    if isinstance(target, list):
        target = cls.row_index(tuple(Fraction(str(v)) if cls.alphabet == REAL else v for v in target))
    if not isinstance(target, int):
        raise InvalidArgument("'target' must be a row index or a row")
    weights = cfg.get("weights", "uniform")
    if weights == "uniform":
        dist = FiniteDistribution.uniform(cls, target)
    else:
        if not isinstance(weights, list):
            raise InvalidArgument("'weights' must be 'uniform' or a list of numbers")
        dist = FiniteDistribution(cls, tuple(float(Fraction(str(w))) for w in weights), target)
    ns = cfg.get("n", [32])
    deltas = cfg.get("delta", [0.1])
    ns = ns if isinstance(ns, list) else [ns]
    deltas = deltas if isinstance(deltas, list) else [deltas]
    if not ns or any(not isinstance(n, int) or n < 4 for n in ns):
        raise InvalidArgument("'n' must list integers >= 4")
    if not deltas or any(not 0 < d < 1 for d in deltas):
        raise InvalidArgument("'delta' values must lie in (0, 1)")
    trials = cfg.get("trials", 100)
    if not isinstance(trials, int) or trials < 1:
        raise InvalidArgument("'trials' must be a positive integer")
    asserts = cfg.get("assert", [])
    bad = set(asserts) - set(ASSERTIONS)
    if bad:
        raise InvalidArgument(f"unknown assertions {sorted(bad)}; expected some of {ASSERTIONS}")
    if setting == "regression" and cfg.get("gamma") is None:
        raise InvalidArgument("the regression setting needs 'gamma'")
    norm = dict(cfg)
    norm.update(setting=setting, n=ns, delta=deltas, trials=trials, seed=cfg.get("seed", 0), target=target)
    return cls, dist, norm


TRIAL_COLUMNS = [
    "setting", "n", "delta", "trial", "risk", "bound_violated",
    "suffix_risk_sum", "suffix_loss_sum", "loo_total", "forward_ok", "reverse_ok",
]
SUMMARY_COLUMNS = [
    "setting", "n", "delta", "trials", "m_n", "bound", "median", "quantile", "max_risk",
    "violations", "violation_frequency", "tolerance", "forward_violations",
    "reverse_violations", "max_loo", "loo_cap",
]


def _write_csv(path: Path, header: str, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_text(r[c]) for c in columns])
    path.write_text(buf.getvalue())


def run_experiment_config(cfg: dict, out_dir: Path, base_dir: Path, threads=None, plot=None):
    cls, dist, norm = resolve_experiment(cfg, base_dir)
    budget = _budget_from(norm.get("budget"))
    chash = config_hash(norm)
    header = header_line(norm["seed"], chash)
    out_dir.mkdir(parents=True, exist_ok=True)
    trial_rows, summary_rows, failures = [], [], []
    gamma = norm.get("gamma")
    lam = norm.get("lambda", bounds.LAMBDA)
    eta = norm.get("eta", bounds.ETA)
    for n in norm["n"]:
        for delta in norm["delta"]:
            st = run_pac_experiment(
                cls, dist, n, delta, norm["trials"], norm["setting"], norm["seed"], gamma,
                budget=budget, threads=threads or norm.get("threads"), lam=lam, eta=eta,
            )
            for r in st.records:
                trial_rows.append({
                    "setting": st.setting, "n": n, "delta": delta, "trial": r.trial, "risk": r.risk,
                    "bound_violated": int(r.risk > st.bound), "suffix_risk_sum": r.suffix_risk_sum,
                    "suffix_loss_sum": r.suffix_loss_sum, "loo_total": r.loo_total,
                    "forward_ok": int(r.forward_ok), "reverse_ok": int(r.reverse_ok),
                })
            summary_rows.append({
                "setting": st.setting, "n": n, "delta": delta, "trials": st.trials, "m_n": st.m_n,
                "bound": st.bound, "median": st.median, "quantile": st.quantile,
                "max_risk": st.quantiles[1.0], "violations": st.violations,
                "violation_frequency": st.violation_frequency, "tolerance": st.tolerance,
                "forward_violations": st.forward_violations, "reverse_violations": st.reverse_violations,
                "max_loo": st.max_loo, "loo_cap": st.loo_cap,
            })
            failures += _check_assertions(st, norm.get("assert", []))
    _write_csv(out_dir / "trials.csv", header, TRIAL_COLUMNS, trial_rows)
    _write_csv(out_dir / "summary.csv", header, SUMMARY_COLUMNS, summary_rows)
    paths = [out_dir / "trials.csv", out_dir / "summary.csv"]
    if plot if plot is not None else norm.get("plot", False):
        from .plotting import quantile_plot

        svg = quantile_plot(summary_rows, out_dir / "quantiles.svg", title=f"{norm['setting']} setting")
        _stamp_svg(svg, header)
        paths.append(svg)
    return paths, summary_rows, failures


def _stamp_svg(path: Path, header: str) -> None:
    text = path.read_text()
    first, _, rest = text.partition("\n")
    path.write_text(f"{first}\n<!-- {header.lstrip('# ')} -->\n{rest}")


def _check_assertions(st, names) -> list[str]:
    fails = []
    tag = f"{st.setting} n={st.n} delta={st.delta}"
    tol = st.delta + slack(st.delta, st.trials)
    if "bound" in names and st.violation_frequency > tol:
        fails.append(f"{tag}: bound violated in {st.violation_frequency:.4f} of trials > {tol:.4f}")
    if "quantile" in names and st.quantile > st.bound:
        fails.append(f"{tag}: (1-delta) quantile {st.quantile:.4f} exceeds bound {st.bound:.4f}")
    if "forward" in names and st.forward_frequency > tol:
        fails.append(f"{tag}: forward inequality failed in {st.forward_frequency:.4f} of trials")
    if "reverse" in names and st.reverse_frequency > tol:
        fails.append(f"{tag}: reverse inequality failed in {st.reverse_frequency:.4f} of trials")
    if "loo" in names and st.max_loo > st.loo_cap + 1e-9:
        fails.append(f"{tag}: LOO total {st.max_loo} exceeds cap {st.loo_cap}")
    return fails


def cmd_experiment(args) -> int:
    cfg = load_config(args.config, args.demo)
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.seed is not None:
        cfg["seed"] = args.seed
    base = Path(args.config).parent if args.config else Path.cwd()
    plot = False if args.no_plot else None
    paths, summary, failures = run_experiment_config(cfg, Path(args.out), base, args.threads, plot)
    for r in summary:
        print(
            f"{r['setting']} n={r['n']} delta={r['delta']}: quantile={r['quantile']:.4f} "
            f"bound={r['bound']:.4f} violations={r['violations']}/{r['trials']}"
        )
    for p in paths:
        print(f"wrote {p}")
    if failures:
        raise AssertionFailure("; ".join(failures))
    return 0


def cmd_verify_martingale(args) -> int:
    processes = PROCESSES if args.process == "all" else (args.process,)
    deltas = _num_list(args.delta)
    reports = [
        verify_martingale_bounds(p, args.lam, args.eta, d, args.trials, args.seed, args.steps)
        for p in processes
        for d in deltas
    ]
    header = header_line(args.seed, config_hash({"processes": processes, "deltas": deltas, "trials": args.trials, "steps": args.steps, "lambda": args.lam, "eta": args.eta}))
    cols = ["process", "delta", "trials", "steps", "upper_violations", "lower_violations", "upper_frequency", "lower_frequency", "tolerance"]
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in reports:
        d = r.as_dict()
        w.writerow([_text(d[c]) for c in cols])
    sys.stdout.write(buf.getvalue())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "martingale.csv").write_text(buf.getvalue())
        if not args.no_plot:
            from .plotting import martingale_plot

            _stamp_svg(martingale_plot([r.as_dict() for r in reports], out / "martingale.svg"), header)
    bad = [r for r in reports if not r.ok]
    if bad:
        raise AssertionFailure(", ".join(f"{r.process} delta={r.delta}" for r in bad) + " exceeded tolerance")
    return 0


# ---------------------------------------------------------------------------
# parser


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oig-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"oig-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dims", help="dimensions of a class file, as JSON")
    p.add_argument("class_file")
    p.add_argument("--gamma", type=_fraction)
    p.add_argument("--lenient", action="store_true", help="report over-budget searches instead of failing")
    p.add_argument("--budget", action="append", metavar="KEY=VALUE", help="override a search budget")
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("density", help="dens_n of a class and its densest projection")
    p.add_argument("class_file")
    p.add_argument("--n", type=int)
    p.add_argument("--budget", action="append", metavar="KEY=VALUE", help="override a search budget")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("orient", help="orient the one-inclusion graph of a projection")
    p.add_argument("class_file")
    p.add_argument("--points", help="comma-separated domain points (default: all)")
    p.add_argument("--d", type=int, help="out-degree bound (default: the smallest feasible)")
    p.set_defaults(func=cmd_orient)

    for name, func, helptext in (("predict", cmd_predict, "predict one point"), ("loo", cmd_loo, "leave-one-out table as CSV")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("class_file")
        p.add_argument("sample_file")
        p.add_argument("--variant", choices=VARIANTS, default="oig")
        p.add_argument("--gamma", type=_fraction)
        p.add_argument("--bound", type=_fraction, help="LOO total to check against")
        if name == "predict":
            p.add_argument("--point", type=int, required=True)
            p.add_argument("--audit", action="store_true", help="add the leave-one-out table")
        p.set_defaults(func=func)

    p = sub.add_parser("bounds", help="bound values over a grid, as CSV")
    p.add_argument("--setting", choices=bounds.SETTINGS, default="main")
    p.add_argument("--n", default="16,32,64,128,256")
    p.add_argument("--delta", default="0.05,0.1")
    p.add_argument("--lam", type=float, default=bounds.LAMBDA)
    p.add_argument("--eta", type=float, default=bounds.ETA)
    p.add_argument("--m-n", dest="m_n", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--ceil-dens", dest="ceil_dens", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--fat-v", dest="fat_v", type=int)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", help="run a PAC experiment from a JSON config")
    p.add_argument("config", nargs="?")
    p.add_argument("--demo", action="store_true", help="use the built-in demo config")
    p.add_argument("--out", default="oig-lab-out")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify-martingale", help="simulate the tail inequalities for adapted processes")
    p.add_argument("--process", choices=(*PROCESSES, "all"), default="all")
    p.add_argument("--delta", default="0.05,0.1")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lam", type=float, default=bounds.LAMBDA)
    p.add_argument("--eta", type=float, default=bounds.ETA)
    p.add_argument("--out")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_verify_martingale)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except OigLabError as exc:
        print(f"oig-lab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, UnicodeDecodeError) as exc:
        print(f"oig-lab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
