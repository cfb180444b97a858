"""Command-line front end.

Every command writes a CSV (or JSON) result file plus a sidecar manifest
``<out>.manifest.json`` holding the command, parameters and seed.  Wall-clock
time goes to a separate ``<out>.timing.json`` so that reruns with the same
arguments produce byte-identical result and manifest files.

Exit codes: 0 pass, 1 statistical failure, 2 usage error, 3 internal error.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import QUANTILES, infinite_width_update, iterate, predict_trajectory
from .errors import AccuracyNotReached, DomainError, SchemaError
from .jfuncs import j_closed

SCHEMA_VERSION = 1
THREADS_ENV = "RELU_ANGLE_THREADS"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

Q_COLUMNS = [f"q{int(round(100 * q)):02d}" for q in QUANTILES]


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if not math.isfinite(x):
        return "nan"
    return "%.17g" % x


def _json_value(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_, int, np.integer)):
        return int(x)
    x = float(x)
    return float(fmt(x)) if math.isfinite(x) else None


def write_result(path, command, params, columns, rows, fmt_name="csv", started=None):
    path = Path(path)
    manifest = {
        "command": command,
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "columns": columns,
    }
    try:
        if path.parent and not path.parent.exists():
            raise OSError(f"directory does not exist: {path.parent}")
        if fmt_name == "json":
            doc = {"manifest": manifest,
                   "rows": [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows]}
            path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([fmt(v) for v in r])
            path.write_text(buf.getvalue())
        Path(str(path) + ".manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        if started is not None:
            Path(str(path) + ".timing.json").write_text(
                json.dumps({"duration_s": time.perf_counter() - started}) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_table(path):
    """Read a CSV produced by this tool into {column: list of str}."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    head, body = rows[0], rows[1:]
    return {c: [r[i] for r in body] for i, c in enumerate(head)}


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _widths(args):
    if args.widths:
        widths = _ints(args.widths)
        if args.depth is not None and args.depth != len(widths):
            raise UsageError("--depth disagrees with the number of --widths")
        return widths
    if args.depth is None or args.width is None:
        raise UsageError("give either --widths or both --width and --depth")
    if args.depth < 0:
        raise UsageError("--depth must be non-negative")
    return [args.width] * args.depth


def _threads(args):
    if getattr(args, "threads", None):
        return args.threads
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------- jtable


def cmd_jtable(args):
    started = time.perf_counter()
    thetas = _floats(args.thetas)
    if args.max_a < 0 or args.max_b < 0:
        raise UsageError("index bounds must be non-negative")
    if any(not 0 <= t <= math.pi for t in thetas):
        raise UsageError("angles must lie in [0, pi]")
    columns = ["a", "b", "theta", "value"]
    if args.verify:
        from .oracle import j_quadrature

        columns += ["quadrature", "abs_diff"]
    rows = []
    for a in range(args.max_a + 1):
        for b in range(args.max_b + 1):
            for t in thetas:
                v = j_closed((a, b), t)
                row = [a, b, t, v]
                if args.verify:
                    q = j_quadrature((a, b), t, target_abs_err=args.tolerance).estimate
                    row += [q, abs(q - v)]
                rows.append(row)
    params = {"max_a": args.max_a, "max_b": args.max_b, "thetas": thetas, "verify": args.verify,
              "tolerance": args.tolerance, "format": args.format}
    write_result(args.out, "jtable", params, columns, rows, args.format, started)
    return EXIT_OK


# ---------------------------------------------------------------- predict

PREDICT_COLUMNS = ["predictor", "layer", "width", "mean", "std", *Q_COLUMNS, "theta", "count", "clamped"]


def _gauss_quantiles(mean, std):
    from statistics import NormalDist

    z = [NormalDist().inv_cdf(q) for q in QUANTILES]
    return [mean + zi * std for zi in z]


def prediction_rows(theta0, widths, ensemble, seed, include_rho=True):
    rows = []
    sched = [0] + list(widths)

    def emit(name, mean, std, quant, theta, count, clamped):
        for ell in range(len(mean)):
            rows.append([name, ell, sched[ell], mean[ell], std[ell], *quant[ell], theta[ell],
                         count, clamped[ell]])

    depth = len(widths)
    zeros = [0] * (depth + 1)

    simple = predict_trajectory(theta0, widths, mode="simple", include_rho=include_rho)
    emit("approx1", simple.mean, np.zeros(depth + 1), [[m] * len(QUANTILES) for m in simple.mean],
         simple.theta, 0, zeros)

    chain = predict_trajectory(theta0, widths, mode="mean-chain", include_rho=include_rho)
    std = chain.std
    emit("mean_chain", chain.mean, std, [_gauss_quantiles(m, s) for m, s in zip(chain.mean, std)],
         chain.theta, 0, zeros)

    samp = predict_trajectory(theta0, widths, mode="gaussian-sampling", ensemble=ensemble, seed=seed,
                              include_rho=include_rho)
    emit("sampling", samp.mean, samp.std, samp.quantiles, samp.theta, ensemble, samp.clamped)

    th = iterate(infinite_width_update, theta0, depth)
    with np.errstate(divide="ignore"):
        mean = np.log(np.sin(th) ** 2)
    emit("infinite_width", mean, np.zeros(depth + 1), [[m] * len(QUANTILES) for m in mean], th, 0, zeros)
    return rows


def cmd_predict(args):
    started = time.perf_counter()
    widths = _widths(args)
    if not 0 < args.theta0 <= math.pi / 2:
        raise UsageError("theta0 must lie in (0, pi/2]")
    if args.ensemble < 2:
        raise UsageError("--ensemble must be at least 2")
    try:
        rows = prediction_rows(args.theta0, widths, args.ensemble, args.seed, include_rho=not args.no_rho)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    params = {"theta0": args.theta0, "widths": widths, "ensemble": args.ensemble, "seed": args.seed,
              "include_rho": not args.no_rho, "format": args.format}
    write_result(args.out, "predict", params, PREDICT_COLUMNS, rows, args.format, started)
    return EXIT_OK


# ---------------------------------------------------------------- simulate

SIMULATE_COLUMNS = ["layer", "width", "mean", "variance", "std", *Q_COLUMNS, "theta_mean",
                    "degenerate", "count"]


def cmd_simulate(args):
    from .simulate import NetworkConfig, run_ensemble

    started = time.perf_counter()
    widths = _widths(args)
    if not 0 <= args.theta0 <= math.pi:
        raise UsageError("theta0 must lie in [0, pi]")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    if not widths:
        raise UsageError("need at least one layer")
    if any(w < 1 for w in widths):
        raise UsageError("widths must be positive")
    cfg = NetworkConfig(widths=tuple(widths), input_dim=args.input_dim, seed=args.seed)
    stats = run_ensemble(cfg, args.theta0, args.trials, keep_raw=bool(args.keep_raw),
                         workers=_threads(args))
    sched = [args.input_dim] + widths
    rows = []
    for ell in range(len(widths) + 1):
        used = args.trials - int(stats.degenerate[ell])
        rows.append([ell, sched[ell], stats.mean[ell], stats.variance[ell],
                     math.sqrt(stats.variance[ell]) if stats.variance[ell] >= 0 else float("nan"),
                     *stats.quantiles[ell], stats.theta_mean[ell], int(stats.degenerate[ell]), used])
    params = {"theta0": args.theta0, "widths": widths, "trials": args.trials, "seed": args.seed,
              "input_dim": args.input_dim, "format": args.format}
    write_result(args.out, "simulate", params, SIMULATE_COLUMNS, rows, args.format, started)
    if args.keep_raw:
        raw_cols = ["trial"] + [f"layer_{ell}" for ell in range(len(widths) + 1)]
        raw_rows = [[k, *stats.raw[k]] for k in range(args.trials)]
        write_result(args.keep_raw, "simulate-raw", params, raw_cols, raw_rows, "csv")
    return EXIT_OK


# ---------------------------------------------------------------- compare

COMPARE_COLUMNS = ["layer", "n_sim", "sim_mean", "sim_var", "pred_mean", "pred_var", "ks_statistic",
                   "ks_p_value", "mean_z", "var_z", "ks_pass", "mean_pass", "var_pass", "pass"]


def _column(table, name, path):
    if name not in table:
        raise SchemaError(f"{path}: missing column {name!r}")
    return table[name]


def load_prediction(path, predictor):
    table = read_table(path)
    layers = [int(v) for v in _column(table, "layer", path)]
    mean = [float(v) for v in _column(table, "mean", path)]
    std = [float(v) for v in _column(table, "std", path)]
    count = [float(v) for v in _column(table, "count", path)]
    if "predictor" in table:
        keep = [i for i, p in enumerate(table["predictor"]) if p == predictor]
        if not keep:
            raise SchemaError(f"{path}: no rows for predictor {predictor!r}")
    else:
        keep = range(len(layers))
    return {layers[i]: (mean[i], std[i], count[i]) for i in keep}


def load_raw(path):
    table = read_table(path)
    out = {}
    for c, vals in table.items():
        if c.startswith("layer_"):
            out[int(c[len("layer_"):])] = np.array([float(v) for v in vals])
    if not out:
        raise SchemaError(f"{path}: no layer_<k> columns")
    return out


def compare_layer(sim, pred, alpha):
    from statistics import NormalDist

    from .stats import ks_test_normal

    x = sim[np.isfinite(sim)]
    m = x.size
    mu, sd, count = pred
    z = NormalDist().inv_cdf(1 - alpha / 2)
    s2 = float(x.var(ddof=1)) if m > 1 else float("nan")
    c = x - x.mean()
    se_var_sim = math.sqrt(max(float(np.mean(c ** 4)) - s2 * s2, 0.0) / m) if m > 1 else float("nan")
    pred_var = sd * sd
    se_mean = math.sqrt(s2 / m + (pred_var / count if count > 1 else 0.0))
    se_var = math.sqrt(se_var_sim ** 2 + (2 * pred_var ** 2 / (count - 1) if count > 1 else 0.0))
    mean_z = abs(float(x.mean()) - mu) / se_mean if se_mean > 0 else (0.0 if x.mean() == mu else math.inf)
    var_z = abs(s2 - pred_var) / se_var if se_var > 0 else (0.0 if s2 == pred_var else math.inf)
    try:
        ks = ks_test_normal(x, mu, sd)
        d, p = ks.statistic, ks.p_value
    except DomainError:
        # a degenerate predicted law cannot match a non-degenerate sample
        d, p = float("nan"), 0.0
    ks_pass = p > alpha
    mean_pass = mean_z <= z
    var_pass = var_z <= z
    return [m, float(x.mean()), s2, mu, pred_var, d, p, mean_z, var_z,
            ks_pass, mean_pass, var_pass, ks_pass and mean_pass and var_pass]


def cmd_compare(args):
    started = time.perf_counter()
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    pred = load_prediction(args.prediction, args.predictor)
    raw = load_raw(args.raw)
    layers = _ints(args.layers) if args.layers else sorted(k for k in raw if k > 0)
    rows = []
    for ell in layers:
        if ell not in raw:
            raise SchemaError(f"{args.raw}: missing column 'layer_{ell}'")
        if ell not in pred:
            raise SchemaError(f"{args.prediction}: no prediction for layer {ell}")
        rows.append([ell] + compare_layer(raw[ell], pred[ell], args.alpha))
    params = {"prediction": str(args.prediction), "raw": str(args.raw), "layers": layers,
              "alpha": args.alpha, "predictor": args.predictor, "seed": None}
    write_result(args.out, "compare", params, COMPARE_COLUMNS, rows, "csv", started)
    ok = all(r[-1] for r in rows)
    for r in rows:
        print(f"layer {r[0]:>4}  KS p={r[7]:.4g}  mean z={r[8]:.3g}  var z={r[9]:.3g}  "
              f"{'pass' if r[-1] else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- validate

SUITES = ("bessel", "jfuncs", "paths", "patterns", "irreducible")


def _suite_bessel(budget):
    from .bessel import bessel_P, bessel_P_rec, bessel_Q, bessel_Q_rec

    ok = all(bessel_P(a, b) == bessel_P_rec(a, b) and bessel_Q(a, b) == bessel_Q_rec(a, b)
             for a in range(31) for b in range(a + 1))
    yield "closed == recursion, a <= 30", ok
    yield "P(6, 0..6 step 2) == 15, 45, 15, 1", [bessel_P(6, k) for k in (0, 2, 4, 6)] == [15, 45, 15, 1]
    yield "Q(5, 1..5 step 2) == 33, 14, 1", [bessel_Q(5, k) for k in (1, 3, 5)] == [33, 14, 1]


def _suite_jfuncs(budget):
    from .jfuncs import j_recursive
    from .oracle import j_quadrature

    grid = np.linspace(0, math.pi, 102)[1:-1]
    worst = 0.0
    for a in range(15):
        for b in range(15 - a):
            r = j_recursive((a, b), grid)
            c = j_closed((a, b), grid)
            worst = max(worst, float(np.max(np.abs(r - c) / np.maximum(np.abs(c), 1e-300))))
    yield "recursive == closed, a+b <= 14", worst <= 1e-10
    for t in (0.3, 1.5, 2.8):
        for a, b in ((1, 1), (2, 3), (4, 4)):
            try:
                q = j_quadrature((a, b), t, target_abs_err=1e-11, max_nodes=budget).estimate
            except AccuracyNotReached:
                yield f"quadrature J({a},{b}; {t})", None
                continue
            yield f"quadrature J({a},{b}; {t})", abs(q - j_closed((a, b), t)) <= 1e-8


def _suite_paths(budget):
    from .bessel import bessel_P, bessel_Q
    from .combinatorics import expected_J_weight, path_weight_sum

    ok_star = ok_j = True
    for a in range(1, 9):
        for b in range(a, 13):
            for n in range(b + 1):
                w0 = path_weight_sum("J*", (0, n), (a, b)).get(0, 0)
                w1 = path_weight_sum("J*", (1, n), (a, b)).get(0, 0)
                ok_star &= w0 == bessel_P(a, b - n) and w1 == bessel_Q(a - 1, b - n)
                if a >= 2:
                    for row in (0, 1):
                        ok_j &= path_weight_sum("J", (row, n), (a, b)) == expected_J_weight((row, n), (a, b))
    yield "J* path sums == P, Q", ok_star
    yield "J path sums == closed weights", ok_j
    yield "J* (0,6)->(6,8) == 45", path_weight_sum("J*", (0, 6), (6, 8)) == {0: 45}
    yield "J* (1,7)->(6,8) == 33", path_weight_sum("J*", (1, 7), (6, 8)) == {0: 33}


def _suite_patterns(budget):
    from .combinatorics import pattern_table_check

    for table in ("var_R", "var_Rsin2", "cov"):
        worst = max(pattern_table_check(table, n, t) for n in (2, 4, 6) for t in (0.1, 1.0, 2.5))
        yield f"{table} residual", worst <= 1e-10


def _suite_irreducible(budget):
    from .combinatorics import count_irreducible, irreducible_polynomial
    from .errors import BudgetExceeded

    for k, ns in ((2, range(2, 9)), (3, range(2, 7)), (4, range(2, 5))):
        for n in ns:
            try:
                got = count_irreducible(k, n, budget=budget)
            except BudgetExceeded:
                yield f"k={k} n={n}", None
                continue
            yield f"k={k} n={n}", got == irreducible_polynomial(k, n)


_SUITE_FUNCS = {"bessel": _suite_bessel, "jfuncs": _suite_jfuncs, "paths": _suite_paths,
                "patterns": _suite_patterns, "irreducible": _suite_irreducible}


def run_suites(names, budget):
    results = []
    for name in names:
        for label, ok in _SUITE_FUNCS[name](budget):
            results.append((name, label, "skip" if ok is None else ("pass" if ok else "FAIL")))
    return results


def cmd_validate(args):
    started = time.perf_counter()
    if args.suite != "all" and args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES + ('all',))}")
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = run_suites(names, args.budget)
    width = max(len(r[1]) for r in results)
    for suite, label, status in results:
        print(f"{suite:<12} {label:<{width}}  {status}")
    if args.out:
        write_result(args.out, "validate", {"suite": args.suite, "budget": args.budget, "seed": None},
                     ["suite", "check", "status"], results, "csv", started)
    return EXIT_FAIL if any(r[2] == "FAIL" for r in results) else EXIT_OK


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="relu-angle", description="Angle statistics of deep ReLU networks at initialization.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    j = sub.add_parser("jtable", help="grid of J(a, b; theta) values")
    j.add_argument("--max-a", type=int, default=3)
    j.add_argument("--max-b", type=int, default=3)
    j.add_argument("--thetas", default="0,0.7853981633974483,1.5707963267948966,3.141592653589793")
    j.add_argument("--verify", action="store_true", help="add quadrature and abs_diff columns")
    j.add_argument("--tolerance", type=float, default=1e-10)
    j.add_argument("--format", choices=("csv", "json"), default="csv")
    j.add_argument("--out", required=True)
    j.set_defaults(func=cmd_jtable)

    def schedule(sp):
        sp.add_argument("--theta0", type=float, required=True)
        sp.add_argument("--width", type=int)
        sp.add_argument("--depth", type=int)
        sp.add_argument("--widths", help="comma separated widths, overrides --width")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", required=True)

    pr = sub.add_parser("predict", help="per-layer predictions of ln sin^2(theta)")
    schedule(pr)
    pr.add_argument("--ensemble", type=int, default=5000)
    pr.add_argument("--no-rho", action="store_true", help="drop the finite-width correction")
    pr.set_defaults(func=cmd_predict)

    si = sub.add_parser("simulate", help="Monte Carlo over random networks")
    schedule(si)
    si.add_argument("--trials", type=int, default=1000)
    si.add_argument("--input-dim", type=int, default=2)
    si.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    si.add_argument("--keep-raw", metavar="PATH", help="also write per-trial values to PATH")
    si.set_defaults(func=cmd_simulate)

    co = sub.add_parser("compare", help="test simulated samples against a prediction")
    co.add_argument("--prediction", required=True)
    co.add_argument("--raw", required=True)
    co.add_argument("--predictor", default="sampling")
    co.add_argument("--layers", help="comma separated layers (default all but 0)")
    co.add_argument("--alpha", type=float, default=0.05)
    co.add_argument("--out", required=True)
    co.set_defaults(func=cmd_compare)

    va = sub.add_parser("validate", help="run the cross-check suites")
    va.add_argument("--suite", default="all")
    va.add_argument("--budget", type=int, default=4_000_000,
                    help="node budget for quadrature, tuple budget for enumeration")
    va.add_argument("--out")
    va.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
