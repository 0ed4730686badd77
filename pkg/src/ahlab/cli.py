"""Command line driver: ``ahlab [options] <command> key=value ...``.

Exit status is 0 when every row passes its declared tolerance, 2 when any
row fails and 1 on usage errors.
"""
import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ball, radial, submanifold, upper_bound
from .extrapolation import ExtrapolationError

COLUMNS = ("experiment", "case", "params", "quantity", "value", "expected", "metric",
           "error", "tolerance", "pass", "millis", "note")
COMMANDS = ("upper-bound", "ball-eig", "submanifold", "lee", "sweep")
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ResultRow:
    experiment: str
    case: str
    params: dict
    quantity: str
    value: float
    expected: float = float("nan")
    metric: str = "info"
    tolerance: float = float("nan")
    millis: float = 0.0
    note: str = ""
    error: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.error, self.passed = judge(self.value, self.expected, self.metric, self.tolerance)


def judge(value, expected, metric, tol):
    """Return ``(error, pass)`` from the emitted numbers alone."""
    if metric == "info":
        return float("nan"), True
    if not (math.isfinite(value) and math.isfinite(expected)):
        return float("nan"), False
    if metric == "abs":
        err = abs(value - expected)
    elif metric == "rel":
        err = abs(value - expected) / abs(expected)
    elif metric == "ge":
        err = max(0.0, expected - value)
    elif metric == "le":
        err = max(0.0, value - expected)
    elif metric == "lt":
        return max(0.0, value - expected), bool(value < expected)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return err, bool(err <= tol)


def failed_row(experiment, case, params, quantity, exc):
    return ResultRow(experiment, case, params, quantity, float("nan"), metric="abs",
                     tolerance=0.0, note=f"{type(exc).__name__}: {exc}")


# ----------------------------------------------------------------- parameters


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _positive(v):
    return v > 0


def _bigger_than_one(v):
    return v > 1


PARAMS = {
    "upper-bound": {
        "n": (int, None, _positive), "p": (float, None, _bigger_than_one), "s": (float, None, None),
        "eps": (float, None, _positive), "delta": (float, None, _positive),
        "tol": (float, 1e-2, _positive),
    },
    "ball-eig": {
        "n": (int, None, _positive), "p": (float, None, _bigger_than_one),
        "kappa": (float, 1.0, _positive), "radius": (float, None, _positive),
        "mesh": (int, 1000, lambda v: v >= 100), "tol": (float, 1e-3, _positive),
    },
    "submanifold": {
        "kind": (str, None, lambda v: v in ("totally-geodesic", "equidistant", "horosphere", "graph")),
        "n": (int, 2, _positive), "k": (int, None, lambda v: v >= 0), "t": (float, None, None),
        "check": (str, "all", lambda v: v in SUBMANIFOLD_CHECKS + ("all",)),
        "base": (_floats, None, None), "field": (str, None, lambda v: v in ("exact", "synthetic")),
        "c": (float, None, None), "s": (float, None, _positive), "alpha": (float, None, lambda v: v >= 0),
        "beta": (float, None, lambda v: v >= 0), "override": (float, None, None),
        "tol": (float, None, _positive),
    },
    "lee": {
        "n": (int, 2, _positive), "base": (_floats, None, None),
        "count": (int, 1000, _positive), "tol": (float, 1e-6, _positive),
    },
}
REQUIRED = {"upper-bound": ("n", "p", "s"), "ball-eig": ("n", "p", "radius"),
            "submanifold": ("kind",), "lee": ()}
SUBMANIFOLD_CHECKS = ("geometry", "angles", "sectional", "conformal", "lee", "barta", "stability")


def parse_pairs(tokens):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise UsageError(f"expected key=value, got {tok!r}")
        key, val = tok.split("=", 1)
        out[key.strip().lower()] = val.strip()
    return out


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        out[key.strip().lower()] = val.strip()
    return out


def validate(command, raw):
    table = PARAMS[command]
    unknown = sorted(set(raw) - set(table))
    if unknown:
        raise UsageError(f"{command}: unknown parameter(s) {', '.join(unknown)}")
    params = {}
    for key, (conv, default, check) in table.items():
        if key not in raw:
            if key in REQUIRED[command]:
                raise UsageError(f"{command}: missing required parameter {key}")
            if default is not None:
                params[key] = default
            continue
        try:
            val = conv(raw[key])
        except ValueError as exc:
            raise UsageError(f"{command}: bad value for {key}: {raw[key]!r}") from exc
        if check is not None and not check(val):
            raise UsageError(f"{command}: parameter {key}={raw[key]} outside its domain")
        params[key] = val
    if command == "upper-bound":
        lo, hi = upper_bound.admissible_interval(params["n"], params["p"])
        if not lo < params["s"] < hi:
            raise UsageError(f"upper-bound: parameter s={params['s']} outside ({lo:g}, {hi:g})")
        if ("eps" in params) != ("delta" in params):
            raise UsageError("upper-bound: eps and delta go together")
        if "eps" in params and not params["eps"] < 1.0:
            raise UsageError("upper-bound: parameter eps must be below 1")
    return params


# ---------------------------------------------------------------- experiments


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, 1e3 * (time.perf_counter() - t0)


def run_upper_bound(P, seed):
    n, p, s = P["n"], P["p"], P["s"]
    rp = upper_bound.RayleighParams(n, p, s)
    F = upper_bound.closed_form_F(rp)
    bound = upper_bound.sharp_upper_bound(n, p)
    rows = [ResultRow("upper-bound", "closed-form", P, "F", F, bound, "ge", 1e-12)]
    if "eps" in P:
        rep, ms = _timed(lambda: upper_bound.rayleigh_q(rp, upper_bound.CutoffParams(P["eps"], P["delta"])))
        rows.append(ResultRow("upper-bound", "finite", P, "q", rep.quotient, millis=ms,
                              note="" if rep.converged else "quadrature not converged"))
        return rows
    try:
        rep, ms = _timed(lambda: upper_bound.iterated_limit(rp))
    except ExtrapolationError as exc:
        return rows + [failed_row("upper-bound", "limit", P, "q_limit", exc)]
    rows.append(ResultRow("upper-bound", "limit", P, "q_limit", rep.value, F, "abs", P["tol"],
                          ms, f"extrapolation error {rep.error_estimate:.3g}"))
    return rows


def run_ball_eig(P, seed):
    prob = radial.RadialProblem(P["n"], P["p"], P["kappa"], P["radius"], P["mesh"])
    try:
        res, ms = _timed(lambda: radial.ball_first_eigenvalue(prob))
    except (radial.ConvergenceError, radial.BoundViolation) as exc:
        return [failed_row("ball-eig", "solve", P, "lambda", exc)]
    note = f"iterations {res.iterations}; residual {res.residual:.3g}"
    rows = [ResultRow("ball-eig", "bound", P, "lambda", res.lam, res.lower_bound, "ge", 1e-8, ms, note)]
    if prob.n == 2 and prob.p == 2.0:
        exact = prob.kappa ** 2 + (math.pi / prob.R) ** 2
        rows.append(ResultRow("ball-eig", "closed-form", P, "lambda", res.lam, exact, "rel", P["tol"], ms))
    return rows


def _default_base(N):
    base = np.zeros(N)
    base[-1] = -0.3
    return base


def run_submanifold(P, seed):
    kind = P["kind"]
    extra = {"t": P.get("t", 0.3)} if kind == "equidistant" else {}
    synthetic = P.get("field") == "synthetic"
    beta = P.get("beta", 0.0)
    if "k" in P:
        extra["k"] = P["k"]
    try:
        entry = submanifold.catalog(kind, n=P["n"], **extra)
    except ValueError as exc:
        raise UsageError(f"submanifold: {exc}") from exc
    imm, exp = entry.immersion, entry.expected
    m = imm.k_plus_1
    pts = submanifold.interior_samples(imm)
    checks = SUBMANIFOLD_CHECKS if P["check"] == "all" else (P["check"],)
    rows = []

    def tol(default):
        return P.get("tol", default)

    def row(case, quantity, value, expected=float("nan"), metric="info", tolerance=float("nan"), ms=0.0, note=""):
        rows.append(ResultRow("submanifold", f"{entry.kind}/{case}", P, quantity, value, expected,
                              metric, tolerance, ms, note))

    samples, ms = _timed(lambda: [submanifold.sample_geometry(imm, x) for x in pts])
    if "geometry" in checks:
        frame = max(float(np.max(np.abs(ball.conformal_factor(s.point) ** 2 * s.normal_frame.T @ s.normal_frame
                                        - np.eye(imm.codim)))) for s in samples)
        row("geometry", "normal_frame_defect", frame, 0.0, "abs", 1e-8, ms)
        Hn = max(s.mean_curvature_norm for s in samples)
        if "mean_curvature_norm" in exp:
            row("geometry", "mean_curvature_norm", Hn, exp["mean_curvature_norm"], "abs", tol(1e-6))
        else:
            row("geometry", "mean_curvature_norm", Hn)
        if entry.kind == "totally-geodesic":
            row("geometry", "B_max", max(float(np.max(np.abs(s.B))) for s in samples), 0.0, "abs", tol(1e-8))
    if "angles" in checks and imm.path is not None:
        try:
            ang, ms = _timed(lambda: submanifold.boundary_angles(imm, imm.boundary_path(np.eye(m)[0])))
        except Exception as exc:  # numerical failure is reported, not raised
            rows.append(failed_row("submanifold", f"{entry.kind}/angles", P, "proj_limit", exc))
        else:
            proj = math.sqrt(max(ang.proj_sq_limit, 0.0))
            note = "non-example: C = k+1" if entry.kind == "horosphere" else ""
            if "proj_limit" in exp:
                row("angles", "proj_limit", proj, exp["proj_limit"], "abs", tol(1e-3), ms, note)
            else:
                row("angles", "proj_limit", proj, ms=ms)
            row("angles", "proj_sq_limit", ang.proj_sq_limit, 1.0, "le", 1e-8)
    if "sectional" in checks and imm.path is not None and m >= 2:
        try:
            sec, ms = _timed(lambda: submanifold.asymptotic_sectional(imm, imm.boundary_path(np.eye(m)[0])))
        except Exception as exc:
            rows.append(failed_row("submanifold", f"{entry.kind}/sectional", P, "sec_limit", exc))
        else:
            if "sec_limit" in exp:
                row("sectional", "sec_limit", sec.limit, exp["sec_limit"], "abs", tol(1e-3), ms)
            else:
                row("sectional", "sec_limit", sec.limit, ms=ms)
            row("sectional", "sec_vs_angle_prediction", sec.limit, sec.predicted, "abs", 2e-3)
    if "conformal" in checks:
        r2ff = max(submanifold.conformal_2ff_residual(s, "r2") for s in samples)
        row("conformal", "second_form_law_residual", r2ff, 0.0, "abs", tol(1e-6))
        for q in (m, m + 2):
            res = max(submanifold.traceless_conformal_identity(s, "r2", q) for s in samples)
            row("conformal", f"traceless_identity_q{q}", res, 0.0, "abs", tol(1e-8))
    need_u = "lee" in checks or "barta" in checks
    if need_u:
        base = np.asarray(P["base"], float) if "base" in P else _default_base(imm.ambient_dim)
        if base.size != imm.ambient_dim:
            raise UsageError(f"submanifold: parameter base needs {imm.ambient_dim} coordinates")
        u = ball.LeeEigenfunction(base)
        fld = (submanifold.synthetic_field(P.get("c", 1.0)) if synthetic
               else submanifold.hyperbolic_exact_field(u))
    if "lee" in checks:
        try:
            rep, ms = _timed(lambda: submanifold.restricted_lee(imm, u, fld, pts))
        except ValueError as exc:
            raise UsageError(f"submanifold: {exc}") from exc
        if synthetic:
            row("lee", "beta", rep.beta, P.get("c", 1.0) * imm.codim, "abs", 1e-10, ms)
        else:
            row("lee", "laplacian_discrepancy", rep.max_discrepancy, 0.0, "abs", tol(1e-4), ms)
            row("lee", "beta", rep.beta, 0.0, "abs", 1e-10)
    if "barta" in checks:
        alpha = P.get("alpha", max(s.mean_curvature_norm for s in samples))
        k = m - 1
        s_val = P.get("s", max((k - alpha - beta) / 2, 1e-3))
        rep, ms = _timed(lambda: submanifold.barta_certificate(imm, u, s_val, alpha, beta, pts, fld=fld))
        row("barta", "min_quotient", min(rep.quotients), rep.lower_bound, "ge", 1e-8, ms)
        row("barta", "optimal_certificate", rep.optimal_value)
    if "stability" in checks and imm.codim == 1 and entry.kind != "horosphere":
        override = None
        if "override" in P:
            override = (lambda c: (lambda x: c))(P["override"])
            bumps = [submanifold.Bump(tuple(np.zeros(m)), 0.3)]
        else:
            bumps = None
        rep, ms = _timed(lambda: submanifold.stability_check(imm, 0.0, bumps, B_sq_override=override))
        if rep.applies:
            row("stability", "min_Q", min(rep.q_values), 0.0, "ge", 0.0, ms, f"max|B|^2 {rep.max_B_sq:.6g}")
        else:
            row("stability", "min_Q", min(rep.q_values), 0.0, "lt", 0.0, ms,
                f"above threshold {rep.threshold:.6g}")
    return rows


def run_lee(P, seed):
    n = P["n"]
    N = n + 1
    base = np.asarray(P["base"], float) if "base" in P else np.zeros(N)
    if base.size != N:
        raise UsageError(f"lee: parameter base needs {N} coordinates")
    try:
        u = ball.LeeEigenfunction(base)
    except ValueError as exc:
        raise UsageError(f"lee: parameter base: {exc}") from exc
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < P["count"]:
        y = rng.uniform(-1, 1, N)
        if y @ y < 0.9 ** 2:
            pts.append(y)
    t0 = time.perf_counter()
    res = bval = grad = 0.0
    for y in pts:
        val = u.value(y)
        res = max(res, abs(ball.lee_residual(u, y)) / val)
        bval = max(bval, ball.tensor_norm(ball.trace_free_hessian(u, y), y) / val)
        grad = max(grad, ball.gradient_norm_sq(u.field, y) / val ** 2)
    ms = 1e3 * (time.perf_counter() - t0)
    rows = [ResultRow("lee", "residual", P, "max_rel_residual", res, 0.0, "abs", P["tol"], ms),
            ResultRow("lee", "hessian", P, "max_rel_b_norm", bval, 0.0, "abs", P["tol"]),
            ResultRow("lee", "gradient", P, "max_grad_ratio_sq", grad, 1.0, "le", 0.0)]
    if not np.any(base):
        gap = 0.0
        for t in (0.5, 0.9, 0.99):
            y = np.zeros(N)
            y[0] = t
            rho = ball.defining_value("rho", y)
            gap = max(gap, abs(u.value(y) - 1 / rho - (1 - t) / (2 * (1 + t))))
        rows.append(ResultRow("lee", "expansion", P, "u_minus_inverse_rho", gap, 0.0, "abs", 1e-10))
        rep, ms = _timed(lambda: ball.compactified_roundness_check(u))
        rows.append(ResultRow("lee", "roundness", P, "metric_deviation", rep.max_metric_deviation,
                              0.0, "abs", 1e-8, ms))
        rows.append(ResultRow("lee", "roundness", P, "einstein_identity_gap", rep.max_identity_gap,
                              0.0, "abs", 1e-6))
    return rows


RUNNERS = {"upper-bound": run_upper_bound, "ball-eig": run_ball_eig,
           "submanifold": run_submanifold, "lee": run_lee}


# ---------------------------------------------------------------------- sweep


def expand_grid(raw):
    """Cartesian product over comma-separated values, first key varying slowest."""
    command = raw.pop("command", None)
    if command not in RUNNERS:
        raise UsageError(f"sweep: config needs command = one of {', '.join(RUNNERS)}")
    keys = list(raw)
    axes = []
    for key in keys:
        vals = [v.strip() for v in raw[key].split(",")] if key != "base" else [raw[key]]
        vals = [v for v in vals if v]
        if not vals:
            raise UsageError(f"sweep: empty grid for {key}")
        axes.append(vals)
    grid = [dict(zip(keys, combo)) for combo in itertools.product(*axes)]
    varying = [k for k, ax in zip(keys, axes) if len(ax) > 1]
    return command, [validate(command, g) for g in grid], varying


def run_sweep(command, grid, varying, seed, workers):
    runner = RUNNERS[command]

    def one(item):
        idx, params = item
        rows = runner(params, seed)
        for r in rows:
            r.case = f"g{idx:03d}/{r.case}"
        return rows

    items = list(enumerate(grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            batches = list(ex.map(one, items))
    else:
        batches = [one(it) for it in items]
    rows = [r for batch in batches for r in batch]
    summary = {}
    if command == "ball-eig" and varying == ["radius"]:
        lams = [next(r.value for r in b if r.quantity == "lambda") for b in batches]
        steps = [b - a for a, b in zip(lams, lams[1:])]
        rows.append(ResultRow("sweep", "summary", summary, "max_lambda_increment", max(steps), 0.0, "lt", 0.0,
                              note="lambda strictly decreasing in radius"))
    if command == "upper-bound" and varying == ["s"]:
        Fs = [r.value for r in rows if r.quantity == "F"]
        n, p = grid[0]["n"], grid[0]["p"]
        rows.append(ResultRow("sweep", "summary", summary, "min_F", min(Fs),
                              upper_bound.sharp_upper_bound(n, p), "ge", 1e-12))
    npass = sum(r.passed for r in rows)
    rows.append(ResultRow("sweep", "summary", summary, "rows_passed", float(npass), float(len(rows)),
                          "abs", 0.0, note=f"{len(grid)} grid points"))
    return rows


# --------------------------------------------------------------------- output


def _num(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    return "%.12g" % x


def _param_text(params):
    parts = []
    for k, v in params.items():
        if isinstance(v, (list, tuple)):
            v = ",".join(_num(float(a)) for a in v)
        elif isinstance(v, float):
            v = _num(v)
        parts.append(f"{k}={v}")
    return ";".join(parts)


def _json_num(x):
    return float(_num(x)) if math.isfinite(x) else None


def write_rows(rows, fmt, stream, timing=True):
    if fmt == "json":
        out = []
        for r in rows:
            out.append({"experiment": r.experiment, "case": r.case, "params": _param_text(r.params),
                        "quantity": r.quantity, "value": _json_num(r.value),
                        "expected": _json_num(r.expected), "metric": r.metric,
                        "error": _json_num(r.error), "tolerance": _json_num(r.tolerance),
                        "pass": bool(r.passed), "millis": _json_num(r.millis if timing else 0.0),
                        "note": r.note})
        stream.write(json.dumps(out, indent=1) + "\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([r.experiment, r.case, _param_text(r.params), r.quantity, _num(r.value),
                    _num(r.expected), r.metric, _num(r.error), _num(r.tolerance),
                    "true" if r.passed else "false", _num(r.millis if timing else 0.0), r.note])
    stream.write(buf.getvalue())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    ap = _Parser(prog="ahlab", description=__doc__.splitlines()[0])
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--config", help="flat key = value file; command-line pairs override it")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--no-timing", action="store_true", help="emit millis = 0 for reproducible output")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("pairs", nargs="*", metavar="key=value")
    return ap


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        raw = read_config(args.config) if args.config else {}
        pairs = list(args.pairs)
        if args.command == "sweep" and pairs and "=" not in pairs[0]:
            raw.update(read_config(pairs.pop(0)))
        raw.update(parse_pairs(pairs))
        if args.command == "sweep":
            if not raw:
                raise UsageError("sweep needs a config file")
            command, grid, varying = expand_grid(raw)
            rows = run_sweep(command, grid, varying, args.seed, args.workers)
        else:
            if raw.get("command", args.command) != args.command:
                raise UsageError(f"config is for {raw['command']}, not {args.command}")
            raw.pop("command", None)
            rows = RUNNERS[args.command](validate(args.command, raw), args.seed)
    except UsageError as exc:
        stderr.write(f"ahlab: error: {exc}\n")
        return EXIT_USAGE
    write_rows(rows, args.format, stdout, timing=not args.no_timing)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
