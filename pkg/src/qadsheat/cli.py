"""Command-line front end.

    qadsheat eval KERNEL [point flags]
    qadsheat grid KERNEL --r-range a:b:N --eta-range a:b:N [--output FILE]
    qadsheat validate --suite NAME
    qadsheat asymptotics --check NAME

Exit codes: 0 success, 1 validation failure, 2 bad arguments, 3 numerical
non-convergence, 4 I/O error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import multiprocessing
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_ARGS, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

KERNELS = ("ads", "twistor", "cads", "hyperbolic", "su2", "cp1")
METHODS = {
    "ads": ("theta", "spectral", "both"),
    "su2": ("theta", "spectral", "both"),
    "twistor": ("fibration", "literal", "both"),
    "cads": ("principal", "shifted", "both"),
    "hyperbolic": ("closed",),
    "cp1": ("spectral",),
}
SUITE_NAMES = ("representations", "mass", "pde", "fibers", "millson", "relation", "change-of-variable", "small-time", "all")
CHECKS = ("origin", "cutlocus", "axis", "general")
HEADER = ("kernel", "n", "t", "r", "eta_or_phi", "value_mantissa", "value_log", "err_est")
THREADS_ENV = "QADSHEAT_THREADS"
# flags which tolerances can not be met
NONCONVERGENCE_FLAGS = {"tolerance-not-met", "k-sum-not-converged"}


class UsageError(ValueError):
    pass


def _unconverged(flags, log: float, err: float, abs_tol: float) -> bool:
    """A tolerance flag counts unless the absolute error is within abs_tol."""
    if not any(f in NONCONVERGENCE_FLAGS for f in flags):
        return False
    return not (abs_tol > 0 and err * math.exp(min(log, 700.0)) <= abs_tol)


@dataclass(frozen=True)
class RunConfig:
    command: str = "eval"
    kernel: str = "ads"
    n: int = 1
    t: float = 0.5
    r: float = 0.0
    eta: float | None = None
    phi: float | None = None
    delta: float = 0.0
    u: float = 0.0
    psi: float = 0.0
    dim: int = 3
    method: str | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    output: str | None = None
    format: str = "csv"
    threads: int = 1
    r_range: str | None = None
    fiber_range: str | None = None
    suite: str = "all"
    check: str = "origin"
    ts: str | None = None

    # -- serialization ----------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse_text(cls, text: str) -> dict:
        """key = value lines ('#' starts a comment); an empty value means unset."""
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for num, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {num}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in types:
                raise UsageError(f"config line {num}: unknown key {key!r}")
            out[key] = _convert(key, types[key], val)
        return out

    def resolved_method(self) -> str:
        return self.method or METHODS[self.kernel][0]

    def fiber(self) -> float:
        if self.kernel in ("twistor", "cp1"):
            return 0.0 if self.phi is None else self.phi
        return 0.0 if self.eta is None else self.eta


def _convert(key: str, typ: str, val: str):
    if val == "" or val.lower() == "none":
        return None
    try:
        if typ.startswith("int"):
            return int(val)
        if typ.startswith("float"):
            return float(val)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {val!r}") from None
    return val


# ---------------------------------------------------------------------------
# precondition checks, all before any computation


def parse_range(text: str) -> np.ndarray:
    """'start:stop:count' -> count equally spaced values, endpoints included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range {text!r} must be start:stop:count")
    try:
        a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"range {text!r} must be start:stop:count") from None
    if k < 0 or not (math.isfinite(a) and math.isfinite(b)):
        raise UsageError(f"range {text!r}: bad bounds or count")
    return np.linspace(a, b, k) if k > 1 else np.array([a] * k)


def _check_point(cfg: RunConfig, r: float, x: float) -> None:
    k = cfg.kernel
    if k == "hyperbolic":
        if not r >= 0:
            raise UsageError("delta must be >= 0")
        return
    if not r >= 0:
        raise UsageError("r must be >= 0" if k not in ("su2", "cp1") else "second fiber point out of range")
    if k in ("ads", "su2") and not 0 <= x < math.pi:
        raise UsageError(f"eta={x} outside [0, pi)")
    if k == "su2" and not r < math.pi:
        raise UsageError(f"u={r} outside [0, pi)")
    if k == "cads" and not 0 < x < math.pi:
        raise UsageError(f"eta={x} outside (0, pi)")
    if k in ("twistor", "cp1") and not 0 <= x <= math.pi / 2:
        raise UsageError(f"phi={x} outside [0, pi/2]")
    if k == "cp1" and not r <= math.pi / 2:
        raise UsageError(f"psi={r} outside [0, pi/2]")


def validate_config(cfg: RunConfig) -> None:
    if cfg.command not in ("eval", "grid", "validate", "asymptotics"):
        raise UsageError(f"unknown command {cfg.command!r}")
    if cfg.kernel not in KERNELS:
        raise UsageError(f"unknown kernel {cfg.kernel!r}")
    if cfg.method is not None and cfg.method not in METHODS[cfg.kernel]:
        raise UsageError(f"method {cfg.method!r} not available for {cfg.kernel}; choose from {METHODS[cfg.kernel]}")
    if cfg.n < 1:
        raise UsageError("n must be >= 1")
    if not (cfg.t > 0 and math.isfinite(cfg.t)):
        raise UsageError("t must be positive")
    if cfg.dim < 3 or cfg.dim % 2 == 0:
        raise UsageError("dim must be an odd integer >= 3")
    if not cfg.rel_tol > 0 or cfg.abs_tol < 0:
        raise UsageError("tolerances must be positive")
    if cfg.format not in ("csv", "jsonl"):
        raise UsageError("format must be csv or jsonl")
    if cfg.threads < 1:
        raise UsageError("threads must be >= 1")
    if cfg.suite not in SUITE_NAMES:
        raise UsageError(f"unknown suite {cfg.suite!r}")
    if cfg.check not in CHECKS:
        raise UsageError(f"unknown check {cfg.check!r}")
    if cfg.command == "eval":
        _check_point(cfg, _first_coord(cfg), cfg.fiber())
    if cfg.command == "grid":
        for r in parse_range(cfg.r_range or "0:0:0"):
            for x in (parse_range(cfg.fiber_range or "0:0:0") if cfg.kernel != "hyperbolic" else [0.0]):
                _check_point(cfg, float(r), float(x))
    if cfg.ts is not None:
        ts = _parse_ts(cfg.ts)
        if not all(0 < t <= 0.05 for t in ts):
            raise UsageError("asymptotic t values must lie in (0, 0.05]")


def _first_coord(cfg: RunConfig) -> float:
    return {"hyperbolic": cfg.delta, "su2": cfg.u, "cp1": cfg.psi}.get(cfg.kernel, cfg.r)


def _parse_ts(text: str) -> tuple:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise UsageError(f"cannot parse t-sequence {text!r}") from None


# ---------------------------------------------------------------------------
# evaluation


def evaluate(kernel: str, method: str, n: int, t: float, a: float, x: float, dim: int, rel_tol: float):
    """(log|value|, sign, error estimate, flags) of one kernel value.

    ``a`` is r (ads, twistor, cads), delta (hyperbolic), u (su2) or psi (cp1);
    ``x`` is eta or phi.
    """
    from .ads import EvalContext, KernelPoint, ads_kernel
    from .complex_ads import cads_kernel
    from .fibers import cp1_kernel, su2_kernel_spectral, su2_kernel_theta
    from .hyperbolic import q_log
    from .twistor import TwistorPoint, twistor_kernel

    if kernel == "hyperbolic":
        return float(q_log(dim, t, a)), 1.0, 0.0, ()
    if kernel in ("su2", "cp1"):
        if kernel == "cp1":
            v = cp1_kernel(t, x, a)
        else:
            v = (su2_kernel_spectral if method == "spectral" else su2_kernel_theta)(t, x, a)
        return (math.log(abs(v)) if v != 0 else -math.inf), math.copysign(1.0, v), 0.0, ()
    ctx = EvalContext(n, t, rel_tol=rel_tol)
    if kernel == "ads":
        kv = ads_kernel(ctx, KernelPoint(a, x), method)
    elif kernel == "twistor":
        kv = twistor_kernel(ctx, TwistorPoint(a, x), method)
    else:
        kv = cads_kernel(ctx, a, x, method)
    return kv.value.log, kv.value.sign, kv.error_estimate, tuple(kv.flags)


def _eval_task(args):
    try:
        return evaluate(*args), None
    except Exception as exc:  # reported by the parent in grid order
        return None, f"{type(exc).__name__}: {exc}"


def _fmt(x: float) -> str:
    return repr(float(x))


def _row(kernel, n, t, a, x, log, sign, err, extra=None) -> dict:
    mant = sign * math.exp(log) if log > -745.2 else 0.0 * sign
    row = {"kernel": kernel, "n": n, "t": _fmt(t), "r": _fmt(a), "eta_or_phi": "" if x is None else _fmt(x),
           "value_mantissa": _fmt(mant), "value_log": _fmt(log), "err_est": _fmt(err)}
    if extra:
        row.update(extra)
    return row


def _emit(rows: list[dict], columns: tuple, fmt: str, stream) -> None:
    if fmt == "csv":
        stream.write(",".join(columns) + "\n")
        for row in rows:
            stream.write(",".join(str(row.get(c, "")) for c in columns) + "\n")
    else:
        for row in rows:
            rec = {c: _json_value(row.get(c, "")) for c in columns}
            stream.write(json.dumps(rec) + "\n")


def _json_value(v):
    if isinstance(v, str):
        try:
            f = float(v)
        except ValueError:
            return v
        return f if math.isfinite(f) else v
    return v


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def cmd_eval(cfg: RunConfig) -> int:
    method = cfg.resolved_method()
    methods = [m for m in METHODS[cfg.kernel] if m != "both"] if method == "both" else [method]
    a, x = _first_coord(cfg), cfg.fiber()
    n = cfg.dim if cfg.kernel == "hyperbolic" else cfg.n
    rows, logs, flagged = [], [], []
    for m in methods:
        log, sign, err, flags = evaluate(cfg.kernel, m, cfg.n, cfg.t, a, x, cfg.dim, cfg.rel_tol)
        logs.append((sign, log))
        if _unconverged(flags, log, err, cfg.abs_tol):
            flagged += [f for f in flags if f in NONCONVERGENCE_FLAGS]
        rows.append(_row(cfg.kernel, n, cfg.t, a, None if cfg.kernel == "hyperbolic" else x, log, sign, err,
                         {"method": m, "flags": ";".join(flags)}))
    columns = HEADER + ("method", "flags")
    if len(methods) == 2:
        (s1, l1), (s2, l2) = logs
        disc = abs(math.expm1(l1 - l2)) if s1 == s2 else math.inf
        for row in rows:
            row["discrepancy"] = _fmt(disc)
        columns += ("discrepancy",)
    buf = io.StringIO()
    _emit(rows, columns, cfg.format, buf)
    _write(buf.getvalue(), cfg.output)
    if flagged:
        print(f"error: {cfg.kernel} integral did not reach rel_tol={cfg.rel_tol} ({', '.join(sorted(set(flagged)))})",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _pool(threads: int):
    methods = multiprocessing.get_all_start_methods()
    ctx = multiprocessing.get_context("fork" if "fork" in methods else "spawn")
    return ProcessPoolExecutor(max_workers=threads, mp_context=ctx)


def cmd_grid(cfg: RunConfig) -> int:
    method = cfg.resolved_method()
    if method == "both":
        raise UsageError("grid takes a single method")
    rs = parse_range(cfg.r_range or "0:0:0")
    xs = [None] if cfg.kernel == "hyperbolic" else parse_range(cfg.fiber_range or "0:0:0")
    points = [(float(a), None if x is None else float(x)) for a in rs for x in xs]
    tasks = [(cfg.kernel, method, cfg.n, cfg.t, a, 0.0 if x is None else x, cfg.dim, cfg.rel_tol) for a, x in points]
    if cfg.threads > 1 and len(tasks) > 1:
        # warm the memoized term sums once so workers inherit them
        from .hyperbolic import build_q_termsum

        build_q_termsum(cfg.dim if cfg.kernel == "hyperbolic" else 4 * cfg.n + 3)
        with _pool(cfg.threads) as ex:
            results = list(ex.map(_eval_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.threads))))
    else:
        results = [_eval_task(tk) for tk in tasks]
    n = cfg.dim if cfg.kernel == "hyperbolic" else cfg.n
    rows, flagged = [], []
    for (a, x), (res, err) in zip(points, results):
        if err is not None:
            print(f"error: {cfg.kernel} at ({a}, {x}): {err}", file=sys.stderr)
            return EXIT_NUMERIC
        log, sign, est, flags = res
        if _unconverged(flags, log, est, cfg.abs_tol):
            flagged.append((a, x))
        rows.append(_row(cfg.kernel, n, cfg.t, a, x, log, sign, est))
    buf = io.StringIO()
    _emit(rows, HEADER, cfg.format, buf)
    _write(buf.getvalue(), cfg.output)
    if flagged:
        print(f"error: tolerance not met at {len(flagged)} grid point(s), first {flagged[0]}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_validate(cfg: RunConfig, ns: tuple | None) -> int:
    from .validation import format_result, run_suite

    results = run_suite(cfg.suite, ns)
    for c in results:
        print(format_result(c))
    failed = sum(not c.passed for c in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def _table(rows: list[dict], columns: tuple, fmt: str) -> None:
    buf = io.StringIO()
    _emit(rows, columns, fmt, buf)
    sys.stdout.write(buf.getvalue())


def cmd_asymptotics(cfg: RunConfig, given: set) -> int:
    from . import asymptotics as A

    n, fmt = cfg.n, cfg.format
    ts = _parse_ts(cfg.ts) if cfg.ts else None
    cols = ("check", "n", "t", "r", "eta", "log_predicted", "log_actual", "ratio")
    if cfg.check == "cutlocus":
        eta = cfg.eta if "eta" in given else 0.7
        fit = A.cutlocus_rate(n, eta, ts or A.DEFAULT_CUT_TS)
        rows = [{"check": "cutlocus", "t": _fmt(t), "n": n, "r": "0.0", "eta": _fmt(eta), "rate_sample": _fmt(y)}
                for t, y in fit.samples]
        _table(rows, ("check", "n", "t", "r", "eta", "rate_sample"), fmt)
        ok = fit.relative_error <= 1e-2
        print(f"# fitted rate {fit.limit:.10g}, expected 2 pi eta + eta^2 = {fit.expected:.10g}, "
              f"relative error {fit.relative_error:.2e} (allowed 1e-2): {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_FAIL
    if cfg.check == "origin":
        ts = ts or (1.6e-2, 8e-3, 4e-3)
        comps = [A.origin_expansion(n, t) for t in ts]
        r, eta = 0.0, 0.0
    elif cfg.check == "axis":
        r = cfg.r if "r" in given else 1.0
        eta = 0.0
        ts = ts or (1.6e-2, 1e-2, 8e-3, 4e-3)
        comps = [A.axis_asymptotic(n, t, r) for t in ts]
    else:
        r = cfg.r if "r" in given else 1.0
        eta = cfg.eta if "eta" in given else 1.0
        ts = ts or (1.6e-2, 1e-2, 8e-3, 4e-3)
        comps = [A.general_asymptotic(n, t, r, eta) for t in ts]
    rows = [{"check": cfg.check, "n": n, "t": _fmt(c.t), "r": _fmt(r), "eta": _fmt(eta),
             "log_predicted": _fmt(c.log_predicted), "log_actual": _fmt(c.log_actual), "ratio": _fmt(c.ratio)}
            for c in comps]
    _table(rows, cols, fmt)
    if cfg.check == "general" and comps[0].extra:
        e = comps[0].extra
        print(f"# phase varphi(r, eta) = {e['varphi']:.15g}, u = {e['u']:.15g}, phase residual {e['residual']:.2e}"
              + (" (extended root)" if e["extended"] else ""))
    ok = A.ratio_trend(comps)
    print(f"# trend: |ratio - 1| {'decreases monotonically' if ok else 'does NOT decrease monotonically'} "
          f"as t -> 0: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    a = argparse.SUPPRESS
    p.add_argument("--config", default=a, help="key = value file; flags override it")
    p.add_argument("--dump-config", action="store_true", default=a, help="print the resolved configuration and exit")
    p.add_argument("--n", type=int, default=a, help="quaternionic dimension (total dimension 4n+3)")
    p.add_argument("--t", type=float, default=a)
    p.add_argument("--r", type=float, default=a)
    p.add_argument("--eta", type=float, default=a)
    p.add_argument("--phi", type=float, default=a)
    p.add_argument("--delta", type=float, default=a, help="hyperbolic distance (kernel hyperbolic)")
    p.add_argument("--u", type=float, default=a, help="second SU(2) point (kernel su2)")
    p.add_argument("--psi", type=float, default=a, help="second CP^1 point (kernel cp1)")
    p.add_argument("--dim", type=int, default=a, help="dimension of the real hyperbolic space")
    p.add_argument("--method", default=a)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=a)
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=a)
    p.add_argument("--output", default=a)
    p.add_argument("--format", choices=("csv", "jsonl"), default=a)
    p.add_argument("--threads", type=int, default=a, help=f"worker processes (default ${THREADS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qadsheat", description="Subelliptic heat kernels on quaternionic AdS spaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eval", help="evaluate one kernel value")
    p.add_argument("kernel", choices=KERNELS)
    _common(p)
    p = sub.add_parser("grid", help="evaluate on a grid and export CSV or JSON lines")
    p.add_argument("kernel", choices=KERNELS)
    p.add_argument("--r-range", dest="r_range", default=argparse.SUPPRESS, help="start:stop:count")
    p.add_argument("--eta-range", "--phi-range", dest="fiber_range", default=argparse.SUPPRESS, help="start:stop:count")
    _common(p)
    p = sub.add_parser("validate", help="run validation suites")
    p.add_argument("--suite", choices=SUITE_NAMES, default=argparse.SUPPRESS)
    _common(p)
    p = sub.add_parser("asymptotics", help="small-time comparisons")
    p.add_argument("--check", choices=CHECKS, default=argparse.SUPPRESS)
    p.add_argument("--ts", default=argparse.SUPPRESS, help="comma-separated t values")
    _common(p)
    return parser


def resolve(args: argparse.Namespace) -> tuple[RunConfig, set]:
    """Merge defaults, the environment, a config file and the flags, in that order."""
    values: dict = {}
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            values["threads"] = int(env)
        except ValueError:
            raise UsageError(f"${THREADS_ENV} must be an integer") from None
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "dump_config")}
    if "config" in vars(args):
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        values.update(RunConfig.parse_text(text))
    values.update(flags)
    given = {k for k, v in values.items() if v is not None}
    return RunConfig(**values), given


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg, given = resolve(args)
        validate_config(cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if getattr(args, "dump_config", False):
        sys.stdout.write(cfg.to_text())
        return EXIT_OK

    from .quadrature import QuadratureError

    try:
        if cfg.command == "eval":
            return cmd_eval(cfg)
        if cfg.command == "grid":
            return cmd_grid(cfg)
        if cfg.command == "validate":
            return cmd_validate(cfg, (cfg.n,) if "n" in given else None)
        return cmd_asymptotics(cfg, given)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except QuadratureError as exc:
        print(f"error: numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
