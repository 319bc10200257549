"""``silver`` command line.

Exit codes: 0 success, 1 verification or audit failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .certificate import STAR, build_cert, base_cert_n0, export_cert, verify
from .exact_scalar import decimal_of, decimal_str
from .schedule import horizon, level_of_horizon, rate, schedule_direct

BITS_ENV = "SILVER_BITS"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_bits() -> int:
    try:
        return int(os.environ.get(BITS_ENV, "256"))
    except ValueError:
        return 256


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows: List[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# --------------------------------------------------------------------------
# schedule / cert / verify
# --------------------------------------------------------------------------


def cmd_schedule(args) -> int:
    k = args.k
    if args.n is not None:
        try:
            k = level_of_horizon(args.n)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if k is None or k < 1:
        raise UsageError("--k must be >= 1 (horizon n = 2^k - 1)")
    sched = schedule_direct(k)
    rows = [(t, str(a), decimal_str(a, args.digits)) for t, a in enumerate(sched)]
    if args.format == "exact":
        text = "".join(f"{e}\n" for _, e, _ in rows)
    elif args.format == "json":
        text = json.dumps({"k": k, "n": sched.n, "steps": [{"t": t, "exact": e, "decimal": d} for t, e, d in rows]}, indent=2) + "\n"
    else:
        text = _csv([["t", "exact", "decimal"]] + [list(r) for r in rows])
    _emit(text, args.out)
    return EXIT_OK


def cmd_cert(args) -> int:
    if args.k < 0:
        raise UsageError("--k must be >= 0")
    lam = base_cert_n0() if args.k == 0 else build_cert(args.k)
    _emit(export_cert(lam, args.format, args.digits), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.k_max < 1 or args.k_min < 0 or args.k_min > args.k_max:
        raise UsageError("need 0 <= --k-min <= --k-max and --k-max >= 1")
    reports = []
    for k in range(args.k_min, args.k_max + 1):
        lam = base_cert_n0() if k == 0 else build_cert(k)
        if args.inject_fault and k == args.k_max:
            n = horizon(k)
            lam = lam.with_entry(STAR, n, lam[(STAR, n)] + 1)
        reports.append(verify(lam, k, max_bits=args.bits))
    ok = all(r.passed for r in reports)
    if args.report == "json":
        text = json.dumps({"passed": ok, "reports": [r.as_dict() for r in reports]}, indent=2) + "\n"
    else:
        lines = []
        for r in reports:
            flag = "PASS" if r.passed else "FAIL"
            lines.append(
                f"k={r.k} n={horizon(r.k)} {flag} identity={r.identity_ok} nonneg={r.nonneg_ok} "
                f"sparsity={r.sparsity_ok} star={r.lemma2_ok} linear={r.helper_linear_ok} "
                f"quadratic={r.helper_quadratic_ok}"
            )
            lines.extend(f"    {f}" for f in r.failures)
        lines.append("all checks passed" if ok else "verification FAILED")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# numeric runs
# --------------------------------------------------------------------------


def _parse_method(text: str):
    if text in ("silver", "nesterov"):
        return text, None
    if text.startswith("constant:"):
        try:
            alpha = float(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad constant stepsize in {text!r}") from None
        if not 0 < alpha < 2:
            raise UsageError("constant stepsize must lie in (0, 2)")
        return "constant", alpha
    raise UsageError(f"unknown schedule {text!r}; use silver, constant:<a> or nesterov")


def _run(method, alpha, oracle, x0, k):
    from .engine import run_constant, run_nesterov, run_silver

    n = horizon(k)
    if method == "silver":
        return run_silver(oracle, x0, k)
    if method == "constant":
        return run_constant(oracle, x0, alpha, n)
    return run_nesterov(oracle, x0, n)


def _setup(args):
    from .engine import make_oracle

    if args.k < 1:
        raise UsageError("--k must be >= 1 (horizon n = 2^k - 1)")
    if args.dim < 1:
        raise UsageError("--dim must be >= 1")
    method, alpha = _parse_method(args.schedule)
    oracle, x0 = make_oracle(args.fn, args.dim, args.seed)
    xstar, fstar = oracle.reference_minimum(x0)
    return method, alpha, oracle, x0, xstar, fstar


def cmd_run(args) -> int:
    method, alpha, oracle, x0, xstar, fstar = _setup(args)
    traj = _run(method, alpha, oracle, x0, args.k)
    fstar = min(fstar, float(traj.values.min()))
    rows = [["t", "gap", "grad_norm", "alpha"]]
    for t in range(traj.n + 1):
        step = _fmt(traj.steps[t]) if t < traj.n else ""
        rows.append([t, _fmt(traj.values[t] - fstar), _fmt(np.linalg.norm(traj.gradients[t])), step])
    _emit(_csv(rows), args.out)
    return EXIT_OK


def _method_bound(method, alpha, k) -> Optional[float]:
    n = horizon(k)
    if method == "silver":
        return float(rate(k).r.hi)
    if method == "constant" and alpha == 1.0:
        return 1.0 / (4 * n)
    if method == "nesterov":
        return 2.0 / (n + 1) ** 2
    return None


def cmd_audit(args) -> int:
    from .engine import cocoercivity_audit

    method, alpha, oracle, x0, xstar, fstar = _setup(args)
    traj = _run(method, alpha, oracle, x0, args.k)
    fstar = min(fstar, float(traj.values.min()))
    audit = cocoercivity_audit(traj, xstar, fstar)
    factor = _method_bound(method, alpha, args.k)
    r2 = float(np.sum((x0 - xstar) ** 2))
    gap = float(traj.values[-1] - fstar)
    lines = [
        f"oracle={args.fn} dim={args.dim} seed={args.seed} schedule={args.schedule} n={traj.n}",
        f"min_cocoercivity={_fmt(audit.min_q)} at {audit.pair} scale={_fmt(audit.scale)} "
        f"{'PASS' if audit.passed else 'FAIL'}",
    ]
    ok = audit.passed
    if factor is None:
        lines.append(f"final_gap={_fmt(gap)} bound=n/a")
    else:
        rhs = factor * oracle.smoothness_M * r2
        passed = gap <= rhs * (1 + 1e-9)
        ok = ok and passed
        lines.append(f"final_gap={_fmt(gap)} bound={_fmt(rhs)} {'PASS' if passed else 'FAIL'}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compare(args) -> int:
    if args.bits < 64:
        raise UsageError(f"--bits (or {BITS_ENV}) must be at least 64")
    header = ["k", "n", "constant_bound", "silver_bound", "nesterov_bound"]
    measure = args.fn is not None
    if measure:
        header += ["r2", "constant_gap", "silver_gap", "nesterov_gap"]
    rows = [header]
    for k in range(max(args.k_min, 1), args.k_max + 1):
        n = horizon(k)
        row = [
            k,
            n,
            decimal_str(Fraction(1, 4 * n), args.digits),
            decimal_of(lambda b, k=k: rate(k, max(b, args.bits)).r, args.digits),
            decimal_str(Fraction(2, (n + 1) ** 2), args.digits),
        ]
        if measure:
            from .engine import make_oracle

            oracle, x0 = make_oracle(args.fn, args.dim, args.seed)
            xstar, fstar = oracle.reference_minimum(x0)
            trajs = [_run(m, a, oracle, x0, k) for m, a in (("constant", 1.0), ("silver", None), ("nesterov", None))]
            fstar = min([fstar] + [float(t.values.min()) for t in trajs])
            row.append(_fmt(np.sum((x0 - xstar) ** 2)))
            row += [_fmt(t.values[-1] - fstar) for t in trajs]
        rows.append(row)
    _emit(_csv(rows), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="silver", description="Silver Stepsize Schedule: schedules, exact certificates, runs.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("schedule", help="emit the level-k schedule (n = 2^k - 1 steps)")
    s.add_argument("--k", type=int, help="level, horizon n = 2^k - 1")
    s.add_argument("--n", type=int, help="horizon; must be of the form 2^k - 1")
    s.add_argument("--format", choices=("csv", "json", "exact"), default="csv")
    s.add_argument("--digits", type=int, default=17, help="significant digits of decimals")
    s.add_argument("--out", help="output path (default stdout)")
    s.set_defaults(func=cmd_schedule)

    c = sub.add_parser("cert", help="dump the level-k certificate multipliers")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--format", choices=("exact", "csv"), default="exact")
    c.add_argument("--digits", type=int, default=17)
    c.add_argument("--out")
    c.set_defaults(func=cmd_cert)

    v = sub.add_parser("verify", help="exactly verify certificates for k = k-min..k-max")
    v.add_argument("--k-max", type=int, default=6)
    v.add_argument("--k-min", type=int, default=1)
    v.add_argument("--report", choices=("text", "json"), default="text")
    v.add_argument("--bits", type=int, default=4096, help="precision cap for interval sign checks")
    v.add_argument("--out")
    v.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    for name, func, helptext in (
        ("run", cmd_run, "run one method and write a CSV of t, gap, |g|, alpha"),
        ("audit", cmd_audit, "co-coercivity audit and worst-case bound check of one run"),
    ):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("--fn", choices=("quadratic", "logsumexp", "huber"), default="quadratic")
        r.add_argument("--dim", type=int, default=20)
        r.add_argument("--seed", type=int, default=0)
        r.add_argument("--k", type=int, default=6, help="horizon n = 2^k - 1 for every method")
        r.add_argument("--schedule", default="silver", help="silver | constant:<alpha> | nesterov")
        r.add_argument("--out")
        r.set_defaults(func=func)

    m = sub.add_parser("compare", help="bound curves 1/(4n), r_k, 2/(n+1)^2, optionally measured gaps")
    m.add_argument("--k-min", type=int, default=1)
    m.add_argument("--k-max", type=int, default=10)
    m.add_argument("--fn", choices=("quadratic", "logsumexp", "huber"))
    m.add_argument("--dim", type=int, default=20)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--digits", type=int, default=17)
    m.add_argument("--bits", type=int, default=_default_bits())
    m.add_argument("--out")
    m.set_defaults(func=cmd_compare)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
