"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line; ``conftest.py`` prints them at the
end of the session, and running this file directly prints them as well.
Tolerances are the stated ones and are not relaxed when a check fails.
"""

import csv
import io
import time
from contextlib import redirect_stdout
from fractions import Fraction

import mpmath
import numpy as np

import oracles
from silver.certificate import build_cert
from silver.cli import main as cli_main
from silver.engine import (
    bound_check,
    cocoercivity_audit,
    make_oracle,
    nonconvex_oracle,
    run_constant,
    run_nesterov,
    run_silver,
)
from silver.exact_scalar import CertScalar, c_enclosure, rho_pow
from silver.schedule import horizon, rate, step_sum

RESULTS = []


def record(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def cli(*argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli_main(list(argv))
    return code, buf.getvalue()


def _fstar(oracle, x0, *trajs):
    xstar, fstar = oracle.reference_minimum(x0)
    return xstar, min([fstar] + [float(t.values.min()) for t in trajs])


def test_exact_certificate_verification():
    t0 = time.perf_counter()
    code, out = cli("verify", "--k-max", "6")
    elapsed = time.perf_counter() - t0
    passes = out.count(" PASS ")
    ok = code == 0 and passes == 6 and elapsed < 60
    record("exact certificates k=1..6", ok, f"exit {code}, {passes}/6 levels pass, {elapsed:.1f}s (limit 60s)")
    assert ok, out


def test_rate_constants():
    r1 = rate(1).r
    c1 = c_enclosure(1, 256)
    r0 = rate(0).r
    checks = {
        "r1~0.1816": round(float(r1.mid), 4) == 0.1816 and r1.width < Fraction(1, 10**60),
        "c1~2.7535": round(float(c1.mid), 4) == 2.7535 and c1.width < Fraction(1, 10**60),
        "r0=1/2": r0.lo == r0.hi == Fraction(1, 2),
        "c0=1": CertScalar.symbol(0) == 1,
    }
    ok = all(checks.values())
    record("rate constants", ok, f"r1={float(r1.mid):.6f} c1={float(c1.mid):.6f} " + " ".join(f"{k}:{v}" for k, v in checks.items()))
    assert ok


def test_step_sum_exact():
    t0 = time.perf_counter()
    bad = [k for k in range(1, 21) if step_sum(k) != rho_pow(k) - 1]
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 1.0
    record("step sums = rho^k - 1, k<=20", ok, f"mismatches {bad}, {elapsed:.3f}s (limit 1s)")
    assert ok


def test_rate_asymptotics():
    above = []
    far = []
    worst = 0.0
    for k in range(1, 21):
        info = rate(k, 256)
        if not info.within_bound():
            above.append(k)
        if k >= 10:
            with mpmath.mp.workprec(256):
                n = horizon(k)
                bound = 1 / (2 * mpmath.mpf(n) ** (mpmath.log(oracles.rho()) / mpmath.log(2)))
                ratio = oracles.r_value(k) / bound
            dev = float(abs(ratio - 1))
            worst = max(worst, dev)
            if dev > 1e-3:
                far.append((k, round(dev, 7)))
    ok = not above and not far
    record(
        "r_k <= 1/(2 n^log2 rho), ratio within 1e-3 for k>=10",
        ok,
        f"bound violated at {above}; ratio off by >1e-3 at {far}; worst deviation {worst:.3e}",
    )
    assert ok


def test_rate_on_desk_scale_runs():
    t0 = time.perf_counter()
    failures = []
    count = 0
    for seed in range(100):
        oracle, x0 = make_oracle("quadratic", 20, seed)
        traj = run_silver(oracle, x0, 6)
        if not bound_check(traj, oracle.minimizer[0], 0.0, 6).passed:
            failures.append(("quadratic", seed))
        count += 1
    for name in ("logsumexp", "huber"):
        for seed in range(10):
            oracle, x0 = make_oracle(name, 20, seed)
            traj = run_silver(oracle, x0, 6)
            xstar, fstar = _fstar(oracle, x0, traj)
            if not bound_check(traj, xstar, fstar, 6).passed:
                failures.append((name, seed))
            count += 1
    elapsed = time.perf_counter() - t0
    ok = not failures
    record("f(x_63) - f* <= r_6 |x0 - x*|^2 (1 + 1e-9)", ok, f"{count - len(failures)}/{count} runs pass, {elapsed:.1f}s")
    assert ok, failures


def test_baseline_sanity():
    failures = []
    for name in ("quadratic", "logsumexp", "huber"):
        for seed in range(10):
            oracle, x0 = make_oracle(name, 20, seed)
            for k in (2, 4, 6):
                n = horizon(k)
                const = run_constant(oracle, x0, 1.0, n)
                nest = run_nesterov(oracle, x0, n)
                xstar, fstar = _fstar(oracle, x0, const, nest)
                r2 = float(np.sum((x0 - xstar) ** 2))
                if const.values[-1] - fstar > r2 / (4 * n) * (1 + 1e-9):
                    failures.append(("constant", name, seed, k))
                if nest.values[-1] - fstar > 2 * r2 / (n + 1) ** 2 * (1 + 1e-9):
                    failures.append(("nesterov", name, seed, k))
    code, out = cli("compare", "--k-min", "2", "--k-max", "10")
    misordered = []
    for row in csv.DictReader(io.StringIO(out)):
        c, s, v = (Fraction(row[key]) for key in ("constant_bound", "silver_bound", "nesterov_bound"))
        if not (c > s > v):
            misordered.append(int(row["k"]))
    ok = not failures and not misordered and code == 0
    record(
        "baselines: 1/(4n) and 2/(n+1)^2 runs; curves 1/(4n) > r_k > 2/(n+1)^2 for 2<=k<=10",
        ok,
        f"run failures {failures}; curve ordering fails at k={misordered}",
    )
    assert ok


def test_cocoercivity_suite():
    worst = np.inf
    failed = []
    for name in ("quadratic", "logsumexp", "huber"):
        for seed in range(5):
            oracle, x0 = make_oracle(name, 20, seed)
            for k in (3, 6):
                n = horizon(k)
                for traj in (run_silver(oracle, x0, k), run_constant(oracle, x0, 1.0, n), run_nesterov(oracle, x0, n)):
                    xstar, fstar = _fstar(oracle, x0, traj)
                    res = cocoercivity_audit(traj, xstar, fstar)
                    worst = min(worst, res.min_q / res.scale)
                    if not res.passed:
                        failed.append((name, seed, k, traj.method))
    bad = nonconvex_oracle(5)
    traj = run_silver(bad, np.linspace(-1, 1, 5), 4)
    flagged = cocoercivity_audit(traj, np.zeros(5), 0.0).min_q
    ok = not failed and flagged < 0
    record(
        "co-coercivity >= -1e-9 scale on convex runs; non-convex flagged",
        ok,
        f"convex failures {failed}, worst min Q/scale {worst:.3e}, non-convex min Q {flagged:.3e}",
    )
    assert ok


def test_randomized_identity_oracle():
    worst = 0.0
    for k in range(1, 5):
        errs = oracles.identity_relative_errors(build_cert(k), k, trials=100, seed=100 + k, prec=256)
        worst = max(worst, max(errs))
    ok = worst < 1e-20
    record("numeric identity at 100 random trajectories, k<=4, 256-bit", ok, f"max relative error {worst:.3e} (limit 1e-20)")
    assert ok


if __name__ == "__main__":
    import sys

    for fn in [v for k, v in sorted(globals().items()) if k.startswith("test_")]:
        try:
            fn()
        except AssertionError:
            pass
    sys.exit(0 if all(line.startswith("[PASS]") for line in RESULTS) else 1)
