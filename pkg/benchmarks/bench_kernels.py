"""Compare the numba kernels with the numpy fallback.

The backend is fixed at import time by SILVER_DISABLE_NUMBA, so each mode
runs in its own interpreter.  Timings are best-of-``repeat`` after a warm-up
call (which also absorbs JIT compilation or cache loading).

    python benchmarks/bench_kernels.py [--repeat 5] [--json]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from silver import _kernels
from silver.engine import make_oracle
from silver.schedule import schedule_direct

repeat = int(sys.argv[1])


def best(fn):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


out = {"numba": _kernels.NUMBA_ENABLED, "timings": {}}
steps = np.array(schedule_direct(10).as_floats())  # n = 1023
for name in ("quadratic", "logsumexp", "huber"):
    for dim in (10, 200):
        o, x0 = make_oracle(name, dim, 0)
        out["timings"][f"gd {name} d={dim} n=1023"] = best(lambda: _kernels.gd_loop(o.kind, *o.params, x0, steps))
        out["timings"][f"nesterov {name} d={dim} n=1023"] = best(
            lambda: _kernels.nesterov_loop(o.kind, *o.params, x0, 1023, 1.0)
        )

rng = np.random.default_rng(0)
for m in (128, 1024):
    X, G = rng.standard_normal((2, m, 20))
    F = rng.standard_normal(m)
    out["timings"][f"cocoercivity {m}x{m} d=20"] = best(lambda: _kernels.cocoercivity_matrix(X, G, F))
print(json.dumps(out))
"""


def run_mode(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("SILVER_DISABLE_NUMBA", None)
    if disable:
        env["SILVER_DISABLE_NUMBA"] = "1"
    res = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print raw timings as JSON")
    args = ap.parse_args(argv)

    fast = run_mode(False, args.repeat)
    slow = run_mode(True, args.repeat)
    if args.json:
        print(json.dumps({"numba": fast, "numpy": slow}, indent=2))
        return 0
    if not fast["numba"]:
        print("numba is not installed; both columns use the numpy path")
    width = max(len(k) for k in slow["timings"])
    print(f"{'kernel':<{width}}  {'numba ms':>10}  {'numpy ms':>10}  {'speedup':>8}")
    for key, t_np in slow["timings"].items():
        t_nb = fast["timings"][key]
        print(f"{key:<{width}}  {t_nb * 1e3:>10.3f}  {t_np * 1e3:>10.3f}  {t_np / t_nb:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
