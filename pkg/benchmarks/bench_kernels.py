"""Compare the numba kernels with the pure-numpy fallback.

Two measurements per backend:
  * kernel micro-benchmark: interval-set union/intersect/difference/subset
    on random sets of a few hundred intervals;
  * end to end: certify_all on the synthetic 5,000-rule ruleset.

Each backend runs in its own subprocess because the choice is made at
import time from SPOOFCERT_DISABLE_NUMBA.

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _measure(repeat: int) -> dict:
    import numpy as np

    from spoofcert import kernels
    from spoofcert.certifier import certify_all
    from spoofcert.parser import load_table, parse_ipassmt
    from spoofcert.preprocess import flatten
    from spoofcert.synth import synthetic_ruleset

    rng = np.random.default_rng(0)
    top = (1 << 32) - 1

    def random_set(n):
        pts = np.sort(rng.choice(top, size=2 * n, replace=False)).astype(np.int64)
        return pts.reshape(-1, 2)

    pairs = [(random_set(300), random_set(300)) for _ in range(50)]

    def kernel_round():
        for a, b in pairs:
            kernels.union(a, b)
            kernels.intersect(a, b, top)
            kernels.difference(a, b, top)
            kernels.is_subset(a, b)

    save, ip = synthetic_ruleset(n_ifaces=20, total_rules=5100)
    table, _ = load_table(save)
    flat = flatten(table, "FORWARD")
    ipassmt = parse_ipassmt(ip)

    kernel_round()
    certify_all(flat, ipassmt)  # warm-up, includes JIT compilation

    def best(fn):
        times = []
        for _ in range(repeat):
            t = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t)
        return min(times)

    return {
        "backend": kernels.BACKEND,
        "kernels_s": best(kernel_round),
        "certify_all_s": best(lambda: certify_all(flat, ipassmt)),
        "flat_rules": len(flat),
    }


def _run_child(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["SPOOFCERT_DISABLE_NUMBA"] = "1"
    else:
        env.pop("SPOOFCERT_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        print(json.dumps(_measure(args.repeat)))
        return
    rows = [_run_child(False, args.repeat), _run_child(True, args.repeat)]
    print(f"{'backend':<8} {'kernels (s)':>12} {'certify_all (s)':>16} {'flat rules':>11}")
    for r in rows:
        print(f"{r['backend']:<8} {r['kernels_s']:>12.4f} {r['certify_all_s']:>16.4f} {r['flat_rules']:>11}")
    if rows[0]["backend"] == "numba" and rows[1]["backend"] == "numpy":
        print(f"speed-up: kernels {rows[1]['kernels_s'] / rows[0]['kernels_s']:.1f}x, "
              f"certify_all {rows[1]['certify_all_s'] / rows[0]['certify_all_s']:.1f}x")


if __name__ == "__main__":
    main()
