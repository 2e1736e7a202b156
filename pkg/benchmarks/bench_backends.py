"""Head-to-head timing of the compiled kernel against the pure-python
fallback on the three operations the estimators spend their time in.

Run from the repository root:

    python3 benchmarks/bench_backends.py [--traces 100000] [--reps 5]

The same arrays are fed to both implementations and the outputs are checked
for agreement before any timing is reported, so a broken backend fails loudly
instead of benchmarking garbage.
"""

import argparse
import time

import numpy as np

from cyclotrace import _kernel_py
from cyclotrace.channel import ChannelParams, CircularString, generate_traces
from cyclotrace.estimator import EstimatorQuery, UnitPoint, _h_plan

try:
    from cyclotrace import _kernel
except ImportError:
    _kernel = None


def timed(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def banner(name, t_compiled, t_python):
    speedup = t_python / t_compiled if t_compiled > 0 else float("inf")
    print(f"{name:<32} compiled {t_compiled * 1e3:9.2f} ms   "
          f"python {t_python * 1e3:9.2f} ms   speedup {speedup:6.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--traces", type=int, default=20_000, help="batch size for the batch workload")
    ap.add_argument("--reps", type=int, default=3, help="repetitions; the best time wins")
    ap.add_argument("--seed", type=int, default=1, help="trace-generation seed")
    args = ap.parse_args()

    if _kernel is None:
        raise SystemExit("compiled kernel is not importable; build it first "
                         "(pip3 install -e . --no-build-isolation)")

    params = ChannelParams(q=0.3)
    batch = generate_traces(CircularString.of("10110100"), params, args.traces, seed=args.seed)
    weights = np.ones(len(batch))

    plans = {
        "t=2 plan": _h_plan(EstimatorQuery(t=2, z=UnitPoint.from_index(1, 8)), params),
        "t=5 plan": _h_plan(EstimatorQuery(t=5, z=UnitPoint.from_index(1, 8)), params),
    }

    rng = np.random.default_rng(args.seed)
    k = 3
    w3 = rng.uniform(-1, 1, size=k) + 1j * rng.uniform(-1, 1, size=k)
    singles = [(int(v), int(l)) for v, l in zip(batch.values[:2000], batch.lengths[:2000])]

    def single_chain(impl):
        def run():
            acc = 0j
            for v, l in singles:
                acc += impl.f_chain_packed(v, l, w3)
            return acc
        return run

    t_c, out_c = timed(single_chain(_kernel), args.reps)
    t_p, out_p = timed(single_chain(_kernel_py), args.reps)
    assert abs(out_c - out_p) < 1e-6 * max(1.0, abs(out_p))
    banner(f"f_chain_packed x{len(singles)}", t_c, t_p)

    for name, plan in plans.items():
        def rows_single(impl, plan=plan):
            def run():
                acc = None
                for v, l in singles[:200]:
                    r = impl.plan_rows_single(v, l, plan.W, plan.klist)
                    acc = r if acc is None else acc + r
                return acc
            return run

        t_c, out_c = timed(rows_single(_kernel), args.reps)
        t_p, out_p = timed(rows_single(_kernel_py), args.reps)
        np.testing.assert_allclose(out_c, out_p, atol=1e-8)
        banner(f"plan_rows_single x200 {name}", t_c, t_p)

        def batch_rows(impl, plan=plan):
            return lambda: impl.plan_batch_rows(batch.values, batch.lengths, weights, plan.W, plan.klist)

        t_c, out_c = timed(batch_rows(_kernel), args.reps)
        t_p, out_p = timed(batch_rows(_kernel_py), args.reps)
        np.testing.assert_allclose(out_c, out_p, atol=1e-6)
        banner(f"plan_batch_rows {name}", t_c, t_p)


if __name__ == "__main__":
    main()
