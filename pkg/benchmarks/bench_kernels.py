"""Compare the compiled kernel backend against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py

Times the two hot kernels on workloads shaped like real runs (polytope
walks during process sampling; tree growth inside the boosted learner) and
verifies the outputs agree bit-for-bit while timing them.
"""

import time

import numpy as np

from atebench._kernels import _fallback

try:
    from atebench._kernels import _core
except ImportError:
    _core = None


def _time(fn, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_chain(mod, m, d, n_steps, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, d))
    a /= np.sqrt((a * a).sum(axis=1))[:, None]
    r = np.abs(rng.standard_normal(m)) + 1.0
    a_f = np.asfortranarray(a)

    def run():
        walk_rng = np.random.default_rng(seed + 1)
        v = np.zeros(d)
        slack = np.empty(m)
        _fallback.colwise_matvec(a_f, v, slack)
        np.subtract(r, slack, out=slack)
        start, start_slack = v.copy(), slack.copy()
        normals = walk_rng.standard_normal((n_steps, d))
        u_mix = walk_rng.random(n_steps)
        u_axis = walk_rng.random(n_steps)
        u_step = walk_rng.random(n_steps)
        keep = np.arange(n_steps - 1, n_steps, dtype=np.int64)
        out = np.empty((1, d))
        status, _, _ = mod.run_chain(
            a_f, r, v, slack, start, start_slack, normals,
            u_mix, u_axis, u_step, 0.2, 0, 512, keep, out, 0,
        )
        assert status == mod.CHAIN_OK
        return out.copy()

    return _time(run)


def bench_tree(mod, n, p, n_trees, seed=0):
    rng = np.random.default_rng(seed)
    bins = rng.integers(0, 64, size=(n, p)).astype(np.uint8)
    y = rng.random(n)
    rows = np.arange(n, dtype=np.int64)
    n_bins = np.full(p, 64, dtype=np.int64)

    def run():
        eta = np.zeros(n)
        trees = []
        for _ in range(n_trees):
            prob = 1.0 / (1.0 + np.exp(-eta))
            grad = prob - y
            hess = prob * (1.0 - prob)
            tree = mod.build_tree(bins, grad, hess, rows, n_bins, 2, 1.0, 1e-3, 5, 0.0)
            trees.append(tree)
            eta += 0.01  # keep gradients moving without full prediction
        return trees[-1]

    return _time(run)


def main():
    if _core is None:
        print("compiled backend unavailable; only timing the numpy fallback")
    rows = []

    for label, m, d, steps in (
        ("chain  m=208 d=14 60k steps", 208, 14, 60_000),
        ("chain  m=12802 d=53 10k steps", 12_802, 53, 10_000),
    ):
        t_np, out_np = bench_chain(_fallback, m, d, steps)
        if _core is not None:
            t_cy, out_cy = bench_chain(_core, m, d, steps)
            assert np.array_equal(out_np, out_cy), "backends disagree"
            rows.append((label, t_np, t_cy))
        else:
            rows.append((label, t_np, None))

    for label, n, p, trees in (
        ("tree   n=2k p=8  200 trees", 2_000, 8, 200),
        ("tree   n=100k p=8 50 trees", 100_000, 8, 50),
    ):
        t_np, out_np = bench_tree(_fallback, n, p, trees)
        if _core is not None:
            t_cy, out_cy = bench_tree(_core, n, p, trees)
            assert all(np.array_equal(x, y) for x, y in zip(out_np[:5], out_cy[:5]))
            rows.append((label, t_np, t_cy))
        else:
            rows.append((label, t_np, None))

    print(f"{'workload':34s} {'numpy':>10s} {'cython':>10s} {'speedup':>8s}")
    for label, t_np, t_cy in rows:
        if t_cy is None:
            print(f"{label:34s} {t_np * 1e3:9.1f}ms {'-':>10s} {'-':>8s}")
        else:
            print(f"{label:34s} {t_np * 1e3:9.1f}ms {t_cy * 1e3:9.1f}ms {t_np / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
