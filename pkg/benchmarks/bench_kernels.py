"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import timeit

import numpy as np

from magwkb.kernels import backends


def _cases(rng):
    out = []
    for n in (16, 32, 64):
        a = rng.standard_normal((n + 1, n + 1)) + 1j * rng.standard_normal((n + 1, n + 1))
        b = rng.standard_normal((n + 1, n + 1)) + 1j * rng.standard_normal((n + 1, n + 1))
        i, j = np.indices(a.shape)
        a[i + j > n] = 0
        b[i + j > n] = 0
        out.append((f"trunc_mul2 N={n}", "trunc_mul2", (a, b, n)))
    for n in (64, 512):
        a = rng.standard_normal(n + 1) + 0j
        b = rng.standard_normal(n + 1) + 0j
        out.append((f"trunc_mul1 N={n}", "trunc_mul1", (a, b, n)))
    for m in (256, 510):
        psi = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        ux = np.exp(1j * rng.uniform(0, 2 * np.pi, (m, m)))
        uy = np.exp(1j * rng.uniform(0, 2 * np.pi, (m, m)))
        out.append((f"peierls_apply {m}x{m}", "peierls_apply", (psi, ux, uy, 0.37)))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    impls = backends()
    rows = []
    print(f"{'kernel':<24}" + "".join(f"{name:>14}" for name in impls) + f"{'speedup':>10}")
    for label, fn, inputs in _cases(rng):
        times = {}
        ref = None
        for name, mod in impls.items():
            f = getattr(mod, fn)
            res = np.asarray(f(*inputs))
            ref = res if ref is None else ref
            err = float(np.max(np.abs(res - ref)) / max(np.max(np.abs(ref)), 1e-300))
            assert err < 1e-12, (label, name, err)
            number = max(1, int(0.2 / max(timeit.timeit(lambda: f(*inputs), number=1), 1e-6)))
            t = min(timeit.repeat(lambda: f(*inputs), number=number, repeat=args.repeat)) / number
            times[name] = t
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        rows.append({"kernel": label, "seconds": times, "speedup": speed})
        print(f"{label:<24}" + "".join(f"{times[n] * 1e3:>12.3f}ms" for n in impls)
              + f"{speed:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
