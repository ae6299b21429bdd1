"""Time the numba and numpy kernel paths side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each case first checks the two paths agree: membership masks exactly,
covariance entries to 1e-14 relative (``exp`` may round differently by one ulp).
The first numba call (compilation or cache load) is excluded.
"""

import argparse
import json
import platform
import timeit

import numpy as np

from backscatter_rti import _accel
from backscatter_rti.geometry import Point3, build_grid
from backscatter_rti.kernels import ellipse_membership, exp_covariance


def _grid(n_u, n_v):
    return build_grid(Point3(-1.6, 2.0, 0.0), Point3(1, 0, 0), Point3(0, 0, 1), n_u, n_v, 0.1)


def _links(q, rng):
    readers = np.tile([0.0, 0.0, 1.2], (q, 1))
    tags = np.column_stack([rng.uniform(-1.5, 1.5, q), np.full(q, 2.0), rng.uniform(0.1, 1.5, q)])
    return readers, tags, np.linalg.norm(tags - readers, axis=1)


def cases(rng):
    for n_u, n_v, q in [(32, 16, 8), (64, 32, 64), (128, 64, 256)]:
        cells = _grid(n_u, n_v).centers
        readers, tags, lengths = _links(q, rng)
        yield (f"membership Q={q} N={n_u * n_v}",
               lambda use, c=cells, r=readers, t=tags, l=lengths:
               ellipse_membership(c, r, t, l, 0.1, use_numba=use), 0.0)
    for n_u, n_v in [(32, 16), (64, 32), (64, 64)]:
        centers = _grid(n_u, n_v).centers
        yield (f"covariance N={n_u * n_v}",
               lambda use, c=centers: exp_covariance(c, 0.5, 3.0, use_numba=use), 1e-14)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results to this file")
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rows = []
    print(f"{'case':<28} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, fn, rtol in cases(np.random.default_rng(0)):
        if not np.allclose(fn(True), fn(False), rtol=rtol, atol=0):
            raise SystemExit(f"{name}: backends disagree")
        t_np = min(timeit.repeat(lambda: fn(False), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn(True), number=1, repeat=args.repeat))
        rows.append({"case": name, "numpy_s": t_np, "numba_s": t_nb})
        print(f"{name:<28} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} {t_np / t_nb:>7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"python": platform.python_version(), "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
