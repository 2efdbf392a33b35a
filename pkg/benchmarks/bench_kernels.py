"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 5]

Each line reports the best of ``--repeat`` runs after one warm-up call (the
warm-up also absorbs numba compilation) and checks that both variants agree.
"""

import argparse
import time

import numpy as np

from afc import kernels
from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.minimizer import multi_output_minimize
from afc.netlist import PlaNetlist
from afc.tabulator import build_table


def best_of(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    rng = np.random.default_rng(0)

    # a 10-input, 9-output cover from the sigmoid table
    table = build_table(ActivationSpec.from_name("sigmoid"), FixedPointFormat(1, 9), FixedPointFormat(1, 8))
    net = PlaNetlist.from_cover(multi_output_minimize(table, exact_limit=0), table.name, table)
    masks, values, or_matrix = net.arrays()
    codes = rng.integers(0, 1 << 10, size=200_000).astype(np.int64)
    yield "eval_cover 200k codes", kernels.eval_cover_numpy, kernels.eval_cover_numba, (masks, values, or_matrix, codes)

    tanh = build_table(ActivationSpec.from_name("tanh"), FixedPointFormat(1, 3), FixedPointFormat(1, 6))
    lo, hi = tanh.saturation_codes()
    x = rng.uniform(-3, 3, size=1_000_000)
    args = (x, tanh.entries, kernels.KIND_ODD, tanh.in_fmt.step, False, tanh.region.lo, tanh.region.hi, lo, hi,
            float(tanh.gain_code), float(tanh.out_fmt.scale), False)
    yield "activation_codes 1M", kernels.activation_codes_numpy, kernels.activation_codes_numba, args

    a = rng.normal(size=1_000_000)
    b = a + rng.normal(scale=1e-3, size=a.size)
    yield "mean_abs_error 1M", kernels.mean_abs_error_numpy, kernels.mean_abs_error_numba, (a, b)

    onset = rng.random(1 << 14) < 0.5
    cubes = rng.integers(0, 1 << 14, size=(300, 2))
    m = cubes[:, 0].astype(np.int64)
    v = (cubes[:, 1] & m).astype(np.int64)
    yield "hazard scan 14 bits", kernels.uncovered_adjacent_pairs_numpy, kernels.uncovered_adjacent_pairs_numba, (onset, m, v, 14)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':24s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}  agree")
    for name, f_np, f_nb, fargs in cases():
        t_np, r_np = best_of(f_np, fargs, args.repeat)
        t_nb, r_nb = best_of(f_nb, fargs, args.repeat)
        if isinstance(r_np, float):
            agree = abs(r_np - r_nb) <= 1e-12 * max(1.0, abs(r_np))
        else:
            r_nb = np.asarray(r_nb)
            if r_nb.ndim == 2 and len(r_nb):
                r_nb = r_nb[np.lexsort((r_nb[:, 1], r_nb[:, 0]))]
            agree = np.array_equal(np.asarray(r_np), r_nb)
        print(f"{name:24s} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:8.1f}x  {agree}")


if __name__ == "__main__":
    main()
