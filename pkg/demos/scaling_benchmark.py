"""Wall time against problem size: the per-iteration cost is O(d * n * k).

Runs the fixed-rank solver for exactly 50 iterations on problems scaled
along each axis and fits a line through (size, seconds).  At this factor
width the whole loop is a handful of thin-matrix operations, so time
grows essentially linearly in both the sample count and the dimension.
"""

import robustpca as rp

BASE = {"d": 600, "n": 600, "r": 5, "fraction": 0.05, "seed": 0}
FACTORS = [0.2, 0.4, 0.6, 0.8, 1.0]
ITERS = 50


def main():
    for axis in ("samples", "dimension"):
        rows = rp.scaling_benchmark(BASE, axis, FACTORS, ITERS, method="fffp", k=5)
        r2 = rp.linear_fit_r2(rows)
        print("%s axis (d=%d base, n=%d base):" % (axis, BASE["d"], BASE["n"]))
        for size, seconds in rows:
            print("  size %5d: %.3fs" % (size, seconds))
        print("  least-squares line fit: R^2 = %.4f" % r2)
        print()
    print(rp.benchmark_csv(rows), end="")


if __name__ == "__main__":
    main()
