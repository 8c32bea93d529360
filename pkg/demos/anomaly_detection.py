"""Flagging outlier columns through the sparse part of a rank-1 fit.

190 columns share one direction (think: images of the same digit) and 10
do not.  After the factored decomposition with k=1, the sparse part is
near zero on the shared-direction columns and carries the whole deviation
of the odd ones, so its column norms rank the outliers cleanly.
"""

import numpy as np

import robustpca as rp

DIM, INLIERS, OUTLIERS, SEED = 256, 190, 10, 0


def build_data():
    rng = np.random.default_rng(SEED)
    direction = np.abs(rng.standard_normal(DIM))
    direction /= np.linalg.norm(direction)
    inlier_block = np.outer(direction, rng.uniform(5.0, 9.0, INLIERS))
    outlier_block = rng.standard_normal((DIM, OUTLIERS))
    outlier_block *= rng.uniform(5.0, 9.0, OUTLIERS) / np.linalg.norm(outlier_block, axis=0)
    return np.concatenate([inlier_block, outlier_block], axis=1)


def main():
    x = build_data()
    _, s, report = rp.solve_fffp(x, rp.SolverConfig(k=1))
    result = rp.anomaly_detect(s, threshold=5.0)
    print("decomposed %dx%d matrix at k=1 in %d iterations" % (*x.shape, report.iterations))

    print("\ncolumn scores (l2 norm of the sparse part), * marks score >= 5:")
    for j in range(0, x.shape[1], 10):
        block = result.scores[j : j + 10]
        bars = " ".join("%5.1f%s" % (v, "*" if v >= 5.0 else " ") for v in block)
        print("  cols %3d-%3d: %s" % (j, j + len(block) - 1, bars))

    print("\nflagged columns:", [int(j) for j in result.flagged])
    print("planted outliers:", list(range(INLIERS, INLIERS + OUTLIERS)))
    top = rp.top_m_columns(result.scores, OUTLIERS)
    print("top-%d scores flag exactly the planted set: %s"
          % (OUTLIERS, np.array_equal(top, np.arange(INLIERS, INLIERS + OUTLIERS))))


if __name__ == "__main__":
    main()
