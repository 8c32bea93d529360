"""Post-hoc metrics, anomaly scoring on the sparse part, and wall-time scaling runs."""

import time
from dataclasses import dataclass

import numpy as np

from .datagen import make_problem
from .solvers import SolverConfig, solve_fffp, solve_ialm, solve_uffp

__all__ = [
    "Metrics",
    "AnomalyResult",
    "numerical_rank",
    "sparsity_ratio",
    "compute_metrics",
    "anomaly_detect",
    "top_m_columns",
    "scaling_benchmark",
    "linear_fit_r2",
    "benchmark_csv",
]


@dataclass(frozen=True)
class Metrics:
    """Quality summary of one decomposition; recovery_error needs ground truth."""

    rank_l: int
    sparsity_ratio: float
    residual: float
    recovery_error: float | None = None


@dataclass(frozen=True)
class AnomalyResult:
    """Per-column l2 norms of the sparse part and the indices flagged as outliers."""

    scores: np.ndarray
    flagged: np.ndarray


def numerical_rank(m, rel_tol=1e-6):
    """Number of singular values above ``rel_tol`` times the largest one.

    The zero matrix has rank 0.  The default cutoff separates genuinely
    zeroed directions from round-off.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1), got %r" % rel_tol)
    m = np.asarray(m, dtype=np.float64)
    sigma = np.linalg.svd(m, compute_uv=False)
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0
    return int((sigma > rel_tol * sigma[0]).sum())


def sparsity_ratio(s, abs_tol=0.0):
    """Fraction of entries with magnitude above ``abs_tol``.

    The solvers produce exact zeros, so the default counts nonzeros
    literally; pass a small tolerance to compare against dense almost-zero
    matrices.
    """
    if abs_tol < 0:
        raise ValueError("abs_tol must be nonnegative, got %r" % abs_tol)
    s = np.asarray(s, dtype=np.float64)
    return float((np.abs(s) > abs_tol).sum()) / s.size


def compute_metrics(x, l, s, l_star=None, rank_rel_tol=1e-6, sparsity_abs_tol=0.0):
    """Bundle rank, sparsity, residual and (optionally) recovery error."""
    x = np.asarray(x, dtype=np.float64)
    norm_x = np.linalg.norm(x)
    residual = float(np.linalg.norm(x - l - s) / norm_x) if norm_x > 0 else 0.0
    recovery = None
    if l_star is not None:
        norm_l = np.linalg.norm(l_star)
        if norm_l == 0.0:
            raise ValueError("l_star is zero; recovery error is undefined")
        recovery = float(np.linalg.norm(l - l_star) / norm_l)
    return Metrics(
        rank_l=numerical_rank(l, rank_rel_tol),
        sparsity_ratio=sparsity_ratio(s, sparsity_abs_tol),
        residual=residual,
        recovery_error=recovery,
    )


def anomaly_detect(s, threshold):
    """Score every column of the sparse part by its l2 norm and flag the large ones.

    Columns whose score reaches ``threshold`` are flagged; inlier columns
    of a well-separated decomposition score near zero.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative, got %r" % threshold)
    s = np.asarray(s, dtype=np.float64)
    scores = np.linalg.norm(s, axis=0)
    return AnomalyResult(scores=scores, flagged=np.flatnonzero(scores >= threshold))


def top_m_columns(scores, m):
    """Indices of the m largest scores, ascending; ties resolve to lower indices."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 0 <= m <= scores.size:
        raise ValueError("m must lie in [0, %d], got %r" % (scores.size, m))
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:m])


_BENCH_TOL = 1e-300  # unreachable: benchmark runs are iteration-exact, never tol-stopped


def scaling_benchmark(base_params, axis, factors, iters, method="fffp", k=5,
                      lam=None, repeats=3, seed=0):
    """Median wall time of fixed-iteration solves on progressively scaled problems.

    ``base_params`` holds :func:`make_problem` keyword arguments for the
    full-size problem; ``axis`` picks which dimension the ``factors``
    rescale ("samples" scales n, "dimension" scales d).  Every run executes
    exactly ``iters`` iterations (the stopping tolerance is unreachable)
    and is repeated ``repeats`` times, keeping the median to damp scheduler
    noise.  Generation happens outside the timed section; the timed section
    is the solver call alone and uses the random-orthonormal start so its
    cost stays proportional to d*n*k (the truncated-SVD start would add a
    full factorization of x, which scales superlinearly and is not what
    the per-iteration claim is about).

    Returns a list of ``(size, seconds)`` rows, one per factor.
    """
    if axis not in ("samples", "dimension"):
        raise ValueError('axis must be "samples" or "dimension", got %r' % axis)
    factors = list(factors)
    if not factors or any(f <= 0 for f in factors):
        raise ValueError("factors must be a nonempty list of positive scalars")
    if sorted(factors) != factors:
        raise ValueError("factors must be ascending")
    solve = {"fffp": solve_fffp, "uffp": solve_uffp, "ialm": solve_ialm}[method]

    rows = []
    for factor in factors:
        params = dict(base_params)
        if axis == "samples":
            params["n"] = max(1, int(round(params["n"] * factor)))
            size = params["n"]
        else:
            params["d"] = max(1, int(round(params["d"] * factor)))
            size = params["d"]
        problem = make_problem(**params)
        cfg = SolverConfig(k=k, lam=lam, tol=_BENCH_TOL, max_iter=iters,
                           init="random-orthonormal", seed=seed)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            solve(problem.x, cfg)
            times.append(time.perf_counter() - t0)
        rows.append((size, float(np.median(times))))
    return rows


def linear_fit_r2(rows):
    """R-squared of the least-squares line through ``(size, seconds)`` rows."""
    sizes = np.array([row[0] for row in rows], dtype=np.float64)
    seconds = np.array([row[1] for row in rows], dtype=np.float64)
    if sizes.size < 2:
        return float("nan")
    slope, intercept = np.polyfit(sizes, seconds, 1)
    predicted = slope * sizes + intercept
    ss_res = float(((seconds - predicted) ** 2).sum())
    ss_tot = float(((seconds - seconds.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot


def benchmark_csv(rows):
    """Render benchmark rows as CSV text with a ``size,seconds`` header."""
    lines = ["size,seconds"]
    lines += ["%d,%.9g" % (size, seconds) for size, seconds in rows]
    return "\n".join(lines) + "\n"
