"""Low-rank plus sparse decomposition solvers.

Three augmented-Lagrangian solvers share one loop skeleton:

* ``solve_fffp`` -- factored model ``x = u @ c @ v.T + s`` with the rank
  fixed by the factor width ``k``; minimizes the l1 norm of ``s``.
* ``solve_uffp`` -- same factored model with ``k`` only an upper bound;
  adds ``lam`` times the log-det rank surrogate of the core ``c`` so the
  recovered rank can drop below ``k``.
* ``solve_ialm`` -- convex baseline (nuclear norm plus weighted l1),
  alternating singular-value and elementwise soft-thresholding.

All solves are deterministic: identical inputs give bit-identical outputs.
A single solve is sequential; distinct solves may run concurrently.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import (
    _as_matrix,
    ld_shrink,
    log_det_surrogate,
    polar_orthogonal,
    soft_threshold,
    svt,
    thin_svd,
)

__all__ = [
    "DivergenceError",
    "FactoredLowRank",
    "SolverConfig",
    "SolveReport",
    "IterationState",
    "SweepEntry",
    "init_factors",
    "solve_fffp",
    "solve_uffp",
    "solve_ialm",
    "relative_residual",
    "default_lambda_grid",
    "lambda_sweep",
]

INIT_STRATEGIES = ("truncated-svd", "random-orthonormal")

RANK_REL_TOL = 1e-6  # singular values below this fraction of the largest count as zero


class DivergenceError(RuntimeError):
    """A solver produced a non-finite iterate."""


@dataclass(frozen=True)
class FactoredLowRank:
    """Low-rank part stored as ``u @ c @ v.T``.

    u : (d, k) with orthonormal columns
    c : (k, k) core carrying the whole spectrum of the low-rank part
    v : (n, k) with orthonormal columns

    Treat the arrays as read-only; the dataclass is frozen but ndarrays
    cannot be.
    """

    u: np.ndarray
    c: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        k = self.c.shape[0]
        eye = np.eye(k)
        if np.linalg.norm(self.u.T @ self.u - eye) > 1e-8:
            raise ValueError("u does not have orthonormal columns")
        if np.linalg.norm(self.v.T @ self.v - eye) > 1e-8:
            raise ValueError("v does not have orthonormal columns")

    def dense(self):
        """Materialize the (d, n) low-rank matrix."""
        return (self.u @ self.c) @ self.v.T


@dataclass(frozen=True)
class SolverConfig:
    """Tunables shared by all solvers.

    k        : factor width; upper bound on the recovered rank
    lam      : balance weight. Required by solve_uffp (0 is allowed and
               degenerates to solve_fffp); solve_ialm defaults a missing
               value to 1/sqrt(max(d, n)); solve_fffp ignores it.
    rho0     : initial penalty weight
    kappa    : geometric penalty growth per iteration, must exceed 1
    tol      : relative-residual stopping threshold, in (0, 1)
    max_iter : iteration cap
    rho_cap  : ceiling on the penalty weight (unbounded geometric growth
               would overflow after a few hundred iterations)
    init     : "truncated-svd" or "random-orthonormal"
    seed     : seed for the random-orthonormal initialization
    """

    k: int
    lam: float | None = None
    rho0: float = 1e-4
    kappa: float = 1.5
    tol: float = 1e-3
    max_iter: int = 200
    rho_cap: float = 1e10
    init: str = "truncated-svd"
    seed: int = 0

    def validate(self, d, n):
        if not 1 <= self.k <= min(d, n):
            raise ValueError("k must satisfy 1 <= k <= min(d, n) = %d, got %r" % (min(d, n), self.k))
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be nonnegative, got %r" % self.lam)
        if self.rho0 <= 0:
            raise ValueError("rho0 must be positive, got %r" % self.rho0)
        if self.kappa <= 1:
            raise ValueError("kappa must exceed 1, got %r" % self.kappa)
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1), got %r" % self.tol)
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive, got %r" % self.max_iter)
        if self.rho_cap < self.rho0:
            raise ValueError("rho_cap must be at least rho0")
        if self.init not in INIT_STRATEGIES:
            raise ValueError("init must be one of %r, got %r" % (INIT_STRATEGIES, self.init))


@dataclass
class SolveReport:
    """Terminal and per-iteration statistics for one solve.

    svd_count is the raw number of thin-SVD invocations inside the
    iteration loop (the factor-orthogonalization and core updates for the
    factored solvers, the singular-value thresholding for the baseline);
    initialization is not counted.  svd_per_iter is the per-iteration
    breakdown (2 or 3 for the factored solvers, 1 for the baseline).
    """

    iterations: int
    svd_count: int
    svd_per_iter: int
    per_iter_residual: list[float]
    final_rank: int
    sparsity_ratio: float
    final_residual: float
    wall_time: float
    final_objective: float
    converged: bool


class IterationState(NamedTuple):
    """End-of-iteration snapshot passed to ``on_iteration`` callbacks.

    Arrays are the solver's live buffers: copy anything you keep.  ``rho``
    is the value after the end-of-iteration growth step.
    """

    t: int
    s: np.ndarray
    u: np.ndarray
    c: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    rho: float
    residual: float


class SweepEntry(NamedTuple):
    """One lambda_sweep run: the weight tried and everything it produced."""

    lam: float
    factors: FactoredLowRank
    s: np.ndarray
    report: SolveReport


def _orthonormalize(a):
    """Orthonormal basis for the columns of ``a``, sign-fixed for reproducibility."""
    q, r = np.linalg.qr(a)
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return q * signs


def _spectrum_rank(sigma):
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0
    return int((sigma > RANK_REL_TOL * sigma[0]).sum())


def init_factors(x, k, strategy="truncated-svd", seed=0):
    """Build starting factors (u, c, v) for the factored solvers.

    "truncated-svd" takes the top-k singular triplets of ``x`` and puts the
    singular values on the diagonal of ``c``; "random-orthonormal" draws
    seeded Gaussian matrices, orthonormalizes them, and sets
    ``c = u.T @ x @ v``.  Both are deterministic for fixed inputs.
    """
    x = _as_matrix(x, "x")
    d, n = x.shape
    if not 1 <= k <= min(d, n):
        raise ValueError("k must satisfy 1 <= k <= min(d, n) = %d, got %r" % (min(d, n), k))
    if strategy == "truncated-svd":
        f = thin_svd(x)
        u = np.ascontiguousarray(f.u[:, :k])
        v = np.ascontiguousarray(f.v[:, :k])
        c = np.diag(f.s[:k])
    elif strategy == "random-orthonormal":
        rng = np.random.default_rng(seed)
        u = _orthonormalize(rng.standard_normal((d, k)))
        v = _orthonormalize(rng.standard_normal((n, k)))
        c = (u.T @ x) @ v
    else:
        raise ValueError("init must be one of %r, got %r" % (INIT_STRATEGIES, strategy))
    return FactoredLowRank(u, c, v)


def relative_residual(x, l, s):
    """Feasibility gap ``||x - l - s||_F / ||x||_F``."""
    x = np.asarray(x, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if x.shape != l.shape or x.shape != s.shape:
        raise ValueError("shape mismatch: x %r, l %r, s %r" % (x.shape, l.shape, s.shape))
    norm_x = np.linalg.norm(x)
    if norm_x == 0.0:
        raise ValueError("x is the zero matrix; the relative residual is undefined")
    return float(np.linalg.norm(x - l - s) / norm_x)


def _solve_factored(x, cfg, lam_ld, on_iteration=None):
    """Shared loop of the two factored solvers.

    lam_ld is None for the fixed-rank model (plain core update) and the
    surrogate weight for the unfixed-rank model (core update shrunk by
    ``ld_shrink`` at threshold lam_ld / rho).
    """
    x = _as_matrix(x, "x")
    d, n = x.shape
    cfg.validate(d, n)
    t_start = time.perf_counter()

    factors = init_factors(x, cfg.k, cfg.init, cfg.seed)
    u, c, v = factors.u, factors.c, factors.v
    theta = np.zeros_like(x)
    rho = float(cfg.rho0)
    norm_x = np.linalg.norm(x)
    eye = np.eye(cfg.k)

    low_rank = (u @ c) @ v.T
    residuals = []
    svd_count = 0
    converged = False
    iterations = 0
    s = np.zeros_like(x)

    for t in range(1, cfg.max_iter + 1):
        iterations = t
        try:
            s = soft_threshold(x - low_rank + theta / rho, 1.0 / rho)
            m = x - s + theta / rho
            v = polar_orthogonal(m.T @ (u @ c))
            u = polar_orthogonal(m @ (v @ c.T))
            svd_count += 2
            c = (u.T @ m) @ v
            if lam_ld is not None:
                tau = lam_ld / rho
                if tau > 0.0:
                    c = ld_shrink(c, tau)
                    svd_count += 1
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise DivergenceError("non-finite iterate at iteration %d" % t) from exc
        low_rank = (u @ c) @ v.T
        r = x - low_rank - s
        theta = theta + rho * r
        res_norm = np.linalg.norm(r)
        residual = float(res_norm / norm_x) if norm_x > 0.0 else float(res_norm)
        if not math.isfinite(residual):
            raise DivergenceError("non-finite iterate at iteration %d" % t)
        residuals.append(residual)
        rho = min(rho * cfg.kappa, cfg.rho_cap)
        assert np.linalg.norm(u.T @ u - eye) <= 1e-8
        assert np.linalg.norm(v.T @ v - eye) <= 1e-8
        if on_iteration is not None:
            on_iteration(IterationState(t, s, u, c, v, theta, rho, residual))
        if residual <= cfg.tol:
            converged = True
            break

    objective = float(np.abs(s).sum())
    if lam_ld is not None:
        objective += lam_ld * log_det_surrogate(c)
    report = SolveReport(
        iterations=iterations,
        svd_count=svd_count,
        svd_per_iter=2 if (lam_ld is None or lam_ld == 0.0) else 3,
        per_iter_residual=residuals,
        final_rank=_spectrum_rank(np.linalg.svd(c, compute_uv=False)),
        sparsity_ratio=float(np.count_nonzero(s)) / s.size,
        final_residual=residuals[-1],
        wall_time=time.perf_counter() - t_start,
        final_objective=objective,
        converged=converged,
    )
    return FactoredLowRank(u, c, v), s, report


def solve_fffp(x, cfg, on_iteration=None):
    """Fixed-rank factored decomposition of ``x`` into ``u @ c @ v.T + s``.

    Per iteration: the sparse part is refreshed by elementwise
    soft-thresholding of the current misfit at 1/rho, the side factors by
    orthogonal-Procrustes (polar) updates, and the core by projection
    ``c = u.T @ (x - s + theta/rho) @ v``; the multiplier then absorbs the
    residual and rho grows by kappa (capped).  Stops when the relative
    residual reaches ``cfg.tol`` or after ``cfg.max_iter`` iterations.

    Returns ``(factors, s, report)``.
    """
    return _solve_factored(x, cfg, None, on_iteration)


def solve_uffp(x, cfg, on_iteration=None):
    """Rank-discovering variant of :func:`solve_fffp`.

    Identical loop except the core update is shrunk by :func:`ld_shrink`
    at threshold ``cfg.lam / rho``, so superfluous directions inside the
    width-k factorization are driven to exactly zero.  ``cfg.lam`` must be
    set; ``lam = 0`` reproduces solve_fffp bit for bit.

    Returns ``(factors, s, report)``.
    """
    if cfg.lam is None:
        raise ValueError("solve_uffp requires cfg.lam (0 is allowed)")
    return _solve_factored(x, cfg, float(cfg.lam), on_iteration)


def solve_ialm(x, cfg):
    """Convex baseline: nuclear norm plus ``lam`` times the l1 norm.

    Alternates ``l = svt(x - s + theta/rho, 1/rho)`` with
    ``s = soft_threshold(x - l + theta/rho, lam/rho)`` under the same
    multiplier and penalty schedule as the factored solvers.  ``cfg.lam``
    defaults to 1/sqrt(max(d, n)).  Each iteration factorizes the full
    (d, n) matrix, so this is the slow reference, not the scalable path.

    Returns ``(l, s, report)``.
    """
    x = _as_matrix(x, "x")
    d, n = x.shape
    cfg.validate(d, n)
    t_start = time.perf_counter()

    lam = float(cfg.lam) if cfg.lam is not None else 1.0 / math.sqrt(max(d, n))
    l = np.zeros_like(x)
    s = np.zeros_like(x)
    theta = np.zeros_like(x)
    rho = float(cfg.rho0)
    norm_x = np.linalg.norm(x)

    residuals = []
    svd_count = 0
    converged = False
    iterations = 0

    for t in range(1, cfg.max_iter + 1):
        iterations = t
        try:
            l = svt(x - s + theta / rho, 1.0 / rho)
            svd_count += 1
            s = soft_threshold(x - l + theta / rho, lam / rho)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise DivergenceError("non-finite iterate at iteration %d" % t) from exc
        r = x - l - s
        theta = theta + rho * r
        res_norm = np.linalg.norm(r)
        residual = float(res_norm / norm_x) if norm_x > 0.0 else float(res_norm)
        if not math.isfinite(residual):
            raise DivergenceError("non-finite iterate at iteration %d" % t)
        residuals.append(residual)
        rho = min(rho * cfg.kappa, cfg.rho_cap)
        if residual <= cfg.tol:
            converged = True
            break

    sigma = np.linalg.svd(l, compute_uv=False)
    report = SolveReport(
        iterations=iterations,
        svd_count=svd_count,
        svd_per_iter=1,
        per_iter_residual=residuals,
        final_rank=_spectrum_rank(sigma),
        sparsity_ratio=float(np.count_nonzero(s)) / s.size,
        final_residual=residuals[-1],
        wall_time=time.perf_counter() - t_start,
        final_objective=float(sigma.sum() + lam * np.abs(s).sum()),
        converged=converged,
    )
    return l, s, report


_GRID_EXPONENTS = (
    -3.0, -2.75, -2.5, -2.25, -2.0, -1.75, -1.5, -1.25, -1.0, -0.75, -0.5, 0.0, 1.0,
)


def default_lambda_grid(x):
    """Candidate grid for the rank-surrogate weight, anchored at the spectral norm.

    The useful weight tracks the data's dominant singular value: well
    below it the shrinkage never removes a direction, an order of
    magnitude above it the core collapses entirely and the sparse part
    swallows ``x``.  The transition between "keeps every direction" and
    "keeps only the real ones" can span less than half a decade, so the
    grid steps in quarter decades through the region where that window
    sits in practice and coarsens toward the collapse end.  Anchoring at
    the spectral norm keeps the grid scale-free: the same exponents work
    for unit-scale synthetic data and 0..255 pixel stacks alike.
    """
    x = _as_matrix(x, "x")
    top = float(np.linalg.norm(x, 2))
    if top == 0.0:
        raise ValueError("x is the zero matrix; no sensible grid exists")
    return top * 10.0 ** np.array(_GRID_EXPONENTS)


def lambda_sweep(x, cfg, grid=None, n_jobs=1):
    """Run :func:`solve_uffp` over a grid of weights and pick one run.

    Returns ``(entries, selected)`` where ``entries`` is one
    :class:`SweepEntry` per grid value (ascending) and ``selected`` indexes
    the preferred entry.

    Selection has to reject two failure modes that both pass the residual
    test: full collapse (the core shrinks to rank zero and the sparse part
    swallows ``x``) and partial collapse (a real direction is lost and its
    mass dumped into the sparse part).  Healthy runs across a sweep agree
    closely on the sparse part they extract; collapsed runs inflate its l1
    mass and its nonzero fraction well beyond that consensus.  The rule:
    among converged runs with nonzero rank, keep those whose sparse-part
    l1 mass is within 1.5x the sweep median and whose nonzero fraction is
    within twice the median plus a small slack; of the kept runs, find the
    lowest rank reached and take the smallest weight that reaches it.
    That lowest clean rank is where the superfluous directions are gone,
    and its smallest weight is the least-biased run on that plateau
    (shrinkage bias on the surviving directions grows with the weight).
    If every run failed, the smallest final residual wins.

    ``n_jobs`` > 1 solves grid points in independent worker threads; the
    result is identical to the sequential sweep.
    """
    x = _as_matrix(x, "x")
    grid = default_lambda_grid(x) if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-D sequence of weights")
    if np.any(grid < 0):
        raise ValueError("grid weights must be nonnegative")
    grid = np.sort(grid)

    def run(lam):
        run_cfg = SolverConfig(
            k=cfg.k, lam=float(lam), rho0=cfg.rho0, kappa=cfg.kappa, tol=cfg.tol,
            max_iter=cfg.max_iter, rho_cap=cfg.rho_cap, init=cfg.init, seed=cfg.seed,
        )
        factors, s, report = solve_uffp(x, run_cfg)
        return SweepEntry(float(lam), factors, s, report)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            entries = list(pool.map(run, grid))
    else:
        entries = [run(lam) for lam in grid]

    candidates = [
        i for i, e in enumerate(entries) if e.report.converged and e.report.final_rank > 0
    ]
    selected = None
    if candidates:
        mass = {i: float(np.abs(entries[i].s).sum()) for i in candidates}
        density = {i: entries[i].report.sparsity_ratio for i in candidates}
        mass_gate = 1.5 * float(np.median(list(mass.values())))
        density_gate = 2.0 * float(np.median(list(density.values()))) + 0.02
        clean = [i for i in candidates if mass[i] <= mass_gate and density[i] <= density_gate]
        if clean:
            lowest = min(entries[i].report.final_rank for i in clean)
            selected = min(i for i in clean if entries[i].report.final_rank == lowest)
    if selected is None:
        selected = min(range(len(entries)), key=lambda i: entries[i].report.final_residual)
    return entries, selected
