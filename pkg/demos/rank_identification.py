"""Finding the true rank when only a loose upper bound is known.

The factor width is deliberately over-specified (k=25 for a rank-5 truth).
The fixed-rank solver then keeps 25 directions; the rank-discovering
variant shrinks the superfluous ones to zero once its weight is in the
right range.  The sweep helper tries a spectral-norm-anchored grid and
picks a run automatically.
"""

import numpy as np

import robustpca as rp

D, N, RANK, FRACTION, SEED, K = 400, 400, 5, 0.05, 7, 25


def main():
    problem = rp.make_problem(D, N, RANK, FRACTION, seed=SEED)
    norm_l = np.linalg.norm(problem.l_star)

    factors, _, report = rp.solve_fffp(problem.x, rp.SolverConfig(k=K))
    print("fixed-rank solver with k=%d: rank %d (cannot drop below the width it was given)"
          % (K, report.final_rank))

    print("\nweight sweep with k=%d:" % K)
    entries, selected = rp.lambda_sweep(problem.x, rp.SolverConfig(k=K))
    for i, entry in enumerate(entries):
        recovery = np.linalg.norm(entry.factors.dense() - problem.l_star) / norm_l
        tag = "  <-- selected" if i == selected else ""
        print("  lam=%9.2f  rank=%2d  residual=%.1e  recovery=%.1e%s"
              % (entry.lam, entry.report.final_rank, entry.report.final_residual,
                 recovery, tag))

    chosen = entries[selected]
    print("\nselected run identifies rank %d (true rank %d) with recovery %.2e"
          % (chosen.report.final_rank, RANK,
             np.linalg.norm(chosen.factors.dense() - problem.l_star) / norm_l))


if __name__ == "__main__":
    main()
