"""Least-squares projection of responses on basis evaluations.

The primary path is QR with column pivoting, which avoids forming normal
equations on the routinely ill-conditioned monomial designs.  Numerical rank
deficiency (relative pivot tolerance 1e-10) triggers a flagged ridge refit
with lambda = 1e-8 * trace(X'X)/K, which approximates the minimum-norm
solution for consistent systems.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .validation import check_finite

PIVOT_RTOL = 1e-10
RIDGE_FACTOR = 1e-8


@dataclass
class FitDiagnostics:
    rank: int
    n_columns: int
    condition_number: float
    used_ridge: bool

    @property
    def rank_deficient(self):
        return self.rank < self.n_columns


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    design: np.ndarray      # (M, K)
    responses: np.ndarray   # (M,) or (M, R)
    ridge_lambda: float = 0.0


def fit_least_squares(problem):
    """Solve min ||design @ beta - responses||^2.

    Accepts multiple response columns at once (shape (M, R)); the returned
    coefficients then have shape (K, R).  Returns (coefficients, diagnostics).
    """
    design = check_finite(problem.design, "design")
    responses = check_finite(problem.responses, "responses")
    if design.ndim != 2:
        raise ValueError("design must be a 2-d array")
    if responses.shape[0] != design.shape[0]:
        raise ValueError("responses and design row counts differ")
    m, k = design.shape
    single = responses.ndim == 1
    y = responses[:, None] if single else responses

    q, r, perm = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    pivot0 = diag[0] if diag.size else 0.0
    rank = int(np.sum(diag > PIVOT_RTOL * pivot0)) if pivot0 > 0.0 else 0
    cond = float(pivot0 / diag[-1]) if diag.size and diag[-1] > 0.0 else np.inf

    ridge_lambda = problem.ridge_lambda
    used_ridge = False
    if rank < k or ridge_lambda > 0.0:
        used_ridge = True
        if ridge_lambda <= 0.0:
            ridge_lambda = RIDGE_FACTOR * np.einsum("ij,ij->", design, design) / k
        gram = design.T @ design + ridge_lambda * np.eye(k)
        coef = np.linalg.solve(gram, design.T @ y)
    else:
        qt_y = q.T @ y
        coef_perm = scipy.linalg.solve_triangular(r, qt_y)
        coef = np.empty_like(coef_perm)
        coef[perm] = coef_perm

    diagnostics = FitDiagnostics(rank=rank, n_columns=k,
                                 condition_number=cond, used_ridge=used_ridge)
    return (coef[:, 0] if single else coef), diagnostics
