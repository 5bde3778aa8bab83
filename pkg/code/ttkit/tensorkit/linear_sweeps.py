# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals,too-many-branches,too-many-statements
"""
Linear least-squares problems in TT format: AMEn for A x = b (plain,
normal-equation and Tikhonov modes), operator-valued regression
min ||A X - B||^2 + gamma ||L X||^2, IRLS for (group) LASSO and a truncated
Richardson iteration.
"""

import numpy as np
import scipy.linalg
from prefect.logging import get_logger

from tensorkit.contractions import ContractionCache
from tensorkit.contractions import SolveReport
from tensorkit.tt_core import TTOperator
from tensorkit.tt_core import TTTrain
from tensorkit.tt_core import add
from tensorkit.tt_core import apply_op
from tensorkit.tt_core import contract_full
from tensorkit.tt_core import diag_operator
from tensorkit.tt_core import identity_operator
from tensorkit.tt_core import min_rank_factor
from tensorkit.tt_core import norm
from tensorkit.tt_core import operator_add
from tensorkit.tt_core import operator_matmul
from tensorkit.tt_core import orthogonalize
from tensorkit.tt_core import random_train
from tensorkit.tt_core import scale
from tensorkit.tt_core import scale_operator
from tensorkit.tt_core import transpose_operator
from tensorkit.tt_core import truncated_gradient_step
from tensorkit.tt_core import tt_round
from tensorkit.tt_core import tt_svd

logger = get_logger("tensorkit.linear_sweeps")

MAX_SWEEPS = 50
DEFAULT_TOL = 1e-10
DIVERGENCE_FACTOR = 10.0
DIVERGENCE_WINDOW = 3
EPS_FLOOR = 1e-8
# Residuals below this are roundoff and never count as divergence.
DIVERGENCE_FLOOR = 1e-8
SYMMETRY_TOL = 1e-12


def normal_operator(A: TTOperator, gamma: float = 0.0, L: TTOperator | None = None) -> TTOperator:
    """A^T A + gamma L^T L; L defaults to the identity."""
    M = operator_matmul(transpose_operator(A), A)
    if gamma > 0:
        if L is None:
            L = identity_operator(A.col_sizes)
        M = operator_add(M, scale_operator(operator_matmul(transpose_operator(L), L), gamma))
    return M


def normal_system(
    A: TTOperator, b: TTTrain, gamma: float = 0.0, L: TTOperator | None = None
) -> tuple:
    """(A^T A + gamma L^T L, A^T b)."""
    return normal_operator(A, gamma, L), apply_op(transpose_operator(A), b)


def is_symmetric_matrix(H: np.ndarray) -> bool:
    """True when H equals its transpose up to SYMMETRY_TOL relative to its largest entry."""
    scale_ = float(np.max(np.abs(H))) if H.size else 0.0
    return bool(np.max(np.abs(H - H.T), initial=0.0) <= SYMMETRY_TOL * max(scale_, 1e-300))


def _truncated_columns(M: np.ndarray, rank: int) -> np.ndarray:
    U, s, _ = scipy.linalg.svd(M, full_matrices=False)
    if not s.size or s[0] == 0.0:
        return U[:, :0]
    rho = min(rank, int(np.sum(s > 1e-14 * s[0])))
    return U[:, :rho] * s[:rho]


class _LinearSweeper:
    def __init__(self, A, b, x0, enrich_rank, max_rank, solver):
        self.A = A
        self.b = b
        self.N = A.order
        self.enrich_rank = enrich_rank
        self.max_rank = max_rank
        self.cores = list(orthogonalize(x0, 0).cores)
        self.cache = ContractionCache(A, b)
        self.cache.build_right(self.cores)
        self.report = SolveReport(solver)

    def solve_here(self, n: int) -> None:
        H = self.cache.local_operator(n)
        f = self.cache.local_rhs(n)
        symmetric = is_symmetric_matrix(H)
        if symmetric:
            H = 0.5 * (H + H.T)
        try:
            v = scipy.linalg.solve(H, f, assume_a="sym" if symmetric else "gen")
        except scipy.linalg.LinAlgError:
            v = scipy.linalg.lstsq(H, f)[0]
        self.cores[n] = v.reshape(self.cores[n].shape)
        if symmetric:
            self.report.objective.append(float(0.5 * v @ (H @ v) - f @ v))
        else:
            self.report.objective.append(float(np.linalg.norm(H @ v - f)))

    def move_right(self, n: int) -> None:
        core, nxt = self.cores[n], self.cores[n + 1]
        a, i, _ = core.shape
        if self.enrich_rank > 0:
            Z = np.concatenate(
                [self.cache.rhs_left_enrichment(n), -self.cache.left_enrichment(n, core)], axis=2
            )
            extra = _truncated_columns(Z.reshape(a * i, -1), self.enrich_rank)
            if extra.shape[1]:
                core = np.concatenate([core, extra.reshape(a, i, -1)], axis=2)
                nxt = np.concatenate([nxt, np.zeros((extra.shape[1],) + nxt.shape[1:])], axis=0)
        Q, P = min_rank_factor(core.reshape(a * i, -1), self.max_rank)
        self.cores[n] = Q.reshape(a, i, -1)
        self.cores[n + 1] = np.tensordot(P, nxt, axes=(1, 0))
        self.cache.update_left(n, self.cores[n])

    def move_left(self, n: int) -> None:
        prev, core = self.cores[n - 1], self.cores[n]
        _, i, b = core.shape
        if self.enrich_rank > 0:
            Z = np.concatenate(
                [self.cache.rhs_right_enrichment(n), -self.cache.right_enrichment(n, core)], axis=0
            )
            extra = _truncated_columns(Z.reshape(Z.shape[0], -1).T, self.enrich_rank).T
            if extra.shape[0]:
                core = np.concatenate([core, extra.reshape(-1, i, b)], axis=0)
                prev = np.concatenate([prev, np.zeros(prev.shape[:2] + (extra.shape[0],))], axis=2)
        Q, P = min_rank_factor(core.reshape(core.shape[0], -1).T, self.max_rank)
        self.cores[n] = Q.T.reshape(-1, i, b)
        self.cores[n - 1] = np.tensordot(prev, P.T, axes=(2, 0))
        self.cache.update_right(n, self.cores[n])

    def sweep(self) -> None:
        for n in range(self.N - 1):
            self.solve_here(n)
            self.move_right(n)
        for n in range(self.N - 1, 0, -1):
            self.solve_here(n)
            self.move_left(n)
        if self.N == 1:
            self.solve_here(0)

    def train(self) -> TTTrain:
        return TTTrain(tuple(self.cores))


def relative_residual(A: TTOperator, x: TTTrain, b: TTTrain, tol: float) -> float:
    b_norm = norm(b)
    r = tt_round(add(apply_op(A, x), scale(b, -1.0)), tol / 10.0)
    return norm(r) / b_norm if b_norm > 0 else norm(r)


def amen_linear(
    A: TTOperator,
    b: TTTrain,
    x0: TTTrain | None = None,
    sweeps: int = MAX_SWEEPS,
    tol: float = DEFAULT_TOL,
    enrich_rank: int = 2,
    normal: bool = False,
    gamma: float = 0.0,
    L: TTOperator | None = None,
    max_rank: int | None = None,
    seed: int = 0,
) -> tuple:
    """
    AMEn sweeps for A x = b with Galerkin local solves.

    Local systems that are symmetric are solved as such and report the
    energy; others get a general LU solve and report the local residual
    norm. ``normal`` (or ``gamma > 0``) replaces the system by
    A^T A + gamma L^T L, A^T b. The residual of the solved system is measured
    in TT arithmetic after every sweep; success means it is at most ``tol``.
    A residual above max(tol, 1e-8) that grew tenfold over three sweeps stops
    the solver with converged=False.

    Args:
        A: square operator, or any operator with ``normal``.
        b: right-hand side train.
        x0: initial guess; a seeded rank-1 train by default.
        sweeps: maximum number of forward-backward sweeps.
        tol: relative residual target.
        enrich_rank: residual directions added per bond and half-sweep.
        normal: solve the normal equations.
        gamma: Tikhonov weight.
        L: Tikhonov operator, the identity by default.
        max_rank: cap on the ranks after each move.
        seed: seed of the default initial guess.

    Returns:
        (x, SolveReport).
    """
    if A.row_sizes != b.mode_sizes:
        raise ValueError(f"operator rows {A.row_sizes} do not match right-hand side {b.mode_sizes}")
    if enrich_rank < 0:
        raise ValueError(f"enrich_rank must be non-negative, got {enrich_rank}")
    if normal or gamma > 0:
        A, b = normal_system(A, b, gamma, L)
    elif not A.is_square:
        raise ValueError("non-square operator; pass normal=True for the least-squares problem")
    if x0 is None:
        x0 = random_train(A.col_sizes, [1] * (A.order - 1), seed)
    elif x0.mode_sizes != A.col_sizes:
        raise ValueError(f"initial guess modes {x0.mode_sizes} do not match operator {A.col_sizes}")
    if norm(b) == 0.0:
        zero = TTTrain(tuple(np.zeros((1, I, 1)) for I in A.col_sizes))
        report = SolveReport("amen_linear", final_residual=0.0)
        return zero, report.finish(zero.ranks, True)

    sweeper = _LinearSweeper(A, b, x0, enrich_rank, max_rank, "amen_linear")
    report = sweeper.report
    converged = False
    for sweep in range(1, sweeps + 1):
        sweeper.sweep()
        report.sweeps = sweep
        res = relative_residual(A, sweeper.train(), b, tol)
        report.residuals.append(res)
        logger.debug("amen_linear sweep %d: residual %.3e ranks %s", sweep, res, sweeper.train().ranks)
        if res <= tol:
            converged = True
            break
        if (
            len(report.residuals) > DIVERGENCE_WINDOW
            and res > max(tol, DIVERGENCE_FLOOR)
            and res > DIVERGENCE_FACTOR * report.residuals[-1 - DIVERGENCE_WINDOW]
        ):
            logger.warning("amen_linear diverging: residual %.3e after %d sweeps, aborting", res, sweep)
            break
    x = sweeper.train()
    report.final_residual = report.residuals[-1]
    report.finish(x.ranks, converged)
    logger.info(
        "amen_linear finished in %d sweeps, residual %.3e, converged=%s",
        report.sweeps, report.final_residual, converged,
    )
    return x, report


def _lift_operator(M: TTOperator, col_sizes: list) -> TTOperator:
    """M kron I_J on every core, with (i, j) merged in C order."""
    cores = []
    for c, J in zip(M.cores, col_sizes):
        a, I, Ip, b = c.shape
        lifted = np.einsum("aipb,jq->aijpqb", c, np.eye(J))
        cores.append(lifted.reshape(a, I * J, Ip * J, b))
    return TTOperator(tuple(cores))


def _as_operator(B) -> TTOperator:
    if isinstance(B, TTOperator):
        return B
    return TTOperator(tuple(c[:, :, None, :] for c in B.cores))


def tt_regression(
    A: TTOperator,
    B,
    gamma: float = 0.0,
    L: TTOperator | None = None,
    sweeps: int = MAX_SWEEPS,
    tol: float = DEFAULT_TOL,
    enrich_rank: int = 2,
    seed: int = 0,
) -> tuple:
    """
    Operator X minimising ||A X - B||_F^2 + gamma ||L X||_F^2 by AMEn on the
    normal equations (A^T A + gamma L^T L) X = A^T B, one column block per
    merged (i_n, j_n) mode. B = identity gives the regularised pseudoinverse.
    """
    B = _as_operator(B)
    if A.row_sizes != B.row_sizes:
        raise ValueError(f"A rows {A.row_sizes} do not match B rows {B.row_sizes}")
    M = normal_operator(A, gamma, L)
    rhs_op = operator_matmul(transpose_operator(A), B)
    col_sizes = B.col_sizes
    lifted = _lift_operator(M, col_sizes)
    rhs = TTTrain(tuple(c.reshape(c.shape[0], -1, c.shape[3]) for c in rhs_op.cores))
    x, report = amen_linear(lifted, rhs, sweeps=sweeps, tol=tol, enrich_rank=enrich_rank, seed=seed)
    report.solver = "tt_regression"
    X = TTOperator(
        tuple(
            c.reshape(c.shape[0], I, J, c.shape[2])
            for c, I, J in zip(x.cores, A.col_sizes, col_sizes)
        )
    )
    return X, report


def _weights(x_dense: np.ndarray, q: float, eps: float, group_mode: int | None) -> tuple:
    """IRLS weights (q/2)(x^2 + eps^2)^{q/2 - 1} and the penalty value."""
    if group_mode is None:
        sq = x_dense**2
    else:
        sq = np.broadcast_to(
            np.sum(x_dense**2, axis=group_mode, keepdims=True), x_dense.shape
        )
    w = 0.5 * q * (sq + eps**2) ** (0.5 * q - 1.0)
    if group_mode is None:
        penalty = float(np.sum((sq + eps**2) ** (0.5 * q)))
    else:
        fibres = np.sum(x_dense**2, axis=group_mode)
        penalty = float(np.sum((fibres + eps**2) ** (0.5 * q)))
    return w, penalty


def _lasso_objective(A: TTOperator, b: TTTrain, x_dense: np.ndarray, x: TTTrain, gamma: float,
                     q: float, eps: float, group_mode: int | None) -> tuple:
    w, penalty = _weights(x_dense, q, eps, group_mode)
    fit = norm(add(apply_op(A, x), scale(b, -1.0))) ** 2
    return fit + gamma * penalty, w


def lasso_irls(
    A: TTOperator,
    b: TTTrain,
    gamma: float,
    q: float = 1.0,
    iters: int = 30,
    eps: float = 1e-6,
    weight_rank: int | None = None,
    group_mode: int | None = None,
    tol: float = 1e-12,
    sweeps: int = MAX_SWEEPS,
    enrich_rank: int = 2,
    seed: int = 0,
) -> tuple:
    """
    Iteratively reweighted least squares for
    ||A x - b||^2 + gamma * sum_j (x_j^2 + eps^2)^{q/2}.

    Each step minimises the quadratic majoriser built from the weights
    (q/2)(x_j^2 + eps^2)^{q/2-1} at the current iterate, so the objective
    never increases. The weights are entrywise functions of x, so the iterate
    is contracted once per iteration to evaluate them together with the
    penalty. ``weight_rank`` compresses the weight tensor to that TT rank; a
    compressed step that raises the objective is redone with exact weights.
    ``group_mode`` replaces |x_j| by the norm of the mode-``group_mode`` fibre
    through j.

    Args:
        A: operator.
        b: right-hand side train.
        gamma: penalty weight, 0 gives plain least squares.
        q: penalty exponent in (0, 1].
        iters: number of reweighting steps.
        eps: smoothing of |x_j|, floored at 1e-8.
        weight_rank: TT rank of the weight tensor, None keeps it exact.
        group_mode: mode whose fibres are penalised as groups.
        tol: residual target of the inner AMEn solves.
        sweeps: sweep budget of each inner solve.
        enrich_rank: enrichment of the inner solves.
        seed: seed of the first inner solve.

    Returns:
        (x, SolveReport) with the objective of the start and of every step.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    if weight_rank is not None and weight_rank < 1:
        raise ValueError(f"weight_rank must be positive or None, got {weight_rank}")
    eps = max(eps, EPS_FLOOR)
    AtA, Atb = normal_system(A, b)
    report = SolveReport("lasso_irls")
    if gamma == 0.0:
        x, inner = amen_linear(AtA, Atb, sweeps=sweeps, tol=tol, enrich_rank=enrich_rank, seed=seed)
        residual = add(apply_op(A, x), scale(b, -1.0))
        report.objective.append(norm(residual) ** 2)
        report.sweeps = inner.sweeps
        report.final_residual = inner.final_residual
        return x, report.finish(x.ranks, inner.converged)

    def reweighted_solve(w_dense, rank, start):
        W = tt_svd(w_dense, max_rank=rank)
        M = operator_add(AtA, scale_operator(diag_operator(W), gamma))
        return amen_linear(M, Atb, x0=start, sweeps=sweeps, tol=tol, enrich_rank=enrich_rank, seed=seed)

    M = operator_add(AtA, scale_operator(identity_operator(A.col_sizes), gamma))
    x, inner = amen_linear(M, Atb, sweeps=sweeps, tol=tol, enrich_rank=enrich_rank, seed=seed)
    objective, w_dense = _lasso_objective(A, b, contract_full(x), x, gamma, q, eps, group_mode)
    report.objective.append(objective)
    converged = False
    for it in range(1, iters + 1):
        x_new, inner = reweighted_solve(w_dense, weight_rank, x)
        x_dense = contract_full(x_new)
        new_objective, w_new = _lasso_objective(A, b, x_dense, x_new, gamma, q, eps, group_mode)
        if weight_rank is not None and new_objective > objective * (1.0 + 1e-12):
            logger.warning(
                "lasso_irls iteration %d: rank-%d weights raised the objective to %.6e, using exact weights",
                it, weight_rank, new_objective,
            )
            x_new, inner = reweighted_solve(w_dense, None, x)
            x_dense = contract_full(x_new)
            new_objective, w_new = _lasso_objective(A, b, x_dense, x_new, gamma, q, eps, group_mode)
        x, w_dense = x_new, w_new
        report.objective.append(new_objective)
        report.sweeps = it
        logger.debug("lasso_irls iteration %d: objective %.12e", it, new_objective)
        previous, objective = objective, new_objective
        if abs(previous - objective) <= 1e-12 * max(abs(objective), 1.0):
            converged = True
            break
    report.final_residual = inner.final_residual
    logger.info("lasso_irls finished after %d iterations, objective %.6e", report.sweeps, report.objective[-1])
    return x, report.finish(x.ranks, converged)


def richardson(
    A: TTOperator,
    b: TTTrain,
    x0: TTTrain,
    step: float,
    iters: int = 50,
    tol: float = 1e-12,
    max_rank=None,
) -> tuple:
    """Truncated Richardson iteration x <- round(x + step (b - A x))."""
    report = SolveReport("richardson")
    x = x0
    b_norm = norm(b)
    for it in range(1, iters + 1):
        r = add(b, scale(apply_op(A, x), -1.0))
        x = truncated_gradient_step(x, r, step, tol, max_rank)
        res = norm(add(b, scale(apply_op(A, x), -1.0))) / (b_norm if b_norm > 0 else 1.0)
        report.residuals.append(res)
        report.sweeps = it
    report.final_residual = report.residuals[-1] if report.residuals else float("nan")
    return x, report.finish(x.ranks, report.final_residual <= tol)
