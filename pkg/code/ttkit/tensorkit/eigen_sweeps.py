# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals,too-many-branches,too-many-statements
"""
Block-TT eigensolvers for the K smallest eigenpairs of a symmetric TT operator:
one-site ALS, two-site MALS and ALS with AMEn-type enrichment (EVAMEn).

Every local step minimises trace(X^T A X) over the current frame, so the
recorded objective is non-increasing up to rounding.
"""

import numpy as np
import scipy.linalg
from prefect.logging import get_logger

from tensorkit.contractions import ContractionCache
from tensorkit.contractions import SolveReport
from tensorkit.tt_core import BlockTT
from tensorkit.tt_core import TTOperator
from tensorkit.tt_core import block_shift_left
from tensorkit.tt_core import block_shift_right
from tensorkit.tt_core import truncation_rank

logger = get_logger("tensorkit.eigen_sweeps")

MAX_SWEEPS = 50
DEFAULT_TOL = 1e-10


def _check_problem(A: TTOperator, K: int, x0: BlockTT) -> None:
    if not A.is_square:
        raise ValueError(f"eigensolvers need a square operator, got rows {A.row_sizes} cols {A.col_sizes}")
    if A.row_sizes != x0.mode_sizes:
        raise ValueError(f"operator modes {A.row_sizes} do not match block train modes {x0.mode_sizes}")
    if K < 1 or K != x0.block_size:
        raise ValueError(f"K = {K} must be positive and equal to the block size {x0.block_size}")


def sign_fix(vecs: np.ndarray) -> np.ndarray:
    """Flip each column so that its first nonzero entry is positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        nz = np.flatnonzero(np.abs(out[:, k]) > 1e-14)
        if nz.size and out[nz[0], k] < 0:
            out[:, k] = -out[:, k]
    return out


def local_eigh(H: np.ndarray, K: int) -> tuple:
    if K > H.shape[0]:
        raise ValueError(f"K = {K} exceeds the local dimension {H.shape[0]}")
    H = 0.5 * (H + H.T)
    vals, vecs = scipy.linalg.eigh(H, subset_by_index=[0, K - 1])
    return vals, sign_fix(vecs)


def prepare_block(x: BlockTT) -> BlockTT:
    """Move the block to site 0 with every other core right-orthogonal."""
    p = x.block_position
    cores = list(x.cores)
    for n in range(x.order - 1, p, -1):
        r, I, rr = cores[n].shape
        Q, R = scipy.linalg.qr(cores[n].reshape(r, I * rr).T, mode="economic")
        cores[n] = Q.T.reshape(-1, I, rr)
        if n - 1 == p:
            cores[n - 1] = np.einsum("aibk,bc->aick", cores[n - 1], R.T)
        else:
            cores[n - 1] = np.tensordot(cores[n - 1], R.T, axes=(2, 0))
    x = BlockTT(tuple(cores), p)
    while x.block_position > 0:
        x = block_shift_left(x)
    return x


def _enrich_right(block: np.ndarray, nxt: np.ndarray, Z: np.ndarray, rank: int) -> tuple:
    """Append truncated left-projected A X columns to the block's right bond."""
    a, i, Q, K = Z.shape
    U, s, _ = scipy.linalg.svd(Z.transpose(0, 1, 3, 2).reshape(a * i * K, Q), full_matrices=False)
    rho = min(rank, int(np.sum(s > 1e-14 * max(s[0], 1e-300))) if s.size else 0)
    if rho == 0:
        return block, nxt
    extra = (U[:, :rho] * s[:rho]).reshape(a, i, K, rho).transpose(0, 1, 3, 2)
    block = np.concatenate([block, extra], axis=2)
    pad = np.zeros((rho,) + nxt.shape[1:])
    return block, np.concatenate([nxt, pad], axis=0)


def _enrich_left(prev: np.ndarray, block: np.ndarray, Z: np.ndarray, rank: int) -> tuple:
    """Prepend truncated right-projected A X rows to the block's left bond."""
    Q, i, b, K = Z.shape
    _, s, Vt = scipy.linalg.svd(Z.reshape(Q, i * b * K), full_matrices=False)
    rho = min(rank, int(np.sum(s > 1e-14 * max(s[0], 1e-300))) if s.size else 0)
    if rho == 0:
        return prev, block
    extra = (s[:rho, None] * Vt[:rho]).reshape(rho, i, b, K)
    block = np.concatenate([block, extra], axis=0)
    pad = np.zeros(prev.shape[:-1] + (rho,))
    return np.concatenate([prev, pad], axis=-1), block


class _BlockSweeper:
    """Shared state of the one-site block sweeps."""

    def __init__(self, A: TTOperator, K: int, x0: BlockTT, enrich_rank: int, solver: str):
        _check_problem(A, K, x0)
        self.A = A
        self.K = K
        self.enrich_rank = enrich_rank
        self.x = prepare_block(x0)
        self.cache = ContractionCache(A)
        self.cache.build_right(list(self.x.cores))
        self.report = SolveReport(solver)
        self.eigvals = np.zeros(K)

    def solve_here(self) -> None:
        n = self.x.block_position
        H = self.cache.local_operator(n)
        vals, vecs = local_eigh(H, self.K)
        r, I, rr, _ = self.x.cores[n].shape
        cores = list(self.x.cores)
        cores[n] = vecs.reshape(r, I, rr, self.K)
        self.x = BlockTT(tuple(cores), n)
        self.eigvals = vals
        self.report.objective.append(float(np.sum(vals)))

    def move_right(self) -> None:
        n = self.x.block_position
        cores = list(self.x.cores)
        if self.enrich_rank > 0:
            Z = self.cache.left_enrichment(n, cores[n])
            cores[n], cores[n + 1] = _enrich_right(cores[n], cores[n + 1], Z, self.enrich_rank)
        self.x = block_shift_right(BlockTT(tuple(cores), n))
        self.cache.update_left(n, self.x.cores[n])

    def move_left(self) -> None:
        n = self.x.block_position
        cores = list(self.x.cores)
        if self.enrich_rank > 0:
            Z = self.cache.right_enrichment(n, cores[n])
            cores[n - 1], cores[n] = _enrich_left(cores[n - 1], cores[n], Z, self.enrich_rank)
        self.x = block_shift_left(BlockTT(tuple(cores), n))
        self.cache.update_right(n, self.x.cores[n])

    def sweep(self) -> None:
        N = self.A.order
        for _ in range(N - 1):
            self.solve_here()
            self.move_right()
        for _ in range(N - 1):
            self.solve_here()
            self.move_left()
        if N == 1:
            self.solve_here()


def _run(sweeper, sweeps: int, tol: float) -> tuple:
    report = sweeper.report
    previous = None
    converged = False
    for sweep in range(1, sweeps + 1):
        sweeper.sweep()
        report.sweeps = sweep
        current = report.objective[-1]
        logger.debug("%s sweep %d: trace %.15e ranks %s", report.solver, sweep, current, sweeper.x.ranks)
        if previous is not None and abs(previous - current) <= tol * max(abs(current), 1.0):
            converged = True
            break
        previous = current
    report.final_residual = _eig_residual(sweeper)
    report.finish(sweeper.x.ranks, converged)
    logger.info(
        "%s finished in %d sweeps, eigenvalues %s, converged=%s",
        report.solver, report.sweeps, np.array2string(sweeper.eigvals, precision=10), converged,
    )
    return sweeper.eigvals, sweeper.x, report


def _eig_residual(sweeper) -> float:
    """Residual ||H V - V diag(lambda)|| of the final block in its local frame."""
    n = sweeper.x.block_position
    block = sweeper.x.cores[n]
    V = block.reshape(-1, sweeper.K)
    H = sweeper.cache.local_operator(n)
    return float(np.linalg.norm(H @ V - V * sweeper.eigvals))


def als_evd(
    A: TTOperator, K: int, x0: BlockTT, sweeps: int = MAX_SWEEPS, tol: float = DEFAULT_TOL
) -> tuple:
    """One-site block ALS for the K smallest eigenpairs."""
    return _run(_BlockSweeper(A, K, x0, 0, "als_evd"), sweeps, tol)


def evamen(
    A: TTOperator,
    K: int,
    x0: BlockTT,
    sweeps: int = MAX_SWEEPS,
    tol: float = DEFAULT_TOL,
    enrich_rank: int = 2,
) -> tuple:
    """Block ALS whose shifts are enriched with the projected A X term."""
    if enrich_rank < 0:
        raise ValueError(f"enrich_rank must be non-negative, got {enrich_rank}")
    return _run(_BlockSweeper(A, K, x0, enrich_rank, "evamen"), sweeps, tol)


class _PairSweeper:
    """Two-site block sweeps with truncated SVD splitting."""

    def __init__(self, A: TTOperator, K: int, x0: BlockTT, tol: float, max_rank):
        _check_problem(A, K, x0)
        self.A = A
        self.K = K
        self.tol = tol
        self.max_rank = max_rank
        self.x = prepare_block(x0)
        self.cache = ContractionCache(A)
        self.cache.build_right(list(self.x.cores))
        self.report = SolveReport("mals_evd")
        self.eigvals = np.zeros(K)

    def _solve_pair(self, n: int, block_left: bool) -> np.ndarray:
        cores = self.x.cores
        if block_left:
            sup = np.einsum("aibk,bjc->aijck", cores[n], cores[n + 1])
        else:
            sup = np.einsum("aib,bjck->aijck", cores[n], cores[n + 1])
        H = self.cache.local_pair_operator(n)
        vals, vecs = local_eigh(H, self.K)
        self.eigvals = vals
        self.report.objective.append(float(np.sum(vals)))
        return vecs.reshape(sup.shape)

    def _split(self, sup: np.ndarray, keep_block_right: bool) -> tuple:
        r, I, J, rr, K = sup.shape
        if keep_block_right:
            M = sup.reshape(r * I, J * rr * K)
        else:
            M = sup.transpose(0, 1, 4, 2, 3).reshape(r * I * K, J * rr)
        U, s, Vt = scipy.linalg.svd(M, full_matrices=False)
        k = truncation_rank(s, self.tol, self.max_rank)
        if keep_block_right:
            left = U[:, :k].reshape(r, I, k)
            right = (s[:k, None] * Vt[:k]).reshape(k, J, rr, K)
        else:
            left = (U[:, :k] * s[:k]).reshape(r, I, K, k).transpose(0, 1, 3, 2)
            right = Vt[:k].reshape(k, J, rr)
        return left, right

    def sweep(self) -> None:
        N = self.A.order
        if N == 1:
            n = 0
            H = self.cache.local_operator(n)
            vals, vecs = local_eigh(H, self.K)
            self.eigvals = vals
            self.report.objective.append(float(np.sum(vals)))
            r, I, rr, _ = self.x.cores[0].shape
            self.x = BlockTT((vecs.reshape(r, I, rr, self.K),), 0)
            return
        for n in range(N - 1):
            sup = self._solve_pair(n, block_left=True)
            left, right = self._split(sup, keep_block_right=True)
            cores = list(self.x.cores)
            cores[n], cores[n + 1] = left, right
            self.x = BlockTT(tuple(cores), n + 1)
            self.cache.update_left(n, left)
        for n in range(N - 2, -1, -1):
            sup = self._solve_pair(n, block_left=False)
            left, right = self._split(sup, keep_block_right=False)
            cores = list(self.x.cores)
            cores[n], cores[n + 1] = left, right
            self.x = BlockTT(tuple(cores), n)
            self.cache.update_right(n + 1, right)


def mals_evd(
    A: TTOperator,
    K: int,
    x0: BlockTT,
    sweeps: int = MAX_SWEEPS,
    tol: float = DEFAULT_TOL,
    max_rank: int | None = None,
) -> tuple:
    """Two-site block ALS (DMRG2) with rank adaptation by truncated SVD."""
    return _run(_PairSweeper(A, K, x0, tol, max_rank), sweeps, tol)
