# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals
"""
Dense CP-ALS and Tucker-HOOI used by blind identification and HOPLS.
"""

from dataclasses import dataclass
from dataclasses import field
from typing import Sequence

import numpy as np
import scipy.linalg
import tensorly as tl
from prefect.logging import get_logger
from tensorly.cp_tensor import CPTensor
from tensorly.decomposition import parafac
from tensorly.decomposition import tucker

logger = get_logger("tensorkit.decompositions")

CP_MAX_ITERS = 500
CP_TOL = 1e-12
HOOI_MAX_ITERS = 100
HOOI_TOL = 1e-13


@dataclass
class CpResult:
    factors: list
    weights: np.ndarray
    fit: float
    history: list = field(default_factory=list)

    def to_tensor(self) -> np.ndarray:
        return tl.cp_to_tensor((self.weights, self.factors))


@dataclass
class TuckerResult:
    core: np.ndarray
    factors: list
    fit: float
    history: list = field(default_factory=list)

    def to_tensor(self) -> np.ndarray:
        return tl.tucker_to_tensor((self.core, self.factors))


def _leading_left_vectors(M: np.ndarray, r: int, rng: np.random.Generator) -> np.ndarray:
    U, _, _ = scipy.linalg.svd(M, full_matrices=False)
    U = U[:, :r]
    if U.shape[1] < r:
        extra = rng.standard_normal((M.shape[0], r - U.shape[1]))
        U = np.concatenate([U, extra], axis=1)
    return U


def _fit(x: np.ndarray, approx: np.ndarray, x_norm: float) -> float:
    if x_norm == 0.0:
        return 1.0 if not np.any(approx) else 0.0
    return 1.0 - float(np.linalg.norm(x - approx)) / x_norm


def _refit_weights(x: np.ndarray, factors: list) -> np.ndarray:
    gram = np.ones((factors[0].shape[1],) * 2)
    for A in factors:
        gram *= A.T @ A
    rhs = np.sum(factors[0] * (tl.unfold(x, 0) @ tl.tenalg.khatri_rao(factors, skip_matrix=0)), axis=0)
    return np.linalg.lstsq(gram, rhs, rcond=None)[0]


def _normalize(factors: list) -> tuple:
    weights = np.ones(factors[0].shape[1])
    out = []
    for A in factors:
        norms = np.linalg.norm(A, axis=0)
        norms[norms == 0.0] = 1.0
        out.append(A / norms)
        weights = weights * norms
    return out, weights


def cp_als(
    x,
    R: int,
    iters: int = CP_MAX_ITERS,
    tol: float = CP_TOL,
    symmetric: bool = False,
    symmetric_modes: Sequence[int] | None = None,
    seed: int = 0,
) -> CpResult:
    """
    Rank-R CP decomposition by alternating least squares from an SVD start.
    Each iteration is one ``tensorly`` PARAFAC sweep warm-started from the
    previous factors.

    With ``symmetric`` the factors of ``symmetric_modes`` (default: every mode
    with the size of mode 0) are sign-aligned and averaged after each sweep,
    then the weights are refitted.

    Args:
        x: dense tensor.
        R: CP rank.
        iters: maximum number of sweeps.
        tol: stop once the fit changes by less than this between sweeps.
        symmetric: tie the factors of ``symmetric_modes`` together.
        symmetric_modes: modes sharing one factor.
        seed: seed for the random columns of the SVD start.

    Returns:
        CpResult with unit-norm factors, weights, the final fit and the fit per sweep.
    """
    x = np.asarray(x, dtype=np.float64)
    if R < 1:
        raise ValueError(f"CP rank must be positive, got {R}")
    if iters < 1:
        raise ValueError(f"CP-ALS needs at least one iteration, got {iters}")
    N = x.ndim
    if symmetric_modes is None:
        symmetric_modes = [n for n in range(N) if x.shape[n] == x.shape[0]]
    x_norm = float(np.linalg.norm(x))
    init = "svd"
    history = []
    fit = 0.0
    for it in range(iters):
        cp_weights, factors = parafac(x, R, n_iter_max=1, init=init, tol=0.0, random_state=seed)
        factors = [np.asarray(A) for A in factors]
        factors[0] = factors[0] * np.asarray(cp_weights)
        factors, weights = _normalize(factors)
        if symmetric and len(symmetric_modes) > 1:
            ref = factors[symmetric_modes[0]]
            aligned = []
            for n in symmetric_modes:
                signs = np.sign(np.sum(factors[n] * ref, axis=0))
                signs[signs == 0] = 1.0
                aligned.append(factors[n] * signs)
            mean = np.mean(aligned, axis=0)
            mean /= np.maximum(np.linalg.norm(mean, axis=0), 1e-300)
            for n in symmetric_modes:
                factors[n] = mean.copy()
            weights = _refit_weights(x, factors)
        factors[0] = factors[0] * weights
        init = CPTensor((np.ones(R), [A.copy() for A in factors]))
        previous = fit
        fit = _fit(x, tl.cp_to_tensor((np.ones(R), factors)), x_norm)
        history.append(fit)
        if it > 0 and abs(fit - previous) < tol:
            break
    factors, weights = _normalize(factors)
    logger.debug("CP-ALS rank %d finished after %d iterations, fit %.3e", R, len(history), fit)
    return CpResult(factors, weights, fit, history)


def greedy_match(C) -> list:
    """
    Greedy assignment on a score matrix: repeatedly take the largest remaining
    entry. Returns (row, column) pairs ordered by row.
    """
    C = np.array(C, dtype=np.float64)
    pairs = []
    for _ in range(min(C.shape)):
        i, j = np.unravel_index(np.argmax(C), C.shape)
        pairs.append((int(i), int(j)))
        C[i, :] = -np.inf
        C[:, j] = -np.inf
    return sorted(pairs)


def factor_congruence(A, B) -> float:
    """Mean absolute cosine between matched columns after greedy matching."""
    A = np.asarray(A) / np.linalg.norm(A, axis=0)
    B = np.asarray(B) / np.linalg.norm(B, axis=0)
    C = np.abs(A.T @ B)
    return float(np.mean([C[i, j] for i, j in greedy_match(C)]))


def hosvd(x, ranks: Sequence[int]) -> list:
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(0)
    return [
        np.linalg.qr(_leading_left_vectors(tl.unfold(x, n), r, rng))[0]
        for n, r in enumerate(ranks)
    ]


def tucker_hooi(
    x, ranks: Sequence[int], iters: int = HOOI_MAX_ITERS, tol: float = HOOI_TOL
) -> TuckerResult:
    """
    Truncated HOSVD start followed by higher-order orthogonal iteration,
    through ``tensorly``'s Tucker decomposition.

    Args:
        x: dense tensor.
        ranks: multilinear ranks, one per mode.
        iters: maximum number of HOOI sweeps.
        tol: stop once the relative error changes by less than this.

    Returns:
        TuckerResult with the core, orthonormal factors, the fit and the fit per sweep.
    """
    x = np.asarray(x, dtype=np.float64)
    ranks = [int(r) for r in ranks]
    if len(ranks) != x.ndim:
        raise ValueError(f"expected {x.ndim} Tucker ranks, got {len(ranks)}")
    if any(r < 1 or r > s for r, s in zip(ranks, x.shape)):
        raise ValueError(f"Tucker ranks {ranks} must lie between 1 and the mode sizes {x.shape}")
    for n, r in enumerate(ranks):
        others = int(np.prod([q for m, q in enumerate(ranks) if m != n]))
        if r > others:
            raise ValueError(
                f"Tucker rank {r} of mode {n} exceeds the product {others} of the other ranks in {ranks}"
            )
    x_norm = float(np.linalg.norm(x))
    if x_norm == 0.0:
        factors = hosvd(x, ranks)
        return TuckerResult(np.zeros(ranks), factors, 1.0, [1.0])
    (core, factors), errors = tucker(
        x, rank=ranks, n_iter_max=iters, init="svd", tol=tol, return_errors=True
    )
    factors = [np.asarray(U) for U in factors]
    core = np.asarray(core)
    fit = _fit(x, tl.tucker_to_tensor((core, factors)), x_norm)
    history = [1.0 - float(e) for e in errors] or [fit]
    logger.debug("Tucker-HOOI ranks %s finished after %d sweeps, fit %.3e", ranks, len(history), fit)
    return TuckerResult(core, factors, fit, history)
