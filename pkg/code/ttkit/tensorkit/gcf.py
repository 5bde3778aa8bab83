# pylint: disable=invalid-name
"""
Derivative tensors of the second generalised characteristic function (GCF)
and sample cumulants, estimated from an I x T observation matrix.
"""

from dataclasses import dataclass
from functools import reduce
from math import factorial
from typing import Sequence

import numpy as np
import tensorly as tl
from prefect.logging import get_logger

logger = get_logger("tensorkit.gcf")

MIN_ORDER = 2
MAX_ORDER = 7
EXP_OVERFLOW_GUARD = 300.0


@dataclass(frozen=True)
class GcfDerivativeTensor:
    order: int
    point: np.ndarray
    value: np.ndarray


def _check_order(N: int) -> None:
    if not MIN_ORDER <= N <= MAX_ORDER:
        raise ValueError(f"derivative order must lie in {MIN_ORDER}..{MAX_ORDER}, got {N}")


def _check_data(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"observations must be an I x T matrix with T >= 1, got shape {X.shape}")
    return X


def integer_partitions(N: int, smallest: int = 1):
    """Non-decreasing integer partitions (n_1 <= ... <= n_k) of N."""
    if N == 0:
        yield ()
        return
    for first in range(smallest, N + 1):
        for rest in integer_partitions(N - first, first):
            yield (first,) + rest


def set_partition_count(parts: Sequence[int]) -> int:
    """Number of ways to split {1..N} into blocks with the given sizes."""
    N = sum(parts)
    denom = 1
    for size in set(parts):
        mult = parts.count(size)
        denom *= factorial(size) ** mult * factorial(mult)
    return factorial(N) // denom


def symmetrize(A) -> np.ndarray:
    """Average of A over all permutations of its modes (all sizes equal)."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim <= 1:
        return A.copy()
    I = A.shape[0]
    if any(s != I for s in A.shape):
        raise ValueError(f"symmetrization needs equal mode sizes, got {A.shape}")
    idx = np.sort(np.indices(A.shape).reshape(A.ndim, -1), axis=0)
    keys = np.ravel_multi_index(tuple(idx), A.shape)
    _, inverse = np.unique(keys, return_inverse=True)
    inverse = inverse.reshape(-1)
    sums = np.bincount(inverse, weights=A.reshape(-1))
    counts = np.bincount(inverse)
    return (sums / counts)[inverse].reshape(A.shape)


def sample_gcf(X, u) -> tuple:
    """Sample first GCF phi(u) and the per-sample weights exp(u^T x_t) / T."""
    X = _check_data(X)
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if u.size != X.shape[0]:
        raise ValueError(f"processing point has length {u.size}, data has {X.shape[0]} rows")
    exponent = u @ X
    peak = float(np.max(np.abs(exponent)))
    if peak > EXP_OVERFLOW_GUARD:
        raise ValueError(
            f"max |u^T x_t| = {peak:.1f} exceeds {EXP_OVERFLOW_GUARD}; scale the processing point down"
        )
    weights = np.exp(exponent) / X.shape[1]
    return float(np.sum(weights)), weights


def gcf_moment(X, weights, n: int) -> np.ndarray:
    """psi^(n)(u): weighted n-th outer power sum of the observations."""
    X = np.asarray(X, dtype=np.float64)
    return tl.cp_to_tensor((weights, [X] * n))


def _expansion(psi: dict, phi: float, N: int, skip_first_order: bool) -> np.ndarray:
    total = 0.0
    for parts in integer_partitions(N):
        if skip_first_order and parts[0] == 1:
            continue
        k = len(parts)
        coeff = (-1) ** (k - 1) * factorial(k - 1) * set_partition_count(parts) / phi**k
        total = total + coeff * reduce(np.multiply.outer, [psi[p] for p in parts])
    return symmetrize(total)


def gcf_derivative(X, u, N: int) -> GcfDerivativeTensor:
    """
    Order-N derivative tensor of log(phi_hat) at the processing point u.
    Args:
        X (array_like): I x T observations.
        u (array_like): Processing point of length I.
        N (int): Derivative order in 2..7.
    Returns:
        GcfDerivativeTensor: The symmetric I x ... x I derivative and its point.
    """
    _check_order(N)
    X = _check_data(X)
    phi, weights = sample_gcf(X, u)
    psi = {n: gcf_moment(X, weights, n) for n in range(1, N + 1)}
    value = _expansion(psi, phi, N, skip_first_order=False)
    return GcfDerivativeTensor(N, np.asarray(u, dtype=np.float64).reshape(-1), value)


def cumulant(X, N: int) -> np.ndarray:
    """
    Order-N sample cumulant of zero-mean observations. Partitions containing a
    first-order block are dropped since psi^(1)(0) vanishes for centred data.
    """
    _check_order(N)
    X = _check_data(X)
    weights = np.full(X.shape[1], 1.0 / X.shape[1])
    psi = {n: gcf_moment(X, weights, n) for n in range(2, N + 1)}
    return _expansion(psi, 1.0, N, skip_first_order=True)


def derivative_stack(X, points: Sequence, N: int, subtract_mean: bool = False) -> np.ndarray:
    """
    I x ... x I x K stack of derivative tensors at K processing points.
    Args:
        X (array_like): I x T observations.
        points (Sequence): K processing points.
        N (int): Derivative order.
        subtract_mean (bool): Remove the mean over the K slices.
    Returns:
        np.ndarray: Order-(N + 1) stack with the points on the last mode.
    """
    if len(points) == 0:
        raise ValueError("derivative_stack needs at least one processing point")
    slices = [gcf_derivative(X, u, N).value for u in points]
    stack = np.stack(slices, axis=-1)
    if subtract_mean:
        stack = stack - stack.mean(axis=-1, keepdims=True)
    logger.debug("Built order-%d derivative stack of shape %s", N, stack.shape)
    return stack
