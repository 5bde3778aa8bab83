# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals
"""
TT completion from a set of observed entries by slice-wise alternating least
squares with a rank schedule that grows from 1 to the target ranks.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from prefect.logging import get_logger

from tensorkit.contractions import SolveReport
from tensorkit.tt_core import TTTrain
from tensorkit.tt_core import random_train

logger = get_logger("tensorkit.completion")

RIDGE = 1e-10
MAX_SWEEPS = 50
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SamplingSet:
    """Observed multi-indices (M x N, zero-based) and their values."""

    indices: np.ndarray
    values: np.ndarray
    mode_sizes: tuple

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        sizes = tuple(int(s) for s in self.mode_sizes)
        if idx.ndim != 2 or idx.shape[0] == 0:
            raise ValueError("sampling set must contain at least one multi-index")
        if idx.shape[1] != len(sizes):
            raise ValueError(f"multi-indices have {idx.shape[1]} entries, tensor has {len(sizes)} modes")
        if idx.shape[0] != vals.size:
            raise ValueError(f"{idx.shape[0]} indices but {vals.size} values")
        if np.any(idx < 0) or np.any(idx >= np.asarray(sizes)):
            raise ValueError(f"sampling indices out of range for mode sizes {sizes}")
        if np.unique(np.ravel_multi_index(idx.T, sizes)).size != idx.shape[0]:
            raise ValueError("sampling set contains duplicate multi-indices")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mode_sizes", sizes)

    @property
    def size(self) -> int:
        return int(self.values.size)

    @classmethod
    def from_dense(cls, x, mask) -> "SamplingSet":
        x = np.asarray(x, dtype=np.float64)
        idx = np.argwhere(np.asarray(mask, dtype=bool))
        return cls(idx, x[tuple(idx.T)], x.shape)

    @classmethod
    def uniform(cls, x, fraction: float, seed: int = 0) -> "SamplingSet":
        """Sample round(fraction * size) distinct entries of the dense tensor x."""
        x = np.asarray(x, dtype=np.float64)
        rng = np.random.default_rng(seed)
        count = max(1, int(round(fraction * x.size)))
        flat = np.sort(rng.choice(x.size, size=count, replace=False))
        idx = np.stack(np.unravel_index(flat, x.shape), axis=1)
        return cls(idx, x.reshape(-1)[flat], x.shape)


def sample_entries(x: TTTrain, indices) -> np.ndarray:
    """Entries of a train at the given zero-based multi-indices."""
    idx = np.asarray(indices, dtype=np.int64)
    v = np.ones((idx.shape[0], 1))
    for n, core in enumerate(x.cores):
        v = np.einsum("ma,mab->mb", v, core[:, idx[:, n], :].transpose(1, 0, 2))
    return v[:, 0]


def _left_vectors(cores: list, idx: np.ndarray, n: int) -> np.ndarray:
    v = np.ones((idx.shape[0], 1))
    for m in range(n):
        v = np.einsum("ma,mab->mb", v, cores[m][:, idx[:, m], :].transpose(1, 0, 2))
    return v


def _right_vectors(cores: list, idx: np.ndarray, n: int) -> np.ndarray:
    v = np.ones((idx.shape[0], 1))
    for m in range(len(cores) - 1, n, -1):
        v = np.einsum("mab,mb->ma", cores[m][:, idx[:, m], :].transpose(1, 0, 2), v)
    return v


class _CompletionSweeper:
    def __init__(self, omega: SamplingSet, x0: TTTrain):
        self.omega = omega
        self.cores = [np.array(c) for c in x0.cores]
        self.warned = False

    def solve_site(self, n: int) -> None:
        idx, y = self.omega.indices, self.omega.values
        left = _left_vectors(self.cores, idx, n)
        right = _right_vectors(self.cores, idx, n)
        r, I, rr = self.cores[n].shape
        core = np.zeros((r, I, rr))
        design = np.einsum("ma,mb->mab", left, right).reshape(len(y), r * rr)
        for i in range(I):
            rows = idx[:, n] == i
            D = design[rows]
            if D.shape[0] < r * rr:
                if not self.warned:
                    logger.warning(
                        "underdetermined slice at site %d (%d samples for %d unknowns); "
                        "adding ridge %.0e", n, D.shape[0], r * rr, RIDGE,
                    )
                    self.warned = True
                g = scipy.linalg.solve(D.T @ D + RIDGE * np.eye(r * rr), D.T @ y[rows], assume_a="pos")
            else:
                g = scipy.linalg.lstsq(D, y[rows])[0]
            core[:, i, :] = g.reshape(r, rr)
        self.cores[n] = core

    def shift_right(self, n: int) -> None:
        r, I, rr = self.cores[n].shape
        Q, R = scipy.linalg.qr(self.cores[n].reshape(r * I, rr), mode="economic")
        self.cores[n] = Q.reshape(r, I, -1)
        self.cores[n + 1] = np.tensordot(R, self.cores[n + 1], axes=(1, 0))

    def shift_left(self, n: int) -> None:
        r, I, rr = self.cores[n].shape
        Q, R = scipy.linalg.qr(self.cores[n].reshape(r, I * rr).T, mode="economic")
        self.cores[n] = Q.T.reshape(-1, I, rr)
        self.cores[n - 1] = np.tensordot(self.cores[n - 1], R.T, axes=(2, 0))

    def sse(self) -> float:
        fitted = sample_entries(TTTrain(tuple(self.cores)), self.omega.indices)
        return float(np.sum((fitted - self.omega.values) ** 2))

    def sweep(self, report: SolveReport) -> None:
        N = len(self.cores)
        for n in range(N - 1):
            self.solve_site(n)
            report.objective.append(self.sse())
            self.shift_right(n)
        for n in range(N - 1, 0, -1):
            self.solve_site(n)
            report.objective.append(self.sse())
            self.shift_left(n)
        if N == 1:
            self.solve_site(0)
            report.objective.append(self.sse())

    def grow(self, targets: list, rng: np.random.Generator) -> bool:
        """Increase every bond below its target by one; the tensor is unchanged."""
        grown = False
        for n, target in enumerate(targets):
            core, nxt = self.cores[n], self.cores[n + 1]
            if core.shape[2] >= target:
                continue
            extra = rng.standard_normal(core.shape[:2] + (1,))
            self.cores[n] = np.concatenate([core, extra], axis=2)
            self.cores[n + 1] = np.concatenate([nxt, np.zeros((1,) + nxt.shape[1:])], axis=0)
            grown = True
        return grown


def tt_complete(
    mode_sizes: Sequence[int],
    omega: SamplingSet,
    ranks,
    sweeps: int = MAX_SWEEPS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> tuple:
    """
    Fit a train to the observed entries. Starts from ranks 1 and, whenever the
    observed RMSE stalls, raises every bond by one until ``ranks`` is reached.
    ``sweeps`` caps the sweeps spent at each rank stage.
    """
    sizes = [int(s) for s in mode_sizes]
    if tuple(sizes) != omega.mode_sizes:
        raise ValueError(f"mode sizes {sizes} do not match the sampling set {omega.mode_sizes}")
    N = len(sizes)
    targets = [int(ranks)] * (N - 1) if np.isscalar(ranks) else [int(r) for r in ranks]
    if len(targets) != N - 1:
        raise ValueError(f"expected {N - 1} target ranks, got {len(targets)}")
    rng = np.random.default_rng(seed)
    sweeper = _CompletionSweeper(omega, random_train(sizes, [1] * (N - 1), seed))
    report = SolveReport("tt_complete")
    scale = float(np.sqrt(np.mean(omega.values**2)))
    converged = False
    while True:
        previous = None
        stage_converged = False
        for _ in range(sweeps):
            sweeper.sweep(report)
            report.sweeps += 1
            rmse = float(np.sqrt(report.objective[-1] / omega.size))
            report.residuals.append(rmse)
            logger.debug("tt_complete sweep %d: rmse %.3e ranks %s", report.sweeps, rmse,
                         [c.shape[2] for c in sweeper.cores[:-1]])
            if rmse <= tol * max(scale, 1e-300) or (
                previous is not None and previous - rmse <= tol * max(previous, 1e-300)
            ):
                stage_converged = True
                break
            previous = rmse
        if not sweeper.grow(targets, rng):
            converged = stage_converged
            break
    x = TTTrain(tuple(sweeper.cores))
    report.final_residual = report.residuals[-1]
    logger.info("tt_complete finished after %d sweeps, observed rmse %.3e", report.sweeps, report.final_residual)
    return x, report.finish(x.ranks, converged)
