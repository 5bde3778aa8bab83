# pylint: disable=invalid-name,too-many-instance-attributes
"""
Environment blocks shared by the sweeping solvers and the report they return.

Left block L^{<n} has shape (R^x_{n-1}, R^A_{n-1}, R^x_{n-1}) and holds the
contraction <X^{<n}| A^{<n} |X^{<n}>; the right block R^{>n} is its mirror.
Right-hand-side blocks hold <X^{<n}|b^{<n}> with shape (R^x, R^b).
"""

import time
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from prefect.logging import get_logger

from tensorkit.tt_core import TTOperator
from tensorkit.tt_core import TTTrain

logger = get_logger("tensorkit.contractions")

# Largest local problem assembled as a dense matrix.
DENSE_LOCAL_CAP = 4096


@dataclass
class SolveReport:
    """Trace of a sweeping solver. ``objective`` has one entry per local step."""

    solver: str
    sweeps: int = 0
    objective: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    final_residual: float = float("nan")
    ranks: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def finish(self, ranks, converged: bool) -> "SolveReport":
        self.ranks = [int(r) for r in ranks]
        self.converged = bool(converged)
        self.wall_time = time.perf_counter() - self._started
        return self

    def to_dict(self, include_timing: bool = True) -> dict:
        doc = {
            "solver": self.solver,
            "sweeps": self.sweeps,
            "objective": [float(v) for v in self.objective],
            "residuals": [float(v) for v in self.residuals],
            "final_residual": float(self.final_residual),
            "ranks": self.ranks,
            "converged": self.converged,
        }
        if include_timing:
            doc["wall_time"] = self.wall_time
        return doc


def check_local_size(size: int, what: str = "local problem") -> None:
    if size > DENSE_LOCAL_CAP:
        raise ValueError(
            f"{what} of size {size} exceeds the dense cap {DENSE_LOCAL_CAP}; "
            "reduce the ranks or the mode sizes"
        )


def left_step(L: np.ndarray, x_core: np.ndarray, a_core: np.ndarray) -> np.ndarray:
    return np.einsum("aqc,aib,qijr,cjd->brd", L, x_core, a_core, x_core, optimize=True)


def right_step(R: np.ndarray, x_core: np.ndarray, a_core: np.ndarray) -> np.ndarray:
    return np.einsum("brd,aib,qijr,cjd->aqc", R, x_core, a_core, x_core, optimize=True)


def left_rhs_step(Lb: np.ndarray, x_core: np.ndarray, b_core: np.ndarray) -> np.ndarray:
    return np.einsum("ac,aib,cid->bd", Lb, x_core, b_core, optimize=True)


def right_rhs_step(Rb: np.ndarray, x_core: np.ndarray, b_core: np.ndarray) -> np.ndarray:
    return np.einsum("bd,aib,cid->ac", Rb, x_core, b_core, optimize=True)


class ContractionCache:
    """
    Left/right environment blocks keyed by site for an operator A and an
    optional right-hand side b. ``left[n]`` contracts sites 0..n-1 and
    ``right[n]`` contracts sites n+1..N-1.
    """

    def __init__(self, A: TTOperator, b: TTTrain | None = None):
        self.A = A
        self.b = b
        self.N = A.order
        one = np.ones((1, 1, 1))
        self.left = [one] + [None] * (self.N - 1)
        self.right = [None] * (self.N - 1) + [one]
        if b is not None:
            self.left_rhs = [np.ones((1, 1))] + [None] * (self.N - 1)
            self.right_rhs = [None] * (self.N - 1) + [np.ones((1, 1))]

    def build_right(self, cores: list, stop: int = 0) -> None:
        """Fill right blocks for sites N-2 down to ``stop`` from the given cores."""
        for n in range(self.N - 1, stop, -1):
            self.update_right(n, cores[n])

    def update_left(self, n: int, core: np.ndarray) -> None:
        """Absorb core n into left[n + 1]."""
        self.left[n + 1] = left_step(self.left[n], core, self.A.cores[n])
        if self.b is not None:
            self.left_rhs[n + 1] = left_rhs_step(self.left_rhs[n], core, self.b.cores[n])

    def update_right(self, n: int, core: np.ndarray) -> None:
        """Absorb core n into right[n - 1]."""
        self.right[n - 1] = right_step(self.right[n], core, self.A.cores[n])
        if self.b is not None:
            self.right_rhs[n - 1] = right_rhs_step(self.right_rhs[n], core, self.b.cores[n])

    def local_operator(self, n: int) -> np.ndarray:
        """Dense X_{!=n}^T A X_{!=n} of size R_{n-1} I_n R_n."""
        L, R = self.left[n], self.right[n]
        a = self.A.cores[n]
        size = L.shape[0] * a.shape[1] * R.shape[0]
        check_local_size(size)
        H = np.einsum("aqc,qijr,brd->aibcjd", L, a, R, optimize=True)
        return H.reshape(size, size)

    def local_pair_operator(self, n: int) -> np.ndarray:
        """Dense projected operator of the merged sites (n, n + 1)."""
        L, R = self.left[n], self.right[n + 1]
        a1, a2 = self.A.cores[n], self.A.cores[n + 1]
        size = L.shape[0] * a1.shape[1] * a2.shape[1] * R.shape[0]
        check_local_size(size, "two-site local problem")
        H = np.einsum("aqc,qijs,sklr,brd->aikbcjld", L, a1, a2, R, optimize=True)
        return H.reshape(size, size)

    def local_rhs(self, n: int) -> np.ndarray:
        Lb, Rb = self.left_rhs[n], self.right_rhs[n]
        return np.einsum("ac,cid,bd->aib", Lb, self.b.cores[n], Rb, optimize=True).reshape(-1)

    def apply_local(self, n: int, core: np.ndarray) -> np.ndarray:
        """Matrix-free X_{!=n}^T A X_{!=n} vec(core)."""
        return np.einsum(
            "aqc,qijr,brd,cjd->aib", self.left[n], self.A.cores[n], self.right[n], core,
            optimize=True,
        )

    def left_enrichment(self, n: int, core: np.ndarray) -> np.ndarray:
        """A X projected on the left frame, right bond left open: (R, I, R^A R, ...)."""
        Z = np.einsum("aqc,qijr,cjd...->aird...", self.left[n], self.A.cores[n], core, optimize=True)
        shape = Z.shape
        return Z.reshape(shape[0], shape[1], shape[2] * shape[3], *shape[4:])

    def right_enrichment(self, n: int, core: np.ndarray) -> np.ndarray:
        """A X projected on the right frame, left bond left open: (R^A R, I, R, ...)."""
        if core.ndim == 3:
            Z = np.einsum("qijr,cjd,brd->qcib", self.A.cores[n], core, self.right[n], optimize=True)
        else:
            Z = np.einsum("qijr,cjdk,brd->qcibk", self.A.cores[n], core, self.right[n], optimize=True)
        shape = Z.shape
        return Z.reshape(shape[0] * shape[1], *shape[2:])

    def rhs_left_enrichment(self, n: int) -> np.ndarray:
        return np.einsum("ac,cid->aid", self.left_rhs[n], self.b.cores[n], optimize=True)

    def rhs_right_enrichment(self, n: int) -> np.ndarray:
        return np.einsum("cid,bd->cib", self.b.cores[n], self.right_rhs[n], optimize=True)

    def max_inconsistency(self, cores: list, left_upto: int, right_from: int) -> float:
        """Largest deviation of cached blocks from a fresh recomputation."""
        worst = 0.0
        L = np.ones((1, 1, 1))
        for n in range(left_upto):
            L = left_step(L, cores[n], self.A.cores[n])
            worst = max(worst, float(np.max(np.abs(L - self.left[n + 1]))))
        R = np.ones((1, 1, 1))
        for n in range(self.N - 1, right_from, -1):
            R = right_step(R, cores[n], self.A.cores[n])
            worst = max(worst, float(np.max(np.abs(R - self.right[n - 1]))))
        return worst
