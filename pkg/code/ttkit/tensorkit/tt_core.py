# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals
"""
Tensor-train containers and the algebra every solver in this package is built on.

Train cores use the (R_{n-1}, I_n, R_n) layout, operator cores the
(R_{n-1}, I_n, J_n, R_n) layout. Dense equivalents are C-ordered: the dense
vector of a train is contract_full(x).reshape(-1) and the dense matrix of an
operator has row index (i_1, ..., i_N) and column index (j_1, ..., j_N), both
with the first mode slowest.

Sites are addressed zero-based (0 .. N-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence
from typing import Union

import numpy as np
import scipy.linalg
from prefect.logging import get_logger

logger = get_logger("tensorkit.tt_core")

DenseTensor = np.ndarray
RankCap = Union[int, Sequence[int], None]

# Relative threshold on singular values below which a factorization is
# considered rank deficient.
RANK_DEFICIENCY_TOL = 1e-13
ORTHOGONALITY_TOL = 1e-10
DEFAULT_SEED = 0


def _frozen(core: np.ndarray, ndim: int, what: str) -> np.ndarray:
    arr = np.array(core, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"{what} cores must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_chain(cores: Sequence[np.ndarray], what: str) -> None:
    if len(cores) == 0:
        raise ValueError(f"{what} needs at least one core")
    if cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
        raise ValueError(f"{what} boundary ranks must be 1")
    for n in range(len(cores) - 1):
        if cores[n].shape[-1] != cores[n + 1].shape[0]:
            raise ValueError(
                f"{what} rank mismatch between sites {n} and {n + 1}: "
                f"{cores[n].shape} vs {cores[n + 1].shape}"
            )


@dataclass(frozen=True)
class TTTrain:
    """A vector/tensor in TT format. Cores are read-only after construction."""

    cores: tuple

    def __post_init__(self):
        cores = tuple(_frozen(c, 3, "TTTrain") for c in self.cores)
        _check_chain(cores, "TTTrain")
        object.__setattr__(self, "cores", cores)

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def mode_sizes(self) -> list:
        return [c.shape[1] for c in self.cores]

    @property
    def ranks(self) -> list:
        return [1] + [c.shape[2] for c in self.cores]

    @property
    def storage(self) -> int:
        return int(sum(c.size for c in self.cores))

    @classmethod
    def from_dense(cls, x, tol: float = 0.0, max_rank: RankCap = None) -> "TTTrain":
        return tt_svd(x, tol, max_rank)

    def to_dense(self) -> DenseTensor:
        return contract_full(self)

    def to_vector(self) -> np.ndarray:
        return contract_full(self).reshape(-1)


@dataclass(frozen=True)
class TTOperator:
    """A matrix in TT/MPO format with (R_{n-1}, I_n, J_n, R_n) cores."""

    cores: tuple

    def __post_init__(self):
        cores = tuple(_frozen(c, 4, "TTOperator") for c in self.cores)
        _check_chain(cores, "TTOperator")
        object.__setattr__(self, "cores", cores)

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def row_sizes(self) -> list:
        return [c.shape[1] for c in self.cores]

    @property
    def col_sizes(self) -> list:
        return [c.shape[2] for c in self.cores]

    @property
    def ranks(self) -> list:
        return [1] + [c.shape[3] for c in self.cores]

    @property
    def is_square(self) -> bool:
        return self.row_sizes == self.col_sizes

    @classmethod
    def from_dense(
        cls,
        matrix,
        row_sizes: Sequence[int],
        col_sizes: Sequence[int],
        tol: float = 0.0,
        max_rank: RankCap = None,
    ) -> "TTOperator":
        """Compress a dense matrix whose row/column indices factor as given."""
        matrix = np.asarray(matrix, dtype=np.float64)
        N = len(row_sizes)
        if len(col_sizes) != N:
            raise ValueError("row_sizes and col_sizes must have the same length")
        if matrix.shape != (int(np.prod(row_sizes)), int(np.prod(col_sizes))):
            raise ValueError(
                f"matrix shape {matrix.shape} does not factor as {row_sizes} x {col_sizes}"
            )
        full = matrix.reshape(*row_sizes, *col_sizes)
        perm = [ax for n in range(N) for ax in (n, N + n)]
        merged = full.transpose(perm).reshape([i * j for i, j in zip(row_sizes, col_sizes)])
        train = tt_svd(merged, tol, max_rank)
        return cls(
            tuple(
                c.reshape(c.shape[0], i, j, c.shape[2])
                for c, i, j in zip(train.cores, row_sizes, col_sizes)
            )
        )

    def to_dense(self) -> np.ndarray:
        N = self.order
        full = _chain(self.cores)
        perm = list(range(0, 2 * N, 2)) + list(range(1, 2 * N, 2))
        return full.transpose(perm).reshape(
            int(np.prod(self.row_sizes)), int(np.prod(self.col_sizes))
        )


@dataclass(frozen=True)
class BlockTT:
    """
    K trains sharing all cores but one. The core at ``block_position`` has
    shape (R_{n-1}, I_n, R_n, K).
    """

    cores: tuple
    block_position: int

    def __post_init__(self):
        p = self.block_position
        if not 0 <= p < len(self.cores):
            raise ValueError(f"block position {p} outside 0..{len(self.cores) - 1}")
        cores = tuple(
            _frozen(c, 4 if n == p else 3, "BlockTT") for n, c in enumerate(self.cores)
        )
        for n in range(len(cores) - 1):
            if cores[n].shape[2] != cores[n + 1].shape[0]:
                raise ValueError(f"BlockTT rank mismatch between sites {n} and {n + 1}")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValueError("BlockTT boundary ranks must be 1")
        object.__setattr__(self, "cores", cores)

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def block_size(self) -> int:
        return self.cores[self.block_position].shape[3]

    @property
    def mode_sizes(self) -> list:
        return [c.shape[1] for c in self.cores]

    @property
    def ranks(self) -> list:
        return [1] + [c.shape[2] for c in self.cores]

    def column(self, k: int) -> TTTrain:
        p = self.block_position
        return TTTrain(
            tuple(c[..., k] if n == p else c for n, c in enumerate(self.cores))
        )

    def columns(self) -> list:
        return [self.column(k) for k in range(self.block_size)]

    def to_dense(self) -> np.ndarray:
        """Dense I_1 x ... x I_N x K array."""
        return np.stack([contract_full(t) for t in self.columns()], axis=-1)

    def to_matrix(self) -> np.ndarray:
        """Dense (I_1...I_N) x K matrix of the represented columns."""
        return np.stack([t.to_vector() for t in self.columns()], axis=1)


@dataclass(frozen=True)
class InterfaceMatrices:
    """Lazily materialised interface matrices G^{<n} and G^{>n} of a train."""

    train: TTTrain
    site: int

    @cached_property
    def left(self) -> np.ndarray:
        return left_interface(self.train, self.site)

    @cached_property
    def right(self) -> np.ndarray:
        return right_interface(self.train, self.site)


def _chain(cores: Sequence[np.ndarray]) -> np.ndarray:
    res = cores[0][0]
    for core in cores[1:]:
        res = np.tensordot(res, core, axes=([res.ndim - 1], [0]))
    return res[..., 0]


def _rank_caps(max_rank: RankCap, bonds: int) -> list:
    if max_rank is None:
        return [None] * bonds
    if np.isscalar(max_rank):
        return [int(max_rank)] * bonds
    caps = [int(r) for r in max_rank]
    if len(caps) != bonds:
        raise ValueError(f"expected {bonds} rank caps, got {len(caps)}")
    return caps


def truncation_rank(s: np.ndarray, eps: float, max_rank: int | None = None) -> int:
    """Smallest rank whose discarded tail energy is at most eps^2 * ||s||^2."""
    energy = s**2
    total = float(np.sum(energy))
    if total == 0.0:
        return 1
    tails = np.concatenate([np.cumsum(energy[::-1])[::-1], [0.0]])
    r = int(np.argmax(tails <= eps**2 * total))
    if max_rank is not None:
        r = min(r, max_rank)
    return max(r, 1)


def min_rank_factor(
    M: np.ndarray, max_rank: int | None = None, eps: float = 0.0
) -> tuple:
    """
    Factor M = Q P with orthonormal columns in Q and the smallest inner
    dimension. QR is used unless R is numerically rank deficient or a
    truncation is requested, in which case an SVD is used instead.
    """
    if max_rank is None and eps == 0.0:
        Q, R = scipy.linalg.qr(M, mode="economic")
        d = np.abs(np.diag(R))
        if d.size and d.min() > RANK_DEFICIENCY_TOL * d.max():
            return Q, R
    U, s, Vt = scipy.linalg.svd(M, full_matrices=False)
    numerical = int(np.sum(s > RANK_DEFICIENCY_TOL * s[0])) if s.size and s[0] > 0 else 1
    r = min(truncation_rank(s, eps, max_rank), max(numerical, 1))
    return U[:, :r], s[:r, None] * Vt[:r]


def tt_svd(x, tol: float = 0.0, max_rank: RankCap = None) -> TTTrain:
    """
    TT-SVD of a dense tensor with relative Frobenius error at most ``tol``.
    Cores 0..N-2 come out left-orthogonal, the last core carries the norm.
    Args:
        x (array_like): Dense tensor, C order.
        tol (float): Relative Frobenius error allowed over all bonds.
        max_rank (int | list): Cap on every bond, or one cap per bond.
    Returns:
        TTTrain: The decomposition; a zero tensor gives rank-1 zero cores.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0 or x.ndim == 0:
        raise ValueError(f"cannot decompose an empty tensor of shape {x.shape}")
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    sizes = x.shape
    N = len(sizes)
    caps = _rank_caps(max_rank, N - 1)
    if not np.any(x):
        return TTTrain(tuple(np.zeros((1, i, 1)) for i in sizes))
    eps = tol / np.sqrt(max(N - 1, 1))
    cores = []
    rank = 1
    C = x.reshape(1, -1)
    for n in range(N - 1):
        C = C.reshape(rank * sizes[n], -1)
        U, s, Vt = scipy.linalg.svd(C, full_matrices=False)
        r = truncation_rank(s, eps, caps[n])
        cores.append(U[:, :r].reshape(rank, sizes[n], r))
        C = s[:r, None] * Vt[:r]
        rank = r
    cores.append(C.reshape(rank, sizes[-1], 1))
    return TTTrain(tuple(cores))


def _qr_left(core: np.ndarray, nxt: np.ndarray) -> tuple:
    r, I, rr = core.shape
    Q, R = scipy.linalg.qr(core.reshape(r * I, rr), mode="economic")
    return Q.reshape(r, I, -1), np.tensordot(R, nxt, axes=(1, 0))


def _qr_right(prev: np.ndarray, core: np.ndarray) -> tuple:
    r, I, rr = core.shape
    Q, R = scipy.linalg.qr(core.reshape(r, I * rr).T, mode="economic")
    return np.tensordot(prev, R.T, axes=(prev.ndim - 1, 0)), Q.T.reshape(-1, I, rr)


def orthogonalize(x: TTTrain, pivot: int) -> TTTrain:
    """
    Cores left of ``pivot`` become left-orthogonal, cores right of it right-orthogonal.
    Args:
        x (TTTrain): Train to gauge.
        pivot (int): Zero-based site that keeps the norm.
    Returns:
        TTTrain: The same tensor in the pivot-orthogonal gauge.
    """
    N = x.order
    if not 0 <= pivot < N:
        raise ValueError(f"pivot {pivot} outside 0..{N - 1}")
    cores = list(x.cores)
    for n in range(pivot):
        cores[n], cores[n + 1] = _qr_left(cores[n], cores[n + 1])
    for n in range(N - 1, pivot, -1):
        cores[n - 1], cores[n] = _qr_right(cores[n - 1], cores[n])
    return TTTrain(tuple(cores))


def is_orthogonal(x: TTTrain, pivot: int, tol: float = ORTHOGONALITY_TOL) -> bool:
    """True when ``x`` is ``pivot``-orthogonal."""
    for n in range(pivot):
        c = x.cores[n]
        L = c.reshape(-1, c.shape[2])
        if not np.allclose(L.T @ L, np.eye(c.shape[2]), atol=tol):
            return False
    for n in range(pivot + 1, x.order):
        c = x.cores[n]
        R = c.reshape(c.shape[0], -1)
        if not np.allclose(R @ R.T, np.eye(c.shape[0]), atol=tol):
            return False
    return True


def _round_cores(cores: list, eps: float, caps: list, keep: list | None = None) -> list:
    """Right-to-left QR, then left-to-right truncated SVD."""
    N = len(cores)
    for n in range(N - 1, 0, -1):
        cores[n - 1], cores[n] = _qr_right(cores[n - 1], cores[n])
    for n in range(N - 1):
        r, I, rr = cores[n].shape
        U, s, Vt = scipy.linalg.svd(cores[n].reshape(r * I, rr), full_matrices=False)
        if keep is not None:
            k = min(keep[n], s.size)
        else:
            k = truncation_rank(s, eps, caps[n])
        cores[n] = U[:, :k].reshape(r, I, k)
        cores[n + 1] = np.tensordot(s[:k, None] * Vt[:k], cores[n + 1], axes=(1, 0))
    return cores


def tt_round(x: TTTrain, tol: float = 0.0, max_rank: RankCap = None) -> TTTrain:
    """
    TT-rounding; never increases a rank.
    Args:
        x (TTTrain): Train to compress.
        tol (float): Relative Frobenius error allowed, split evenly over the bonds.
        max_rank (int | list): Optional cap on every bond or per bond.
    Returns:
        TTTrain: Left-orthogonal train with the smallest admissible ranks.
    """
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    N = x.order
    if N == 1:
        return x
    eps = tol / np.sqrt(N - 1)
    return TTTrain(tuple(_round_cores(list(x.cores), eps, _rank_caps(max_rank, N - 1))))


def tt_round_to_ranks(x: TTTrain, ranks: Sequence[int]) -> TTTrain:
    """Quasi-optimal projection onto trains with exactly the given interior ranks."""
    N = x.order
    if len(ranks) != N + 1:
        raise ValueError(f"expected {N + 1} ranks, got {len(ranks)}")
    if N == 1:
        return x
    return TTTrain(tuple(_round_cores(list(x.cores), 0.0, [None] * (N - 1), list(ranks[1:-1]))))


def contract_full(x: TTTrain) -> DenseTensor:
    """Dense tensor of shape mode_sizes via the slice-product formula."""
    return _chain(x.cores).reshape(x.mode_sizes)


def _require_same_modes(a: Sequence[int], b: Sequence[int], what: str) -> None:
    if list(a) != list(b):
        raise ValueError(f"{what}: mode sizes {list(a)} and {list(b)} differ")


def apply_op(A: TTOperator, x: TTTrain) -> TTTrain:
    """
    Matrix-by-vector product; ranks multiply.
    Args:
        A (TTOperator): Operator whose column sizes match the modes of ``x``.
        x (TTTrain): Train to multiply.
    Returns:
        TTTrain: A x with bond ranks R^A_n R^x_n, not rounded.
    """
    _require_same_modes(A.col_sizes, x.mode_sizes, "apply_op")
    cores = []
    for a, c in zip(A.cores, x.cores):
        ra, I, _, rb = a.shape
        rx, _, ry = c.shape
        cores.append(np.einsum("aijb,cjd->acibd", a, c).reshape(ra * rx, I, rb * ry))
    return TTTrain(tuple(cores))


def operator_matmul(A: TTOperator, B: TTOperator) -> TTOperator:
    """Operator product A @ B."""
    _require_same_modes(A.col_sizes, B.row_sizes, "operator_matmul")
    cores = []
    for a, b in zip(A.cores, B.cores):
        ra, I, _, rb = a.shape
        sa, _, K, sb = b.shape
        cores.append(np.einsum("aijb,cjkd->acikbd", a, b).reshape(ra * sa, I, K, rb * sb))
    return TTOperator(tuple(cores))


def transpose_operator(A: TTOperator) -> TTOperator:
    return TTOperator(tuple(c.transpose(0, 2, 1, 3) for c in A.cores))


def dot(x: TTTrain, y: TTTrain) -> float:
    """
    Inner product computed by left-to-right contraction.
    Args:
        x (TTTrain): First train.
        y (TTTrain): Second train with the same mode sizes.
    Returns:
        float: <x, y>.
    """
    _require_same_modes(x.mode_sizes, y.mode_sizes, "dot")
    M = np.ones((1, 1))
    for cx, cy in zip(x.cores, y.cores):
        M = np.einsum("ab,aic,bid->cd", M, cx, cy)
    return float(M[0, 0])


def norm(x: TTTrain) -> float:
    """Frobenius norm via orthogonalization."""
    last = orthogonalize(x, x.order - 1).cores[-1]
    return float(np.linalg.norm(last))


def _direct_sum(cores_x: Sequence[np.ndarray], cores_y: Sequence[np.ndarray]) -> list:
    N = len(cores_x)
    if N == 1:
        return [cores_x[0] + cores_y[0]]
    out = []
    for n, (cx, cy) in enumerate(zip(cores_x, cores_y)):
        if n == 0:
            out.append(np.concatenate([cx, cy], axis=-1))
        elif n == N - 1:
            out.append(np.concatenate([cx, cy], axis=0))
        else:
            mid = cx.shape[1:-1]
            core = np.zeros((cx.shape[0] + cy.shape[0], *mid, cx.shape[-1] + cy.shape[-1]))
            core[: cx.shape[0], ..., : cx.shape[-1]] = cx
            core[cx.shape[0] :, ..., cx.shape[-1] :] = cy
            out.append(core)
    return out


def add(x: TTTrain, y: TTTrain) -> TTTrain:
    """Sum by partial direct sums of the cores; interior ranks add."""
    _require_same_modes(x.mode_sizes, y.mode_sizes, "add")
    return TTTrain(tuple(_direct_sum(x.cores, y.cores)))


def operator_add(A: TTOperator, B: TTOperator) -> TTOperator:
    _require_same_modes(A.row_sizes, B.row_sizes, "operator_add")
    _require_same_modes(A.col_sizes, B.col_sizes, "operator_add")
    return TTOperator(tuple(_direct_sum(A.cores, B.cores)))


def hadamard(x: TTTrain, y: TTTrain) -> TTTrain:
    """Element-wise product; ranks multiply."""
    _require_same_modes(x.mode_sizes, y.mode_sizes, "hadamard")
    cores = []
    for cx, cy in zip(x.cores, y.cores):
        ra, I, rb = cx.shape
        sa, _, sb = cy.shape
        cores.append(np.einsum("aib,cid->acibd", cx, cy).reshape(ra * sa, I, rb * sb))
    return TTTrain(tuple(cores))


def scale(x: TTTrain, a: float) -> TTTrain:
    return TTTrain((x.cores[0] * a,) + x.cores[1:])


def scale_operator(A: TTOperator, a: float) -> TTOperator:
    return TTOperator((A.cores[0] * a,) + A.cores[1:])


def left_interface(x: TTTrain, n: int) -> np.ndarray:
    """G^{<n} of shape (I_0...I_{n-1}, R_n-left)."""
    M = np.ones((1, 1))
    for core in x.cores[:n]:
        r, I, rr = core.shape
        M = (M @ core.reshape(r, I * rr)).reshape(-1, rr)
    return M


def right_interface(x: TTTrain, n: int) -> np.ndarray:
    """G^{>n} of shape (R_n-right, I_{n+1}...I_{N-1})."""
    M = np.ones((1, 1))
    for core in reversed(x.cores[n + 1 :]):
        r, I, rr = core.shape
        M = (core.reshape(r * I, rr) @ M).reshape(r, -1)
    return M


def interface_matrices(x: TTTrain, n: int) -> InterfaceMatrices:
    if not 0 <= n < x.order:
        raise ValueError(f"site {n} outside 0..{x.order - 1}")
    return InterfaceMatrices(x, n)


def frame_matrix(x: TTTrain, n: int) -> np.ndarray:
    """Dense frame matrix X_{!=n}; only for instances small enough to materialise."""
    iface = interface_matrices(x, n)
    return np.kron(np.kron(iface.left, np.eye(x.mode_sizes[n])), iface.right.T)


def frame_apply(x: TTTrain, n: int, v) -> np.ndarray:
    """X_{!=n} @ v by core contractions; ``x`` must be n-orthogonal."""
    if not 0 <= n < x.order:
        raise ValueError(f"site {n} outside 0..{x.order - 1}")
    if not is_orthogonal(x, n):
        raise ValueError(f"train is not orthogonalized at site {n}; call orthogonalize(x, {n})")
    shape = x.cores[n].shape
    v = np.asarray(v, dtype=np.float64)
    if v.size != int(np.prod(shape)):
        raise ValueError(f"vector of length {v.size} does not match core shape {shape}")
    cores = list(x.cores)
    cores[n] = v.reshape(shape)
    return _chain(cores).reshape(-1)


def block_shift_right(x: BlockTT, max_rank: int | None = None, eps: float = 0.0) -> BlockTT:
    """Move the block one site right; the vacated core becomes left-orthogonal."""
    n = x.block_position
    if n >= x.order - 1:
        raise ValueError(f"block at site {n} is already at the right boundary")
    B = x.cores[n]
    r, I, rr, K = B.shape
    Q, P = min_rank_factor(B.transpose(0, 1, 3, 2).reshape(r * I, K * rr), max_rank, eps)
    k = Q.shape[1]
    W = P.reshape(k, K, rr)
    block = np.einsum("akb,bjc->ajck", W, x.cores[n + 1])
    cores = list(x.cores)
    cores[n] = Q.reshape(r, I, k)
    cores[n + 1] = block
    return BlockTT(tuple(cores), n + 1)


def block_shift_left(x: BlockTT, max_rank: int | None = None, eps: float = 0.0) -> BlockTT:
    """Move the block one site left; the vacated core becomes right-orthogonal."""
    n = x.block_position
    if n <= 0:
        raise ValueError("block at site 0 is already at the left boundary")
    B = x.cores[n]
    r, I, rr, K = B.shape
    M = B.transpose(0, 3, 1, 2).reshape(r * K, I * rr)
    Q, P = min_rank_factor(M.T, max_rank, eps)
    k = Q.shape[1]
    W = P.T.reshape(r, K, k)
    block = np.einsum("aib,bkc->aick", x.cores[n - 1], W)
    cores = list(x.cores)
    cores[n - 1] = block
    cores[n] = Q.T.reshape(k, I, rr)
    return BlockTT(tuple(cores), n - 1)


def truncated_gradient_step(
    x: TTTrain, z: TTTrain, step: float, tol: float = 0.0, max_rank: RankCap = None
) -> TTTrain:
    """One truncated update round(x + step * z)."""
    return tt_round(add(x, scale(z, step)), tol, max_rank)


def random_train(
    mode_sizes: Sequence[int], ranks: Sequence[int], seed: int = DEFAULT_SEED
) -> TTTrain:
    """Gaussian cores with the given interior ranks (len(mode_sizes) - 1 of them)."""
    rng = np.random.default_rng(seed)
    chain = [1] + list(ranks) + [1]
    if len(chain) != len(mode_sizes) + 1:
        raise ValueError(f"expected {len(mode_sizes) - 1} interior ranks, got {len(ranks)}")
    return TTTrain(
        tuple(
            rng.standard_normal((chain[n], I, chain[n + 1]))
            for n, I in enumerate(mode_sizes)
        )
    )


def random_block(
    mode_sizes: Sequence[int], ranks: Sequence[int], K: int, seed: int = DEFAULT_SEED
) -> BlockTT:
    """Block-0 TT with right-orthogonal cores and orthonormal block columns."""
    rng = np.random.default_rng(seed)
    train = orthogonalize(random_train(mode_sizes, ranks, seed), 0)
    r, I, rr = train.cores[0].shape
    if K > r * I * rr:
        raise ValueError(f"block size {K} exceeds local dimension {r * I * rr}")
    Q, _ = scipy.linalg.qr(rng.standard_normal((r * I * rr, K)), mode="economic")
    block = Q.reshape(r, I, rr, K)
    return BlockTT((block,) + train.cores[1:], 0)


def identity_operator(mode_sizes: Sequence[int]) -> TTOperator:
    return TTOperator(tuple(np.eye(I).reshape(1, I, I, 1) for I in mode_sizes))


def diag_operator(x: TTTrain) -> TTOperator:
    """Diagonal operator whose diagonal is the train ``x``."""
    return TTOperator(
        tuple(np.einsum("aib,ij->aijb", c, np.eye(c.shape[1])) for c in x.cores)
    )


def laplace_operator(D: int, tol: float = 1e-12) -> TTOperator:
    """Dirichlet tridiag(-1, 2, -1) of size 2^D as a QTT operator."""
    n = 2**D
    L = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    return TTOperator.from_dense(L, [2] * D, [2] * D, tol)
