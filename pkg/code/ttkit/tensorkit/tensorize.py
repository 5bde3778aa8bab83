# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals
"""
Structured tensorizations of low-order data: folding and quantization,
Toeplitz/Hankel tensors, the Loewner matrix, the QTT convolution tensor and the
closed-form rank-2 trains of a sinusoid.

All index arithmetic is zero-based. Folding uses the column-major rule: the
first mode varies fastest, so for quantized vectors the first mode is the
least significant bit.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import tensorly as tl
from prefect.logging import get_logger

from tensorkit.tt_core import TTTrain
from tensorkit.tt_core import contract_full

logger = get_logger("tensorkit.tensorize")

MAX_CONVOLUTION_ORDER = 17
SINUSOID_DEGENERACY_TOL = 1e-12
SINUSOID_KINDS = ("folded", "toeplitz", "hankel")


def fold(v, mode_sizes: Sequence[int]) -> np.ndarray:
    """Vector to tensor with linear index i = i_1 + i_2 I_1 + i_3 I_1 I_2 + ..."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != int(np.prod(mode_sizes)):
        raise ValueError(f"cannot fold {v.size} values into mode sizes {list(mode_sizes)}")
    return v.reshape(tuple(mode_sizes), order="F")


def unfold(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1, order="F")


def quantize(v) -> np.ndarray:
    """
    Length-2^D vector to a 2 x ... x 2 tensor, least significant bit first.
    Args:
        v (array_like): Vector of length 2^D with D >= 1.
    Returns:
        np.ndarray: Order-D tensor with mode sizes 2.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    D = int(round(np.log2(v.size))) if v.size > 0 else -1
    if D < 1 or 2**D != v.size:
        raise ValueError(f"quantization needs a length 2^D with D >= 1, got {v.size}")
    return fold(v, (2,) * D)


def dequantize(x) -> np.ndarray:
    return unfold(x)


def _check_generator(y, mode_sizes: Sequence[int]) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    sizes = [int(s) for s in mode_sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError(f"mode sizes must be positive, got {sizes}")
    expected = sum(sizes) - len(sizes) + 1
    if y.size != expected:
        raise ValueError(
            f"generator of length {y.size} does not fit mode sizes {sizes}; "
            f"need sum(I_n) - N + 1 = {expected}"
        )
    return y


def toeplitz_tensor(y, mode_sizes: Sequence[int]) -> np.ndarray:
    """
    T[j_1..j_N] = y[(I_1-1-j_1) + ... + (I_{N-1}-1-j_{N-1}) + j_N].
    Args:
        y (array_like): Generator of length sum(I_n) - N + 1.
        mode_sizes (Sequence[int]): Mode sizes I_1, ..., I_N.
    Returns:
        np.ndarray: Dense Toeplitz tensor.
    """
    y = _check_generator(y, mode_sizes)
    sizes = list(mode_sizes)
    grids = np.indices(sizes, sparse=True)
    idx = grids[-1]
    for n in range(len(sizes) - 1):
        idx = idx + (sizes[n] - 1 - grids[n])
    return y[idx]


def hankel_tensor(y, mode_sizes: Sequence[int]) -> np.ndarray:
    """H[j_1..j_N] = y[j_1 + ... + j_N]."""
    y = _check_generator(y, mode_sizes)
    return y[sum(np.indices(list(mode_sizes), sparse=True))]


def toeplitz_matrix(y, rows: int, cols: int) -> np.ndarray:
    return toeplitz_tensor(y, (rows, cols))


def toeplitz_tensor_recursive(y, mode_sizes: Sequence[int]) -> np.ndarray:
    """
    Build the order-N Toeplitz tensor by Toeplitz-matricizing every last-mode
    fibre of the order-(N-1) tensor with sizes (I_1, ..., I_{N-2}, I_{N-1}+I_N-1).
    """
    sizes = list(mode_sizes)
    _check_generator(y, sizes)
    if len(sizes) <= 2:
        return toeplitz_tensor(y, sizes)
    lower = toeplitz_tensor_recursive(y, sizes[:-2] + [sizes[-2] + sizes[-1] - 1])
    out = np.empty(sizes)
    for idx in np.ndindex(*sizes[:-2]):
        out[idx] = toeplitz_matrix(lower[idx], sizes[-2], sizes[-1])
    return out


def hankel_generator(H) -> np.ndarray:
    """Recover y by concatenating fibres along the edge of a Hankel tensor."""
    H = np.asarray(H, dtype=np.float64)
    pos = [0] * H.ndim
    values = []
    for n in range(H.ndim):
        start = 0 if n == 0 else 1
        for j in range(start, H.shape[n]):
            pos[n] = j
            values.append(H[tuple(pos)])
    return np.asarray(values)


def vandermonde_hankel(nodes, weights, mode_sizes: Sequence[int]) -> np.ndarray:
    """
    Hankel tensor of y[t] = sum_r c_r z_r^t assembled as a symmetric CP model
    with Vandermonde factors [1, z_r, z_r^2, ...].
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    factors = [np.vander(nodes, I, increasing=True).T for I in mode_sizes]
    return tl.cp_to_tensor((weights, factors))


def loewner_matrix(f_x, f_y, x, y) -> np.ndarray:
    """L[i, j] = (f(x_i) - f(y_j)) / (x_i - y_j)."""
    f_x = np.asarray(f_x, dtype=np.float64)
    f_y = np.asarray(f_y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if f_x.shape != x.shape or f_y.shape != y.shape:
        raise ValueError("function values and points must have matching lengths")
    gap = x[:, None] - y[None, :]
    if np.any(gap == 0.0):
        raise ValueError("Loewner points must be pairwise distinct between the two sets")
    return (f_x[:, None] - f_y[None, :]) / gap


def elementary_core_tensor(N: int) -> np.ndarray:
    """
    Elementary core S of shape (N, 2, ..., 2, N) with N+1 binary modes
    (i_1..i_N, e). Built from the 2N sparse tensors S_k and the shifting rules
    between consecutive rows m.
    """
    if not 2 <= N <= MAX_CONVOLUTION_ORDER:
        raise ValueError(f"convolution order N must lie in 2..{MAX_CONVOLUTION_ORDER}, got {N}")
    # One-based index formula: sum_{n<N} (2 - i_n) + i_N equals the target of S_k.
    ones = np.indices((2,) * N) + 1
    level = (2 - ones[:-1]).sum(axis=0) + ones[-1]
    blocks = []
    for k in range(1, 2 * N + 1):
        target = max(N - k + 1, 0) if k % 2 == 1 else max(N - k + 3, 0)
        blocks.append((level == target).astype(np.float64))
    S = np.zeros((N,) + (2,) * (N + 1) + (N,))
    for n in range(N):
        S[0, ..., 0, n] = blocks[2 * n]
        S[0, ..., 1, n] = blocks[2 * n + 1]
    for m in range(1, N):
        for n in range(N):
            S[m, ..., 0, n] = S[m - 1, ..., 1, n]
            S[m, ..., 1, n] = S[m - 1, ..., 0, N - 1] if n == 0 else S[m - 1, ..., 0, n - 1]
    return S


@dataclass(frozen=True)
class ConvTensorQTT:
    """
    QTT form of the zero-padded convolution tensor of size 2^D x ... x 2^D x N 2^D.

    Level cores have shape (r, 2^{N+1}, s) with the level's bits (i_1..i_N, e)
    merged in C order; the last core (N, N, 1) is the exchange matrix that
    selects the high digit of the generator index.
    """

    N: int
    D: int

    def __post_init__(self):
        if self.D < 1:
            raise ValueError(f"quantization depth D must be positive, got {self.D}")
        elementary_core_tensor(self.N)

    @cached_property
    def cores(self) -> tuple:
        N = self.N
        S = elementary_core_tensor(N).reshape(N, 2 ** (N + 1), N)
        exchange = np.fliplr(np.eye(N)).reshape(N, N, 1)
        return (S[0:1],) + (S,) * (self.D - 1) + (exchange,)

    @property
    def exchange(self) -> np.ndarray:
        return self.cores[-1][:, :, 0]

    def to_train(self) -> TTTrain:
        return TTTrain(self.cores)


def convolution_tensor_qtt(N: int, D: int) -> ConvTensorQTT:
    return ConvTensorQTT(N, D)


def toeplitz_from_qtt(c: ConvTensorQTT, y_tt: TTTrain) -> TTTrain:
    """
    Contract the generator slot of the convolution tensor with a QTT generator
    of mode sizes (2, ..., 2, N). The result has D cores of mode size 2^N
    indexing the bits (j_1..j_N) of one level.
    """
    N, D = c.N, c.D
    expected = [2] * D + [N]
    if y_tt.mode_sizes != expected:
        raise ValueError(f"generator train must have mode sizes {expected}, got {y_tt.mode_sizes}")
    cores = []
    for C, Y in zip(c.cores[:D], y_tt.cores[:D]):
        r, _, s = C.shape
        p, _, q = Y.shape
        C4 = C.reshape(r, 2**N, 2, s)
        cores.append(np.einsum("raes,peq->rpasq", C4, Y).reshape(r * p, 2**N, s * q))
    tail = np.einsum("re,pe->rp", c.exchange, y_tt.cores[D][:, :, 0])
    last = cores[-1]
    R = last.shape[0]
    last = last.reshape(R, 2**N, N, -1)
    cores[-1] = np.einsum("xasq,sq->xa", last, tail).reshape(R, 2**N, 1)
    return TTTrain(tuple(cores))


def qtt_levels_to_dense(x: TTTrain, N: int) -> np.ndarray:
    """Turn a train with D cores of mode size 2^N into a 2^D x ... x 2^D tensor."""
    D = x.order
    if any(I != 2**N for I in x.mode_sizes):
        raise ValueError(f"expected mode sizes 2^{N}, got {x.mode_sizes}")
    bits = contract_full(x).reshape((2,) * (N * D))
    perm = [d * N + n for n in range(N) for d in range(D)]
    return bits.transpose(perm).reshape((2**D,) * N, order="F")


def harmonic_matrix(omega: float, I: int) -> np.ndarray:
    """U_{w,I} with rows [cos(w i), sin(w i)] for i = 0..I-1."""
    t = np.arange(I) * omega
    return np.stack([np.cos(t), np.sin(t)], axis=1)


def phase_matrix(phi: float) -> np.ndarray:
    return np.array([[np.sin(phi), np.cos(phi)], [np.cos(phi), -np.sin(phi)]])


def _rotation(b: float) -> np.ndarray:
    return np.array([[np.cos(b), np.sin(b)], [-np.sin(b), np.cos(b)]])


def sinusoid_samples(omega: float, phi: float, length: int) -> np.ndarray:
    return np.sin(omega * np.arange(length) + phi)


def sinusoid_matrix_factors(omega: float, phi: float, I: int, J: int) -> tuple:
    """Factors (U_{w,I}, S, U_{Iw,J}) of the I x J folding of sin(w t + phi)."""
    return harmonic_matrix(omega, I), phase_matrix(phi), harmonic_matrix(I * omega, J)


def sinusoid_tucker3(omega: float, phi: float, I: int, J: int, K: int) -> tuple:
    """Tucker form (core, factors) of the I x J x K folding with a 2 x 2 x 2 core."""
    G = np.zeros((2, 2, 2))
    G[:, :, 0] = [[1.0, 0.0], [0.0, -1.0]]
    G[:, :, 1] = [[0.0, 1.0], [1.0, 0.0]]
    core = tl.tenalg.mode_dot(G, phase_matrix(phi), 2)
    factors = [
        harmonic_matrix(omega, I),
        harmonic_matrix(I * omega, J),
        harmonic_matrix(I * J * omega, K),
    ]
    return core, factors


def folded_sinusoid_tt(omega: float, phi: float, mode_sizes: Sequence[int]) -> TTTrain:
    """Rank-2 train of fold(sin(w t + phi), mode_sizes) from rotation cores."""
    sizes = [int(s) for s in mode_sizes]
    N = len(sizes)
    stride = np.concatenate([[1], np.cumprod(sizes)[:-1]])
    if N == 1:
        core = sinusoid_samples(omega, phi, sizes[0]).reshape(1, -1, 1)
        return TTTrain((core,))
    cores = []
    for n, I in enumerate(sizes):
        angles = np.arange(I) * stride[n] * omega
        rot = np.stack([_rotation(a) for a in angles], axis=1)
        if n == 0:
            cores.append(rot[0:1])
        elif n == N - 1:
            cores.append((rot @ np.array([np.sin(phi), np.cos(phi)]))[..., None])
        else:
            cores.append(rot)
    return TTTrain(tuple(cores))


@dataclass(frozen=True)
class ToeplitzSpec:
    generator: np.ndarray
    mode_sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "generator", _check_generator(self.generator, self.mode_sizes))
        object.__setattr__(self, "mode_sizes", tuple(int(s) for s in self.mode_sizes))

    def to_dense(self) -> np.ndarray:
        return toeplitz_tensor(self.generator, self.mode_sizes)


@dataclass(frozen=True)
class HankelSpec:
    generator: np.ndarray
    mode_sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "generator", _check_generator(self.generator, self.mode_sizes))
        object.__setattr__(self, "mode_sizes", tuple(int(s) for s in self.mode_sizes))

    @property
    def is_symmetric(self) -> bool:
        return len(set(self.mode_sizes)) == 1

    def to_dense(self) -> np.ndarray:
        return hankel_tensor(self.generator, self.mode_sizes)


@dataclass(frozen=True)
class SinusoidTT:
    """
    Closed-form rank-2 trains of y[t] = sin(w t + phi).

    ``folded`` is the 2 x ... x 2 folding of 2^D samples. ``toeplitz`` and
    ``hankel`` are the order-D 2 x ... x 2 Toeplitz/Hankel tensors of the
    D + 1 samples y[0..D].
    """

    kind: str
    omega: float
    phi: float
    D: int

    def __post_init__(self):
        if self.kind not in SINUSOID_KINDS:
            raise ValueError(f"unknown sinusoid kind {self.kind!r}; expected one of {SINUSOID_KINDS}")
        if self.D < 2:
            raise ValueError(f"sinusoid trains need D >= 2, got {self.D}")
        if abs(np.sin(self.omega)) < SINUSOID_DEGENERACY_TOL:
            raise ValueError(f"frequency {self.omega} has sin(w) = 0; the rank-2 form degenerates")

    @property
    def length(self) -> int:
        return 2**self.D if self.kind == "folded" else self.D + 1

    def samples(self) -> np.ndarray:
        return sinusoid_samples(self.omega, self.phi, self.length)

    def to_dense(self) -> np.ndarray:
        """Directly generated tensor, used as an oracle for the cores."""
        sizes = (2,) * self.D
        if self.kind == "folded":
            return fold(self.samples(), sizes)
        if self.kind == "toeplitz":
            return toeplitz_tensor(self.samples(), sizes)
        return hankel_tensor(self.samples(), sizes)

    def to_train(self) -> TTTrain:
        if self.kind == "folded":
            return folded_sinusoid_tt(self.omega, self.phi, (2,) * self.D)
        y = self.samples()
        # State recursion [y_t, y_{t+1}] M = [y_{t+1}, y_{t+2}].
        M = np.array([[0.0, -1.0], [1.0, 2.0 * np.cos(self.omega)]])
        powers = np.stack([np.eye(2), M], axis=1)
        v0 = np.array([y[0], y[1]])
        if self.kind == "toeplitz":
            powers_first = powers[:, ::-1]
        else:
            powers_first = powers
        first = np.einsum("a,aib->ib", v0, powers_first)[None]
        middle = powers_first
        last = powers[:, :, 0][..., None]
        cores = [first] + [middle] * (self.D - 2) + [last]
        return TTTrain(tuple(cores))


def sinusoid_tt(kind: str, omega: float, phi: float, D: int) -> TTTrain:
    """
    Closed-form rank-2 train of sin(omega t + phi) with 2 x ... x 2 modes.
    Args:
        kind (str): "folded", "toeplitz" or "hankel" ordering of the samples.
        omega (float): Angular frequency per sample.
        phi (float): Phase.
        D (int): Number of modes, at least 2. Folding holds 2^D samples, the
            Toeplitz and Hankel forms hold D + 1.
    Returns:
        TTTrain: The sinusoid tensor without any SVD.
    """
    return SinusoidTT(kind, omega, phi, D).to_train()
