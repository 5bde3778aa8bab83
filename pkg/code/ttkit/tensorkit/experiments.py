# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals
"""
Desk-scale experiments:

- single-channel separation of damped sinusoids by fitting a sum of rank-2
  trains to a folded or Toeplitz tensorization of the mixture;
- blind identification of a 2 x R mixing matrix from CP decompositions of
  stacked GCF derivative tensors, with the cumulant tensor as baseline.

Both score estimates with the squared angular error in dB.
"""

from dataclasses import dataclass
from dataclasses import field
from typing import Literal
from typing import Sequence

import numpy as np
import scipy.linalg
from prefect.logging import get_logger

from tensorkit.decompositions import cp_als
from tensorkit.decompositions import greedy_match
from tensorkit.gcf import cumulant
from tensorkit.gcf import derivative_stack
from tensorkit.tensorize import fold
from tensorkit.tensorize import toeplitz_tensor
from tensorkit.tensorize import unfold
from tensorkit.tt_core import TTTrain
from tensorkit.tt_core import add
from tensorkit.tt_core import contract_full
from tensorkit.tt_core import norm
from tensorkit.tt_core import scale
from tensorkit.tt_core import tt_round
from tensorkit.tt_core import tt_svd

logger = get_logger("tensorkit.experiments")

# Angles below this are scored at the ceiling.
MIN_ANGLE = 1e-16
SEPARATION_ITERS = 200
SEPARATION_TOL = 1e-10
SOURCE_RANK = 2
LONG_FREQUENCIES = (10.0, 12.0, 14.0)
SHORT_FREQUENCIES = (10.0, 11.0, 12.0)
SHORT_SAMPLING_RATE = 300.0
SHORT_TOEPLITZ_SIZES = (16, 8, 8, 8, 8, 8, 16)
COLLINEARITY_RANGE = 0.99
MIN_STACK_ORDER = 3
MAX_STACK_ORDER = 8


def sae_db(h, h_hat) -> float:
    """-20 log10 of the angle between h and h_hat; -inf for a zero vector."""
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    h_hat = np.asarray(h_hat, dtype=np.float64).reshape(-1)
    denom = float(np.linalg.norm(h) * np.linalg.norm(h_hat))
    if denom == 0.0:
        return float("-inf")
    cosine = np.clip(abs(float(h @ h_hat)) / denom, -1.0, 1.0)
    return float(-20.0 * np.log10(max(np.arccos(cosine), MIN_ANGLE)))


def matched_sae(truth: np.ndarray, estimates: np.ndarray) -> list:
    """
    SAE of each true column against its greedily matched estimate (largest
    absolute correlation first). Unmatched truths score -inf.
    """
    T = np.asarray(truth, dtype=np.float64)
    E = np.asarray(estimates, dtype=np.float64)
    tn = np.linalg.norm(T, axis=0)
    en = np.linalg.norm(E, axis=0)
    C = np.abs(T.T @ E) / np.maximum(np.outer(tn, en), 1e-300)
    scores = [float("-inf")] * T.shape[1]
    for i, j in greedy_match(C):
        scores[i] = sae_db(T[:, i], E[:, j])
    return scores


def msae_db(scores: Sequence[float]) -> float:
    scores = list(scores)
    if not scores or any(np.isneginf(s) for s in scores):
        return float("-inf")
    return float(np.mean(scores))


def add_noise(signal: np.ndarray, snr_db: float | None, rng: np.random.Generator) -> np.ndarray:
    """White Gaussian noise scaled to the exact signal-to-noise ratio in dB."""
    if snr_db is None or np.isinf(snr_db):
        return signal.copy()
    noise = rng.standard_normal(signal.shape)
    noise *= np.linalg.norm(signal) / np.linalg.norm(noise) * 10.0 ** (-snr_db / 20.0)
    return signal + noise


# ---------------------------------------------------------------------------
# Damped sinusoid separation


@dataclass
class SeparationResult:
    sae: list
    msae: float
    sources: np.ndarray
    estimates: np.ndarray
    mixture: np.ndarray
    fit_history: list = field(default_factory=list)

    def rows(self) -> list:
        return [{"source": p + 1, "sae_db": s} for p, s in enumerate(self.sae)] + [
            {"source": "mean", "sae_db": self.msae}
        ]


def damped_sinusoids(P: int, length: int, variant: Literal["long", "short"] = "long",
                     frequencies: Sequence[float] | None = None) -> np.ndarray:
    """
    P x L matrix of weighted sources. The long variant decays as exp(-5t/(Lp))
    with phases (p-1) pi / P, sampling rate 10 f_P and equal contributions; the
    short variant decays as exp(-pt/30) with phases p pi / 7, 300 Hz sampling and
    weights a_p = p.
    """
    if P < 1 or length < 2:
        raise ValueError(f"need P >= 1 sources and length >= 2, got P={P} length={length}")
    t = np.arange(length, dtype=np.float64)
    sources = []
    if variant == "long":
        freqs = list(frequencies or LONG_FREQUENCIES)[:P]
        if len(freqs) < P:
            raise ValueError(f"{len(freqs)} frequencies given for {P} sources")
        fs = 10.0 * freqs[-1]
        for p in range(1, P + 1):
            x = np.exp(-5.0 * t / (length * p)) * np.sin(2 * np.pi * freqs[p - 1] / fs * t + (p - 1) * np.pi / P)
            sources.append(x / np.linalg.norm(x))
    elif variant == "short":
        freqs = list(frequencies or SHORT_FREQUENCIES)[:P]
        if len(freqs) < P:
            raise ValueError(f"{len(freqs)} frequencies given for {P} sources")
        for p in range(1, P + 1):
            x = np.exp(-p * t / 30.0) * np.sin(2 * np.pi * freqs[p - 1] / SHORT_SAMPLING_RATE * t + p * np.pi / 7)
            sources.append(p * x)
    else:
        raise ValueError(f"unknown mixture variant {variant!r}")
    return np.stack(sources)


def folded_sizes(P: int, d: int) -> list:
    """2P x 2 x ... x 2 x 2P folding of a signal of length 2^d P^2."""
    if d < 2:
        raise ValueError(f"folding needs d >= 2, got {d}")
    return [2 * P] + [2] * (d - 2) + [2 * P]


class _Tensorizer:
    """Maps signals to trains and estimated trains back to signals."""

    def __init__(self, kind: str, length: int, sizes: Sequence[int]):
        self.kind = kind
        self.sizes = [int(s) for s in sizes]
        if kind == "folded":
            if int(np.prod(self.sizes)) != length:
                raise ValueError(f"fold sizes {self.sizes} do not hold {length} samples")
            self.qtt_sizes = self.sizes
        elif kind == "toeplitz":
            if any(s & (s - 1) for s in self.sizes):
                raise ValueError(f"Toeplitz sizes {self.sizes} must be powers of two")
            self.qtt_sizes = [2] * int(sum(np.log2(s) for s in self.sizes))
            index = toeplitz_tensor(np.arange(length, dtype=np.float64), self.sizes)
            self.index = index.astype(np.int64).reshape(-1, order="F")
            self.counts = np.bincount(self.index, minlength=length)
            self.length = length
        else:
            raise ValueError(f"unknown tensorization {kind!r}")

    def to_train(self, y: np.ndarray) -> TTTrain:
        if self.kind == "folded":
            return tt_svd(fold(y, self.sizes))
        T = toeplitz_tensor(y, self.sizes)
        return tt_svd(T.reshape(self.qtt_sizes, order="F"))

    def to_signal(self, x: TTTrain) -> np.ndarray:
        dense = contract_full(x)
        if self.kind == "folded":
            return unfold(dense)
        flat = dense.reshape(-1, order="F")
        return np.bincount(self.index, weights=flat, minlength=self.length) / self.counts


def fit_sum_of_trains(Y: TTTrain, P: int, rank: int = SOURCE_RANK, iters: int = SEPARATION_ITERS,
                      tol: float = SEPARATION_TOL) -> tuple:
    """
    Approximate Y by X_1 + ... + X_P with rank-limited trains, refitting each
    X_p to the residual Y - sum_{s != p} X_s in turn.
    """
    y_norm = max(norm(Y), 1e-300)
    terms = []
    residual = Y
    for _ in range(P):
        X = tt_round(residual, max_rank=rank)
        terms.append(X)
        residual = tt_round(add(residual, scale(X, -1.0)), tol=1e-14)
    history = []
    for it in range(iters):
        for p in range(P):
            others = [terms[s] for s in range(P) if s != p]
            target = Y
            for X in others:
                target = add(target, scale(X, -1.0))
            terms[p] = tt_round(target, max_rank=rank)
        approx = terms[0]
        for X in terms[1:]:
            approx = add(approx, X)
        fit = norm(add(Y, scale(approx, -1.0))) / y_norm
        history.append(fit)
        logger.debug("separation iteration %d: relative residual %.6e", it + 1, fit)
        if it > 0 and abs(history[-2] - fit) <= tol * max(fit, 1e-300):
            break
    return terms, history


def separate_sinusoids(
    P: int = 3,
    d: int = 8,
    snr_db: float | None = 30.0,
    seed: int = 0,
    variant: Literal["long", "short"] = "long",
    tensorization: Literal["folded", "toeplitz"] = "folded",
    toeplitz_sizes: Sequence[int] = SHORT_TOEPLITZ_SIZES,
    length: int | None = None,
    iters: int = SEPARATION_ITERS,
    tol: float = SEPARATION_TOL,
) -> SeparationResult:
    """
    Mix P damped sinusoids, tensorize the noisy mixture and separate it into P
    rank-2 trains. Folding uses length 2^d P^2; the Toeplitz path uses the
    generator length implied by ``toeplitz_sizes`` unless ``length`` is given.
    """
    rng = np.random.default_rng(seed)
    if tensorization == "folded":
        sizes = folded_sizes(P, d)
        L = int(np.prod(sizes)) if length is None else int(length)
    else:
        sizes = [int(s) for s in toeplitz_sizes]
        L = sum(sizes) - len(sizes) + 1 if length is None else int(length)
    sources = damped_sinusoids(P, L, variant)
    y = add_noise(sources.sum(axis=0), snr_db, rng)
    tensorizer = _Tensorizer(tensorization, L, sizes)
    Y = tensorizer.to_train(y)
    terms, history = fit_sum_of_trains(Y, P, SOURCE_RANK, iters, tol)
    estimates = np.stack([tensorizer.to_signal(X) for X in terms])
    sae = matched_sae(sources.T, estimates.T)
    result = SeparationResult(sae, msae_db(sae), sources, estimates, y, history)
    logger.info("separation P=%d L=%d %s: MSAE %.2f dB", P, L, tensorization, result.msae)
    return result


# ---------------------------------------------------------------------------
# Blind identification


@dataclass
class IdentificationResult:
    order: int
    sae: list
    msae: float
    msae_cumulant: float
    fit: float
    fit_cumulant: float
    mixing: np.ndarray
    estimate: np.ndarray

    def row(self, seed: int) -> dict:
        return {"seed": seed, "order": self.order, "msae_db": self.msae,
                "msae_cumulant_db": self.msae_cumulant, "fit": self.fit,
                "fit_cumulant": self.fit_cumulant}


def binary_mixture(R: int, samples: int | None = None, mixtures: int = 2, snr_db: float | None = 20.0,
                   seed: int = 0, balanced: bool = False) -> tuple:
    """
    Mixtures X = H S + noise of R binary (+-1) sources, T = 100 * 2^R samples by
    default. With ``balanced`` every one of the 2^R sign patterns appears T / 2^R
    times in shuffled order, so the empirical source distribution factorises
    exactly. Returns (X, H, S).
    """
    if R < 1 or mixtures < 1:
        raise ValueError(f"need R >= 1 sources and at least one mixture, got R={R}")
    rng = np.random.default_rng(seed)
    T = 100 * 2**R if samples is None else int(samples)
    if balanced:
        if T % 2**R:
            raise ValueError(f"balanced sources need a multiple of {2**R} samples, got {T}")
        patterns = 1.0 - 2.0 * ((np.arange(2**R)[None, :] >> np.arange(R)[:, None]) & 1)
        S = np.tile(patterns, T // 2**R)[:, rng.permutation(T)]
    else:
        S = rng.choice([-1.0, 1.0], size=(R, T))
    H = rng.standard_normal((mixtures, R))
    X = add_noise(H @ S, snr_db, rng)
    return X, H, S


def processing_points(X: np.ndarray, rng: np.random.Generator) -> list:
    """
    The two leading left singular vectors of X and a unit point whose
    collinearity with the first one is uniform on [-0.99, 0.99].
    """
    U, _, _ = scipy.linalg.svd(X, full_matrices=False)
    u1 = U[:, 0]
    u2 = U[:, 1] if U.shape[1] > 1 else u1
    c = rng.uniform(-COLLINEARITY_RANGE, COLLINEARITY_RANGE)
    ortho = rng.standard_normal(X.shape[0])
    ortho -= (ortho @ u1) * u1
    if np.linalg.norm(ortho) < 1e-12:
        ortho = u2
    ortho /= np.linalg.norm(ortho)
    u3 = c * u1 + np.sqrt(1.0 - c**2) * ortho
    return [u1, u2, u3]


def identify_mixing(
    R: int = 4,
    order: int = 5,
    snr_db: float | None = 20.0,
    seed: int = 0,
    samples: int | None = None,
    subtract_mean: bool = True,
    cp_iters: int = 500,
    balanced: bool = False,
) -> IdentificationResult:
    """
    Estimate H from the CP factor of the stack of three order-(order-1)
    derivative tensors (an order-``order`` tensor), and from the
    order-(order-1) cumulant as a baseline. Data are scaled to unit RMS first.
    ``balanced`` draws sources whose sign patterns occur equally often.
    """
    if not MIN_STACK_ORDER <= order <= MAX_STACK_ORDER:
        raise ValueError(f"stacked tensor order must lie in {MIN_STACK_ORDER}..{MAX_STACK_ORDER}, got {order}")
    N = order - 1
    X, H, _ = binary_mixture(R, samples, 2, snr_db, seed, balanced)
    rng = np.random.default_rng(seed + 1)
    X = X / np.sqrt(np.mean(X**2))
    points = processing_points(X, rng)
    stack = derivative_stack(X, points, N, subtract_mean=subtract_mean)
    cp = cp_als(stack, R, iters=cp_iters, symmetric=True, symmetric_modes=list(range(N)), seed=seed)
    sae = matched_sae(H, cp.factors[0])
    centred = X - X.mean(axis=1, keepdims=True)
    cp_cum = cp_als(cumulant(centred, N), R, iters=cp_iters, symmetric=True, seed=seed)
    sae_cum = matched_sae(H, cp_cum.factors[0])
    result = IdentificationResult(order, sae, msae_db(sae), msae_db(sae_cum), cp.fit, cp_cum.fit,
                                  H, cp.factors[0])
    logger.info("identification R=%d order=%d seed=%d: MSAE %.2f dB (cumulant %.2f dB)",
                R, order, seed, result.msae, result.msae_cumulant)
    return result
