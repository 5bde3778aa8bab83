# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals,too-many-instance-attributes
"""
Supervised learning with tensor-valued inputs or outputs.

- Multilinear Tucker regression (MTR): Y ~ X x_1 W_1 ... x_N W_N, samples last.
- HOLRR and its kernel version KHOLRR: low multilinear rank ridge regression
  from vectors to tensors, samples first.
- HOPLS and N-way PLS: sums of Tucker blocks sharing latent vectors.
- LS-STM: least-squares support tensor machine with a rank-1 weight tensor.
- Tensor kernels (linear, Gaussian RBF, chordal distance).

Every model serialises to a JSON document with base64-embedded arrays.
"""

from dataclasses import dataclass
from dataclasses import field
from typing import Literal
from typing import Sequence

import numpy as np
import scipy.linalg
import tensorly as tl
from prefect.logging import get_logger

from tensorkit.decompositions import tucker_hooi
from tensorkit.tt_io import decode_array
from tensorkit.tt_io import encode_array

logger = get_logger("tensorkit.regression")

MTR_MAX_ITERS = 100
MTR_TOL = 1e-12
HOPLS_PINV_RTOL = 1e-12
SINGULAR_TOL = 1e-12
NPLS_POWER_ITERS = 200
NPLS_TOL = 1e-14
STM_MAX_ITERS = 50
STM_TOL = 1e-12
SUBSPACE_TOL = 1e-10

KERNEL_KINDS = ("linear", "gaussian_rbf", "chordal")


def _dense(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _leading_vectors(M: np.ndarray, r: int) -> np.ndarray:
    U, _, _ = scipy.linalg.svd(M, full_matrices=False)
    return U[:, :r]


# ---------------------------------------------------------------------------
# Multilinear Tucker regression


@dataclass
class MtrModel:
    weights: list
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"model": "mtr", "weights": [encode_array(W) for W in self.weights],
                "history": [float(v) for v in self.history]}


def _mtr_map(weights: list, X: np.ndarray, skip: int | None = None) -> np.ndarray:
    modes = [n for n in range(len(weights)) if n != skip]
    if not modes:
        return X
    return tl.tenalg.multi_mode_dot(X, [weights[n] for n in modes], modes=modes)


def mtr_fit(X, Y, iters: int = MTR_MAX_ITERS, tol: float = MTR_TOL, seed: int = 0) -> MtrModel:
    """
    Fit the weight matrices by alternating least squares. X has shape
    (I_1, ..., I_N, M) and Y has shape (J_1, ..., J_N, M); the last mode indexes
    replicated observations.
    """
    X, Y = _dense(X), _dense(Y)
    if X.ndim != Y.ndim or X.ndim < 2:
        raise ValueError(f"X {X.shape} and Y {Y.shape} need the same order (modes plus samples)")
    if X.shape[-1] != Y.shape[-1]:
        raise ValueError(f"sample counts differ: {X.shape[-1]} vs {Y.shape[-1]}")
    N = X.ndim - 1
    rng = np.random.default_rng(seed)
    weights = [
        np.eye(Y.shape[n], X.shape[n]) if Y.shape[n] == X.shape[n]
        else rng.standard_normal((Y.shape[n], X.shape[n])) / np.sqrt(X.shape[n])
        for n in range(N)
    ]
    y_norm = max(float(np.linalg.norm(Y)), 1e-300)
    history = []
    for it in range(iters):
        for n in range(N):
            Z = tl.unfold(_mtr_map(weights, X, skip=n), n)
            weights[n] = scipy.linalg.lstsq(Z.T, tl.unfold(Y, n).T)[0].T
        residual = float(np.linalg.norm(Y - _mtr_map(weights, X)))
        history.append(residual)
        logger.debug("mtr iteration %d: residual %.3e", it + 1, residual)
        if residual <= tol * y_norm or (it > 0 and history[-2] - residual <= tol * y_norm):
            break
    return MtrModel(weights, history)


def mtr_predict(model: MtrModel, X) -> np.ndarray:
    """Apply the model to X of shape (I_1, ..., I_N) or (I_1, ..., I_N, M)."""
    X = _dense(X)
    N = len(model.weights)
    if X.ndim == N:
        return _mtr_map(model.weights, X[..., None])[..., 0]
    return _mtr_map(model.weights, X)


# ---------------------------------------------------------------------------
# HOLRR / KHOLRR


@dataclass
class KernelConfig:
    kind: Literal["linear", "gaussian_rbf", "chordal"] = "linear"
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind != "linear" and not self.beta > 0:
            raise ValueError(f"kernel width beta must be positive, got {self.beta}")


@dataclass
class HolrrModel:
    """
    Core G and factors U^(0)..U^(N). For KHOLRR the first factor lives in
    sample space (M x R_0) and predictions take kernel vectors.
    """

    core: np.ndarray
    factors: list
    gamma: float
    ranks: list
    kernel: KernelConfig | None = None
    train_inputs: np.ndarray | None = None

    def to_dict(self) -> dict:
        doc = {
            "model": "kholrr" if self.kernel is not None else "holrr",
            "core": encode_array(self.core),
            "factors": [encode_array(U) for U in self.factors],
            "gamma": float(self.gamma),
            "ranks": [int(r) for r in self.ranks],
        }
        if self.kernel is not None:
            doc["kernel"] = {"kind": self.kernel.kind, "beta": float(self.kernel.beta)}
        if self.train_inputs is not None:
            doc["train_inputs"] = encode_array(self.train_inputs)
        return doc


def _check_ranks(ranks: Sequence[int], sizes: Sequence[int]) -> list:
    ranks = [int(r) for r in ranks]
    if len(ranks) != len(sizes):
        raise ValueError(f"expected {len(sizes)} ranks, got {len(ranks)}")
    if any(r < 1 or r > s for r, s in zip(ranks, sizes)):
        raise ValueError(f"ranks {ranks} must lie between 1 and {list(sizes)}")
    return ranks


def _output_factors(Y: np.ndarray, ranks: list) -> list:
    return [_leading_vectors(tl.unfold(Y, n), ranks[n]) for n in range(1, Y.ndim)]


def holrr_fit(X, Y, ranks: Sequence[int], gamma: float = 0.0) -> HolrrModel:
    """
    Higher-order low-rank ridge regression from rows of X (M x I_0) to the
    slices of Y (M x J_1 x ... x J_N). ``ranks`` is (R_0, R_1, ..., R_N).
    """
    X, Y = _dense(X), _dense(Y)
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError(f"X must be M x I_0 with M = {Y.shape[0]}, got {X.shape}")
    if gamma < 0:
        raise ValueError(f"ridge parameter must be non-negative, got {gamma}")
    ranks = _check_ranks(ranks, (X.shape[1],) + Y.shape[1:])
    B = X.T @ X + gamma * np.eye(X.shape[1])
    evals = scipy.linalg.eigvalsh(B)
    if evals[0] <= SINGULAR_TOL * max(evals[-1], 1e-300):
        raise ValueError("X^T X + gamma I is singular; use a ridge parameter gamma > 0")
    Y1 = tl.unfold(Y, 0)
    XtY = X.T @ Y1
    # Generalised symmetric form of the eigenproblem for (X^T X + gamma I)^{-1} X^T Y Y^T X.
    _, vecs = scipy.linalg.eigh(XtY @ XtY.T, B)
    U0 = np.linalg.qr(vecs[:, ::-1][:, : ranks[0]])[0]
    factors = [U0] + _output_factors(Y, ranks)
    Mmap = scipy.linalg.solve(U0.T @ B @ U0, U0.T @ X.T, assume_a="pos")
    core = tl.tenalg.multi_mode_dot(Y, [Mmap] + [U.T for U in factors[1:]])
    logger.info("holrr fitted with ranks %s and gamma %.3e", ranks, gamma)
    return HolrrModel(core, factors, float(gamma), ranks)


def _expand(core: np.ndarray, first: np.ndarray, factors: list) -> np.ndarray:
    return tl.tenalg.multi_mode_dot(core, [first] + factors)


def holrr_predict(model: HolrrModel, x) -> np.ndarray:
    """Prediction G x_1 x^T U^(0) x_2 U^(1) ... for one input or a batch of rows."""
    x = _dense(x)
    single = x.ndim == 1
    rows = x.reshape(1, -1) if single else x
    out = _expand(model.core, rows @ model.factors[0], model.factors[1:])
    return out[0] if single else out


def _kernel_eig(K: np.ndarray, gamma: float) -> tuple:
    lam, V = scipy.linalg.eigh(0.5 * (K + K.T))
    lam = np.clip(lam, 0.0, None)
    keep = lam > SINGULAR_TOL * max(lam[-1], 1e-300)
    return lam, V, keep


def kholrr_fit(K, Y, ranks: Sequence[int], gamma: float = 0.0, kernel: KernelConfig | None = None,
               train_inputs=None) -> HolrrModel:
    """
    Kernel HOLRR from a Gram matrix K (M x M). The first factor holds the
    coefficients of the M training kernels.
    """
    K, Y = _dense(K), _dense(Y)
    M = Y.shape[0]
    if K.shape != (M, M):
        raise ValueError(f"Gram matrix must be {M} x {M}, got {K.shape}")
    if gamma < 0:
        raise ValueError(f"ridge parameter must be non-negative, got {gamma}")
    ranks = _check_ranks(ranks, (M,) + Y.shape[1:])
    lam, V, keep = _kernel_eig(K, gamma)
    if gamma == 0.0 and not np.all(keep):
        raise ValueError("Gram matrix is singular; use a ridge parameter gamma > 0")
    # (K + gamma I)^{-1} Y Y^T K is similar to T S T with T = K^{1/2} (K + gamma I)^{-1/2}.
    t = np.where(keep, np.sqrt(lam / np.where(keep, lam + gamma, 1.0)), 0.0)
    q_inv = np.where(keep, 1.0 / np.sqrt(np.where(keep, lam * (lam + gamma), 1.0)), 0.0)
    Y1 = tl.unfold(Y, 0)
    TV = V * t
    S = TV.T @ Y1
    C = S @ S.T
    _, cvecs = scipy.linalg.eigh(0.5 * (C + C.T))
    C_top = V @ cvecs[:, ::-1][:, : ranks[0]]
    A = (V * q_inv) @ (V.T @ C_top)
    A = np.linalg.qr(A)[0]
    KA = K @ A
    G0 = KA.T @ (K + gamma * np.eye(M)) @ A
    Mmap = scipy.linalg.lstsq(0.5 * (G0 + G0.T), KA.T)[0]
    factors = [A] + _output_factors(Y, ranks)
    core = tl.tenalg.multi_mode_dot(Y, [Mmap] + [U.T for U in factors[1:]])
    logger.info("kholrr fitted with ranks %s and gamma %.3e", ranks, gamma)
    stored = None if train_inputs is None else _dense(train_inputs)
    return HolrrModel(core, factors, float(gamma), ranks, kernel, stored)


def kholrr_predict(model: HolrrModel, k_star) -> np.ndarray:
    """Prediction from kernel values k(x, x_m) against the M training inputs."""
    return holrr_predict(model, k_star)


# ---------------------------------------------------------------------------
# Kernels


def _mode_projectors(X: np.ndarray) -> list:
    projectors = []
    for n in range(X.ndim):
        _, s, Vt = scipy.linalg.svd(tl.unfold(X, n), full_matrices=False)
        r = int(np.sum(s > SUBSPACE_TOL * max(s[0], 1e-300))) if s.size else 0
        V = Vt[:r].T
        projectors.append(V @ V.T)
    return projectors


def kernel_matrix(tensors: Sequence, cfg: KernelConfig, others: Sequence | None = None) -> np.ndarray:
    """
    Kernel values between ``tensors`` (rows) and ``others`` (columns, defaults
    to ``tensors``). The chordal kernel compares the right singular subspaces of
    every mode unfolding.
    """
    A = [_dense(x) for x in tensors]
    B = A if others is None else [_dense(x) for x in others]
    if not A or not B:
        raise ValueError("kernel_matrix needs at least one tensor on each side")
    if cfg.kind == "linear":
        return np.stack([a.reshape(-1) for a in A]) @ np.stack([b.reshape(-1) for b in B]).T
    if cfg.kind == "gaussian_rbf":
        FA = np.stack([a.reshape(-1) for a in A])
        FB = np.stack([b.reshape(-1) for b in B])
        d2 = np.sum(FA**2, axis=1)[:, None] + np.sum(FB**2, axis=1)[None, :] - 2.0 * FA @ FB.T
        return np.exp(-np.clip(d2, 0.0, None) / (2.0 * cfg.beta**2))
    PA = [_mode_projectors(a) for a in A]
    PB = PA if others is None else [_mode_projectors(b) for b in B]
    out = np.empty((len(A), len(B)))
    for i, pa in enumerate(PA):
        for j, pb in enumerate(PB):
            d2 = sum(float(np.sum((p - q) ** 2)) for p, q in zip(pa, pb))
            out[i, j] = np.exp(-d2 / (2.0 * cfg.beta**2))
    return out


# ---------------------------------------------------------------------------
# HOPLS / N-way PLS


@dataclass
class HoplsModel:
    """
    Per component r: latent vector t_r (unit norm), loadings P_r^(n) and
    Q_r^(m), cores G_x,r and G_y,r. ``Wx`` columns map centred unfolded inputs
    to latent scores and ``Wy`` rows map scores back to unfolded outputs.
    """

    latents: list
    x_loadings: list
    y_loadings: list
    x_cores: list
    y_cores: list
    x_mean: np.ndarray
    y_mean: np.ndarray
    Wx: np.ndarray
    Wy: np.ndarray
    x_norms: list = field(default_factory=list)
    y_norms: list = field(default_factory=list)

    @property
    def components(self) -> int:
        return len(self.latents)

    def to_dict(self) -> dict:
        return {
            "model": "hopls",
            "latents": [encode_array(t) for t in self.latents],
            "x_loadings": [[encode_array(P) for P in Ps] for Ps in self.x_loadings],
            "y_loadings": [[encode_array(Q) for Q in Qs] for Qs in self.y_loadings],
            "x_cores": [encode_array(G) for G in self.x_cores],
            "y_cores": [encode_array(D) for D in self.y_cores],
            "x_mean": encode_array(self.x_mean),
            "y_mean": encode_array(self.y_mean),
            "Wx": encode_array(self.Wx),
            "Wy": encode_array(self.Wy),
        }


def _project(E: np.ndarray, loadings: list) -> np.ndarray:
    if not loadings:
        return E
    return tl.tenalg.multi_mode_dot(E, [P.T for P in loadings], modes=list(range(1, E.ndim)))


def _reconstruct(core: np.ndarray, t: np.ndarray, loadings: list) -> np.ndarray:
    return tl.tenalg.multi_mode_dot(core, [t[:, None]] + list(loadings))


def _kron(mats: list) -> np.ndarray:
    if not mats:
        return np.ones((1, 1))
    return tl.tenalg.kronecker(mats)


def _rank_one_loadings(C: np.ndarray, n_x: int) -> list:
    """Best rank-1 approximation of C by alternating power iterations."""
    vecs = [_leading_vectors(tl.unfold(C, n), 1)[:, 0] for n in range(C.ndim)]
    previous = 0.0
    for _ in range(NPLS_POWER_ITERS):
        for n in range(C.ndim):
            others = [m for m in range(C.ndim) if m != n]
            v = tl.tenalg.multi_mode_dot(C, [vecs[m] for m in others], modes=others)
            vecs[n] = v / max(float(np.linalg.norm(v)), 1e-300)
        value = float(tl.tenalg.multi_mode_dot(C, vecs))
        if abs(abs(value) - previous) <= NPLS_TOL * max(abs(value), 1.0):
            break
        previous = abs(value)
    mats = [v[:, None] for v in vecs]
    return [mats[:n_x], mats[n_x:]]


def _pls(X, Y, R: int, loading_fn, center: bool, name: str) -> HoplsModel:
    X, Y = _dense(X), _dense(Y)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"sample mode sizes differ: {X.shape[0]} vs {Y.shape[0]}")
    if R < 0:
        raise ValueError(f"number of components must be non-negative, got {R}")
    x_mean = X.mean(axis=0) if center else np.zeros(X.shape[1:])
    y_mean = Y.mean(axis=0) if center else np.zeros(Y.shape[1:])
    E, F = X - x_mean, Y - y_mean
    n_x = X.ndim - 1
    model = HoplsModel([], [], [], [], [], x_mean, y_mean,
                       np.zeros((int(np.prod(X.shape[1:])), 0)),
                       np.zeros((0, int(np.prod(Y.shape[1:])))))
    model.x_norms.append(float(np.linalg.norm(E)))
    model.y_norms.append(float(np.linalg.norm(F)))
    w_cols, wy_rows = [], []
    for r in range(R):
        C = np.tensordot(E, F, axes=(0, 0))
        P, Q = loading_fn(C, n_x)
        U, _, _ = scipy.linalg.svd(tl.unfold(_project(E, P), 0), full_matrices=False)
        t = U[:, 0]
        if t[np.argmax(np.abs(t))] < 0:
            t = -t
        G = _project(E, P)
        G = np.tensordot(t, G, axes=(0, 0))[None]
        D = np.tensordot(t, _project(F, Q), axes=(0, 0))[None]
        E = E - _reconstruct(G, t, P)
        F = F - _reconstruct(D, t, Q)
        model.latents.append(t)
        model.x_loadings.append(P)
        model.y_loadings.append(Q)
        model.x_cores.append(G)
        model.y_cores.append(D)
        model.x_norms.append(float(np.linalg.norm(E)))
        model.y_norms.append(float(np.linalg.norm(F)))
        w_cols.append(_kron(P) @ scipy.linalg.pinv(tl.unfold(G, 0), rtol=HOPLS_PINV_RTOL))
        wy_rows.append(tl.unfold(D, 0) @ _kron(Q).T)
        logger.debug("%s component %d: |E| %.3e |F| %.3e", name, r + 1,
                     model.x_norms[-1], model.y_norms[-1])
    if R:
        model.Wx = np.concatenate(w_cols, axis=1)
        model.Wy = np.concatenate(wy_rows, axis=0)
    logger.info("%s fitted %d components, residual |F| %.3e", name, R, model.y_norms[-1])
    return model


def hopls_fit(X, Y, R: int, x_ranks: Sequence[int], y_ranks: Sequence[int],
              center: bool = True) -> HoplsModel:
    """
    HOPLS with R components; ``x_ranks`` are the loading ranks L_n of the
    non-sample modes of X and ``y_ranks`` the ranks K_m for Y.
    """
    X, Y = _dense(X), _dense(Y)
    x_ranks = _check_ranks(x_ranks, X.shape[1:])
    y_ranks = _check_ranks(y_ranks, Y.shape[1:])

    def loadings(C, n_x):
        factors = tucker_hooi(C, x_ranks + y_ranks).factors
        return [factors[:n_x], factors[n_x:]]

    return _pls(X, Y, R, loadings, center, "hopls")


def npls_fit(X, Y, R: int, center: bool = True) -> HoplsModel:
    """N-way PLS: HOPLS with rank-1 loadings found by alternating power iterations."""
    return _pls(X, Y, R, _rank_one_loadings, center, "npls")


def hopls_predict(model: HoplsModel, X) -> np.ndarray:
    """
    Predict outputs by extracting each latent score with its Wx column and
    deflating the input in turn, then summing the Y blocks.
    """
    X = _dense(X)
    single = X.ndim == model.x_mean.ndim
    E = (X[None] if single else X) - model.x_mean
    out = np.zeros((E.shape[0],) + model.y_mean.shape)
    for r in range(model.components):
        P, Q = model.x_loadings[r], model.y_loadings[r]
        t = tl.unfold(E, 0) @ model.Wx[:, r]
        E = E - _reconstruct(model.x_cores[r], t, P)
        out = out + _reconstruct(model.y_cores[r], t, Q)
    out = out + model.y_mean
    return out[0] if single else out


# ---------------------------------------------------------------------------
# LS-STM


@dataclass
class LsStmModel:
    weights: list
    bias: float
    gamma: float
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"model": "lsstm", "weights": [encode_array(w) for w in self.weights],
                "bias": float(self.bias), "gamma": float(self.gamma),
                "history": [float(v) for v in self.history]}


def _stm_scores(weights: list, X: np.ndarray) -> np.ndarray:
    return tl.tenalg.multi_mode_dot(X, weights, modes=list(range(1, X.ndim)))


def _stm_objective(weights: list, bias: float, X: np.ndarray, y: np.ndarray, gamma: float) -> float:
    e = y - _stm_scores(weights, X) - bias
    return 0.5 * float(np.prod([w @ w for w in weights])) + 0.5 * gamma * float(e @ e)


def lsstm_fit(X, y, gamma: float = 1.0, iters: int = STM_MAX_ITERS, tol: float = STM_TOL,
              seed: int = 0) -> LsStmModel:
    """
    Least-squares support tensor machine on samples X (M x I_1 x ... x I_N)
    with labels in {-1, +1}. Each mode update solves the LS-SVM KKT system of
    its subproblem exactly.
    """
    X, y = _dense(X), _dense(y).reshape(-1)
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} samples but {y.size} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    N = X.ndim - 1
    if np.unique(y).size == 1:
        logger.warning("all training labels equal %+d; fitting a bias-only classifier", int(y[0]))
        return LsStmModel([np.zeros(X.shape[n + 1]) for n in range(N)], float(y[0]), float(gamma))
    rng = np.random.default_rng(seed)
    weights = []
    for n in range(N):
        w = rng.standard_normal(X.shape[n + 1])
        weights.append(w / np.linalg.norm(w))
    M = y.size
    bias = 0.0
    history = [_stm_objective(weights, bias, X, y, gamma)]
    for it in range(iters):
        for n in range(N):
            others = [m for m in range(N) if m != n]
            eta = float(np.prod([weights[m] @ weights[m] for m in others])) if others else 1.0
            if others:
                Z = tl.tenalg.multi_mode_dot(X, [weights[m] for m in others], modes=[m + 1 for m in others])
            else:
                Z = X
            Z = Z.reshape(M, -1)
            kkt = np.zeros((M + 1, M + 1))
            kkt[0, 1:] = 1.0
            kkt[1:, 0] = 1.0
            kkt[1:, 1:] = Z @ Z.T / eta + np.eye(M) / gamma
            sol = scipy.linalg.solve(kkt, np.concatenate([[0.0], y]), assume_a="sym")
            bias = float(sol[0])
            weights[n] = Z.T @ sol[1:] / eta
        history.append(_stm_objective(weights, bias, X, y, gamma))
        logger.debug("lsstm iteration %d: objective %.6e", it + 1, history[-1])
        if abs(history[-2] - history[-1]) <= tol * max(abs(history[-1]), 1.0):
            break
    return LsStmModel(weights, bias, float(gamma), history)


def lsstm_decision(model: LsStmModel, X) -> np.ndarray:
    X = _dense(X)
    single = X.ndim == len(model.weights)
    scores = _stm_scores(model.weights, X[None] if single else X) + model.bias
    return scores[0] if single else scores


def lsstm_predict(model: LsStmModel, X) -> np.ndarray:
    """Labels sign(<X, w_1 o ... o w_N> + b) with ties sent to +1."""
    return np.where(lsstm_decision(model, X) >= 0.0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# Serialisation


def model_from_dict(doc: dict):
    kind = doc.get("model")
    if kind == "mtr":
        return MtrModel([decode_array(W) for W in doc["weights"]], list(doc.get("history", [])))
    if kind in ("holrr", "kholrr"):
        kernel = KernelConfig(**doc["kernel"]) if "kernel" in doc else None
        stored = decode_array(doc["train_inputs"]) if "train_inputs" in doc else None
        return HolrrModel(decode_array(doc["core"]), [decode_array(U) for U in doc["factors"]],
                          float(doc["gamma"]), list(doc["ranks"]), kernel, stored)
    if kind == "hopls":
        return HoplsModel(
            [decode_array(t) for t in doc["latents"]],
            [[decode_array(P) for P in Ps] for Ps in doc["x_loadings"]],
            [[decode_array(Q) for Q in Qs] for Qs in doc["y_loadings"]],
            [decode_array(G) for G in doc["x_cores"]],
            [decode_array(D) for D in doc["y_cores"]],
            decode_array(doc["x_mean"]),
            decode_array(doc["y_mean"]),
            decode_array(doc["Wx"]),
            decode_array(doc["Wy"]),
        )
    if kind == "lsstm":
        return LsStmModel([decode_array(w) for w in doc["weights"]], float(doc["bias"]),
                          float(doc["gamma"]), list(doc.get("history", [])))
    raise ValueError(f"unknown model kind {kind!r}")
