# pylint: disable=invalid-name,too-many-arguments,too-many-positional-arguments,too-many-locals,too-many-statements
"""
Optimisation on the manifold of trains with fixed TT ranks.

A tangent vector at x is stored as variation cores dX_n in the left-orthogonal
gauge: for n < N-1 the left unfolding of dX_n is orthogonal to that of the
left-orthogonal core U_n of x. The represented tensor is

    sum_n U_0 ... U_{n-1} dX_n V_{n+1} ... V_{N-1}

with V the right-orthogonal cores of x, and has TT ranks at most 2R.
"""

from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Callable
from typing import Literal

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.special
from prefect.logging import get_logger

from tensorkit.contractions import SolveReport
from tensorkit.tt_core import TTTrain
from tensorkit.tt_core import orthogonalize
from tensorkit.tt_core import tt_round_to_ranks
from tensorkit.tt_core import tt_svd
from tensorkit.tt_io import decode_array
from tensorkit.tt_io import encode_array

logger = get_logger("tensorkit.riemannian")

ARMIJO_C1 = 1e-4
ARMIJO_RHO = 0.5
MAX_BACKTRACKS = 50
CG_MAX_ITERS = 200
CG_TOL = 1e-8
EXM_INIT_NOISE = 1e-3
EXM_MAX_ITERS = 500
EXM_BATCH = 16
LOSSES = ("squared", "logistic")


@dataclass(frozen=True)
class Gauges:
    """Left-orthogonal cores U_n and right-orthogonal cores V_n of a base point."""

    point: TTTrain
    left: tuple
    right: tuple

    @classmethod
    def of(cls, x: TTTrain) -> "Gauges":
        N = x.order
        return cls(x, orthogonalize(x, N - 1).cores, orthogonalize(x, 0).cores)


@dataclass(frozen=True)
class TangentVector:
    base: Gauges
    deltas: tuple

    @property
    def point(self) -> TTTrain:
        return self.base.point

    def embed(self, alpha: float = 1.0, last_shift: np.ndarray | None = None) -> TTTrain:
        """Train of alpha * v; adding the base point's last left-gauge core gives x + alpha v."""
        U, V, dX = self.base.left, self.base.right, [alpha * d for d in self.deltas]
        N = len(dX)
        if last_shift is not None:
            dX[-1] = dX[-1] + last_shift
        if N == 1:
            return TTTrain((dX[0],))
        cores = [np.concatenate([dX[0], U[0]], axis=2)]
        for n in range(1, N - 1):
            r, I, rr = U[n].shape
            core = np.zeros((V[n].shape[0] + r, I, rr + V[n].shape[2]))
            core[: V[n].shape[0], :, : V[n].shape[2]] = V[n]
            core[V[n].shape[0]:, :, : V[n].shape[2]] = dX[n]
            core[V[n].shape[0]:, :, V[n].shape[2]:] = U[n]
            cores.append(core)
        cores.append(np.concatenate([V[N - 1], dX[N - 1]], axis=0))
        return TTTrain(tuple(cores))

    def to_train(self) -> TTTrain:
        """Embedding of the tangent vector as a train with ranks at most 2R."""
        return self.embed()

    def to_dense(self) -> np.ndarray:
        return self.to_train().to_dense()

    def inner(self, other: "TangentVector") -> float:
        return float(sum(np.vdot(a, b) for a, b in zip(self.deltas, other.deltas)))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def combine(self, a: float, other: "TangentVector | None" = None, b: float = 0.0) -> "TangentVector":
        """a * self + b * other at the same base point."""
        if other is None:
            return TangentVector(self.base, tuple(a * d for d in self.deltas))
        return TangentVector(self.base, tuple(a * d + b * e for d, e in zip(self.deltas, other.deltas)))


def _gauge_project(U: tuple, cores: list) -> tuple:
    out = []
    N = len(cores)
    for n, C in enumerate(cores):
        if n < N - 1:
            r, I, rr = C.shape
            Ul = U[n].reshape(r * I, -1)
            Cl = C.reshape(r * I, rr)
            C = (Cl - Ul @ (Ul.T @ Cl)).reshape(r, I, rr)
        out.append(C)
    return tuple(out)


def _as_train(z) -> TTTrain:
    if isinstance(z, TangentVector):
        return z.to_train()
    if isinstance(z, TTTrain):
        return z
    return tt_svd(np.asarray(z, dtype=np.float64))


def tangent_project(x, z) -> TangentVector:
    """
    Orthogonal projection of z (train, dense tensor or tangent vector at another
    point) onto the tangent space at x.
    """
    base = x if isinstance(x, Gauges) else Gauges.of(x)
    zt = _as_train(z)
    if zt.mode_sizes != base.point.mode_sizes:
        raise ValueError(f"mode sizes {zt.mode_sizes} differ from the base point {base.point.mode_sizes}")
    U, V = base.left, base.right
    N = zt.order
    Lz = [np.ones((1, 1))]
    for n in range(N - 1):
        Lz.append(np.einsum("ab,aic,bid->cd", Lz[n], U[n], zt.cores[n], optimize=True))
    Rz = [None] * (N - 1) + [np.ones((1, 1))]
    for n in range(N - 1, 0, -1):
        Rz[n - 1] = np.einsum("aib,cid,bd->ac", V[n], zt.cores[n], Rz[n], optimize=True)
    cores = [
        np.einsum("ab,bic,dc->aid", Lz[n], zt.cores[n], Rz[n], optimize=True) for n in range(N)
    ]
    return TangentVector(base, _gauge_project(U, cores))


def project_rank_one(x, factors: list, coeffs) -> TangentVector:
    """
    Projection of sum_m c_m a_m^(1) o ... o a_m^(N); ``factors[n]`` holds the
    vectors a_m^(n) as rows of an (M, I_n) array.
    """
    base = x if isinstance(x, Gauges) else Gauges.of(x)
    U, V = base.left, base.right
    c = np.asarray(coeffs, dtype=np.float64)
    N = len(factors)
    M = c.size
    left = [np.ones((M, 1))]
    for n in range(N - 1):
        left.append(np.einsum("ma,aib,mi->mb", left[n], U[n], factors[n], optimize=True))
    right = [None] * (N - 1) + [np.ones((M, 1))]
    for n in range(N - 1, 0, -1):
        right[n - 1] = np.einsum("aib,mi,mb->ma", V[n], factors[n], right[n], optimize=True)
    cores = [
        np.einsum("m,ma,mi,mb->aib", c, left[n], factors[n], right[n], optimize=True)
        for n in range(N)
    ]
    return TangentVector(base, _gauge_project(U, cores))


def retract(x: TTTrain, v: TangentVector, alpha: float) -> TTTrain:
    """Rounding of x + alpha v back to the ranks of x."""
    if alpha == 0.0 or not any(np.any(d) for d in v.deltas):
        return x
    if v.point.mode_sizes != x.mode_sizes:
        raise ValueError("tangent vector is attached to a point with different mode sizes")
    # Last core of x in the left-orthogonal gauge.
    last = v.base.left[-1]
    return tt_round_to_ranks(v.embed(alpha, last_shift=last), x.ranks)


def riemannian_cg(
    objective: Callable[[TTTrain], float],
    gradient: Callable[[TTTrain], object],
    x0: TTTrain,
    iters: int = CG_MAX_ITERS,
    tol: float = CG_TOL,
    c1: float = ARMIJO_C1,
    rho: float = ARMIJO_RHO,
    step0: float = 1.0,
) -> tuple:
    """
    Nonlinear CG with Polak-Ribiere+ directions, transport by re-projection and
    Armijo backtracking from ``step0``. ``gradient`` returns the Euclidean
    gradient as a train or dense tensor.
    """
    if not 0 < c1 < 1 or not 0 < rho < 1:
        raise ValueError(f"Armijo constants must lie in (0, 1), got c1={c1} rho={rho}")
    report = SolveReport("riemannian_cg")
    x = x0
    J = float(objective(x))
    report.objective.append(J)
    g_prev = eta_prev = None
    converged = False
    for it in range(iters):
        base = Gauges.of(x)
        g = tangent_project(base, gradient(x))
        g_norm = g.norm()
        report.residuals.append(g_norm)
        if g_norm <= tol:
            converged = True
            break
        eta = g.combine(-1.0)
        if g_prev is not None:
            g_old = tangent_project(base, g_prev)
            beta = max(0.0, g.inner(g.combine(1.0, g_old, -1.0)) / max(g_prev.inner(g_prev), 1e-300))
            eta = g.combine(-1.0, tangent_project(base, eta_prev), beta)
            if g.inner(eta) >= 0.0:
                eta = g.combine(-1.0)
        slope = g.inner(eta)
        alpha = step0
        for _ in range(MAX_BACKTRACKS):
            candidate = retract(x, eta, alpha)
            J_new = float(objective(candidate))
            if J_new <= J + c1 * alpha * slope:
                break
            alpha *= rho
        else:
            logger.warning("riemannian_cg: Armijo backtracking failed at iteration %d", it + 1)
            break
        x, J = candidate, J_new
        g_prev, eta_prev = g, eta
        report.objective.append(J)
        report.sweeps = it + 1
        logger.debug("riemannian_cg iteration %d: J %.6e |grad| %.3e step %.3e", it + 1, J, g_norm, alpha)
    report.final_residual = report.residuals[-1] if report.residuals else float("nan")
    logger.info("riemannian_cg finished after %d iterations, J %.3e", report.sweeps, J)
    return x, report.finish(x.ranks, converged)


def projector_splitting_step(Y0: tuple, A0, A1) -> tuple:
    """
    One KSL step of the projector-splitting integrator for Y0 = U S V^T:
    K-step in P_U, backward S-step in P_UV, then L-step in P_V. Returns (U, S, V).
    """
    U, S, V = (np.asarray(a, dtype=np.float64) for a in Y0)
    dA = np.asarray(A1, dtype=np.float64) - np.asarray(A0, dtype=np.float64)
    if dA.shape != (U.shape[0], V.shape[0]):
        raise ValueError(f"increment shape {dA.shape} does not match the factors")
    U1, S_hat = scipy.linalg.qr(U @ S + dA @ V, mode="economic")
    S_tilde = S_hat - U1.T @ dA @ V
    V1, S1t = scipy.linalg.qr(V @ S_tilde.T + dA.T @ U1, mode="economic")
    return U1, S1t.T, V1


# ---------------------------------------------------------------------------
# Exponential machines


@dataclass
class ExmModel:
    """Weight tensor W over interaction terms; every mode has size 2."""

    weights: TTTrain
    lam: float
    ranks: list
    loss: str = "squared"
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model": "exm",
            "cores": [encode_array(c) for c in self.weights.cores],
            "lam": float(self.lam),
            "ranks": [int(r) for r in self.ranks],
            "loss": self.loss,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExmModel":
        weights = TTTrain(tuple(decode_array(c) for c in doc["cores"]))
        return cls(weights, float(doc["lam"]), list(doc["ranks"]), doc.get("loss", "squared"))


def _features(X: np.ndarray) -> list:
    return [np.stack([np.ones(X.shape[0]), X[:, n]], axis=1) for n in range(X.shape[1])]


def _scores(W: TTTrain, X: np.ndarray) -> np.ndarray:
    v = np.ones((X.shape[0], 1))
    for core, F in zip(W.cores, _features(X)):
        v = np.einsum("ma,aib,mi->mb", v, core, F)
    return v[:, 0]


def _loss_terms(kind: str, scores: np.ndarray, y: np.ndarray) -> tuple:
    """Per-sample loss values and derivatives with respect to the score."""
    if kind == "squared":
        r = scores - y
        return 0.5 * r**2, r
    margin = y * scores
    return np.logaddexp(0.0, -margin), -y * scipy.special.expit(-margin)


def _penalized_loss(kind: str, W: TTTrain, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    values, _ = _loss_terms(kind, _scores(W, X), y)
    return float(np.mean(values)) + lam * _train_sq_norm(W)


def _train_sq_norm(W: TTTrain) -> float:
    G = np.ones((1, 1))
    for c in W.cores:
        G = np.einsum("ab,aic,bid->cd", G, c, c)
    return float(G[0, 0])


def _linear_init(X: np.ndarray, y: np.ndarray) -> TTTrain:
    """Rank-2 train of the least-squares linear model b + sum_n w_n x_n."""
    M, N = X.shape
    coef = scipy.linalg.lstsq(np.concatenate([np.ones((M, 1)), X], axis=1), y)[0]
    b, w = coef[0], coef[1:]
    if N == 1:
        return TTTrain((np.array([[[b], [w[0]]]]).reshape(1, 2, 1),))
    cores = []
    first = np.zeros((1, 2, 2))
    first[0, 0] = [1.0, 0.0]
    first[0, 1] = [0.0, w[0]]
    cores.append(first)
    for n in range(1, N - 1):
        core = np.zeros((2, 2, 2))
        core[:, 0, :] = np.eye(2)
        core[0, 1, 1] = w[n]
        cores.append(core)
    last = np.zeros((2, 2, 1))
    last[:, 0, 0] = [b, 1.0]
    last[0, 1, 0] = w[N - 1]
    cores.append(last)
    return TTTrain(tuple(cores))


def _feasible_ranks(N: int, rank: int) -> list:
    return [1] + [min(rank, 2 ** (n + 1), 2 ** (N - n - 1)) for n in range(N - 1)] + [1]


def _pad(W: TTTrain, ranks: list, rng: np.random.Generator, sigma: float) -> TTTrain:
    cores = []
    for n, c in enumerate(W.cores):
        padded = sigma * rng.standard_normal((ranks[n], 2, ranks[n + 1]))
        r, _, rr = c.shape
        padded[: min(r, ranks[n]), :, : min(rr, ranks[n + 1])] += c[: ranks[n], :, : ranks[n + 1]]
        cores.append(padded)
    return TTTrain(tuple(cores))


def exm_fit(
    X,
    y,
    rank: int = 2,
    iters: int = EXM_MAX_ITERS,
    batch: int = EXM_BATCH,
    loss: Literal["squared", "logistic"] = "squared",
    lam: float = 0.0,
    c1: float = ARMIJO_C1,
    rho: float = ARMIJO_RHO,
    step: float | None = None,
    step0: float = 1.0,
    seed: int = 0,
    trace_path=None,
) -> ExmModel:
    """
    Stochastic Riemannian gradient descent for the penalised loss
    mean l(<W, X_m>, y_m) + lam ||W||^2 over trains of fixed ranks, where X_m
    is the rank-1 tensor of factors [1, x_mn]. Each iteration samples a
    minibatch, projects its gradient as a sum of rank-1 terms and takes an
    Armijo step, or a fixed ``step`` when given.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError(f"X must be M x N with M = {y.size}, got {X.shape}")
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
    if rank < 1 or batch < 1 or lam < 0:
        raise ValueError(f"invalid settings rank={rank} batch={batch} lam={lam}")
    rng = np.random.default_rng(seed)
    M, N = X.shape
    ranks = _feasible_ranks(N, rank)
    init = _linear_init(X, y if loss == "squared" else np.sign(y))
    W = tt_round_to_ranks(_pad(init, ranks, rng, EXM_INIT_NOISE), ranks)
    trace = []
    for it in range(iters):
        idx = np.sort(rng.choice(M, size=min(batch, M), replace=False))
        Xb, yb = X[idx], y[idx]
        base = Gauges.of(W)
        _, dl = _loss_terms(loss, _scores(W, Xb), yb)
        g = project_rank_one(base, _features(Xb), dl / idx.size)
        if lam > 0.0:
            g = g.combine(1.0, tangent_project(base, W), 2.0 * lam)
        eta = g.combine(-1.0)
        if step is not None:
            alpha = step
            W = retract(W, eta, alpha)
        else:
            J = _penalized_loss(loss, W, Xb, yb, lam)
            slope = g.inner(eta)
            alpha = step0
            for _ in range(MAX_BACKTRACKS):
                candidate = retract(W, eta, alpha)
                if _penalized_loss(loss, candidate, Xb, yb, lam) <= J + c1 * alpha * slope:
                    break
                alpha *= rho
            else:
                alpha = 0.0
                candidate = W
            W = candidate
        value = _penalized_loss(loss, W, X, y, lam)
        trace.append({"iter": it + 1, "loss": value, "step": float(alpha)})
        logger.debug("exm iteration %d: loss %.6e step %.3e", it + 1, value, alpha)
    if trace:
        logger.info("exm finished after %d iterations, loss %.6e", iters, trace[-1]["loss"])
    if trace_path is not None:
        pd.DataFrame(trace, columns=["iter", "loss", "step"]).to_json(
            Path(trace_path), orient="records", lines=True
        )
    return ExmModel(W, float(lam), ranks, loss, trace)


def exm_predict(model: ExmModel, x) -> np.ndarray:
    """Model score <W, X> for one feature vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    scores = _scores(model.weights, x.reshape(1, -1) if single else x)
    return float(scores[0]) if single else scores


def read_trace(path) -> list:
    """Rows of a JSON-lines training trace as dicts with iter, loss and step."""
    return pd.read_json(Path(path), lines=True).to_dict(orient="records")
