# pylint: disable=invalid-name,broad-exception-caught,too-many-arguments,too-many-positional-arguments,too-many-locals
"""
This module houses the Prefect flows behind the ttkit commands: multi-seed
experiment batches (sinusoid separation, blind identification) and the solver,
completion and regression runs driven by config files. Seeds of a batch are
submitted to a thread pool and their results are merged in seed order.
"""

from pathlib import Path

import numpy as np
import pandas as pd
from prefect import flow
from prefect import get_run_logger
from prefect import task
from prefect.cache_policies import NO_CACHE
from prefect.task_runners import ThreadPoolTaskRunner
from tensorkit.completion import SamplingSet
from tensorkit.completion import tt_complete
from tensorkit.eigen_sweeps import als_evd
from tensorkit.eigen_sweeps import evamen
from tensorkit.eigen_sweeps import mals_evd
from tensorkit.experiments import identify_mixing
from tensorkit.experiments import separate_sinusoids
from tensorkit.linear_sweeps import amen_linear
from tensorkit.linear_sweeps import lasso_irls
from tensorkit.linear_sweeps import normal_system
from tensorkit.linear_sweeps import richardson
from tensorkit.regression import KernelConfig
from tensorkit.regression import holrr_fit
from tensorkit.regression import holrr_predict
from tensorkit.regression import hopls_fit
from tensorkit.regression import hopls_predict
from tensorkit.regression import kernel_matrix
from tensorkit.regression import kholrr_fit
from tensorkit.regression import kholrr_predict
from tensorkit.regression import lsstm_fit
from tensorkit.regression import lsstm_predict
from tensorkit.regression import npls_fit
from tensorkit.tt_core import TTOperator
from tensorkit.tt_core import TTTrain
from tensorkit.tt_core import identity_operator
from tensorkit.tt_core import laplace_operator
from tensorkit.tt_core import random_block
from tensorkit.tt_io import dump_json
from tensorkit.tt_io import read_dataset_csv
from tensorkit.tt_io import read_tt
from tensorkit.tt_io import write_dataset_csv
from tensorkit.tt_io import write_table_csv
from tensorkit.tt_io import write_tt
from tensorkit.tt_io import write_vector_csv

from experiment_config import resolve_path

SEPARATION_COLUMNS = ["seed", "source", "sae_db"]
IDENTIFICATION_COLUMNS = ["seed", "order", "msae_db", "msae_cumulant_db", "fit", "fit_cumulant"]
FAIL_MARK = "fail"


def _sizes(text: str) -> list:
    return [int(s) for s in text.split(",") if s.strip()]


def parse_operator(ref: str, base_dir) -> TTOperator:
    """
    Operator from a TT1F file or a built-in: ``laplace:D`` (2^D Dirichlet
    Laplacian in QTT) or ``identity:I_1,...,I_N``.
    """
    if ref.startswith("laplace:"):
        return laplace_operator(int(ref.split(":", 1)[1]))
    if ref.startswith("identity:"):
        return identity_operator(_sizes(ref.split(":", 1)[1]))
    obj = read_tt(resolve_path(ref, base_dir))
    if not isinstance(obj, TTOperator):
        raise ValueError(f"{ref} does not hold a TT operator")
    return obj


def parse_train(ref: str, base_dir) -> TTTrain:
    """Train from a TT1F file or the built-in ``ones:I_1,...,I_N``."""
    if ref.startswith("ones:"):
        return TTTrain(tuple(np.ones((1, I, 1)) for I in _sizes(ref.split(":", 1)[1])))
    obj = read_tt(resolve_path(ref, base_dir))
    if not isinstance(obj, TTTrain):
        raise ValueError(f"{ref} does not hold a TT train")
    return obj


@task(cache_policy=NO_CACHE)
def run_separation(cfg, seed: int) -> list:
    """
    Run one seed of the damped sinusoid separation.
    Args:
        cfg (SeparationConfig): Experiment settings.
        seed (int): Seed of this run.
    Returns:
        list: One row per source plus a mean row.
    """
    logger = get_run_logger()
    logger.info("Separating %d sources with %s tensorization, seed %d", cfg.sources, cfg.tensorization, seed)
    try:
        result = separate_sinusoids(
            P=cfg.sources, d=cfg.d, snr_db=cfg.snr_db, seed=seed, variant=cfg.variant,
            tensorization=cfg.tensorization, toeplitz_sizes=cfg.toeplitz_sizes,
            length=cfg.length, iters=cfg.iters, tol=cfg.tol,
        )
    except Exception as e:
        err_msg = f"Separation failed for seed {seed}: {e}"
        logger.error(err_msg)
        raise RuntimeError(err_msg) from e
    logger.info("Seed %d: MSAE %.2f dB", seed, result.msae)
    return [{"seed": seed, **row} for row in result.rows()]


@task(cache_policy=NO_CACHE)
def run_identification(cfg, seed: int, order: int) -> dict:
    """
    Run one seed of blind identification at one stacked tensor order.
    Args:
        cfg (IdentificationConfig): Experiment settings.
        seed (int): Seed of this run.
        order (int): Order of the stacked derivative tensor.
    Returns:
        dict: Table row with the MSAE of both estimators.
    """
    logger = get_run_logger()
    try:
        result = identify_mixing(
            R=cfg.sources, order=order, snr_db=cfg.snr_db, seed=seed, samples=cfg.samples,
            subtract_mean=cfg.subtract_mean, cp_iters=cfg.cp_iters, balanced=cfg.balanced,
        )
    except Exception as e:
        err_msg = f"Identification failed for seed {seed}, order {order}: {e}"
        logger.error(err_msg)
        raise RuntimeError(err_msg) from e
    logger.info("Seed %d order %d: MSAE %.2f dB", seed, order, result.msae)
    return result.row(seed)


@task(cache_policy=NO_CACHE)
def save_table(rows: list, columns: list, path) -> Path:
    """Write a header-row CSV table; -inf scores (zero-norm estimates) are written as "fail"."""
    logger = get_run_logger()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    cells = [
        {k: FAIL_MARK if isinstance(v, float) and v == -np.inf else v for k, v in row.items()}
        for row in rows
    ]
    write_table_csv(path, cells, columns)
    logger.info("Wrote %d rows to %s", len(rows), path)
    return Path(path)


@task(cache_policy=NO_CACHE)
def save_report(doc: dict, path) -> Path:
    logger = get_run_logger()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    dump_json(path, doc)
    logger.info("Wrote report to %s", path)
    return Path(path)


@task(cache_policy=NO_CACHE)
def solve_linear_system(cfg, base_dir) -> tuple:
    """
    Solve A x = b with the configured solver: AMEn (plain, normal equations or
    Tikhonov), truncated Richardson iteration, or IRLS for the (group) LASSO
    problem with penalty weight ``gamma``.
    Args:
        cfg (SolveConfig): Solver settings.
        base_dir (Path): Directory the config paths are relative to.
    Returns:
        TTTrain: The solution.
        SolveReport: Convergence trace.
    """
    logger = get_run_logger()
    try:
        A = parse_operator(cfg.operator, base_dir)
        b = parse_train(cfg.rhs, base_dir)
        x0 = parse_train(cfg.x0, base_dir) if cfg.x0 else None
        if cfg.solver == "amen":
            x, report = amen_linear(
                A, b, x0=x0, sweeps=cfg.sweeps, tol=cfg.tol, enrich_rank=cfg.enrich_rank,
                normal=cfg.normal, gamma=cfg.gamma, max_rank=cfg.max_rank, seed=cfg.seed,
            )
        elif cfg.solver == "richardson":
            if cfg.normal or cfg.gamma > 0:
                A, b = normal_system(A, b, cfg.gamma)
            if x0 is None:
                x0 = TTTrain(tuple(np.zeros((1, I, 1)) for I in A.col_sizes))
            x, report = richardson(A, b, x0, cfg.step, iters=cfg.iters, tol=cfg.tol, max_rank=cfg.max_rank)
        else:
            x, report = lasso_irls(
                A, b, cfg.gamma, q=cfg.q, iters=cfg.iters, weight_rank=cfg.weight_rank,
                group_mode=cfg.group_mode, tol=cfg.tol, sweeps=cfg.sweeps,
                enrich_rank=cfg.enrich_rank, seed=cfg.seed,
            )
    except Exception as e:
        err_msg = f"Linear solve failed: {e}"
        logger.error(err_msg)
        raise RuntimeError(err_msg) from e
    logger.info(
        "%s finished: residual %.3e, converged=%s", report.solver, report.final_residual, report.converged
    )
    return x, report


@task(cache_policy=NO_CACHE)
def solve_eigenproblem(cfg, base_dir) -> tuple:
    """
    Compute the K smallest eigenpairs of a symmetric TT operator.
    Args:
        cfg (EigConfig): Solver settings.
        base_dir (Path): Directory the config paths are relative to.
    Returns:
        np.ndarray: Eigenvalues in ascending order.
        BlockTT: Eigenvectors.
        SolveReport: Convergence trace.
    """
    logger = get_run_logger()
    try:
        A = parse_operator(cfg.operator, base_dir)
        x0 = random_block(A.row_sizes, [cfg.ranks] * (A.order - 1), cfg.K, seed=cfg.seed)
        if cfg.solver == "als":
            result = als_evd(A, cfg.K, x0, cfg.sweeps, cfg.tol)
        elif cfg.solver == "mals":
            result = mals_evd(A, cfg.K, x0, cfg.sweeps, cfg.tol, cfg.max_rank)
        else:
            result = evamen(A, cfg.K, x0, cfg.sweeps, cfg.tol, cfg.enrich_rank)
    except Exception as e:
        err_msg = f"Eigen solve failed: {e}"
        logger.error(err_msg)
        raise RuntimeError(err_msg) from e
    logger.info("%s eigenvalues: %s", cfg.solver, result[0])
    return result


@task(cache_policy=NO_CACHE)
def complete_from_samples(cfg, base_dir) -> tuple:
    """
    Fit a train to observed entries read from a CSV table with one column per
    mode index (zero-based) and a final ``value`` column.
    """
    logger = get_run_logger()
    try:
        table = pd.read_csv(resolve_path(cfg.samples, base_dir))
        if "value" not in table.columns:
            raise ValueError("samples table needs a 'value' column")
        index_cols = [c for c in table.columns if c != "value"]
        omega = SamplingSet(table[index_cols].to_numpy(dtype=np.int64),
                            table["value"].to_numpy(dtype=np.float64), cfg.mode_sizes)
        x, report = tt_complete(cfg.mode_sizes, omega, cfg.ranks, cfg.sweeps, cfg.tol, cfg.seed)
    except Exception as e:
        err_msg = f"Completion failed: {e}"
        logger.error(err_msg)
        raise RuntimeError(err_msg) from e
    logger.info("Completion fitted %d samples, rmse %.3e", omega.size, report.final_residual)
    return x, report


def _full_ranks(ranks: list, sizes) -> list:
    return list(ranks) if ranks else [int(s) for s in sizes]


@task(cache_policy=NO_CACHE)
def fit_regression(cfg, base_dir) -> tuple:
    """
    Fit the configured regression model and score it on the test split when
    given, otherwise on the training data.
    Returns:
        object: The fitted model.
        dict: Scores.
        np.ndarray: Predictions on the scored split.
    """
    logger = get_run_logger()
    try:
        X, _ = read_dataset_csv(resolve_path(cfg.x, base_dir))
        Y, _ = read_dataset_csv(resolve_path(cfg.y, base_dir))
        if cfg.test_x and cfg.test_y:
            Xs, _ = read_dataset_csv(resolve_path(cfg.test_x, base_dir))
            Ys, _ = read_dataset_csv(resolve_path(cfg.test_y, base_dir))
        else:
            Xs, Ys = X, Y
        if cfg.method == "holrr":
            Xm = X.reshape(X.shape[0], -1)
            model = holrr_fit(Xm, Y, _full_ranks(cfg.ranks, (Xm.shape[1],) + Y.shape[1:]), cfg.gamma)
            pred = holrr_predict(model, Xs.reshape(Xs.shape[0], -1))
        elif cfg.method == "kholrr":
            kernel = KernelConfig(cfg.kernel.kind, cfg.kernel.beta)
            K = kernel_matrix(list(X), kernel)
            model = kholrr_fit(K, Y, _full_ranks(cfg.ranks, (X.shape[0],) + Y.shape[1:]), cfg.gamma,
                               kernel, X)
            pred = kholrr_predict(model, kernel_matrix(list(Xs), kernel, list(X)))
        elif cfg.method in ("hopls", "npls"):
            if cfg.method == "hopls":
                model = hopls_fit(X, Y, cfg.components, _full_ranks(cfg.x_ranks, X.shape[1:]),
                                  _full_ranks(cfg.y_ranks, Y.shape[1:]), cfg.center)
            else:
                model = npls_fit(X, Y, cfg.components, cfg.center)
            pred = hopls_predict(model, Xs)
        else:
            labels = Y.reshape(-1)
            model = lsstm_fit(X, labels, cfg.gamma or 1.0, cfg.iters, seed=cfg.seed)
            pred = lsstm_predict(model, Xs)
    except Exception as e:
        err_msg = f"Regression ({cfg.method}) failed: {e}"
        logger.error(err_msg)
        raise RuntimeError(err_msg) from e
    if cfg.method == "lsstm":
        scores = {"method": cfg.method, "accuracy": float(np.mean(pred == Ys.reshape(-1))),
                  "samples": int(Xs.shape[0])}
    else:
        scores = {"method": cfg.method, "rmse": float(np.sqrt(np.mean((pred - Ys) ** 2))),
                  "samples": int(Xs.shape[0])}
    logger.info("Regression scores: %s", scores)
    return model, scores, pred


@flow(name="sinusoid_separation", task_runner=ThreadPoolTaskRunner(max_workers=1))
def separation_flow(cfg, out_dir) -> list:
    """Separation over cfg.seeds consecutive seeds; writes the SAE table."""
    logger = get_run_logger()
    logger.info("Starting sinusoid separation batch of %d seeds", cfg.seeds)
    futures = [run_separation.submit(cfg, cfg.seed + k) for k in range(cfg.seeds)]
    rows = [row for future in futures for row in future.result()]
    save_table(rows, SEPARATION_COLUMNS, Path(out_dir) / cfg.output)
    return rows


@flow(name="blind_identification", task_runner=ThreadPoolTaskRunner(max_workers=1))
def identification_flow(cfg, out_dir) -> list:
    """Identification over seeds and stacked orders; writes the MSAE table."""
    logger = get_run_logger()
    logger.info("Starting blind identification batch: orders %s, %d seeds", cfg.orders, cfg.seeds)
    futures = [
        run_identification.submit(cfg, cfg.seed + k, order)
        for k in range(cfg.seeds)
        for order in cfg.orders
    ]
    rows = [future.result() for future in futures]
    save_table(rows, IDENTIFICATION_COLUMNS, Path(out_dir) / cfg.output)
    return rows


@flow(name="tt_solver")
def solver_flow(cfg, base_dir, out_dir) -> bool:
    """Run a solve, eig or complete config and write its artifacts. Returns convergence."""
    logger = get_run_logger()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "solve":
        x, report = solve_linear_system(cfg, base_dir)
        write_tt(out / cfg.output, x)
    elif cfg.kind == "eig":
        vals, X, report = solve_eigenproblem(cfg, base_dir)
        write_tt(out / cfg.output, X)
        write_vector_csv(out / cfg.values, vals)
    else:
        x, report = complete_from_samples(cfg, base_dir)
        write_tt(out / cfg.output, x)
    save_report(report.to_dict(), out / cfg.report)
    if not report.converged:
        logger.warning("%s did not reach tolerance %.1e", report.solver, cfg.tol)
    return report.converged


@flow(name="tensor_regression")
def regression_flow(cfg, base_dir, out_dir) -> dict:
    """Fit, score and save a regression model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, scores, pred = fit_regression(cfg, base_dir)
    save_report(model.to_dict(), out / cfg.model)
    pred = np.asarray(pred, dtype=np.float64)
    write_dataset_csv(out / cfg.predictions, pred)
    save_report(scores, out / cfg.report)
    return scores
