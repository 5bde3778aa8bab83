# pylint: disable=too-few-public-methods
"""
JSON configuration documents for the ttkit commands. Every model rejects
unknown keys; ``load_config`` reports problems as an (ok, config, err_msg)
tuple so callers can print the message and exit.
"""

import json
import os
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import ValidationError
from pydantic import model_validator

THREADS_ENV_VAR = "TTKIT_THREADS"
DEFAULT_THREADS = 1


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SeparationConfig(StrictModel):
    kind: Literal["separate"] = "separate"
    sources: int = Field(3, ge=1)
    d: int = Field(8, ge=2)
    snr_db: float | None = 30.0
    variant: Literal["long", "short"] = "long"
    tensorization: Literal["folded", "toeplitz"] = "folded"
    toeplitz_sizes: list[int] = [16, 8, 8, 8, 8, 8, 16]
    length: int | None = None
    seed: int = 0
    seeds: int = Field(1, ge=1)
    iters: int = Field(200, ge=1)
    tol: float = Field(1e-10, gt=0)
    output: str = "separation.csv"


class IdentificationConfig(StrictModel):
    kind: Literal["identify"] = "identify"
    sources: int = Field(4, ge=1)
    orders: list[int] = [5, 7]
    snr_db: float | None = 20.0
    samples: int | None = None
    seed: int = 0
    seeds: int = Field(1, ge=1)
    subtract_mean: bool = True
    cp_iters: int = Field(500, ge=1)
    balanced: bool = False
    output: str = "identification.csv"


class SolveConfig(StrictModel):
    kind: Literal["solve"] = "solve"
    solver: Literal["amen", "richardson", "lasso_irls"] = "amen"
    operator: str
    rhs: str
    x0: str | None = None
    normal: bool = False
    gamma: float = Field(0.0, ge=0)
    sweeps: int = Field(50, ge=1)
    tol: float = Field(1e-10, gt=0)
    enrich_rank: int = Field(2, ge=0)
    max_rank: int | None = None
    step: float | None = Field(None, gt=0)
    iters: int = Field(50, ge=1)
    q: float = Field(1.0, gt=0, le=1)
    weight_rank: int | None = Field(None, ge=1)
    group_mode: int | None = Field(None, ge=0)
    seed: int = 0
    output: str = "solution.tt"
    report: str = "report.json"

    @model_validator(mode="after")
    def check_solver_settings(self):
        if self.solver == "richardson" and self.step is None:
            raise ValueError("the richardson solver needs a step size")
        return self


class EigConfig(StrictModel):
    kind: Literal["eig"] = "eig"
    operator: str
    K: int = Field(1, ge=1)
    solver: Literal["als", "mals", "evamen"] = "evamen"
    ranks: int = Field(1, ge=1)
    sweeps: int = Field(50, ge=1)
    tol: float = Field(1e-10, gt=0)
    enrich_rank: int = Field(2, ge=0)
    max_rank: int | None = None
    seed: int = 0
    output: str = "eigenvectors.tt"
    values: str = "eigenvalues.csv"
    report: str = "report.json"


class CompleteConfig(StrictModel):
    kind: Literal["complete"] = "complete"
    samples: str
    mode_sizes: list[int]
    ranks: list[int] | int = 2
    sweeps: int = Field(50, ge=1)
    tol: float = Field(1e-10, gt=0)
    seed: int = 0
    output: str = "completed.tt"
    report: str = "report.json"


class KernelSettings(StrictModel):
    kind: Literal["linear", "gaussian_rbf", "chordal"] = "linear"
    beta: float = Field(1.0, gt=0)


class RegressConfig(StrictModel):
    kind: Literal["regress"] = "regress"
    method: Literal["holrr", "kholrr", "hopls", "npls", "lsstm"] = "holrr"
    x: str
    y: str
    test_x: str | None = None
    test_y: str | None = None
    ranks: list[int] = []
    x_ranks: list[int] = []
    y_ranks: list[int] = []
    components: int = Field(1, ge=0)
    gamma: float = Field(0.0, ge=0)
    kernel: KernelSettings = KernelSettings()
    center: bool = True
    iters: int = Field(50, ge=1)
    seed: int = 0
    model: str = "model.json"
    predictions: str = "predictions.csv"
    report: str = "report.json"


CONFIG_MODELS = {
    "separate": SeparationConfig,
    "identify": IdentificationConfig,
    "solve": SolveConfig,
    "eig": EigConfig,
    "complete": CompleteConfig,
    "regress": RegressConfig,
}


def load_config(path, command: str, seed: int | None = None) -> tuple:
    """
    Read and validate the JSON config for ``command``. A ``--seed`` given on the
    command line overrides the document.
    Returns:
        bool: True if the document is valid.
        StrictModel: the parsed config, None if invalid.
        str: error message if validation fails, None otherwise.
    """
    model_cls = CONFIG_MODELS.get(command)
    if model_cls is None:
        return False, None, f"Unknown command {command!r}"
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        return False, None, f"Cannot read config {path}: {e}"
    if not isinstance(doc, dict):
        return False, None, f"Config {path} must be a JSON object"
    doc.setdefault("kind", command)
    if seed is not None:
        doc["seed"] = seed
    try:
        cfg = model_cls.model_validate(doc)
    except ValidationError as e:
        return False, None, f"Invalid config {path}: {e}"
    return True, cfg, None


def resolve_path(value: str | None, base_dir) -> Path | None:
    """Paths in a config are relative to the config file's directory."""
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else Path(base_dir) / path


def worker_count(env_path=None) -> int:
    """Worker cap from TTKIT_THREADS after loading a .env file."""
    load_dotenv(dotenv_path=env_path or Path.cwd() / ".env", override=False)
    raw = os.getenv(THREADS_ENV_VAR, str(DEFAULT_THREADS))
    try:
        return max(1, int(raw))
    except ValueError:
        return DEFAULT_THREADS
