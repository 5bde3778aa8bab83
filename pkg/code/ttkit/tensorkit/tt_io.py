# pylint: disable=invalid-name
"""
File formats used by the command line and the experiment flows:

- TT1F binary files for trains, operators and block trains;
- one-value-per-line CSV vectors and header-row CSV tables (pandas);
- JSON documents with base64-embedded float64 arrays for fitted models.
"""

import base64
import json
import struct
from pathlib import Path

import numpy as np
import pandas as pd
from prefect.logging import get_logger

from tensorkit.tt_core import BlockTT
from tensorkit.tt_core import TTOperator
from tensorkit.tt_core import TTTrain

logger = get_logger("tensorkit.tt_io")

MAGIC = b"TT1F"
FLAG_OPERATOR = 1
FLAG_BLOCK = 2


def _pack_u32(values) -> bytes:
    values = [int(v) for v in values]
    return struct.pack(f"<{len(values)}I", *values)


def encode_tt(obj) -> bytes:
    """Serialise a TTTrain, TTOperator or BlockTT into TT1F bytes."""
    flags = 0
    if isinstance(obj, TTOperator):
        flags |= FLAG_OPERATOR
        sizes = list(obj.row_sizes) + list(obj.col_sizes)
    elif isinstance(obj, BlockTT):
        flags |= FLAG_BLOCK
        sizes = obj.mode_sizes
    elif isinstance(obj, TTTrain):
        sizes = obj.mode_sizes
    else:
        raise ValueError(f"cannot encode object of type {type(obj).__name__}")
    parts = [MAGIC, _pack_u32([obj.order, flags]), _pack_u32(sizes), _pack_u32(obj.ranks)]
    if isinstance(obj, BlockTT):
        parts.append(_pack_u32([obj.block_position, obj.block_size]))
    for core in obj.cores:
        parts.append(np.ascontiguousarray(core, dtype="<f8").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated TT1F payload")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, count: int) -> list:
        return list(struct.unpack(f"<{count}I", self.take(4 * count)))

    def f64(self, shape: tuple) -> np.ndarray:
        count = int(np.prod(shape))
        return np.frombuffer(self.take(8 * count), dtype="<f8").reshape(shape)


def decode_tt(data: bytes):
    """Inverse of encode_tt."""
    reader = _Reader(data)
    if reader.take(4) != MAGIC:
        raise ValueError("not a TT1F payload (bad magic)")
    N, flags = reader.u32(2)
    if N == 0:
        raise ValueError("TT1F payload with zero cores")
    operator = bool(flags & FLAG_OPERATOR)
    block = bool(flags & FLAG_BLOCK)
    if operator and block:
        raise ValueError("TT1F flags cannot mark both operator and block")
    sizes = reader.u32(2 * N if operator else N)
    ranks = reader.u32(N + 1)
    if operator:
        rows, cols = sizes[:N], sizes[N:]
        cores = [reader.f64((ranks[n], rows[n], cols[n], ranks[n + 1])) for n in range(N)]
        obj = TTOperator(tuple(cores))
    elif block:
        position, K = reader.u32(2)
        cores = [
            reader.f64((ranks[n], sizes[n], ranks[n + 1], K) if n == position
                       else (ranks[n], sizes[n], ranks[n + 1]))
            for n in range(N)
        ]
        obj = BlockTT(tuple(cores), position)
    else:
        cores = [reader.f64((ranks[n], sizes[n], ranks[n + 1])) for n in range(N)]
        obj = TTTrain(tuple(cores))
    if reader.pos != len(data):
        raise ValueError(f"{len(data) - reader.pos} trailing bytes after TT1F payload")
    return obj


def write_tt(path, obj) -> None:
    Path(path).write_bytes(encode_tt(obj))
    logger.debug("Wrote TT1F file %s", path)


def read_tt(path):
    return decode_tt(Path(path).read_bytes())


def read_vector_csv(path) -> np.ndarray:
    """Vector stored one value per line, no header."""
    df = pd.read_csv(path, header=None)
    if df.shape[1] != 1:
        raise ValueError(f"{path}: expected a single column, found {df.shape[1]}")
    return df.iloc[:, 0].to_numpy(dtype=np.float64)


def write_vector_csv(path, values) -> None:
    pd.DataFrame(np.asarray(values, dtype=np.float64).reshape(-1)).to_csv(
        path, header=False, index=False, float_format="%.17g"
    )


def write_table_csv(path, rows: list, columns: list) -> None:
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, float_format="%.17g")


def read_dataset_csv(path) -> tuple:
    """
    Samples x flattened-features CSV with a JSON sidecar ``<path>.json`` holding
    ``{"mode_sizes": [...]}``. Returns the M x I_1 x ... x I_N array.
    """
    df = pd.read_csv(path)
    sidecar = Path(f"{path}.json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        mode_sizes = [int(s) for s in meta["mode_sizes"]]
    else:
        mode_sizes = [df.shape[1]]
    values = df.to_numpy(dtype=np.float64)
    if int(np.prod(mode_sizes)) != values.shape[1]:
        raise ValueError(f"{path}: mode sizes {mode_sizes} do not match {values.shape[1]} columns")
    return values.reshape(values.shape[0], *mode_sizes), mode_sizes


def write_dataset_csv(path, data) -> None:
    data = np.asarray(data, dtype=np.float64)
    flat = data.reshape(data.shape[0], -1)
    columns = [f"f{k}" for k in range(flat.shape[1])]
    pd.DataFrame(flat, columns=columns).to_csv(path, index=False, float_format="%.17g")
    Path(f"{path}.json").write_text(
        json.dumps({"mode_sizes": list(data.shape[1:])}), encoding="utf-8"
    )


def encode_array(a) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(doc: dict) -> np.ndarray:
    raw = base64.b64decode(doc["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(doc["shape"]).copy()


def dump_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")
