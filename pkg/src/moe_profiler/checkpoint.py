"""Binary checkpoint: magic 'BEMX', version, config snapshot, stats, tensors.

Little-endian throughout; tensor payloads are raw row-major floats so that
save -> load round-trips bitwise. Loading rejects unknown versions.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import TrainConfig, config_from_items, parse_config_text
from .errors import ConfigError, FormatError
from .metrics import NormStats
from .model import SpeakerProfiler
from .tensor import Tensor

MAGIC = b"BEMX"
FORMAT_VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES_BY_KIND = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


@dataclass
class Checkpoint:
    cfg: TrainConfig
    norm: NormStats
    best_epoch: int
    tensors: dict  # name -> np.ndarray


def save_checkpoint(path, cfg: TrainConfig, norm: NormStats, tensors: dict, best_epoch=0):
    """Write config, normalization stats and named tensors to one file."""
    path = Path(path)
    cfg_text = cfg.to_text().encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<I", len(cfg_text)))
        f.write(cfg_text)
        f.write(struct.pack("<dddd", norm.age_mean, norm.age_std, norm.height_mean, norm.height_std))
        f.write(struct.pack("<I", int(best_epoch)))
        f.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            arr = tensors[name]
            if isinstance(arr, Tensor):
                arr = arr.data
            arr = np.asarray(arr)
            code = _CODES_BY_KIND.get(arr.dtype)
            if code is None:
                raise ConfigError(f"tensor '{name}' has unsupported dtype {arr.dtype}")
            nb = name.encode("utf-8")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<BB", code, arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr, dtype=_DTYPE_CODES[code]).tobytes())


def _read_exact(f, n, what):
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"truncated checkpoint while reading {what}")
    return data


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != MAGIC:
            raise ConfigError(f"{path}: not a checkpoint (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != FORMAT_VERSION:
            raise ConfigError(f"{path}: unsupported checkpoint format version {version}")
        (cfg_len,) = struct.unpack("<I", _read_exact(f, 4, "config length"))
        cfg_text = _read_exact(f, cfg_len, "config").decode("utf-8")
        cfg = config_from_items(parse_config_text(cfg_text))
        norm = NormStats(*struct.unpack("<dddd", _read_exact(f, 32, "norm stats")))
        (best_epoch,) = struct.unpack("<I", _read_exact(f, 4, "best epoch"))
        (n_tensors,) = struct.unpack("<I", _read_exact(f, 4, "tensor count"))
        tensors = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, "tensor name length"))
            name = _read_exact(f, name_len, "tensor name").decode("utf-8")
            code, ndim = struct.unpack("<BB", _read_exact(f, 2, "tensor header"))
            if code not in _DTYPE_CODES:
                raise FormatError(f"{path}: unknown dtype code {code} for tensor '{name}'")
            shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, "tensor shape"))
            dtype = _DTYPE_CODES[code]
            payload = _read_exact(f, int(np.prod(shape, dtype=np.int64)) * dtype.itemsize, f"tensor '{name}'")
            tensors[name] = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    return Checkpoint(cfg=cfg, norm=norm, best_epoch=best_epoch, tensors=tensors)


def restore_model(ck: Checkpoint) -> SpeakerProfiler:
    """Rebuild a SpeakerProfiler from a checkpoint's config and tensors."""
    net = SpeakerProfiler(ck.cfg)
    params = net.parameters()
    missing = sorted(set(params) - set(ck.tensors))
    extra = sorted(set(ck.tensors) - set(params))
    if missing or extra:
        raise ConfigError(f"checkpoint does not match model: missing {missing[:3]}, unexpected {extra[:3]}")
    for name, p in params.items():
        arr = ck.tensors[name]
        if tuple(arr.shape) != tuple(p.data.shape):
            raise ConfigError(f"checkpoint tensor '{name}' has shape {arr.shape}, model expects {p.data.shape}")
        p.data = arr.astype(p.data.dtype, copy=True)
    return net
