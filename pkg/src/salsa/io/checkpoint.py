"""Binary checkpoint container.

Layout (all integers little-endian)::

    magic        8 bytes   b"SALSACKP"
    version      u32       1
    header_len   u64
    header       UTF-8 JSON (sorted keys): arch, train, run, mode, rng, step, epoch, adam_steps
    n_records    u32
    n_records ×  u32 name_len, name (UTF-8), u32 ndim, ndim × u64 dims, float64 data (C order)
    checksum     32 bytes  SHA-256 of every preceding byte

Record names are ``param/<name>``, ``specnorm/<name>/u``, ``specnorm/<name>/sigma``,
``adam/<group>/m/<name>`` and ``adam/<group>/v/<name>``, written in parameter-store order.
"""
import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from salsa.autograd import Rng
from salsa.exceptions import DataError, IntegrityError
from salsa.models.salsa import Mode, SalsaModel
from salsa.nn import ArchitectureConfig, ParameterStore
from salsa.specnorm import SpecNormState

logger = logging.getLogger(__name__)

MAGIC = b"SALSACKP"
VERSION = 1
_DIGEST = 32


@dataclass
class Checkpoint:
    arch: ArchitectureConfig
    mode: Mode
    train: dict
    run: dict
    rng_state: dict | None
    step: int
    epoch: int
    params: dict[str, np.ndarray]
    specnorm: dict[str, tuple[np.ndarray, float]]
    adam: dict[str, dict] = field(default_factory=dict)

    def build_model(self) -> SalsaModel:
        """Rebuild the model with these parameters and spectral states.

        :raises DimensionError:
            If a stored tensor does not match the shape the architecture implies.
        """
        model = SalsaModel.build(self.arch, self.mode, Rng(0))
        restore_parameters(model.store, self)
        return model


def restore_parameters(store: ParameterStore, ckpt: Checkpoint) -> None:
    missing = [name for name in store.names() if name not in ckpt.params]
    if missing:
        raise IntegrityError(f"checkpoint lacks parameters {missing[:3]}{'...' if len(missing) > 3 else ''}")
    store.load({name: ckpt.params[name] for name in store.names()})
    for name, state in store.spectral_items():
        if name in ckpt.specnorm:
            u, sigma = ckpt.specnorm[name]
            state.u = u.copy()
            state.sigma = float(sigma)


def _record(name: str, array: np.ndarray) -> bytes:
    array = np.ascontiguousarray(array, dtype="<f8")
    encoded = name.encode("utf-8")
    parts = [struct.pack("<I", len(encoded)), encoded, struct.pack("<I", array.ndim)]
    parts += [struct.pack("<Q", dim) for dim in array.shape]
    parts.append(array.tobytes())
    return b"".join(parts)


def save_checkpoint(
    path: Path,
    model: SalsaModel,
    train: dict | None = None,
    run: dict | None = None,
    rng: Rng | None = None,
    step: int = 0,
    epoch: int = 0,
    optimizers: dict | None = None,
) -> Path:
    """Write ``model`` and optional training state to ``path``; identical state yields identical bytes.

    :param dict optimizers:
        Group name to :class:`~salsa.training.optim.Adam`.
    """
    optimizers = optimizers or {}
    header = {
        "arch": model.arch.to_dict(),
        "mode": model.mode.value,
        "train": train or {},
        "run": run or {},
        "rng": rng.get_state() if rng is not None else None,
        "step": int(step),
        "epoch": int(epoch),
        "adam_steps": {group: opt.steps for group, opt in sorted(optimizers.items())},
    }
    records = [_record(f"param/{name}", param.data) for name, param in model.store.items()]
    for name, state in model.store.spectral_items():
        records.append(_record(f"specnorm/{name}/u", state.u))
        records.append(_record(f"specnorm/{name}/sigma", np.array(state.sigma)))
    for group, opt in sorted(optimizers.items()):
        for name in opt.names:
            records.append(_record(f"adam/{group}/m/{name}", opt.m[name]))
            records.append(_record(f"adam/{group}/v/{name}", opt.v[name]))

    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join([MAGIC, struct.pack("<I", VERSION), struct.pack("<Q", len(encoded)), encoded,
                     struct.pack("<I", len(records)), *records])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(body + hashlib.sha256(body).digest())
    logger.info(f"Saved checkpoint at step {step} (epoch {epoch}) to {path}")
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IntegrityError(f"{self.path}: truncated checkpoint")
        chunk = self.data[self.pos: self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))[0]


def load_checkpoint(path: Path) -> Checkpoint:
    """Read and verify a checkpoint.

    :raises DataError:
        If the file does not exist.

    :raises IntegrityError:
        On bad magic bytes, unsupported version, truncation or checksum mismatch.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + 4 + 8 + 4 + _DIGEST or raw[: len(MAGIC)] != MAGIC:
        logger.error(f"{path} is not a salsa checkpoint")
        raise IntegrityError(f"{path}: not a salsa checkpoint (bad magic or too short)")
    body, digest = raw[:-_DIGEST], raw[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        logger.error(f"Checksum mismatch in {path}")
        raise IntegrityError(f"{path}: checksum mismatch")

    reader = _Reader(body, path)
    reader.take(len(MAGIC))
    version = reader.unpack("<I")
    if version != VERSION:
        raise IntegrityError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")
    try:
        header = json.loads(reader.take(reader.unpack("<Q")).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise IntegrityError(f"{path}: unreadable header") from e

    arrays: dict[str, np.ndarray] = {}
    for _ in range(reader.unpack("<I")):
        name = reader.take(reader.unpack("<I")).decode("utf-8")
        shape = tuple(reader.unpack("<Q") for _ in range(reader.unpack("<I")))
        count = int(np.prod(shape, dtype=np.int64))
        arrays[name] = np.frombuffer(reader.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
    if reader.pos != len(body):
        raise IntegrityError(f"{path}: {len(body) - reader.pos} trailing bytes before checksum")

    params = {name[len("param/"):]: a for name, a in arrays.items() if name.startswith("param/")}
    specnorm = {}
    for name, a in arrays.items():
        if name.startswith("specnorm/") and name.endswith("/u"):
            base = name[len("specnorm/"): -len("/u")]
            specnorm[base] = (a, arrays[f"specnorm/{base}/sigma"].item())
    adam = {}
    for group, steps in header.get("adam_steps", {}).items():
        adam[group] = {
            "steps": steps,
            "m": {n: arrays[f"adam/{group}/m/{n}"] for n in steps},
            "v": {n: arrays[f"adam/{group}/v/{n}"] for n in steps},
        }
    return Checkpoint(
        arch=ArchitectureConfig(**header["arch"]),
        mode=Mode(header["mode"]),
        train=header["train"],
        run=header["run"],
        rng_state=header["rng"],
        step=int(header["step"]),
        epoch=int(header["epoch"]),
        params=params,
        specnorm=specnorm,
        adam=adam,
    )


def latest_checkpoint(directory: Path) -> Path | None:
    """Newest ``epoch-NNNNNN.ckpt`` in ``directory`` (``final.ckpt`` excluded), or None."""
    candidates = sorted(Path(directory).glob("epoch-*.ckpt"))
    return candidates[-1] if candidates else None


__all__ = ["MAGIC", "VERSION", "Checkpoint", "latest_checkpoint", "load_checkpoint", "restore_parameters", "save_checkpoint"]
