"""Binary container shared by model checkpoints and embedded corpora.

Layout, all integers little-endian::

    b"ABSN"                     magic
    uint32                      format version
    uint32 + bytes              UTF-8 JSON metadata (sorted keys)
    uint32                      tensor count
    per tensor:
        uint16 + bytes          UTF-8 name
        uint32, uint32          rows, cols
        uint64                  absolute byte offset of the payload
    payload                     float32 little-endian, row-major, in directory order
"""

from __future__ import annotations

import json
import os
import struct
import time

import numpy as np

from .model import GanModel, init_model

MAGIC = b"ABSN"
FORMAT_VERSION = 1
STORE_DTYPE = np.dtype("<f4")


def creation_time() -> int:
    """Seconds since the epoch, pinned by ``SOURCE_DATE_EPOCH`` when set."""
    env = os.environ.get("SOURCE_DATE_EPOCH")
    return int(env) if env else int(time.time())


def reproducible_mode() -> bool:
    return "SOURCE_DATE_EPOCH" in os.environ


def _dump_meta(meta: dict) -> bytes:
    return json.dumps(meta, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def save_container(path, tensors: dict[str, np.ndarray], metadata: dict) -> None:
    meta = _dump_meta(metadata)
    entries = []
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise ValueError(f"tensor {name!r} must be 1-D or 2-D, got shape {arr.shape}")
        entries.append((name.encode("utf-8"), np.ascontiguousarray(arr, dtype=STORE_DTYPE)))
    head = MAGIC + struct.pack("<II", FORMAT_VERSION, len(meta)) + meta + struct.pack("<I", len(entries))
    dir_size = sum(2 + len(n) + 4 + 4 + 8 for n, _ in entries)
    offset = len(head) + dir_size
    directory = b""
    for name, arr in entries:
        directory += struct.pack("<H", len(name)) + name + struct.pack("<IIQ", arr.shape[0], arr.shape[1], offset)
        offset += arr.nbytes
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(directory)
        for _, arr in entries:
            fh.write(arr.tobytes())


def load_container(path) -> tuple[dict[str, np.ndarray], dict]:
    """Return ``(tensors, metadata)``; tensors keep their stored float32 values."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not an ABSN container")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise ValueError(f"{path}: truncated container")
        vals = struct.unpack_from(fmt, data, pos)
        pos += size
        return vals

    version, meta_len = take("<II")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})")
    if pos + meta_len > len(data):
        raise ValueError(f"{path}: truncated metadata")
    metadata = json.loads(data[pos : pos + meta_len].decode("utf-8"))
    pos += meta_len
    (count,) = take("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = take("<H")
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        rows, cols, offset = take("<IIQ")
        end = offset + rows * cols * STORE_DTYPE.itemsize
        if end > len(data):
            raise ValueError(f"{path}: tensor {name!r} extends past end of file")
        tensors[name] = np.frombuffer(data, dtype=STORE_DTYPE, count=rows * cols, offset=offset).reshape(rows, cols).copy()
    return tensors, metadata


def save_model(path, model: GanModel, metadata: dict | None = None) -> None:
    meta = dict(metadata or {})
    meta.setdefault("created", creation_time())
    meta["kind"] = "checkpoint"
    meta["dim"] = model.dim
    meta["gen_hidden"] = list(model.g_x.hidden)
    meta["disc_hidden"] = list(model.d_real.hidden)
    save_container(path, model.state_dict(), meta)


def load_model(path) -> tuple[GanModel, dict]:
    tensors, meta = load_container(path)
    if meta.get("kind") != "checkpoint":
        raise ValueError(f"{path}: container holds {meta.get('kind')!r}, not a checkpoint")
    model = init_model(meta["dim"], 0, tuple(meta["gen_hidden"]), tuple(meta["disc_hidden"]))
    model.load_state_dict(tensors)
    return model, meta


def save_embeddings(path, embeddings: np.ndarray, ids: list, metadata: dict | None = None) -> None:
    meta = dict(metadata or {})
    meta["kind"] = "embedded_corpus"
    meta["ids"] = list(ids)
    meta["dim"] = int(embeddings.shape[1])
    save_container(path, {"embeddings": embeddings}, meta)


def load_embeddings(path) -> tuple[np.ndarray, list, dict]:
    tensors, meta = load_container(path)
    if meta.get("kind") != "embedded_corpus":
        raise ValueError(f"{path}: container holds {meta.get('kind')!r}, not an embedded corpus")
    emb = tensors["embeddings"].astype(np.float64)
    if len(meta["ids"]) != len(emb):
        raise ValueError(f"{path}: {len(meta['ids'])} ids for {len(emb)} rows")
    return emb, meta["ids"], meta
