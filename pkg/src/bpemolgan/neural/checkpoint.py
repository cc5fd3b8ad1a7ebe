"""Binary checkpoint container.

Layout::

    b"BMGCKPT\\0"                 8-byte magic
    uint32 LE                    format version
    uint32 LE                    header length in bytes
    header                       UTF-8 JSON: meta + per-store name/shape tables
    tensor data                  per store, per tensor in header order:
                                 parameter, Adam first moment, Adam second
                                 moment; each row-major little-endian float32

The header is written with sorted keys so equal state gives equal bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .params import ParamStore

MAGIC = b"BMGCKPT\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(stores: dict[str, ParamStore], meta: dict | None = None) -> bytes:
    header = {
        "meta": meta or {},
        "stores": [
            {
                "name": sname,
                "step": store.step,
                "tensors": [{"name": n, "shape": list(store[n].shape)} for n in store],
            }
            for sname, store in stores.items()
        ],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", VERSION, len(head)), head]
    le32 = np.dtype("<f4")
    for store in stores.values():
        for n in store:
            for d in (store.params, store.m, store.v):
                chunks.append(np.ascontiguousarray(d[n], dtype=le32).tobytes())
    return b"".join(chunks)


def loads(blob: bytes) -> tuple[dict[str, ParamStore], dict]:
    if blob[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<II", blob[8:16])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(blob[16 : 16 + hlen].decode("utf-8"))
    pos = 16 + hlen
    stores: dict[str, ParamStore] = {}
    le32 = np.dtype("<f4")
    for entry in header["stores"]:
        store = ParamStore()
        for t in entry["tensors"]:
            shape = tuple(t["shape"])
            count = int(np.prod(shape, dtype=np.int64))
            arrays = []
            for _ in range(3):
                nbytes = 4 * count
                if pos + nbytes > len(blob):
                    raise CheckpointError("checkpoint is truncated")
                arrays.append(np.frombuffer(blob, le32, count, pos).reshape(shape).astype(np.float64))
                pos += nbytes
            store.add(t["name"], arrays[0])
            store.m[t["name"]][...] = arrays[1]
            store.v[t["name"]][...] = arrays[2]
        store.step = entry["step"]
        stores[entry["name"]] = store
    if pos != len(blob):
        raise CheckpointError("trailing bytes after tensor data")
    return stores, header["meta"]


def save(path: str | Path, stores: dict[str, ParamStore], meta: dict | None = None) -> str:
    """Write atomically; returns the sha256 of the bytes written."""
    blob = dumps(stores, meta)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)
    return hashlib.sha256(blob).hexdigest()


def load(path: str | Path) -> tuple[dict[str, ParamStore], dict]:
    return loads(Path(path).read_bytes())


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
