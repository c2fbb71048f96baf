"""Binary model container.

Layout (all integers little-endian)::

    b"ASOM" | u32 format version | u64 header length | JSON header
    | float64 array blobs, in header order | SHA-256 of everything before

The JSON header is written with sorted keys and no timestamps, so equal
models produce byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .asom import AssociativeGrid, ExternalBank
from .classifier import OutputLayer
from .config import RunConfig
from .pipeline import FORMAT_VERSION, ModelBundle
from .skeleton import PreprocessConfig
from .som import GridShape, NeuronGrid

MAGIC = b"ASOM"
_DIGEST = 32


class ModelFormatError(ValueError):
    """File is not a model container."""


class VersionError(ModelFormatError):
    pass


class ChecksumError(ModelFormatError):
    pass


def _shape_dict(s: GridShape) -> dict:
    return {"rows": s.rows, "cols": s.cols}


def _stored_config(cfg: RunConfig) -> dict:
    # where a run writes and how many processes it used do not change the model
    return cfg.replace(run_out=RunConfig.run_out, run_jobs=RunConfig.run_jobs).to_dict()


def encode_model(m: ModelBundle) -> bytes:
    arrays = [("asom.native", m.asom.native.weights)]
    arrays += [(f"asom.external.{i}", b.weights) for i, b in enumerate(m.asom.externals)]
    arrays += [("som.weights", m.som2.weights), ("output.weights", m.output.weights)]
    header = {
        "format": "asom-model",
        "classes": list(m.classes),
        "config": _stored_config(m.config),
        "fold": m.fold,
        "k_max": m.k_max,
        "preprocess": {"schema": m.preprocess.schema, "attention_k": m.preprocess.attention_k,
                       "egocentric": m.preprocess.egocentric, "scale": m.preprocess.scale},
        "asom": {"shape": _shape_dict(m.asom.shape), "sigma": m.asom.sigma,
                 "softmax_exponent": m.asom.softmax_exponent,
                 "externals": len(m.asom.externals)},
        "som": {"shape": _shape_dict(m.som2.shape)},
        "output": {"gamma": m.output.gamma},
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = bytearray(MAGIC)
    body += struct.pack("<IQ", m.format_version, len(head))
    body += head
    for _, a in arrays:
        body += np.ascontiguousarray(a, dtype="<f8").tobytes()
    body += hashlib.sha256(body).digest()
    return bytes(body)


def decode_model(data: bytes) -> ModelBundle:
    if len(data) < 4 or data[:4] != MAGIC:
        raise ModelFormatError("not a model file (bad magic bytes)")
    if len(data) >= 8:
        (version,) = struct.unpack_from("<I", data, 4)
        if version != FORMAT_VERSION:
            raise VersionError(f"model format version {version} is not supported "
                               f"(expected {FORMAT_VERSION})")
    if len(data) < 16 + _DIGEST:
        raise ChecksumError("model file is truncated")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumError("model checksum mismatch (file corrupt or truncated)")
    version, head_len = struct.unpack_from("<IQ", body, 4)
    pos = 16
    header = json.loads(body[pos:pos + head_len].decode("utf-8"))
    pos += head_len
    arrays = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        n = int(np.prod(shape)) * 8
        if pos + n > len(body):
            raise ChecksumError("model file is truncated")
        arrays[spec["name"]] = np.frombuffer(body[pos:pos + n], dtype="<f8").reshape(shape).astype(float)
        pos += n
    if pos != len(body):
        raise ModelFormatError("trailing bytes after the array section")

    a = header["asom"]
    shape = GridShape(**a["shape"])
    banks = [ExternalBank(shape, arrays[f"asom.external.{i}"]) for i in range(a["externals"])]
    grid = AssociativeGrid(NeuronGrid(shape, arrays["asom.native"]), banks, a["sigma"],
                           a["softmax_exponent"])
    som = NeuronGrid(GridShape(**header["som"]["shape"]), arrays["som.weights"])
    out = OutputLayer(arrays["output.weights"], header["output"]["gamma"])
    p = header["preprocess"]
    pre = PreprocessConfig(p["schema"], p["attention_k"], p["egocentric"], p["scale"])
    return ModelBundle(pre, grid, int(header["k_max"]), som, out, tuple(header["classes"]),
                       RunConfig.from_dict(header["config"]), int(header["fold"]), version)


def save_model(m: ModelBundle, path) -> None:
    Path(path).write_bytes(encode_model(m))


def load_model(path) -> ModelBundle:
    """Read and verify a model; dimension chaining is checked on construction."""
    return decode_model(Path(path).read_bytes())
