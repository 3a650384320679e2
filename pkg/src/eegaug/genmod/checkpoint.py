"""Versioned binary model container, shared by generators and classifiers.

Layout: magic "EAGM", u16 format version, u16 kind tag, u32 header length,
canonical JSON header (architecture, seed, metadata, parameter manifest,
normalization stats), then all parameters as little-endian float32 in
manifest order. Load followed by save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from ..dataio import FormatError, NormStats, atomic_write
from ..diffcore import tensor
from .mlp import MlpSpec
from .models import GanModel, VaeModel

MAGIC = b"EAGM"
VERSION = 1
_PREFIX = struct.Struct("<4sHHI")

KIND_CODES = {"vae": 0, "cvae": 1, "wgan": 2, "cwgan": 3, "svm": 16, "dnn": 17}
_CODE_KINDS = {v: k for k, v in KIND_CODES.items()}


@dataclass
class Checkpoint:
    kind: str
    arch: dict
    seed: int
    meta: dict
    params: dict  # name -> float32 ndarray
    norm: NormStats | None


def checkpoint_bytes(kind, arch, params, seed=0, meta=None, norm=None) -> bytes:
    if kind not in KIND_CODES:
        raise ValueError(f"unknown checkpoint kind {kind!r}")
    manifest = [[name, list(np.asarray(arr).shape)] for name, arr in params.items()]
    header = {
        "arch": arch,
        "seed": int(seed),
        "meta": meta or {},
        "params": manifest,
        "norm": None if norm is None else {"mean": [float(v) for v in norm.mean],
                                           "std": [float(v) for v in norm.std]},
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    payload = b"".join(np.ascontiguousarray(arr, dtype="<f4").tobytes()
                       for arr in params.values())
    return _PREFIX.pack(MAGIC, VERSION, KIND_CODES[kind], len(hbytes)) + hbytes + payload


def checkpoint_from_bytes(blob: bytes) -> Checkpoint:
    if len(blob) < _PREFIX.size:
        raise FormatError("truncated checkpoint prefix", offset=len(blob))
    magic, version, code, hlen = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    if code not in _CODE_KINDS:
        raise FormatError(f"unknown kind tag {code}", offset=6)
    start = _PREFIX.size
    if len(blob) < start + hlen:
        raise FormatError("truncated header", offset=len(blob))
    try:
        header = json.loads(blob[start:start + hlen].decode())
    except ValueError as err:
        raise FormatError(f"bad header JSON: {err}", offset=start)
    params = {}
    offset = start + hlen
    for name, shape in header["params"]:
        count = int(np.prod(shape)) if shape else 1
        if len(blob) < offset + count * 4:
            raise FormatError(f"truncated payload for {name!r}", offset=len(blob))
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        params[name] = arr.reshape(shape).copy()
        offset += count * 4
    norm = None
    if header.get("norm"):
        norm = NormStats(np.asarray(header["norm"]["mean"]),
                         np.asarray(header["norm"]["std"]))
    return Checkpoint(_CODE_KINDS[code], header["arch"], header["seed"],
                      header["meta"], params, norm)


def save_checkpoint(path, kind, arch, params, seed=0, meta=None, norm=None):
    atomic_write(path, checkpoint_bytes(kind, arch, params, seed, meta, norm))


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return checkpoint_from_bytes(fh.read())


# --- generator adapters ---

def save_model(path, model, seed=0):
    if isinstance(model, VaeModel):
        arch = {"data_dim": model.data_dim, "latent_dim": model.latent_dim,
                "n_classes": model.n_classes,
                "encoder": list(model.encoder_spec.widths),
                "decoder": list(model.decoder_spec.widths)}
    elif isinstance(model, GanModel):
        arch = {"data_dim": model.data_dim, "noise_dim": model.noise_dim,
                "n_classes": model.n_classes,
                "generator": list(model.gen_spec.widths),
                "critic": list(model.critic_spec.widths),
                "lambda_gp": model.lambda_gp, "n_critic": model.n_critic}
    else:
        raise TypeError(f"not a generator model: {type(model).__name__}")
    save_checkpoint(path, model.kind, arch,
                    {k: v.data for k, v in model.params.items()},
                    seed=seed, meta=model.meta, norm=model.norm)


def load_model(path):
    ck = load_checkpoint(path)
    params = {k: tensor(v, requires_grad=True, dtype=np.float32)
              for k, v in ck.params.items()}
    a = ck.arch
    if ck.kind in ("vae", "cvae"):
        model = VaeModel(a["data_dim"], a["latent_dim"], a["n_classes"],
                         MlpSpec(tuple(a["encoder"])), MlpSpec(tuple(a["decoder"])),
                         params, norm=ck.norm, meta=ck.meta)
    elif ck.kind in ("wgan", "cwgan"):
        model = GanModel(a["data_dim"], a["noise_dim"], a["n_classes"],
                         MlpSpec(tuple(a["generator"])), MlpSpec(tuple(a["critic"])),
                         params, lambda_gp=a["lambda_gp"], n_critic=a["n_critic"],
                         norm=ck.norm, meta=ck.meta)
    else:
        raise FormatError(f"checkpoint holds a {ck.kind!r} classifier, "
                          "not a generator")
    return model
