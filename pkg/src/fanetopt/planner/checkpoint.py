"""Model checkpoint format: JSON shape table plus raw tensor payloads.

Layout: 8-byte little-endian header length, a UTF-8 JSON header with the
model config and a tensor table ({name, shape, dtype, offset, nbytes},
offsets relative to the payload start), then the concatenated tensor bytes.
"""

from __future__ import annotations

import json
import struct

import numpy as np
import torch

from ..errors import ParseError
from .model import AttentionPlanner, PlannerConfig

_FORMAT = 1


def save_checkpoint(model: AttentionPlanner, path) -> None:
    tensors = []
    payload = bytearray()
    for name, tensor in model.state_dict().items():
        arr = tensor.detach().cpu().numpy()
        raw = np.ascontiguousarray(arr).tobytes()
        tensors.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": str(arr.dtype),
            "offset": len(payload),
            "nbytes": len(raw),
        })
        payload.extend(raw)
    header = json.dumps({
        "format": _FORMAT,
        "kind": "attention-planner",
        "config": model.config.to_dict(),
        "tensors": tensors,
    }, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        f.write(bytes(payload))


def load_checkpoint(path) -> AttentionPlanner:
    with open(path, "rb") as f:
        raw = f.read()
    try:
        (header_len,) = struct.unpack("<Q", raw[:8])
        header = json.loads(raw[8:8 + header_len].decode("utf-8"))
    except (struct.error, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"{path}: not a model checkpoint ({e})") from e
    if header.get("format") != _FORMAT or header.get("kind") != "attention-planner":
        raise ParseError(f"{path}: unsupported checkpoint header")
    payload = raw[8 + header_len:]
    model = AttentionPlanner(PlannerConfig(**header["config"]))
    state = {}
    for entry in header["tensors"]:
        start = entry["offset"]
        buf = payload[start:start + entry["nbytes"]]
        arr = np.frombuffer(buf, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"])
        state[entry["name"]] = torch.as_tensor(arr.copy())
    model.load_state_dict(state)
    model.eval()
    return model
