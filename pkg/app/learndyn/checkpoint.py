"""Self-describing checkpoint files.

Layout: the magic line ``MTUCKPT1\\n``, a little-endian uint32 header length,
a JSON header (architecture descriptor and parameter names/shapes), then every
parameter as little-endian float64 in header order.
"""

import logging
import struct
from pathlib import Path
from typing import Optional

import numpy as np
import orjson
import torch

from app import __version__
from app.errors import DatasetError
from app.learndyn.networks import DynamicsNet, model_from_descriptor

logger = logging.getLogger(__name__)

MAGIC = b"MTUCKPT1\n"
PAYLOAD_DTYPE = "<f8"


def save_checkpoint(model: DynamicsNet, path, extra: Optional[dict] = None) -> Path:
    """Write model parameters with their architecture header."""
    path = Path(path)
    params = list(model.named_parameters())
    header = {
        "version": __version__,
        "model": model.descriptor(),
        "parameters": [{"name": name, "shape": list(p.shape)} for name, p in params],
        "dtype": PAYLOAD_DTYPE,
        "extra": extra or {},
    }
    header_bytes = orjson.dumps(header, option=orjson.OPT_SORT_KEYS)
    payload = b"".join(p.detach().numpy().astype(PAYLOAD_DTYPE).tobytes() for _, p in params)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + payload)
    logger.info(f"Saved {model.architecture} checkpoint to {path}")
    return path


def read_checkpoint_header(path) -> dict:
    data = Path(path).read_bytes()
    return _parse(data, path)[0]


def _parse(data: bytes, path):
    if not data.startswith(MAGIC):
        raise DatasetError(f"{path} is not a checkpoint file")
    offset = len(MAGIC)
    if len(data) < offset + 4:
        raise DatasetError(f"{path} is truncated")
    (length,) = struct.unpack("<I", data[offset : offset + 4])
    offset += 4
    try:
        header = orjson.loads(data[offset : offset + length])
    except orjson.JSONDecodeError as e:
        raise DatasetError(f"{path} has a corrupt header: {e}") from e
    return header, data[offset + length :]


def load_checkpoint(path) -> DynamicsNet:
    """Rebuild the network described by the header and load its parameters."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as e:
        raise DatasetError(f"checkpoint {path} not found") from e
    header, payload = _parse(data, path)
    model = model_from_descriptor(header["model"])
    values = np.frombuffer(payload, dtype=PAYLOAD_DTYPE)

    named = dict(model.named_parameters())
    offset = 0
    with torch.no_grad():
        for entry in header["parameters"]:
            name, shape = entry["name"], tuple(entry["shape"])
            if name not in named or tuple(named[name].shape) != shape:
                raise DatasetError(f"{path}: parameter {name} {shape} does not fit the architecture")
            count = int(np.prod(shape))
            if offset + count > values.size:
                raise DatasetError(f"{path}: payload ends inside parameter {name}")
            named[name].copy_(torch.from_numpy(values[offset : offset + count].reshape(shape).astype(np.float64)))
            offset += count
    if offset != values.size:
        raise DatasetError(f"{path}: {values.size - offset} trailing values after the last parameter")
    logger.info(f"Loaded {model.architecture} checkpoint from {path}")
    return model
