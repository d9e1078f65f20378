"""Deterministic single-file checkpoints.

Byte layout (all integers unsigned 32-bit little-endian):

    magic "CXRNET01"
    u32 length + UTF-8 JSON network spec (canonical key order)
    per parameter, in network iteration order:
        u32 length + UTF-8 name
        u32 rank, then u32 extent per axis
        row-major IEEE-754 32-bit little-endian values
    u32 CRC-32 of every preceding byte

Two saves of the same network produce identical bytes, and the layout is
endianness-explicit so files travel across platforms.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .model import Network, NetworkSpec

__all__ = [
    "MAGIC",
    "CheckpointError",
    "CheckpointMagicError",
    "CheckpointCrcError",
    "CheckpointFormatError",
    "save",
    "load",
]

MAGIC = b"CXRNET01"


class CheckpointError(Exception):
    """Base class for checkpoint problems."""


class CheckpointMagicError(CheckpointError):
    """File does not start with the checkpoint magic."""


class CheckpointCrcError(CheckpointError):
    """Trailing CRC-32 does not match the file contents."""


class CheckpointFormatError(CheckpointError):
    """Structure or tensor shapes disagree with the embedded spec."""


def save(net: Network, path: Path | str) -> None:
    """Write the network spec and parameters; see the module docstring."""
    if net.spec is None:
        raise ValueError("only networks built from a NetworkSpec can be saved")
    chunks = [MAGIC]
    spec_bytes = net.spec.to_json().encode("utf-8")
    chunks.append(struct.pack("<I", len(spec_bytes)))
    chunks.append(spec_bytes)
    for name, param, _ in net.named_parameters():
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<I", param.ndim))
        chunks.append(struct.pack(f"<{param.ndim}I", *param.shape))
        chunks.append(np.ascontiguousarray(param, dtype="<f4").tobytes())
    body = b"".join(chunks)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(body + struct.pack("<I", crc))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointFormatError("checkpoint ends mid-record")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load(path: Path | str) -> Network:
    """Read a checkpoint back into a runnable network.

    Raises :class:`CheckpointMagicError`, :class:`CheckpointCrcError` or
    :class:`CheckpointFormatError` for bad magic, corrupted bytes, and
    spec/tensor disagreements respectively. A loaded network's forward
    outputs are bit-identical to the saved one's.
    """
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 4:
        raise CheckpointCrcError(f"file too short to be a checkpoint: {len(data)} bytes")
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointMagicError(
            f"bad magic {data[:len(MAGIC)]!r}; expected {MAGIC!r}"
        )
    body, stored = data[:-4], struct.unpack("<I", data[-4:])[0]
    actual = zlib.crc32(body) & 0xFFFFFFFF
    if stored != actual:
        raise CheckpointCrcError(f"CRC mismatch: stored {stored:#010x}, computed {actual:#010x}")

    reader = _Reader(body)
    reader.take(len(MAGIC))
    try:
        spec = NetworkSpec.from_json(reader.take(reader.u32()).decode("utf-8"))
        net = Network.from_spec(spec, seed=0)
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise CheckpointFormatError(f"cannot rebuild network spec: {exc}") from exc

    for name, param, _ in net.named_parameters():
        stored_name = reader.take(reader.u32()).decode("utf-8", errors="replace")
        if stored_name != name:
            raise CheckpointFormatError(
                f"tensor name mismatch: file has {stored_name!r}, spec expects {name!r}"
            )
        rank = reader.u32()
        shape = tuple(reader.u32() for _ in range(rank))
        if shape != param.shape:
            raise CheckpointFormatError(
                f"tensor {name!r} shape {shape} != spec shape {param.shape}"
            )
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        values = np.frombuffer(reader.take(4 * count), dtype="<f4")
        param[...] = values.reshape(shape).astype(np.float32)
    if reader.pos != len(body):
        raise CheckpointFormatError(
            f"{len(body) - reader.pos} unexpected trailing bytes before CRC"
        )
    return net
