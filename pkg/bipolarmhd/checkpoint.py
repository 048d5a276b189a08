"""
Binary checkpoint codec

Layout (little-endian):
    header  magic b"BMHD", version u16, dim u16, resolution u32, length f64,
            t f64, eps, mu0, mu1, alpha, mu, s_diff, f_amp as f64, step i64
    body    u coefficients then b coefficients, complex128, shape (n, N, ..., N)

Coefficients are written as stored, so a read returns the state bit for bit.
The CNAB2 history is not part of the file.
"""

import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .dynamics import State
from .errors import CheckpointFormatError, GridMismatchError
from .spectral import SpectralGrid, SpectralVectorField
from .types import DomainSpec, PhysicalParams

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

PARAM_FIELDS = ("eps", "mu0", "mu1", "alpha", "mu", "s_diff", "f_amp")


@dataclass
class Checkpoint:
    state: State
    params: PhysicalParams
    dom: DomainSpec
    step: int = 0


class CheckpointCodec:
    """Encoder/decoder for checkpoint files"""

    MAGIC = b"BMHD"
    VERSION = 1
    HEADER = struct.Struct("<4sHHIdd7dq")
    DTYPE = np.dtype("<c16")

    @staticmethod
    def body_size(dom: DomainSpec) -> int:
        """Bytes of one coefficient array"""
        return dom.dim * dom.resolution ** dom.dim * CheckpointCodec.DTYPE.itemsize

    @staticmethod
    def encode(state: State, params: PhysicalParams, step: int = 0) -> bytes:
        dom = state.grid.dom
        header = CheckpointCodec.HEADER.pack(
            CheckpointCodec.MAGIC,
            CheckpointCodec.VERSION,
            dom.dim,
            dom.resolution,
            dom.length,
            state.t,
            *(getattr(params, name) for name in PARAM_FIELDS),
            step,
        )
        u = np.ascontiguousarray(state.u.coeffs, dtype=CheckpointCodec.DTYPE)
        b = np.ascontiguousarray(state.b.coeffs, dtype=CheckpointCodec.DTYPE)
        return header + u.tobytes() + b.tobytes()

    @staticmethod
    def decode_header(data: bytes):
        """
        Returns:
            Tuple of (dom, t, params, step)
        """
        size = CheckpointCodec.HEADER.size
        if len(data) < size:
            raise CheckpointFormatError(f"truncated header: {len(data)} < {size} bytes")
        fields = CheckpointCodec.HEADER.unpack_from(data, 0)
        magic, version, dim, resolution, length, t = fields[:6]
        if magic != CheckpointCodec.MAGIC:
            raise CheckpointFormatError(f"bad magic {magic!r}")
        if version != CheckpointCodec.VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint version {version}")
        if dim not in (2, 3):
            raise CheckpointFormatError(f"bad dimension {dim}")
        values = fields[6:6 + len(PARAM_FIELDS)]
        step = fields[-1]
        dom = DomainSpec(dim=dim, length=length, resolution=resolution)
        params = PhysicalParams(**dict(zip(PARAM_FIELDS, values)))
        return dom, t, params, step

    @staticmethod
    def decode(data: bytes, grid: Optional[SpectralGrid] = None) -> Checkpoint:
        """
        Raises:
            CheckpointFormatError: bad magic, version or length
            GridMismatchError: header disagrees with grid
        """
        dom, t, params, step = CheckpointCodec.decode_header(data)
        if grid is None:
            grid = SpectralGrid(dom)
        elif grid.dom != dom:
            raise GridMismatchError(f"checkpoint grid {dom} does not match {grid!r}")

        offset = CheckpointCodec.HEADER.size
        body = CheckpointCodec.body_size(dom)
        if len(data) != offset + 2 * body:
            raise CheckpointFormatError(
                f"body is {len(data) - offset} bytes, expected {2 * body}"
            )
        shape = (dom.dim,) + grid.shape
        u = np.frombuffer(data, CheckpointCodec.DTYPE, count=body // 16, offset=offset)
        b = np.frombuffer(data, CheckpointCodec.DTYPE, count=body // 16, offset=offset + body)
        state = State(
            SpectralVectorField(u.reshape(shape).astype(complex), grid),
            SpectralVectorField(b.reshape(shape).astype(complex), grid),
            t,
        )
        return Checkpoint(state=state, params=params, dom=dom, step=step)


def write_checkpoint(path: PathLike, state: State, params: PhysicalParams, step: int = 0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(CheckpointCodec.encode(state, params, step))
    os.replace(tmp, path)
    logger.info(f"Checkpoint written: {path} (t={state.t:.6g}, step {step})")
    return path


def read_checkpoint(path: PathLike, grid: Optional[SpectralGrid] = None) -> Checkpoint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise CheckpointFormatError(f"checkpoint not found: {path}")
    checkpoint = CheckpointCodec.decode(data, grid)
    logger.info(f"Checkpoint read: {path} (t={checkpoint.state.t:.6g}, step {checkpoint.step})")
    return checkpoint
