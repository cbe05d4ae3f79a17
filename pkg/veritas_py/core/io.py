"""
Volume container format.

A volume is a sidecar JSON header plus a raw little-endian body:

    {"dims": [x, y, z], "spacing_mm": [sx, sy, sz], "dtype": "f32le" | "u8" | "u32le",
     "kind": "scalar" | "prob" | "mask" | "labelset", "channels": C, "data_file": "name.raw"}

The body is channel-fastest, then x, then y, then z. For label-set volumes
`channels` records K, the size of the label space, and the body holds one
u32 bitmask per voxel.
"""

from pathlib import Path
from typing import Union

import numpy as np

from ..utils.config import load_json, save_json
from ..utils.constants import (
    DTYPE_F32,
    DTYPE_U8,
    DTYPE_U32,
    KIND_LABELSET,
    KIND_MASK,
    KIND_PROB,
    KIND_SCALAR,
)
from ..utils.exceptions import ValidationError, VolumeFormatError
from ..utils.logger import get_logger
from .volumes import GridMeta, LabelSetVolume, MaskVolume, ProbabilityVolume, ScalarVolume

logger = get_logger(__name__)

Volume = Union[ScalarVolume, ProbabilityVolume, MaskVolume, LabelSetVolume]

_NUMPY_DTYPES = {
    DTYPE_F32: np.dtype("<f4"),
    DTYPE_U8: np.dtype("u1"),
    DTYPE_U32: np.dtype("<u4"),
}

_KIND_DTYPE = {
    KIND_SCALAR: DTYPE_F32,
    KIND_PROB: DTYPE_F32,
    KIND_MASK: DTYPE_U8,
    KIND_LABELSET: DTYPE_U32,
}


def _body_path(header_path: Path, header: dict) -> Path:
    data_file = header.get("data_file")
    if data_file:
        return header_path.parent / data_file
    return header_path.with_suffix(".raw")


def _to_body(array: np.ndarray, channels: int) -> np.ndarray:
    """Reorder an [x, y, z(, c)] array so that a Fortran ravel is channel-fastest."""
    if channels and array.ndim == 4:
        array = np.moveaxis(array, 3, 0)
    return np.ravel(array, order="F")


def _from_body(flat: np.ndarray, dims, channels: int, multichannel: bool) -> np.ndarray:
    if multichannel:
        return np.moveaxis(flat.reshape((channels,) + tuple(dims), order="F"), 0, 3)
    return flat.reshape(tuple(dims), order="F")


def _parse_header(header: dict, path: Path):
    try:
        dims = [int(d) for d in header["dims"]]
        spacing = [float(s) for s in header["spacing_mm"]]
        dtype = header["dtype"]
        kind = header["kind"]
        channels = int(header.get("channels", 1))
    except (KeyError, TypeError, ValueError) as e:
        raise VolumeFormatError(f"malformed header {path}: {e}") from e
    if kind not in _KIND_DTYPE:
        raise VolumeFormatError(f"malformed header {path}: unknown kind {kind!r}")
    if dtype != _KIND_DTYPE[kind]:
        raise VolumeFormatError(
            f"malformed header {path}: kind {kind!r} needs dtype {_KIND_DTYPE[kind]!r}, got {dtype!r}"
        )
    if channels < 1:
        raise VolumeFormatError(f"malformed header {path}: channels must be >= 1")
    try:
        meta = GridMeta(tuple(dims), tuple(spacing))
    except ValidationError as e:
        raise VolumeFormatError(f"malformed header {path}: {e}") from e
    return meta, dtype, kind, channels


def read_volume(path: Union[str, Path]) -> Volume:
    """
    Read a volume from its JSON header and raw body.

    Args:
        path: Path to the JSON header

    Returns:
        ScalarVolume, ProbabilityVolume, MaskVolume or LabelSetVolume per the header kind
    """
    path = Path(path)
    header = load_json(path)
    if not isinstance(header, dict):
        raise VolumeFormatError(f"malformed header {path}: expected a JSON object")
    meta, dtype, kind, channels = _parse_header(header, path)

    body_path = _body_path(path, header)
    if not body_path.exists():
        raise FileNotFoundError(f"No such file: {body_path}")
    raw = body_path.read_bytes()

    np_dtype = _NUMPY_DTYPES[dtype]
    values_per_voxel = 1 if kind in (KIND_MASK, KIND_LABELSET) else channels
    expected = meta.n_voxels * values_per_voxel * np_dtype.itemsize
    if len(raw) != expected:
        raise VolumeFormatError(
            f"size mismatch in {body_path}: header {meta.dims} x {values_per_voxel} "
            f"needs {expected} bytes, payload has {len(raw)}"
        )

    flat = np.frombuffer(raw, dtype=np_dtype)
    if dtype == DTYPE_F32 and not np.all(np.isfinite(flat)):
        raise VolumeFormatError(f"non-finite (NaN/inf) payload in {body_path}")

    logger.debug(f"Read {kind} volume {meta.dims} from {path}")
    if kind == KIND_PROB:
        return ProbabilityVolume(meta, _from_body(flat, meta.dims, channels, True))
    if kind == KIND_SCALAR:
        return ScalarVolume(meta, _from_body(flat, meta.dims, channels, channels > 1))
    if kind == KIND_MASK:
        if np.any(flat > 1):
            raise VolumeFormatError(f"mask payload in {body_path} has values other than 0/1")
        return MaskVolume(meta, _from_body(flat, meta.dims, 1, False))
    return LabelSetVolume(meta, channels, _from_body(flat, meta.dims, 1, False))


def write_volume(vol: Volume, path: Union[str, Path]):
    """
    Write a volume as a JSON header plus a raw body next to it.

    Args:
        vol: Volume to write
        path: Header path; the body goes to the same stem with suffix .raw
    """
    path = Path(path)
    if isinstance(vol, ProbabilityVolume):
        kind, channels, values = KIND_PROB, vol.K, _to_body(vol.data, vol.K)
    elif isinstance(vol, ScalarVolume):
        channels = vol.channels
        kind, values = KIND_SCALAR, _to_body(vol.data, channels if channels > 1 else 0)
    elif isinstance(vol, MaskVolume):
        kind, channels, values = KIND_MASK, 1, _to_body(vol.data, 0)
    elif isinstance(vol, LabelSetVolume):
        kind, channels, values = KIND_LABELSET, vol.K, _to_body(vol.data, 0)
    else:
        raise ValidationError(f"cannot write object of type {type(vol).__name__}")

    dtype = _KIND_DTYPE[kind]
    body_path = path.with_suffix(".raw")
    header = {
        "dims": list(vol.meta.dims),
        "spacing_mm": list(vol.meta.spacing),
        "dtype": dtype,
        "kind": kind,
        "channels": channels,
        "data_file": body_path.name,
    }
    try:
        payload = np.ascontiguousarray(values.astype(_NUMPY_DTYPES[dtype]))
        path.parent.mkdir(parents=True, exist_ok=True)
        body_path.write_bytes(payload.tobytes())
        save_json(header, path)
        logger.debug(f"Wrote {kind} volume {vol.meta.dims} to {path}")
    except OSError as e:
        logger.error(f"Failed to write volume {path}: {e}")
        raise
