"""Volumetric data model and file I/O for intensity images and label maps.

Grids are axis-aligned: a voxel index ``(i, j, k)`` sits at physical position
``origin + (index + 0.5) * spacing`` millimeters (voxel-center convention).
Arrays are indexed ``[x, y, z]``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptHeader,
    EmptyMass,
    GridMismatch,
    InvalidData,
    InvalidLabel,
    IoError,
    UnsupportedFormat,
)

BACKGROUND = 0
LVC = 1
LVM = 2
RVC = 3

FOREGROUND_CLASSES = (LVC, LVM, RVC)
CLASS_NAMES = {LVC: "lvc", LVM: "lvm", RVC: "rvc"}

_Triple = tuple[float, float, float]


def _as_triple(values, kind=float) -> tuple:
    t = tuple(kind(v) for v in values)
    if len(t) != 3:
        raise InvalidData(f"expected 3 components, got {len(t)}")
    return t


@dataclass(frozen=True)
class Volume:
    """Scalar intensity grid with physical spacing and origin (mm)."""

    data: np.ndarray
    spacing: _Triple
    origin: _Triple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise InvalidData(f"volume data must be 3-D, got shape {data.shape}")
        if data.dtype not in (np.float32, np.float64):
            data = data.astype(np.float32)
        data = np.ascontiguousarray(data)
        if not np.all(np.isfinite(data)):
            raise InvalidData("volume contains non-finite values")
        spacing = _as_triple(self.spacing)
        origin = _as_triple(self.origin)
        if any(s <= 0 or not np.isfinite(s) for s in spacing):
            raise InvalidData(f"spacing must be positive, got {spacing}")
        if any(not np.isfinite(o) for o in origin):
            raise InvalidData(f"origin must be finite, got {origin}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def grid(self) -> tuple:
        return (self.dims, self.spacing, self.origin)

    def same_grid(self, other) -> bool:
        return self.grid() == other.grid()


@dataclass(frozen=True)
class LabelMap:
    """Integer class grid on the same geometry as a Volume.

    Class codes: 0 background, 1 LV cavity, 2 LV myocardium, 3 RV cavity.
    """

    labels: np.ndarray
    spacing: _Triple
    origin: _Triple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 3:
            raise InvalidData(f"label data must be 3-D, got shape {labels.shape}")
        if labels.dtype != np.uint8:
            if not np.issubdtype(labels.dtype, np.integer):
                if not np.all(labels == np.round(labels)):
                    raise InvalidLabel("label map contains non-integer values")
            labels = labels.astype(np.int64)
        if labels.size and (labels.min() < 0 or labels.max() > max(FOREGROUND_CLASSES)):
            bad = int(labels.max() if labels.max() > 3 else labels.min())
            raise InvalidLabel(f"label value {bad} outside {{0..3}}")
        labels = np.ascontiguousarray(labels.astype(np.uint8))
        spacing = _as_triple(self.spacing)
        origin = _as_triple(self.origin)
        if any(s <= 0 or not np.isfinite(s) for s in spacing):
            raise InvalidData(f"spacing must be positive, got {spacing}")
        if any(not np.isfinite(o) for o in origin):
            raise InvalidData(f"origin must be finite, got {origin}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.labels.shape

    def grid(self) -> tuple:
        return (self.dims, self.spacing, self.origin)

    def same_grid(self, other) -> bool:
        return self.grid() == other.grid()

    def classes_present(self) -> tuple[int, ...]:
        return tuple(c for c in FOREGROUND_CLASSES if np.any(self.labels == c))


@dataclass(frozen=True)
class ReferenceSet:
    """Ordered image/label atlas pairs used by every RCA run."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise InvalidData("reference set must contain at least one entry")
        for n, (img, lab) in enumerate(entries):
            if not img.same_grid(lab):
                raise GridMismatch(f"reference {n}: image/label grids differ")
            missing = [c for c in FOREGROUND_CLASSES if not np.any(lab.labels == c)]
            if missing:
                raise InvalidData(
                    f"reference {n}: missing foreground class(es) {missing}"
                )
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, n):
        return self.entries[n]

    @property
    def count(self) -> int:
        return len(self.entries)

    def subset(self, indices) -> "ReferenceSet":
        return ReferenceSet(tuple(self.entries[i] for i in indices))


def require_same_grid(a, b) -> None:
    if not a.same_grid(b):
        raise GridMismatch(f"grids differ: {a.grid()} vs {b.grid()}")


def voxel_centers_mm(obj, index_array: np.ndarray) -> np.ndarray:
    """Physical centers (mm) of the given ``(n, 3)`` voxel indices."""
    idx = np.asarray(index_array, dtype=np.float64)
    spacing = np.asarray(obj.spacing)
    origin = np.asarray(obj.origin)
    return origin + (idx + 0.5) * spacing


def center_of_mass(obj) -> tuple[float, float, float]:
    """Weighted mean position in physical millimeters.

    Volumes are weighted by intensity, label maps by foreground membership.
    Raises ``EmptyMass`` when the total weight is zero.
    """
    if isinstance(obj, LabelMap):
        weights = (obj.labels > 0).astype(np.float64)
    else:
        weights = obj.data.astype(np.float64)
    total = weights.sum()
    if total == 0.0:
        raise EmptyMass("zero total mass: center of mass undefined")
    com_index = np.empty(3)
    for axis in range(3):
        marginal = weights.sum(axis=tuple(a for a in range(3) if a != axis))
        com_index[axis] = np.dot(marginal, np.arange(obj.dims[axis])) / total
    com = np.asarray(obj.origin) + (com_index + 0.5) * np.asarray(obj.spacing)
    return tuple(float(c) for c in com)


# ---------------------------------------------------------------------------
# NIfTI-1 I/O (strict single-file subset)
# ---------------------------------------------------------------------------

_HDR_FMT = (
    "<i"  # sizeof_hdr
    "10s18sihcB"  # data_type, db_name, extents, session_error, regular, dim_info
    "8h"  # dim
    "3f"  # intent_p1..p3
    "hhhh"  # intent_code, datatype, bitpix, slice_start
    "8f"  # pixdim
    "fff"  # vox_offset, scl_slope, scl_inter
    "hBB"  # slice_end, slice_code, xyzt_units
    "ffff"  # cal_max, cal_min, slice_duration, toffset
    "ii"  # glmax, glmin
    "80s24s"  # descrip, aux_file
    "hh"  # qform_code, sform_code
    "6f"  # quatern_b/c/d, qoffset_x/y/z
    "4f4f4f"  # srow_x, srow_y, srow_z
    "16s4s"  # intent_name, magic
)
assert struct.calcsize(_HDR_FMT) == 348

_MAGIC = b"n+1\x00"
_VOX_OFFSET = 352.0

# NIfTI datatype code -> numpy dtype (little-endian)
_DTYPES = {
    2: np.dtype("<u1"),
    4: np.dtype("<i2"),
    8: np.dtype("<i4"),
    16: np.dtype("<f4"),
    64: np.dtype("<f8"),
}
_DTYPE_CODES = {v: k for k, v in _DTYPES.items()}


def save_nifti(obj, path) -> None:
    """Write a Volume or LabelMap as a single-file NIfTI-1 image.

    Volumes keep their float dtype; label maps are stored as uint8. The
    origin is written to the qoffset fields (qform identity rotation).
    """
    if isinstance(obj, LabelMap):
        payload = obj.labels
    else:
        payload = obj.data
        if not np.all(np.isfinite(payload)):
            raise InvalidData("refusing to save non-finite voxel data")
    dtype = np.dtype(payload.dtype).newbyteorder("<")
    code = _DTYPE_CODES[dtype]
    dim = (3, *obj.dims, 1, 1, 1, 1)
    pixdim = (1.0, *obj.spacing, 0.0, 0.0, 0.0, 0.0)
    header = struct.pack(
        _HDR_FMT,
        348,
        b"", b"", 0, 0, b"r", 0,
        *dim,
        0.0, 0.0, 0.0,
        0, code, dtype.itemsize * 8, 0,
        *pixdim,
        _VOX_OFFSET, 0.0, 0.0,
        0, 0, 2,  # xyzt_units: millimeters
        0.0, 0.0, 0.0, 0.0,
        0, 0,
        b"rcaqc", b"",
        1, 0,
        0.0, 0.0, 0.0, *obj.origin,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        b"", _MAGIC,
    )
    body = np.asarray(payload, dtype=dtype).tofile
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(b"\x00" * 4)  # pad to vox_offset=352
            fh.write(np.asarray(payload, dtype=dtype).tobytes(order="F"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_nifti(path, as_labels: bool = False):
    """Load a single-file NIfTI-1 image as a Volume (or LabelMap).

    Only the strict subset produced by :func:`save_nifti` plus integer and
    scaled variants is accepted: little-endian, magic ``n+1``, 3-D, datatype
    one of uint8/int16/int32/float32/float64.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if raw[:2] == b"\x1f\x8b":
        raise UnsupportedFormat("compressed NIfTI (.nii.gz) is not supported")
    if len(raw) < 352:
        raise CorruptHeader(f"file too short for a NIfTI-1 header: {len(raw)} bytes")
    fields = struct.unpack_from(_HDR_FMT, raw, 0)
    sizeof_hdr = fields[0]
    if sizeof_hdr != 348:
        if sizeof_hdr == 1543569408:  # 348 byte-swapped
            raise UnsupportedFormat("big-endian NIfTI is not supported")
        raise CorruptHeader(f"bad sizeof_hdr: {sizeof_hdr}")
    magic = fields[-1]
    if magic != _MAGIC:
        raise UnsupportedFormat(f"not single-file NIfTI-1 (magic {magic!r})")
    dim = fields[7:15]
    if dim[0] != 3:
        raise UnsupportedFormat(f"only 3-D images supported, dim[0]={dim[0]}")
    dims = tuple(int(d) for d in dim[1:4])
    if any(d < 1 for d in dims):
        raise CorruptHeader(f"invalid dims {dims}")
    datatype = fields[19]
    if datatype not in _DTYPES:
        raise UnsupportedFormat(f"unsupported datatype code {datatype}")
    pixdim = fields[22:30]
    spacing = tuple(float(s) for s in pixdim[1:4])
    if any(not np.isfinite(s) or s <= 0 for s in spacing):
        raise CorruptHeader(f"invalid spacing {spacing}")
    vox_offset = fields[30]
    if not np.isfinite(vox_offset) or vox_offset < 348:
        raise CorruptHeader(f"invalid vox_offset {vox_offset}")
    scl_slope, scl_inter = float(fields[31]), float(fields[32])
    origin = tuple(float(v) for v in fields[45:48])
    if any(not np.isfinite(o) for o in origin):
        raise CorruptHeader(f"invalid origin {origin}")

    dtype = _DTYPES[datatype]
    count = int(np.prod(dims))
    start = int(vox_offset)
    expected = start + count * dtype.itemsize
    if len(raw) < expected:
        raise CorruptHeader(
            f"payload truncated: need {expected} bytes, file has {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype=dtype, count=count, offset=start)
    data = flat.reshape(dims, order="F")
    if scl_slope != 0.0:
        data = data * np.float32(scl_slope) + np.float32(scl_inter)

    if as_labels:
        values = np.asarray(data)
        if not np.all(values == np.round(values)):
            raise InvalidLabel("label file contains non-integer voxel values")
        values = values.astype(np.int64)
        if values.size and (values.min() < 0 or values.max() > 3):
            bad = int(values.max() if values.max() > 3 else values.min())
            raise InvalidLabel(f"label value {bad} outside {{0..3}}")
        return LabelMap(values.astype(np.uint8), spacing, origin)
    if data.dtype not in (np.float32, np.float64):
        data = data.astype(np.float32)
    return Volume(data, spacing, origin)


# ---------------------------------------------------------------------------
# Raw test format: 24-byte header (3xu32 dims, 3xf32 spacing) + payload
# ---------------------------------------------------------------------------


def save_raw(obj, path) -> None:
    """Write the header-light raw test format (float32 volume / uint8 labels)."""
    if isinstance(obj, LabelMap):
        payload = obj.labels.astype(np.uint8)
    else:
        payload = obj.data.astype(np.float32)
    header = struct.pack("<3I3f", *obj.dims, *obj.spacing)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes(order="F"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_raw(path, as_labels: bool = False):
    """Load the raw test format written by :func:`save_raw` (origin is zero)."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(raw) < 24:
        raise CorruptHeader("raw file shorter than its 24-byte header")
    nx, ny, nz, sx, sy, sz = struct.unpack_from("<3I3f", raw, 0)
    dims = (nx, ny, nz)
    if any(d < 1 for d in dims):
        raise CorruptHeader(f"invalid dims {dims}")
    dtype = np.dtype("<u1") if as_labels else np.dtype("<f4")
    count = int(np.prod(dims))
    if len(raw) < 24 + count * dtype.itemsize:
        raise CorruptHeader("raw payload truncated")
    flat = np.frombuffer(raw, dtype=dtype, count=count, offset=24)
    data = flat.reshape(dims, order="F")
    if as_labels:
        return LabelMap(data.copy(), (sx, sy, sz))
    return Volume(data.copy(), (sx, sy, sz))
