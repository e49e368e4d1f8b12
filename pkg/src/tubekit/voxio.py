"""Volume file I/O.

Two on-disk formats are supported:

* NIfTI-1 single file (``.nii`` or ``.nii.gz``), datatypes uint8, int16,
  uint16 and float32. Only ``pixdim`` spacing is honoured; qform/sform
  orientation matrices are ignored with a warning.
* Raw little-endian voxel block (``.bin``) with a JSON sidecar describing
  ``dims``, ``spacing``, ``dtype`` and ``order``. The order is always
  ``"x-fastest"``.

Writes are atomic: content goes to a temporary file in the target
directory which is then renamed over the destination. Gzip members are
written with a zero mtime so identical volumes produce identical bytes.
"""

from __future__ import annotations

import gzip
import io
import json
import os
import struct
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .errors import VolumeFormatError
from .voxgrid import BinaryMask, LabelVolume, ScalarVolume

HEADER_SIZE = 348
MAGIC_SINGLE = b"n+1\x00"
MAGIC_PAIR = b"ni1\x00"
VOX_OFFSET = 352

# supported NIfTI datatype code -> numpy dtype
_DTYPE_BY_CODE = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    16: np.dtype(np.float32),
    512: np.dtype(np.uint16),
}
_CODE_BY_DTYPE = {dt: code for code, dt in _DTYPE_BY_CODE.items()}

# names for codes we recognise but do not support, used in error messages
_UNSUPPORTED_NAMES = {
    0: "unknown",
    1: "binary",
    8: "int32",
    32: "complex64",
    64: "float64",
    128: "rgb24",
    256: "int8",
    768: "uint32",
    1024: "int64",
    1280: "uint64",
    1536: "float128",
    1792: "complex128",
    2048: "complex256",
    2304: "rgba32",
}

_RAW_DTYPES = {
    "uint8": np.dtype(np.uint8),
    "int16": np.dtype(np.int16),
    "uint16": np.dtype(np.uint16),
    "int32": np.dtype(np.int32),
    "float32": np.dtype(np.float32),
    "float64": np.dtype(np.float64),
}


class OrientationIgnoredWarning(UserWarning):
    """Raised once per read when a file carries qform/sform orientation."""


Volume = LabelVolume | ScalarVolume | BinaryMask


def read_volume(path: str | Path) -> Volume:
    """Read a volume from ``.nii``, ``.nii.gz``, ``.bin`` or ``.json``.

    Integer payloads load as :class:`LabelVolume`, float payloads as
    :class:`ScalarVolume`. Raw sidecars that declare ``"kind": "mask"``
    load as :class:`BinaryMask`.
    """
    path = Path(path)
    kind = _format_of(path)
    if kind == "nifti":
        return _read_nifti(path)
    return _read_raw(path)


def write_volume(volume: Volume, path: str | Path) -> Path:
    """Write a volume; the format follows the file extension.

    Labels are stored as uint8 when all values fit, uint16 otherwise.
    Scalars are stored as float32. Masks are stored as uint8 zeros and
    ones. Returns the path of the primary file written.
    """
    path = Path(path)
    kind = _format_of(path)
    if kind == "nifti":
        return _write_nifti(volume, path)
    return _write_raw(volume, path)


def _format_of(path: Path) -> str:
    name = path.name.lower()
    if name.endswith(".nii") or name.endswith(".nii.gz"):
        return "nifti"
    if name.endswith(".bin") or name.endswith(".json"):
        return "raw"
    raise VolumeFormatError(
        f"unrecognised volume extension on {path.name!r}; "
        "expected .nii, .nii.gz, .bin or .json"
    )


def _atomic_write(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- NIfTI-1


def _read_file_bytes(path: Path) -> bytes:
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise VolumeFormatError(f"volume file not found: {path}") from None
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise VolumeFormatError(f"corrupt gzip stream in {path.name}: {exc}") from exc
    return raw


def _read_nifti(path: Path) -> Volume:
    raw = _read_file_bytes(path)
    if len(raw) < HEADER_SIZE:
        raise VolumeFormatError(
            f"file too short for a NIfTI-1 header: {len(raw)} bytes, need {HEADER_SIZE}"
        )
    if struct.unpack_from("<i", raw, 0)[0] == HEADER_SIZE:
        end = "<"
    elif struct.unpack_from(">i", raw, 0)[0] == HEADER_SIZE:
        end = ">"
    else:
        raise VolumeFormatError("not a NIfTI-1 file: sizeof_hdr is not 348 in either byte order")

    magic = raw[344:348]
    if magic == MAGIC_PAIR:
        raise VolumeFormatError("two-file NIfTI (magic 'ni1') is not supported; expected 'n+1'")
    if magic != MAGIC_SINGLE:
        raise VolumeFormatError(f"bad NIfTI magic {magic!r}; expected 'n+1'")

    dim = struct.unpack_from(end + "8h", raw, 40)
    ndim = dim[0]
    if ndim < 3:
        raise VolumeFormatError(f"expected a 3D volume, header declares {ndim} dims")
    if ndim > 3 and any(d > 1 for d in dim[4 : ndim + 1]):
        raise VolumeFormatError(
            f"expected a 3D volume, header declares {ndim} dims with non-trivial trailing extents"
        )
    nx, ny, nz = (int(d) for d in dim[1:4])
    if min(nx, ny, nz) < 1:
        raise VolumeFormatError(f"non-positive dims in header: ({nx}, {ny}, {nz})")

    (datatype,) = struct.unpack_from(end + "h", raw, 70)
    base = _DTYPE_BY_CODE.get(datatype)
    if base is None:
        name = _UNSUPPORTED_NAMES.get(datatype)
        detail = f" ({name})" if name else ""
        raise VolumeFormatError(f"unsupported NIfTI datatype code {datatype}{detail}")

    pixdim = struct.unpack_from(end + "8f", raw, 76)
    spacing = tuple(float(p) for p in pixdim[1:4])
    if any(s <= 0 or not np.isfinite(s) for s in spacing):
        raise VolumeFormatError(f"non-positive voxel spacing in header: {spacing}")

    (vox_offset,) = struct.unpack_from(end + "f", raw, 108)
    offset = int(vox_offset)
    if offset < HEADER_SIZE:
        raise VolumeFormatError(f"vox_offset {vox_offset} points inside the header")
    slope, inter = struct.unpack_from(end + "2f", raw, 112)
    qform, sform = struct.unpack_from(end + "2h", raw, 252)
    if qform > 0 or sform > 0:
        warnings.warn(
            f"{path.name}: qform/sform orientation is ignored; only pixdim spacing is used",
            OrientationIgnoredWarning,
            stacklevel=3,
        )

    expected = nx * ny * nz * base.itemsize
    payload = raw[offset:]
    if len(payload) < expected:
        raise VolumeFormatError(
            f"truncated voxel payload: expected {expected} bytes, found {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=base.newbyteorder(end), count=nx * ny * nz)
    arr = arr.astype(base, copy=True).reshape((nz, ny, nx))

    scaled = slope not in (0.0, 1.0) or (slope == 1.0 and inter != 0.0)
    if np.issubdtype(base, np.floating):
        if scaled:
            arr = (arr.astype(np.float32) * np.float32(slope)) + np.float32(inter)
        return ScalarVolume(arr.astype(np.float32), spacing)
    if scaled:
        out = arr.astype(np.float32) * np.float32(slope) + np.float32(inter)
        return ScalarVolume(out, spacing)
    if arr.min() < 0:
        # signed intensities are not labels
        return ScalarVolume(arr.astype(np.float32), spacing)
    return LabelVolume(arr, spacing)


def _storage_array(volume: Volume) -> np.ndarray:
    if isinstance(volume, BinaryMask):
        return volume.data.astype(np.uint8)
    if isinstance(volume, LabelVolume):
        peak = int(volume.data.max()) if volume.data.size else 0
        if peak <= np.iinfo(np.uint8).max:
            return volume.data.astype(np.uint8)
        if peak <= np.iinfo(np.uint16).max:
            return volume.data.astype(np.uint16)
        raise VolumeFormatError(
            f"label value {peak} exceeds uint16; supported label dtypes are uint8 and uint16"
        )
    return volume.data.astype(np.float32)


def _write_nifti(volume: Volume, path: Path) -> Path:
    arr = _storage_array(volume)
    code = _CODE_BY_DTYPE[arr.dtype]
    nx, ny, nz = volume.dims
    sx, sy, sz = volume.spacing

    hdr = bytearray(VOX_OFFSET)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    struct.pack_into("<8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, code)
    struct.pack_into("<h", hdr, 72, arr.dtype.itemsize * 8)
    struct.pack_into("<8f", hdr, 76, 1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, float(VOX_OFFSET))
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)
    struct.pack_into("<b", hdr, 123, 2)  # spatial units: millimetres
    descrip = b"tubekit volume"
    struct.pack_into(f"<{len(descrip)}s", hdr, 148, descrip)
    struct.pack_into("<4s", hdr, 344, MAGIC_SINGLE)

    body = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes()
    blob = bytes(hdr) + body
    if path.name.lower().endswith(".gz"):
        buf = io.BytesIO()
        with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
            gz.write(blob)
        blob = buf.getvalue()
    _atomic_write(path, blob)
    return path


# ------------------------------------------------------------ raw sidecar


def _raw_stem(path: Path) -> Path:
    name = path.name
    for suffix in (".bin", ".json"):
        if name.lower().endswith(suffix):
            return path.with_name(name[: -len(suffix)])
    return path


def _read_raw(path: Path) -> Volume:
    stem = _raw_stem(path)
    bin_path = stem.with_name(stem.name + ".bin")
    json_path = stem.with_name(stem.name + ".json")
    if not json_path.exists():
        raise VolumeFormatError(f"missing raw sidecar {json_path.name}")
    if not bin_path.exists():
        raise VolumeFormatError(f"missing raw payload {bin_path.name}")
    try:
        meta = json.loads(json_path.read_text())
    except json.JSONDecodeError as exc:
        raise VolumeFormatError(f"malformed sidecar {json_path.name}: {exc}") from exc

    for key in ("dims", "spacing", "dtype", "order"):
        if key not in meta:
            raise VolumeFormatError(f"sidecar {json_path.name} lacks required key {key!r}")
    if meta["order"] != "x-fastest":
        raise VolumeFormatError(
            f"unsupported voxel order {meta['order']!r}; only 'x-fastest' is defined"
        )
    dims = meta["dims"]
    if len(dims) != 3 or any(int(d) < 1 for d in dims):
        raise VolumeFormatError(f"bad dims in sidecar: {dims}")
    nx, ny, nz = (int(d) for d in dims)
    spacing = tuple(float(s) for s in meta["spacing"])
    dtype = _RAW_DTYPES.get(meta["dtype"])
    if dtype is None:
        raise VolumeFormatError(
            f"unsupported raw dtype {meta['dtype']!r}; "
            f"expected one of {sorted(_RAW_DTYPES)}"
        )

    payload = bin_path.read_bytes()
    expected = nx * ny * nz * dtype.itemsize
    if len(payload) != expected:
        raise VolumeFormatError(
            f"raw payload size mismatch in {bin_path.name}: "
            f"expected {expected} bytes, found {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=dtype.newbyteorder("<"))
    arr = arr.astype(dtype, copy=True).reshape((nz, ny, nx))

    kind = meta.get("kind")
    if kind == "mask":
        return BinaryMask(arr != 0, spacing)
    if np.issubdtype(dtype, np.floating):
        return ScalarVolume(arr, spacing)
    if kind == "scalar":
        return ScalarVolume(arr.astype(np.float32), spacing)
    return LabelVolume(arr, spacing)


def _write_raw(volume: Volume, path: Path) -> Path:
    stem = _raw_stem(path)
    bin_path = stem.with_name(stem.name + ".bin")
    json_path = stem.with_name(stem.name + ".json")

    if isinstance(volume, BinaryMask):
        kind = "mask"
    elif isinstance(volume, LabelVolume):
        kind = "label"
    else:
        kind = "scalar"
    arr = _storage_array(volume)
    nx, ny, nz = volume.dims
    meta = {
        "dims": [nx, ny, nz],
        "spacing": [float(s) for s in volume.spacing],
        "dtype": arr.dtype.name,
        "order": "x-fastest",
        "kind": kind,
    }
    body = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes()
    _atomic_write(bin_path, body)
    _atomic_write(json_path, (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode())
    return bin_path
