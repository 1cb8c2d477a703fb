"""
Reading and writing lattices.

Raw format: one JSON header line {"dims": [...], "dtype": "f64"|"u8"}
terminated by a newline, followed by the site values in row-major order
(little-endian float64, or one byte 0/1 per site for masks).

2D lattices can also be exchanged as CSV (one row per lattice row). Masks
are exported to binary PGM (P5, 0 = retain, 255 = reject); 3D masks are
stacked slice by slice into dims[0] * dims[1] rows.

Every writer goes through atomic_write, which writes a temporary file in
the destination directory and moves it into place with os.replace.
"""

import io
import json
import logging
import os
import tempfile

import numpy as np

from .errors import InvalidLatticeError
from .lattice_grid import BooleanLattice, Lattice, TruthMask

logger = logging.getLogger("spatialfdr.io")

_DTYPES = {"f64": np.dtype("<f8"), "u8": np.dtype("u1")}


def atomic_write(path, data):
    """Write bytes or str to path via a temp file and os.replace."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with tempfile.NamedTemporaryFile(dir=directory, prefix=".tmp-",
                                     delete=False) as f:
        temp_path = f.name
        try:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        except BaseException:
            f.close()
            os.unlink(temp_path)
            raise
    os.replace(temp_path, path)
    logger.debug("Wrote %s (%d bytes)", path, len(data))


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def encode_lattice(lattice: Lattice) -> bytes:
    tag = "u8" if isinstance(lattice, BooleanLattice) else "f64"
    header = json.dumps({"dims": list(lattice.dims), "dtype": tag})
    body = lattice.values.astype(_DTYPES[tag]).tobytes()
    return header.encode("ascii") + b"\n" + body


def decode_lattice(raw: bytes, mask_type=TruthMask) -> Lattice:
    """
    Parse the raw format.

    Args:
        raw: File contents
        mask_type: Class used for "u8" payloads

    Returns:
        Lattice for "f64" payloads, mask_type for "u8" payloads
    """
    newline = raw.find(b"\n")
    if newline < 0:
        raise InvalidLatticeError("Missing JSON header line")
    try:
        header = json.loads(raw[:newline].decode("ascii"))
        dims = header["dims"]
        tag = header["dtype"]
    except (ValueError, KeyError, UnicodeDecodeError) as e:
        raise InvalidLatticeError(f"Bad lattice header: {e}") from None
    if tag not in _DTYPES:
        raise InvalidLatticeError(f"Unsupported dtype '{tag}'")

    body = raw[newline + 1:]
    expected = int(np.prod(dims)) * _DTYPES[tag].itemsize
    if len(body) != expected:
        raise InvalidLatticeError(
            f"Payload has {len(body)} bytes, header dims {dims} need "
            f"{expected}")
    values = np.frombuffer(body, dtype=_DTYPES[tag])
    if tag == "u8":
        if values.size and values.max() > 1:
            raise InvalidLatticeError("Mask bytes must be 0 or 1")
        return mask_type(dims, values.astype(bool))
    return Lattice(dims, values.astype(np.float64))


def write_lattice(path, lattice: Lattice):
    atomic_write(path, encode_lattice(lattice))


def read_lattice(path, mask_type=TruthMask) -> Lattice:
    with open(path, "rb") as f:
        return decode_lattice(f.read(), mask_type=mask_type)


def write_csv(path, lattice: Lattice):
    """Write a 2D lattice as CSV, one row per lattice row."""
    if lattice.ndim != 2:
        raise InvalidLatticeError("CSV export needs a 2D lattice")
    buffer = io.StringIO()
    if isinstance(lattice, BooleanLattice):
        np.savetxt(buffer, lattice.as_array().astype(np.uint8), fmt="%d",
                   delimiter=",")
    else:
        # 17 significant digits round-trip float64 exactly
        np.savetxt(buffer, lattice.as_array(), fmt="%.17g", delimiter=",")
    atomic_write(path, buffer.getvalue())


def read_csv(path) -> Lattice:
    array = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return Lattice.from_array(array)


def encode_pgm(mask: BooleanLattice) -> bytes:
    if mask.ndim == 2:
        rows, cols = mask.dims
    else:
        rows, cols = mask.dims[0] * mask.dims[1], mask.dims[2]
    pixels = np.where(mask.values, 255, 0).astype(np.uint8)
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def write_pgm(path, mask: BooleanLattice):
    atomic_write(path, encode_pgm(mask))


def read_any(path, mask_type=TruthMask) -> Lattice:
    """Read a raw-format file, or CSV when the name ends in .csv."""
    if str(path).lower().endswith(".csv"):
        return read_csv(path)
    return read_lattice(path, mask_type=mask_type)
