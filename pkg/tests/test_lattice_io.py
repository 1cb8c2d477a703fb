import json

import numpy as np
import pytest

from SpatialFDR.errors import InvalidLatticeError
from SpatialFDR.fdr_core import RejectionMask
from SpatialFDR.lattice_grid import Lattice, TruthMask
from SpatialFDR.lattice_io import (atomic_write, decode_lattice,
                                   encode_lattice, encode_pgm, read_any,
                                   read_lattice, write_csv, write_lattice)


def test_header_and_payload_layout():
    lat = Lattice((2, 3), [0.0, 0.5, 1.0, 0.25, 0.75, 0.125])
    raw = encode_lattice(lat)
    header, body = raw.split(b"\n", 1)
    assert json.loads(header) == {"dims": [2, 3], "dtype": "f64"}
    np.testing.assert_array_equal(np.frombuffer(body, "<f8"), lat.values)


def test_mask_uses_one_byte_per_site(tmp_path):
    mask = TruthMask((2, 2), [True, False, False, True])
    path = tmp_path / "truth.lat"
    write_lattice(path, mask)
    raw = path.read_bytes()
    assert raw.split(b"\n", 1)[1] == bytes([1, 0, 0, 1])
    back = read_lattice(path)
    assert isinstance(back, TruthMask)
    assert back.values.tolist() == [True, False, False, True]
    as_rejection = read_lattice(path, mask_type=RejectionMask)
    assert isinstance(as_rejection, RejectionMask)


def test_three_dimensional_file(tmp_path):
    values = np.random.default_rng(3).random(24)
    path = tmp_path / "cube.lat"
    write_lattice(path, Lattice((2, 3, 4), values))
    back = read_lattice(path)
    assert back.dims == (2, 3, 4)
    np.testing.assert_array_equal(back.values, values)


def test_bad_payload_is_rejected():
    with pytest.raises(InvalidLatticeError):
        decode_lattice(b'{"dims": [2, 2], "dtype": "f64"}\n' + b"\0" * 8)
    with pytest.raises(InvalidLatticeError):
        decode_lattice(b'{"dims": [1, 1], "dtype": "i32"}\n\0\0\0\0')
    with pytest.raises(InvalidLatticeError):
        decode_lattice(b"no header")


def test_csv_is_exact(tmp_path):
    values = np.random.default_rng(4).random(12)
    path = tmp_path / "p.csv"
    write_csv(path, Lattice((3, 4), values))
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 3
    back = read_any(path)
    assert back.dims == (3, 4)
    np.testing.assert_array_equal(back.values, values)


def test_pgm_encoding():
    mask = RejectionMask((2, 3), [1, 0, 0, 0, 1, 1])
    raw = encode_pgm(mask)
    assert raw.startswith(b"P5\n3 2\n255\n")
    assert raw[-6:] == bytes([255, 0, 0, 0, 255, 255])
    cube = RejectionMask((2, 2, 3), np.zeros(12))
    assert encode_pgm(cube).startswith(b"P5\n3 4\n255\n")


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out" / "x.txt"
    atomic_write(target, "first")
    atomic_write(target, "second")
    assert target.read_text() == "second"
    assert [p.name for p in target.parent.iterdir()] == ["x.txt"]
