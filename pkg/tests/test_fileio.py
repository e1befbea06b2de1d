import numpy as np
import pytest

from polarct.errors import InputError
from polarct.fileio import (HEADER, MAGIC_FIELD, decode_array, decode_pgm, encode_array,
                            export_pgm, read_field, read_meta, read_projections, read_raster,
                            window, write_field, write_meta, write_projections, write_raster)


def test_field_roundtrip(tmp_path):
    f = np.random.default_rng(0).random(3 * 16).astype(np.float32)
    write_field(tmp_path / "a.fld", f, 3, {"N": 4, "mode": "3d"})
    g, meta = read_field(tmp_path / "a.fld")
    assert g.tobytes() == f.tobytes()
    assert meta == {"N": "4", "mode": "3d"}


def test_projection_roundtrip(tmp_path):
    d = np.random.default_rng(1).random((5, 6)).astype(np.float32)
    write_projections(tmp_path / "p.prj", d, 3, 2)
    e, meta = read_projections(tmp_path / "p.prj")
    assert e.shape == (5, 6) and e.tobytes() == d.tobytes() and meta == {}


def test_raster_roundtrip(tmp_path):
    img = np.random.default_rng(2).random((2, 4, 4)).astype(np.float32)
    write_raster(tmp_path / "r.img", img, {"k": "v"})
    out, meta = read_raster(tmp_path / "r.img")
    assert out.shape == img.shape and out.tobytes() == img.tobytes()


def test_wrong_kind_is_reported(tmp_path):
    write_raster(tmp_path / "r.img", np.zeros((2, 2)))
    with pytest.raises(InputError, match="byte offset 0"):
        read_field(tmp_path / "r.img")


@pytest.mark.parametrize("cut,offset", [(10, "byte offset 10"), (20, "byte offset 20"),
                                        (30, "byte offset 30")])
def test_truncation_names_offset(cut, offset):
    blob = encode_array(MAGIC_FIELD, np.ones((1, 4)))
    with pytest.raises(InputError, match=offset):
        decode_array(blob[:cut], MAGIC_FIELD)


def test_version_and_trailing_bytes():
    blob = bytearray(encode_array(MAGIC_FIELD, np.ones((1, 4))))
    with pytest.raises(InputError, match="byte offset 48"):
        decode_array(bytes(blob) + b"xx", MAGIC_FIELD)
    blob[8] = 7
    with pytest.raises(InputError, match="byte offset 8"):
        decode_array(bytes(blob), MAGIC_FIELD)
    blob[8] = 1
    blob[12] = 0
    with pytest.raises(InputError, match="byte offset 12"):
        decode_array(bytes(blob), MAGIC_FIELD)


def test_header_layout():
    blob = encode_array(MAGIC_FIELD, np.ones((2, 3)))
    assert blob[:8] == b"POLCTFLD"
    assert HEADER.unpack_from(blob)[1:] == (1, 2)
    assert len(blob) == 16 + 16 + 24


def test_meta_roundtrip_and_errors(tmp_path):
    p = tmp_path / "x"
    write_meta(p, {"a": 1, "b.c": "two words"})
    assert read_meta(p) == {"a": "1", "b.c": "two words"}
    (tmp_path / "x.meta").write_text("broken line\n")
    with pytest.raises(InputError):
        read_meta(p)


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        read_field(tmp_path / "nope")


def test_window():
    pix, lo, hi = window(np.array([[0.0, 0.5], [1.0, 2.0]]), 0.0, 1.0)
    assert pix.tolist() == [[0, 32768], [65535, 65535]]
    assert (lo, hi) == (0.0, 1.0)
    flat, _, _ = window(np.full((2, 2), 3.0))
    assert not flat.any()


def test_pgm_export(tmp_path):
    img = np.linspace(0, 1, 2 * 3 * 5).reshape(2, 3, 5)
    paths = export_pgm(tmp_path / "vol", img, meta={"source": "test"})
    assert [p.name for p in paths] == ["vol_0000.pgm", "vol_0001.pgm"]
    pix = decode_pgm(paths[1].read_bytes())
    assert pix.shape == (3, 5) and pix[-1, -1] == 65535
    meta = read_meta(paths[0])
    assert float(meta["window.min"]) == 0.0 and float(meta["window.max"]) == 1.0
    assert meta["source"] == "test"
    with pytest.raises(InputError):
        decode_pgm(b"P2\n1 1\n255\n0")


def test_atomic_write_leaves_no_temporaries(tmp_path):
    write_field(tmp_path / "a.fld", np.ones(4), 1, {"x": 1})
    write_field(tmp_path / "a.fld", np.zeros(4), 1, {"x": 2})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.fld", "a.fld.meta"]
    assert read_field(tmp_path / "a.fld")[0].tolist() == [0, 0, 0, 0]
