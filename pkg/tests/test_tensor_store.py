import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ckpt_curator.errors import BadMagic, IndexMismatch, RejectedValue, TruncatedFile
from ckpt_curator.tensor_store import (
    TensorMap,
    checkpoint_meta,
    encode,
    read_checkpoint,
    validate_compatible,
    write_checkpoint,
)


def test_roundtrip_small(tmp_path):
    tm = TensorMap({"w": np.array([[1, 2], [3, 4]], dtype=np.float32)})
    write_checkpoint(tm, tmp_path / "a.ckpt")
    back = read_checkpoint(tmp_path / "a.ckpt")
    assert back == tm
    assert back["w"].dtype == np.float32
    assert back["w"].tolist() == [[1, 2], [3, 4]]


def test_empty_map(tmp_path):
    write_checkpoint(TensorMap(), tmp_path / "e.ckpt")
    raw = (tmp_path / "e.ckpt").read_bytes()
    assert raw[14:] == b"[]"
    assert read_checkpoint(tmp_path / "e.ckpt") == TensorMap()


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_rejected(tmp_path, bad):
    tm = TensorMap({"w": np.array([1.0, bad], dtype=np.float32)})
    with pytest.raises(RejectedValue):
        write_checkpoint(tm, tmp_path / "x.ckpt")
    assert not (tmp_path / "x.ckpt").exists()


def test_byte_layout(tmp_path):
    tm = TensorMap({"b": np.float32(2.5), "a": np.arange(3, dtype=np.float32)})
    write_checkpoint(tm, tmp_path / "l.ckpt")
    raw = (tmp_path / "l.ckpt").read_bytes()
    assert raw[:5] == b"CKPT1" and raw[5] == 1
    (n,) = struct.unpack("<Q", raw[6:14])
    index = json.loads(raw[14 : 14 + n])
    assert [e["name"] for e in index] == ["a", "b"]
    assert index[0] == {"name": "a", "shape": [3], "offset": 0, "nbytes": 12}
    assert index[1] == {"name": "b", "shape": [], "offset": 12, "nbytes": 4}
    payload = raw[14 + n :]
    assert np.frombuffer(payload, dtype="<f4").tolist() == [0.0, 1.0, 2.0, 2.5]


def test_bad_magic(tmp_path):
    p = tmp_path / "m.ckpt"
    write_checkpoint(TensorMap({"w": np.ones(2)}), p)
    raw = bytearray(p.read_bytes())
    raw[0:1] = b"X"
    p.write_bytes(bytes(raw))
    with pytest.raises(BadMagic):
        read_checkpoint(p)


def test_truncated_payload(tmp_path):
    p = tmp_path / "t.ckpt"
    write_checkpoint(TensorMap({"w": np.ones(10), "z": np.ones(3)}), p)
    p.write_bytes(p.read_bytes()[:-6])
    with pytest.raises(TruncatedFile):
        read_checkpoint(p)


def test_truncated_header(tmp_path):
    p = tmp_path / "h.ckpt"
    p.write_bytes(b"CKPT1\x01\x00")
    with pytest.raises(TruncatedFile):
        read_checkpoint(p)


def test_index_mismatch_on_trailing_bytes(tmp_path):
    p = tmp_path / "i.ckpt"
    write_checkpoint(TensorMap({"w": np.ones(2)}), p)
    p.write_bytes(p.read_bytes() + b"\x00\x00\x00\x00")
    with pytest.raises(IndexMismatch):
        read_checkpoint(p)


def test_index_mismatch_on_bad_nbytes(tmp_path):
    head, payload = encode(TensorMap({"w": np.ones(2)}))
    index = [{"name": "w", "shape": [3], "offset": 0, "nbytes": 8}]
    blob = json.dumps(index).encode()
    p = tmp_path / "n.ckpt"
    p.write_bytes(b"CKPT1\x01" + struct.pack("<Q", len(blob)) + blob + payload)
    with pytest.raises(IndexMismatch):
        read_checkpoint(p)


def test_deterministic_bytes_and_digest(tmp_path, rng):
    tm = TensorMap({"x": rng.standard_normal((4, 3)), "a": rng.standard_normal(5)})
    m1 = write_checkpoint(tm, tmp_path / "1.ckpt")
    m2 = write_checkpoint(TensorMap(dict(reversed(list(tm.items())))), tmp_path / "2.ckpt")
    assert (tmp_path / "1.ckpt").read_bytes() == (tmp_path / "2.ckpt").read_bytes()
    assert m1.content_digest == m2.content_digest == checkpoint_meta(tmp_path / "1.ckpt").content_digest


def test_compatibility_reports():
    a = TensorMap({"w": np.ones(2), "w2": np.ones(2)})
    assert validate_compatible([a, a]).ok
    assert str(validate_compatible([a, TensorMap({"w": np.ones(2)})])) == 'MissingName("w2")'
    r = validate_compatible([TensorMap({"w": np.ones(2)}), TensorMap({"w": np.ones(3)})])
    assert (r.kind, r.name, r.shapes) == ("ShapeMismatch", "w", ((2,), (3,)))
    assert str(r) == 'ShapeMismatch("w", [2], [3])'


def test_tensormap_is_read_only():
    tm = TensorMap({"w": np.ones(2)})
    with pytest.raises(ValueError):
        tm["w"][0] = 5.0


names = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=8)
shapes = st.lists(st.integers(0, 4), max_size=3)
finite32 = st.floats(width=32, allow_nan=False, allow_infinity=False)


@st.composite
def tensor_maps(draw):
    entries = {}
    for name in draw(st.lists(names, max_size=5, unique=True)):
        shape = draw(shapes)
        n = int(np.prod(shape, dtype=np.int64))
        entries[name] = np.array(draw(st.lists(finite32, min_size=n, max_size=n)), dtype=np.float32).reshape(shape)
    return TensorMap(entries)


@settings(max_examples=150, deadline=None)
@given(tensor_maps())
def test_roundtrip_property(tmp_path_factory, tm):
    p = tmp_path_factory.mktemp("rt") / "p.ckpt"
    write_checkpoint(tm, p)
    back = read_checkpoint(p)
    assert back == tm
    for name in tm:
        assert back[name].tobytes() == tm[name].tobytes()
