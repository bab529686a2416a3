import numpy as np

from wsgat.checkpoint import save_arrays, load_arrays, MAGIC


def test_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {
        "layer.w0": rng.standard_normal((3, 5)),
        "layer.b0": rng.standard_normal(5),
        "scalar": np.array(2.5),
    }
    p = tmp_path / "m.ckpt"
    save_arrays(p, arrays)
    loaded = load_arrays(p)
    assert set(loaded) == set(arrays)
    for k in arrays:
        assert loaded[k].shape == np.asarray(arrays[k]).shape
        assert np.array_equal(loaded[k], arrays[k])


def test_layout_is_little_endian_with_magic(tmp_path):
    p = tmp_path / "m.ckpt"
    save_arrays(p, {"x": np.array([1.0, 2.0])})
    blob = p.read_bytes()
    assert blob[:5] == MAGIC
    # count=1, name_len=1, 'x', ndim=1, dim=2, then two float64 LE
    assert int.from_bytes(blob[5:9], "little") == 1
    assert int.from_bytes(blob[9:13], "little") == 1
    assert blob[13:14] == b"x"
    assert int.from_bytes(blob[14:18], "little") == 1
    assert int.from_bytes(blob[18:26], "little") == 2
    assert np.frombuffer(blob[26:42], dtype="<f8").tolist() == [1.0, 2.0]


def test_deterministic_bytes(tmp_path):
    arrays = {"b": np.ones(3), "a": np.zeros((2, 2))}
    p1, p2 = tmp_path / "1.ckpt", tmp_path / "2.ckpt"
    save_arrays(p1, arrays)
    save_arrays(p2, dict(reversed(list(arrays.items()))))
    assert p1.read_bytes() == p2.read_bytes()  # sorted by name
