import numpy as np
import pytest

from anisomhd.checkpoint import HEADER_SIZE, load_pair, read_components, save_pair, write_components
from anisomhd.spectral import FieldPair, VectorField, make_grid


def test_roundtrip(tmp_path, rng):
    g = make_grid(8, 6, 4, L=1.5)
    u = rng.normal(size=(3,) + g.shape)
    b = rng.normal(size=(3,) + g.shape)
    p = FieldPair(VectorField(g, u, "real"), VectorField(g, b, "real"), 2.5)
    path = tmp_path / "state.bin"
    save_pair(path, p)
    assert path.stat().st_size == HEADER_SIZE + 6 * g.npoints * 8
    q = load_pair(path)
    assert q.grid == g and q.time == 2.5
    assert np.array_equal(q.u.data, u) and np.array_equal(q.b.data, b)


def test_x1_fastest_on_disk(tmp_path):
    g = make_grid(4, 4, 4)
    data = np.zeros(g.shape)
    data[1, 0, 0] = 7.0
    path = tmp_path / "one.bin"
    write_components(path, g, data)
    body = np.frombuffer(path.read_bytes()[HEADER_SIZE:], dtype="<f8")
    assert body[1] == 7.0


def test_rejects_bad_magic_and_size(tmp_path):
    g = make_grid(4, 4, 4)
    path = tmp_path / "x.bin"
    write_components(path, g, np.zeros(g.shape))
    raw = bytearray(path.read_bytes())
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXXXXXX" + bytes(raw[8:]))
    with pytest.raises(ValueError, match="magic"):
        read_components(bad)
    short = tmp_path / "short.bin"
    short.write_bytes(bytes(raw[:-8]))
    with pytest.raises(ValueError, match="data bytes"):
        read_components(short)
