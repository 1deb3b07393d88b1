import json

import numpy as np
import pytest

from cdftlab.density import DensityPair, Provenance, validate_pair
from cdftlab.fieldio import as_vector, read_field, read_pair, write_field, write_pair
from cdftlab.fields import ComplexField, ScalarField, VectorField, grid_1d, grid_3d
from cdftlab import sampling


@pytest.mark.parametrize("encoding", ["binary", "text"])
def test_scalar_roundtrip(tmp_path, encoding):
    g = grid_3d(6, -2.0, 2.0)
    rng = np.random.default_rng(0)
    f = ScalarField(g, rng.normal(size=g.shape))
    path = tmp_path / "f.fld"
    write_field(path, f, encoding)
    back = read_field(path)
    assert isinstance(back, ScalarField)
    assert back.grid.same_as(g)
    assert np.array_equal(back.values, f.values)


@pytest.mark.parametrize("encoding", ["binary", "text"])
def test_vector_roundtrip(tmp_path, encoding):
    g = grid_3d(5, 0.0, 1.0)
    rng = np.random.default_rng(1)
    u = VectorField(g, rng.normal(size=(3,) + g.shape))
    path = tmp_path / "u.fld"
    write_field(path, u, encoding)
    back = read_field(path)
    assert isinstance(back, VectorField)
    assert np.array_equal(back.components, u.components)


def test_complex_roundtrip(tmp_path):
    g = grid_1d(12, -1.0, 1.0)
    rng = np.random.default_rng(2)
    f = ComplexField(g, rng.normal(size=12) + 1j * rng.normal(size=12))
    path = tmp_path / "c.fld"
    write_field(path, f)
    back = read_field(path)
    assert isinstance(back, ComplexField)
    assert np.array_equal(back.values, f.values)


def test_header_is_json_line(tmp_path):
    g = grid_1d(4, 0.0, 1.0)
    path = tmp_path / "h.fld"
    write_field(path, ScalarField(g, np.arange(4.0)), "text")
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
    assert header == {
        "dim": 1,
        "shape": [4],
        "spacing": [0.25],
        "origin": [0.0],
        "components": 1,
        "encoding": "text",
    }


def test_one_dim_vector_reads_as_scalar(tmp_path):
    # documented 1D ambiguity: one component reads back scalar; pair
    # manifests re-wrap by role
    g = grid_1d(6, 0.0, 1.0)
    u = VectorField(g, np.arange(6.0)[None, :])
    path = tmp_path / "u1.fld"
    write_field(path, u)
    back = read_field(path)
    assert isinstance(back, ScalarField)
    assert np.array_equal(as_vector(back).components, u.components)


def test_truncated_body_rejected(tmp_path):
    g = grid_1d(8, 0.0, 1.0)
    path = tmp_path / "t.fld"
    write_field(path, ScalarField(g, np.ones(8)))
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ValueError):
        read_field(path)


def test_pair_roundtrip(tmp_path):
    grid = sampling.default_grid(8)
    pair = sampling.curl_free_pair(grid, 1, seed=4)
    manifest = write_pair(tmp_path / "pair", pair, 1, tolerances={"curl": 1e-6})
    back, n, tols = read_pair(manifest)
    assert n == 1
    assert tols == {"curl": 1e-6}
    assert back.provenance is Provenance.VALIDATED_YN
    assert np.array_equal(back.rho.values, pair.rho.values)
    assert np.array_equal(back.jp.components, pair.jp.components)


def test_pair_roundtrip_1d(tmp_path):
    g = grid_1d(32, -4.0, 4.0)
    x = g.axis_coords(0)
    rho = np.exp(-(x**2))
    rho /= rho.sum() * g.cell_volume
    pair = DensityPair(ScalarField(g, rho), VectorField(g, (0.1 * rho)[None, :]))
    validate_pair(pair, 1)
    manifest = write_pair(tmp_path / "p1", pair, 1)
    back, n, _ = read_pair(manifest)
    assert back.grid.dim == 1
    assert np.array_equal(back.jp.components, pair.jp.components)
