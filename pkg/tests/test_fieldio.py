import numpy as np
from hypothesis import given, strategies as st

from opticqm.fieldio import read_field, write_field
from opticqm.grid import CLAMPED, PERIODIC, Grid, ScalarField, VectorField3


def test_complex_scalar_round_trip_is_bit_exact(tmp_path):
    g = Grid.box([0, -1, 2], [1, 1, 3], [4, 5, 3], (PERIODIC, CLAMPED, CLAMPED))
    rng = np.random.default_rng(7)
    v = rng.standard_normal(g.shape) * 1e-300 + 1j * rng.standard_normal(g.shape) * 1e300
    f = ScalarField(g, v)
    csv_path, json_path = write_field(tmp_path / "f", f)
    assert csv_path.exists() and json_path.exists()
    back = read_field(tmp_path / "f")
    assert back.grid == g
    assert np.array_equal(back.values, f.values)


def test_vector_round_trip_is_bit_exact(tmp_path):
    g = Grid.box([0, 0], [1, 1], [5, 6])
    rng = np.random.default_rng(3)
    f = VectorField3(g, rng.standard_normal((3,) + g.shape) / 3.0)
    write_field(tmp_path / "v.csv", f)
    back = read_field(tmp_path / "v.json")
    assert isinstance(back, VectorField3)
    assert np.array_equal(back.values, f.values)
    assert not np.iscomplexobj(back.values)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=3, max_size=3))
def test_any_finite_doubles_survive(tmp_path_factory, vals):
    path = tmp_path_factory.mktemp("rt") / "s"
    g = Grid.box([0.0], [1.0], [3])
    write_field(path, ScalarField(g, np.array(vals)))
    back = read_field(path)
    assert np.array_equal(back.values, np.array(vals))
