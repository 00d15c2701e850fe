import numpy as np
import pytest

from vhjlab.domain import GridError, build_grid, build_interval_grid, read_grid_csv


def test_interval_layout():
    g = build_interval_grid(0.0, 1.0, 8)
    assert g.size == 9 and g.dim == 1
    assert g.h == pytest.approx(1 / 8)
    assert list(g.boundary) == [0, 8]
    np.testing.assert_allclose(g.d, np.minimum(g.x, 1 - g.x))
    assert g.deepest_node() == 4


def test_interval_neighbors_absent_outward():
    g = build_interval_grid(-1.0, 2.0, 6)
    assert g.neighbors[0, 0, 0] == -1 and g.neighbors[0, 1, -1] == -1
    assert np.isnan(g.spacing[0, 0, 0]) and np.isnan(g.spacing[0, 1, -1])
    assert np.all(g.neighbors[0, 1, :-1] == np.arange(1, 7))


def test_disc_boundary_nodes_on_circle():
    g = build_grid("disc:2", 16)
    r = np.linalg.norm(g.points[g.boundary], axis=1)
    np.testing.assert_allclose(r, 2.0, atol=1e-12)
    assert np.all(np.linalg.norm(g.points[g.interior], axis=1) < 2.0)
    assert g.d[g.boundary].max() == 0.0


def test_disc_every_node_reaches_an_interior_neighbour():
    g = build_grid("disc:1", 12)
    nb = g.neighbors
    for i in g.boundary:
        assert (nb[:, :, i] >= 0).any()


@pytest.mark.parametrize("bad", ["square:1", "interval:1:0", "disc:-1"])
def test_bad_domains(bad):
    with pytest.raises(GridError):
        build_grid(bad, 8)


def test_too_few_cells():
    with pytest.raises(GridError):
        build_interval_grid(0, 1, 1)


def test_collar_and_core_partition_interior():
    g = build_grid("interval:0:1", 64)
    both = np.union1d(g.collar, g.core)
    assert np.array_equal(both, g.interior)
    assert np.all(g.d[g.core] > g.delta)


def test_csv_roundtrip(tmp_path):
    g = build_grid("disc:1", 8)
    g.to_csv(tmp_path / "g.csv")
    pts, d, isb = read_grid_csv(tmp_path / "g.csv")
    np.testing.assert_array_equal(pts, g.points)
    np.testing.assert_array_equal(d, g.d)
    np.testing.assert_array_equal(isb, g.is_boundary)
