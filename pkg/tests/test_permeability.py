import numpy as np
import pytest

from gmsdam.grid import build_fine_mesh
from gmsdam.permeability import (Channel, FieldFormatError, InclusionSpec, PermeabilityField,
                                 gen_channels_and_inclusions, gen_horizontal_channels,
                                 gen_vertical_channels, load_field, make_field, save_field)


@pytest.fixture(scope="module")
def mesh():
    return build_fine_mesh(40, 40)


def test_two_bands_contrast(mesh):
    f = gen_horizontal_channels(mesh, (Channel((0.2, 0.3)), Channel((0.6, 0.65))), 1.0, 1e2)
    assert f.contrast == pytest.approx(100.0)
    assert set(np.unique(f.values)) == {1.0, 100.0}


def test_no_channels_is_constant(mesh):
    f = gen_horizontal_channels(mesh, (), 1.0, 1e2)
    assert np.all(f.values == 1.0)


def test_full_band_is_constant_high(mesh):
    f = gen_horizontal_channels(mesh, (Channel((0.0, 1.0)),), 1.0, 1e2)
    assert np.all(f.values == 1e2)


def test_centroid_rule(mesh):
    f = gen_horizontal_channels(mesh, (Channel((0.2, 0.3), (0.5, 1.0)),), 1.0, 5.0)
    c = mesh.centroids
    inside = (c[:, 1] >= 0.2) & (c[:, 1] <= 0.3) & (c[:, 0] >= 0.5)
    assert np.array_equal(f.values == 5.0, inside)


def test_empty_band_warns(mesh, caplog):
    with caplog.at_level("WARNING"):
        f = gen_horizontal_channels(mesh, (Channel((0.501, 0.502)),), 1.0, 1e2)
    assert np.all(f.values == 1.0)
    assert "contains no element centroid" in caplog.text


def test_vertical_is_transpose(mesh):
    h = gen_horizontal_channels(mesh).grid(mesh)
    v = gen_vertical_channels(mesh).grid(mesh)
    assert np.array_equal(h.T, v)


def test_vertical_roles_swapped(mesh):
    f = gen_vertical_channels(mesh, (Channel((0.2, 0.3)),), 1.0, 1e2)
    c = mesh.centroids
    assert np.array_equal(f.values == 1e2, (c[:, 0] >= 0.2) & (c[:, 0] <= 0.3))


def test_inclusions_reproducible(mesh):
    a = gen_channels_and_inclusions(mesh, seed=0)
    b = gen_channels_and_inclusions(mesh, seed=0)
    assert np.array_equal(a.values, b.values)
    assert a.contrast == pytest.approx(100.0)
    assert not np.array_equal(a.values, gen_channels_and_inclusions(mesh, seed=1).values)


def test_inclusions_empty_spec(mesh):
    spec = InclusionSpec(horizontal=(), vertical=(), n_inclusions=0)
    assert np.all(gen_channels_and_inclusions(mesh, 3, spec).values == 1.0)


def test_inclusions_full_cover(mesh):
    spec = InclusionSpec(horizontal=(Channel((0.0, 1.0)),), vertical=(), n_inclusions=5)
    assert np.all(gen_channels_and_inclusions(mesh, 3, spec).values == 1e2)


def test_default_layouts_miss_coarse_lines():
    # high-contrast features must not sit on the 10x10 coarse grid lines
    for ch in InclusionSpec().horizontal + InclusionSpec().vertical:
        for k in range(11):
            assert not ch.band[0] <= k / 10 <= ch.band[1]


@pytest.mark.parametrize("family", ["constant", "horizontal", "vertical", "channels_inclusions"])
def test_round_trip(tmp_path, mesh, family):
    f = make_field(family, mesh, seed=4, kappa_hi=123.456789)
    save_field(f, mesh, tmp_path / "k.csv")
    g = load_field(mesh, tmp_path / "k.csv")
    assert np.array_equal(f.values, g.values)


def test_csv_layout(tmp_path):
    m = build_fine_mesh(3, 2)
    save_field(PermeabilityField(np.arange(1.0, 7.0)), m, tmp_path / "k.csv")
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines == ["1,2,3", "4,5,6"]


def test_zero_value_rejected(tmp_path):
    m = build_fine_mesh(2, 2)
    (tmp_path / "k.csv").write_text("1,1\n1,0\n")
    with pytest.raises(FieldFormatError):
        load_field(m, tmp_path / "k.csv")


def test_short_file_rejected(tmp_path):
    m = build_fine_mesh(2, 2)
    (tmp_path / "k.csv").write_text("1,1\n1\n")
    with pytest.raises(FieldFormatError):
        load_field(m, tmp_path / "k.csv")


def test_non_numeric_rejected(tmp_path):
    m = build_fine_mesh(2, 2)
    (tmp_path / "k.csv").write_text("1,1\n1,x\n")
    with pytest.raises(FieldFormatError, match=":2:"):
        load_field(m, tmp_path / "k.csv")


def test_positive_values_enforced():
    with pytest.raises(ValueError):
        PermeabilityField(np.array([1.0, -1.0]))


def test_unknown_family(mesh):
    with pytest.raises(ValueError, match="unknown coefficient family"):
        make_field("marble", mesh)
