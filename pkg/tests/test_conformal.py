import math

import numpy as np
import pytest

from weakneutral import (
    ADMISSIBLE_BOUND,
    admissibility,
    invert_map,
    make_droplet_map,
    make_ellipse_map,
    make_laurent_map,
    parse_shape_spec,
    read_shape_file,
)

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def test_ellipse_boundary_is_the_scaled_ellipse():
    m = make_ellipse_map(1.25, 0.75)
    theta = np.linspace(0.0, 2.0 * np.pi, 37)
    z = m.boundary(theta)
    # semi-axis sum is 2, so the rescale factor is 1 and the axes survive
    np.testing.assert_allclose(z.real, 1.25 * np.cos(theta), atol=1e-15)
    np.testing.assert_allclose(z.imag, 0.75 * np.sin(theta), atol=1e-15)
    assert m.b1 == pytest.approx(0.25)


def test_ellipse_rescaling_normalizes_leading_coefficient():
    m = make_ellipse_map(5.0, 3.0)
    theta = np.linspace(0.0, 2.0 * np.pi, 11)
    z = m.boundary(theta)
    s = 2.0 / (5.0 + 3.0)
    np.testing.assert_allclose(z.real, s * 5.0 * np.cos(theta), atol=1e-14)
    np.testing.assert_allclose(z.imag, s * 3.0 * np.sin(theta), atol=1e-14)


def test_ellipse_axis_validation():
    with pytest.raises(ValueError):
        make_ellipse_map(0.5, 0.75)
    with pytest.raises(ValueError):
        make_ellipse_map(1.0, 0.0)


@pytest.mark.parametrize("factory", [
    lambda: make_ellipse_map(1.25, 0.75),
    make_droplet_map,
    lambda: make_laurent_map([0.1, 0.05j, -0.02]),
])
def test_derivatives_match_finite_differences(factory):
    m = factory()
    zeta = 1.5 * np.exp(1j * 2.0 * np.pi * _GOLDEN * np.arange(12))
    h = 1e-6
    d_fd = (m.map(zeta + h) - m.map(zeta - h)) / (2.0 * h)
    np.testing.assert_allclose(m.derivative(zeta), d_fd, rtol=1e-8, atol=1e-8)
    d2_fd = (m.derivative(zeta + h) - m.derivative(zeta - h)) / (2.0 * h)
    np.testing.assert_allclose(m.second_derivative(zeta), d2_fd, rtol=1e-7, atol=1e-7)


def test_droplet_series_matches_closed_form():
    m = make_droplet_map()
    series = make_laurent_map(m.tail)  # same tail, evaluated as a plain series
    zeta = 1.3 * np.exp(1j * np.linspace(0.0, 2.0 * np.pi, 40, endpoint=False))
    np.testing.assert_allclose(series.map(zeta), m.map(zeta), atol=1e-9)
    np.testing.assert_allclose(series.derivative(zeta), m.derivative(zeta), atol=1e-8)


def test_droplet_corner():
    m = make_droplet_map()
    assert m.corner_angles == (math.pi,)
    assert m.is_corner(math.pi)
    assert m.is_corner(-math.pi)
    assert not m.is_corner(0.0)
    # the derivative vanishes exactly at the corner preimage
    assert m.derivative(np.array(-1.0 + 0.0j)) == 0.0
    assert m.b1 == pytest.approx(0.25)


def test_map_rejects_interior_points():
    m = make_ellipse_map(1.25, 0.75)
    with pytest.raises(ValueError):
        m.map(np.array([0.5 + 0.0j]))
    with pytest.raises(ValueError):
        m.derivative(np.array([0.99 * np.exp(0.3j)]))


def test_laurent_map_rejects_bad_tails():
    with pytest.raises(ValueError):
        make_laurent_map([1.0])
    # strong second coefficient folds the boundary over itself
    with pytest.raises(ValueError):
        make_laurent_map([0.0, 0.8])


def test_invert_map_round_trip():
    for m in (make_ellipse_map(1.25, 0.75), make_droplet_map()):
        k = np.arange(25)
        zeta = (1.05 + 0.2 * ((k * _GOLDEN) % 1.0)) * np.exp(2j * np.pi * ((k * _GOLDEN ** 2) % 1.0))
        for z0 in zeta:
            z = complex(m.map(np.array(z0)))
            back = invert_map(m, z)
            assert abs(back - z0) < 1e-9


def test_invert_map_rejects_interior_targets():
    m = make_ellipse_map(1.25, 0.75)
    with pytest.raises(ValueError):
        invert_map(m, 0.0 + 0.0j)


def test_admissibility_report():
    adm = admissibility(make_ellipse_map(1.25, 0.75))
    assert adm["theorem_1_1_ok"]
    assert adm["b_abs"] == pytest.approx(0.25)
    assert adm["phase"] == 0.0
    # 3:1 ellipse has b1 = 0.5, beyond the guaranteed range
    adm = admissibility(make_ellipse_map(3.0, 1.0))
    assert not adm["theorem_1_1_ok"]
    assert adm["b_abs"] == pytest.approx(0.5)
    assert ADMISSIBLE_BOUND == pytest.approx(2.0 - math.sqrt(3.0))


def test_parse_shape_spec():
    assert parse_shape_spec("ellipse:1.25,0.75").kind == "ellipse"
    assert parse_shape_spec("droplet").kind == "droplet"
    with pytest.raises(ValueError):
        parse_shape_spec("pentagon")
    with pytest.raises(ValueError):
        parse_shape_spec("ellipse:1.25")


def test_shape_file_round_trip(tmp_path):
    p = tmp_path / "shape.txt"
    p.write_text("# comment\nkind = laurent\ntail = (0.1,0.0) (0.0,0.05)\n")
    m = read_shape_file(p)
    assert m.kind == "laurent"
    np.testing.assert_allclose(m.tail, [0.1, 0.05j])
    # and through the CLI spec syntax
    m2 = parse_shape_spec(f"laurent:{p}")
    np.testing.assert_allclose(m2.tail, m.tail)

    bad = tmp_path / "bad.txt"
    bad.write_text("kind = laurent\n")
    with pytest.raises(ValueError):
        read_shape_file(bad)
