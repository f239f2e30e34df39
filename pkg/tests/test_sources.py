import numpy as np
import pytest

from gjcodec.errors import FormatError, ParameterError
from gjcodec.sources import (ImageGrid, ar1_field, gen_ar1, load_pgm,
                             save_pgm)


def test_ar1_rho_zero_is_standard_normal():
    seq = gen_ar1(1_000_000, rho=0.0, sigma=1.0, seed=7)
    x = seq.samples
    assert abs(x.mean()) < 0.01
    assert abs(x.var() - 1.0) < 0.02


def test_ar1_lag1_autocorrelation():
    """Empirical lag-1 correlation must match the generating rho."""
    x = gen_ar1(1_000_000, rho=0.9, sigma=1.0, seed=11).samples
    r = np.corrcoef(x[:-1], x[1:])[0, 1]
    assert abs(r - 0.9) < 0.01


def test_ar1_deterministic():
    a = gen_ar1(5000, rho=0.5, sigma=2.0, seed=42).samples
    b = gen_ar1(5000, rho=0.5, sigma=2.0, seed=42).samples
    np.testing.assert_array_equal(a, b)


def test_ar1_unit_variance_marginal():
    # stationary marginal variance is sigma^2 regardless of rho
    for rho in (0.0, 0.5, 0.95):
        x = gen_ar1(500_000, rho=rho, sigma=3.0, seed=1).samples
        assert abs(x.var() / 9.0 - 1.0) < 0.05


@pytest.mark.parametrize("rho", [0.0, 0.9])
def test_ar1_field_shape_and_scale(rho):
    f = ar1_field(40, 56, rho, seed=3)
    assert f.shape == (40, 56)
    assert abs(f.var() - 1.0) < 0.15


def test_ar1_rejects_bad_rho():
    with pytest.raises(ParameterError):
        gen_ar1(10, rho=1.0, sigma=1.0, seed=0)


def test_image_grid_from_float_rounds_and_clips():
    g = ImageGrid.from_float(np.array([[-3.0, 0.4, 254.6, 300.0]]))
    np.testing.assert_array_equal(g.samples, [[0, 0, 255, 255]])
    assert g.samples.dtype == np.uint8
    assert g.pixels == 4


def test_load_pgm_hand_crafted(tmp_path):
    p = tmp_path / "tiny.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 7]))
    g = load_pgm(p)
    np.testing.assert_array_equal(g.samples, [[0, 128], [255, 7]])


def test_load_pgm_with_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# a comment\n2 1\n255\n" + bytes([9, 200]))
    np.testing.assert_array_equal(load_pgm(p).samples, [[9, 200]])


def test_load_pgm_rejects_color(tmp_path):
    p = tmp_path / "rgb.ppm"
    p.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(FormatError):
        load_pgm(p)


def test_pgm_round_trip(tmp_path, rng):
    g = ImageGrid(rng.integers(0, 256, (64, 64), dtype=np.uint8))
    path = tmp_path / "rt.pgm"
    save_pgm(g, path)
    np.testing.assert_array_equal(load_pgm(path).samples, g.samples)
