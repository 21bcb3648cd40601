import numpy as np
import pytest
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from samplets import (
    Matern,
    PeriodicGaussian,
    PointCloud,
    ProductKernel,
    dense_kernel_matrix,
    kernel_eval,
    kernel_matrix,
    parse_kernel,
)


def bessel_matern(nu, lengthscale, r):
    """Reference profile via the modified Bessel function of the second kind."""
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    mask = r > 0
    s = np.sqrt(2 * nu) * r[mask] / lengthscale
    out[mask] = (2 ** (1 - nu) / gamma_fn(nu)) * s**nu * kv(nu, s)
    return out


def test_eval_examples():
    assert kernel_eval(Matern(0.5, 0.1), [0.3], [0.3]) == 1.0
    assert kernel_eval(Matern(0.5, 0.1), [0.0], [0.1]) == pytest.approx(
        np.exp(-1.0), abs=1e-12
    )
    assert kernel_eval(PeriodicGaussian(50.0, 1.0), [0.0], [1.0]) == pytest.approx(1.0)


def test_closed_forms_match_bessel_oracle():
    rng = np.random.default_rng(30)
    radii = rng.uniform(1e-3, 3.0, 100)
    for nu in (0.5, 1.5, 2.5):
        for ell in (0.1, 1.0):
            got = Matern(nu, ell).profile(radii)
            ref = bessel_matern(nu, ell, radii)
            assert np.abs(got - ref).max() < 1e-10


def test_stationarity_under_translation():
    rng = np.random.default_rng(31)
    spec = Matern(1.5, 0.7)
    for _ in range(20):
        x, y, shift = rng.standard_normal((3, 3))
        a = kernel_eval(spec, x, y)
        b = kernel_eval(spec, x + shift, y + shift)
        assert abs(a - b) < 1e-14


def test_monotone_decay():
    for spec in (Matern(0.5, 0.3), Matern(1.5, 0.3), Matern(2.5, 0.3), Matern(np.inf, 0.3)):
        r = np.linspace(0, 10 * spec.lengthscale, 400)
        vals = spec.profile(r)
        assert np.all(np.diff(vals) <= 1e-15)
        assert vals[0] == 1.0


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        Matern(0.5, 0.0)
    with pytest.raises(ValueError):
        Matern(0.7, 1.0)
    with pytest.raises(ValueError):
        PeriodicGaussian(-1.0)


def test_dense_kernel_matrix_examples():
    one = dense_kernel_matrix(Matern(0.5, 1.0), PointCloud(np.array([[0.0]])))
    np.testing.assert_array_equal(one, [[1.0]])
    pair = dense_kernel_matrix(
        Matern(1.5, 0.2), PointCloud(np.array([[0.4, 0.4], [0.4, 0.4]]))
    )
    np.testing.assert_allclose(pair, [[1.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(np.linalg.eigvalsh(pair), [0.0, 2.0], atol=1e-14)


def test_dense_kernel_matrix_psd_and_symmetric():
    rng = np.random.default_rng(32)
    cloud = PointCloud(rng.random((64, 3)))
    product = ProductKernel(
        [(Matern(1.5, 0.3), (0, 2)), (PeriodicGaussian(5.0, 1.0), (2, 3))]
    )
    for spec in (Matern(0.5, 0.2), Matern(np.inf, 0.3), product):
        K = dense_kernel_matrix(spec, cloud)
        np.testing.assert_allclose(K, K.T, atol=1e-15)
        np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-15)
        assert np.linalg.eigvalsh(K).min() >= -1e-8 * 64
    # the periodic factor is positive definite on its 1-D (time) axis
    line = PointCloud(rng.random(64)[:, None])
    K = dense_kernel_matrix(PeriodicGaussian(5.0, 1.0), line)
    assert np.linalg.eigvalsh(K).min() >= -1e-8 * 64


def test_dense_guard():
    rng = np.random.default_rng(33)
    with pytest.raises(ValueError, match="guard"):
        dense_kernel_matrix(Matern(0.5, 1.0), PointCloud(rng.random((20, 1))), guard=10)


def test_product_kernel_factorizes():
    rng = np.random.default_rng(34)
    spec = ProductKernel([(Matern(1.5, 0.2), (0, 2)), (PeriodicGaussian(50.0, 1.0), (2, 3))])
    x, y = rng.random((2, 3))
    a = kernel_eval(spec, x, y)
    b = kernel_eval(Matern(1.5, 0.2), x[:2], y[:2]) * kernel_eval(
        PeriodicGaussian(50.0, 1.0), x[2:], y[2:]
    )
    assert a == pytest.approx(b, rel=1e-14)


def test_product_kernel_slice_validation():
    with pytest.raises(ValueError, match="overlap"):
        ProductKernel([(Matern(0.5, 1.0), (0, 2)), (Matern(0.5, 1.0), (1, 3))])
    spec = ProductKernel([(Matern(0.5, 1.0), (0, 2))])
    with pytest.raises(ValueError, match="dim"):
        kernel_matrix(spec, np.zeros((2, 3)), np.zeros((2, 3)))


def test_parse_kernel_grammar():
    k = parse_kernel("matern(nu=1/2,l=0.1)")
    assert isinstance(k, Matern) and k.nu == 0.5 and k.lengthscale == 0.1
    k = parse_kernel("matern(nu=inf,l=2)")
    assert np.isinf(k.nu)
    k = parse_kernel("gauss(l=0.5)")
    assert np.isinf(k.nu) and k.lengthscale == 0.5
    k = parse_kernel("periodic(s=50,l=1)")
    assert isinstance(k, PeriodicGaussian) and k.scale == 50.0
    k = parse_kernel(
        "prod(matern(nu=3/2,l=0.2)|slice=0..2, periodic(s=50,l=1)|slice=2..3)"
    )
    assert isinstance(k, ProductKernel)
    assert [s for _, s in k.factors] == [(0, 2), (2, 3)]


def test_parse_kernel_errors():
    for bad in (
        "matern(nu=1/2)",
        "matern(nu=1/4,l=1)",
        "matern(nu=1/2,l=0.1,x=2)",
        "gauss(l=-1)",
        "mystery(l=1)",
        "prod(matern(nu=1/2,l=1))",
        "prod(matern(nu=1/2,l=1)|slice=0..0)",
    ):
        with pytest.raises(ValueError):
            parse_kernel(bad)


def test_periodic_kernel_period_one():
    spec = parse_kernel("periodic(s=50,l=1)")
    r = np.arange(0.0, 5.0)
    np.testing.assert_allclose(spec.profile(r), 1.0, atol=1e-14)
    assert spec.profile(np.array([0.5]))[0] == pytest.approx(np.exp(-50.0))
