import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradcheck import numeric_grad, rel_err
from rbfgan.errors import DimensionError, ParameterError
from rbfgan.kernels import (
    CLUSTER_KERNELS,
    SIGMA_MIN,
    KernelKind,
    kernel_eval,
    kernel_grad,
    rbf_activations,
    rbf_backward,
)

KINDS = list(KernelKind)


def test_zero_distance_values():
    x = np.array([0.3, -1.2, 4.0])
    for s in (0.01, 0.5, 3.0):
        assert kernel_eval("gaussian", x, x, s) == 1.0
        assert kernel_eval("laplace", x, x, s) == 1.0
        assert kernel_eval("inverse-multiquadrics", x, x, s) == 1.0 / s
    assert kernel_eval("inverse-multiquadrics", x, x, 2.0) == 0.5


def test_gaussian_closed_form():
    assert kernel_eval("gaussian", [2.0, 0.0], [0.0, 0.0], 1.0) == pytest.approx(0.135335283, abs=1e-9)
    assert kernel_eval("laplace", [0.0, 3.0], [0.0, 0.0], 1.5) == pytest.approx(math.exp(-2.0), abs=1e-15)


def test_gradients_at_center():
    x = np.array([0.5, 0.25])
    dx, dv, _ = kernel_grad("gaussian", x, x, 0.7)
    assert np.all(dx == 0.0) and np.all(dv == 0.0)
    dx, dv, _ = kernel_grad("laplace", x, x, 0.7)
    assert np.all(dx == 0.0) and np.all(dv == 0.0)
    _, _, ds = kernel_grad("inverse-multiquadrics", x, x, 1.0)
    assert ds == -1.0


@pytest.mark.parametrize("kind", KINDS)
def test_kernel_grad_fd(kind):
    rng = np.random.default_rng(hash(kind.value) % 2**32)
    for _ in range(100):
        d = int(rng.integers(1, 6))
        x, v = rng.standard_normal(d), rng.standard_normal(d)
        s = np.array([rng.uniform(0.2, 2.0)])
        dx, dv, ds = kernel_grad(kind, x, v, s[0])
        f = lambda: kernel_eval(kind, x, v, s[0])  # noqa: E731
        assert rel_err(dx, numeric_grad(f, x)) < 1e-4
        assert rel_err(dv, numeric_grad(f, v)) < 1e-4
        assert rel_err(ds, numeric_grad(f, s)) < 1e-4


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(KINDS), st.integers(1, 5), st.floats(0.01, 5.0), st.integers(0, 2**32 - 1))
def test_kernel_bounded_by_center_value(kind, d, sigma, seed):
    rng = np.random.default_rng(seed)
    x, v = rng.standard_normal(d) * 3, rng.standard_normal(d) * 3
    g = kernel_eval(kind, x, v, sigma)
    assert 0.0 < g <= kernel_eval(kind, v, v, sigma) or (g == 0.0 and kind is not KernelKind.INVERSE_MULTIQUADRICS)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(10.0001, 30.0), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_gaussian_locality(sigma, ratio, d, seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(d)
    x = v + ratio * sigma * u
    assert kernel_eval("gaussian", x, v, sigma) < 1e-21
    dx, dv, ds = kernel_grad("gaussian", x, v, sigma)
    assert np.abs(dx).max() < 1e-19 and np.abs(dv).max() < 1e-19 and abs(ds) < 1e-19


def test_argument_errors():
    with pytest.raises(DimensionError):
        kernel_eval("gaussian", [1.0, 2.0], [1.0], 1.0)
    with pytest.raises(ParameterError):
        kernel_eval("gaussian", [1.0], [1.0], SIGMA_MIN / 2)
    with pytest.raises(ParameterError):
        kernel_eval("cauchy", [1.0], [1.0], 1.0)


def test_cluster_kernel_order():
    assert [k.value for k in CLUSTER_KERNELS] == ["gaussian", "laplace", "inverse-multiquadrics"]


@pytest.mark.parametrize("kind", KINDS)
def test_batched_matches_scalar(kind, each_backend):
    rng = np.random.default_rng(5)
    x, c = rng.random((7, 3)), rng.random((5, 3))
    w = 0.1 + rng.random((1, 5))
    g = rbf_activations(kind, x, c, w)
    ref = np.array([[kernel_eval(kind, xi, cj, sj) for cj, sj in zip(c, w[0])] for xi in x])
    np.testing.assert_allclose(g, ref, rtol=1e-13, atol=0)
    dg = rng.standard_normal(g.shape)
    dx, dc, dw = rbf_backward(kind, x, c, w, g, dg)
    ref_dx, ref_dc, ref_dw = np.zeros_like(x), np.zeros_like(c), np.zeros(5)
    for i in range(7):
        for j in range(5):
            gx, gv, gs = kernel_grad(kind, x[i], c[j], w[0, j])
            ref_dx[i] += dg[i, j] * gx
            ref_dc[j] += dg[i, j] * gv
            ref_dw[j] += dg[i, j] * gs
    np.testing.assert_allclose(dx, ref_dx, atol=1e-12)
    np.testing.assert_allclose(dc, ref_dc, atol=1e-12)
    np.testing.assert_allclose(dw.ravel(), ref_dw, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_backends_agree(kind):
    from rbfgan import _backend

    rng = np.random.default_rng(9)
    x, c = rng.random((40, 4)), rng.random((30, 4))
    c[3] = x[2]  # exercise the r = 0 branch
    w = 0.05 + rng.random((1, 30))
    dg = rng.standard_normal((40, 30))
    out = {}
    for name in ("numpy", "numba"):
        prev = _backend.set_backend(name)
        try:
            g = rbf_activations(kind, x, c, w)
            out[name] = (g, *rbf_backward(kind, x, c, w, g, dg))
        finally:
            _backend.set_backend(prev)
    for a, b in zip(out["numpy"], out["numba"]):
        assert np.all(np.isfinite(a))
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
