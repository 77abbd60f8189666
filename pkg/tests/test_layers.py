import numpy as np
import pytest

from gradcheck import check_layer
from rbfgan.errors import DimensionError, ParameterError
from rbfgan.kernels import SIGMA_MIN, KernelKind, kernel_eval
from rbfgan.layers import DenseLayer, RbfClusterLayer, RbfLayer, RbfOutput, rbf_backward_full, rbf_forward
from rbfgan.tensor import SeededRng

N_CONFIGS = 100


def random_rbf_output(rng, kind):
    q, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    rbf = RbfLayer(rng.random((q, d)), 0.2 + rng.random((1, q)), kind)
    return RbfOutput(rbf, rng.standard_normal(), rng.standard_normal((q, 1))), d


def random_cluster(rng, m=None):
    d = int(rng.integers(1, 4))
    m = m or int(rng.integers(2, 4))
    kinds = [list(KernelKind)[z % 3] for z in range(m)]
    clusters, weights = [], []
    for kind in kinds:
        q = int(rng.integers(1, 5))
        clusters.append(RbfLayer(rng.random((q, d)), 0.2 + rng.random((1, q)), kind))
        weights.append(rng.standard_normal((q, 1)))
    return RbfClusterLayer(clusters, weights, rng.standard_normal(m + 1)), d


@pytest.mark.parametrize("act", ["relu", "sigmoid", "linear"])
def test_dense_fd(act, each_backend):
    rng = np.random.default_rng(100)
    worst = 0.0
    for _ in range(N_CONFIGS):
        n_in, n_out, n = (int(k) for k in rng.integers(1, 6, size=3))
        layer = DenseLayer(rng.standard_normal((n_out, n_in)), rng.standard_normal((1, n_out)), act)
        worst = max(worst, *check_layer(layer, rng.standard_normal((n, n_in)), rng).values())
    assert worst < 1e-4


@pytest.mark.parametrize("kind", list(KernelKind))
def test_rbf_fd(kind, each_backend):
    rng = np.random.default_rng(200)
    worst = 0.0
    for _ in range(N_CONFIGS):
        layer, d = random_rbf_output(rng, kind)
        x = rng.random((int(rng.integers(1, 6)), d))
        worst = max(worst, *check_layer(layer, x, rng).values())
    assert worst < 1e-4


def test_rbf_cluster_fd(each_backend):
    rng = np.random.default_rng(300)
    worst = 0.0
    for _ in range(N_CONFIGS):
        layer, d = random_cluster(rng)
        x = rng.random((int(rng.integers(1, 6)), d))
        worst = max(worst, *check_layer(layer, x, rng).values())
    assert worst < 1e-4


def test_dense_identity():
    layer = DenseLayer(np.eye(3), np.zeros((1, 3)), "linear")
    x = np.random.default_rng(0).standard_normal((4, 3))
    np.testing.assert_array_equal(layer.forward(x)[0], x)


def test_dense_dead_relu():
    layer = DenseLayer(np.ones((2, 3)), np.full((1, 2), -100.0), "relu")
    x = np.random.default_rng(0).random((5, 3))
    y, cache = layer.forward(x)
    assert np.all(y == 0)
    _, grads = layer.backward(cache, np.ones_like(y))
    assert np.all(grads["W"] == 0) and np.all(grads["b"] == 0)


def test_dense_init_glorot():
    layer = DenseLayer.init(30, 20, "relu", SeededRng(0))
    limit = np.sqrt(6.0 / 50)
    assert layer.params["W"].shape == (20, 30)
    assert np.abs(layer.params["W"]).max() <= limit
    assert np.all(layer.params["b"] == 0)


def test_rbf_forward_trivial_cases():
    v = np.array([[0.3, 0.7]])
    layer = RbfLayer(v, [[0.5]], "gaussian")
    raw, _ = rbf_forward(layer, 0.0, [1.0], v)
    assert raw.tolist() == [1.0]
    rng = np.random.default_rng(1)
    layer = RbfLayer(rng.random((4, 2)), 0.3 + rng.random((1, 4)), "laplace")
    raw, _ = rbf_forward(layer, 0.25, np.zeros(4), rng.random((6, 2)))
    assert np.all(raw == 0.25)


@pytest.mark.parametrize("kind", list(KernelKind))
def test_rbf_forward_vs_loop(kind, each_backend):
    rng = np.random.default_rng(2)
    c, s, w = rng.random((6, 3)), 0.2 + rng.random((1, 6)), rng.standard_normal(6)
    x = rng.random((9, 3))
    raw, _ = rbf_forward(RbfLayer(c, s, kind), 0.4, w, x)
    ref = [0.4 + sum(w[j] * kernel_eval(kind, xi, c[j], s[0, j]) for j in range(6)) for xi in x]
    np.testing.assert_allclose(raw, ref, rtol=0, atol=1e-12)


def test_rbf_zero_upstream():
    rng = np.random.default_rng(3)
    layer = RbfLayer(rng.random((4, 2)), 0.5 + rng.random((1, 4)), "gaussian")
    x = rng.random((5, 2))
    _, g = rbf_forward(layer, 0.0, np.ones(4), x)
    grads = rbf_backward_full(layer, np.ones(4), x, g, np.zeros(5))
    assert all(np.all(v == 0) for v in grads.values())


def test_cluster_trivial_cases(each_backend):
    rng = np.random.default_rng(4)
    layer, d = random_cluster(rng, 3)
    layer.params["lambda"][:] = [[1.5, 0.0, 0.0, 0.0]]
    assert np.all(layer.forward(rng.random((7, d)))[0] == 1.5)
    # one cluster with lambda_1 = 1 reduces to the plain RBF score
    c = RbfLayer(rng.random((5, 2)), 0.3 + rng.random((1, 5)), "laplace")
    w = rng.standard_normal((5, 1))
    x = rng.random((8, 2))
    single = RbfClusterLayer([c], [w], [0.7, 1.0])
    np.testing.assert_array_equal(single.forward(x)[0].ravel(), rbf_forward(c, 0.7, w, x)[0])


def test_cluster_vs_loop(each_backend):
    layer = RbfClusterLayer.init((42, 43, 43), 4, SeededRng(5))
    lam = np.array([[0.1, 0.5, -0.3, 0.8]])
    layer.params["lambda"][:] = lam
    x = np.random.default_rng(5).random((6, 4))
    raw = layer.forward(x)[0].ravel()
    ref = []
    for xi in x:
        s = lam[0, 0]
        for z, c in enumerate(layer.clusters):
            w = layer.params[f"c{z}.w"].ravel()
            for j in range(c.size):
                s += lam[0, z + 1] * w[j] * kernel_eval(c.kernel, xi, c.centers[j], c.widths[0, j])
        ref.append(s)
    np.testing.assert_allclose(raw, ref, rtol=0, atol=1e-12)


def test_cluster_weight_gradient_formula():
    rng = np.random.default_rng(6)
    layer, d = random_cluster(rng, 3)
    x = rng.random((5, d))
    up = rng.standard_normal((5, 1))
    _, cache = layer.forward(x)
    _, grads = layer.backward(cache, up)
    lam = layer.params["lambda"][0]
    for z, c in enumerate(layer.clusters):
        g = np.array([[kernel_eval(c.kernel, xi, c.centers[j], c.widths[0, j]) for j in range(c.size)] for xi in x])
        np.testing.assert_allclose(grads[f"c{z}.w"], (up * lam[z + 1] * g).sum(axis=0).reshape(-1, 1),
                                   rtol=1e-13, atol=1e-15)


def test_cluster_init_and_freeze():
    layer = RbfClusterLayer.init((42, 43, 43), 4, SeededRng(0))
    np.testing.assert_array_equal(layer.params["lambda"], [[0.0, 1 / 3, 1 / 3, 1 / 3]])
    assert [c.kernel for c in layer.clusters] == list(KernelKind)
    assert [c.size for c in layer.clusters] == [42, 43, 43]
    frozen = RbfClusterLayer.init((3, 3, 3), 2, SeededRng(0), freeze_lambdas=True)
    _, cache = frozen.forward(np.ones((2, 2)))
    _, grads = frozen.backward(cache, np.ones((2, 1)))
    assert "lambda" not in grads


def test_width_clamp():
    rng = SeededRng(0)
    for _ in range(20):
        layer = RbfLayer.init(64, 3, "gaussian", rng)
        assert layer.widths.min() >= SIGMA_MIN
    layer.widths[0, :5] = -1.0
    layer.clamp_widths()
    assert layer.widths.min() >= SIGMA_MIN
    with pytest.raises(ParameterError):
        RbfLayer([[0.0]], [[0.0]], "gaussian")


def test_rbf_output_aliases_widths():
    out = RbfOutput.init(4, 2, SeededRng(1))
    out.params["widths"][0, 0] = -3.0
    out.post_update()
    assert out.rbf.widths[0, 0] == SIGMA_MIN


def test_forward_deterministic(each_backend):
    layer = RbfClusterLayer.init((5, 6, 7), 3, SeededRng(2))
    x = np.random.default_rng(0).random((10, 3))
    assert layer.forward(x)[0].tobytes() == layer.forward(x.copy())[0].tobytes()


def test_dimension_errors():
    layer = DenseLayer(np.ones((2, 3)), np.zeros((1, 2)))
    with pytest.raises(DimensionError):
        layer.forward(np.ones((4, 2)))
    with pytest.raises(DimensionError):
        RbfOutput(RbfLayer(np.ones((3, 2)), np.ones((1, 3))), 0.0, np.ones(2))
