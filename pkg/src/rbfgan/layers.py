"""Dense, RBF and RBF-cluster layers with hand-written backward passes.

Every layer exposes the same small protocol used by :class:`Network`:

* ``params`` - dict of named 2-D parameter arrays (updated in place)
* ``forward(x) -> (y, cache)``
* ``backward(cache, dy) -> (dx, grads)`` with ``grads`` keyed like ``params``
* ``post_update()`` - re-impose parameter constraints after an optimizer step
"""
import numpy as np

from .errors import DimensionError, ParameterError
from .kernels import CLUSTER_KERNELS, SIGMA_MIN, KernelKind, rbf_activations, rbf_backward
from .tensor import check_finite

ACTIVATIONS = ("relu", "sigmoid", "linear")


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_input(x, dim, what):
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionError(f"{what} expects batches with {dim} columns, got shape {x.shape}")
    check_finite(x, f"{what} input")


class DenseLayer:
    """y = activation(x W^T + b) with W of shape (out, in)."""

    def __init__(self, weights, bias, activation="relu"):
        if activation not in ACTIVATIONS:
            raise ParameterError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
        weights = np.array(weights, dtype=np.float64, ndmin=2)
        bias = np.array(bias, dtype=np.float64).reshape(1, -1)
        if bias.shape[1] != weights.shape[0]:
            raise DimensionError(f"bias length {bias.shape[1]} != output dim {weights.shape[0]}")
        self.activation = activation
        self.params = {"W": weights, "b": bias}

    @classmethod
    def init(cls, n_in, n_out, activation, rng):
        # Glorot uniform
        limit = np.sqrt(6.0 / (n_in + n_out))
        w = (2.0 * rng.uniform(n_out, n_in) - 1.0) * limit
        return cls(w, np.zeros((1, n_out)), activation)

    @property
    def input_dim(self):
        return self.params["W"].shape[1]

    @property
    def output_dim(self):
        return self.params["W"].shape[0]

    def forward(self, x):
        _check_input(x, self.input_dim, "dense layer")
        pre = x @ self.params["W"].T + self.params["b"]
        if self.activation == "relu":
            out = np.maximum(pre, 0.0)
        elif self.activation == "sigmoid":
            out = sigmoid(pre)
        else:
            out = pre
        return out, (x, pre, out)

    def backward(self, cache, dy):
        x, pre, out = cache
        if dy.shape != out.shape:
            raise DimensionError(f"upstream gradient shape {dy.shape} != output shape {out.shape}")
        if self.activation == "relu":
            dpre = dy * (pre > 0.0)
        elif self.activation == "sigmoid":
            dpre = dy * out * (1.0 - out)
        else:
            dpre = dy
        grads = {"W": dpre.T @ x, "b": dpre.sum(axis=0, keepdims=True)}
        return dpre @ self.params["W"], grads

    def post_update(self):
        pass


class RbfLayer:
    """Hidden layer of q radial units over d-dimensional inputs."""

    def __init__(self, centers, widths, kernel=KernelKind.GAUSSIAN):
        centers = np.array(centers, dtype=np.float64, ndmin=2)
        widths = np.array(widths, dtype=np.float64).reshape(1, -1)
        if widths.shape[1] != centers.shape[0]:
            raise DimensionError(f"{widths.shape[1]} widths for {centers.shape[0]} centers")
        if (widths < SIGMA_MIN).any():
            raise ParameterError(f"all widths must be >= {SIGMA_MIN}")
        self.kernel = KernelKind.parse(kernel)
        self.centers = centers
        self.widths = widths

    @classmethod
    def init(cls, q, d, kernel, rng):
        # centers ~ U(0,1), widths ~ N(0.5, 0.2) clamped to SIGMA_MIN
        centers = rng.uniform(q, d)
        widths = np.maximum(rng.normal(0.5, 0.2, 1, q), SIGMA_MIN)
        return cls(centers, widths, kernel)

    @property
    def size(self):
        return self.centers.shape[0]

    @property
    def input_dim(self):
        return self.centers.shape[1]

    def hidden(self, x):
        _check_input(x, self.input_dim, "RBF layer")
        return rbf_activations(self.kernel, x, self.centers, self.widths)

    def hidden_backward(self, x, g, dg):
        dx, dc, dw = rbf_backward(self.kernel, x, self.centers, self.widths, g, dg)
        return dx, dc, dw.reshape(1, -1)

    def clamp_widths(self):
        np.maximum(self.widths, SIGMA_MIN, out=self.widths)


def rbf_forward(layer, w0, w, x):
    """Raw score w0 + sum_j w_j g(x, v_j, sigma_j) per row, plus the kernel matrix."""
    w = np.asarray(w, dtype=np.float64).reshape(-1, 1)
    if w.shape[0] != layer.size:
        raise DimensionError(f"{w.shape[0]} output weights for {layer.size} hidden units")
    g = layer.hidden(x)
    return (float(np.asarray(w0).ravel()[0]) + g @ w).ravel(), g


def rbf_backward_full(layer, w, x, g, upstream):
    """Gradients of sum(upstream * raw) for every parameter of an RBF score and its input."""
    w = np.asarray(w, dtype=np.float64).reshape(-1, 1)
    up = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
    if up.shape[0] != x.shape[0] or g.shape != (x.shape[0], layer.size):
        raise DimensionError("cached activations do not match the batch")
    dg = up @ w.T
    dx, dc, dwidths = layer.hidden_backward(x, g, dg)
    return {
        "w0": up.sum(axis=0, keepdims=True),
        "w": g.T @ up,
        "centers": dc,
        "widths": dwidths,
        "input": dx,
    }


class RbfOutput:
    """Single-cluster RBF network producing one raw score per row."""

    def __init__(self, rbf, w0, w):
        self.rbf = rbf
        w = np.array(w, dtype=np.float64).reshape(-1, 1)
        if w.shape[0] != rbf.size:
            raise DimensionError(f"{w.shape[0]} output weights for {rbf.size} hidden units")
        self.params = {
            "centers": rbf.centers,
            "widths": rbf.widths,
            "w0": np.array(w0, dtype=np.float64).reshape(1, 1),
            "w": w,
        }

    @classmethod
    def init(cls, q, d, rng, kernel=KernelKind.GAUSSIAN):
        rbf = RbfLayer.init(q, d, kernel, rng)
        limit = np.sqrt(6.0 / (q + 1))
        w = (2.0 * rng.uniform(q, 1) - 1.0) * limit
        return cls(rbf, 0.0, w)

    @property
    def input_dim(self):
        return self.rbf.input_dim

    output_dim = 1

    def forward(self, x):
        raw, g = rbf_forward(self.rbf, self.params["w0"], self.params["w"], x)
        return raw.reshape(-1, 1), (x, g)

    def backward(self, cache, dy):
        x, g = cache
        grads = rbf_backward_full(self.rbf, self.params["w"], x, g, dy)
        dx = grads.pop("input")
        return dx, grads

    def post_update(self):
        self.rbf.clamp_widths()


class RbfClusterLayer:
    """Linear mixture of m RBF networks with distinct kernels.

    raw(x) = lambda_0 + sum_z lambda_z sum_j w_{z,j} g_z(x, v_{z,j}, sigma_{z,j})
    """

    def __init__(self, clusters, weights, lambdas, freeze_lambdas=False):
        if len(clusters) < 1 or len(clusters) != len(weights):
            raise DimensionError("need one weight vector per cluster")
        dims = {c.input_dim for c in clusters}
        if len(dims) != 1:
            raise DimensionError(f"clusters disagree on input dimension: {sorted(dims)}")
        self.clusters = list(clusters)
        self.freeze_lambdas = bool(freeze_lambdas)
        lambdas = np.array(lambdas, dtype=np.float64).reshape(1, -1)
        if lambdas.shape[1] != len(clusters) + 1:
            raise DimensionError(f"expected {len(clusters) + 1} mixing coefficients, got {lambdas.shape[1]}")
        self.params = {"lambda": lambdas}
        for z, (c, w) in enumerate(zip(self.clusters, weights)):
            w = np.array(w, dtype=np.float64).reshape(-1, 1)
            if w.shape[0] != c.size:
                raise DimensionError(f"cluster {z}: {w.shape[0]} weights for {c.size} units")
            self.params[f"c{z}.centers"] = c.centers
            self.params[f"c{z}.widths"] = c.widths
            self.params[f"c{z}.w"] = w

    @classmethod
    def init(cls, sizes, d, rng, kernels=CLUSTER_KERNELS, freeze_lambdas=False):
        if len(sizes) != len(kernels):
            raise DimensionError(f"{len(sizes)} cluster sizes for {len(kernels)} kernels")
        clusters, weights = [], []
        for q, kind in zip(sizes, kernels):
            clusters.append(RbfLayer.init(q, d, kind, rng))
            limit = np.sqrt(6.0 / (q + 1))
            weights.append((2.0 * rng.uniform(q, 1) - 1.0) * limit)
        m = len(sizes)
        lambdas = np.concatenate([[0.0], np.full(m, 1.0 / m)])
        return cls(clusters, weights, lambdas, freeze_lambdas)

    @property
    def input_dim(self):
        return self.clusters[0].input_dim

    output_dim = 1

    def forward(self, x):
        lam = self.params["lambda"][0]
        raw = np.full((x.shape[0], 1), lam[0])
        gs, scores = [], []
        for z, c in enumerate(self.clusters):
            g = c.hidden(x)
            s = g @ self.params[f"c{z}.w"]
            raw += lam[z + 1] * s
            gs.append(g)
            scores.append(s)
        return raw, (x, gs, scores)

    def backward(self, cache, dy):
        x, gs, scores = cache
        if dy.shape != (x.shape[0], 1):
            raise DimensionError(f"upstream gradient must have shape {(x.shape[0], 1)}, got {dy.shape}")
        lam = self.params["lambda"][0]
        grads = {}
        dlam = np.zeros_like(self.params["lambda"])
        dlam[0, 0] = dy.sum()
        dx = np.zeros_like(x)
        for z, c in enumerate(self.clusters):
            dlam[0, z + 1] = float((dy * scores[z]).sum())
            ds = dy * lam[z + 1]
            w = self.params[f"c{z}.w"]
            grads[f"c{z}.w"] = gs[z].T @ ds
            dxz, dc, dwid = c.hidden_backward(x, gs[z], ds @ w.T)
            grads[f"c{z}.centers"] = dc
            grads[f"c{z}.widths"] = dwid
            dx += dxz
        if not self.freeze_lambdas:
            grads["lambda"] = dlam
        return dx, grads

    def post_update(self):
        for c in self.clusters:
            c.clamp_widths()
