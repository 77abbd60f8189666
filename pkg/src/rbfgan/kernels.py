"""Radial kernels and their batched evaluation.

Three kernels of the distance r = ||x - v||:

    gaussian                exp(-r^2 / (2 sigma^2))
    laplace                 exp(-r / sigma)
    inverse-multiquadrics   1 / sqrt(r^2 + sigma^2)

The batched routines have a numba path and a numpy path with the same
signature; :mod:`rbfgan._backend` picks one at call time.
"""
import math
from enum import Enum

import numpy as np

from . import _backend
from .errors import DimensionError, ParameterError
from .tensor import check_finite

SIGMA_MIN = 1e-3


class KernelKind(str, Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    INVERSE_MULTIQUADRICS = "inverse-multiquadrics"

    @property
    def code(self):
        return _CODES[self]

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ParameterError(
                f"unknown kernel {value!r}; expected one of {[k.value for k in cls]}"
            ) from None


_CODES = {
    KernelKind.GAUSSIAN: 0,
    KernelKind.LAPLACE: 1,
    KernelKind.INVERSE_MULTIQUADRICS: 2,
}

# order of clusters in the default RBF-cluster discriminator
CLUSTER_KERNELS = (KernelKind.GAUSSIAN, KernelKind.LAPLACE, KernelKind.INVERSE_MULTIQUADRICS)


def _check_args(x, v, sigma):
    x = check_finite(np.asarray(x, dtype=np.float64).ravel(), "x")
    v = check_finite(np.asarray(v, dtype=np.float64).ravel(), "v")
    if x.shape != v.shape:
        raise DimensionError(f"x has dimension {x.size} but center has {v.size}")
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma < SIGMA_MIN:
        raise ParameterError(f"width must be >= {SIGMA_MIN}, got {sigma}")
    return x, v, sigma


def kernel_eval(kind, x, v, sigma):
    kind = KernelKind.parse(kind)
    x, v, sigma = _check_args(x, v, sigma)
    r2 = float(np.sum((x - v) ** 2))
    if kind is KernelKind.GAUSSIAN:
        return math.exp(-r2 / (2.0 * sigma * sigma))
    if kind is KernelKind.LAPLACE:
        return math.exp(-math.sqrt(r2) / sigma)
    return 1.0 / math.sqrt(r2 + sigma * sigma)


def kernel_grad(kind, x, v, sigma):
    """Return (dg/dx, dg/dv, dg/dsigma).

    The Laplace kernel is not differentiable at x == v; its x and v
    gradients are taken as zero there.
    """
    kind = KernelKind.parse(kind)
    x, v, sigma = _check_args(x, v, sigma)
    diff = x - v
    r2 = float(np.sum(diff * diff))
    if kind is KernelKind.GAUSSIAN:
        g = math.exp(-r2 / (2.0 * sigma * sigma))
        h = g / (sigma * sigma)
        dsig = g * r2 / sigma ** 3
    elif kind is KernelKind.LAPLACE:
        r = math.sqrt(r2)
        g = math.exp(-r / sigma)
        h = g / (sigma * r) if r > 0.0 else 0.0
        dsig = g * r / (sigma * sigma)
    else:
        g = 1.0 / math.sqrt(r2 + sigma * sigma)
        h = g ** 3
        dsig = -sigma * g ** 3
    dx = -h * diff
    return dx, -dx, dsig


# ---------------------------------------------------------------- numpy path

def _activations_np(code, x, centers, widths):
    diff = x[:, None, :] - centers[None, :, :]
    r2 = np.einsum("nqd,nqd->nq", diff, diff)
    if code == 0:
        return np.exp(-r2 / (2.0 * widths * widths))
    if code == 1:
        return np.exp(-np.sqrt(r2) / widths)
    return 1.0 / np.sqrt(r2 + widths * widths)


def _backward_np(code, x, centers, widths, g, dg):
    diff = x[:, None, :] - centers[None, :, :]
    r2 = np.einsum("nqd,nqd->nq", diff, diff)
    if code == 0:
        h = g / (widths * widths)
        dsig = g * r2 / widths ** 3
    elif code == 1:
        r = np.sqrt(r2)
        safe = np.where(r > 0.0, r, 1.0)
        h = np.where(r > 0.0, g / (widths * safe), 0.0)
        dsig = g * r / (widths * widths)
    else:
        h = g ** 3
        dsig = -widths * g ** 3
    c = dg * h
    dcenters = np.einsum("nq,nqd->qd", c, diff)
    dx = -np.einsum("nq,nqd->nd", c, diff)
    dwidths = np.sum(dg * dsig, axis=0)
    return dx, dcenters, dwidths


# ---------------------------------------------------------------- numba path

@_backend.njit
def _activations_nb(code, x, centers, widths):
    n, d = x.shape
    q = centers.shape[0]
    out = np.empty((n, q))
    for i in range(n):
        for j in range(q):
            r2 = 0.0
            for k in range(d):
                t = x[i, k] - centers[j, k]
                r2 += t * t
            s = widths[j]
            if code == 0:
                out[i, j] = math.exp(-r2 / (2.0 * s * s))
            elif code == 1:
                out[i, j] = math.exp(-math.sqrt(r2) / s)
            else:
                out[i, j] = 1.0 / math.sqrt(r2 + s * s)
    return out


@_backend.njit
def _backward_nb(code, x, centers, widths, g, dg):
    n, d = x.shape
    q = centers.shape[0]
    dx = np.zeros((n, d))
    dcenters = np.zeros((q, d))
    dwidths = np.zeros(q)
    for i in range(n):
        for j in range(q):
            r2 = 0.0
            for k in range(d):
                t = x[i, k] - centers[j, k]
                r2 += t * t
            s = widths[j]
            gij = g[i, j]
            if code == 0:
                h = gij / (s * s)
                dsig = gij * r2 / (s * s * s)
            elif code == 1:
                r = math.sqrt(r2)
                h = gij / (s * r) if r > 0.0 else 0.0
                dsig = gij * r / (s * s)
            else:
                h = gij * gij * gij
                dsig = -s * gij * gij * gij
            c = dg[i, j] * h
            dwidths[j] += dg[i, j] * dsig
            for k in range(d):
                t = c * (x[i, k] - centers[j, k])
                dcenters[j, k] += t
                dx[i, k] -= t
    return dx, dcenters, dwidths


def rbf_activations(kind, x, centers, widths):
    """Kernel matrix G[i, j] = g(x_i, centers_j, widths_j), shape (n, q)."""
    code = KernelKind.parse(kind).code
    widths = np.ascontiguousarray(widths, dtype=np.float64).ravel()
    if _backend.use_numba():
        return _activations_nb(code, x, centers, widths)
    return _activations_np(code, x, centers, widths)


def rbf_backward(kind, x, centers, widths, g, dg):
    """Gradients of sum(dg * G) w.r.t. inputs, centers and widths."""
    code = KernelKind.parse(kind).code
    widths = np.ascontiguousarray(widths, dtype=np.float64).ravel()
    dg = np.ascontiguousarray(dg, dtype=np.float64)
    if _backend.use_numba():
        return _backward_nb(code, x, centers, widths, g, dg)
    return _backward_np(code, x, centers, widths, g, dg)
