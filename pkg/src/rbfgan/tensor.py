"""Dense float64 matrices, a seeded PRNG and the Adam optimizer.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. Public
operations validate shape and finiteness on entry.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NonFiniteError, ParameterError

_TWO_POW_M53 = 2.0 ** -53


def as_matrix(a, name="matrix"):
    """Return ``a`` as a C-contiguous 2-D float64 array, rejecting NaN/Inf."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must have positive rows and cols, got {m.shape}")
    check_finite(m, name)
    return m


def check_finite(a, name="array"):
    if not np.isfinite(a).all():
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return a


def matmul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


class SeededRng:
    """Deterministic random stream.

    Raw 64-bit words come from the PCG64 generator (O'Neill's PCG-XSL-RR
    128/64, seeded through numpy's ``SeedSequence``). A uniform draw is the
    top 53 bits of one word scaled by 2**-53, so it lies in [0, 1). Normal
    draws use the Box-Muller transform on pairs of uniform draws.
    """

    def __init__(self, seed):
        seed = int(seed)
        if seed < 0 or seed >= 2 ** 64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._bits = np.random.PCG64(seed)

    def child(self, key):
        """Independent stream derived from (seed, key); does not consume draws."""
        ss = np.random.SeedSequence([self.seed, int(key)])
        return SeededRng(int(ss.generate_state(1, np.uint64)[0]))

    def _uniform_flat(self, n):
        raw = self._bits.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53

    def uniform(self, rows, cols):
        _check_dims(rows, cols)
        return self._uniform_flat(rows * cols).reshape(rows, cols)

    def normal(self, mean, stddev, rows, cols):
        _check_dims(rows, cols)
        if not stddev > 0:
            raise ParameterError(f"stddev must be positive, got {stddev}")
        n = rows * cols
        half = (n + 1) // 2
        u1 = self._uniform_flat(half)
        u2 = self._uniform_flat(half)
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * half)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return (mean + stddev * z[:n]).reshape(rows, cols)

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)`` driven by uniform draws."""
        perm = np.arange(n)
        if n < 2:
            return perm
        u = self._uniform_flat(n - 1)
        for k, i in enumerate(range(n - 1, 0, -1)):
            j = int(u[k] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def _check_dims(rows, cols):
    if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
        raise DimensionError(f"rows and cols must be positive integers, got {rows}x{cols}")


@dataclass
class AdamState:
    """Moment estimates for one parameter matrix."""

    shape: tuple
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.shape = tuple(self.shape)
        if not self.lr > 0:
            raise ParameterError(f"learning rate must be positive, got {self.lr}")
        if self.m is None:
            self.m = np.zeros(self.shape)
        if self.v is None:
            self.v = np.zeros(self.shape)


def adam_step(state, param, grad):
    """Apply one bias-corrected Adam update to ``param`` in place and return it."""
    if param.shape != state.shape or grad.shape != state.shape:
        raise DimensionError(
            f"Adam state has shape {state.shape}, got param {param.shape} and grad {grad.shape}"
        )
    check_finite(grad, "gradient")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grad
    state.v *= b2
    state.v += (1.0 - b2) * (grad * grad)
    m_hat = state.m / (1.0 - b1 ** state.t)
    v_hat = state.v / (1.0 - b2 ** state.t)
    param -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return param


class Adam:
    """One :class:`AdamState` per named parameter."""

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.states = {}

    def step(self, named_params, grads):
        for name, param in named_params:
            g = grads.get(name)
            if g is None:
                continue
            st = self.states.get(name)
            if st is None:
                st = AdamState(param.shape, self.lr, self.beta1, self.beta2, self.eps)
                self.states[name] = st
            adam_step(st, param, g)
