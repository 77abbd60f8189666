"""Central finite-difference helpers shared by the gradient tests."""
import numpy as np

STEP = 1e-5


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    denom = max(np.linalg.norm(a), np.linalg.norm(b))
    if denom < 1e-12:
        return float(np.linalg.norm(a - b))
    return float(np.linalg.norm(a - b) / denom)


def numeric_grad(f, arr, step=STEP):
    """d f / d arr by central differences, perturbing ``arr`` in place."""
    out = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = arr[i]
        arr[i] = old + step
        fp = f()
        arr[i] = old - step
        fm = f()
        arr[i] = old
        out[i] = (fp - fm) / (2.0 * step)
    return out


def check_layer(layer, x, rng):
    """Max relative error over the input and every parameter of ``layer``."""
    y, cache = layer.forward(x)
    r = rng.standard_normal(y.shape)
    dx, grads = layer.backward(cache, r)

    def loss():
        return float(np.sum(layer.forward(x)[0] * r))

    errs = {"input": rel_err(dx, numeric_grad(loss, x))}
    for name, arr in layer.params.items():
        if name in grads:
            errs[name] = rel_err(grads[name], numeric_grad(loss, arr))
    return errs
