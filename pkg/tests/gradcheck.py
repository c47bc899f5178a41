"""Central finite-difference oracle for parameter gradients.

Used by both the unit tests and the acceptance suite: the oracle never
touches the analytic backward path.
"""

import numpy as np

from uqbench import nn


def loss_value(model, batch, targets, loss_fn) -> float:
    logits = nn.forward(model, batch)
    loss, _ = loss_fn(logits, targets)
    return loss


def finite_diff_grads(model, batch, targets, loss_fn, h: float = 1e-5):
    """Per-layer (dW, db) via central differences over every parameter."""
    grads = []
    for layer in model.layers:
        dw = np.zeros_like(layer.weight)
        for i in range(layer.weight.shape[0]):
            for j in range(layer.weight.shape[1]):
                orig = layer.weight[i, j]
                layer.weight[i, j] = orig + h
                up = loss_value(model, batch, targets, loss_fn)
                layer.weight[i, j] = orig - h
                down = loss_value(model, batch, targets, loss_fn)
                layer.weight[i, j] = orig
                dw[i, j] = (up - down) / (2 * h)
        db = np.zeros_like(layer.bias)
        for j in range(layer.bias.shape[0]):
            orig = layer.bias[j]
            layer.bias[j] = orig + h
            up = loss_value(model, batch, targets, loss_fn)
            layer.bias[j] = orig - h
            down = loss_value(model, batch, targets, loss_fn)
            layer.bias[j] = orig
            db[j] = (up - down) / (2 * h)
        grads.append((dw, db))
    return grads


def analytic_grads(model, batch, targets, loss_fn):
    logits, cache = nn._forward_cached(model, batch, None)
    _, dlogits = loss_fn(logits, targets)
    return nn.backward(model, cache, dlogits)


def max_mismatch(analytic, numeric, rtol: float = 1e-4, atol: float = 1e-7) -> float:
    """Worst violation ratio of |a-n| against (atol + rtol*max(|a|,|n|))."""
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            tol = atol + rtol * np.maximum(np.abs(a), np.abs(n))
            worst = max(worst, float(np.max(np.abs(a - n) / tol)))
    return worst
