"""Batched LSTM cell with an explicit backward pass.

Gate rows of the weight matrix are ordered input, forget, output, candidate.
The cell input is ``[x; h_prev]``; there are no peepholes.
"""

import numpy as np


def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def cell_forward(W, b, x, h_prev, c_prev):
    """One step for a (B, ·) batch.  Returns ``h, c, cache``."""
    H = h_prev.shape[-1]
    xh = np.concatenate([x, h_prev], axis=-1)
    z = xh @ W.T + b
    ifo = sigmoid(z[..., :3 * H])
    i, f, o = ifo[..., :H], ifo[..., H:2 * H], ifo[..., 2 * H:]
    g = np.tanh(z[..., 3 * H:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (xh, i, f, o, g, c_prev, tc)


def cell_backward(W, cache, dh, dc, dW, db):
    """Backpropagate ``dh``/``dc`` through one step.

    Accumulates into ``dW`` and ``db`` in place and returns ``(dxh, dc_prev)``.
    """
    xh, i, f, o, g, c_prev, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    di = dc * g
    dg = dc * i
    df = dc * c_prev
    dz = np.concatenate([
        di * i * (1.0 - i),
        df * f * (1.0 - f),
        do * o * (1.0 - o),
        dg * (1.0 - g * g),
    ], axis=-1)
    dW += dz.T @ xh
    db += dz.sum(axis=0)
    return dz @ W, dc * f
