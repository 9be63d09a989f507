"""NumPy reference implementations of the hot kernels.

This module defines the semantics; ``lanerl._speedups`` is the compiled
mirror of the same functions. Both operate on float64 C-contiguous arrays
and are deterministic for identical inputs.

Activation codes: 0 linear, 1 relu, 2 tanh, 3 sigmoid.
"""

import math

import numpy as np

ACT_LINEAR = 0
ACT_RELU = 1
ACT_TANH = 2
ACT_SIGMOID = 3


def _activate(code, z):
    if code == ACT_LINEAR:
        return z.copy()
    if code == ACT_RELU:
        return np.maximum(z, 0.0)
    if code == ACT_TANH:
        return np.tanh(z)
    if code == ACT_SIGMOID:
        # split by sign for stability on large |z|
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    raise ValueError(f"unknown activation code {code}")


def _activation_backward(code, pre, post, g):
    """g * f'(pre); uses post-activation values where that is cheaper."""
    if code == ACT_LINEAR:
        return g.copy()
    if code == ACT_RELU:
        return np.where(pre > 0.0, g, 0.0)
    if code == ACT_TANH:
        return g * (1.0 - post * post)
    if code == ACT_SIGMOID:
        return g * (post * (1.0 - post))
    raise ValueError(f"unknown activation code {code}")


def forward_pass(weights, biases, act_codes, x):
    """Run the affine/activation chain over a batch.

    x: (batch, in_dim). Returns (pres, posts), each a list with one
    (batch, layer_out) array per layer; posts[-1] is the network output.
    """
    pres = []
    posts = []
    cur = x
    for w, b, code in zip(weights, biases, act_codes):
        z = cur @ w.T
        z += b
        h = _activate(code, z)
        pres.append(z)
        posts.append(h)
        cur = h
    return pres, posts


def backward_pass(weights, act_codes, x, pres, posts, gout):
    """Backpropagate gout (batch, out_dim) through a cached forward pass.

    Returns (dws, dbs, dx): weight/bias gradients summed over the batch
    plus the per-sample input gradient (batch, in_dim).
    """
    n = len(weights)
    dws = [None] * n
    dbs = [None] * n
    g = gout
    for i in range(n - 1, -1, -1):
        g = _activation_backward(act_codes[i], pres[i], posts[i], g)
        inp = posts[i - 1] if i > 0 else x
        dws[i] = g.T @ inp
        dbs[i] = g.sum(axis=0)
        g = g @ weights[i]
    return dws, dbs, g


def sgd_update(params, grads, velocities, lr, momentum, clip_norm):
    """Momentum SGD over a flat list of arrays, updating in place.

    Gradients are rescaled so their global L2 norm is at most clip_norm
    (0 disables clipping) before the velocity update. Returns the pre-clip
    global norm; if it is non-finite nothing is modified and the caller is
    expected to reject the step.
    """
    total = 0.0
    for g in grads:
        flat = g.ravel()
        total += float(flat @ flat)
    norm = math.sqrt(total)
    if not math.isfinite(norm):
        return norm
    scale = 1.0
    if clip_norm > 0.0 and norm > clip_norm:
        scale = clip_norm / norm
    for p, g, v in zip(params, grads, velocities):
        v *= momentum
        v += g * scale
        p -= lr * v
    return norm
