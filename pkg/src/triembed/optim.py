"""Triplet loss evaluation and full-batch adaptive gradient descent.

The per-triplet loss is w * s(y_i, y_k) / (s(y_i, y_j) + s(y_i, y_k))
with the heavy-tailed similarity s(a, b) = 1 / (1 + ||a - b||^2). With
u = ||y_i - y_j||^2 and v = ||y_i - y_k||^2 this simplifies to
w * (1 + u) / (2 + u + v), which is the form evaluated here (one less
division and better conditioned than the similarity ratio).

Descent is full batch with a two-phase momentum schedule and per
coordinate delta-bar-delta gain adaptation: gains grow additively while
the gradient sign agrees with its running average and shrink
geometrically on disagreement.
"""

from dataclasses import dataclass, field

import numpy as np

# delta-bar-delta constants (Jacobs-style rule)
GAIN_UP = 0.2
GAIN_DOWN = 0.8
GAIN_MIN = 0.01
GAIN_MAX = 100.0
SMOOTHING = 0.9

# base step size scale; multiplied by n / |T| so the per-point update
# magnitude stays roughly independent of the triplet budget
ETA_SCALE = 0.1

_CHUNK = 1 << 20


@dataclass
class OptimizerState:
    """Mutable state advanced once per full-batch iteration."""

    Y: np.ndarray
    velocity: np.ndarray
    gain: np.ndarray
    smoothed_grad: np.ndarray
    iter: int = 0


@dataclass
class LossReport:
    total: float
    history: list = field(default_factory=list)


def similarity(y_i, y_j):
    """Heavy-tailed similarity 1 / (1 + squared distance), in (0, 1]."""
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    return 1.0 / (1.0 + float(diff @ diff))


def triplet_loss(triple, weight, Y):
    """Loss of one weighted triplet at the embedding Y; lies in (0, weight)."""
    i, j, k = triple
    u = _sqdist(Y[i], Y[j])
    v = _sqdist(Y[i], Y[k])
    return weight * (1.0 + u) / (2.0 + u + v)


def _sqdist(a, b):
    diff = a - b
    return float(diff @ diff)


def _chunk_eval(I, J, K, w, Y, need_grad):
    Yi, Yj, Yk = Y[I], Y[J], Y[K]
    dij = Yi - Yj
    dik = Yi - Yk
    u = np.einsum("ij,ij->i", dij, dij)
    v = np.einsum("ij,ij->i", dik, dik)
    denom = 2.0 + u + v
    loss = float(np.sum(w * (1.0 + u) / denom))
    if not need_grad:
        return loss, None, None, None
    inv_d2 = w / (denom * denom)
    a = (2.0 * inv_d2 * (1.0 + v))[:, None] * dij
    b = (2.0 * inv_d2 * (1.0 + u))[:, None] * dik
    return loss, a - b, -a, b


def _accumulate(tset, Y, need_grad):
    n, d = Y.shape
    triples = tset.triples
    w = tset.weights
    if w is None:
        raise ValueError("triplet set has no weights; run weight_triplets first")
    if len(tset) and triples.max() >= n:
        raise IndexError(
            f"triplet index {triples.max()} out of range for embedding with {n} points"
        )
    total = 0.0
    grad = np.zeros((n, d)) if need_grad else None
    for start in range(0, len(tset), _CHUNK):
        sl = slice(start, min(start + _CHUNK, len(tset)))
        I, J, K = triples[sl, 0], triples[sl, 1], triples[sl, 2]
        loss, gi, gj, gk = _chunk_eval(I, J, K, w[sl], Y, need_grad)
        total += loss
        if need_grad:
            for dim in range(d):
                grad[:, dim] += np.bincount(I, weights=gi[:, dim], minlength=n)
                grad[:, dim] += np.bincount(J, weights=gj[:, dim], minlength=n)
                grad[:, dim] += np.bincount(K, weights=gk[:, dim], minlength=n)
    return total, grad


def total_loss(tset, Y):
    """Sum of per-triplet losses over the set, as a LossReport."""
    Y = np.asarray(Y, dtype=np.float64)
    total, _ = _accumulate(tset, Y, need_grad=False)
    return LossReport(total=total, history=[total])


def gradient(tset, Y):
    """Gradient of the total loss with respect to every embedding row.

    Each triplet touches only rows i, j, and k; contributions are
    accumulated in ascending triplet order so results are deterministic.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if len(tset) == 0:
        return np.zeros_like(Y)
    _, grad = _accumulate(tset, Y, need_grad=True)
    return grad


def optimize(tset, Y0, config):
    """Minimize the triplet loss from Y0 by full-batch descent.

    Runs config.iters iterations of velocity <- mu * velocity - eta *
    gain * grad with mu = 0.5 before config.momentum_switch_iter and 0.8
    after. Gains follow the delta-bar-delta rule; if the loss ever jumps
    by more than 10x the base step is halved and the velocity reset.

    Returns (final embedding, LossReport); the report history holds the
    loss at Y0, at every subsequent iterate, and at the final embedding
    (config.iters + 1 entries).
    """
    Y0 = np.asarray(Y0, dtype=np.float64)
    if not np.all(np.isfinite(Y0)):
        raise ValueError("initial embedding contains non-finite values")
    state = OptimizerState(
        Y=Y0.copy(),
        velocity=np.zeros_like(Y0),
        gain=np.ones_like(Y0),
        smoothed_grad=np.zeros_like(Y0),
    )
    eta = ETA_SCALE * Y0.shape[0] / max(1, len(tset))
    history = []
    for t in range(config.iters):
        loss, grad = _accumulate(tset, state.Y, need_grad=True)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise RuntimeError(f"non-finite loss or gradient at iteration {t}")
        history.append(loss)
        if t > 0 and loss > 10.0 * history[t - 1]:
            eta *= 0.5
            state.velocity[:] = 0.0
        agree = (grad * state.smoothed_grad) > 0.0
        state.gain = np.clip(
            np.where(agree, state.gain + GAIN_UP, state.gain * GAIN_DOWN),
            GAIN_MIN,
            GAIN_MAX,
        )
        state.smoothed_grad = SMOOTHING * state.smoothed_grad + (1.0 - SMOOTHING) * grad
        mu = 0.5 if t < config.momentum_switch_iter else 0.8
        state.velocity = mu * state.velocity - eta * (state.gain * grad)
        state.Y = state.Y + state.velocity
        state.iter = t + 1
    final, _ = _accumulate(tset, state.Y, need_grad=False)
    history.append(final)
    return state.Y, LossReport(total=final, history=history)
