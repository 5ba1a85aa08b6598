"""Embedding quality measures.

Global structure is scored through the minimum reconstruction error
(MRE): the smallest Frobenius-norm error of linearly reconstructing the
centered data from the centered embedding. The global score normalizes
the MRE against the PCA optimum, exp(-(E - E_pca) / E_pca), so PCA
itself scores 1 and globally less faithful embeddings score lower.
Local structure is scored by leave-one-out 1-nearest-neighbor label
agreement in the embedding.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .pca import center, fit_pca, solve_inverse_map

# exact 1-NN is O(n^2); larger inputs are scored on a seeded subsample
NN_ACCURACY_MAX_POINTS = 20000

_SUBSAMPLE_STREAM = 0x5353


@dataclass(frozen=True)
class MetricsReport:
    mre: float
    mre_pca: float
    global_score: float
    nn_accuracy: float = None


def mre(X, Y):
    """Minimum reconstruction error of X from Y under the best linear map.

    Both inputs are centered internally; rotations and scalings of Y are
    absorbed by the map, so mre(X, Y R) == mre(X, Y) for invertible R.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"point count mismatch: X has {X.shape[0]} rows, Y has {Y.shape[0]}"
        )
    Xc, _ = center(X)
    Yc, _ = center(Y)
    A = solve_inverse_map(Xc, Yc)
    residual = Xc - Yc @ A.T
    return float(np.sum(residual * residual))


def score_from_errors(err, err_pca):
    """Global score from precomputed reconstruction errors, clamped to [0, 1]."""
    if err_pca <= 0.0:
        warnings.warn(
            "PCA reconstruction error is zero (data has rank <= d); "
            "global score degenerates to an exact-reconstruction test"
        )
        return 1.0 if err <= 1e-12 else 0.0
    return float(np.clip(np.exp(-(err - err_pca) / err_pca), 0.0, 1.0))


def global_score(X, Y, seed=0):
    """exp-normalized MRE of Y relative to the PCA optimum at the same d.

    Equals 1 for the PCA embedding (and any invertible linear transform
    of it) and decreases as the embedding loses global structure.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    _, Y_pca = fit_pca(X, Y.shape[1], seed=seed)
    err_pca = _zero_floor(mre(X, Y_pca), X)
    return score_from_errors(mre(X, Y), err_pca)


def _zero_floor(err_pca, X):
    # exact low-rank data leaves a pure-roundoff residual; treat it as zero
    Xc, _ = center(X)
    scale = float(np.sum(Xc * Xc))
    return 0.0 if err_pca <= 1e-12 * max(scale, 1.0) else err_pca


def nn_accuracy(Y, labels, max_points=NN_ACCURACY_MAX_POINTS, seed=0):
    """Fraction of points whose nearest embedded neighbor shares their label.

    The 1-nearest neighbor is exact (full scan, self excluded, distance
    ties broken by smaller index). Above ``max_points`` points a seeded
    subsample of that size is scored instead.
    """
    Y = np.asarray(Y, dtype=np.float64)
    labels = np.asarray(labels)
    n = Y.shape[0]
    if labels.shape[0] != n:
        raise ValueError(f"label count {labels.shape[0]} does not match n = {n}")
    if n < 2:
        raise ValueError("nearest-neighbor accuracy needs at least 2 points")
    if n > max_points:
        rng = np.random.default_rng([seed, _SUBSAMPLE_STREAM])
        keep = np.sort(rng.choice(n, size=max_points, replace=False))
        Y = Y[keep]
        labels = labels[keep]
        n = max_points
    hits = 0
    block = max(1, int(2e7 // max(1, n)))
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = Y[start:stop, None, :] - Y[None, :, :]
        d2 = np.einsum("bij,bij->bi", diff, diff)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        nearest = np.argmin(d2, axis=1)  # first minimum = smallest index on ties
        hits += int(np.sum(labels[nearest] == labels[start:stop]))
    return hits / n
