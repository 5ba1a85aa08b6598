"""Centering, principal component analysis, and the least-squares inverse map.

PCA backs three different jobs here: dimensionality pre-reduction before
the neighbor search, the scaled initialization of the embedding, and the
reconstruction-error baseline of the global-structure score.
"""

from dataclasses import dataclass

import numpy as np

# Above this input dimensionality the dense m x m eigensolve is replaced
# by randomized subspace iteration.
DENSE_EIG_MAX_DIM = 1000

_OVERSAMPLE = 10
_POWER_ITERS = 7


@dataclass(frozen=True)
class PcaModel:
    """Top-d principal directions of a dataset.

    components has shape (d, m) with orthonormal rows; directions with
    zero variance are zero-filled and ordered last so d stays stable on
    rank-deficient data. explained_variance is nonincreasing.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray


def center(X):
    """Subtract the column means; returns (centered matrix, mean vector)."""
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    return X - mean, mean


def fit_pca(X, d, seed=0):
    """Fit the top-d principal directions and project onto them.

    Parameters
    ----------
    X : ndarray of shape (n, m)
    d : int
        Number of directions, 1 <= d <= min(n - 1, m).
    seed : int
        Only consumed by the randomized solver used when m exceeds
        DENSE_EIG_MAX_DIM; the dense path ignores it.

    Returns
    -------
    (PcaModel, ndarray of shape (n, d))
        The model and the projected (centered) data. Column j of the
        projection has sample variance explained_variance[j].
    """
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 points to fit PCA, got {n}")
    if not 1 <= d <= min(n - 1, m):
        raise ValueError(f"d must be in [1, min(n - 1, m)] = [1, {min(n - 1, m)}], got {d}")
    Xc, mean = center(X)
    if m <= DENSE_EIG_MAX_DIM:
        cov = (Xc.T @ Xc) / (n - 1)
        evals, evecs = np.linalg.eigh(cov)
        evals = evals[::-1][:d]
        components = evecs[:, ::-1][:, :d].T
    else:
        evals, components = _randomized_eig(Xc, d, seed)
    evals = np.maximum(evals, 0.0)
    components = components.copy()
    # zero-variance directions carry no signal: zero-fill, keep them last
    dead = evals <= (evals[0] * 1e-12 if evals[0] > 0 else np.inf)
    evals[dead] = 0.0
    components[dead] = 0.0
    _fix_signs(components)
    embedding = Xc @ components.T
    return PcaModel(mean=mean, components=components, explained_variance=evals), embedding


def _fix_signs(components):
    # deterministic orientation: largest-magnitude entry of each row positive
    pivot = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), pivot])
    signs[signs == 0] = 1.0
    components *= signs[:, None]


def _randomized_eig(Xc, d, seed):
    """Top-d eigenpairs of the covariance via subspace iteration on Xc."""
    n, m = Xc.shape
    rng = np.random.default_rng(seed)
    width = min(d + _OVERSAMPLE, m, n)
    Q = rng.standard_normal((m, width))
    Q, _ = np.linalg.qr(Q)
    for _ in range(_POWER_ITERS):
        Q, _ = np.linalg.qr(Xc.T @ (Xc @ Q))
    B = Xc @ Q
    small = (B.T @ B) / (n - 1)
    evals, evecs = np.linalg.eigh(small)
    order = np.argsort(evals)[::-1][:d]
    return evals[order], (Q @ evecs[:, order]).T


def pre_reduce(X, target_dims=100, seed=0):
    """Project X down to ``target_dims`` columns when it is wider than that.

    Matrices with m <= target_dims are returned unchanged (same object),
    so the step is a no-op at and below the threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] <= target_dims:
        return X
    d = min(target_dims, X.shape[0] - 1)
    _, embedding = fit_pca(X, d, seed=seed)
    return embedding


def solve_inverse_map(X, Y):
    """Best linear reconstruction of X from Y in the Frobenius norm.

    Both inputs must be centered and share their point count. Returns the
    (m, d) matrix A minimizing ||X - Y A^T||_F^2; when Y has collapsed
    directions the minimum-norm solution is returned (singular values
    below 1e-12 of the largest are dropped).
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"point count mismatch: X has {X.shape[0]} rows, Y has {Y.shape[0]}"
        )
    At, *_ = np.linalg.lstsq(Y, X, rcond=1e-12)
    return At.T
