"""Adaptive distance scaling, triplet sampling, and triplet weighting.

A triplet (i, j, k) records that point i sits closer to j than to k in
the input space. Per point we keep m' sampled triplets for each of its m
nearest neighbors plus r fully random ones, weight each by how much
farther k is than j (under per-point density scaling), and squash the
weights through a gamma-scaled log transform.
"""

from dataclasses import dataclass, replace

import numpy as np

# lower bound keeps the scaled distances defined on duplicate-heavy data
SIGMA_FLOOR = 1e-10

_TRIPLET_STREAM = 0x5453
_MAX_REJECTION_ROUNDS = 200


@dataclass(frozen=True)
class TripletSet:
    """Sampled triplets with their staged weights.

    triples is (T, 3) int64 rows (i, j, k) with pairwise-distinct entries
    and scaled d2(i, j) <= d2(i, k). log_raw_weights holds the exponent
    d2(i, k) - d2(i, j); weights is filled by weight_triplets and is None
    until then.
    """

    triples: np.ndarray
    log_raw_weights: np.ndarray
    weights: np.ndarray = None

    def __len__(self):
        return self.triples.shape[0]


def compute_sigmas(neighbors):
    """Per-point scale: mean distance to the 4th..6th nearest neighbors.

    Requires a NeighborTable with at least 6 columns. Scales are floored
    at SIGMA_FLOOR so duplicated points cannot produce zero.
    """
    if neighbors.k < 6:
        raise ValueError(
            f"need at least 6 neighbors per point to compute scale factors, "
            f"table has {neighbors.k}"
        )
    sigmas = neighbors.distances[:, 3:6].mean(axis=1)
    return np.maximum(sigmas, SIGMA_FLOOR)


def scaled_sqdist(i, j, X, sigmas):
    """Squared Euclidean distance between points i and j divided by
    sigma_i * sigma_j; symmetric in (i, j)."""
    diff = X[i] - X[j]
    return float(diff @ diff) / (sigmas[i] * sigmas[j])


def _scaled_sq_to(i, idx, X, sigmas):
    diff = X[idx] - X[i]
    return np.einsum("ij,ij->i", diff, diff) / (sigmas[i] * sigmas[idx])


def sample_triplets(X, neighbors, config, seed=0, sigmas=None):
    """Draw the triplet set for every point.

    For each point i and each of its config.m_neighbors nearest neighbors
    j, config.m_prime triplets (i, j, k) are drawn with k uniform among
    the points farther from i than j (in scaled squared distance), via
    rejection sampling capped at 200 attempts per slot with a fallback to
    the farthest candidate attempted. config.r_random extra triplets draw
    j and k uniformly and orient them by nearness. log_raw_weights are
    filled; weights are left for weight_triplets.

    Deterministic per seed; every point samples from its own substream,
    so the loop could be parallelized without changing the output.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    m = config.m_neighbors
    if n <= m + 1:
        raise ValueError(f"need n > m_neighbors + 1 = {m + 1} points, got {n}")
    if neighbors.k < m:
        raise ValueError(
            f"neighbor table has {neighbors.k} columns, need m_neighbors = {m}"
        )
    if sigmas is None:
        sigmas = compute_sigmas(neighbors)

    all_triples = []
    all_logw = []
    for i in range(n):
        rng = np.random.default_rng([seed, _TRIPLET_STREAM, i])
        nbr = neighbors.indices[i, :m]
        # thresholds recomputed from X (not the table) so they are
        # bit-identical to the candidate distances they gate
        thr_nbr = _scaled_sq_to(i, nbr, X, sigmas)
        triples, logw = _sample_point(
            i, nbr, thr_nbr, X, sigmas, n, config.m_prime, config.r_random, rng
        )
        all_triples.append(triples)
        all_logw.append(logw)
    return TripletSet(
        triples=np.concatenate(all_triples, axis=0),
        log_raw_weights=np.concatenate(all_logw),
    )


def _sample_point(i, nbr, thr_nbr, X, sigmas, n, m_prime, r_random, rng):
    m = nbr.size
    n_nn = m * m_prime
    j_slot = np.repeat(nbr, m_prime)
    thr_slot = np.repeat(thr_nbr, m_prime)

    k_slot = np.full(n_nn, -1, dtype=np.int64)
    d2_slot = np.empty(n_nn, dtype=np.float64)
    best_k = np.full(n_nn, -1, dtype=np.int64)
    best_d2 = np.full(n_nn, -np.inf)
    alive = np.arange(n_nn)
    for _ in range(_MAX_REJECTION_ROUNDS):
        if alive.size == 0:
            break
        draws = rng.integers(0, n, size=alive.size)
        d2 = _scaled_sq_to(i, draws, X, sigmas)
        valid = (draws != i) & (draws != j_slot[alive])
        better = valid & (d2 > best_d2[alive])
        best_k[alive[better]] = draws[better]
        best_d2[alive[better]] = d2[better]
        accepted = valid & (d2 > thr_slot[alive])
        hit = alive[accepted]
        k_slot[hit] = draws[accepted]
        d2_slot[hit] = d2[accepted]
        alive = alive[~accepted]
    if alive.size:
        if np.any(best_k[alive] < 0):
            raise RuntimeError(
                f"triplet sampling exhausted for point {i}: no valid candidate "
                f"in {_MAX_REJECTION_ROUNDS} attempts"
            )
        k_slot[alive] = best_k[alive]
        d2_slot[alive] = best_d2[alive]

    nn_triples = np.column_stack([np.full(n_nn, i, dtype=np.int64), j_slot, k_slot])
    nn_logw = d2_slot - thr_slot
    # fallback candidates may sit nearer than j; swap to keep j the closer point
    flipped = d2_slot < thr_slot
    if np.any(flipped):
        nn_triples[flipped] = nn_triples[flipped][:, [0, 2, 1]]
        nn_logw[flipped] = -nn_logw[flipped]

    if r_random == 0:
        return nn_triples, nn_logw

    pairs = rng.integers(0, n, size=(r_random, 2))
    bad = (pairs[:, 0] == i) | (pairs[:, 1] == i) | (pairs[:, 0] == pairs[:, 1])
    while np.any(bad):
        pairs[bad] = rng.integers(0, n, size=(int(bad.sum()), 2))
        bad = (pairs[:, 0] == i) | (pairs[:, 1] == i) | (pairs[:, 0] == pairs[:, 1])
    d2_j = _scaled_sq_to(i, pairs[:, 0], X, sigmas)
    d2_k = _scaled_sq_to(i, pairs[:, 1], X, sigmas)
    swap = d2_j > d2_k
    pairs[swap] = pairs[swap][:, ::-1]
    rnd_triples = np.column_stack([np.full(r_random, i, dtype=np.int64), pairs])
    rnd_logw = np.abs(d2_k - d2_j)
    return (
        np.concatenate([nn_triples, rnd_triples], axis=0),
        np.concatenate([nn_logw, rnd_logw]),
    )


def weight_triplets(tset, gamma=500.0, delta=1e-4):
    """Fill triplet weights with log(1 + gamma * (w / W + delta)).

    w is exp(log_raw_weight) and W its maximum over the set, computed in
    log space (exp(log_raw - max)) so the exponent never overflows. The
    argmax triplet gets log(1 + gamma * (1 + delta)); weights lie in
    [log(1 + gamma * delta), log(1 + gamma * (1 + delta))].
    """
    if len(tset) == 0:
        raise ValueError("cannot weight an empty triplet set")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta!r}")
    logw = tset.log_raw_weights
    if not np.all(np.isfinite(logw)):
        raise ValueError("log_raw_weights contain non-finite values")
    weights = np.log1p(gamma * (np.exp(logw - logw.max()) + delta))
    return replace(tset, weights=weights)
