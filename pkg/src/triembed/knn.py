"""Approximate k-nearest neighbors via a random-projection forest.

Each tree recursively splits points on a random unit direction at the
median projection until buckets fall under ``leaf_size``. Queries over
the indexed points take the union of a point's buckets across all trees
as candidates and rank them by exact Euclidean distance, so approximate
results can miss neighbors but never invent closer ones. ``exact_knn``
is the brute-force reference used for testing and small runs.
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TREES = 20
DEFAULT_LEAF_SIZE = 64

# namespace tags so per-tree and per-point RNG substreams never collide
_FOREST_STREAM = 0x5254
_MAX_SPLIT_RETRIES = 3


@dataclass
class FlatTree:
    """One random-projection tree in flat-array form.

    Internal node i splits on ``normals[i]`` at ``thresholds[i]``;
    ``children[i]`` holds child slots, where value c >= 0 is an internal
    node and c < 0 encodes leaf number -(c + 1). ``point_leaf[p]`` is the
    leaf bucket that holds point p (every point sits in exactly one).
    """

    normals: np.ndarray
    thresholds: np.ndarray
    children: np.ndarray
    buckets: list = field(default_factory=list)
    point_leaf: np.ndarray = None


@dataclass
class RPForest:
    trees: list
    leaf_size: int
    seed: int


@dataclass
class NeighborTable:
    """Per-point k nearest candidates, self excluded.

    Rows are sorted ascending by distance with ties broken by smaller
    index; ``indices[i, j]`` is the j-th nearest neighbor of point i.
    """

    indices: np.ndarray
    distances: np.ndarray

    @property
    def k(self) -> int:
        return self.indices.shape[1]


def build_forest(X, n_trees=DEFAULT_TREES, leaf_size=DEFAULT_LEAF_SIZE, seed=0):
    """Build ``n_trees`` random-projection trees over the rows of X.

    Deterministic per seed: each tree draws from its own substream, so
    trees could also be built in parallel without changing the result.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 points to build a forest, got {n}")
    if leaf_size < 2:
        raise ValueError(f"leaf_size must be >= 2, got {leaf_size}")
    trees = [_build_tree(X, leaf_size, np.random.default_rng([seed, _FOREST_STREAM, t]))
             for t in range(n_trees)]
    return RPForest(trees=trees, leaf_size=leaf_size, seed=seed)


def _build_tree(X, leaf_size, rng):
    n, m = X.shape
    normals, thresholds, children = [], [], []
    buckets = []
    point_leaf = np.empty(n, dtype=np.int64)

    def new_leaf(idx):
        leaf_id = len(buckets)
        idx = np.sort(idx)
        buckets.append(idx)
        point_leaf[idx] = leaf_id
        return -(leaf_id + 1)

    def split(idx):
        # returns the slot id of the subtree rooted at this index set
        if idx.size <= leaf_size:
            return new_leaf(idx)
        sub = X[idx]
        left_mask = None
        for _ in range(_MAX_SPLIT_RETRIES):
            direction = rng.standard_normal(m)
            norm = np.linalg.norm(direction)
            while norm == 0.0:
                direction = rng.standard_normal(m)
                norm = np.linalg.norm(direction)
            direction /= norm
            proj = sub @ direction
            threshold = np.median(proj)
            mask = proj < threshold
            n_left = int(mask.sum())
            if 0 < n_left < idx.size:
                left_mask = mask
                break
        if left_mask is None:
            # degenerate projections (duplicate-heavy data): force a
            # balanced split in deterministic order
            order = np.argsort(proj, kind="stable")
            half = idx.size // 2
            left_mask = np.zeros(idx.size, dtype=bool)
            left_mask[order[:half]] = True
            threshold = proj[order[half]]
        node = len(normals)
        normals.append(direction)
        thresholds.append(threshold)
        children.append([0, 0])
        children[node][0] = split(idx[left_mask])
        children[node][1] = split(idx[~left_mask])
        return node

    root_idx = np.arange(n, dtype=np.int64)
    if root_idx.size <= leaf_size:
        new_leaf(root_idx)
        return FlatTree(
            normals=np.zeros((0, m)),
            thresholds=np.zeros(0),
            children=np.zeros((0, 2), dtype=np.int64),
            buckets=buckets,
            point_leaf=point_leaf,
        )
    split(root_idx)
    return FlatTree(
        normals=np.asarray(normals),
        thresholds=np.asarray(thresholds),
        children=np.asarray(children, dtype=np.int64),
        buckets=buckets,
        point_leaf=point_leaf,
    )


def _top_k(cand, d2, k):
    # ascending by (distance, index); candidates must be unique
    order = np.lexsort((cand, d2))[:k]
    return cand[order], np.sqrt(d2[order])


def query_all_knn(forest, X, k, search_factor=3):
    """Approximate k nearest neighbors of every indexed point.

    Candidates are the union of the point's leaf buckets over all trees;
    when that union is thinner than ``search_factor * k`` it is expanded
    one hop through the candidates' own buckets. Exact distances are
    computed for every candidate and the closest k kept.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n = {n}, got {k}")
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    trees = forest.trees
    min_pool = search_factor * k

    def bucket_union(i):
        return np.unique(np.concatenate([t.buckets[t.point_leaf[i]] for t in trees]))

    for i in range(n):
        cand = bucket_union(i)
        if cand.size - 1 < min_pool:
            hop = [bucket_union(c) for c in cand if c != i]
            cand = np.unique(np.concatenate([cand] + hop))
        cand = cand[cand != i]
        if cand.size < k:
            cand = np.delete(np.arange(n, dtype=np.int64), i)
        diff = X[cand] - X[i]
        d2 = np.einsum("ij,ij->i", diff, diff)
        indices[i], distances[i] = _top_k(cand, d2, k)
    return NeighborTable(indices=indices, distances=distances)


def exact_knn(X, k, block_rows=None):
    """Exact k nearest neighbors by full scan (the testing oracle)."""
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n = {n}, got {k}")
    if block_rows is None:
        block_rows = max(1, min(n, int(4e7 // max(1, n * m))))
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    all_idx = np.arange(n, dtype=np.int64)
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        diff = X[start:stop, None, :] - X[None, :, :]
        d2 = np.einsum("bij,bij->bi", diff, diff)
        for row in range(start, stop):
            d2_row = d2[row - start]
            d2_row[row] = np.inf
            # argpartition then widen across boundary ties so the final
            # order is exactly ascending (distance, index)
            part = np.argpartition(d2_row, k - 1)[:k]
            edge = d2_row[part].max()
            pool = all_idx[d2_row <= edge]
            indices[row], distances[row] = _top_k(pool, d2_row[pool], k)
    return NeighborTable(indices=indices, distances=distances)
