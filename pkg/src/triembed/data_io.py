"""Dataset loading, synthetic benchmark generation, and embedding output.

All matrices are float64 numpy arrays with one point per row. Loaders
reject non-finite values and malformed files with a positioned error so
CLI users can find the offending cell.
"""

import numpy as np

RAW_F32_HEADER_BYTES = 8


def _require_finite(values, what):
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(
            f"non-finite value in {what} at line {bad[0] + 1}, column {bad[1] + 1}"
        )


def load_matrix(path, fmt="csv"):
    """Load an n x m data matrix from ``path``.

    Parameters
    ----------
    path : str or Path
        File to read.
    fmt : {"csv", "raw-f32"}
        ``csv`` is comma-separated numeric rows with no header.
        ``raw-f32`` is an 8-byte header of two little-endian uint32
        (n, m) followed by n*m little-endian float32 values.

    Returns
    -------
    ndarray of shape (n, m), float64, row order preserved.

    Raises
    ------
    ValueError
        On ragged rows, non-numeric cells, non-finite values, or a
        header/payload size mismatch; messages carry the position.
    OSError
        If the file cannot be read.
    """
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "raw-f32":
        return _load_raw_f32(path)
    raise ValueError(f"unknown matrix format {fmt!r}")


def _load_csv(path):
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ValueError(f"ragged row at line {lineno}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                col = next(i for i, c in enumerate(cells) if not _is_number(c))
                raise ValueError(
                    f"non-numeric cell at line {lineno}, column {col + 1}"
                ) from None
    if not rows:
        raise ValueError(f"empty matrix in {path}")
    values = np.asarray(rows, dtype=np.float64)
    _require_finite(values, "matrix")
    return values


def _is_number(cell):
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _load_raw_f32(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < RAW_F32_HEADER_BYTES:
        raise ValueError(f"raw-f32 file shorter than the {RAW_F32_HEADER_BYTES}-byte header")
    n, m = np.frombuffer(data, dtype="<u4", count=2)
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise ValueError(f"raw-f32 header declares empty matrix ({n} x {m})")
    expected = RAW_F32_HEADER_BYTES + 4 * n * m
    if len(data) != expected:
        raise ValueError(
            f"header/payload size mismatch: header says {n} x {m} "
            f"({expected} bytes), file has {len(data)} bytes"
        )
    values = np.frombuffer(data, dtype="<f4", offset=RAW_F32_HEADER_BYTES)
    values = values.reshape(n, m).astype(np.float64)
    _require_finite(values, "matrix")
    return values


def write_matrix_raw_f32(values, path):
    """Write a matrix in the raw-f32 format (inverse of load_matrix)."""
    values = np.ascontiguousarray(values, dtype="<f4")
    n, m = values.shape
    with open(path, "wb") as fh:
        fh.write(np.asarray([n, m], dtype="<u4").tobytes())
        fh.write(values.tobytes())


def load_labels(path):
    """Load one integer class label per line; returns an int64 vector."""
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                labels.append(int(line.strip()))
            except ValueError:
                raise ValueError(f"non-integer label at line {lineno}") from None
    return np.asarray(labels, dtype=np.int64)


def make_s_curve(n, seed=0):
    """Sample ``n`` points uniformly from a 3-D S-shaped manifold.

    Points are (sin t, u, sign(t) * (cos t - 1)) with t uniform on
    [-3*pi/2, 3*pi/2] and u uniform on [0, 2]. Labels are 10 equal-width
    bins of t, which color the sheet by position along the curve.

    Returns
    -------
    (ndarray of shape (n, 3), int64 ndarray of shape (n,))
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    half_span = 1.5 * np.pi
    t = rng.uniform(-half_span, half_span, size=n)
    u = rng.uniform(0.0, 2.0, size=n)
    points = np.column_stack([np.sin(t), u, np.sign(t) * (np.cos(t) - 1.0)])
    bin_width = 2.0 * half_span / 10.0
    labels = np.clip(((t + half_span) // bin_width).astype(np.int64), 0, 9)
    return points, labels


def _format_value(v):
    # shortest decimal that round-trips; integral values drop the ".0"
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def write_embedding(Y, labels, path):
    """Write an embedding as CSV, one point per row.

    When ``labels`` is not None an integer label column is appended.
    Values use the shortest round-trippable decimal form, so reading the
    file back with load_matrix reproduces Y exactly.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise ValueError(f"embedding must be a nonempty 2-D array, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ValueError("embedding contains non-finite values")
    if labels is not None and len(labels) != Y.shape[0]:
        raise ValueError(
            f"label count {len(labels)} does not match point count {Y.shape[0]}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        for i, row in enumerate(Y):
            cells = [_format_value(v) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells))
            fh.write("\n")
