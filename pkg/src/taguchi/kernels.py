"""Hot numeric kernels.

Each kernel has a numba version (``*_nb``) and a numpy version (``*_np``).
The public name dispatches on :data:`taguchi._accel.USE_NUMBA`. All kernels
take 0-based level indices.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


@njit(cache=True)
def pair_counts_nb(matrix, levels):
    runs, cols = matrix.shape
    out = np.zeros((cols, cols, levels, levels), dtype=np.int64)
    for r in range(runs):
        for i in range(cols):
            a = matrix[r, i]
            for j in range(cols):
                out[i, j, a, matrix[r, j]] += 1
    return out


def pair_counts_np(matrix, levels):
    matrix = np.asarray(matrix, dtype=np.int64)
    runs, cols = matrix.shape
    # one-hot (runs, cols, levels); counts[i, j, a, b] = sum_r onehot[r,i,a] * onehot[r,j,b]
    onehot = np.zeros((runs, cols, levels), dtype=np.int64)
    onehot[np.arange(runs)[:, None], np.arange(cols)[None, :], matrix] = 1
    return np.einsum("ria,rjb->ijab", onehot, onehot)


@njit(cache=True)
def column_counts_nb(matrix, levels):
    runs, cols = matrix.shape
    out = np.zeros((cols, levels), dtype=np.int64)
    for r in range(runs):
        for i in range(cols):
            out[i, matrix[r, i]] += 1
    return out


def column_counts_np(matrix, levels):
    matrix = np.asarray(matrix, dtype=np.int64)
    return np.stack([np.bincount(col, minlength=levels) for col in matrix.T])


@njit(cache=True)
def group_means_nb(matrix, values, levels):
    runs, cols = matrix.shape
    sums = np.zeros((cols, levels))
    counts = np.zeros((cols, levels), dtype=np.int64)
    for r in range(runs):
        v = values[r]
        for i in range(cols):
            sums[i, matrix[r, i]] += v
            counts[i, matrix[r, i]] += 1
    out = np.full((cols, levels), np.nan)
    for i in range(cols):
        for a in range(levels):
            if counts[i, a] > 0:
                out[i, a] = sums[i, a] / counts[i, a]
    return out


def group_means_np(matrix, values, levels):
    matrix = np.asarray(matrix, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    out = np.full((matrix.shape[1], levels), np.nan)
    for i, col in enumerate(matrix.T):
        counts = np.bincount(col, minlength=levels)
        sums = np.bincount(col, weights=values, minlength=levels)
        np.divide(sums, counts, out=out[i], where=counts > 0)
    return out


@njit(cache=True)
def grid_indices_nb(shape):
    k = shape.shape[0]
    n = 1
    for s in shape:
        n *= s
    out = np.zeros((n, k), dtype=np.int64)
    idx = np.zeros(k, dtype=np.int64)
    for r in range(n):
        out[r, :] = idx
        # odometer, last factor fastest
        j = k - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < shape[j]:
                break
            idx[j] = 0
            j -= 1
    return out


def grid_indices_np(shape):
    shape = tuple(int(s) for s in shape)
    return np.indices(shape).reshape(len(shape), -1).T.astype(np.int64)


@njit(cache=True)
def additive_grid_nb(tables, shape):
    """Sum of per-factor effects at every grid point, row-major order."""
    k = shape.shape[0]
    n = 1
    for s in shape:
        n *= s
    out = np.zeros(n)
    idx = np.zeros(k, dtype=np.int64)
    for r in range(n):
        acc = 0.0
        for j in range(k):
            acc += tables[j, idx[j]]
        out[r] = acc
        j = k - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < shape[j]:
                break
            idx[j] = 0
            j -= 1
    return out


def additive_grid_np(tables, shape):
    shape = tuple(int(s) for s in shape)
    acc = np.zeros(shape)
    for j, s in enumerate(shape):
        view = [1] * len(shape)
        view[j] = s
        acc = acc + tables[j, :s].reshape(view)
    return acc.ravel()


_IMPL = "numba" if USE_NUMBA else "numpy"


def _pick(nb, np_):
    return nb if USE_NUMBA else np_


def _ints(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def pair_counts(matrix, levels):
    """(cols, cols, levels, levels) ordered-pair histogram of a 0-based matrix."""
    return _pick(pair_counts_nb, pair_counts_np)(_ints(matrix), int(levels))


def column_counts(matrix, levels):
    return _pick(column_counts_nb, column_counts_np)(_ints(matrix), int(levels))


def group_means(matrix, values, levels):
    """Mean of ``values`` over the runs at each (column, level); NaN for empty groups."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    return _pick(group_means_nb, group_means_np)(_ints(matrix), values, int(levels))


def grid_indices(shape):
    """All index tuples of a full factorial grid, last factor varying fastest."""
    return _pick(grid_indices_nb, grid_indices_np)(_ints(shape))


def additive_grid(tables, shape):
    tables = np.ascontiguousarray(tables, dtype=np.float64)
    return _pick(additive_grid_nb, additive_grid_np)(tables, _ints(shape))
