"""Pure-numpy implementation of the Gaussian kernel sums.

Same contract as the compiled ``_kernels`` module; used when the extension is
not built or when ``RICHKDE_BACKEND=python``.
"""

import numpy as np

EXP_CUTOFF = 700.0
# rows * n entries per distance block
_BLOCK = 1 << 20


def gaussian_sums(data: np.ndarray, points: np.ndarray, bandwidths: np.ndarray) -> np.ndarray:
    """Return S[j, k] = sum_i exp(-|points[j] - data[i]|^2 / (2 h_k^2))."""
    data = np.ascontiguousarray(data, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    bandwidths = np.ascontiguousarray(bandwidths, dtype=np.float64)
    if data.shape[1] != points.shape[1]:
        raise ValueError("points and data differ in dimension")

    n, m, r = data.shape[0], points.shape[0], bandwidths.shape[0]
    half_inv = 0.5 / (bandwidths * bandwidths)
    out = np.zeros((m, r), dtype=np.float64)
    rows = max(1, _BLOCK // max(n, 1))
    for start in range(0, m, rows):
        block = points[start:start + rows]
        diff = block[:, None, :] - data[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        for k in range(r):
            a = sq * half_inv[k]
            terms = np.exp(-np.minimum(a, EXP_CUTOFF))
            terms[a > EXP_CUTOFF] = 0.0
            out[start:start + rows, k] = terms.sum(axis=1)
    return out
