"""Fast change of basis between point values and samplet coefficients.

Both directions sweep the cluster tree once and apply each cluster's small
orthogonal transform, so the cost is linear in the number of points.  The
slot enumeration is the one fixed by SampletBasis.
"""

from __future__ import annotations

import numpy as np

from .construction import SampletBasis


class CoefficientVector:
    """Samplet coefficients of one signal, tied to the generating basis."""

    __slots__ = ("slots", "basis")

    def __init__(self, slots, basis):
        slots = np.asarray(slots, dtype=float)
        if slots.shape[0] != basis.n:
            raise ValueError(f"expected {basis.n} slots, got {slots.shape[0]}")
        self.slots = slots
        self.basis = basis

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.slots
        return self.slots.astype(dtype)

    def __len__(self):
        return self.slots.shape[0]

    @property
    def nnz(self):
        return int(np.count_nonzero(self.slots))

    def copy(self):
        return CoefficientVector(self.slots.copy(), self.basis)


def _as_columns(values, n):
    arr = np.asarray(values, dtype=float)
    if arr.shape[0] != n:
        raise ValueError(f"length mismatch: expected {n}, got {arr.shape[0]}")
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[:, None]
    return arr, squeeze


def forward_transform(basis: SampletBasis, values, out=None) -> CoefficientVector:
    """Samplet coefficients of point values given in original point order.

    Accepts a vector or an (N, k) matrix of k signals; the matrix form
    returns a plain array of transformed columns.  Pass `out` to reuse a
    buffer (in-place when `out is values`).
    """
    tree = basis.tree
    arr, squeeze = _as_columns(values, basis.n)
    work = arr[tree.permutation]
    if out is None:
        out = np.empty_like(work)
    else:
        out, _ = _as_columns(out, basis.n)
    scaling = [None] * len(tree.clusters)
    for cluster in tree.postorder:
        t = basis.transforms[cluster.index]
        if cluster.is_leaf:
            x = work[cluster.start : cluster.stop]
        else:
            left, right = cluster.children
            x = np.concatenate([scaling[left.index], scaling[right.index]])
            scaling[left.index] = scaling[right.index] = None
        scaling[cluster.index] = t.q_phi.T @ x
        lo, hi = basis.samplet_slots(cluster)
        out[lo:hi] = t.q_sigma.T @ x
    out[: basis.n_scaling] = scaling[tree.root.index]
    if squeeze:
        return CoefficientVector(out[:, 0], basis)
    return out


def inverse_transform(basis: SampletBasis, coeffs):
    """Point values (original order) from samplet coefficients."""
    if isinstance(coeffs, CoefficientVector):
        if coeffs.basis is not basis:
            raise ValueError("basis mismatch: coefficients belong to another basis")
        coeffs = coeffs.slots
    tree = basis.tree
    arr, squeeze = _as_columns(coeffs, basis.n)
    work = np.empty_like(arr)
    stack = [(tree.root, arr[: basis.n_scaling])]
    while stack:
        cluster, phi = stack.pop()
        t = basis.transforms[cluster.index]
        lo, hi = basis.samplet_slots(cluster)
        x = t.q_phi @ phi + t.q_sigma @ arr[lo:hi]
        if cluster.is_leaf:
            work[cluster.start : cluster.stop] = x
        else:
            left, right = cluster.children
            n_left = basis.transforms[left.index].n_scaling
            stack.append((left, x[:n_left]))
            stack.append((right, x[n_left:]))
    out = np.empty_like(arr)
    out[tree.permutation] = work
    if squeeze:
        return out[:, 0]
    return out


def transform_matrix_congruence(
    basis: SampletBasis, dense: np.ndarray, guard: int = 8192
) -> np.ndarray:
    """Two-sided transform of a dense matrix into samplet coordinates.

    Applies the forward transform to all columns, then to all rows; for the
    dense transform T this equals T @ dense @ T.T.  Test oracle, guarded.
    """
    dense = np.asarray(dense, dtype=float)
    n = basis.n
    if dense.shape != (n, n):
        raise ValueError(f"expected ({n}, {n}) matrix, got {dense.shape}")
    if n > guard:
        raise ValueError(f"dense congruence guard exceeded: {n} > {guard}")
    cols = forward_transform(basis, dense)
    return forward_transform(basis, np.ascontiguousarray(cols.T)).T
