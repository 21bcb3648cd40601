"""Block-sparse kernel matrices in samplet coordinates.

Cluster pairs separated well enough relative to their sizes are dropped
entirely; the surviving blocks are assembled recursively, with exact kernel
evaluation only on leaf-leaf pairs and separable polynomial interpolation on
the admissible fringe, so the whole matrix costs loglinear work.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .construction import build_samplet_basis
from .kernels import dense_kernel_matrix, kernel_matrix
from .transform import CoefficientVector, transform_matrix_congruence
from .tree import cluster_diam, cluster_dist

ENTRY_DROP = 1e-14  # relative magnitude below which stored entries are zeroed


def is_admissible(a, b, eta: float) -> bool:
    """Separation test dist(a,b) >= eta * max(diam(a), diam(b)).

    Two coincident singletons (both diameters zero) pass the >= test; the
    assembly additionally requires positive distance before trusting the
    far-field expansion.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    return cluster_dist(a, b) >= eta * max(cluster_diam(a), cluster_diam(b))


def _chebyshev_axis(n):
    k = np.arange(n)
    nodes = np.cos((2 * k + 1) * np.pi / (2 * n))
    weights = (-1.0) ** k * np.sin((2 * k + 1) * np.pi / (2 * n))
    return nodes, weights


def _barycentric_eval(nodes, weights, x):
    """Values of all Lagrange basis polynomials at the points x, (len(x), n)."""
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    hit = exact.any(axis=1)
    diff[hit] = 1.0  # dummy, rows overwritten below
    terms = weights[None, :] / diff
    out = terms / terms.sum(axis=1)[:, None]
    if np.any(hit):
        out[hit] = exact[hit].astype(float)
    return out


class _InterpolationGrids:
    """Tensor Chebyshev grids per cluster plus nested far-field factors.

    `factor[i]` maps a cluster's basis distributions to interpolation space:
    entry (s, b) is the b-th distribution applied to the s-th Lagrange
    polynomial of the cluster grid.  Built bottom-up via re-interpolation at
    the children's grids, which is exact for the tensor polynomial space.
    """

    def __init__(self, basis, degree):
        self.degree = degree
        tree = basis.tree
        dim = tree.cloud.dim
        n1 = degree + 1
        cheb, bary = _chebyshev_axis(n1)
        n_clusters = len(tree.clusters)
        self.axis_nodes = [None] * n_clusters
        self.grids = [None] * n_clusters
        self.factor = [None] * n_clusters

        span = max(cluster_diam(tree.root), 1.0)
        for cluster in tree.postorder:
            half = 0.5 * (cluster.bbox_hi - cluster.bbox_lo)
            half = np.maximum(half, 1e-8 * span)
            mid = 0.5 * (cluster.bbox_hi + cluster.bbox_lo)
            axes = [mid[a] + half[a] * cheb for a in range(dim)]
            self.axis_nodes[cluster.index] = axes
            mesh = np.meshgrid(*axes, indexing="ij")
            self.grids[cluster.index] = np.stack([m.ravel() for m in mesh], axis=1)

            t = basis.transforms[cluster.index]
            q_full = np.hstack([t.q_phi, t.q_sigma])
            if cluster.is_leaf:
                pts = tree.cluster_points(cluster)
                ev = np.ones((cluster.size, 1))
                for a in range(dim):
                    loc = (pts[:, a] - mid[a]) / half[a]
                    ax_ev = _barycentric_eval(cheb, bary, loc)
                    ev = (ev[:, :, None] * ax_ev[:, None, :]).reshape(cluster.size, -1)
                self.factor[cluster.index] = ev.T @ q_full
            else:
                carriers = []
                for child in cluster.children:
                    E = np.ones((1, 1))
                    for a in range(dim):
                        child_loc = (self.axis_nodes[child.index][a] - mid[a]) / half[a]
                        E = np.kron(E, _barycentric_eval(cheb, bary, child_loc))
                    n_sc = basis.transforms[child.index].n_scaling
                    carriers.append(E.T @ self.factor[child.index][:, :n_sc])
                self.factor[cluster.index] = np.hstack(carriers) @ q_full


@dataclass
class PatternPair:
    row: int
    col: int
    tag: str  # "near" blocks are stored; "far" pairs feed parents via interpolation


@dataclass
class BlockPattern:
    pairs: list = field(default_factory=list)
    eta: float = 1.0
    moment_degree: int = 0
    interp_degree: int = 6

    def near_pairs(self):
        return [p for p in self.pairs if p.tag == "near"]

    def far_pairs(self):
        return [p for p in self.pairs if p.tag == "far"]


class CompressedKernelMatrix:
    """Samplet-coordinate kernel matrix restricted to the retained pattern.

    `blocks[(i, j)]` holds the samplet rows/columns of cluster pair (i, j)
    (the root block also covers the coarse scaling slots).  Symmetric kernels
    give a symmetric pattern with transposed mirror blocks.
    """

    def __init__(self, basis, pattern, blocks):
        self.basis = basis
        self.pattern = pattern
        self.blocks = blocks
        self.n = basis.n
        self._plan = None

    @property
    def nnz(self):
        return int(sum(np.count_nonzero(b) for b in self.blocks.values()))

    def _apply_plan(self):
        # blocks grouped by shape for batched gather / matmul / scatter-add
        if self._plan is None:
            clusters = self.basis.tree.clusters
            groups = {}
            for (i, j), block in self.blocks.items():
                r0, _ = self.basis.stored_slots(clusters[i])
                c0, _ = self.basis.stored_slots(clusters[j])
                groups.setdefault(block.shape, []).append((r0, c0, block))
            plan = []
            for (nr, nc), items in groups.items():
                stack = np.stack([b for _, _, b in items])
                rows = np.array([r0 for r0, _, _ in items])[:, None] + np.arange(nr)
                cols = np.array([c0 for _, c0, _ in items])[:, None] + np.arange(nc)
                plan.append((stack, rows, cols))
            self._plan = plan
        return self._plan

    def matvec(self, v):
        wrap = isinstance(v, CoefficientVector)
        arr = v.slots if wrap else np.asarray(v, dtype=float)
        if arr.shape != (self.n,):
            raise ValueError(f"dim mismatch: expected ({self.n},), got {arr.shape}")
        out = np.zeros_like(arr)
        for stack, rows, cols in self._apply_plan():
            prod = stack @ arr[cols][:, :, None]
            np.add.at(out, rows, prod[:, :, 0])
        if wrap:
            return CoefficientVector(out, v.basis)
        return out

    __matmul__ = matvec

    def to_dense(self, guard: int = 8192) -> np.ndarray:
        if self.n > guard:
            raise ValueError(f"dense guard exceeded: {self.n} > {guard}")
        out = np.zeros((self.n, self.n))
        clusters = self.basis.tree.clusters
        for (i, j), block in self.blocks.items():
            r0, r1 = self.basis.stored_slots(clusters[i])
            c0, c1 = self.basis.stored_slots(clusters[j])
            out[r0:r1, c0:c1] = block
        return out

    @property
    def shape(self):
        return (self.n, self.n)


def compress_assemble(
    basis, spec, eta: float, interp_degree: int = 6
) -> CompressedKernelMatrix:
    """Assemble the compressed kernel matrix.

    Retained pairs are all cluster pairs failing the separation test; they
    are enumerated from (root, root) by single-sided descents, which covers
    pairs of clusters on different levels.  Each retained block is computed
    by a memoized one-sided refinement: pairs on the admissible fringe are
    evaluated by separable Chebyshev interpolation, non-admissible leaf-leaf
    pairs exactly, and everything beyond the fringe is never materialized.
    """
    tree = basis.tree
    grids = _InterpolationGrids(basis, interp_degree)
    pattern = BlockPattern(
        eta=eta, moment_degree=basis.moment_degree, interp_degree=interp_degree
    )
    blocks = {}
    root = tree.root
    memo = {}
    far_seen = set()
    q_full = [np.hstack([t.q_phi, t.q_sigma]) for t in basis.transforms]

    def far_pair(a, b):
        return is_admissible(a, b, eta) and cluster_dist(a, b) > 0.0

    # enumerate the retained (non-admissible) pairs
    near = []
    seen = set()
    stack = [(root, root)]
    while stack:
        a, b = stack.pop()
        key = (a.index, b.index)
        if key in seen:
            continue
        seen.add(key)
        if far_pair(a, b):
            continue
        near.append((a, b))
        for c in a.children:
            stack.append((c, b))
        for c in b.children:
            stack.append((a, c))

    def compute(a, b):
        key = (a.index, b.index)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if far_pair(a, b):
            if key not in far_seen:
                far_seen.add(key)
                pattern.pairs.append(PatternPair(a.index, b.index, "far"))
            S = kernel_matrix(spec, grids.grids[a.index], grids.grids[b.index])
            block = grids.factor[a.index].T @ S @ grids.factor[b.index]
        elif a.is_leaf and b.is_leaf:
            K = kernel_matrix(spec, tree.cluster_points(a), tree.cluster_points(b))
            block = q_full[a.index].T @ K @ q_full[b.index]
        elif not a.is_leaf and (a.level <= b.level or b.is_leaf):
            rows = [
                compute(c, b)[: basis.transforms[c.index].n_scaling, :]
                for c in a.children
            ]
            block = q_full[a.index].T @ np.vstack(rows)
        else:
            cols = [
                compute(a, c)[:, : basis.transforms[c.index].n_scaling]
                for c in b.children
            ]
            block = np.hstack(cols) @ q_full[b.index]
        memo[key] = block
        return block

    for a, b in near:
        pattern.pairs.append(PatternPair(a.index, b.index, "near"))
        full_block = compute(a, b)
        keep_r = 0 if a is root else basis.transforms[a.index].n_scaling
        keep_c = 0 if b is root else basis.transforms[b.index].n_scaling
        stored = full_block[keep_r:, keep_c:]
        if stored.size:
            stored = stored.copy()
            cut = ENTRY_DROP * np.abs(stored).max()
            stored[np.abs(stored) < cut] = 0.0
            blocks[(a.index, b.index)] = stored
    return CompressedKernelMatrix(basis, pattern, blocks)


def compressed_matvec(m: CompressedKernelMatrix, v):
    """Product of the compressed matrix with a coefficient vector."""
    return m.matvec(v)


def add_compressed(
    a: CompressedKernelMatrix, b: CompressedKernelMatrix
) -> CompressedKernelMatrix:
    """Blockwise sum on the union pattern; both operands must share a basis."""
    if a.basis is not b.basis:
        raise ValueError("basis mismatch: operands built over different bases")
    blocks = {k: v.copy() for k, v in a.blocks.items()}
    for key, block in b.blocks.items():
        if key in blocks:
            blocks[key] = blocks[key] + block
        else:
            blocks[key] = block.copy()
    seen = {}
    for p in a.pattern.pairs + b.pattern.pairs:
        key = (p.row, p.col)
        if key not in seen or (seen[key].tag == "far" and p.tag == "near"):
            seen[key] = p
    pattern = BlockPattern(
        pairs=list(seen.values()),
        eta=max(a.pattern.eta, b.pattern.eta),
        moment_degree=a.pattern.moment_degree,
        interp_degree=max(a.pattern.interp_degree, b.pattern.interp_degree),
    )
    return CompressedKernelMatrix(a.basis, pattern, blocks)


@dataclass
class CompressionRow:
    moment_degree: int
    nnz: int
    rel_frobenius_error: float


def compression_error_report(
    basis, spec, eta, moment_degrees, interp_degree=6, guard=8192
):
    """Accuracy/size sweep over the vanishing-moment degree.

    Rebuilds the basis for each degree on the same cluster tree, compresses,
    and reports nonzeros plus the relative Frobenius distance to the dense
    samplet-coordinate matrix.
    """
    tree = basis.tree
    K = dense_kernel_matrix(spec, tree.cloud, guard=guard)
    rows = []
    for q in moment_degrees:
        b = build_samplet_basis(tree, q)
        dense = transform_matrix_congruence(b, K, guard=guard)
        comp = compress_assemble(b, spec, eta, interp_degree)
        err = float(
            np.linalg.norm(comp.to_dense(guard) - dense) / np.linalg.norm(dense)
        )
        rows.append(CompressionRow(q, comp.nnz, err))
    return rows


_MAGIC = b"SMPB"


def save_compressed(m: CompressedKernelMatrix, path):
    """Write the documented binary container (little-endian, 8-byte floats)."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(
            struct.pack(
                "<IQIdQ",
                1,
                m.n,
                m.basis.moment_degree,
                m.pattern.eta,
                len(m.blocks),
            )
        )
        for (i, j), block in sorted(m.blocks.items()):
            fh.write(struct.pack("<QQQQ", i, j, block.shape[0], block.shape[1]))
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_compressed(path, basis) -> CompressedKernelMatrix:
    """Read a matrix container; the basis must match the stored N and degree."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a compressed-matrix file (magic {magic!r})")
        version, n, degree, eta, n_blocks = struct.unpack("<IQIdQ", fh.read(32))
        if version != 1:
            raise ValueError(f"unsupported container version {version}")
        if n != basis.n or degree != basis.moment_degree:
            raise ValueError(
                f"container (N={n}, degree={degree}) does not match basis "
                f"(N={basis.n}, degree={basis.moment_degree})"
            )
        blocks = {}
        pairs = []
        for _ in range(n_blocks):
            i, j, nr, nc = struct.unpack("<QQQQ", fh.read(32))
            data = np.frombuffer(fh.read(8 * nr * nc), dtype="<f8").reshape(nr, nc)
            blocks[(i, j)] = data.astype(float)
            pairs.append(PatternPair(i, j, "near"))
    pattern = BlockPattern(pairs=pairs, eta=eta, moment_degree=degree)
    return CompressedKernelMatrix(basis, pattern, blocks)
