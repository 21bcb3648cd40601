"""Construction of orthonormal samplet bases with vanishing polynomial moments.

Every cluster of the tree receives an orthogonal two-scale transform obtained
from a QR factorization of its moment matrix.  The first block of columns
spans the scaling distributions handed to the parent, the remaining columns
are samplets annihilating all polynomials up to the requested total degree.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .points import PointCloud
from .tree import ClusterTree, build_cluster_tree, cluster_diam


def monomial_exponents(dim: int, degree: int) -> np.ndarray:
    """Exponent multi-indices with total degree <= degree, graded order.

    Within one total degree the indices are ordered lexicographically with
    the leading axis dominant, so dim=2, degree=1 yields (0,0), (1,0), (0,1)
    i.e. the monomials 1, x0, x1.
    """
    rows = []

    def fill(prefix, remaining, axes_left):
        if axes_left == 1:
            rows.append(prefix + [remaining])
            return
        for e in range(remaining, -1, -1):
            fill(prefix + [e], remaining - e, axes_left - 1)

    for total in range(degree + 1):
        fill([], total, dim)
    return np.array(rows, dtype=int)


def moment_count(degree: int, dim: int) -> int:
    """Dimension of the space of polynomials with total degree <= degree."""
    return comb(degree + dim, dim)


def monomial_values(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Matrix of x^alpha, one row per exponent, one column per point."""
    return np.prod(points[None, :, :] ** exponents[:, None, :], axis=2)


def moment_shift_matrix(exponents, scale_ratio, offset):
    """Re-expansion of monomials between two local coordinate frames.

    If y are coordinates in the source frame and x = scale_ratio * y + offset
    in the target frame, returns S with x^alpha = sum_beta S[alpha, beta] y^beta,
    so target-frame moment matrices are S @ source-frame moment matrices.
    """
    m = exponents.shape[0]
    dim = exponents.shape[1]
    total = exponents.sum(axis=1)
    pos = {tuple(e): i for i, e in enumerate(exponents)}
    S = np.zeros((m, m))
    for i, alpha in enumerate(exponents):
        for j, beta in enumerate(exponents):
            if total[j] > total[i] or np.any(beta > alpha):
                continue
            coeff = scale_ratio ** int(total[j])
            for k in range(dim):
                coeff *= comb(int(alpha[k]), int(beta[k])) * offset[k] ** int(
                    alpha[k] - beta[k]
                )
            S[i, pos[tuple(beta)]] = coeff
    return S


class ClusterTransform:
    """Orthogonal two-scale transform of one cluster.

    `q_phi` (n x n_scaling) generates the scaling distributions, `q_sigma`
    (n x n_samplets) the samplets, both as combinations of the n incoming
    distributions (Diracs at a leaf, children's scaling distributions
    otherwise).  `scaling_moments` is the cluster-local moment matrix of the
    scaling block, consumed by the parent.
    """

    __slots__ = ("q_phi", "q_sigma", "scaling_moments", "center", "scale")

    def __init__(self, q_phi, q_sigma, scaling_moments, center, scale):
        self.q_phi = q_phi
        self.q_sigma = q_sigma
        self.scaling_moments = scaling_moments
        self.center = center
        self.scale = scale

    @property
    def n_in(self):
        return self.q_phi.shape[0]

    @property
    def n_scaling(self):
        return self.q_phi.shape[1]

    @property
    def n_samplets(self):
        return self.q_sigma.shape[1]


def _local_frame(cluster):
    center = 0.5 * (cluster.bbox_lo + cluster.bbox_hi)
    scale = 0.5 * cluster_diam(cluster)
    if scale <= 0.0:
        scale = 1.0
    return center, scale


def _fix_signs(Q, R):
    """Make the factorization deterministic: nonnegative diagonal of R, and
    null-space columns oriented so their first significant entry is positive."""
    n, m = R.shape
    k = min(n, m)
    for j in range(k):
        if R[j, j] < 0.0:
            Q[:, j] = -Q[:, j]
            R[j, :] = -R[j, :]
    for j in range(k, n):
        col = Q[:, j]
        big = np.abs(col) > 1e-12 * np.abs(col).max()
        lead = int(np.argmax(big))
        if col[lead] < 0.0:
            Q[:, j] = -col
    return Q, R


def moment_matrix(tree, cluster, transforms, exponents):
    """Cluster-local moment matrix of the incoming distributions.

    Leaves evaluate the monomials at their sites; interior clusters re-expand
    the children's scaling-moment blocks into the parent frame, so no point
    data is revisited above the leaf level.
    """
    center, scale = _local_frame(cluster)
    if cluster.is_leaf:
        local = (tree.cluster_points(cluster) - center) / scale
        return monomial_values(local, exponents), center, scale
    blocks = []
    for child in cluster.children:
        t = transforms[child.index]
        shift = moment_shift_matrix(
            exponents, t.scale / scale, (t.center - center) / scale
        )
        blocks.append(shift @ t.scaling_moments)
    return np.hstack(blocks), center, scale


def cluster_transform(moments, center, scale, n_scaling_cap):
    """Orthogonal transform from the QR factorization of the moment matrix.

    The k-th generated distribution has at least k-1 vanishing moments; the
    first `min(n_scaling_cap, n)` columns become scaling distributions, the
    rest samplets.  Rank-deficient moment matrices are fine and only produce
    samplets with extra vanishing moments.
    """
    Q, R = np.linalg.qr(moments.T, mode="complete")
    Q, R = _fix_signs(Q, R)
    n = Q.shape[0]
    n_scaling = min(n_scaling_cap, n)
    scaling_moments = R.T[:, :n_scaling]
    return ClusterTransform(
        np.ascontiguousarray(Q[:, :n_scaling]),
        np.ascontiguousarray(Q[:, n_scaling:]),
        scaling_moments,
        center,
        scale,
    )


class SampletBasis:
    """Samplet basis over a cluster tree: one transform per cluster plus a
    global enumeration of coefficient slots.

    Slot order: the root's scaling distributions first, then each cluster's
    samplets with clusters in pre-order, samplets in QR column order.  The
    root's slots are therefore the contiguous leading block.
    """

    def __init__(self, tree, moment_degree, carry_degree, transforms, offsets):
        self.tree = tree
        self.moment_degree = moment_degree
        self.carry_degree = carry_degree
        self.transforms = transforms
        self.samplet_offsets = offsets
        self.n_scaling = transforms[tree.root.index].n_scaling

    @property
    def n(self):
        return self.tree.n_points

    def samplet_slots(self, cluster):
        """Half-open slot range of the cluster's samplet coefficients."""
        off = self.samplet_offsets[cluster.index]
        return off, off + self.transforms[cluster.index].n_samplets

    def stored_slots(self, cluster):
        """Slot range a kernel block for this cluster covers; the root block
        also spans the scaling slots."""
        lo, hi = self.samplet_slots(cluster)
        if cluster is self.tree.root:
            return 0, hi
        return lo, hi

    def samplet_levels(self):
        """Level of the cluster owning each slot; root scaling slots get -1."""
        levels = np.empty(self.n, dtype=int)
        levels[: self.n_scaling] = -1
        for c in self.tree.clusters:
            lo, hi = self.samplet_slots(c)
            levels[lo:hi] = c.level
        return levels


def default_leaf_size(moment_degree: int, dim: int) -> int:
    """Smallest leaf size at which every leaf can host a full scaling block."""
    return max(2 * moment_count(moment_degree, dim), 2)


def build_samplet_basis(
    tree: ClusterTree, moment_degree: int, carry_degree: int | None = None
) -> SampletBasis:
    """Bottom-up samplet construction over a built cluster tree.

    `moment_degree` is the largest polynomial total degree every samplet
    annihilates.  `carry_degree` (>= moment_degree) carries extra moment
    rows through the sweep so later samplets in each cluster pick up
    successively more vanishing moments; default is no extra rows.
    """
    if moment_degree < 0:
        raise ValueError("moment_degree must be >= 0")
    if carry_degree is None:
        carry_degree = moment_degree
    if carry_degree < moment_degree:
        raise ValueError("carry_degree must be >= moment_degree")
    dim = tree.cloud.dim
    exponents = monomial_exponents(dim, carry_degree)
    n_scaling_cap = moment_count(moment_degree, dim)

    transforms = [None] * len(tree.clusters)
    for cluster in tree.postorder:
        moments, center, scale = moment_matrix(tree, cluster, transforms, exponents)
        transforms[cluster.index] = cluster_transform(
            moments, center, scale, n_scaling_cap
        )

    offsets = np.zeros(len(tree.clusters), dtype=int)
    slot = transforms[tree.root.index].n_scaling
    for cluster in tree.clusters:  # pre-order
        offsets[cluster.index] = slot
        slot += transforms[cluster.index].n_samplets
    assert slot == tree.n_points
    return SampletBasis(tree, moment_degree, carry_degree, transforms, offsets)


def build_basis(cloud, moment_degree, leaf_size=None, carry_degree=None):
    """Convenience: cluster tree plus samplet basis in one call."""
    if isinstance(cloud, ClusterTree):
        tree = cloud
    else:
        if not isinstance(cloud, PointCloud):
            cloud = PointCloud(cloud)
        if leaf_size is None:
            leaf_size = default_leaf_size(moment_degree, cloud.dim)
        tree = build_cluster_tree(cloud, leaf_size)
    return build_samplet_basis(tree, moment_degree, carry_degree)


def cluster_weight_matrix(basis, cluster):
    """Dense weight vectors of a cluster's scaling and samplet distributions.

    Returns a (cluster.size, n_scaling + n_samplets) matrix in tree point
    order; column j holds the Dirac weights of the j-th basis distribution.
    Cost is proportional to cluster size times block width.
    """
    t = basis.transforms[cluster.index]
    if cluster.is_leaf:
        return np.hstack([t.q_phi, t.q_sigma])
    rows = cluster.size
    n_in = t.n_in
    carrier = np.zeros((rows, n_in))
    col = 0
    for child in cluster.children:
        w_child = cluster_weight_matrix(basis, child)
        n_sc = basis.transforms[child.index].n_scaling
        r0 = child.start - cluster.start
        carrier[r0 : r0 + child.size, col : col + n_sc] = w_child[:, :n_sc]
        col += n_sc
    return carrier @ np.hstack([t.q_phi, t.q_sigma])


def assemble_dense_transform(basis: SampletBasis, guard: int = 8192) -> np.ndarray:
    """Dense orthogonal transform matrix, rows in slot order and columns in
    original point order.  Test/oracle utility, guarded against large N."""
    n = basis.n
    if n > guard:
        raise ValueError(f"dense transform guard exceeded: {n} > {guard}")
    tree = basis.tree
    T = np.zeros((n, n))

    def sweep(cluster):
        t = basis.transforms[cluster.index]
        if cluster.is_leaf:
            w_full = np.hstack([t.q_phi, t.q_sigma])
        else:
            carrier = np.zeros((cluster.size, t.n_in))
            col = 0
            for child in cluster.children:
                w_phi = sweep(child)
                r0 = child.start - cluster.start
                carrier[r0 : r0 + child.size, col : col + w_phi.shape[1]] = w_phi
                col += w_phi.shape[1]
            w_full = carrier @ np.hstack([t.q_phi, t.q_sigma])
        cols = tree.permutation[cluster.start : cluster.stop]
        lo, hi = basis.samplet_slots(cluster)
        T[lo:hi, cols] = w_full[:, t.n_scaling :].T
        if cluster is tree.root:
            T[: t.n_scaling, cols] = w_full[:, : t.n_scaling].T
        return w_full[:, : t.n_scaling]

    sweep(tree.root)
    return T
