"""Stationary kernels for scattered data approximation.

First-class families are the half-integer Matern kernels (including the
Gaussian as the smoothness limit), a periodic Gaussian, and products of
factors acting on disjoint coordinate slices.  All families are normalized
to k(x, x) = 1.
"""

from __future__ import annotations

import re

import numpy as np
from scipy.spatial.distance import cdist

_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


class Matern:
    """Matern kernel with half-integer smoothness 1/2, 3/2, 5/2 or inf.

    nu=1/2 is the exponential kernel exp(-r/l), nu=inf the Gaussian
    exp(-r^2 / (2 l^2)).
    """

    def __init__(self, nu, lengthscale):
        if lengthscale <= 0:
            raise ValueError("lengthscale must be positive")
        if nu not in (0.5, 1.5, 2.5, np.inf):
            raise ValueError(f"unsupported smoothness nu={nu}; use 1/2, 3/2, 5/2 or inf")
        self.nu = float(nu)
        self.lengthscale = float(lengthscale)

    def profile(self, r):
        s = np.asarray(r, dtype=float) / self.lengthscale
        if self.nu == 0.5:
            return np.exp(-s)
        if self.nu == 1.5:
            return (1.0 + _SQRT3 * s) * np.exp(-_SQRT3 * s)
        if self.nu == 2.5:
            return (1.0 + _SQRT5 * s + 5.0 / 3.0 * s * s) * np.exp(-_SQRT5 * s)
        return np.exp(-0.5 * s * s)

    def pairwise(self, x, y):
        return self.profile(cdist(x, y))

    def __repr__(self):
        nu = "inf" if np.isinf(self.nu) else self.nu
        return f"Matern(nu={nu}, l={self.lengthscale})"


class PeriodicGaussian:
    """Periodic kernel exp(-scale * sin^2(pi r / l)); period l in the radial
    distance, so r = l maps back to 1."""

    def __init__(self, scale, lengthscale=1.0):
        if lengthscale <= 0:
            raise ValueError("lengthscale must be positive")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.scale = float(scale)
        self.lengthscale = float(lengthscale)

    def profile(self, r):
        s = np.sin(np.pi * np.asarray(r, dtype=float) / self.lengthscale)
        return np.exp(-self.scale * s * s)

    def pairwise(self, x, y):
        return self.profile(cdist(x, y))

    def __repr__(self):
        return f"PeriodicGaussian(s={self.scale}, l={self.lengthscale})"


class ProductKernel:
    """Product of kernels acting on disjoint coordinate slices.

    Factors are (kernel, (start, stop)) pairs; the slices must be disjoint
    and together cover all input coordinates.
    """

    def __init__(self, factors):
        if not factors:
            raise ValueError("product kernel needs at least one factor")
        self.factors = tuple((k, (int(a), int(b))) for k, (a, b) in factors)
        covered = []
        for _, (a, b) in self.factors:
            if b <= a or a < 0:
                raise ValueError(f"bad coordinate slice {a}..{b}")
            covered.extend(range(a, b))
        if len(set(covered)) != len(covered):
            raise ValueError("product kernel slices overlap")
        self._covered = sorted(covered)

    def check_dim(self, dim):
        if self._covered != list(range(dim)):
            raise ValueError(
                f"product kernel slices cover {self._covered}, input dim is {dim}"
            )

    def pairwise(self, x, y):
        self.check_dim(x.shape[1])
        out = np.ones((x.shape[0], y.shape[0]))
        for kernel, (a, b) in self.factors:
            out *= kernel.pairwise(x[:, a:b], y[:, a:b])
        return out

    def __repr__(self):
        inner = ", ".join(f"{k!r}|{a}..{b}" for k, (a, b) in self.factors)
        return f"ProductKernel({inner})"


def kernel_eval(spec, x, y) -> float:
    """Kernel value at a single pair of points."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError("point dimensions differ")
    return float(spec.pairwise(x, y)[0, 0])


def kernel_matrix(spec, x, y) -> np.ndarray:
    """Kernel cross matrix for two point sets, shape (len(x), len(y))."""
    return spec.pairwise(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def dense_kernel_matrix(spec, cloud, guard: int = 8192) -> np.ndarray:
    """Full kernel matrix of a point cloud; symmetric with unit diagonal."""
    pts = cloud.points if hasattr(cloud, "points") else np.asarray(cloud, float)
    n = pts.shape[0]
    if n > guard:
        raise ValueError(f"dense kernel guard exceeded: {n} > {guard}")
    K = spec.pairwise(pts, pts)
    return 0.5 * (K + K.T)


_NU_TOKENS = {"1/2": 0.5, "3/2": 1.5, "5/2": 2.5, "inf": np.inf,
              "0.5": 0.5, "1.5": 1.5, "2.5": 2.5}


def _split_args(body):
    """Split on commas at parenthesis depth zero."""
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _kv_args(parts, allowed):
    out = {}
    for p in parts:
        if "=" not in p:
            raise ValueError(f"expected key=value, got '{p}'")
        key, val = p.split("=", 1)
        key = key.strip()
        if key not in allowed:
            raise ValueError(f"unknown kernel parameter '{key}'")
        out[key] = val.strip()
    return out


def parse_kernel(text: str):
    """Parse a kernel spec string.

    Grammar: `matern(nu=1/2,l=0.1)`, `gauss(l=0.5)`, `periodic(s=50,l=1)`,
    and `prod(matern(nu=3/2,l=0.2)|slice=0..2, periodic(s=50,l=1)|slice=2..3)`.
    """
    text = text.strip()
    m = re.fullmatch(r"(\w+)\((.*)\)", text, flags=re.DOTALL)
    if not m:
        raise ValueError(f"cannot parse kernel spec '{text}'")
    name, body = m.group(1), m.group(2)
    if name == "matern":
        args = _kv_args(_split_args(body), {"nu", "l"})
        if "nu" not in args or "l" not in args:
            raise ValueError("matern requires nu= and l=")
        nu = _NU_TOKENS.get(args["nu"])
        if nu is None:
            raise ValueError(f"unsupported nu '{args['nu']}'")
        return Matern(nu, float(args["l"]))
    if name == "gauss":
        args = _kv_args(_split_args(body), {"l"})
        if "l" not in args:
            raise ValueError("gauss requires l=")
        return Matern(np.inf, float(args["l"]))
    if name == "periodic":
        args = _kv_args(_split_args(body), {"s", "l"})
        if "s" not in args:
            raise ValueError("periodic requires s=")
        return PeriodicGaussian(float(args["s"]), float(args.get("l", 1.0)))
    if name == "prod":
        factors = []
        for part in _split_args(body):
            if "|" not in part:
                raise ValueError(f"product factor '{part}' missing |slice=a..b")
            inner, slice_part = part.rsplit("|", 1)
            sm = re.fullmatch(r"slice=(\d+)\.\.(\d+)", slice_part.strip())
            if not sm:
                raise ValueError(f"bad slice spec '{slice_part}'")
            factors.append((parse_kernel(inner), (int(sm.group(1)), int(sm.group(2)))))
        return ProductKernel(factors)
    raise ValueError(f"unknown kernel family '{name}'")
