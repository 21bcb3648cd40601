"""Solvers in samplet coordinates: conjugate-gradient interpolation and
weighted l1 basis pursuit via a semi-smooth Newton method.

Solvers accept either dense arrays or compressed kernel matrices; all they
need is a symmetric matrix-vector product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transform import CoefficientVector


class SolverError(RuntimeError):
    """Raised on non-convergence; carries the last residual (and trace)."""

    def __init__(self, message, residual, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace or []


def _as_array(v):
    if isinstance(v, CoefficientVector):
        return v.slots
    return np.asarray(v, dtype=float)


def _matvec(op, x):
    if isinstance(op, np.ndarray):
        return op @ x
    return op.matvec(x)


def _rmatvec(op, x):
    if isinstance(op, np.ndarray):
        return op.T @ x
    return op.matvec(x)  # compressed kernel matrices are symmetric


def conjugate_gradient(matvec, rhs, tol, max_iter, x0=None, best_effort=False):
    """Plain CG for SPD operators; stops at ||residual|| <= tol * ||rhs||.

    Returns (solution, iterations, final residual norm); raises SolverError
    when the iteration budget is exhausted unless `best_effort` is set, in
    which case the last iterate is returned.
    """
    rhs = np.asarray(rhs, dtype=float)
    norm = np.linalg.norm(rhs)
    if norm == 0.0:
        return np.zeros_like(rhs), 0, 0.0
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float)
    r = rhs - matvec(x) if x.any() else rhs.copy()
    p = r.copy()
    rr = float(r @ r)
    target = tol * norm
    trace = []
    for it in range(max_iter):
        res = np.sqrt(rr)
        trace.append(res)
        if res <= target:
            return x, it, res
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:  # loss of positive definiteness at round-off level
            break
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    res = float(np.linalg.norm(rhs - matvec(x)))
    if res <= target or best_effort:
        return x, max_iter, res
    raise SolverError(
        f"conjugate gradient did not reach {target:.3e} in {max_iter} iterations "
        f"(residual {res:.3e})",
        res,
        trace,
    )


@dataclass
class InterpolationProblem:
    """Regularized kernel interpolation (K + ridge*I) beta = rhs in samplet
    coordinates; `matrix` is a dense array or a CompressedKernelMatrix."""

    matrix: object
    rhs: object
    ridge: float = 0.0
    tol: float = 1e-10
    max_iter: int = 5000


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool


def solve_interpolation(p: InterpolationProblem):
    """CG solve of the (regularized) samplet-coordinate interpolation system.

    Returns (solution, report); the solution mirrors the rhs type, so a
    CoefficientVector rhs yields a CoefficientVector tied to the same basis.
    """
    if p.ridge < 0:
        raise ValueError("ridge must be nonnegative")
    rhs = _as_array(p.rhs)

    def apply(x):
        y = _matvec(p.matrix, x)
        if p.ridge:
            y = y + p.ridge * x
        return y

    beta, iters, res = conjugate_gradient(apply, rhs, p.tol, p.max_iter)
    report = SolveReport(iters, res, True)
    if isinstance(p.rhs, CoefficientVector):
        return CoefficientVector(beta, p.rhs.basis), report
    return beta, report


def soft_shrink(v, w):
    """Entrywise sign(v) * max(0, |v| - w); the proximal map of the weighted
    l1 norm."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.ndim and w.shape != v.shape:
        raise ValueError("weight shape does not match")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return np.sign(v) * np.maximum(np.abs(v) - w, 0.0)


@dataclass
class PursuitProblem:
    """Weighted l1 recovery over a (possibly multi-kernel) dictionary.

    `dictionary` is a list of square operators sharing the coefficient space
    of `data`; the stacked system is underdetermined for more than one
    kernel.  `weights` may be a scalar or a vector over all stacked
    coefficients.
    """

    dictionary: list
    data: object
    weights: object = 0.0
    step: float | None = None
    tol: float | None = None
    max_iter: int = 200
    cg_tol: float = 1e-12
    cg_max_iter: int = 2000


@dataclass
class PursuitResult:
    coefficients: list
    stacked: np.ndarray
    residual: float
    iterations: int
    objective: float
    nnz: list
    trace: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)


class _StackedOperator:
    """[K_1, ..., K_L] acting on stacked coefficients; each block symmetric."""

    def __init__(self, blocks, n):
        self.blocks = blocks
        self.n = n

    def apply(self, beta):
        out = np.zeros(self.n)
        for i, block in enumerate(self.blocks):
            out += _matvec(block, beta[i * self.n : (i + 1) * self.n])
        return out

    def apply_adjoint(self, r):
        return np.concatenate([_rmatvec(block, r) for block in self.blocks])


def _power_step_bound(op, n_total, iters=30, seed=0):
    """0.9 / lambda_max(K^T K) estimated by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n_total)
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(iters):
        w = op.apply_adjoint(op.apply(v))
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 1.0
        v = w / lam
    return 0.9 / lam


def pursuit_objective(p: PursuitProblem, beta) -> float:
    """0.5 * ||data - K beta||^2 + sum(weights * |beta|), evaluated in
    samplet coordinates (the residual term is coordinate-free by isometry)."""
    h = _as_array(p.data)
    n = h.shape[0]
    op = _StackedOperator(p.dictionary, n)
    beta = _as_array(beta)
    w = np.broadcast_to(np.asarray(p.weights, dtype=float), beta.shape)
    r = h - op.apply(beta)
    return 0.5 * float(r @ r) + float(w @ np.abs(beta))


def solve_pursuit(p: PursuitProblem) -> PursuitResult:
    """Semi-smooth Newton on the shrinkage fixed-point equation.

    Newton steps solve the normal equations restricted to the support
    implied by the shrinkage kink; a step is accepted only if the objective
    does not increase, otherwise one plain fixed-point (soft-shrinkage
    gradient) step is taken.  Stops when the fixed-point residual drops
    below tol; raises SolverError with the residual trace otherwise.
    """
    if not p.dictionary:
        raise ValueError("dictionary must not be empty")
    h = _as_array(p.data)
    n = h.shape[0]
    L = len(p.dictionary)
    total = L * n
    op = _StackedOperator(p.dictionary, n)
    w = np.broadcast_to(np.asarray(p.weights, dtype=float), (total,)).copy()
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    lam_max = 0.9 / _power_step_bound(op, total)
    gamma = p.step if p.step is not None else 0.9 / lam_max
    if gamma <= 0:
        raise ValueError("step must be positive")
    tol = p.tol if p.tol is not None else 1e-8 * (1.0 + np.linalg.norm(h))
    kth = op.apply_adjoint(h)
    # stacked dictionaries are underdetermined, so the restricted normal
    # matrices are structurally singular and need the full iterative
    # regularization; square single-kernel systems get a sharper Newton
    shift_scale = 1.0 if total > n else 0.01

    beta = np.zeros(total)
    grad = kth.copy()  # K^T (h - K beta) at beta = 0
    trace = []
    objective_trace = []
    iterations = 0
    for it in range(p.max_iter):
        iterations = it
        z = beta + gamma * grad
        fp = beta - soft_shrink(z, gamma * w)
        res = float(np.linalg.norm(fp))
        trace.append(res)
        if res <= tol:
            break
        support = np.abs(z) > gamma * w
        newton = None
        if np.any(support):
            sign = np.sign(z[support])
            rhs = kth[support] - w[support] * sign

            # inexact Newton: warm start, forcing-term tolerance, and a
            # vanishing Tikhonov shift so singular (underdetermined stacked)
            # normal matrices stay solvable
            inner_tol = max(p.cg_tol, min(1e-2, res / (1.0 + np.linalg.norm(rhs))))
            shift = shift_scale * inner_tol * lam_max

            def normal_matvec(xs):
                full = np.zeros(total)
                full[support] = xs
                return op.apply_adjoint(op.apply(full))[support] + shift * xs

            xs, _, _ = conjugate_gradient(
                normal_matvec, rhs, inner_tol, p.cg_max_iter,
                x0=beta[support], best_effort=True,
            )
            newton = np.zeros(total)
            newton[support] = xs
        accepted = False
        if newton is not None:
            obj_cur = pursuit_objective(p, beta)
            direction = newton - beta
            t = 1.0
            for _ in range(10):  # damped steps keep the objective non-increasing
                candidate = beta + t * direction
                if pursuit_objective(p, candidate) <= obj_cur:
                    beta = candidate
                    accepted = True
                    break
                t *= 0.5
        if not accepted:
            beta = soft_shrink(z, gamma * w)
        grad = op.apply_adjoint(h - op.apply(beta))
        objective_trace.append(pursuit_objective(p, beta))
    else:
        z = beta + gamma * grad
        res = float(np.linalg.norm(beta - soft_shrink(z, gamma * w)))
        if res > tol:
            raise SolverError(
                f"pursuit did not reach {tol:.3e} in {p.max_iter} iterations "
                f"(residual {res:.3e})",
                res,
                trace,
            )

    parts = [beta[i * n : (i + 1) * n] for i in range(L)]
    data = p.data
    if isinstance(data, CoefficientVector):
        coeffs = [CoefficientVector(part, data.basis) for part in parts]
    else:
        coeffs = parts
    return PursuitResult(
        coefficients=coeffs,
        stacked=beta,
        residual=res,
        iterations=iterations + 1,
        objective=pursuit_objective(p, beta),
        nnz=[int(np.count_nonzero(part)) for part in parts],
        trace=trace,
        objective_trace=objective_trace,
    )
