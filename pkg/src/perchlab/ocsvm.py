"""One-class SVM over the sensory space, trained by pairwise SMO updates.

Solves the standard dual

    min  1/2 a^T Q a    s.t.  0 <= a_i <= 1/(nu n),  sum(a) = 1

with the RBF kernel Q_ij = exp(-gamma ||x_i - x_j||^2).  Each iteration
picks the maximal violating pair of the KKT conditions and solves the
one-dimensional sub-problem on it exactly.  The offset rho is recovered
from the free (margin) support vectors, so the decision function

    f(x) = sum_i a_i K(x_i, x) - rho

is ~0 on the boundary, positive inside the learned region and negative
outside of it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KKT_TOL = 1e-5          # stop when the worst KKT violation falls below this
BOUND_EPS = 1e-12       # alpha closer than this to a box edge counts as bound
ETA_FLOOR = 1e-12       # curvature guard for coincident points


class ConvergenceError(RuntimeError):
    """SMO ran out of iterations; carries the final KKT violation."""

    def __init__(self, violation: float, iterations: int):
        super().__init__(
            f"SMO did not reach KKT tolerance {KKT_TOL:g} after "
            f"{iterations} iterations (final violation {violation:.3e})")
        self.violation = violation
        self.iterations = iterations


@dataclass(frozen=True)
class OcSvmModel:
    """Trained one-class boundary in normalized sensory coordinates."""

    support_vectors: np.ndarray    # (m, d) normalized inputs
    alphas: np.ndarray             # (m,) dual weights, sum to 1
    rho: float
    gamma: float
    nu: float

    def __post_init__(self):
        sv = np.asarray(self.support_vectors, dtype=float)
        al = np.asarray(self.alphas, dtype=float)
        if sv.ndim != 2 or al.ndim != 1 or sv.shape[0] != al.shape[0]:
            raise ValueError("support vectors and alphas must align")
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "alphas", al)


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma ||a_i - b_j||^2) for all row pairs."""
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    d2 = np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)
    return np.exp(-gamma * d2)


def train_ocsvm(points: np.ndarray, gamma: float = 2.0, nu: float = 0.05,
                max_iter: int = 200_000) -> OcSvmModel:
    """Fit the one-class boundary to normalized points.

    points: (n, d) array, already normalized to zero mean / unit variance.
    Requires n >= 10 so the nu box constraint leaves room to move.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n = x.shape[0]
    if n < 10:
        raise ValueError(f"need at least 10 training points, got {n}")
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must lie in (0, 1), got {nu}")
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")

    c = 1.0 / (nu * n)
    q = rbf_kernel(x, x, gamma)

    # feasible start: fill the first floor(nu*n) entries to the box bound,
    # put the remainder on the next one so sum(alpha) = 1 exactly
    alpha = np.zeros(n)
    n_full = int(nu * n)
    alpha[:n_full] = c
    if n_full < n:
        alpha[n_full] = 1.0 - c * n_full
    grad = q @ alpha

    violation = np.inf
    for it in range(max_iter):
        can_up = alpha < c - BOUND_EPS      # room to grow
        can_dn = alpha > BOUND_EPS          # room to shrink
        gi = np.where(can_up, grad, np.inf)
        gj = np.where(can_dn, grad, -np.inf)
        i = int(np.argmin(gi))
        j = int(np.argmax(gj))
        violation = gj[j] - gi[i]
        if violation <= KKT_TOL:
            break

        eta = max(q[i, i] + q[j, j] - 2.0 * q[i, j], ETA_FLOOR)
        delta = (grad[j] - grad[i]) / eta
        delta = min(delta, c - alpha[i], alpha[j])
        alpha[i] += delta
        alpha[j] -= delta
        grad += delta * (q[:, i] - q[:, j])
    else:
        raise ConvergenceError(violation, max_iter)

    # rho from the margin SVs.  At the optimum every free SV shares the
    # same gradient value up to the KKT tolerance; taking the smallest
    # puts all of them at f >= 0, so boundary members always fire and
    # only box-bound outliers fall below zero.
    free = (alpha > BOUND_EPS) & (alpha < c - BOUND_EPS)
    if np.any(free):
        rho = float(np.min(grad[free]))
    else:
        upper = grad[alpha <= BOUND_EPS]
        lower = grad[alpha >= c - BOUND_EPS]
        hi = np.min(upper) if upper.size else np.max(lower)
        lo = np.max(lower) if lower.size else np.min(upper)
        rho = float(0.5 * (hi + lo))

    keep = alpha > BOUND_EPS
    return OcSvmModel(x[keep].copy(), alpha[keep].copy(), rho, gamma, nu)


def decision_function(model: OcSvmModel, points: np.ndarray) -> np.ndarray:
    """f(x) for each row; > 0 inside the learned region."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    k = rbf_kernel(x, model.support_vectors, model.gamma)
    return k @ model.alphas - model.rho


def dual_feasibility(model: OcSvmModel, n_train: int) -> tuple[float, float]:
    """(|sum(alpha) - 1|, worst box violation) for invariant checks."""
    c = 1.0 / (model.nu * n_train)
    sum_err = abs(float(np.sum(model.alphas)) - 1.0)
    box_err = float(max(np.max(-model.alphas, initial=0.0),
                        np.max(model.alphas - c, initial=0.0)))
    return sum_err, box_err
