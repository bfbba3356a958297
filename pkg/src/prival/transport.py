"""Word Mover's Distance between nBOW documents.

Three routes: an exact LP solution of the transportation problem, an
entropic-regularized Sinkhorn approximation, and the relaxed lower bound
obtained by dropping one marginal constraint.  The Sinkhorn solver reports
the transport cost of its plan (not the regularized objective) so its values
are directly comparable with the exact ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from .embedding import NBowDoc, WordEmbedding

DEFAULT_SUPPORT_CAP = 128


class TransportError(RuntimeError):
    pass


@dataclass
class CostMatrix:
    """Euclidean ground distances between the two documents' word vectors."""

    costs: np.ndarray

    @property
    def rows(self) -> int:
        return self.costs.shape[0]

    @property
    def cols(self) -> int:
        return self.costs.shape[1]


@dataclass
class TransportPlan:
    """A feasible flow matrix together with its transport cost."""

    flows: np.ndarray
    cost: float


def cost_matrix(a: NBowDoc, b: NBowDoc, emb: WordEmbedding) -> CostMatrix:
    va = emb.vectors[a.indices]
    vb = emb.vectors[b.indices]
    diff = va[:, None, :] - vb[None, :, :]
    return CostMatrix(costs=np.sqrt(np.sum(diff * diff, axis=2)))


def _solve_exact(a: NBowDoc, b: NBowDoc, emb: WordEmbedding) -> TransportPlan:
    c = cost_matrix(a, b, emb).costs
    m, n = c.shape
    # Equality constraints: row sums = a.weights, column sums = b.weights.
    # One constraint is redundant (both sides sum to 1); drop the last.
    a_eq = np.zeros((m + n - 1, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n - 1):
        a_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([a.weights, b.weights[:-1]])
    res = linprog(c.reshape(-1), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise TransportError(f"exact transport LP failed: {res.message}")
    flows = res.x.reshape(m, n)
    return TransportPlan(flows=flows, cost=float(np.sum(flows * c)))


def wmd_exact(
    a: NBowDoc,
    b: NBowDoc,
    emb: WordEmbedding,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> float:
    """Exact Word Mover's Distance (minimum-cost transport between the nBOWs)."""
    if len(a) + len(b) > support_cap:
        raise TransportError("instance too large; use wmd_sinkhorn")
    return _solve_exact(a, b, emb).cost


def optimal_plan(
    a: NBowDoc,
    b: NBowDoc,
    emb: WordEmbedding,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> TransportPlan:
    """The optimal transport plan witnessing wmd_exact."""
    if len(a) + len(b) > support_cap:
        raise TransportError("instance too large; use wmd_sinkhorn")
    return _solve_exact(a, b, emb)


def _sinkhorn_scaling(
    c: np.ndarray, wa: np.ndarray, wb: np.ndarray, epsilon: float, max_iters: int, tol: float
) -> np.ndarray | None:
    """Classic multiplicative scaling; None signals numerical failure."""
    k = np.exp(-c / epsilon)
    u = np.ones_like(wa)
    v = np.ones_like(wb)
    for _ in range(max_iters):
        ku = k.T @ u
        if not np.all(ku > 0):
            return None
        v = wb / ku
        kv = k @ v
        if not np.all(kv > 0):
            return None
        u = wa / kv
        plan = u[:, None] * k * v[None, :]
        if not np.all(np.isfinite(plan)):
            return None
        violation = max(
            float(np.max(np.abs(plan.sum(axis=1) - wa))),
            float(np.max(np.abs(plan.sum(axis=0) - wb))),
        )
        if violation < tol:
            break
    return plan


def _sinkhorn_log(
    c: np.ndarray, wa: np.ndarray, wb: np.ndarray, epsilon: float, max_iters: int, tol: float
) -> np.ndarray:
    """Log-domain Sinkhorn; robust to kernel underflow."""
    log_a = np.log(wa)
    log_b = np.log(wb)
    f = np.zeros_like(wa)
    g = np.zeros_like(wb)
    for _ in range(max_iters):
        f = epsilon * (log_a - logsumexp((g[None, :] - c) / epsilon, axis=1))
        g = epsilon * (log_b - logsumexp((f[:, None] - c) / epsilon, axis=0))
        log_plan = (f[:, None] + g[None, :] - c) / epsilon
        plan = np.exp(log_plan)
        violation = max(
            float(np.max(np.abs(plan.sum(axis=1) - wa))),
            float(np.max(np.abs(plan.sum(axis=0) - wb))),
        )
        if violation < tol:
            break
    if not np.all(np.isfinite(plan)):
        raise TransportError("sinkhorn diverged")
    return plan


def wmd_sinkhorn(
    a: NBowDoc,
    b: NBowDoc,
    emb: WordEmbedding,
    epsilon: float = 0.05,
    max_iters: int = 500,
    tol: float = 1e-8,
) -> float:
    """Entropic-regularized WMD approximation.

    Returns the transport cost of the scaled plan, excluding the entropy term.
    Underflow in the multiplicative form falls back to log-domain iterations.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = cost_matrix(a, b, emb).costs
    plan = _sinkhorn_scaling(c, a.weights, b.weights, epsilon, max_iters, tol)
    if plan is None:
        plan = _sinkhorn_log(c, a.weights, b.weights, epsilon, max_iters, tol)
    return float(np.sum(plan * c))


def rwmd_lower_bound(a: NBowDoc, b: NBowDoc, emb: WordEmbedding) -> float:
    """Relaxed WMD: each side's mass moves to its nearest counterpart;
    the max of the two one-sided relaxations lower-bounds the exact distance."""
    c = cost_matrix(a, b, emb).costs
    left = float(np.sum(a.weights * c.min(axis=1)))
    right = float(np.sum(b.weights * c.min(axis=0)))
    return max(left, right)
