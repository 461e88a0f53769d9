"""Numerical falsification: congruence tests and local search for dominated configurations.

Results are one-sided. A configuration returned by the search is re-checked
against the member constraints and is a genuine counterexample; ``None`` only
means nothing was found within the budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .affine import domination_check
from .model import MemberKind, TensegrityFramework


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 64
    iterations: int = 2000
    steps: tuple[float, ...] = (0.05, 0.2, 0.5, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 1 or not self.steps or min(self.steps) <= 0:
            raise ValueError("budget entries must be positive")

    def to_dict(self) -> dict:
        return {"restarts": self.restarts, "iterations": self.iterations, "steps": list(self.steps), "seed": self.seed}


def squared_distances(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    g = np.sum(X * X, axis=1)
    return np.maximum(g[:, None] + g[None, :] - 2 * X @ X.T, 0.0)


def congruence_gap(p, q) -> float:
    """Largest change in any squared pairwise distance, relative to ``1 + max |p_i - p_j|^2``."""
    dp, dq = squared_distances(p), squared_distances(q)
    return float(np.abs(dq - dp).max(initial=0.0) / (1.0 + dp.max(initial=0.0)))


def is_congruent(p, q, tol: float = 1e-8) -> bool:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape[0] != q.shape[0]:
        raise ValueError("configurations must have the same number of points")
    return congruence_gap(p, q) <= tol


def _edge_arrays(fw):
    I = np.array([e.i for e in fw.edges], dtype=int)
    J = np.array([e.j for e in fw.edges], dtype=int)
    kind = np.array([{MemberKind.BAR: 0, MemberKind.CABLE: 1, MemberKind.STRUT: -1}[e.kind] for e in fw.edges])
    return I, J, kind


def _residuals(fw, Q, dp, scale, arrays=None):
    """Scaled constraint residuals and Jacobian rows of the members held this step.

    Bars are always held. A cable or strut is held when violated or within the
    current worst violation of its bound; held-but-satisfied members get a zero
    target, which keeps them from overshooting and stops the active set from
    chattering between iterations.
    """
    n, s = Q.shape
    I, J, kind = _edge_arrays(fw) if arrays is None else arrays
    D = Q[I] - Q[J]
    v = (np.sum(D * D, axis=1) - dp) / scale
    target = np.where(kind == 0, v, np.where(kind == 1, np.maximum(v, 0.0), np.minimum(v, 0.0)))
    worst = float(np.abs(target).max(initial=0.0))
    held = (kind == 0) | ((kind == 1) & (v > -worst)) | ((kind == -1) & (v < worst))
    idx = np.nonzero(held)[0]
    Jac = np.zeros((idx.size, n, s))
    rows = np.arange(idx.size)
    Jac[rows, I[idx]] = 2 * D[idx] / scale
    Jac[rows, J[idx]] -= 2 * D[idx] / scale
    return target[idx], Jac.reshape(idx.size, n * s), worst


def project_to_dominated(fw: TensegrityFramework, Q0, iterations: int = 200, tol: float = 1e-15):
    """Minimum-norm Gauss-Newton projection onto the set of dominated configurations.

    Returns ``(Q, violation)`` where ``violation`` is the largest scaled
    residual left. Convergence is quadratic when the held constraint rows are
    independent and only linear when the framework carries a self-stress.
    """
    dp = np.array([np.sum((fw.P[e.i] - fw.P[e.j]) ** 2) for e in fw.edges])
    scale = max(1.0, dp.max(initial=0.0))
    Q = np.array(Q0, dtype=float)
    arrays = _edge_arrays(fw)
    r, J, viol = _residuals(fw, Q, dp, scale, arrays)
    for _ in range(iterations):
        if viol <= tol:
            break
        step = np.linalg.lstsq(J, r, rcond=None)[0].reshape(Q.shape)
        # backtrack on the squared residual so far-away starts cannot diverge
        merit = r @ r
        t = 1.0
        for _halving in range(30):
            trial = Q - t * step
            r2, J2, v2 = _residuals(fw, trial, dp, scale, arrays)
            if r2 @ r2 < merit or v2 <= tol:
                break
            t *= 0.5
        else:
            break
        Q, r, J, viol = trial, r2, J2, v2
    return Q, viol


def _lift(P, s):
    n, r = P.shape
    if s >= r:
        return np.hstack([P, np.zeros((n, s - r))])
    return P[:, :s].copy()


def sample_dominated(fw: TensegrityFramework, s: int, rng, spread: float = 0.3, iterations: int = 200):
    """A dominated configuration in R^s near a random perturbation of ``fw``.

    Returns ``(Q, violation)``; callers decide whether the violation is small enough.
    """
    P = fw.P - fw.P.mean(axis=0)
    size = np.sqrt(squared_distances(P).max())
    Q0 = _lift(P, s) + spread * size * rng.standard_normal((fw.n, s))
    return project_to_dominated(fw, Q0, iterations)


@dataclass(frozen=True, eq=False)
class OracleWitness:
    q: np.ndarray
    dimension: int
    restart: int
    violation: float
    gap: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "q": self.q.tolist(),
            "dimension": self.dimension,
            "restart": self.restart,
            "violation": self.violation,
            "gap": self.gap,
            "seed": self.seed,
        }


def search_dominated_noncongruent(
    fw: TensegrityFramework,
    s: int,
    budget: SearchBudget = SearchBudget(),
    *,
    dominated_tol: float = 1e-10,
    gap_tol: float = 1e-3,
) -> OracleWitness | None:
    """Multi-start search for a dominated, non-congruent configuration in R^s.

    Each restart projects a random perturbation onto the dominated set, then
    repeatedly steps along a random direction tangent to the active
    constraints (to leave the congruence orbit) and re-projects. A candidate
    counts only if its worst member violation is at most ``dominated_tol`` and
    some pairwise squared distance moved by more than ``gap_tol`` (both
    relative to the framework's size). Restarts use seeds derived from
    ``budget.seed`` and the restart index, so the search is reproducible.
    """
    if not 1 <= s <= fw.n - 1:
        raise ValueError(f"target dimension must lie in 1..{fw.n - 1}")
    P = fw.P - fw.P.mean(axis=0)
    size = np.sqrt(max(squared_distances(P).max(), 1e-300))
    dp = np.array([np.sum((P[e.i] - P[e.j]) ** 2) for e in fw.edges])
    scale = max(1.0, dp.max(initial=0.0))
    inner = 50
    escapes = 8
    for restart in range(budget.restarts):
        rng = np.random.default_rng([budget.seed, s, restart])
        spread = budget.steps[restart % len(budget.steps)]
        used = 0
        Q = _lift(P, s) + spread * size * rng.standard_normal((fw.n, s))
        for _ in range(escapes + 1):
            if used >= budget.iterations:
                break
            Q, viol = project_to_dominated(fw, Q, min(inner, budget.iterations - used), 1e-3 * dominated_tol)
            used += inner
            if viol <= dominated_tol:
                dom = domination_check(fw, Q, dominated_tol)
                gap = congruence_gap(P, Q)
                if dom.dominated and gap > gap_tol:
                    return OracleWitness(Q, s, restart, viol, gap, budget.seed)
                # tangent step: move inside the null space of the active constraints
                _, J, _ = _residuals(fw, Q, dp, scale)
                direction = rng.standard_normal(Q.size)
                if J.shape[0]:
                    direction -= np.linalg.pinv(J) @ (J @ direction)
                norm = np.linalg.norm(direction)
                if norm == 0:
                    break
                Q = Q + spread * size * (direction / norm).reshape(Q.shape)
    return None
