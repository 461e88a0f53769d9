"""Dense two-phase simplex with Bland's anti-cycling rule.

Solves  max c.x  subject to  A x = b,  0 <= x <= upper.
Sized for the small feasibility programs in :mod:`tensecert.affine`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None
    objective: float | None
    iterations: int


class _Tableau:
    def __init__(self, T, basis, tol):
        self.T = T  # constraint rows [B^-1 A | B^-1 b]
        self.basis = basis
        self.tol = tol
        self.iterations = 0

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        others = np.nonzero(np.abs(T[:, col]) > 0.0)[0]
        for i in others:
            if i != row:
                T[i] -= T[i, col] * T[row]
        self.basis[row] = col
        self.iterations += 1

    def optimize(self, cost, allowed, max_iter):
        T, tol = self.T, self.tol
        while self.iterations < max_iter:
            cb = cost[self.basis]
            reduced = cost[:-1] - cb @ T[:, :-1]
            entering = next((j for j in allowed if reduced[j] > tol), None)
            if entering is None:
                return "optimal"
            col = T[:, entering]
            rows = np.nonzero(col > tol)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            row = min(ties, key=lambda i: self.basis[i])
            self.pivot(row, entering)
        return "iteration_limit"


def simplex_max(c, A_eq, b_eq, upper=None, tol: float = 1e-9, max_iter: int = 50000) -> LPResult:
    c = np.asarray(c, dtype=float)
    m = c.size
    A = np.asarray(A_eq, dtype=float).reshape(-1, m)
    b = np.asarray(b_eq, dtype=float).ravel()
    upper = np.full(m, np.inf) if upper is None else np.asarray(upper, dtype=float)
    bounded = [k for k in range(m) if np.isfinite(upper[k])]
    p, q = A.shape[0], len(bounded)

    # columns: x (m) | slacks (q) | artificials (p) | rhs
    ncol = m + q + p
    T = np.zeros((p + q, ncol + 1))
    sign = np.where(b < 0, -1.0, 1.0)
    T[:p, :m] = A * sign[:, None]
    T[:p, -1] = b * sign
    T[:p, m + q:m + q + p] = np.eye(p)
    for r, k in enumerate(bounded):
        T[p + r, k] = 1.0
        T[p + r, m + r] = 1.0
        T[p + r, -1] = upper[k]
    basis = list(range(m + q, m + q + p)) + list(range(m, m + q))
    tab = _Tableau(T, basis, tol)

    phase1 = np.zeros(ncol + 1)
    phase1[m + q:m + q + p] = -1.0
    status = tab.optimize(phase1, range(ncol), max_iter)
    if status == "iteration_limit":
        return LPResult(status, None, None, tab.iterations)
    scale = max(1.0, np.abs(b).max(initial=0.0))
    if -phase1[tab.basis] @ tab.T[:, -1] > tol * scale * 10:
        return LPResult("infeasible", None, None, tab.iterations)

    # drive zero-level artificials out of the basis, dropping redundant rows
    keep = []
    for row in range(tab.T.shape[0]):
        if tab.basis[row] >= m + q:
            cands = [j for j in range(m + q) if abs(tab.T[row, j]) > tol]
            if cands:
                tab.pivot(row, cands[0])
                keep.append(row)
        else:
            keep.append(row)
    tab.T = np.delete(tab.T[keep], np.s_[m + q:m + q + p], axis=1)
    tab.basis = [tab.basis[r] for r in keep]

    cost = np.zeros(m + q + 1)
    cost[:m] = c
    status = tab.optimize(cost, range(m + q), max_iter)
    if status != "optimal":
        return LPResult(status, None, None, tab.iterations)
    z = np.zeros(m + q)
    z[tab.basis] = tab.T[:, -1]
    x = np.clip(z[:m], 0.0, upper)
    return LPResult("optimal", x, float(c @ x), tab.iterations)
