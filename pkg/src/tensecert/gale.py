"""Gale matrices, the stress-derived Gale matrix, and neighbourhood span conditions."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import DEFAULT_TOL, Tolerances, kernel_basis, numeric_rank
from .model import TensegrityFramework, affine_dimension
from .stress import EdgePartition, StressMatrix


class GaleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GaleMatrix:
    """``Z`` (n x rbar) spanning the null space of ``[P e]^T``; row i is the Gale transform of node i."""

    Z: np.ndarray

    @property
    def rbar(self) -> int:
        return self.Z.shape[1]

    def transform(self, i: int) -> np.ndarray:
        return self.Z[i]

    def kernel_residual(self, P) -> float:
        P = np.asarray(P, dtype=float)
        return float(max(np.abs(P.T @ self.Z).max(initial=0.0), np.abs(self.Z.sum(axis=0)).max(initial=0.0)))


@dataclass(frozen=True, eq=False)
class SpecialGaleMatrix(GaleMatrix):
    """Gale matrix made of stress-matrix columns ``J``; zero wherever a column meets a missing edge."""

    J: tuple[int, ...] = ()


def is_gale_matrix(P, Z, tol: Tolerances = DEFAULT_TOL) -> bool:
    P = np.asarray(P, dtype=float)
    Z = np.asarray(Z, dtype=float)
    n, r = P.shape
    if Z.shape != (n, n - r - 1):
        return False
    scale = max(1.0, np.abs(Z).max(initial=0.0)) * max(1.0, np.abs(P).max())
    res = GaleMatrix(Z).kernel_residual(P - P.mean(axis=0))
    return res <= tol.feas_tol * scale and numeric_rank(Z, tol) == n - r - 1


def gale_matrix(fw: TensegrityFramework, tol: Tolerances = DEFAULT_TOL) -> GaleMatrix:
    """Orthonormal Gale matrix of the framework's configuration."""
    M = np.hstack([fw.P, np.ones((fw.n, 1))]).T
    Z = kernel_basis(M, tol)
    if Z.shape[1] != fw.rbar:
        raise GaleError(f"[P e] has rank {fw.n - Z.shape[1]}, expected r+1={fw.r + 1}")
    if fw.rbar == 0:
        warnings.warn("n = r+1: the Gale matrix has no columns", stacklevel=2)
    return GaleMatrix(Z)


def special_gale_from_stress(
    fw: TensegrityFramework, omega, tol: Tolerances = DEFAULT_TOL, columns=None
) -> SpecialGaleMatrix:
    """Take ``rbar`` independent columns of a rank-``rbar`` stress matrix.

    Columns are chosen by pivoted QR unless ``columns`` (0-based) is given.
    """
    omega = np.asarray(omega.omega if isinstance(omega, StressMatrix) else omega, dtype=float)
    rank = numeric_rank(omega, tol)
    if rank < fw.rbar:
        raise GaleError(f"stress matrix has rank {rank} < rbar={fw.rbar}")
    if columns is None:
        _, _, piv = scipy.linalg.qr(omega, pivoting=True)
        columns = piv[: fw.rbar]
    J = tuple(sorted(int(j) for j in columns))
    if len(set(J)) != fw.rbar:
        raise GaleError(f"need {fw.rbar} distinct columns, got {len(set(J))}")
    Zh = omega[:, J].copy()
    for i, j in fw.missing_edges():
        for k, jk in enumerate(J):
            if jk in (i, j):
                other = j if jk == i else i
                if abs(Zh[other, k]) > 0.0:
                    raise GaleError(f"column {jk + 1} is nonzero on missing edge {{{i + 1},{j + 1}}}")
    if not is_gale_matrix(fw.P, Zh, tol):
        raise GaleError("selected stress columns do not form a Gale matrix")
    return SpecialGaleMatrix(Zh, J)


@dataclass(frozen=True)
class NodeSpan:
    node: int
    members: tuple[int, ...]
    dimension: int
    passed: bool


@dataclass(frozen=True)
class NodeSpanReport:
    nodes: tuple[NodeSpan, ...]

    @property
    def all_pass(self) -> bool:
        return all(s.passed for s in self.nodes)

    @property
    def failures(self) -> list[NodeSpan]:
        return [s for s in self.nodes if not s.passed]

    def to_dict(self) -> list[dict]:
        return [
            {"node": s.node + 1, "members": [m + 1 for m in s.members], "dimension": s.dimension, "pass": s.passed}
            for s in self.nodes
        ]


def neighborhood_sets(fw: TensegrityFramework, partition: EdgePartition) -> list[tuple[int, ...]]:
    """For every node, itself plus its neighbours across bars and stressed cables/struts."""
    sets = [{i} for i in range(fw.n)]
    for k in partition.stressed_edges(fw):
        e = fw.edges[k]
        sets[e.i].add(e.j)
        sets[e.j].add(e.i)
    return [tuple(sorted(s)) for s in sets]


def node_span_condition(fw: TensegrityFramework, partition: EdgePartition, tol: Tolerances = DEFAULT_TOL) -> NodeSpanReport:
    out = []
    for i, members in enumerate(neighborhood_sets(fw, partition)):
        dim = affine_dimension(fw.P[list(members)], tol.rank_rtol)
        out.append(NodeSpan(i, members, dim, dim == fw.r))
    return NodeSpanReport(tuple(out))


@dataclass(frozen=True)
class GeneralPositionReport:
    ok: bool
    exhaustive: bool
    subsets_checked: int
    seed: int | None = None
    witness: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.ok


def affinely_independent(P, rows, tol: Tolerances = DEFAULT_TOL) -> bool:
    P = np.asarray(P, dtype=float)
    sub = np.hstack([P[list(rows)], np.ones((len(rows), 1))])
    return numeric_rank(sub, tol) == len(rows)


def general_position_check(
    P,
    subset=None,
    tol: Tolerances = DEFAULT_TOL,
    *,
    max_exhaustive: int = 16,
    samples: int = 20000,
    seed: int = 0,
) -> GeneralPositionReport:
    """Every ``r+1`` of the chosen points must be affinely independent.

    Exhaustive up to ``max_exhaustive`` points, otherwise ``samples`` random
    subsets drawn with ``seed``. Fewer than ``r+1`` points pass vacuously.
    """
    P = np.asarray(P, dtype=float)
    r = P.shape[1]
    idx = list(range(P.shape[0])) if subset is None else sorted(subset)
    if len(idx) < r + 1:
        return GeneralPositionReport(True, True, 0)
    if len(idx) <= max_exhaustive:
        count = 0
        for combo in itertools.combinations(idx, r + 1):
            count += 1
            if not affinely_independent(P, combo, tol):
                return GeneralPositionReport(False, True, count, None, combo)
        return GeneralPositionReport(True, True, count)
    rng = np.random.default_rng(seed)
    total = math.comb(len(idx), r + 1)
    for count in range(1, min(samples, total) + 1):
        combo = tuple(sorted(int(v) for v in rng.choice(idx, size=r + 1, replace=False)))
        if not affinely_independent(P, combo, tol):
            return GeneralPositionReport(False, False, count, seed, combo)
    return GeneralPositionReport(True, False, min(samples, total), seed)


def gale_independence(Z, J, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True when the Gale rows outside ``J`` are linearly independent."""
    Z = np.asarray(getattr(Z, "Z", Z), dtype=float)
    rest = [i for i in range(Z.shape[0]) if i not in set(J)]
    if not rest:
        return True
    return numeric_rank(Z[rest], tol) == len(rest)
