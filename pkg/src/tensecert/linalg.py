"""Tolerance-aware dense kernels: rank, null spaces, PSD tests, indicator matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ABS_FLOOR = 1e-12


@dataclass(frozen=True)
class Tolerances:
    rank_rtol: float = 1e-9
    psd_rtol: float = 1e-9
    feas_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rtol", "psd_rtol", "feas_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def to_dict(self) -> dict:
        return {"rank_rtol": self.rank_rtol, "psd_rtol": self.psd_rtol, "feas_tol": self.feas_tol}

    @classmethod
    def from_dict(cls, d) -> "Tolerances":
        return cls(**{k: float(d[k]) for k in ("rank_rtol", "psd_rtol", "feas_tol")})


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class PsdReport:
    is_psd: bool
    min_eigenvalue: float
    max_eigenvalue: float
    rank: int
    eigenvalues: tuple[float, ...] = ()


def indicator_matrix(kind: str, n: int, i: int, j: int | None = None) -> np.ndarray:
    """The symmetric matrices ``F_ij``, ``E_ij`` (``i < j``) and ``L_i`` on 0-based nodes.

    F_ij = (e_i - e_j)(e_i - e_j)^T, E_ij = e_i e_j^T + e_j e_i^T, L_i = e_i 1^T + 1 e_i^T.
    Integer valued.
    """
    kind = kind.upper()
    M = np.zeros((n, n), dtype=np.int64)
    if kind == "L":
        if j is not None or not 0 <= i < n:
            raise IndexError(f"L needs a single node index in 0..{n - 1}")
        M[i, :] += 1
        M[:, i] += 1
        return M
    if j is None or not 0 <= i < j < n:
        raise IndexError(f"{kind} needs indices 0 <= i < j < {n}")
    if kind == "F":
        M[i, i] = M[j, j] = 1
        M[i, j] = M[j, i] = -1
    elif kind == "E":
        M[i, j] = M[j, i] = 1
    else:
        raise ValueError(f"unknown indicator kind {kind!r}")
    return M


def _cutoff(s_max: float, rtol: float) -> float:
    return max(rtol * s_max, ABS_FLOOR)


def numeric_rank(M, tol: Tolerances = DEFAULT_TOL) -> int:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > _cutoff(s[0], tol.rank_rtol)))


def kernel_basis(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the numerical null space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    ncols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(ncols)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    rank = 0 if (s.size == 0 or s[0] == 0.0) else int(np.sum(s > _cutoff(s[0], tol.rank_rtol)))
    return Vt[rank:].T.copy()


def row_space_basis(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal rows spanning the row space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros((0, M.shape[1]))
    _, s, Vt = np.linalg.svd(M, full_matrices=False)
    rank = 0 if s[0] == 0.0 else int(np.sum(s > _cutoff(s[0], tol.rank_rtol)))
    return Vt[:rank].copy()


def symmetrize(M, rtol: float = 1e-12) -> np.ndarray:
    """Return ``(M + M^T)/2``; reject matrices whose asymmetry exceeds ``rtol``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(np.abs(M).max(initial=0.0), 1.0)
    if np.abs(M - M.T).max(initial=0.0) > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def psd_check(M, tol: Tolerances = DEFAULT_TOL) -> PsdReport:
    S = symmetrize(M)
    if S.size == 0:
        return PsdReport(True, 0.0, 0.0, 0, ())
    w = np.linalg.eigvalsh(S)
    lo, hi = float(w[0]), float(w[-1])
    cut = tol.psd_rtol * max(1.0, abs(hi))
    return PsdReport(
        is_psd=lo >= -cut,
        min_eigenvalue=lo,
        max_eigenvalue=hi,
        rank=int(np.sum(w > max(tol.psd_rtol * max(1.0, hi), ABS_FLOOR))),
        eigenvalues=tuple(float(v) for v in w),
    )


def psd_sqrt(M) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix."""
    w, V = np.linalg.eigh(symmetrize(M))
    if w[0] < -1e-12 * max(1.0, abs(w[-1])):
        raise ValueError("matrix is not positive semidefinite")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
