"""Equilibrium stresses, stress matrices, and the search for a proper PSD stress."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .linalg import DEFAULT_TOL, Tolerances, kernel_basis, numeric_rank, psd_check
from .model import FrameworkError, MemberKind, TensegrityFramework


class StressError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StressAssignment:
    """Edge weights, aligned with ``fw.edges``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def as_dict(self, fw: TensegrityFramework) -> dict[tuple[int, int], float]:
        return {e.pair: float(w) for e, w in zip(fw.edges, self.weights)}

    def scaled(self, c: float) -> "StressAssignment":
        return StressAssignment(c * self.weights)

    def __neg__(self):
        return self.scaled(-1.0)


@dataclass(frozen=True, eq=False)
class StressMatrix:
    omega: np.ndarray
    source: StressAssignment


@dataclass(frozen=True, eq=False)
class StressDecomposition:
    """``omega = Z @ psi @ Z.T`` for a Gale matrix ``Z``."""

    psi: np.ndarray
    Z: np.ndarray
    residual: float
    rank: int


@dataclass(frozen=True)
class EdgePartition:
    """Cables/struts split by whether the stress on them is nonzero (edge indices)."""

    cables_stressed: tuple[int, ...]
    struts_stressed: tuple[int, ...]
    cables_unstressed: tuple[int, ...]
    struts_unstressed: tuple[int, ...]

    @classmethod
    def from_stress(cls, fw: TensegrityFramework, stress: StressAssignment | None, tol: Tolerances = DEFAULT_TOL):
        cables = fw.edges_of_kind(MemberKind.CABLE)
        struts = fw.edges_of_kind(MemberKind.STRUT)
        if stress is None:
            return cls((), (), tuple(cables), tuple(struts))
        w = stress.weights
        hit = lambda k: abs(w[k]) > tol.feas_tol
        return cls(
            tuple(k for k in cables if hit(k)),
            tuple(k for k in struts if hit(k)),
            tuple(k for k in cables if not hit(k)),
            tuple(k for k in struts if not hit(k)),
        )

    def stressed_edges(self, fw: TensegrityFramework) -> list[int]:
        """Bars together with every cable and strut carrying nonzero stress."""
        keep = set(fw.edges_of_kind(MemberKind.BAR)) | set(self.cables_stressed) | set(self.struts_stressed)
        return sorted(keep)


def equilibrium_matrix(fw: TensegrityFramework) -> np.ndarray:
    """The (n*r) x |E| operator whose kernel is the stress space."""
    n, r = fw.P.shape
    M = np.zeros((n * r, len(fw.edges)))
    for k, e in enumerate(fw.edges):
        d = fw.P[e.i] - fw.P[e.j]
        M[e.i * r:(e.i + 1) * r, k] = d
        M[e.j * r:(e.j + 1) * r, k] = -d
    return M


def stress_space_basis(fw: TensegrityFramework, tol: Tolerances = DEFAULT_TOL) -> list[StressAssignment]:
    K = kernel_basis(equilibrium_matrix(fw), tol)
    return [StressAssignment(K[:, k]) for k in range(K.shape[1])]


def equilibrium_residual(fw: TensegrityFramework, stress: StressAssignment) -> float:
    """Largest per-node force imbalance."""
    f = equilibrium_matrix(fw) @ stress.weights
    return float(np.abs(f).max(initial=0.0))


def _equilibrium_ok(fw, stress, tol) -> bool:
    scale = max(1.0, np.abs(stress.weights).max(initial=0.0)) * max(1.0, np.abs(fw.P).max())
    return equilibrium_residual(fw, stress) <= tol.feas_tol * scale


def stress_matrix_from_weights(fw: TensegrityFramework, weights) -> np.ndarray:
    n = fw.n
    omega = np.zeros((n, n))
    for e, w in zip(fw.edges, weights):
        omega[e.i, e.j] -= w
        omega[e.j, e.i] -= w
        omega[e.i, e.i] += w
        omega[e.j, e.j] += w
    return omega


def assemble_stress_matrix(fw: TensegrityFramework, stress: StressAssignment, tol: Tolerances = DEFAULT_TOL) -> StressMatrix:
    if stress.weights.shape != (len(fw.edges),):
        raise StressError("stress must carry one weight per edge")
    if not _equilibrium_ok(fw, stress, tol):
        raise StressError(f"equilibrium residual {equilibrium_residual(fw, stress):.3e} too large")
    omega = stress_matrix_from_weights(fw, stress.weights)
    scale = max(1.0, np.abs(omega).max(initial=0.0)) * max(1.0, np.abs(fw.P).max())
    Pc = fw.P - fw.P.mean(axis=0)
    if np.abs(omega.sum(axis=1)).max() > tol.feas_tol * scale or np.abs(omega @ Pc).max() > tol.feas_tol * scale:
        raise StressError("assembled matrix does not annihilate e and P")
    omega.setflags(write=False)
    return StressMatrix(omega, stress)


def stress_from_matrix(fw: TensegrityFramework, omega) -> StressAssignment:
    """Read edge weights off the off-diagonal of a stress matrix."""
    omega = np.asarray(omega, dtype=float)
    return StressAssignment([-omega[e.i, e.j] for e in fw.edges])


def is_proper(fw: TensegrityFramework, stress: StressAssignment, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, list[int]]:
    """Cables need ω ≥ 0 and struts ω ≤ 0; returns the offending edge indices."""
    bad = []
    for k, (e, w) in enumerate(zip(fw.edges, stress.weights)):
        if e.kind is MemberKind.CABLE and w < -tol.feas_tol:
            bad.append(k)
        elif e.kind is MemberKind.STRUT and w > tol.feas_tol:
            bad.append(k)
    return not bad, bad


def gale_stress_factor(omega, Z, tol: Tolerances = DEFAULT_TOL) -> StressDecomposition:
    """Write ``omega`` as ``Z psi Z^T``; fails when ``omega`` is not a stress matrix for ``Z``."""
    omega = np.asarray(omega.omega if isinstance(omega, StressMatrix) else omega, dtype=float)
    Z = np.asarray(getattr(Z, "Z", Z), dtype=float)
    G = np.linalg.inv(Z.T @ Z)
    psi = G @ Z.T @ omega @ Z @ G
    psi = 0.5 * (psi + psi.T)
    res = float(np.linalg.norm(omega - Z @ psi @ Z.T))
    if res > tol.feas_tol * max(1.0, np.linalg.norm(omega)):
        raise StressError(f"omega is not of the form Z psi Z^T (residual {res:.3e})")
    return StressDecomposition(psi, Z, res, numeric_rank(psi, tol) if psi.size else 0)


@dataclass(frozen=True)
class StressSearchBudget:
    restarts: int = 8
    iterations: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 1:
            raise ValueError("budget entries must be positive")


@dataclass(frozen=True, eq=False)
class StressSearchResult:
    stress: StressAssignment
    matrix: StressMatrix
    rank: int
    min_gale_eigenvalue: float
    method: str
    candidates_examined: int


def _proper_psd_candidate(fw, weights, tol):
    stress = StressAssignment(weights)
    if not is_proper(fw, stress, tol)[0]:
        return None
    try:
        mat = assemble_stress_matrix(fw, stress, tol)
    except StressError:
        return None
    rep = psd_check(mat.omega, tol)
    if not rep.is_psd:
        return None
    return stress, mat, rep


def _gale_eigs(fw, omega):
    from .gale import gale_matrix

    Z = gale_matrix(fw).Z
    if Z.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(0.5 * (Z.T @ omega @ Z + (Z.T @ omega @ Z).T))


def find_proper_psd_stress(
    fw: TensegrityFramework,
    tol: Tolerances = DEFAULT_TOL,
    budget: StressSearchBudget = StressSearchBudget(),
) -> StressSearchResult | None:
    """Look for a proper PSD stress matrix of largest rank.

    One-dimensional stress spaces are settled by testing both signs of the
    basis vector. Otherwise a cutting-plane ascent maximises the smallest
    eigenvalue of the Gale-compressed stress matrix over the proper cone
    (box-normalised), with extra restarts seeded by random cuts. ``None``
    means nothing proper and PSD was found, not that nothing exists.
    """
    from .gale import gale_matrix

    basis = stress_space_basis(fw, tol)
    if not basis:
        return None
    B = np.column_stack([b.weights for b in basis])
    candidates = []
    for k in range(B.shape[1]):
        for sign in (1.0, -1.0):
            c = _proper_psd_candidate(fw, sign * B[:, k], tol)
            if c is not None:
                candidates.append((c, "basis"))
    if B.shape[1] > 1:
        Z = gale_matrix(fw, tol).Z
        psis = np.stack([Z.T @ stress_matrix_from_weights(fw, B[:, k]) @ Z for k in range(B.shape[1])])
        rng = np.random.default_rng(budget.seed)
        for restart in range(budget.restarts):
            w = _cutting_plane(fw, B, psis, tol, budget.iterations, rng if restart else None)
            if w is not None:
                c = _proper_psd_candidate(fw, w / np.abs(w).max(), tol)
                if c is not None:
                    candidates.append((c, f"cutting-plane[{restart}]"))
    if not candidates:
        return None

    scored = []
    for (stress, mat, rep), method in candidates:
        gale_min = float(np.min(_gale_eigs(fw, mat.omega), initial=0.0))
        scored.append(((rep.rank, gale_min), stress, mat, method))
    # max() keeps the earliest of equal keys, so ties go to the lowest restart
    (rank, gale_min), stress, mat, method = max(scored, key=lambda t: t[0])
    return StressSearchResult(stress, mat, rank, gale_min, method, len(candidates))


def _cutting_plane(fw, B, psis, tol, iterations, rng):
    """Kelley's method for max λ_min(Σ c_k Ψ_k) over |c| ≤ 1 with properness."""
    k, rb = psis.shape[0], psis.shape[1]
    cables = fw.edges_of_kind(MemberKind.CABLE)
    struts = fw.edges_of_kind(MemberKind.STRUT)
    # variables (c_1..c_k, t); linprog minimises, so the objective is -t
    obj = np.zeros(k + 1)
    obj[-1] = -1.0
    rows = [np.append(-B[e], 0.0) for e in cables] + [np.append(B[e], 0.0) for e in struts]
    cuts = [np.eye(rb)[i] for i in range(rb)]
    if rng is not None:
        cuts += list(rng.standard_normal((rb, rb)))
    best_w, best_val = None, -np.inf
    for _ in range(iterations):
        A = rows + [np.append(-np.einsum("i,kij,j->k", v, psis, v) / (v @ v), 1.0) for v in cuts]
        res = linprog(obj, A_ub=np.array(A), b_ub=np.zeros(len(A)), bounds=[(-1, 1)] * k + [(None, None)], method="highs")
        if res.status != 0:
            return best_w
        c, upper = res.x[:k], res.x[-1]
        vals, vecs = np.linalg.eigh(np.einsum("k,kij->ij", c, psis))
        if vals[0] > best_val:
            best_val, best_w = vals[0], B @ c
        if upper - best_val <= tol.psd_rtol * max(1.0, abs(vals[-1])):
            break
        cuts.append(vecs[:, 0])
    if best_w is None or not np.any(np.abs(best_w) > tol.feas_tol):
        return None
    return best_w


def parse_stress_file(text: str, fw: TensegrityFramework) -> StressAssignment:
    """``{"stresses": [{"i": 1, "j": 2, "w": -1.0}, ...]}``; omitted edges get 0."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FrameworkError(f"syntax error: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(doc, dict) or set(doc) != {"stresses"} or not isinstance(doc["stresses"], list):
        raise FrameworkError("stress file must be an object with the single key 'stresses'")
    w = np.zeros(len(fw.edges))
    for k, item in enumerate(doc["stresses"]):
        loc = f"stresses[{k}]"
        if not isinstance(item, dict) or set(item) != {"i", "j", "w"}:
            raise FrameworkError("stress entry needs exactly keys 'i', 'j', 'w'", loc)
        idx = fw.edge_index(int(item["i"]) - 1, int(item["j"]) - 1)
        if idx is None:
            raise FrameworkError(f"no edge {{{item['i']},{item['j']}}} in framework", loc)
        w[idx] = float(item["w"])
    return StressAssignment(w)


def stress_to_dict(fw: TensegrityFramework, stress: StressAssignment) -> dict:
    return {"stresses": [{"i": e.i + 1, "j": e.j + 1, "w": float(w)} for e, w in zip(fw.edges, stress.weights)]}


psi_factor = gale_stress_factor
