"""Affine flexes: sign-constrained feasibility on the Gale matrix and witness construction.

A nonzero sign-feasible ``y`` with ``Ecal(y) Z = e xi^T`` exists exactly when some
affine image ``q_i = A p_i`` of the framework is dominated by, but not congruent to, it.
``Ecal(y)`` puts ``y_ij`` at positions (i, j) and (j, i) for every pair in the support.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_TOL, Tolerances, kernel_basis, psd_sqrt, row_space_basis
from .model import MemberKind, TensegrityFramework
from .simplex import simplex_max
from .stress import EdgePartition

FREE, NONNEG, NONPOS = "free", "nonneg", "nonpos"


class WitnessError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeSupport:
    """Pairs that may change length in an affine flex, each with a sign class.

    Missing edges are free, cables nonnegative, struts nonpositive.
    """

    pairs: tuple[tuple[int, int], ...]
    signs: tuple[str, ...]

    def __len__(self):
        return len(self.pairs)

    @classmethod
    def full(cls, fw: TensegrityFramework) -> "EdgeSupport":
        return cls.from_partition(fw, EdgePartition.from_stress(fw, None))

    @classmethod
    def from_partition(cls, fw: TensegrityFramework, partition: EdgePartition) -> "EdgeSupport":
        items = [(pair, FREE) for pair in fw.missing_edges()]
        items += [(fw.edges[k].pair, NONNEG) for k in partition.cables_unstressed]
        items += [(fw.edges[k].pair, NONPOS) for k in partition.struts_unstressed]
        items.sort()
        return cls(tuple(p for p, _ in items), tuple(s for _, s in items))

    def indices(self, sign: str) -> list[int]:
        return [k for k, s in enumerate(self.signs) if s == sign]

    def labels(self) -> list[str]:
        return [f"y[{i + 1},{j + 1}]" for i, j in self.pairs]

    def to_dict(self) -> list[dict]:
        return [{"i": i + 1, "j": j + 1, "sign": s} for (i, j), s in zip(self.pairs, self.signs)]

    @classmethod
    def from_dict(cls, items) -> "EdgeSupport":
        return cls(tuple((d["i"] - 1, d["j"] - 1) for d in items), tuple(d["sign"] for d in items))


def support_matrix(n: int, support: EdgeSupport, y) -> np.ndarray:
    """Ecal(y) = sum over the support of y_ij E_ij."""
    M = np.zeros((n, n))
    for (i, j), v in zip(support.pairs, np.asarray(y, dtype=float)):
        M[i, j] += v
        M[j, i] += v
    return M


def gram_offset(fw: TensegrityFramework, support: EdgeSupport, y) -> np.ndarray:
    """The vector x that makes ``Ecal(y) + x e^T + e x^T`` annihilate ``e``.

    x = -Ecal(y) e / n + (e^T Ecal(y) e) e / (2 n^2).
    """
    n = fw.n
    E = support_matrix(n, support, y)
    Ee = E.sum(axis=1)
    return -Ee / n + Ee.sum() / (2.0 * n * n) * np.ones(n)


def _constraint_matrix(fw, Z, support, regime):
    """Rows of the homogeneous system in y; in the general regime xi is eliminated."""
    n = fw.n
    Z = np.asarray(Z, dtype=float)
    cols = []
    for (i, j) in support.pairs:
        EZ = np.zeros((n, Z.shape[1]))
        EZ[i] += Z[j]
        EZ[j] += Z[i]
        if regime == "general":
            EZ = EZ - EZ.mean(axis=0)
        cols.append(EZ.ravel())
    if not cols:
        return np.zeros((n * Z.shape[1], 0))
    return np.column_stack(cols)


def reduced_constraints(R: np.ndarray, support: EdgeSupport, clean: float = 1e-10) -> list[dict]:
    """Reduced row-echelon form of independent constraint rows, as ``{label: coeff}`` maps."""
    A = np.array(R, dtype=float)
    rows, cols = A.shape
    out = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[p, c]) <= clean:
            continue
        A[[r, p]] = A[[p, r]]
        A[r] /= A[r, c]
        for k in range(rows):
            if k != r:
                A[k] -= A[k, c] * A[r]
        r += 1
    labels = support.labels()
    for k in range(r):
        row = {labels[c]: float(np.round(v, 12)) for c, v in enumerate(A[k]) if abs(v) > clean}
        out.append(row)
    return out


def format_constraint(row: dict) -> str:
    parts = []
    for name, v in row.items():
        if abs(v - 1.0) < 1e-12:
            term = name
        elif abs(v + 1.0) < 1e-12:
            term = f"-{name}"
        else:
            term = f"{v:.12g}*{name}"
        parts.append(term)
    return (" + ".join(parts)).replace("+ -", "- ") + " = 0"


@dataclass
class FlexFeasibility:
    """Outcome of the sign-constrained flex search plus the transcript that justifies it."""

    feasible: bool
    regime: str
    support: EdgeSupport
    y: np.ndarray | None = None
    xi: np.ndarray | None = None
    reduced: list[dict] = field(default_factory=list)
    free_probe_dim: int = 0
    lp_status: str | None = None
    lp_objective: float | None = None
    decided_by: str = ""

    def transcript(self) -> dict:
        return {
            "regime": self.regime,
            "support": self.support.to_dict(),
            "reduced_constraints": [format_constraint(r) for r in self.reduced],
            "reduced_constraint_rows": self.reduced,
            "free_probe_dim": self.free_probe_dim,
            "lp_status": self.lp_status,
            "lp_objective": self.lp_objective,
            "decided_by": self.decided_by,
            "feasible": self.feasible,
        }

    def summary(self) -> str:
        if not len(self.support):
            return "infeasible: empty support"
        eqs = "; ".join(format_constraint(r) for r in self.reduced) or "no constraints"
        if self.feasible:
            y = ", ".join(f"{lab}={v:.12g}" for lab, v in zip(self.support.labels(), self.y) if abs(v) > 0)
            return f"feasible ({self.decided_by}): {eqs}; witness {y}"
        signs = []
        if self.support.indices(NONPOS):
            signs.append("y≤0 on struts")
        if self.support.indices(NONNEG):
            signs.append("y≥0 on cables")
        tail = " and ".join(signs) if signs else "free coordinates"
        return f"infeasible: {eqs} with {tail} forces y=0"


def affine_flex_feasibility(
    fw: TensegrityFramework,
    Z,
    support: EdgeSupport,
    regime: str = "general",
    tol: Tolerances = DEFAULT_TOL,
) -> FlexFeasibility:
    """Decide whether a nonzero sign-feasible ``y`` solves the flex equations.

    ``regime="general"`` solves ``Ecal(y) Z = e xi^T``; ``"rank_full"`` solves
    ``Ecal(y) Z = 0`` (valid once a proper PSD stress of rank ``rbar`` is known).
    A free-coordinate subspace probe runs first, then a bounded LP that
    maximises the total signed magnitude. Solutions are scaled to max-norm 1.
    """
    if regime not in ("general", "rank_full"):
        raise ValueError(f"unknown regime {regime!r}")
    Z = np.asarray(getattr(Z, "Z", Z), dtype=float)
    out = FlexFeasibility(False, regime, support)
    m = len(support)
    if m == 0:
        out.decided_by = "empty-support"
        return out
    M = _constraint_matrix(fw, Z, support, regime)
    R = row_space_basis(M, tol)
    out.reduced = reduced_constraints(R, support)

    free = support.indices(FREE)
    if free:
        K = kernel_basis(R[:, free], tol) if R.shape[0] else np.eye(len(free))
        out.free_probe_dim = K.shape[1]
        if K.shape[1]:
            y = np.zeros(m)
            y[free] = K[:, 0]
            return _accept(out, fw, Z, y, "free-subspace", tol)

    nonneg, nonpos = support.indices(NONNEG), support.indices(NONPOS)
    if not nonneg and not nonpos:
        out.decided_by = "free-subspace"
        return out
    # shift every coordinate into [0, upper]: free y = u - 1, cable y = u, strut y = -u
    c = np.zeros(m)
    c[nonneg] = 1.0
    c[nonpos] = 1.0
    D = np.ones(m)
    D[nonpos] = -1.0
    shift = np.zeros(m)
    shift[free] = -1.0
    upper = np.ones(m)
    upper[free] = 2.0
    A = R * D[None, :]
    b = -R @ shift
    res = simplex_max(c, A, b, upper, tol=tol.feas_tol * 1e-2)
    out.lp_status = res.status
    out.lp_objective = res.objective
    if res.status == "optimal" and res.objective > tol.feas_tol:
        y = D * res.x + shift
        return _accept(out, fw, Z, y, "lp", tol)
    out.decided_by = "lp"
    return out


def _accept(out, fw, Z, y, how, tol):
    y = np.asarray(y, dtype=float)
    y = y / np.abs(y).max()
    y[np.abs(y) < 1e-14] = 0.0
    E = support_matrix(fw.n, out.support, y)
    EZ = E @ Z
    xi = EZ.mean(axis=0) if out.regime == "general" else np.zeros(Z.shape[1])
    out.feasible, out.y, out.xi, out.decided_by = True, y, xi, how
    return out


def flex_residual(fw: TensegrityFramework, Z, support: EdgeSupport, y, xi) -> float:
    Z = np.asarray(getattr(Z, "Z", Z), dtype=float)
    E = support_matrix(fw.n, support, y)
    return float(np.abs(E @ Z - np.outer(np.ones(fw.n), xi)).max(initial=0.0))


def affine_stretch(fw: TensegrityFramework, support: EdgeSupport, y, x=None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Symmetric r x r ``Phi`` with ``P Phi P^T = Ecal(y) + x e^T + e x^T`` (least squares).

    ``fw`` must be centred.
    """
    y = np.asarray(y, dtype=float)
    if not np.any(np.abs(y) > 0):
        raise WitnessError("y must be nonzero")
    if x is None:
        x = gram_offset(fw, support, y)
    n = fw.n
    e = np.ones(n)
    E = support_matrix(n, support, y)
    target = E + np.outer(x, e) + np.outer(e, x)
    Pp = np.linalg.pinv(fw.P)
    phi = Pp @ target @ Pp.T
    phi = 0.5 * (phi + phi.T)
    res = np.linalg.norm(fw.P @ phi @ fw.P.T - target)
    if res > tol.feas_tol * max(1.0, np.linalg.norm(E)):
        raise WitnessError(f"no symmetric stretch reproduces Ecal(y) (residual {res:.3e}); y is not a flex")
    if not np.any(np.abs(phi) > tol.feas_tol):
        raise WitnessError("stretch vanishes")
    return phi


@dataclass(frozen=True)
class DominationReport:
    dominated: bool
    residuals: tuple[float, ...]  # squared-length changes, one per edge
    violations: tuple[int, ...]
    tolerance: float


def domination_check(fw: TensegrityFramework, q, tol: float = DEFAULT_TOL.feas_tol) -> DominationReport:
    """Compare squared member lengths of ``q`` (any dimension) against ``fw``.

    Bars must keep their length, cables may not lengthen, struts may not
    shorten; ``tol`` is relative to the longest squared member length.
    """
    Q = np.asarray(q, dtype=float)
    dp = np.array([np.sum((fw.P[e.i] - fw.P[e.j]) ** 2) for e in fw.edges])
    dq = np.array([np.sum((Q[e.i] - Q[e.j]) ** 2) for e in fw.edges])
    res = dq - dp
    thr = tol * max(1.0, dp.max(initial=0.0))
    bad = []
    for k, e in enumerate(fw.edges):
        if e.kind is MemberKind.BAR and abs(res[k]) > thr:
            bad.append(k)
        elif e.kind is MemberKind.CABLE and res[k] > thr:
            bad.append(k)
        elif e.kind is MemberKind.STRUT and res[k] < -thr:
            bad.append(k)
    return DominationReport(not bad, tuple(float(v) for v in res), tuple(bad), thr)


@dataclass(frozen=True, eq=False)
class AffineFlexWitness:
    support: EdgeSupport
    y: np.ndarray
    xi: np.ndarray
    x: np.ndarray
    phi: np.ndarray
    epsilon: float
    A: np.ndarray
    q: np.ndarray
    regime: str
    phi_rank: int

    def to_dict(self) -> dict:
        return {
            "support": self.support.to_dict(),
            "y": [float(v) for v in self.y],
            "xi": [float(v) for v in self.xi],
            "x": [float(v) for v in self.x],
            "phi": self.phi.tolist(),
            "phi_rank": self.phi_rank,
            "epsilon": float(self.epsilon),
            "A": self.A.tolist(),
            "q": self.q.tolist(),
            "regime": self.regime,
        }

    @classmethod
    def from_dict(cls, d) -> "AffineFlexWitness":
        return cls(
            EdgeSupport.from_dict(d["support"]),
            np.array(d["y"], dtype=float),
            np.array(d["xi"], dtype=float),
            np.array(d["x"], dtype=float),
            np.array(d["phi"], dtype=float),
            float(d["epsilon"]),
            np.array(d["A"], dtype=float),
            np.array(d["q"], dtype=float),
            d["regime"],
            int(d["phi_rank"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build_dominated_framework(fw: TensegrityFramework, phi, tol: Tolerances = DEFAULT_TOL):
    """Step ``epsilon``, transform ``A = sqrt(I + epsilon Phi)`` and the image ``q = P A``."""
    from .oracle import is_congruent

    phi = np.asarray(phi, dtype=float)
    if not np.any(np.abs(phi) > 0):
        raise WitnessError("Phi must be nonzero")
    lam = np.linalg.eigvalsh(0.5 * (phi + phi.T))[0]
    eps = min(1.0, 1.0 / (2.0 * abs(lam))) if lam < 0 else 1.0
    A = psd_sqrt(np.eye(fw.r) + eps * phi)
    q = fw.P @ A
    dom = domination_check(fw, q, tol.feas_tol)
    if not dom.dominated:
        raise WitnessError(f"image violates members {[fw.edges[k].label() for k in dom.violations]}")
    if is_congruent(fw.P, q):
        raise WitnessError("image is congruent to the framework")
    return eps, A, q


def make_witness(fw: TensegrityFramework, feas: FlexFeasibility, tol: Tolerances = DEFAULT_TOL) -> AffineFlexWitness:
    """Turn a feasible flex (on a centred framework) into an explicit dominated configuration."""
    if not feas.feasible:
        raise WitnessError("no feasible flex")
    x = gram_offset(fw, feas.support, feas.y)
    phi = affine_stretch(fw, feas.support, feas.y, x, tol)
    eps, A, q = build_dominated_framework(fw, phi, tol)
    rank = int(np.sum(np.abs(np.linalg.eigvalsh(phi)) > tol.rank_rtol * max(1.0, np.abs(phi).max())))
    return AffineFlexWitness(feas.support, feas.y, feas.xi, x, phi, eps, A, q, feas.regime, rank)


def gram_gap_decomposition(fw: TensegrityFramework, Q):
    """Express ``Q Q^T - P P^T`` in the E/L basis complementary to the bar F-matrices.

    Returns the support (missing edges, cables, struts), its coefficients y,
    the offset x and the reconstruction residual. Both configurations are
    centred first. ``y_ij = -(|q_i - q_j|^2 - |p_i - p_j|^2) / 2`` on the support.
    """
    P = fw.P - fw.P.mean(axis=0)
    Q = np.asarray(Q, dtype=float)
    Q = Q - Q.mean(axis=0)
    G = Q @ Q.T - P @ P.T
    support = EdgeSupport.full(fw)
    y = np.array([-0.5 * (G[i, i] + G[j, j] - 2 * G[i, j]) for i, j in support.pairs])
    x = gram_offset(fw, support, y)
    e = np.ones(fw.n)
    recon = support_matrix(fw.n, support, y) + np.outer(x, e) + np.outer(e, x)
    return support, y, x, float(np.abs(G - recon).max())


# names used by the operation catalogue
x_from_y = gram_offset
phi_from_y = affine_stretch
