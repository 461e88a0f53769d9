"""Rigidity certification pipeline and independent re-verification of certificates."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .affine import (
    NONNEG,
    NONPOS,
    AffineFlexWitness,
    EdgeSupport,
    WitnessError,
    affine_flex_feasibility,
    domination_check,
    flex_residual,
    make_witness,
)
from .gale import (
    GaleError,
    gale_matrix,
    general_position_check,
    is_gale_matrix,
    neighborhood_sets,
    node_span_condition,
    special_gale_from_stress,
)
from .linalg import DEFAULT_TOL, Tolerances, numeric_rank, psd_check
from .model import FrameworkError, TensegrityFramework, center_configuration, framework_from_dict, validate
from .oracle import SearchBudget, congruence_gap, is_congruent, search_dominated_noncongruent
from .stress import (
    EdgePartition,
    StressAssignment,
    StressError,
    StressSearchBudget,
    assemble_stress_matrix,
    find_proper_psd_stress,
    is_proper,
    stress_from_matrix,
)

SCHEMA = "tensecert.certificate"
SCHEMA_VERSION = 1
CONGRUENCE_TOL = 1e-8


class CertificationError(ValueError):
    pass


class CertificateSchemaError(ValueError):
    pass


class Verdict(str, enum.Enum):
    UNIVERSALLY_RIGID = "UniversallyRigid"
    NOT_UNIVERSALLY_RIGID = "NotUniversallyRigid"
    DIMENSIONALLY_RIGID = "DimensionallyRigid"
    INCONCLUSIVE = "Inconclusive"


class CertPath(str, enum.Enum):
    NEIGHBORHOOD_SPAN = "neighborhood-span"  # PSD stress of full rank, every neighbourhood spans
    NO_AFFINE_FLEX = "no-affine-flex"  # PSD stress of full rank, flex system has only y = 0
    GENPOS_NEIGHBORHOODS = "genpos-neighborhoods"  # neighbourhoods in general position
    BAR_NEIGHBORHOOD_SPAN = "bar-neighborhood-span"  # bar framework specialisation
    AFFINE_WITNESS = "affine-witness"
    ORACLE_WITNESS = "oracle-witness"
    STRESS_RANK = "stress-rank"  # dimensional rigidity from stress rank
    UNESTABLISHED = "unestablished"


EXIT_CODES = {
    Verdict.UNIVERSALLY_RIGID: 0,
    Verdict.DIMENSIONALLY_RIGID: 0,
    Verdict.NOT_UNIVERSALLY_RIGID: 1,
    Verdict.INCONCLUSIVE: 3,
}


@dataclass(frozen=True)
class CertifyOptions:
    tol: Tolerances = DEFAULT_TOL
    stress: StressAssignment | None = None
    stress_budget: StressSearchBudget = StressSearchBudget()
    oracle: bool = False
    oracle_budget: SearchBudget = SearchBudget()
    oracle_dims: tuple[int, ...] | None = None


@dataclass
class RigidityCertificate:
    verdict: Verdict
    path: CertPath
    kind: str
    framework: dict
    tolerances: Tolerances
    evidence: dict = field(default_factory=dict)
    also_satisfies: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "schema_version": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "kind": self.kind,
            "verdict": self.verdict.value,
            "path": self.path.value,
            "also_satisfies": list(self.also_satisfies),
            "tolerances": self.tolerances.to_dict(),
            "framework": self.framework,
            "evidence": self.evidence,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d) -> "RigidityCertificate":
        required = {"schema", "schema_version", "kind", "verdict", "path", "tolerances", "framework", "evidence"}
        if not isinstance(d, dict) or not required <= set(d):
            missing = sorted(required - set(d)) if isinstance(d, dict) else sorted(required)
            raise CertificateSchemaError(f"certificate is missing {missing}")
        if d["schema"] != SCHEMA or d["schema_version"] != SCHEMA_VERSION:
            raise CertificateSchemaError(f"unsupported schema {d['schema']!r} v{d['schema_version']}")
        try:
            return cls(
                Verdict(d["verdict"]),
                CertPath(d["path"]),
                d["kind"],
                d["framework"],
                Tolerances.from_dict(d["tolerances"]),
                d["evidence"],
                list(d.get("also_satisfies", [])),
                list(d.get("notes", [])),
                d.get("tool_version", "unknown"),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise CertificateSchemaError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "RigidityCertificate":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise CertificateSchemaError(f"invalid JSON: {exc}") from None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    @property
    def witness(self) -> np.ndarray | None:
        w = self.evidence.get("witness")
        return None if w is None else np.array(w["q"], dtype=float)


def _matrix(M) -> list:
    return np.asarray(M, dtype=float).tolist()


def _stress_evidence(fw, stress, mat, tol, source, extra=None) -> dict:
    rep = psd_check(mat.omega, tol)
    ok, bad = is_proper(fw, stress, tol)
    ev = {
        "source": source,
        "weights": [{"i": e.i + 1, "j": e.j + 1, "w": float(w)} for e, w in zip(fw.edges, stress.weights)],
        "omega": _matrix(mat.omega),
        "eigenvalues": list(rep.eigenvalues),
        "rank": rep.rank,
        "psd": rep.is_psd,
        "proper": ok,
        "improper_edges": [fw.edges[k].label() for k in bad],
    }
    if extra:
        ev.update(extra)
    return ev


def _also_satisfies(fw, partition, tol) -> list[str]:
    out = []
    sets = neighborhood_sets(fw, partition)
    if all(general_position_check(fw.P, s, tol).ok for s in sets):
        out.append(CertPath.GENPOS_NEIGHBORHOODS.value)
    if fw.is_bar_framework:
        out.append(CertPath.BAR_NEIGHBORHOOD_SPAN.value)
    return out


def _checked(fw: TensegrityFramework, tol: Tolerances) -> TensegrityFramework:
    report = validate(fw, tol.rank_rtol)
    if not report.ok:
        raise CertificationError("; ".join(f.message for f in report.errors))
    return center_configuration(fw)


def _stress_stage(fwc, opts, ev, notes):
    """Obtain a stress (user-supplied or searched) and record it in ``ev``."""
    tol = opts.tol
    stress = mat = None
    if opts.stress is not None:
        try:
            mat = assemble_stress_matrix(fwc, opts.stress, tol)
        except StressError as exc:
            raise CertificationError(f"supplied stress rejected: {exc}") from None
        stress = opts.stress
        ev["stress"] = _stress_evidence(fwc, stress, mat, tol, "user")
    else:
        found = find_proper_psd_stress(fwc, tol, opts.stress_budget)
        search = {"budget": vars(opts.stress_budget).copy()}
        if found is not None:
            stress, mat = found.stress, found.matrix
            search.update(method=found.method, candidates=found.candidates_examined)
            ev["stress"] = _stress_evidence(fwc, stress, mat, tol, "search", {"search": search})
        else:
            ev["stress"] = None
            ev["stress_search"] = search
            notes.append("no proper PSD stress found within the search budget")

    full_rank = (
        ev["stress"] is not None
        and ev["stress"]["proper"]
        and ev["stress"]["psd"]
        and ev["stress"]["rank"] == fwc.rbar
    )
    return stress, mat, full_rank


def flex_search(fw: TensegrityFramework, opts: CertifyOptions = CertifyOptions()):
    """Affine-flex feasibility in the regime the certifier would use.

    With a proper PSD stress of rank ``rbar`` the homogeneous system on the
    unstressed cables/struts is solved; otherwise the general system on the
    largest support the known stress allows. Returns
    ``(feasibility, witness_or_None, evidence)``.
    """
    tol = opts.tol
    fwc = _checked(fw, tol)
    Z = gale_matrix(fwc, tol).Z
    ev: dict = {}
    stress, _, full_rank = _stress_stage(fwc, opts, ev, [])
    known = stress if (stress is not None and ev["stress"]["proper"]) else None
    support = EdgeSupport.from_partition(fwc, EdgePartition.from_stress(fwc, known, tol))
    feas = affine_flex_feasibility(fwc, Z, support, "rank_full" if full_rank else "general", tol)
    witness = make_witness(fwc, feas, tol) if feas.feasible else None
    return feas, witness, ev


def certify_universal_rigidity(fw: TensegrityFramework, opts: CertifyOptions = CertifyOptions()) -> RigidityCertificate:
    """Run the stress / span / affine-flex pipeline and return a self-contained certificate."""
    tol = opts.tol
    fwc = _checked(fw, tol)
    Z = gale_matrix(fwc, tol).Z
    ev: dict = {"n": fwc.n, "r": fwc.r, "rbar": fwc.rbar, "gale": {"Z": _matrix(Z)}}
    notes: list[str] = []

    stress, mat, full_rank = _stress_stage(fwc, opts, ev, notes)
    witness = None
    also: list[str] = []
    if full_rank:
        partition = EdgePartition.from_stress(fwc, stress, tol)
        ev["partition"] = _partition_dict(fwc, partition)
        try:
            sg = special_gale_from_stress(fwc, mat, tol)
            ev["special_gale"] = {"J": [j + 1 for j in sg.J], "Z": _matrix(sg.Z)}
        except GaleError as exc:
            notes.append(f"special Gale matrix unavailable: {exc}")
        span = node_span_condition(fwc, partition, tol)
        ev["node_span"] = span.to_dict()
        if span.all_pass:
            verdict, path = Verdict.UNIVERSALLY_RIGID, CertPath.NEIGHBORHOOD_SPAN
            also = _also_satisfies(fwc, partition, tol)
        else:
            support = EdgeSupport.from_partition(fwc, partition)
            feas = affine_flex_feasibility(fwc, Z, support, "rank_full", tol)
            ev["feasibility"] = feas.transcript()
            if not feas.feasible:
                verdict, path = Verdict.UNIVERSALLY_RIGID, CertPath.NO_AFFINE_FLEX
            else:
                witness = make_witness(fwc, feas, tol)
                verdict, path = Verdict.NOT_UNIVERSALLY_RIGID, CertPath.AFFINE_WITNESS
    else:
        known = stress if (stress is not None and ev["stress"]["proper"]) else None
        partition = EdgePartition.from_stress(fwc, known, tol)
        ev["partition"] = _partition_dict(fwc, partition)
        support = EdgeSupport.from_partition(fwc, partition)
        feas = affine_flex_feasibility(fwc, Z, support, "general", tol)
        ev["feasibility"] = feas.transcript()
        if feas.feasible:
            witness = make_witness(fwc, feas, tol)
            verdict, path = Verdict.NOT_UNIVERSALLY_RIGID, CertPath.AFFINE_WITNESS
        else:
            verdict, path = Verdict.INCONCLUSIVE, CertPath.UNESTABLISHED
            best = 0 if ev["stress"] is None else ev["stress"]["rank"]
            notes.append(f"best proper PSD stress rank {best} < rbar = {fwc.rbar}; no affine flex exists")
    if witness is not None:
        ev["witness"] = witness.to_dict()

    if opts.oracle and verdict is not Verdict.NOT_UNIVERSALLY_RIGID:
        dims = opts.oracle_dims or tuple(range(1, fwc.n))
        ev["oracle"] = {"budget": opts.oracle_budget.to_dict(), "dimensions": list(dims), "found": False}
        for s in dims:
            hit = search_dominated_noncongruent(fwc, s, opts.oracle_budget)
            if hit is not None:
                ev["oracle"].update(found=True, witness=hit.to_dict())
                notes.append(f"oracle found a dominated non-congruent configuration in R^{s}; overriding {verdict.value}")
                verdict, path, also = Verdict.NOT_UNIVERSALLY_RIGID, CertPath.ORACLE_WITNESS, []
                break

    return RigidityCertificate(verdict, path, "universal", fw.to_dict(), tol, ev, also, notes)


def certify_dimensional_rigidity(fw: TensegrityFramework, omega, tol: Tolerances = DEFAULT_TOL) -> RigidityCertificate:
    """Dimensional rigidity holds when the given proper PSD stress matrix has rank ``rbar``."""
    fwc = _checked(fw, tol)
    if isinstance(omega, StressAssignment):
        stress = omega
    else:
        omega = np.asarray(getattr(omega, "omega", omega), dtype=float)
        problems = _stress_matrix_problems(fwc, omega, tol)
        if problems:
            raise CertificationError("not a stress matrix of this framework: " + ", ".join(problems))
        stress = stress_from_matrix(fwc, omega)
    try:
        mat = assemble_stress_matrix(fwc, stress, tol)
    except StressError as exc:
        raise CertificationError(str(exc)) from None
    ev = {"n": fwc.n, "r": fwc.r, "rbar": fwc.rbar, "stress": _stress_evidence(fwc, stress, mat, tol, "user")}
    s = ev["stress"]
    notes = []
    if s["proper"] and s["psd"] and s["rank"] == fwc.rbar:
        verdict, path = Verdict.DIMENSIONALLY_RIGID, CertPath.STRESS_RANK
    else:
        verdict, path = Verdict.INCONCLUSIVE, CertPath.UNESTABLISHED
        notes.append(f"stress proper={s['proper']} psd={s['psd']} rank={s['rank']} (need rank {fwc.rbar})")
    return RigidityCertificate(verdict, path, "dimensional", fw.to_dict(), tol, ev, [], notes)


def _partition_dict(fw, part: EdgePartition) -> dict:
    lab = lambda ks: [fw.edges[k].label() for k in ks]
    return {
        "cables_stressed": lab(part.cables_stressed),
        "struts_stressed": lab(part.struts_stressed),
        "cables_unstressed": lab(part.cables_unstressed),
        "struts_unstressed": lab(part.struts_unstressed),
    }


def _stress_matrix_problems(fw, omega, tol) -> list[str]:
    n = fw.n
    out = []
    if omega.shape != (n, n):
        return ["Ω shape"]
    mag = max(1.0, np.abs(omega).max(initial=0.0))
    scale = mag * max(1.0, np.abs(fw.P).max())
    if np.abs(omega - omega.T).max() > 1e-12 * mag:
        out.append("Ω asymmetric")
    if any(omega[i, j] != 0.0 or omega[j, i] != 0.0 for i, j in fw.missing_edges()):
        out.append("Ω nonzero on missing edge")
    if np.abs(omega.sum(axis=1)).max() > tol.feas_tol * scale:
        out.append("Ω·e residual")
    if np.abs(omega @ fw.P).max() > tol.feas_tol * scale:
        out.append("Ω·P residual")
    return out


def _close(a, b, atol) -> bool:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= atol))


def verify_certificate(cert, fw: TensegrityFramework | None = None) -> tuple[bool, list[str]]:
    """Recompute every numeric claim in ``cert`` from its embedded evidence.

    ``cert`` may be a :class:`RigidityCertificate`, its dict form, or JSON text.
    Returns ``(ok, discrepancies)``; raises :class:`CertificateSchemaError` on
    malformed input.
    """
    if isinstance(cert, str):
        cert = RigidityCertificate.from_json(cert)
    elif isinstance(cert, dict):
        cert = RigidityCertificate.from_dict(cert)
    tol = cert.tolerances
    bad: list[str] = []
    try:
        embedded = framework_from_dict(cert.framework)
    except FrameworkError as exc:
        raise CertificateSchemaError(f"embedded framework: {exc}") from None
    if fw is None:
        fw = embedded
    elif fw.to_dict() != embedded.to_dict():
        bad.append("framework mismatch")
    fwc = center_configuration(fw)
    ev = cert.evidence
    try:
        _verify_body(cert, fwc, ev, tol, bad)
    except (KeyError, TypeError, IndexError) as exc:
        raise CertificateSchemaError(f"evidence malformed: {exc!r}") from None
    return not bad, bad


def _verify_body(cert, fwc, ev, tol, bad):
    if ev.get("rbar", fwc.rbar) != fwc.rbar:
        bad.append("rbar")
    st = ev.get("stress")
    stress_full_rank = False
    stress = None
    if st is not None:
        omega = np.array(st["omega"], dtype=float)
        bad.extend(_stress_matrix_problems(fwc, omega, tol))
        if omega.shape == (fwc.n, fwc.n):
            stress = StressAssignment([w["w"] for w in st["weights"]])
            if stress.weights.shape != (len(fwc.edges),) or not _close(stress.weights, stress_from_matrix(fwc, omega).weights, 1e-12 * max(1.0, np.abs(omega).max())):
                bad.append("stress weights disagree with Ω")
            ok, _ = is_proper(fwc, stress_from_matrix(fwc, omega), tol)
            if ok != st["proper"]:
                bad.append("properness claim")
            rep = psd_check(0.5 * (omega + omega.T), tol)
            if rep.is_psd != st["psd"]:
                bad.append("PSD claim")
            if rep.rank != st["rank"]:
                bad.append("stress rank claim")
            if not _close(rep.eigenvalues, st["eigenvalues"], 10 * tol.psd_rtol * max(1.0, abs(rep.max_eigenvalue))):
                bad.append("eigenvalues")
            stress_full_rank = ok and rep.is_psd and rep.rank == fwc.rbar
    if "gale" in ev:
        Z = np.array(ev["gale"]["Z"], dtype=float)
        if not is_gale_matrix(fwc.P, Z, tol):
            bad.append("Gale matrix")
    if "special_gale" in ev and st is not None:
        J = [j - 1 for j in ev["special_gale"]["J"]]
        Zh = np.array(ev["special_gale"]["Z"], dtype=float)
        omega = np.array(st["omega"], dtype=float)
        if not _close(Zh, omega[:, J], 0.0) or not is_gale_matrix(fwc.P, Zh, tol):
            bad.append("special Gale matrix")

    v, path = cert.verdict, cert.path
    if v is Verdict.UNIVERSALLY_RIGID:
        if not stress_full_rank:
            bad.append("stress does not establish full-rank proper PSD")
        elif path is CertPath.NEIGHBORHOOD_SPAN:
            part = EdgePartition.from_stress(fwc, stress, tol)
            span = node_span_condition(fwc, part, tol)
            if not span.all_pass:
                bad.append("node span condition")
            if span.to_dict() != ev.get("node_span"):
                bad.append("node span report")
            for claim in cert.also_satisfies:
                if claim == CertPath.GENPOS_NEIGHBORHOODS.value:
                    if not all(general_position_check(fwc.P, s, tol).ok for s in neighborhood_sets(fwc, part)):
                        bad.append("general position claim")
                elif claim == CertPath.BAR_NEIGHBORHOOD_SPAN.value:
                    if not fwc.is_bar_framework:
                        bad.append("bar framework claim")
                else:
                    bad.append(f"unknown claim {claim}")
        elif path is CertPath.NO_AFFINE_FLEX:
            part = EdgePartition.from_stress(fwc, stress, tol)
            support = EdgeSupport.from_partition(fwc, part)
            Z = np.array(ev["gale"]["Z"], dtype=float)
            feas = affine_flex_feasibility(fwc, Z, support, "rank_full", tol)
            if feas.feasible:
                bad.append("affine flex exists")
            tr = ev.get("feasibility") or {}
            if tr.get("support") != support.to_dict() or tr.get("feasible") is not False:
                bad.append("feasibility transcript")
        else:
            bad.append(f"path {path.value} cannot establish universal rigidity")
    elif v is Verdict.NOT_UNIVERSALLY_RIGID:
        if path is CertPath.AFFINE_WITNESS:
            _verify_affine_witness(fwc, ev, tol, bad)
        elif path is CertPath.ORACLE_WITNESS:
            w = ev.get("oracle", {}).get("witness")
            if w is None:
                bad.append("missing oracle witness")
            else:
                _verify_configuration(fwc, np.array(w["q"], dtype=float), tol, bad)
        else:
            bad.append(f"path {path.value} cannot establish non-rigidity")
    elif v is Verdict.DIMENSIONALLY_RIGID:
        if path is not CertPath.STRESS_RANK or not stress_full_rank:
            bad.append("stress does not establish dimensional rigidity")


def _verify_configuration(fwc, q, tol, bad):
    if q.ndim != 2 or q.shape[0] != fwc.n:
        bad.append("witness shape")
        return
    dom = domination_check(fwc, q, tol.feas_tol)
    if not dom.dominated:
        bad.append("witness not dominated")
    if is_congruent(fwc.P, q, CONGRUENCE_TOL):
        bad.append("witness congruent")


def _verify_affine_witness(fwc, ev, tol, bad):
    if "witness" not in ev:
        bad.append("missing witness")
        return
    w = AffineFlexWitness.from_dict(ev["witness"])
    _verify_configuration(fwc, w.q, tol, bad)
    r = fwc.r
    if w.A.shape != (r, r) or w.phi.shape != (r, r):
        bad.append("witness matrix shapes")
        return
    if not _close(w.A @ w.A.T, np.eye(r) + w.epsilon * w.phi, 1e-10 * max(1.0, np.abs(w.phi).max())):
        bad.append("A A^T ≠ I + ε Φ")
    if np.linalg.eigvalsh(np.eye(r) + w.epsilon * w.phi)[0] <= 0:
        bad.append("I + ε Φ not positive definite")
    if not _close(w.q, fwc.P @ w.A.T, 1e-9 * max(1.0, np.abs(fwc.P).max())):
        bad.append("q ≠ A p")
    y = w.y
    if y.shape != (len(w.support),) or not np.isclose(np.abs(y).max(initial=0.0), 1.0):
        bad.append("y normalisation")
        return
    if any(y[k] < -tol.feas_tol for k in w.support.indices(NONNEG)) or any(y[k] > tol.feas_tol for k in w.support.indices(NONPOS)):
        bad.append("y sign constraints")
    Z = np.array(ev["gale"]["Z"], dtype=float)
    xi = w.xi if w.regime == "general" else np.zeros(Z.shape[1])
    if flex_residual(fwc, Z, w.support, y, xi) > tol.feas_tol:
        bad.append("flex equation residual")
