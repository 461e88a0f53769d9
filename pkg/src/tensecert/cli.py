"""``tensecert`` command line: analyze, certify, flex, verify, render."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certify import (
    CertificateSchemaError,
    CertificationError,
    CertifyOptions,
    RigidityCertificate,
    flex_search,
    certify_universal_rigidity,
    verify_certificate,
)
from .gale import GaleError, gale_matrix, general_position_check, node_span_condition
from .linalg import DEFAULT_TOL, Tolerances
from .model import FrameworkError, center_configuration, load_framework, validate
from .oracle import SearchBudget
from .render import RenderError, RenderStyle, render_svg
from .stress import (
    EdgePartition,
    StressError,
    StressSearchBudget,
    find_proper_psd_stress,
    parse_stress_file,
    stress_space_basis,
)

EXIT_ERROR = 2


class UsageError(Exception):
    pass


def g(v) -> str:
    return f"{float(v):.12g}"


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tensecert", description="Universal-rigidity certificates for tensegrity frameworks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=_positive, default=DEFAULT_TOL.rank_rtol)
    common.add_argument("--tol-psd", type=_positive, default=DEFAULT_TOL.psd_rtol)
    common.add_argument("--tol-feas", type=_positive, default=DEFAULT_TOL.feas_tol)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", action="store_true", help="print machine-readable JSON instead of text")
    common.add_argument("--out", type=Path, help="write the main artefact to this path")

    with_stress = argparse.ArgumentParser(add_help=False)
    with_stress.add_argument("--stress", type=Path, help="stress file: {\"stresses\": [{\"i\",\"j\",\"w\"}]}")

    a = sub.add_parser("analyze", parents=[common, with_stress], help="summarise stresses, Gale matrix and node spans")
    a.add_argument("framework", type=Path)
    c = sub.add_parser("certify", parents=[common, with_stress], help="decide universal rigidity and emit a certificate")
    c.add_argument("framework", type=Path)
    c.add_argument("--oracle", action="store_true", help="also run the numerical falsification search")
    f = sub.add_parser("flex", parents=[common, with_stress], help="solve the affine-flex feasibility problem")
    f.add_argument("framework", type=Path)
    v = sub.add_parser("verify", parents=[common], help="re-check a certificate")
    v.add_argument("certificate", type=Path)
    v.add_argument("--framework", type=Path, help="compare against this framework file")
    r = sub.add_parser("render", parents=[common], help="draw a planar framework as SVG")
    r.add_argument("framework", type=Path)
    r.add_argument("--scale", type=_positive, default=RenderStyle.scale)
    r.add_argument("--witness", type=Path, help="certificate or witness JSON whose configuration is overlaid")
    return p


def _tol(args) -> Tolerances:
    return Tolerances(args.tol_rank, args.tol_psd, args.tol_feas)


def _load(args):
    fw = load_framework(args.framework)
    report = validate(fw, args.tol_rank)
    for w in report.warnings:
        print(f"warning: {w.message}", file=sys.stderr)
    if not report.ok:
        raise FrameworkError("; ".join(f"{e.code}: {e.message}" for e in report.errors))
    return fw


def _options(args, fw) -> CertifyOptions:
    stress = None
    if getattr(args, "stress", None) is not None:
        stress = parse_stress_file(args.stress.read_text(encoding="utf-8"), fw)
    return CertifyOptions(
        tol=_tol(args),
        stress=stress,
        stress_budget=StressSearchBudget(seed=args.seed),
        oracle=getattr(args, "oracle", False),
        oracle_budget=SearchBudget(seed=args.seed),
    )


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def cmd_analyze(args) -> int:
    fw = _load(args)
    tol = _tol(args)
    fwc = center_configuration(fw)
    basis = stress_space_basis(fwc, tol)
    Z = gale_matrix(fwc, tol)
    opts = _options(args, fw)
    stress = opts.stress
    if stress is None:
        found = find_proper_psd_stress(fwc, tol, opts.stress_budget)
        stress = None if found is None else found.stress
        rank = None if found is None else found.rank
    else:
        rank = None
    span = node_span_condition(fwc, EdgePartition.from_stress(fwc, stress, tol), tol)
    gp = general_position_check(fwc.P, tol=tol, seed=args.seed)
    lines = [
        f"n={fwc.n}; r={fwc.r}; r̄={fwc.rbar}; edges={len(fwc.edges)}",
        f"stress space dim {len(basis)}; r̄={fwc.rbar}",
        f"proper PSD stress: {'none found' if stress is None else ('supplied' if rank is None else f'rank {rank}')}",
        f"Gale matrix {Z.Z.shape[0]}x{Z.Z.shape[1]}; kernel residual {g(Z.kernel_residual(fwc.P))}",
    ]
    for s in span.nodes:
        mark = "ok" if s.passed else "FAIL"
        members = ",".join(str(m + 1) for m in s.members)
        lines.append(f"node {s.node + 1} span {mark} (dim {s.dimension}) neighbourhood {{{members}}}")
    mode = "exhaustive" if gp.exhaustive else f"sampled, seed {gp.seed}"
    lines.append(f"general position: {'yes' if gp.ok else 'no'} ({mode}, {gp.subsets_checked} subsets)")
    payload = {
        "n": fwc.n,
        "r": fwc.r,
        "rbar": fwc.rbar,
        "stress_space_dim": len(basis),
        "stress_rank": rank,
        "gale_shape": list(Z.Z.shape),
        "node_span": span.to_dict(),
        "general_position": gp.ok,
    }
    _emit(args, payload, "\n".join(lines))
    return 0


def _certificate_summary(cert: RigidityCertificate) -> str:
    lines = [f"verdict: {cert.verdict.value}", f"path: {cert.path.value}"]
    st = cert.evidence.get("stress")
    if st is not None:
        eig = ", ".join(g(v) for v in st["eigenvalues"])
        lines.append(f"stress ({st['source']}): rank {st['rank']}, psd {st['psd']}, proper {st['proper']}; eigenvalues [{eig}]")
    if "node_span" in cert.evidence:
        bad = [s["node"] for s in cert.evidence["node_span"] if not s["pass"]]
        lines.append("node span: all pass" if not bad else "node span FAIL at nodes " + ", ".join(map(str, bad)))
    if cert.also_satisfies:
        lines.append("also satisfies: " + ", ".join(cert.also_satisfies))
    feas = cert.evidence.get("feasibility")
    if feas is not None:
        eqs = "; ".join(feas["reduced_constraints"]) or "no constraints"
        lines.append(f"affine flex ({feas['regime']}): {'feasible' if feas['feasible'] else 'infeasible'}; {eqs}")
    lines.extend(f"note: {n}" for n in cert.notes)
    return "\n".join(lines)


def cmd_certify(args) -> int:
    fw = _load(args)
    cert = certify_universal_rigidity(fw, _options(args, fw))
    if args.out is not None:
        args.out.write_text(cert.to_json() + "\n", encoding="utf-8")
    if args.json:
        print(cert.to_json())
    else:
        print(_certificate_summary(cert))
        if args.out is not None:
            print(f"certificate written to {args.out}")
    return cert.exit_code


def cmd_flex(args) -> int:
    fw = _load(args)
    feas, witness, _ = flex_search(fw, _options(args, fw))
    if witness is not None and args.out is not None:
        args.out.write_text(witness.to_json() + "\n", encoding="utf-8")
    payload = {"feasibility": feas.transcript(), "witness": None if witness is None else witness.to_dict()}
    text = [feas.summary()]
    if witness is None:
        text.append("none")
    else:
        text.append(f"witness: epsilon={g(witness.epsilon)}; phi rank {witness.phi_rank}")
        text.extend("  q%d = (%s)" % (i + 1, ", ".join(g(v) for v in row)) for i, row in enumerate(witness.q))
    _emit(args, payload, "\n".join(text))
    return 0


def cmd_verify(args) -> int:
    cert = RigidityCertificate.from_json(args.certificate.read_text(encoding="utf-8"))
    fw = load_framework(args.framework) if args.framework is not None else None
    ok, bad = verify_certificate(cert, fw)
    payload = {"ok": ok, "verdict": cert.verdict.value, "path": cert.path.value, "discrepancies": bad}
    text = f"verified: {cert.verdict.value} via {cert.path.value}" if ok else "FAILED: " + "; ".join(bad)
    _emit(args, payload, text)
    return 0 if ok else 1


def _witness_from_file(path: Path):
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "q" in doc:
        return np.array(doc["q"], dtype=float)
    ev = doc.get("evidence", {})
    if "witness" in ev:
        return np.array(ev["witness"]["q"], dtype=float)
    w = ev.get("oracle", {}).get("witness")
    if w is not None:
        return np.array(w["q"], dtype=float)
    raise UsageError(f"{path} contains no witness configuration")


def cmd_render(args) -> int:
    fw = load_framework(args.framework)
    if fw.r != 2:
        raise RenderError("render supports planar frameworks only")
    q = _witness_from_file(args.witness) if args.witness is not None else None
    svg = render_svg(fw, q, RenderStyle(scale=args.scale))
    if args.out is not None:
        args.out.write_text(svg, encoding="utf-8")
    else:
        sys.stdout.write(svg)
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "certify": cmd_certify,
    "flex": cmd_flex,
    "verify": cmd_verify,
    "render": cmd_render,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (
        FrameworkError,
        StressError,
        GaleError,
        CertificationError,
        CertificateSchemaError,
        RenderError,
        UsageError,
        OSError,
        json.JSONDecodeError,
    ) as exc:
        loc = getattr(exc, "location", None)
        print(f"error: {exc}" + (f" (at {loc})" if loc and loc not in str(exc) else ""), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
