"""Command-line front end.

Exit codes: 0 affirmative, 1 certified negative (with certificate),
2 invalid input, 3 internal guard (oracle size, search failure, oracle diff).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import GuardError, NotPseudoeffective, ParseError, SurfaceError
from .exact import EpsRational, Q, parse_complex, qstr
from .lattice import (
    SurfaceLattice,
    blowup_general_point,
    classify,
    in_positive_cone,
    load_surface,
    suggest_ample,
)
from .pde import (
    StabilityData,
    certify,
    dhym_problem,
    flow_singular_locus,
    j_problem,
    nef_threshold,
    optimal_destabilizers,
    z_problem,
)
from .stability import DEFAULT_HEIGHT, construct_jstable_not_uniform, ratio_threshold, slope_semistability
from .walls import comparison_report, export, scan, dhym_slice_spec
from .zariski import decompose, decompose_oracle, destabilizer_set, neg_limit

EXIT_OK, EXIT_NEGATIVE, EXIT_INVALID, EXIT_GUARD = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _emit(doc: dict, stream=None):
    stream = stream or sys.stdout
    json.dump(doc, stream, indent=2, sort_keys=True, ensure_ascii=False)
    stream.write("\n")


def _eps(x) -> dict:
    x = EpsRational.lift(x)
    return {"value": qstr(x.value), "slope": qstr(x.slope)}


def _surface(args) -> SurfaceLattice:
    L = load_surface(args.surface)
    for _ in range(getattr(args, "blowup", 0) or 0):
        base = L.ample
        L = blowup_general_point(L)
        L = L.with_ample(suggest_ample(L, base))
    return L


def _cls(L, text, flag):
    if text is None:
        raise ParseError(f"missing --{flag}")
    return L.divisor(text)


# --- subcommands ---------------------------------------------------------------


def cmd_surface(args) -> int:
    L = _surface(args)
    _emit(L.to_document())
    return EXIT_OK


def cmd_zariski(args) -> int:
    L = _surface(args)
    tau = _cls(L, args.cls, "class")
    try:
        dec = decompose(L, tau)
    except NotPseudoeffective as exc:
        doc = {
            "schema": "zariski/1",
            "input": tau.to_strings(),
            "pseudoeffective": False,
            "reason": str(exc),
            "failing_support": L.labels(exc.support),
        }
        if args.oracle:
            try:
                decompose_oracle(L, tau)
                doc["oracle"] = {"agrees": False}
                _emit(doc)
                return EXIT_GUARD
            except NotPseudoeffective:
                doc["oracle"] = {"agrees": True}
        _emit(doc)
        return EXIT_NEGATIVE
    doc = dec.to_document(L)
    doc["pseudoeffective"] = True
    code = EXIT_OK
    if args.oracle:
        agrees = decompose_oracle(L, tau) == dec
        doc["oracle"] = {"agrees": agrees}
        code = EXIT_OK if agrees else EXIT_GUARD
    if args.epsilon_mode:
        try:
            doc["neg_limit"] = L.labels(neg_limit(L, tau, mode=args.epsilon_mode))
        except (NotPseudoeffective, SurfaceError) as exc:
            doc["neg_limit"] = {"error": str(exc)}
    _emit(doc)
    return code


def cmd_classify(args) -> int:
    L = _surface(args)
    tau = _cls(L, args.cls, "class")
    report = classify(L, tau)
    _emit(report.to_document(L))
    return EXIT_OK if report.kahler else EXIT_NEGATIVE


def _z_data(L, args) -> StabilityData:
    if args.rho is None:
        raise ParseError("missing --rho")
    rho = [parse_complex(part) for part in args.rho.split(";")]
    if len(rho) != 3:
        raise ParseError("--rho needs three components 're,im;re,im;re,im'")
    u1 = L.divisor(args.u1) if args.u1 else L.divisor([0] * L.rank)
    return StabilityData(_cls(L, args.beta, "beta"), tuple(rho), u1, Q(args.u2 or "0"))


def _problem(L, args, kind):
    if kind == "j":
        return j_problem(L, _cls(L, args.theta, "theta"), _cls(L, args.omega, "omega"))
    if kind == "dhym":
        return dhym_problem(L, _cls(L, args.beta, "beta"), _cls(L, args.alpha, "alpha"))
    if kind == "z":
        return z_problem(L, _z_data(L, args), _cls(L, args.c1, "c1"))
    raise ParseError(f"unknown problem kind {kind!r}")


def cmd_solve(args) -> int:
    L = _surface(args)
    prob = _problem(L, args, args.kind)
    cert = certify(L, prob)
    doc = cert.to_document(L)
    if args.kind == "j":
        doc["c"] = qstr(prob.c)
    elif args.kind == "dhym":
        doc["cot_phase"] = qstr(prob.cot_phase)
        doc["supercritical"] = prob.supercritical
    else:
        doc.update(
            charge=[qstr(prob.charge.re), qstr(prob.charge.im)],
            cot_phi=qstr(prob.cot_phi),
            ck=[qstr(c) for c in prob.ck],
            V=qstr(prob.V),
            sign_s=prob.sign_s,
            valid=prob.valid,
        )
    _emit(doc)
    return EXIT_OK if cert.solvable else EXIT_NEGATIVE


def _tau_from_args(L, args):
    if args.cls is not None:
        return L.divisor(args.cls)
    return j_problem(L, _cls(L, args.theta, "theta"), _cls(L, args.omega, "omega")).tau


def cmd_destabilizers(args) -> int:
    L = _surface(args)
    tau = _tau_from_args(L, args)
    doc = {"schema": "destabilizers/1", "tau": tau.to_strings()}
    if in_positive_cone(L, tau):
        doc["destabilizers"] = L.labels(destabilizer_set(L, tau))
    doc["neg_limit"] = L.labels(neg_limit(L, tau, mode=args.epsilon_mode or "infinitesimal"))
    _emit(doc)
    return EXIT_OK


def cmd_optimal(args) -> int:
    L = _surface(args)
    prob = _problem(L, args, args.kind)
    opt = optimal_destabilizers(L, prob)
    doc = {
        "schema": "optimal/1",
        "kind": prob.kind,
        "delta": None if opt.delta is None else qstr(opt.delta),
        "curves": L.labels(opt.curves),
        "values": {L.curve_labels[i]: qstr(v) for i, v in opt.values},
        "hypotheses_met": opt.hypotheses_met,
        "cross_check": opt.cross_check,
        "note": opt.note,
    }
    theta = prob.theta if args.kind == "j" else prob.beta
    omega = prob.omega if args.kind == "j" else prob.alpha
    if theta != omega:
        nt = nef_threshold(L, theta, omega)
        doc["nef_threshold"] = {
            "exists": nt.exists,
            "binding": nt.binding,
            "u_star": None if nt.u_star is None else qstr(nt.u_star),
            "a": None if nt.a is None else nt.a.to_strings(),
            "t": None if nt.t is None else qstr(nt.t),
            "zero_curves": L.labels(nt.zero_curves),
        }
    _emit(doc)
    return EXIT_OK


def cmd_testconfig(args) -> int:
    L = _surface(args)
    if args.construct:
        res = construct_jstable_not_uniform(
            L, curve=None if args.curve is None else L.curve_index(args.curve), height=args.height
        )
        _emit(
            {
                "schema": "jstable/1",
                "curve": L.curve_labels[res.curve],
                "theta": res.theta.to_strings(),
                "omega_prime": res.omega_prime.to_strings(),
                "omega_half": res.omega_half.to_strings(),
                "c": qstr(res.c),
                "tau": res.tau.to_strings(),
                "delta_nm": qstr(res.delta_nm),
                "checks": res.verify(L),
            }
        )
        return EXIT_OK
    theta, omega = _cls(L, args.theta, "theta"), _cls(L, args.omega, "omega")
    bars = None
    if args.kappa_bar is not None:
        bars = {i: Q(args.kappa_bar) for i in range(len(L.negative_curves))}
    verdict = slope_semistability(L, theta, omega, bars)
    rt = ratio_threshold(L, theta, omega, bars)
    doc = {
        "schema": "testconfig/1",
        "verdict": verdict.verdict,
        "witness": None
        if verdict.witness is None
        else {"curve": L.curve_labels[verdict.witness[0]], "kappa": qstr(verdict.witness[1])},
        "per_curve": [
            {"curve": L.curve_labels[i], "A1": qstr(a), "B1": qstr(b), "kappa_bar": qstr(k), "sign": s}
            for i, a, b, k, s in verdict.per_curve
        ],
        "delta_alg": None if rt.delta_alg is None else qstr(rt.delta_alg),
        "realized_by_slope": rt.realized_by_slope,
        "grid_ok": rt.grid_ok,
        "flag": rt.flag,
    }
    _emit(doc)
    return EXIT_NEGATIVE if verdict.verdict == "unstable" else EXIT_OK


def _parse_region(text: str):
    try:
        a, b = text.split(",")
        a0, a1 = a.split(":")
        b0, b1 = b.split(":")
    except ValueError:
        raise ParseError(f"region must look like 'a0:a1,b0:b1', got {text!r}") from None
    return ((Q(a0), Q(a1)), (Q(b0), Q(b1)))


def _parse_grid(text: str):
    try:
        na, nb = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise ParseError(f"grid must look like '128x128', got {text!r}") from None
    return na, nb


# "section5" is accepted as a legacy name for the same slice
SLICE_NAMES = {"dhym-slice", "section5"}


def cmd_walls(args) -> int:
    L = _surface(args)
    if args.slice not in SLICE_NAMES:
        raise ParseError(f"unknown slice {args.slice!r}; choose from {sorted(SLICE_NAMES)}")
    labels = [b for b in args.bundles.split(",") if b]
    spec = dhym_slice_spec(
        L,
        labels,
        _parse_region(args.region),
        _parse_grid(args.grid),
        beta=None if args.beta is None else L.divisor(args.beta),
    )
    cmap = scan(spec, jobs=args.jobs)
    written = []
    if args.out:
        out = Path(args.out)
        fmt = args.format or out.suffix.lstrip(".") or "json"
        export(cmap, fmt, out)
        written.append(str(out))
        if fmt != "json":
            js = out.with_suffix(".json")
            export(cmap, "json", js)
            written.append(str(js))
    report = comparison_report(spec, cmap)
    _emit(
        {
            "schema": "walls/1",
            "status_vectors": sorted("/".join(v) for v in cmap.distinct_status_vectors()),
            "chambers": len(cmap.chamber_status),
            "chamber_constancy": cmap.chamber_constancy(),
            "walls": {f"{b}.{c}": len(p) for (b, c), p in sorted(cmap.walls.items())},
            "comparison": report,
            "written": written,
        }
    )
    return EXIT_OK


def cmd_flow_locus(args) -> int:
    L = _surface(args)
    prob = _problem(L, args, args.kind)
    locus = flow_singular_locus(L, prob)
    _emit(
        {
            "schema": "flowlocus/1",
            "kind": prob.kind,
            "support": [{"curve": L.curve_labels[i], "coefficient": _eps(c)} for i, c in locus],
        }
    )
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="surfacepde", description="Exact curve tests for J, dHYM and Z-critical equations on surfaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--surface", required=True, help="builtin name or path to a JSON surface document")
        sp.add_argument("--blowup", type=int, default=0, help="blow up this many general points first")

    def classes(sp, *names):
        for n in names:
            dest = "cls" if n == "class" else n
            sp.add_argument(f"--{n}", dest=dest, help="csv rationals or an expression like 3H-E1-E2")

    sp = sub.add_parser("surface", help="validate and print a surface")
    common(sp)
    sp.set_defaults(func=cmd_surface)

    sp = sub.add_parser("zariski", help="Zariski decomposition")
    common(sp)
    classes(sp, "class")
    sp.add_argument("--oracle", action="store_true", help="cross-check against subset enumeration")
    sp.add_argument("--epsilon-mode", choices=("infinitesimal", "rational"))
    sp.set_defaults(func=cmd_zariski)

    sp = sub.add_parser("classify", help="positivity report")
    common(sp)
    classes(sp, "class")
    sp.set_defaults(func=cmd_classify)

    def problem_flags(sp):
        classes(sp, "theta", "omega", "beta", "alpha", "c1")
        sp.add_argument("--rho", help="'re,im;re,im;re,im'")
        sp.add_argument("--u1")
        sp.add_argument("--u2")

    sp = sub.add_parser("solve", help="solvability certificate")
    sp.add_argument("kind", choices=("j", "dhym", "z"))
    common(sp)
    problem_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("destabilizers", help="destabilizer and Neg sets")
    common(sp)
    classes(sp, "class", "theta", "omega")
    sp.add_argument("--epsilon-mode", choices=("infinitesimal", "rational"))
    sp.set_defaults(func=cmd_destabilizers)

    sp = sub.add_parser("optimal", help="threshold and optimal destabilizers")
    sp.add_argument("kind", nargs="?", default="j", choices=("j", "dhym"))
    common(sp)
    problem_flags(sp)
    sp.set_defaults(func=cmd_optimal)

    sp = sub.add_parser("testconfig", help="slope test configurations")
    common(sp)
    classes(sp, "theta", "omega")
    sp.add_argument("--kappa-bar")
    sp.add_argument("--construct", action="store_true", help="build a J-stable, not uniformly stable pair")
    sp.add_argument("--curve", help="curve label for --construct")
    sp.add_argument("--height", type=int, default=DEFAULT_HEIGHT, help="search height for --construct")
    sp.set_defaults(func=cmd_testconfig)

    sp = sub.add_parser("walls", help="wall-and-chamber scan")
    common(sp)
    sp.add_argument("--slice", default="dhym-slice", help="family to scan (the blown-up plane dHYM slice)")
    sp.add_argument("--bundles", default="E1,T")
    sp.add_argument("--region", default="-3.2:0.14,0.05:2")
    sp.add_argument("--grid", default="128x128")
    sp.add_argument("--beta")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json", "svg"))
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_walls)

    sp = sub.add_parser("flow-locus", help="flow singular locus N(tau - eps beta)")
    sp.add_argument("kind", nargs="?", default="j", choices=("j", "dhym"))
    common(sp)
    problem_flags(sp)
    sp.set_defaults(func=cmd_flow_locus)
    return p


_VALUE_FLAGS = {
    "--surface", "--blowup", "--class", "--theta", "--omega", "--beta", "--alpha", "--c1",
    "--rho", "--u1", "--u2", "--epsilon-mode", "--kappa-bar", "--curve", "--height", "--slice",
    "--bundles", "--region", "--grid", "--out", "--format", "--jobs",
}


def _bind_values(argv: Sequence[str]) -> list:
    """Glue ``--flag value`` into ``--flag=value`` so values may start with '-'."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parser.parse_args(_bind_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except GuardError as exc:
        _emit({"schema": "error/1", "kind": type(exc).__name__, "message": str(exc)}, sys.stderr)
        return EXIT_GUARD
    except NotPseudoeffective as exc:
        _emit({"schema": "error/1", "kind": "NotPseudoeffective", "message": str(exc)}, sys.stderr)
        return EXIT_NEGATIVE
    except (SurfaceError, ValueError, OSError, ZeroDivisionError, IndexError) as exc:
        _emit({"schema": "error/1", "kind": type(exc).__name__, "message": str(exc)}, sys.stderr)
        return EXIT_INVALID


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
