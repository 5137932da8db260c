"""Command line front end: every analysis as a subcommand with file inputs.

Reports are machine-readable and reproducible: the same configuration
and seed produce byte-identical output, each report carries the tool
version, a hash of the effective configuration, and the tolerances it
ran under.  Single-shot results are JSON, grids are CSV with a commented
header.  Exit codes: 0 for a definite result, 2 for unreadable input,
3 for an indeterminate verdict (fail closed in automation), 64 for an
unknown subcommand.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys

from . import __version__
from .pauli import PauliOperator, format_operator
from .generators import (
    KERNEL_TOL,
    kernel,
    parse_generator_file,
    format_generator_file,
)
from .rings import (
    INDETERMINATE_TOL,
    ZERO_TOL,
    CanonicalParams,
    canonical_form,
    canonical_residual,
    check_conservation,
    classify_ising,
    parse_density_file,
)
from .obstruction import (
    DEFINITE_TOL,
    ZERO_BAND,
    assemble_C_2site,
    assemble_C_3site,
    certify_definiteness,
    family_grid,
    rows_to_csv,
    scan_point,
    summarize_rows,
)
from .feasibility import (
    GAP_TOL,
    MAX_ITER,
    VERIFY_TOL,
    FeasibilityProblem,
    parse_problem_file,
    search,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INDETERMINATE = 3
EXIT_UNKNOWN_COMMAND = 64

SUBCOMMANDS = ("kernel", "check", "canon", "obstruction", "scan", "search")

SCHEMA_JSON = "lindring-report/1"
SCHEMA_CSV = "lindring-scan/1"


class ParseFailure(Exception):
    """Input that does not parse under the declared formats."""


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseFailure(f"cannot read {path}: {exc.strerror}") from exc


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _report(config: dict, result: dict) -> str:
    body = {
        "schema": SCHEMA_JSON,
        "tool": {"name": "lindring", "version": __version__},
        "config": config,
        "config_hash": _config_hash(config),
        "result": result,
    }
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------


def _cmd_kernel(args) -> int:
    try:
        gen = parse_generator_file(_read(args.gen))
    except ValueError as exc:
        raise ParseFailure(str(exc)) from exc
    tol = args.tol if args.tol is not None else KERNEL_TOL
    basis = kernel(gen, tol=tol)
    config = {"subcommand": "kernel", "gen": args.gen, "tol": tol}
    result = {
        "r": gen.r,
        "dimension": len(basis),
        "basis": [format_operator(op) for op in basis],
    }
    _emit(_report(config, result), args.out)
    return EXIT_OK


def _cmd_check(args) -> int:
    try:
        gen = parse_generator_file(_read(args.gen))
        a = parse_density_file(_read(args.density))
    except ValueError as exc:
        raise ParseFailure(str(exc)) from exc
    tol = args.tol if args.tol is not None else ZERO_TOL
    report = check_conservation(gen, a, mode=args.mode, n=args.n, zero_tol=tol)
    config = {
        "subcommand": "check", "gen": args.gen, "density": args.density,
        "mode": args.mode, "n": report.n, "zero_tol": tol,
        "indeterminate_tol": INDETERMINATE_TOL,
    }
    result = {
        "residual": report.residual,
        "verdict": report.verdict,
        "offender": list(report.offender) if report.offender else None,
    }
    _emit(_report(config, result), args.out)
    return EXIT_INDETERMINATE if report.verdict == "indeterminate" else EXIT_OK


def _cmd_canon(args) -> int:
    try:
        a = parse_density_file(_read(args.density))
    except ValueError as exc:
        raise ParseFailure(str(exc)) from exc
    params = canonical_form(a)
    ising, _ = classify_ising(a)
    config = {"subcommand": "canon", "density": args.density}
    result = {
        "mu": params.mu,
        "nu": params.nu,
        "h": list(params.h),
        "scale": params.scale,
        "identity_shift": params.identity_shift,
        "rotation_left": params.rotation_left.tolist(),
        "rotation_right": params.rotation_right.tolist(),
        "reconstruction_residual": canonical_residual(a, params),
        "ising_type": bool(ising),
    }
    _emit(_report(config, result), args.out)
    return EXIT_OK


def _cmd_obstruction(args) -> int:
    params = CanonicalParams.at(args.mu, args.nu, (args.hx, args.hy, args.hz))
    assemble = assemble_C_2site if args.r == 2 else assemble_C_3site
    mat = assemble(params)
    tol = args.tol if args.tol is not None else DEFINITE_TOL
    rep = certify_definiteness(mat.C, definite_tol=tol)
    config = {
        "subcommand": "obstruction", "r": args.r,
        "mu": args.mu, "nu": args.nu,
        "hx": args.hx, "hy": args.hy, "hz": args.hz,
        "zero_band": ZERO_BAND, "definite_tol": tol,
    }
    result = {
        "verdict": rep.verdict,
        "max_eigenvalue": rep.max_eigenvalue,
        "nullity": rep.nullity,
        "eigenvalues": rep.eigenvalues.tolist(),
        "gauge_residual": mat.gauge_residual,
        "basis": mat.basis,
    }
    if args.emit_matrix:
        result["matrix"] = mat.C.tolist()
    _emit(_report(config, result), args.out)
    return EXIT_OK


def _parse_grid_file(text: str) -> list[tuple]:
    grid = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 5:
            raise ParseFailure(f"grid line {lineno}: need 5 values, got {len(parts)}")
        try:
            grid.append(tuple(float(p) for p in parts))
        except ValueError as exc:
            raise ParseFailure(f"grid line {lineno}: {exc}") from exc
    if not grid:
        raise ParseFailure("grid file has no points")
    return grid


def _scan_worker(task):
    r_gen, point = task
    return scan_point(r_gen, point)


def _cmd_scan(args) -> int:
    if args.grid:
        grid = _parse_grid_file(_read(args.grid))
    elif args.family:
        try:
            grid = family_grid(args.family)
        except ValueError as exc:
            raise ParseFailure(str(exc)) from exc
    else:
        raise ParseFailure("scan needs --family or --grid")
    tasks = [(args.r, point) for point in grid]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_scan_worker, tasks, chunksize=4))
    else:
        rows = [_scan_worker(t) for t in tasks]
    summary = summarize_rows(args.r, rows)
    config = {
        "subcommand": "scan", "r": args.r,
        "family": args.family, "grid": args.grid,
        "zero_band": ZERO_BAND, "definite_tol": DEFINITE_TOL,
        "points": len(grid),
    }
    header = [
        f"# schema: {SCHEMA_CSV}",
        f"# tool: lindring {__version__}",
        f"# config_hash: {_config_hash(config)}",
        f"# config: {json.dumps(config, sort_keys=True, separators=(',', ':'))}",
        f"# summary: {json.dumps(summary, sort_keys=True, separators=(',', ':'))}",
    ]
    _emit("\n".join(header) + "\n" + rows_to_csv(rows), args.out)
    return EXIT_OK


def _cmd_search(args) -> int:
    text = _read(args.density)
    try:
        if "[problem]" in text:
            prob = parse_problem_file(text)
        else:
            if args.r is None:
                raise ParseFailure("search needs --r when the file has no [problem] section")
            prob = FeasibilityProblem(parse_density_file(text), r_gen=args.r,
                                      n=args.n, mode=args.mode)
    except ValueError as exc:
        raise ParseFailure(str(exc)) from exc
    tol = args.tol if args.tol is not None else GAP_TOL
    res = search(prob, tol=tol, seed=args.seed)
    config = {
        "subcommand": "search", "density": args.density,
        "r_gen": prob.r_gen, "n": prob.n, "mode": prob.mode,
        "gamma_trace": prob.gamma_trace,
        "tol": tol, "verify_tol": VERIFY_TOL, "max_iter": MAX_ITER,
        "seed": args.seed,
    }
    result = {
        "status": res.status,
        "iterations": res.iterations,
        "affine_distance": res.affine_distance,
        "residual": res.residual,
    }
    if res.generator is not None:
        result["generator"] = format_generator_file(res.generator)
    if res.certificate is not None:
        result["certificate"] = {
            "verdict": res.certificate.verdict,
            "max_eigenvalue": res.certificate.max_eigenvalue,
            "nullity": res.certificate.nullity,
        }
    _emit(_report(config, result), args.out)
    return EXIT_OK if res.status == "feasible" else EXIT_INDETERMINATE


# -- wiring ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lindring",
        description="conserved quantities of translationally invariant "
                    "Lindblad dynamics on spin-1/2 rings")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("kernel", help="steady-state basis of a generator")
    p.add_argument("--gen", required=True, help="generator file")
    p.add_argument("--tol", type=float, default=None, help="singular value cutoff")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(run=_cmd_kernel)

    p = sub.add_parser("check", help="conservation residual of a density")
    p.add_argument("--gen", required=True, help="generator file")
    p.add_argument("--density", required=True, help="density file")
    p.add_argument("--mode", choices=("local", "global"), default="global")
    p.add_argument("--n", type=int, default=None, help="ring length")
    p.add_argument("--tol", type=float, default=None, help="conserved below this")
    p.add_argument("--out", default=None)
    p.set_defaults(run=_cmd_check)

    p = sub.add_parser("canon", help="normal form of a two-site density")
    p.add_argument("--density", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(run=_cmd_canon)

    p = sub.add_parser("obstruction", help="build and certify the obstruction matrix")
    p.add_argument("--r", type=int, choices=(2, 3), required=True)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--hx", type=float, default=0.0)
    p.add_argument("--hy", type=float, default=0.0)
    p.add_argument("--hz", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=None, help="definiteness margin")
    p.add_argument("--emit-matrix", action="store_true", help="include the matrix entries")
    p.add_argument("--out", default=None)
    p.set_defaults(run=_cmd_obstruction)

    p = sub.add_parser("scan", help="definiteness verdicts over a parameter grid")
    p.add_argument("--r", type=int, choices=(2, 3), required=True)
    p.add_argument("--family", choices=("xyz", "ising-fields", "xxz", "xx-field"))
    p.add_argument("--grid", help="file with one 'mu nu hx hy hz' point per line")
    p.add_argument("--jobs", type=int, default=1, help="parallel grid evaluation")
    p.add_argument("--out", default=None, help="write the CSV here")
    p.set_defaults(run=_cmd_scan)

    p = sub.add_parser("search", help="search a conserving generator for a density")
    p.add_argument("--density", required=True,
                   help="density file, optionally with a [problem] section")
    p.add_argument("--r", type=int, choices=(1, 2, 3), default=None,
                   help="generator width when no [problem] section is given")
    p.add_argument("--mode", choices=("local", "global"), default="global")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--tol", type=float, default=None, help="projection gap target")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(run=_cmd_search)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # unknown subcommands get their own exit code, distinct from flag errors
    head = next((a for a in argv if not a.startswith("-")), None)
    if head is not None and head not in SUBCOMMANDS:
        print(f"lindring: unknown subcommand {head!r} "
              f"(choose from {', '.join(SUBCOMMANDS)})", file=sys.stderr)
        return EXIT_UNKNOWN_COMMAND
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.run(args)
    except ParseFailure as exc:
        print(f"lindring: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        # inputs parsed but violate a precondition of the analysis
        print(f"lindring: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE


if __name__ == "__main__":
    sys.exit(main())
