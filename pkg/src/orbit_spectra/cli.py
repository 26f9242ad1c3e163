"""Command-line front end: ``orbit-spectra <command> ...``.

Exit codes: 0 success, 1 inconsistent verdicts found by ``propcheck``,
2 malformed input, 3 numerical failure (error JSON on stderr).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from . import __version__
from .aap import aap_decompose
from .config import RunConfig
from .errors import NumericalError
from .io import (complex_to_json, dumps, orbit_from_csv, orbit_to_csv, system_from_json,
                 vector_to_json)
from .linalg import eigen_decompose, power_bound_estimate
from .orbit import OrbitSequence, simulate
from .shiftres import RayGrid, abel_residue_sequence, fit_grid, operator_abel_residue
from .singularity import classify_resolvent
from .sweep import GENERATORS, case_from_json, propcheck, run_case
from .verdict import THEOREMS, run_verdict

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class InputError(Exception):
    """Malformed user input; carries per-field diagnostics."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


# -- schemas ------------------------------------------------------------------

_REGISTRY = None


def _registry() -> Registry:
    global _REGISTRY
    if _REGISTRY is None:
        pairs = []
        for entry in resources.files("orbit_spectra.schemas").iterdir():
            if entry.name.endswith(".schema.json"):
                pairs.append((entry.name, Resource.from_contents(json.loads(entry.read_text()))))
        _REGISTRY = Registry().with_resources(pairs)
    return _REGISTRY


def validator(name: str) -> Draft202012Validator:
    """Validator for ``<name>.schema.json`` with cross-file references resolved."""
    schema = _registry().contents(f"{name}.schema.json")
    return Draft202012Validator(schema, registry=_registry())


def _field(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate(payload, name: str) -> None:
    errors = sorted(validator(name).iter_errors(payload), key=lambda e: list(e.absolute_path))
    if errors:
        diags = [f"{_field(e.absolute_path)}: {e.message}" for e in errors]
        raise InputError(f"input does not match {name} schema", diags)


# -- parsing helpers ----------------------------------------------------------

def parse_complex(text: str) -> complex:
    """Parse ``i``, ``-i``, ``0.5+2i``, ``1-1j`` and plain reals."""
    s = text.strip().replace(" ", "").replace("I", "i").replace("J", "j")
    s = s.replace("i", "j")
    s = re.sub(r"(^|[+-])j", r"\g<1>1j", s)
    try:
        return complex(s)
    except ValueError:
        raise InputError(f"cannot parse complex number {text!r}") from None


def parse_complex_list(text: str) -> list[complex]:
    if text.strip() == "":
        return []
    return [parse_complex(t) for t in text.split(",")]


def _load_json(path: str):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON", [f"line {exc.lineno}, column {exc.colno}: {exc.msg}"])


def load_system(path: str):
    obj = _load_json(path)
    validate(obj, "system")
    try:
        return system_from_json(obj)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_orbit_csv(path: str) -> OrbitSequence:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    try:
        return orbit_from_csv(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _is_csv(path: str) -> bool:
    return path.lower().endswith(".csv")


def resolve_config(args) -> RunConfig:
    base = RunConfig()
    changes = {
        "horizon": args.horizon, "hyp_tol": args.tol_hyp, "concl_tol": args.tol_concl,
        "res_tol": args.tol_res, "j_min": args.jmin, "j_max": args.jmax,
        "nodes": args.nodes, "window": args.window, "seed": args.seed, "out": args.out,
    }
    try:
        return base.with_(**changes)
    except ValueError as exc:
        raise InputError(f"invalid configuration: {exc}") from None


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report(payload: dict, schema: str, cfg: RunConfig) -> None:
    payload["config"] = cfg.to_dict()
    validate(payload, schema)
    _emit(dumps(payload), cfg)


def _require_json_format(args) -> None:
    if args.format not in (None, "json"):
        raise InputError(f"--format {args.format} is only supported by simulate")


# -- commands -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    x = simulate(load_system(args.system), cfg.horizon)
    if args.format in (None, "csv"):
        _emit(orbit_to_csv(x), cfg)
        return EXIT_OK
    _report({"horizon": x.horizon, "bounded_flag": x.bounded_flag, "truncated_at": x.truncated_at,
             "sup_norm": x.sup_norm, "samples": [vector_to_json(r) for r in x.samples]},
            "orbit", cfg)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    _require_json_format(args)
    cfg = resolve_config(args)
    sys_ = load_system(args.system)
    spec = eigen_decompose(sys_.B)
    pb = power_bound_estimate(sys_.B, cfg.power_n_max, spec)
    c_est = pb.c_est if np.isfinite(pb.c_est) else "inf"
    _report({"spectral": spec.to_dict(),
             "power_bound": {"c_est": c_est, "power_bounded": pb.power_bounded}}, "spectrum", cfg)
    return EXIT_OK


def cmd_residue(args) -> int:
    _require_json_format(args)
    cfg = resolve_config(args)
    xi = parse_complex(args.xi)
    if abs(abs(xi) - 1.0) > 1e-12:
        raise InputError(f"--xi {args.xi} is not on the unit circle")
    if args.operator:
        if _is_csv(args.input):
            raise InputError("--operator needs a system file")
        sys_ = load_system(args.input)
        v = np.array(parse_complex_list(args.vector)) if args.vector else sys_.x1
        tol = cfg.op_res_tol * (1.0 + float(np.linalg.norm(v)))
        est = operator_abel_residue(sys_.B, xi, v, RayGrid(xi, cfg.j_min, cfg.j_max), tol)
        mode = "operator"
    else:
        x = load_orbit_csv(args.input) if _is_csv(args.input) \
            else simulate(load_system(args.input), cfg.horizon)
        est = abel_residue_sequence(x, xi, fit_grid(x, xi, cfg.j_min, cfg.j_max), cfg.res_tol)
        mode = "sequence"
    mag = "inf" if est.divergent else float(est.extrapolated_limit)
    _report({"mode": mode, "estimate": est.to_dict(), "residue_magnitude": mag}, "residue", cfg)
    return EXIT_OK


def cmd_classify(args) -> int:
    _require_json_format(args)
    cfg = resolve_config(args)
    sys_ = load_system(args.system)
    v = np.array(parse_complex_list(args.vector)) if args.vector else sys_.x1
    if v.shape != (sys_.dim,):
        raise InputError(f"--vector has length {v.shape[0]}, system dimension is {sys_.dim}")
    point = parse_complex(args.point)
    cls, lc = classify_resolvent(sys_.B, v, point, cfg.quad_tol, cfg.nodes)
    laurent = {"radius": lc.radius, "nodes": lc.nodes, "cross_radius_error": lc.cross_radius_error,
               "scale": lc.scale,
               "coefficients": {str(n): vector_to_json(lc[n]) for n in range(lc.n_min, lc.n_max + 1)}}
    _report({"point": complex_to_json(point), "vector": vector_to_json(v),
             "classification": cls.to_dict(), "laurent": laurent}, "classify", cfg)
    return EXIT_OK


def cmd_aap(args) -> int:
    _require_json_format(args)
    cfg = resolve_config(args)
    spectral = None
    if _is_csv(args.input):
        x = load_orbit_csv(args.input)
    else:
        sys_ = load_system(args.input)
        x = simulate(sys_, cfg.horizon)
        spectral = eigen_decompose(sys_.B)
    if args.freqs == "auto":
        if spectral is None:
            raise InputError("--freqs auto needs a system file (frequencies come from its spectrum)")
        freqs = "auto"
    else:
        freqs = parse_complex_list(args.freqs)
    tol = cfg.concl_tol if args.tol is None else args.tol
    dec = aap_decompose(x, freqs, tol, spectral=spectral, burn_in=args.burn_in)
    payload = dec.to_dict()
    payload["freqs"] = [complex_to_json(f) for f in
                        ([e.value for e in spectral.peripheral] if freqs == "auto" else freqs)]
    _report(payload, "aap", cfg)
    return EXIT_OK


def cmd_verdict(args) -> int:
    _require_json_format(args)
    if args.replay:
        obj = _load_json(args.replay)
        validate(obj, "case")
        theorem_id, case, cfg = case_from_json(obj)
        v = run_case(theorem_id, case, cfg)
        validate(v.to_dict(), "verdict")
        _emit(dumps(v.to_dict()), cfg)
        return EXIT_OK
    if not args.theorem or not args.input:
        raise InputError("verdict needs --theorem and an input file (or --replay CASE)")
    cfg = resolve_config(args)
    candidates = parse_complex_list(args.candidates) if args.candidates is not None else None
    freqs = parse_complex_list(args.freqs) if args.freqs else None
    if _is_csv(args.input):
        if args.theorem not in ("TAUBERIAN", "TAUBERIAN_AAP"):
            raise InputError(f"{args.theorem} needs a system file")
        if candidates is None:
            raise InputError("a sequence input needs --candidates")
        v = run_verdict(args.theorem, cfg, sequence=load_orbit_csv(args.input),
                        candidates=candidates, freqs=freqs)
    else:
        v = run_verdict(args.theorem, cfg, system=load_system(args.input),
                        candidates=candidates, freqs=freqs)
    payload = v.to_dict()
    validate(payload, "verdict")
    _emit(dumps(payload), cfg)
    return EXIT_OK


def cmd_propcheck(args) -> int:
    _require_json_format(args)
    if args.count < 1:
        raise InputError("--count must be at least 1")
    cfg = resolve_config(args)
    theorems = list(GENERATORS) if args.theorem == "all" else [args.theorem]
    reports = [propcheck(t, args.count, cfg, dump_dir=args.dump, dump_all=args.dump_all)
               for t in theorems]
    total = sum(r["inconsistent"] for r in reports)
    _report({"reports": reports, "inconsistent": total}, "propcheck", cfg)
    return EXIT_INCONSISTENT if total else EXIT_OK


# -- parser -------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--horizon", "-N", type=int, default=None, help="samples to simulate (default 2000)")
    g.add_argument("--tol-hyp", type=float, default=None, help="hypothesis tolerance (default 1e-8)")
    g.add_argument("--tol-concl", type=float, default=None, help="conclusion tolerance (default 1e-3)")
    g.add_argument("--tol-res", type=float, default=None, help="sequence residue tolerance (default 1e-2)")
    g.add_argument("--seed", type=int, default=None, help="sweep seed (default 0)")
    g.add_argument("--jmin", type=int, default=None, help="first ray index (default 2)")
    g.add_argument("--jmax", type=int, default=None, help="last ray index (default 14)")
    g.add_argument("--nodes", type=int, default=None, help="quadrature nodes (default 256)")
    g.add_argument("--window", type=float, default=None, help="tail window fraction (default 0.5)")
    g.add_argument("--out", default=None, metavar="PATH", help="write output here instead of stdout")
    g.add_argument("--format", choices=["json", "csv"], default=None,
                   help="output format (csv only for simulate, its default)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbit-spectra",
        description="Spectral stability checks for x(n+1) = B x(n) + y(n).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    p = sub.add_parser("simulate", parents=[common], help="simulate an orbit")
    p.add_argument("system", help="system JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues, projections, power bound")
    p.add_argument("system", help="system JSON")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("residue", parents=[common], help="directional Abel residue at --xi")
    p.add_argument("input", help="system JSON or orbit CSV")
    p.add_argument("--xi", required=True, help="unimodular point, e.g. 1, -1, i, 0.6+0.8i")
    p.add_argument("--operator", action="store_true", help="residue of R(lam, B) v instead of the orbit")
    p.add_argument("--vector", default=None, help="comma-separated v for --operator (default x1)")
    p.set_defaults(func=cmd_residue)

    p = sub.add_parser("classify", parents=[common], help="classify the singularity of R(lam, B) v")
    p.add_argument("system", help="system JSON")
    p.add_argument("--point", required=True, help="singular point to classify")
    p.add_argument("--vector", default=None, help="comma-separated v (default x1)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("aap", parents=[common], help="almost periodic part and remainder")
    p.add_argument("input", help="system JSON or orbit CSV")
    p.add_argument("--freqs", default="auto", help="'auto' (peripheral spectrum) or comma list")
    p.add_argument("--tol", type=float, default=None, help="c0 tolerance for the remainder")
    p.add_argument("--burn-in", type=int, default=0, help="skip this many samples when fitting")
    p.set_defaults(func=cmd_aap)

    p = sub.add_parser("verdict", parents=[common], help="check one theorem on one input")
    p.add_argument("input", nargs="?", help="system JSON or (Tauberian theorems) orbit CSV")
    p.add_argument("--theorem", choices=THEOREMS)
    p.add_argument("--candidates", default=None, help="comma list of candidate points")
    p.add_argument("--freqs", default=None, help="AP frequencies for TAUBERIAN_AAP")
    p.add_argument("--replay", default=None, metavar="CASE", help="re-run a dumped sweep case")
    p.set_defaults(func=cmd_verdict)

    p = sub.add_parser("propcheck", parents=[common], help="randomized soundness sweep")
    p.add_argument("--theorem", default="all", choices=list(THEOREMS) + ["all"])
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--dump", default=None, metavar="DIR", help="write inconsistent cases here")
    p.add_argument("--dump-all", action="store_true", help="dump every case, not only failures")
    p.set_defaults(func=cmd_propcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        err = {"error": "InputError", "message": str(exc), "diagnostics": exc.diagnostics}
        sys.stderr.write(dumps(err))
        return EXIT_INPUT
    except NumericalError as exc:
        sys.stderr.write(dumps(exc.to_dict()))
        return EXIT_NUMERICAL
    except ValueError as exc:
        sys.stderr.write(dumps({"error": "InputError", "message": str(exc), "diagnostics": []}))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
