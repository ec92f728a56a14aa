"""Command-line front end.

One JSON document fully describes a run; flags only choose the subcommand,
the config path, the output directory and verbosity.  Outputs land in
<out>/run-<hash>/ where the hash digests the canonical config bytes, so a
rerun of the same configuration overwrites the same directory with byte-
identical files.

Exit codes: 0 success, 1 configuration or validation failure, 2 numerical
non-convergence, 3 a required check or certification failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics
from .barriers import QUANTITIES, BarrierParams, TildeParams, certify_sign
from .errors import ConfigError, SolverError
from .geometry import BoundaryProfile, DomainSpec, Perturbation, ProfileKind
from .modesolver import (ManufacturedSolution, ModeProblem, gradient,
                         manufactured_convergence, solve_2d, solve_mode,
                         write_field_csv)
from .numerics import Stretch, build_grid
from .spectral import Weight, WeightKind, first_nonzero_eigenvalue
from .sweep import SweepConfig, emit_report, run_sweep

__all__ = ["main", "load_config", "build_domain", "build_sweep_config"]

_PROFILE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["quadratic", "anisotropic", "flat"]},
        "kappa1": {"type": "number"},
        "kappa2": {"type": "number"},
        "mus": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "perturbation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["amplitude", "exponent"],
            "properties": {"amplitude": {"type": "number"},
                           "exponent": {"type": "number"}},
        },
    },
}

_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["domain"],
    "properties": {
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "R", "profile"],
            "properties": {
                "n": {"type": "integer", "minimum": 2},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "R": {"type": "number", "exclusiveMinimum": 0},
                "profile": _PROFILE_SCHEMA,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ns": {"type": "integer", "minimum": 8},
                "nt": {"type": "integer", "minimum": 4},
                "stretch": {"enum": ["uniform", "neck_refined"]},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tol": {"type": "number", "exclusiveMinimum": 0}},
        },
        "mode": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 0},
                "dirichlet": {"type": "number"},
                "g_left": {"type": "number"},
                "g_right": {"type": "number"},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilons": {"type": "array", "minItems": 3,
                             "items": {"type": "number", "exclusiveMinimum": 0}},
                "region_fraction": {"type": "number", "exclusiveMinimum": 0,
                                    "maximum": 1},
                "exponent_tol": {"type": "number", "exclusiveMinimum": 0},
                "outputs": {"type": "array",
                            "items": {"enum": ["csv", "json", "svg"]}},
            },
        },
        "barriers": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "xi": {"type": "number", "exclusiveMinimum": 0},
                "corner_delta": {"type": "number", "minimum": 0},
                "beta1": {"type": "number", "exclusiveMinimum": 0},
                "case2": {"type": "boolean"},
                "interior_samples": {"type": "array", "minItems": 2,
                                     "maxItems": 2,
                                     "items": {"type": "integer", "minimum": 8}},
                "boundary_samples": {"type": "integer", "minimum": 16},
                "quantities": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["name"],
                        "properties": {
                            "name": {"enum": list(QUANTITIES)},
                            "required": {"type": "boolean"},
                        },
                    },
                },
            },
        },
        "eigen": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 3},
                "resolution": {"type": "integer", "minimum": 32},
                "weight": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["constant", "from_mus", "tabulated"]},
                        "value": {"type": "number"},
                        "mus": {"type": "array", "items": {"type": "number"}},
                        "samples": {"type": "array",
                                    "items": {"type": "number"}},
                    },
                },
            },
        },
        "mms": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cases": {"type": "array",
                          "items": {"enum": ["flat_linear", "flat_forced",
                                             "curved_forced"]}},
                "sizes": {"type": "array",
                          "items": {"type": "array", "minItems": 2,
                                    "maxItems": 2,
                                    "items": {"type": "integer",
                                              "minimum": 8}}},
            },
        },
    },
}


def load_config(path) -> dict:
    """Parse and schema-validate the JSON config; unknown keys reject."""
    import jsonschema

    with open(path) as fh:
        config = json.load(fh)  # JSONDecodeError carries line/column
    try:
        jsonschema.validate(config, _SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    return config


def build_profile(payload: dict) -> BoundaryProfile:
    kind = payload["kind"]
    pert = None
    if payload.get("perturbation"):
        pert = Perturbation(amplitude=payload["perturbation"]["amplitude"],
                            exponent=payload["perturbation"]["exponent"])
    if kind == "flat":
        return BoundaryProfile.flat()
    if kind == "anisotropic":
        if "mus" not in payload:
            raise ConfigError("anisotropic profile needs 'mus'")
        return BoundaryProfile.anisotropic(payload["mus"])
    if "kappa1" not in payload or "kappa2" not in payload:
        raise ConfigError("quadratic profile needs 'kappa1' and 'kappa2'")
    return BoundaryProfile.quadratic(payload["kappa1"], payload["kappa2"],
                                     perturbation=pert)


def build_domain(config: dict) -> DomainSpec:
    dom = config["domain"]
    if "epsilon" not in dom:
        raise ConfigError("this subcommand needs domain.epsilon")
    return DomainSpec(n=dom["n"], epsilon=dom["epsilon"],
                      R=dom["R"], profile=build_profile(dom["profile"]))


def build_sweep_config(config: dict) -> SweepConfig:
    dom = config["domain"]
    grid = config.get("grid", {})
    sweep = config.get("sweep", {})
    mode = config.get("mode", {})
    kwargs = {}
    if "epsilons" in sweep:
        kwargs["epsilons"] = tuple(sweep["epsilons"])
    if "region_fraction" in sweep:
        kwargs["region_fraction"] = sweep["region_fraction"]
    if "exponent_tol" in sweep:
        kwargs["exponent_tol"] = sweep["exponent_tol"]
    if "outputs" in sweep:
        kwargs["outputs"] = frozenset(sweep["outputs"])
    return SweepConfig(
        n=dom["n"],
        profile=build_profile(dom["profile"]),
        R=dom["R"],
        k=mode.get("k", 1),
        ns=grid.get("ns", 256),
        nt=grid.get("nt", 32),
        stretch=Stretch(grid.get("stretch", "neck_refined")),
        dirichlet=mode.get("dirichlet", 1.0),
        tol=config.get("solver", {}).get("tol", 1e-10),
        **kwargs,
    )


def _run_dir(config: dict, out: str) -> Path:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canon.encode()).hexdigest()[:12]
    path = Path(out) / f"run-{digest}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo(quiet: bool, *parts):
    if not quiet:
        print(*parts)


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(config: dict, out: Path, quiet: bool) -> int:
    domain = build_domain(config)
    grid_cfg = config.get("grid", {})
    grid = build_grid(domain, grid_cfg.get("ns", 256), grid_cfg.get("nt", 32),
                      Stretch(grid_cfg.get("stretch", "neck_refined")))
    tol = config.get("solver", {}).get("tol", 1e-10)
    mode = config.get("mode", {})
    if domain.n == 2:
        field = solve_2d(domain, grid, mode.get("g_left", -1.0),
                         mode.get("g_right", 1.0), tol=tol)
    else:
        problem = ModeProblem(domain=domain, grid=grid, k=mode.get("k", 1),
                              dirichlet_outer=mode.get("dirichlet", 1.0))
        field = solve_mode(problem, tol=tol)
    grad = gradient(field)
    mask = diagnostics.neck_region_mask(grid)
    summary = {
        "max_u": float(np.abs(field.values[mask, :]).max()),
        "max_grad": float(grad.mode_mag[mask, :].max()),
        "dn_max": float(np.abs(grad.d_n[mask, :]).max()),
    }
    write_field_csv(field, grad, out / "field.csv")
    _write_json(out / "summary.json", summary)
    _echo(quiet, f"solved {domain.n}d neck, eps={domain.epsilon:g}: "
          f"max|u|={summary['max_u']:.6g} max|grad|={summary['max_grad']:.6g} "
          f"max|d_n|={summary['dn_max']:.6g}")
    _echo(quiet, f"wrote {out / 'field.csv'} and {out / 'summary.json'}")
    return 0


_DEFAULT_QUANTITIES_3D = (
    {"name": "L_phi_le_0", "required": True},
    {"name": "dnu_phi_ge_0_upper", "required": True},
    {"name": "dnu_phi_ge_0_lower", "required": True},
    {"name": "L_tilde_le_0", "required": False},
)


def cmd_barriers(config: dict, out: Path, quiet: bool) -> int:
    domain = build_domain(config)
    cfg = config.get("barriers", {})
    interior = tuple(cfg.get("interior_samples", (512, 64)))
    boundary = cfg.get("boundary_samples", 2048)
    quantities = cfg.get("quantities")
    if quantities is None:
        quantities = [{"name": "dnu_2d", "required": True}] if domain.n == 2 \
            else list(_DEFAULT_QUANTITIES_3D)

    params = tilde = None
    if domain.n >= 3:
        mode_k = config.get("mode", {}).get("k", 1)
        params = BarrierParams.corner(domain.n, max(mode_k, 1),
                                      xi=cfg.get("xi", 0.1),
                                      corner_delta=cfg.get("corner_delta", 0.0))
        if cfg.get("case2", False):
            params = params.with_case2(domain)
        tilde = TildeParams.split(domain.n, max(mode_k, 1),
                                  beta1=cfg.get("beta1", 0.1))

    failed_required = False
    reports = []
    for q in quantities:
        rep = certify_sign(q["name"], domain, params=params, tilde=tilde,
                           interior_shape=interior, boundary_points=boundary)
        required = q.get("required", True)
        reports.append({"report": rep.to_dict(), "required": required})
        ok = rep.n_violations == 0
        failed_required |= required and not ok
        _echo(quiet, f"{q['name']:22s} {'required' if required else 'info':8s} "
              f"{rep.n_violations}/{rep.n_points} violations, "
              f"worst margin {rep.worst_margin:.6g}")
    _write_json(out / "barriers.json", reports)
    _echo(quiet, f"wrote {out / 'barriers.json'}")
    return 3 if failed_required else 0


def cmd_eigen(config: dict, out: Path, quiet: bool) -> int:
    cfg = config.get("eigen", {})
    wspec = cfg.get("weight", {"kind": "constant", "value": 1.0})
    kind = WeightKind(wspec["kind"])
    if kind is WeightKind.FROM_MUS:
        weight = Weight(kind=kind, mus=tuple(wspec.get("mus", ())))
    elif kind is WeightKind.TABULATED:
        weight = Weight(kind=kind, samples=tuple(wspec.get("samples", ())))
    else:
        weight = Weight(kind=kind, value=wspec.get("value", 1.0))
    result = first_nonzero_eigenvalue(weight, N=cfg.get("resolution", 1024),
                                      n=cfg.get("n", 3))
    _write_json(out / "eigen.json", result.to_dict())
    flag = "" if result.tilde_alpha < 1.0 else "  [exponent >= 1]"
    _echo(quiet, f"lambda1={result.lambda1:.12g} "
          f"tilde_alpha={result.tilde_alpha:.12g}{flag}")
    _echo(quiet, f"wrote {out / 'eigen.json'}")
    return 0


def cmd_sweep(config: dict, out: Path, quiet: bool) -> int:
    sweep_config = build_sweep_config(config)
    report = run_sweep(sweep_config)
    emit_report(report, out)
    _echo(quiet, f"fitted exponent  {report.fit.slope:+.4f}")
    _echo(quiet, f"theory exponent  {report.theory_exponent:+.4f}")
    dev = abs(report.fit.slope - report.theory_exponent)
    tol = report.verdicts[0].threshold
    _echo(quiet, f"deviation        {dev:.4f} ({'within' if dev <= tol else 'OUTSIDE'} "
          f"tolerance {tol})")
    for v in report.verdicts:
        _echo(quiet, f"  [{'PASS' if v.passed else 'FAIL'}] {v.name}: "
              f"measured {v.measured:.4g} vs threshold {v.threshold:.4g}")
    _echo(quiet, f"wrote report under {out}")
    return 0 if report.passed() else 3


def cmd_check(config: dict, out: Path, quiet: bool) -> int:
    sweep_config = build_sweep_config(config)
    report = run_sweep(sweep_config)
    outcomes = list(report.verdicts)
    if sweep_config.n == 2 and sweep_config.profile.kind is ProfileKind.QUADRATIC \
            and sweep_config.profile.perturbation is None:
        # the identity is differenced one-sidedly, so probe the widest gap,
        # which the grid resolves best
        domain = sweep_config.domain_for(sweep_config.epsilons[0])
        grid = build_grid(domain, sweep_config.ns, sweep_config.nt,
                          sweep_config.stretch)
        field = solve_2d(domain, grid, -sweep_config.dirichlet,
                         sweep_config.dirichlet, tol=sweep_config.tol)
        outcomes.append(diagnostics.check_boundary_identity(field))
    _write_json(out / "checks.json", [o.to_dict() for o in outcomes])
    width = max(len(o.name) for o in outcomes)
    for o in outcomes:
        _echo(quiet, f"{o.name:{width}s}  {'PASS' if o.passed else 'FAIL'}  "
              f"measured={o.measured:.4g}  threshold={o.threshold:.4g}")
    _echo(quiet, f"wrote {out / 'checks.json'}")
    return 0 if all(o.passed for o in outcomes) else 3


_MMS_CASES = {
    "flat_linear": (BoundaryProfile.flat(), ManufacturedSolution.linear_in_s()),
    "flat_forced": (BoundaryProfile.flat(), ManufacturedSolution.quadratic_cos()),
    "curved_forced": (BoundaryProfile.quadratic(0.5, -0.5),
                      ManufacturedSolution.quadratic_cos()),
}


def cmd_mms(config: dict, out: Path, quiet: bool) -> int:
    cfg = config.get("mms", {})
    cases = cfg.get("cases", list(_MMS_CASES))
    sizes = [tuple(sz) for sz in
             cfg.get("sizes", [(128, 32), (256, 64), (512, 128)])]
    dom_cfg = config["domain"]
    eps = dom_cfg.get("epsilon", 1e-2)
    results = {}
    ok = True
    for case in cases:
        profile, exact = _MMS_CASES[case]
        domain = DomainSpec(n=dom_cfg["n"], epsilon=eps, R=dom_cfg["R"],
                            profile=profile)
        grids = [build_grid(domain, ns, nt, Stretch.UNIFORM)
                 for ns, nt in sizes]
        errors = manufactured_convergence(domain, exact, grids)
        orders = [float(np.log2(errors[i] / errors[i + 1]))
                  for i in range(len(errors) - 1)]
        if case == "flat_linear":
            case_ok = max(errors) <= 1e-8  # exact discrete solution
            verdict = f"max error {max(errors):.3e} (exact case)"
        else:
            case_ok = all(1.7 <= o <= 2.3 for o in orders)
            verdict = "orders " + ", ".join(f"{o:.2f}" for o in orders)
        ok &= case_ok
        results[case] = {"errors": errors, "orders": orders, "passed": case_ok}
        _echo(quiet, f"{case:14s} {'PASS' if case_ok else 'FAIL'}  {verdict}")
    _write_json(out / "mms.json", results)
    _echo(quiet, f"wrote {out / 'mms.json'}")
    return 0 if ok else 3


_COMMANDS = {
    "solve": cmd_solve,
    "barriers": cmd_barriers,
    "eigen": cmd_eigen,
    "sweep": cmd_sweep,
    "check": cmd_check,
    "mms": cmd_mms,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="necklab",
        description="Numerical laboratory for gradient blow-up in narrow "
                    "insulating necks.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default="runs", help="output directory")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        out = _run_dir(config, args.out)
        return _COMMANDS[args.command](config, out, args.quiet)
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON at line {exc.lineno}, column {exc.colno}: "
              f"{exc.msg}", file=sys.stderr)
        return 1
    except SolverError as exc:
        residual = "" if exc.residual is None else f" (residual {exc.residual:.3e})"
        print(f"error: solver failed{residual}: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:  # console-script shim
    raise SystemExit(main())
