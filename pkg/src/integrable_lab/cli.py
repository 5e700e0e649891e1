"""Command-line entry point: configuration, orchestration, reports, figures.

Reports are JSON documents with a deterministic `results` section (byte-stable
for a fixed config and seed) and a `meta` section carrying wall times.  Exit
codes: 0 all checks passed, 1 at least one check failed, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import expr as ex
from . import lax, painleve, pde, tau
from .expr import Var
from .quadrature import NonConvergence, QuadConfig

DEFAULTS = {
    "seed": 42,
    "out": "reports",
    "jobs": 1,
    "extended": False,
    "precision": "double",
    "pole_radius": 0.01,
    "grid": {"x": [-10.0, 10.0, 101], "z": [-6.0, 6.0, 21], "t": [-2.0, 2.0, 5]},
    "quadrature": {"abs_tol": 1e-11, "rel_tol": 1e-11, "lower": -40.0, "detour": 1.0},
    "tolerances": {
        "identity": 1e-9,
        "residual_local": 1e-8,
        "residual_nonlocal": 1e-6,
        "miura_kdv": 1e-9,
        "miura_local": 1e-8,
        "miura_nonlocal": 1e-6,
        "reduction": 1e-10,
        "factorization": 1e-6,
        "lax_numeric": 1e-5,
        "painleve_compat": 1e-8,
        "kp_reduction": 1e-4,
    },
    "identity": {"max_n": 6, "trials": 100},
    "painleve": {"trials": 20, "max_j": 6},
    "lax": {"ckdv_t_perturbation": "0", "test_functions": 5, "points": 200},
}


class ConfigError(ValueError):
    pass


def _merge_checked(dst: dict, src: dict, path: str = "") -> None:
    for key, value in src.items():
        where = f"{path}.{key}" if path else key
        if key not in dst:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(dst[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"configuration key {where} must be a section")
            _merge_checked(dst[key], value, where)
        else:
            dst[key] = value


def _apply_set(config: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set needs key=value, got {assignment!r}")
    key, _, raw = assignment.partition("=")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown configuration key: {key}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown configuration key: {key}")
    node[parts[-1]] = value


def load_config(args) -> dict:
    config = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        if "seed" not in raw:
            raise ConfigError("config missing required field: seed")
        _merge_checked(config, raw)
    for assignment in args.set or []:
        _apply_set(config, assignment)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["out"] = args.out
    if args.jobs is not None:
        config["jobs"] = args.jobs
    elif os.environ.get("INTEGRABLE_LAB_JOBS"):
        config["jobs"] = int(os.environ["INTEGRABLE_LAB_JOBS"])
    if args.extended:
        config["extended"] = True
    if args.precision is not None:
        config["precision"] = args.precision
    return config


def _quad(config) -> QuadConfig:
    q = config["quadrature"]
    return QuadConfig(abs_tol=q["abs_tol"], rel_tol=q["rel_tol"],
                      lower=q["lower"], detour=q["detour"])


def _grid(config, two_d: bool) -> pde.Grid:
    g = config["grid"]
    return pde.Grid(x=tuple(g["x"]), z=tuple(g["z"]) if two_d else None,
                    t=tuple(g["t"]))


def make_pole_excluder(params: tau.SolitonParams, radius: float):
    cache: dict = {}

    def exclude(pt):
        key = tuple(sorted((k, v) for k, v in pt.items() if k != "x"))
        if key not in cache:
            cache[key] = tau.pole_locations(params, dict(key))
        return any(abs(pt["x"] - x0) < radius for x0 in cache[key])

    return exclude


# ----------------------------------------------------------------------
# check implementations (each returns a JSON-able dict with "passed")
# ----------------------------------------------------------------------

FIGURE_PRESETS = {
    2: {"params": dict(p=(1,), s=(2,)), "two_d": False},
    3: {"params": dict(p=(1, Fraction(1, 2)), s=(2, 5)), "two_d": False},
    4: {"params": dict(p=(1,), s=(2,), q=(3,)), "two_d": True},
    5: {"params": dict(p=(1, Fraction(1, 2)), s=(0, 0), q=(3, -3)), "two_d": True,
        "t_fixed": 0.0},
}


def checks_lax_symbolic(config) -> list[dict]:
    out = []
    perturbation = Fraction(str(config["lax"]["ckdv_t_perturbation"]))
    for name, builder in lax.LOCAL_PAIRS.items():
        pair = builder(perturbation) if name == "CKdV" and perturbation else builder()
        try:
            verdict = lax.verify_lax_symbolic(pair)
            passed = verdict.exact_zero
            data = verdict.to_dict()
        except lax.NotMultiplicationOperator as exc:
            passed = False
            data = {"error": str(exc)}
        out.append({"name": f"lax-symbolic-{name}", "passed": passed, **data})
    return out


def check_identity(config) -> dict:
    import random
    rng = random.Random(config["seed"])
    tol = config["tolerances"]["identity"]
    per_n = {}
    passed = True
    for n in range(1, config["identity"]["max_n"] + 1):
        p = []
        while len(p) < n:
            cand = Fraction(rng.randint(1, 8), rng.randint(1, 4))
            if cand not in p and all(cand + q != 0 for q in p):
                p.append(cand)
        s = [rng.randint(-3, 3) for _ in range(n)]
        params = tau.SolitonParams(p=tuple(p), s=tuple(s))
        ok, worst, _ = tau.check_integral_identity(
            params, trials=config["identity"]["trials"], tol=tol,
            seed=config["seed"] + n, precision=config["precision"])
        per_n[n] = {"ok": ok, "worst": worst}
        passed = passed and ok
    return {"name": "integral-identity", "passed": passed, "tol": tol,
            "per_n": per_n, "seed": config["seed"]}


def _residual_suite_specs():
    """(check name, equation id, params kwargs, field builder, tolerance key)"""
    half = Fraction(1, 2)
    return [
        ("residual-mKdV-1", "mKdV", dict(p=(1,), s=(2,)), "v", "residual_local"),
        ("residual-mKdV-2", "mKdV", dict(p=(1, half), s=(2, 5)), "v", "residual_local"),
        ("residual-mKdV-3", "mKdV", dict(p=(1, half, Fraction(3, 2)), s=(2, 5, -1)),
         "v", "residual_local"),
        ("residual-CKdV-fig2", "CKdV", dict(p=(1,), s=(2,)), "w", "residual_local"),
        ("residual-CKdV-fig3", "CKdV", dict(p=(1, half), s=(2, 5)), "w", "residual_local"),
        ("residual-W-CKdV-fig2", "W-CKdV", dict(p=(1,), s=(2,)), "winv", "residual_local"),
        ("residual-W-CKdV-2p1-fig4", "W-CKdV-2p1", dict(p=(1,), s=(2,), q=(3,)),
         "winv", "residual_local"),
        ("residual-mCBS-fig4", "mCBS", dict(p=(1,), s=(2,), q=(3,)), "v",
         "residual_nonlocal"),
        ("residual-CKdV-2p1-fig4", "CKdV-2p1", dict(p=(1,), s=(2,), q=(3,)), "w",
         "residual_nonlocal"),
        ("residual-CKdV-2p1-fig5", "CKdV-2p1", dict(p=(1, half), s=(0, 0), q=(3, -3)),
         "w", "residual_nonlocal"),
        ("residual-CBS-fig4", "CBS", dict(p=(1,), s=(2,), q=(3,)), "u",
         "residual_nonlocal"),
    ]


def _build_field(kind: str, params: tau.SolitonParams):
    if kind == "v":
        return tau.build_mkdv_solution(params).field
    if kind == "w":
        return tau.build_ckdv_solution(params).field
    if kind == "winv":
        return ex.pow_(tau.build_ckdv_solution(params).field, -1)
    if kind == "u":
        return pde.miura_forward(tau.build_mkdv_solution(params).field)
    raise ValueError(kind)


def check_c_independence(config) -> dict:
    """The unmodified equation's residual must not depend on the integration
    constant in the solution formula; sampled over real and complex c."""
    radius = config["pole_radius"]
    grid = pde.Grid(x=(-8.0, 8.0, 41), z=None, t=(-1.0, 1.0, 3))
    worst = 0.0
    for c in (0, 0.7, 0.3 + 0.4j):
        params = tau.SolitonParams(p=(1,), s=(2,), c=c)
        rep = pde.residual_local("CKdV", tau.build_ckdv_solution(params).field,
                                 grid, exclude=make_pole_excluder(params, radius),
                                 seed=config["seed"])
        worst = max(worst, rep.relative)
    tol = config["tolerances"]["residual_local"]
    return {"name": "residual-c-independence", "passed": worst <= tol,
            "tol": tol, "worst_relative": worst,
            "c_values_sampled": ["0", "0.7", "0.3+0.4j"],
            "conclusion": "residual is independent of the integration constant"}


def checks_residuals(config) -> list[dict]:
    radius = config["pole_radius"]

    def run_one(spec):
        name, eq_id, pkw, kind, tolkey = spec
        params = tau.SolitonParams(**pkw)
        field = _build_field(kind, params)
        eq = pde.EQUATIONS[eq_id]
        grid = _grid(config, eq.arity == 3)
        excl = make_pole_excluder(params, radius)
        tol = config["tolerances"][tolkey]
        try:
            if eq.local:
                rep = pde.residual_local(eq, field, grid, exclude=excl,
                                         seed=config["seed"])
            else:
                rep = pde.residual_nonlocal(eq, field, grid, _quad(config),
                                            exclude=excl, seed=config["seed"])
            passed = rep.relative <= tol
            data = rep.to_dict()
        except NonConvergence as exc:
            passed = False
            data = {"error": str(exc)}
        return {"name": name, "passed": passed, "tol": tol, **data}

    specs = _residual_suite_specs()
    jobs = max(1, int(config["jobs"]))
    if jobs == 1:
        return [run_one(spec) for spec in specs]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_one, specs))


def checks_miura(config) -> list[dict]:
    out = []
    radius = config["pole_radius"]
    tols = config["tolerances"]
    quad = _quad(config)
    seed = config["seed"]

    # 1+1 chain
    p1 = tau.SolitonParams(p=(1,), s=(2,))
    v1 = tau.build_mkdv_solution(p1).field
    w1 = tau.build_ckdv_solution(p1).field
    excl1 = make_pole_excluder(p1, radius)
    grid2 = _grid(config, False)
    rep = pde.residual_local("KdV", pde.miura_forward(v1), grid2, exclude=excl1,
                             seed=seed)
    out.append({"name": "miura-forward-KdV", "passed": rep.relative <= tols["miura_kdv"],
                "tol": tols["miura_kdv"], **rep.to_dict()})
    rep = pde.residual_local("mKdV", pde.miura_type(w1), grid2, exclude=excl1,
                             seed=seed)
    out.append({"name": "miura-type-mKdV", "passed": rep.relative <= tols["miura_local"],
                "tol": tols["miura_local"], **rep.to_dict()})

    # 2+1 chain
    p4 = tau.SolitonParams(p=(1,), s=(2,), q=(3,))
    v4 = tau.build_mkdv_solution(p4).field
    w4 = tau.build_ckdv_solution(p4).field
    excl4 = make_pole_excluder(p4, radius)
    grid3 = _grid(config, True)
    rep = pde.residual_nonlocal("CBS", pde.miura_forward(v4), grid3, quad,
                                exclude=excl4, seed=seed)
    out.append({"name": "miura-forward-CBS",
                "passed": rep.relative <= tols["miura_nonlocal"],
                "tol": tols["miura_nonlocal"], **rep.to_dict()})
    rep = pde.residual_nonlocal("mCBS", pde.miura_type(w4), grid3, quad,
                                exclude=excl4, seed=seed)
    out.append({"name": "miura-type-mCBS",
                "passed": rep.relative <= tols["miura_nonlocal"],
                "tol": tols["miura_nonlocal"], **rep.to_dict()})

    # dimensional reduction: transverse parameters equal to wavenumbers makes
    # the z = 0 section reproduce the 1+1 solution exactly
    import random
    rng = random.Random(seed)
    peq = tau.SolitonParams(p=(1,), s=(2,), q=(1,))
    weq = ex.compile_fn(tau.build_ckdv_solution(peq).field, ["t", "x", "z"])
    w11 = ex.compile_fn(w1, ["t", "x"])
    worst = 0.0
    for _ in range(100):
        x, t = rng.uniform(-8, 8), rng.uniform(-2, 2)
        a, b = weq(t, x, 0.0), w11(t, x)
        worst = max(worst, abs(a - b) / (1.0 + max(abs(a), abs(b))))
    out.append({"name": "reduction-2p1-to-1p1", "passed": worst <= tols["reduction"],
                "tol": tols["reduction"], "worst": worst, "seed": seed})
    return out


def check_factorization(config) -> dict:
    X, Z, T_ = Var("x"), Var("z"), Var("t")

    def bump(shift, zc, tc, width):
        arg = ex.mul(ex.Const(Fraction(-1, width)),
                     ex.pow_(ex.add(X, ex.mul(ex.Const(zc), Z),
                                    ex.mul(ex.Const(tc), T_), ex.Const(shift)), 2))
        return ex.exp_(arg)

    w_rand = ex.add(ex.Const(2), bump(Fraction(1, 2), Fraction(1, 3), Fraction(-1, 4), 4),
                    ex.mul(ex.Const(Fraction(1, 2)),
                           bump(Fraction(-1), Fraction(-2, 3), Fraction(1, 5), 6)))
    tol = config["tolerances"]["factorization"]
    rep = pde.factorization_check(w_rand, n_points=100, tol=tol,
                                  seed=config["seed"])
    return {"name": "factorization", "passed": rep.resolved_coefficient is not None,
            **rep.to_dict()}


def check_lax_numeric(config) -> dict:
    p4 = tau.SolitonParams(p=(1,), s=(2,), q=(3,))
    w4 = tau.build_ckdv_solution(p4).field
    tol = config["tolerances"]["lax_numeric"]
    try:
        rep = lax.verify_lax_numeric(
            lax.numeric_L_second_order(w4), lax.numeric_T_ckdv2p1(w4),
            testfns=lax.default_test_functions(config["lax"]["test_functions"]),
            n_points=config["lax"]["points"], cfg=_quad(config),
            exclude=make_pole_excluder(p4, config["pole_radius"]),
            seed=config["seed"], equation="CKdV-2p1")
        return {"name": "lax-numeric-CKdV-2p1", "passed": rep.relative <= tol,
                "tol": tol, **rep.to_dict()}
    except NonConvergence as exc:
        return {"name": "lax-numeric-CKdV-2p1", "passed": False, "tol": tol,
                "error": str(exc)}


def checks_painleve(config) -> list[dict]:
    out = []
    trials = config["painleve"]["trials"]
    max_j = config["painleve"]["max_j"]
    tol = config["tolerances"]["painleve_compat"]
    expectations = {
        "W-CKdV": {"alpha": -1, "roots": [-1, 1, 3]},
        "W-CKdV-2p1": {"alpha": -1, "roots": [-1, 1, 2, 3]},
        "KdV": {"alpha": -2, "roots": [-1, 4, 6]},
    }
    for eq_id, want in expectations.items():
        rep = painleve.run_painleve(eq_id, trials=trials, max_j=max_j,
                                    seed=config["seed"], tol=tol, strict=False)
        passed = (rep.lead.alpha == want["alpha"]
                  and rep.res_poly.roots == want["roots"]
                  and rep.compatibility.all_ok)
        name = "painleve-" + ("KdV-selftest" if eq_id == "KdV" else eq_id)
        out.append({"name": name, "passed": passed,
                    "expected_roots": want["roots"], **rep.to_dict()})
    # negative control: a dissipative perturbation must break compatibility
    eqp = pde.perturbed_kdv()
    repn = painleve.run_painleve(eqp, trials=min(trials, 5), max_j=max_j,
                                 seed=config["seed"], tol=tol, strict=False)
    out.append({"name": "painleve-negative-control",
                "passed": not repn.compatibility.all_ok, **repn.to_dict()})
    return out


def check_kp_reduction(config) -> dict:
    tol = config["tolerances"]["kp_reduction"]
    try:
        rep = pde.kp_reduction_check(n_points=50, tol=tol, seed=config["seed"])
        return {"name": "kp-reduction", "tol": tol,
                "passed": rep.kp_relative <= 1e-10 and rep.yext_relative <= tol,
                **rep.to_dict()}
    except (NonConvergence, ex.PoleError) as exc:
        return {"name": "kp-reduction", "passed": False, "error": str(exc)}


# ----------------------------------------------------------------------
# figures
# ----------------------------------------------------------------------

def _format_value(v: float) -> str:
    return f"{v:.11e}"


def write_figure(fig_id: int, config, out_dir: Path) -> list[Path]:
    preset = FIGURE_PRESETS[fig_id]
    params = tau.SolitonParams(**preset["params"])
    surface = tau.w_over_sigma(params)
    g = tau.build_tau_pair(params).g
    grid = _grid(config, preset["two_d"])
    radius = 1e-2
    paths = []
    names = ["t", "x"] if not preset["two_d"] else ["t", "x", "z"]
    fn = ex.compile_fn(surface, names)

    def row_values(frozen, xs):
        poles = tau.real_zeros_on_line(g, "x", frozen, xs[0], xs[-1])
        vals = []
        for x in xs:
            if any(abs(x - x0) < radius for x0 in poles):
                vals.append(None)
                continue
            try:
                v = fn(*[x if n == "x" else frozen.get(n, 0.0) for n in names])
            except ex.PoleError:
                vals.append(None)
                continue
            vals.append(v.real)
        return vals

    if not preset["two_d"]:
        path = out_dir / f"fig{fig_id}.csv"
        lines = ["x,t,value"]
        for t in grid.ts():
            vals = row_values({"t": t}, grid.xs())
            for x, v in zip(grid.xs(), vals):
                lines.append(f"{_format_value(x)},{_format_value(t)},"
                             + ("" if v is None else _format_value(v)))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        paths.append(path)
        return paths

    t_slices = [preset["t_fixed"]] if "t_fixed" in preset else grid.ts()
    for k, t in enumerate(t_slices):
        path = out_dir / (f"fig{fig_id}.csv" if "t_fixed" in preset
                          else f"fig{fig_id}_t{k}.csv")
        lines = ["x,z,value"]
        for z in grid.zs():
            vals = row_values({"z": z, "t": t}, grid.xs())
            for x, v in zip(grid.xs(), vals):
                lines.append(f"{_format_value(x)},{_format_value(z)},"
                             + ("" if v is None else _format_value(v)))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        paths.append(path)
    return paths


# ----------------------------------------------------------------------
# orchestration
# ----------------------------------------------------------------------

def _run_checks(check_groups, config) -> tuple[dict, bool]:
    results = []
    timings = {}
    for group in check_groups:
        t0 = time.monotonic()
        got = group(config)
        dt = (time.monotonic() - t0) * 1000.0
        if isinstance(got, dict):
            got = [got]
        for item in got:
            results.append(item)
        timings[group.__name__] = round(dt, 1)
    all_passed = all(item["passed"] for item in results)
    report = {
        "results": {
            "checks": results,
            "n_checks": len(results),
            "n_passed": sum(1 for item in results if item["passed"]),
            "all_passed": all_passed,
            "config": config,
            "tool_version": __version__,
        },
        "meta": {"timings_ms": timings,
                 "generated_by": f"integrable-lab {__version__}"},
    }
    return report, all_passed


def _write_report(report: dict, out_dir: Path, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8", newline="\n")
    return path


def _emit(report, path, quiet=False):
    checks = report["results"]["checks"]
    if not quiet:
        for item in checks:
            status = "PASS" if item["passed"] else "FAIL"
            print(f"[{status}] {item['name']}")
        print(f"{report['results']['n_passed']}/{report['results']['n_checks']} "
              f"checks passed -> {path}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="integrable-lab",
        description="verification toolkit for a family of integrable evolution "
                    "equations")
    parser.add_argument("--config", help="JSON config file (must contain 'seed')")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (dotted path)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="report/figure directory")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker cap (env INTEGRABLE_LAB_JOBS)")
    parser.add_argument("--extended", action="store_true",
                        help="enable the nested-quadrature extended checks")
    parser.add_argument("--precision", choices=["double", "extended"], default=None)
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("verify-all", help="run every verification")
    p_verify = sub.add_parser("verify", help="run one verification family")
    p_verify.add_argument("family", choices=["lax", "pde", "miura", "identity"])
    p_pain = sub.add_parser("painleve", help="singularity analysis report")
    p_pain.add_argument("equation", choices=["W-CKdV", "W-CKdV-2p1", "KdV-selftest"])
    p_fig = sub.add_parser("figure", help="export solution-surface CSV data")
    p_fig.add_argument("id", type=int)
    sub.add_parser("kp-reduction", help="extended-scope y-extension spot check")

    args = parser.parse_args(argv)
    try:
        config = load_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(config["out"])

    if args.command == "verify-all":
        groups = [checks_lax_symbolic, check_identity, checks_residuals,
                  check_c_independence, checks_miura, check_factorization,
                  check_lax_numeric, checks_painleve]
        if config["extended"]:
            groups.append(check_kp_reduction)
        report, ok = _run_checks(groups, config)
        path = _write_report(report, out_dir, "verify_all.json")
        _emit(report, path, args.quiet)
        return 0 if ok else 1

    if args.command == "verify":
        family_groups = {
            "lax": [checks_lax_symbolic],
            "pde": [checks_residuals, check_c_independence],
            "miura": [checks_miura],
            "identity": [check_identity],
        }
        report, ok = _run_checks(family_groups[args.family], config)
        path = _write_report(report, out_dir, f"verify_{args.family}.json")
        _emit(report, path, args.quiet)
        return 0 if ok else 1

    if args.command == "painleve":
        eq_id = "KdV" if args.equation == "KdV-selftest" else args.equation
        rep = painleve.run_painleve(
            eq_id, trials=config["painleve"]["trials"],
            max_j=config["painleve"]["max_j"], seed=config["seed"],
            tol=config["tolerances"]["painleve_compat"], strict=False)
        report = {"results": {"report": rep.to_dict(), "config": config,
                              "tool_version": __version__},
                  "meta": {"generated_by": f"integrable-lab {__version__}"}}
        path = _write_report(report, out_dir,
                             f"painleve_{args.equation.replace('-', '_')}.json")
        ok = rep.compatibility.all_ok
        if not args.quiet:
            print(f"{args.equation}: resonances {rep.res_poly.roots} "
                  f"{'PASS' if ok else 'FAIL'} -> {path}")
        return 0 if ok else 1

    if args.command == "figure":
        if args.id not in FIGURE_PRESETS:
            print(f"error: unknown figure id {args.id} (choose from 2, 3, 4, 5)",
                  file=sys.stderr)
            return 2
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = write_figure(args.id, config, out_dir)
        if not args.quiet:
            for p in paths:
                print(p)
        return 0

    if args.command == "kp-reduction":
        if not config["extended"]:
            print("error: kp-reduction is extended scope; pass --extended",
                  file=sys.stderr)
            return 2
        result = check_kp_reduction(config)
        report = {"results": {"checks": [result], "config": config,
                              "tool_version": __version__},
                  "meta": {"generated_by": f"integrable-lab {__version__}"}}
        path = _write_report(report, out_dir, "kp_reduction.json")
        if not args.quiet:
            print(f"[{'PASS' if result['passed'] else 'FAIL'}] kp-reduction -> {path}")
        return 0 if result["passed"] else 1

    return 2


if __name__ == "__main__":
    sys.exit(main())
