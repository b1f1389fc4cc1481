"""Command-line interface: generate measures, extend them, dilate them, estimate p-variations.

Every command writes a deterministic JSON report (sorted keys) to ``--out`` or
stdout.  Exit codes: 0 when every check passes, 1 when a check fails, 2 on
usage, parse or contract errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
import warnings
from typing import Any

import numpy as np

from .algebra import Algebra
from .cpmaps import (
    KrausMap,
    cb_norm_cp,
    random_cp_map,
    stinespring,
    two_variation_bound_check,
)
from .dilation import (
    build_elementary_space,
    induced_contraction,
    induced_dilation_norm,
    jordan_check,
    map_T,
    elementary_norm,
    verify_dilation,
)
from .errors import ContractError, StructuralError, UnderdeterminedError
from .measure import (
    OperatorMap,
    QuantumMeasure,
    check_additivity,
    extension_norm_bracket,
    gleason_extend,
    m2_bloch_cubic_measure,
    random_operator_map,
    tabulate,
)
from .projection import Projection, as_projection, projection_onto, random_projection
from .pvariation import (
    ORACLE_MAX_ATOMS,
    compression_check,
    pv_contraction_check,
    pv_dilation_norm,
    pvar_estimate,
    pvar_oracle_abelian,
)

DEFAULTS: dict[str, Any] = {"seed": 0, "budget": 16, "tol": 1e-8, "p": 2.0, "algebra": "3", "trials": 20}
EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
ABELIAN_TABLE_MAX = 12

REFS = {
    "additivity": "finite additivity of a quantum measure",
    "extension": "Gleason extension lemma: unique bounded linear extension",
    "bracket": "Gleason extension lemma: norm bracket ||mu|| <= ||T|| <= 4||mu||",
    "counterexample": "introduction: scalar measures on 2x2 matrices that fail to extend",
    "dilation": "elementary dilation U(P) = S V(P) T",
    "E_norm": "elementary dilation norm bounds on S, T, V(P)",
    "D_norm": "induced quotient dilation norm and its contraction",
    "pV_norm": "p-variation dilation norm bounds",
    "jordan": "Jordan homomorphism dilation",
    "pvar": "p-variation over orthogonally represented trees",
    "oracle": "abelian p-variation equals partition variation",
    "cb": "completely bounded maps have bounded 2-variation",
    "compression": "compression bound |SVT|_p <= ||S|| |V|_p ||T||",
}


class UsageError(Exception):
    pass


# -- JSON helpers -------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def load_measure(obj: dict) -> tuple[QuantumMeasure, KrausMap | None]:
    """Measure from its JSON form, plus the Kraus data when the file carries it."""
    try:
        u = QuantumMeasure.from_json(obj)
        kraus = KrausMap.from_json(obj["kraus"]) if "kraus" in obj else None
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed measure file: {exc}") from exc
    return u, kraus


def _settings(args) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        extra = _read_json(args.config)
        if not isinstance(extra, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update(extra)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        cfg["seed"] = int(cfg["seed"])
        cfg["budget"] = int(cfg["budget"])
        cfg["trials"] = int(cfg["trials"])
        cfg["tol"] = float(cfg["tol"])
        cfg["p"] = float(cfg["p"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad setting: {exc}") from exc
    if cfg["budget"] < 1 or cfg["trials"] < 1:
        raise UsageError("budgets and trial counts must be at least 1")
    return cfg


def _finish(report: dict, checks: dict[str, bool], refs: list[str], cfg: dict) -> dict:
    report["checks"] = {k: bool(v) for k, v in checks.items()}
    report["passed"] = bool(all(checks.values()))
    report["paper_refs"] = sorted(set(REFS[r] for r in refs))
    report["seed"] = cfg["seed"]
    report["settings"] = {k: cfg[k] for k in sorted(DEFAULTS)}
    return report


def _linear(u: QuantumMeasure, cfg: dict) -> tuple[OperatorMap, dict]:
    """The linear map behind ``u``: itself, or the Gleason extension of a table."""
    if not u.is_tabulated:
        return u.restriction_of, {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ext, residual = gleason_extend(u, cfg["tol"])
    if residual > cfg["tol"]:
        raise ContractError(f"measure has no linear extension (residual {residual:.3g})")
    return ext, {"extension_residual": residual}


# -- gen ---------------------------------------------------------------------------

def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--values must be comma-separated numbers: {exc}") from exc


def _abelian_measure(values: list[float]) -> QuantumMeasure:
    n = len(values)
    if not 1 <= n <= ABELIAN_TABLE_MAX:
        raise UsageError(f"abelian measures take 1..{ABELIAN_TABLE_MAX} values")
    alg = Algebra.abelian(n)
    pairs = []
    for mask in range(2 ** n):
        sel = [(mask >> i) & 1 for i in range(n)]
        proj = alg.element([np.array([[s]]) for s in sel])
        pairs.append((proj, np.array([[sum(v for v, s in zip(values, sel) if s)]])))
    return QuantumMeasure(alg, 1, pairs=pairs)


def cmd_gen(args, cfg) -> tuple[dict, int]:
    kind = args.kind
    seed = cfg["seed"]
    if kind == "linear":
        alg = _algebra(cfg)
        return random_operator_map(alg, args.d, seed).to_json(), EXIT_PASS
    if kind == "identity":
        alg = _algebra(cfg)
        if alg.matrix_dim != args.d:
            raise UsageError("the identity map needs --d equal to the matrix size of the algebra")
        return OperatorMap.from_function(alg, args.d, lambda e: e.dense()).to_json(), EXIT_PASS
    if kind == "cp":
        n = args.n
        d = args.d if args.d_given else n
        psi = random_cp_map(n, d, args.m, seed)
        out = psi.as_operator_map().to_json()
        out["kraus"] = psi.to_json()
        return out, EXIT_PASS
    if kind == "counterexample_m2":
        return m2_bloch_cubic_measure(args.count, seed).to_json(), EXIT_PASS
    if kind == "abelian":
        if args.values is None:
            raise UsageError("--values is required for kind=abelian")
        return _abelian_measure(_parse_values(args.values)).to_json(), EXIT_PASS
    raise UsageError(f"unknown kind {kind!r}")


def _algebra(cfg) -> Algebra:
    try:
        return Algebra.parse(str(cfg["algebra"]))
    except (ValueError, StructuralError) as exc:
        raise UsageError(f"bad --algebra {cfg['algebra']!r}: {exc}") from exc


# -- extend ---------------------------------------------------------------------------

def cmd_extend(args, cfg) -> tuple[dict, int]:
    u, _ = load_measure(_read_json(args.measure))
    seed, tol = cfg["seed"], cfg["tol"]
    report: dict[str, Any] = {"command": "extend", "mode": "counterexample" if args.expect_counterexample else "extend"}
    table = u
    if not u.is_tabulated:
        alg = u.algebra
        count = max(50, 2 * alg.total_dim)
        rng = np.random.default_rng(seed)
        table = tabulate(u.restriction_of, [alg.identity()] + [random_projection(alg, rng) for _ in range(count)])
    additivity = check_additivity(table, cfg["trials"] * 50, seed)
    report["additivity"] = additivity.to_dict()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            ext, residual = gleason_extend(table, tol)
            report["rank_deficient"] = None
        except UnderdeterminedError as exc:
            ext, residual = None, float("inf")
            report["rank_deficient"] = {"rank": exc.rank, "required": exc.required}
    report["warnings"] = sorted({str(w.message) for w in caught})
    report["residual"] = residual
    extendable = ext is not None and residual <= tol
    report["extendable"] = extendable
    refs = ["additivity", "extension"]
    if args.expect_counterexample:
        confirmed = additivity.max_violation <= 1e-12 and residual > 0.05
        checks = {"additive": additivity.max_violation <= 1e-12, "counterexample_confirmed": confirmed}
        refs.append("counterexample")
    else:
        checks = {"additive": additivity.max_violation <= 1e-9, "extendable": extendable}
        if extendable:
            mu, ext_norm, ok = extension_norm_bracket(table, ext, cfg["budget"], seed, tol=tol)
            report["bracket"] = {"measure_norm": mu, "extension_norm": ext_norm, "ok": ok}
            report["extension"] = ext.to_json()
            if not u.is_tabulated:
                report["round_trip_error"] = float(np.max(np.abs(ext.values - u.restriction_of.values)))
                checks["round_trip"] = report["round_trip_error"] <= 1e-8
            checks["bracket"] = ok
            refs.append("bracket")
    return _finish(report, checks, refs, cfg), EXIT_PASS if all(checks.values()) else EXIT_FAIL


# -- dilate ----------------------------------------------------------------------------

def _sample_vectors(d: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng([seed, 7])
    out = [np.eye(d)[0].astype(complex)]
    for _ in range(count - 1):
        out.append(rng.standard_normal(d) + 1j * rng.standard_normal(d))
    return out


def cmd_dilate(args, cfg) -> tuple[dict, int]:
    u, kraus = load_measure(_read_json(args.measure))
    if args.norm == "D" and kraus is None:
        raise UsageError("the D norm needs a completely positive measure with Kraus data (gen --kind cp)")
    seed, budget, p = cfg["seed"], cfg["budget"], cfg["p"]
    if args.norm == "pV" and p < 1:
        raise UsageError("--p must be at least 1")
    ubar, extra = _linear(u, cfg)
    space = build_elementary_space(ubar, max(budget, 8), seed)
    ver = verify_dilation(space, u, cfg["trials"], seed, budget=max(4, budget // 2), norm_trials=min(cfg["trials"], 10))
    report: dict[str, Any] = {"command": "dilate", "norm": args.norm, "space": space.manifest(),
                              "verification": ver.to_dict(), **extra}
    checks = {
        "identity_residual": ver.identity_residual <= 1e-10,
        "idempotency": ver.idempotency_residual <= 1e-10,
        "additivity": ver.additivity_residual <= 1e-10,
        "E_bounds": ver.bounds_ok,
    }
    refs = ["dilation", "E_norm"]
    xs = _sample_vectors(space.d, 3, seed)
    samples = []
    alg = space.algebra
    if args.norm == "E":
        for i, x in enumerate(xs):
            val = elementary_norm(space, map_T(space, x), budget, seed + i)
            bound = 4 * ver.measure_norm * float(np.linalg.norm(x))
            samples.append({"x_norm": float(np.linalg.norm(x)), "E_norm": val, "bound": bound})
        checks["E_generator_bound"] = all(s["E_norm"] <= s["bound"] + 1e-6 for s in samples)
    elif args.norm == "D":
        concrete = stinespring(kraus).concrete(alg)
        report["concrete_residual"] = concrete.consistency_residual(ubar)
        rng = np.random.default_rng([seed, 11])
        phis = [map_T(space, x) for x in xs] + [space.random_element(rng) for _ in range(2)]
        for i, phi in enumerate(phis):
            val = induced_dilation_norm(space, concrete, phi, budget, seed + i, witnesses=[alg.identity()])
            w = float(np.linalg.norm(induced_contraction(space, concrete, phi)))
            samples.append({"D_norm": val, "W_norm": w})
        checks["W_contraction"] = all(s["W_norm"] <= s["D_norm"] + 1e-6 for s in samples)
        refs.append("D_norm")
    else:
        upv = pvar_estimate(ubar, alg.identity(), p, 2 * budget + 1, seed)
        report["measure_pvar"] = upv.value
        for i, x in enumerate(xs):
            val = pv_dilation_norm(space, map_T(space, x), p, budget, seed + i)
            samples.append({"x_norm": float(np.linalg.norm(x)), "pV_norm": val,
                            "bound": 4 * upv.value * float(np.linalg.norm(x))})
        checks["pV_generator_bound"] = all(s["pV_norm"] <= s["bound"] + 1e-6 for s in samples)
        rng = np.random.default_rng([seed, 13])
        contraction = [pv_contraction_check(space, space.random_element(rng), random_projection(alg, rng), p,
                                            budget, seed + i) for i in range(2)]
        report["V_contraction"] = contraction
        checks["pV_V_contraction"] = all(c["holds"] for c in contraction)
        refs.append("pV_norm")
    report["samples"] = samples
    return _finish(report, checks, refs, cfg), EXIT_PASS if all(checks.values()) else EXIT_FAIL


# -- pvar ---------------------------------------------------------------------------------

def _root(spec: str, alg: Algebra, seed: int) -> Projection:
    spec = spec.strip()
    if spec in ("I", "identity"):
        return as_projection(alg.identity())
    if spec == "random":
        return random_projection(alg, np.random.default_rng([seed, 3]))
    for prefix in ("blocks:", "atoms:"):
        if spec.startswith(prefix):
            try:
                idx = {int(v) for v in spec[len(prefix):].split(",") if v.strip()}
            except ValueError as exc:
                raise UsageError(f"bad root {spec!r}") from exc
            if any(i < 0 or i >= len(alg.blocks) for i in idx):
                raise UsageError(f"root {spec!r} names a block outside the algebra")
            return projection_onto(alg, [np.eye(n) if k in idx else None for k, n in enumerate(alg.blocks)])
    if spec.startswith("@"):
        try:
            return Projection.from_json(alg, _read_json(spec[1:]))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad projection file {spec[1:]}: {exc}") from exc
    raise UsageError(f"root must be I, random, blocks:i,j, atoms:i,j or @file.json, got {spec!r}")


def cmd_pvar(args, cfg) -> tuple[dict, int]:
    u, kraus = load_measure(_read_json(args.measure))
    seed, budget, p = cfg["seed"], cfg["budget"], cfg["p"]
    if p < 1:
        raise UsageError("--p must be at least 1")
    ubar, extra = _linear(u, cfg)
    alg = ubar.algebra
    root = _root(args.root, alg, seed)
    report: dict[str, Any] = {"command": "pvar", "p": p, "root_rank": root.rank, **extra}
    refs = ["pvar"]
    checks: dict[str, bool] = {}
    if alg.is_abelian and len(alg.blocks) <= ORACLE_MAX_ATOMS:
        res = pvar_oracle_abelian(ubar, root, p, seed=seed)
        report.update({"method": "oracle", "value": res.value, "exact": res.exact, "partition": res.partition,
                       "best_x": res.to_dict()["x"]})
        refs.append("oracle")
        checks["finite"] = bool(np.isfinite(res.value))
    else:
        est = pvar_estimate(ubar, root, p, budget, seed)
        report.update({"method": "tree_search", **est.to_dict()})
        checks["finite"] = bool(np.isfinite(est.value))
    if kraus is not None and p == 2.0:
        cb = cb_norm_cp(kraus)
        report["cb_norm"] = cb
        checks["cb_bound"] = report["value"] <= cb + 1e-6
        refs.append("cb")
    return _finish(report, checks, refs, cfg), EXIT_PASS if all(checks.values()) else EXIT_FAIL


# -- verify --------------------------------------------------------------------------------

def cmd_verify(args, cfg) -> tuple[dict, int]:
    u, kraus = load_measure(_read_json(args.measure))
    seed, budget, tol = cfg["seed"], cfg["budget"], cfg["tol"]
    report: dict[str, Any] = {"command": "verify"}
    checks: dict[str, bool] = {}
    refs = ["additivity", "extension", "bracket", "dilation", "E_norm", "jordan", "pvar"]

    additivity = check_additivity(u, cfg["trials"] * 5, seed)
    report["additivity"] = additivity.to_dict()
    checks["additivity"] = additivity.max_violation <= 1e-9

    alg = u.algebra
    if u.is_tabulated:
        table = u
    else:
        rng = np.random.default_rng(seed)
        table = tabulate(u.restriction_of, [alg.identity()] + [random_projection(alg, rng)
                                                                for _ in range(max(50, 2 * alg.total_dim))])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            ext, residual = gleason_extend(table, tol)
        except UnderdeterminedError as exc:
            ext, residual = None, float("inf")
            report["rank_deficient"] = {"rank": exc.rank, "required": exc.required}
    report["warnings"] = sorted({str(w.message) for w in caught})
    report["extension_residual"] = residual
    checks["extendable"] = ext is not None and residual <= tol
    if not checks["extendable"]:
        return _finish(report, checks, refs[:2], cfg), EXIT_FAIL
    if not u.is_tabulated:
        err = float(np.max(np.abs(ext.values - u.restriction_of.values)))
        report["round_trip_error"] = err
        checks["round_trip"] = err <= 1e-8
    mu, ext_norm, ok = extension_norm_bracket(table, ext, budget, seed, tol=tol)
    report["bracket"] = {"measure_norm": mu, "extension_norm": ext_norm, "ok": ok}
    checks["bracket"] = ok

    ubar = ext if u.is_tabulated else u.restriction_of
    space = build_elementary_space(ubar, max(budget, 8), seed)
    ver = verify_dilation(space, u, cfg["trials"], seed, budget=max(4, budget // 2), norm_trials=min(cfg["trials"], 5))
    report["space"] = space.manifest()
    report["dilation"] = ver.to_dict()
    checks["dilation_identity"] = ver.identity_residual <= 1e-10
    checks["V_idempotent"] = ver.idempotency_residual <= 1e-10
    checks["V_additive"] = ver.additivity_residual <= 1e-10
    checks["E_bounds"] = ver.bounds_ok

    jc = jordan_check(space, trials=min(cfg["trials"], 20), seed=seed)
    report["jordan"] = jc
    checks["anticommutator"] = jc["anticommutator"] <= 1e-8
    checks["jordan_residual"] = jc["jordan_residual"] <= 1e-7

    est = pvar_estimate(ubar, alg.identity(), 2.0, budget, seed)
    report["pvar2"] = {"value": est.value, "depth": est.best_tree.depth}
    checks["pvar_finite"] = bool(np.isfinite(est.value))
    if alg.is_abelian and len(alg.blocks) <= ORACLE_MAX_ATOMS:
        oracle = pvar_oracle_abelian(ubar, None, 2.0)
        report["pvar2"]["oracle"] = oracle.value
        checks["oracle_agreement"] = abs(oracle.value - est.value) <= 1e-6
        refs.append("oracle")
    if kraus is not None:
        st = stinespring(kraus)
        report["stinespring"] = {"hat_dim": st.hat_dim, "homomorphism_residual": st.homomorphism_residual(),
                                 "reconstruction_residual": st.reconstruction_residual(kraus)}
        checks["stinespring"] = max(report["stinespring"]["homomorphism_residual"],
                                    report["stinespring"]["reconstruction_residual"]) <= 1e-10
        tv = two_variation_bound_check(kraus, budget, seed, samples=3)
        report["two_variation"] = tv
        checks["cb_bound"] = tv["holds"]
        rng = np.random.default_rng([seed, 5])
        d = kraus.d
        s = _contraction(rng, d, d)
        t = _contraction(rng, st.hat_dim, d)
        comp = compression_check(OperatorMap(alg, st.hat_dim, st.pi_units), s @ st.V2.conj().T, t,
                                 alg.identity(), 2.0, budget, seed)
        report["compression"] = comp
        checks["compression"] = comp["holds"]
        refs += ["cb", "compression"]
    return _finish(report, checks, refs, cfg), EXIT_PASS if all(checks.values()) else EXIT_FAIL


def _contraction(rng, rows: int, cols: int) -> np.ndarray:
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return z / np.linalg.norm(z, 2)


# -- entry point ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--budget", type=int, default=None, help="restart / candidate budget (default 16)")
    common.add_argument("--tol", type=float, default=None, help="extension tolerance (default 1e-8)")
    common.add_argument("--p", type=float, default=None, help="variation exponent (default 2)")
    common.add_argument("--algebra", default=None, help='block sizes, e.g. "2,3" (default "3")')
    common.add_argument("--trials", type=int, default=None, help="sampled trials per check (default 20)")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--config", default=None, help="JSON file with default settings; flags win")

    parser = argparse.ArgumentParser(prog="qdilation", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="generate a measure file")
    gen.add_argument("--kind", required=True, choices=["linear", "identity", "cp", "counterexample_m2", "abelian"])
    gen.add_argument("--d", type=int, default=None, help="target dimension (default 3; cp: n)")
    gen.add_argument("--n", type=int, default=3, help="cp: input matrix size")
    gen.add_argument("--m", type=int, default=2, help="cp: number of Kraus operators")
    gen.add_argument("--count", type=int, default=30, help="counterexample_m2: rank-one projections")
    gen.add_argument("--values", default=None, help='abelian: atom values, e.g. "3,-4"')

    ext = sub.add_parser("extend", parents=[common], help="Gleason-extend a measure")
    ext.add_argument("measure")
    ext.add_argument("--expect-counterexample", action="store_true",
                     help="pass when the measure is additive but has no linear extension")

    dil = sub.add_parser("dilate", parents=[common], help="build and verify the elementary dilation")
    dil.add_argument("measure")
    dil.add_argument("--norm", choices=["E", "D", "pV"], default="E")

    pv = sub.add_parser("pvar", parents=[common], help="p-variation of a measure")
    pv.add_argument("measure")
    pv.add_argument("--root", default="I", help="I, random, blocks:i,j, atoms:i,j or @projection.json")

    ver = sub.add_parser("verify", parents=[common], help="run every invariant check on a measure")
    ver.add_argument("measure")
    return parser


COMMANDS = {"gen": cmd_gen, "extend": cmd_extend, "dilate": cmd_dilate, "pvar": cmd_pvar, "verify": cmd_verify}


def _provenance(exc: BaseException) -> str:
    frames = traceback.extract_tb(exc.__traceback__)
    if not frames:
        return "qdilation"
    return "qdilation." + os.path.splitext(os.path.basename(frames[-1].filename))[0]


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = _settings(args)
        if args.command == "gen":
            args.d_given = args.d is not None
            if args.d is None:
                args.d = 3
            if args.d < 1 or args.n < 1 or args.m < 1 or args.count < 1:
                raise UsageError("sizes and counts must be positive")
        report, code = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"qdilation: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ContractError, StructuralError) as exc:
        print(f"qdilation: {_provenance(exc)}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
