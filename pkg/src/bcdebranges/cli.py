"""Command-line driver: ``run <config.json>`` and ``validate [--filter module]``.

Exit codes: 0 success, 1 input error (unreadable or malformed config),
2 failed invariant or failed validation check.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bridge, debranges, dirac, discrete, validate, wave
from .grid import BUILTIN_POTENTIALS, UniformGrid, as_potential

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2
SYSTEMS = ("discrete", "wave", "dirac", "bridge")
OUTPUTS = ("response", "connecting", "krein", "kernel", "hb", "recover", "validate")
DEFAULT_OUTPUTS = {
    "discrete": ["response", "connecting", "kernel"],
    "wave": ["response", "kernel"],
    "dirac": ["response", "kernel"],
    "bridge": ["validate"],
}
DEFAULT_T = {"discrete": 4, "wave": 1.0, "dirac": 1.0, "bridge": 1.0}
DEFAULT_M = 201
DEFAULT_Z = [[0.0, 1.0]]
CSV_HEADER = ["lambda_re", "lambda_im", "value_re", "value_im"]

# tolerances of the per-run checks requested with the "validate" output
GRAM_REL_TOL = 1e-12
DISCRETE_KERNEL_TOL = 1e-9
ROUNDTRIP_TOL = 1e-8
CONTINUOUS_KERNEL_TOL = 1e-3


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (exit code 1)."""


class InvariantError(ValueError):
    """A named property of the pipeline failed (exit code 2)."""

    def __init__(self, prop: str, detail: str):
        super().__init__(f"{prop}: {detail}")
        self.prop = prop
        self.detail = detail


@dataclass
class ExperimentConfig:
    system: str
    T: float
    M: int
    N: float
    potential: object
    z_samples: np.ndarray
    outputs: list[str]
    response: list[float] | None = None
    resolved: dict = field(default_factory=dict)


def _cpair(x):
    """Complex scalars or arrays as nested ``[re, im]`` lists."""
    a = np.asarray(x, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [_cpair(v) for v in a]


def _real_list(x):
    return np.asarray(x, dtype=float).tolist()


# ----------------------------------------------------------------------------
# config
# ----------------------------------------------------------------------------
def _check_potential_spec(spec, where="potential"):
    if spec is None or isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return
    if isinstance(spec, str):
        if spec not in BUILTIN_POTENTIALS:
            raise ConfigError(f"{where}: unknown builtin {spec!r}; choose from {sorted(BUILTIN_POTENTIALS)}")
        return
    if isinstance(spec, list):
        if not spec or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in spec):
            raise ConfigError(f"{where}: sample arrays must be non-empty lists of numbers")
        if not np.all(np.isfinite(spec)):
            raise ConfigError(f"{where}: samples must be finite")
        return
    if isinstance(spec, dict):
        unknown = set(spec) - {"name", "samples", "scale", "grid", "p", "q"}
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        if "p" in spec or "q" in spec:
            for key in ("p", "q"):
                if key in spec:
                    _check_potential_spec(spec[key], f"{where}.{key}")
            return
        if ("name" in spec) == ("samples" in spec):
            raise ConfigError(f"{where}: give exactly one of 'name' or 'samples'")
        _check_potential_spec(spec.get("name", spec.get("samples")), where)
        if "scale" in spec and not isinstance(spec["scale"], (int, float)):
            raise ConfigError(f"{where}: scale must be a number")
        return
    raise ConfigError(f"{where}: unsupported potential specification")


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    system = raw.get("system")
    if system not in SYSTEMS:
        raise ConfigError(f"system must be one of {SYSTEMS}, got {system!r}")
    T = raw.get("T", DEFAULT_T[system])
    if isinstance(T, bool) or not isinstance(T, (int, float)) or not T > 0:
        raise ConfigError(f"T must be a positive number, got {T!r}")
    if system == "discrete":
        if not float(T).is_integer():
            raise ConfigError("T must be an integer for the discrete system")
        T = int(T)
    M = raw.get("M", raw.get("grid_points", DEFAULT_M))
    if isinstance(M, bool) or not isinstance(M, int) or M < 3:
        raise ConfigError(f"grid_points M must be an integer >= 3, got {M!r}")
    N = raw.get("N", 2.0 if system == "bridge" else T)
    if isinstance(N, bool) or not isinstance(N, (int, float)) or not N > 0:
        raise ConfigError(f"N must be a positive number, got {N!r}")
    potential = raw.get("potential", "zero")
    _check_potential_spec(potential)
    zs = raw.get("z_samples", DEFAULT_Z)
    try:
        za = np.asarray(zs, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("z_samples must be a list of [re, im] pairs") from None
    if za.ndim != 2 or za.shape[1] != 2 or za.shape[0] == 0 or not np.all(np.isfinite(za)):
        raise ConfigError("z_samples must be a non-empty list of finite [re, im] pairs")
    outputs = raw.get("outputs", DEFAULT_OUTPUTS[system])
    if not isinstance(outputs, list) or any(o not in OUTPUTS for o in outputs):
        raise ConfigError(f"outputs must be a list drawn from {OUTPUTS}")
    if "recover" in outputs and system != "discrete":
        raise ConfigError("'recover' is available for the discrete system only")
    response = raw.get("response")
    if response is not None:
        if system != "discrete":
            raise ConfigError("an explicit response vector is accepted for the discrete system only")
        _check_potential_spec(response, "response")
        if len(response) < 2 * T - 1:
            raise ConfigError(f"response needs {2 * T - 1} entries for T={T}")
    unknown = set(raw) - {"system", "T", "M", "grid_points", "N", "potential", "z_samples", "outputs", "response"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    resolved = {"system": system, "T": T, "M": M, "N": N, "potential": potential,
                "z_samples": za.tolist(), "outputs": list(outputs)}
    if response is not None:
        resolved["response"] = response
    return ExperimentConfig(system, T, M, N, potential, za[:, 0] + 1j * za[:, 1], list(outputs),
                            response, resolved)


def _continuous_potential(spec, T: float):
    """Callable potential; plain sample arrays span ``[0, T]``."""
    if isinstance(spec, dict):
        if "p" in spec or "q" in spec:
            raise ConfigError("matrix potential given for a scalar system")
        length = float(spec.get("grid", {}).get("length", T))
        base = spec.get("name", spec.get("samples"))
        return as_potential(base, length=length, scale=float(spec.get("scale", 1.0)))
    return as_potential(spec, length=T)


def _dirac_potential(spec, T: float) -> dirac.MatrixPotential:
    if isinstance(spec, dict) and ("p" in spec or "q" in spec):
        length = float(spec.get("grid", {}).get("length", T))
        p = _continuous_potential(_with_length(spec.get("p", "zero"), length), T)
        q = _continuous_potential(_with_length(spec.get("q", "zero"), length), T)
        return dirac.MatrixPotential(p, q)
    return dirac.MatrixPotential(as_potential(None), _continuous_potential(spec, T))


def _with_length(spec, length):
    if isinstance(spec, list):
        return {"samples": spec, "grid": {"length": length}}
    return spec


def _discrete_potential(spec, T: int) -> np.ndarray:
    """``b_1..b_T``; builtin names are sampled at ``n = 1..T``."""
    if isinstance(spec, list):
        b = np.zeros(max(T, len(spec)))
        b[: len(spec)] = spec
        return b
    if isinstance(spec, dict):
        if "p" in spec or "q" in spec:
            raise ConfigError("matrix potential given for the discrete system")
        b = _discrete_potential(spec.get("name", spec.get("samples")), T)
        return float(spec.get("scale", 1.0)) * b
    return np.asarray(as_potential(spec)(np.arange(1, T + 1, dtype=float)), dtype=float)


# ----------------------------------------------------------------------------
# pipelines
# ----------------------------------------------------------------------------
def _checks_entry(name, passed, **metrics):
    return {"property": name, "passed": bool(passed), **metrics}


def _run_discrete(cfg: ExperimentConfig):
    T, z = cfg.T, cfg.z_samples
    out, samples, checks = {}, {}, []
    b = None
    if cfg.response is not None:
        r = np.asarray(cfg.response, dtype=float)
    else:
        b = _discrete_potential(cfg.potential, T)
        r = discrete.response(b, T)
    if r[0] != 1.0:
        raise InvariantError("r_0 = 1", f"response vector starts with r_0 = {float(r[0])!r}")
    if "response" in cfg.outputs:
        out["response"] = _real_list(r[: 2 * T - 1])
    C = discrete.connecting_from_response(r, T)
    if "connecting" in cfg.outputs:
        out["connecting"] = _real_list(C)
    try:
        K = discrete.kernel_from_connecting(C)
    except ValueError as exc:
        raise InvariantError("connecting operator positive definite", str(exc)) from None
    if "krein" in cfg.outputs:
        out["krein"] = [{"z": _cpair(s.z), "j": _cpair(s.j)} for s in discrete.krein_solve_many(C, z)]
    if "kernel" in cfg.outputs:
        out["kernel"] = _cpair(K(z[:, None], z[None, :]))
        samples["kernel"] = (z, K(z, z))
    E = discrete.E_direct(b, T) if b is not None else debranges.E_from_kernel(K)[0]
    if "hb" in cfg.outputs:
        out["hb"] = debranges.hb_check(E, kernel=K).to_dict()
        samples["E"] = (z, E.value(z))
    if "recover" in cfg.outputs:
        try:
            out["recover"] = _real_list(discrete.recover_potential(C, T))
        except ValueError as exc:
            raise InvariantError("unit Cholesky diagonal", str(exc)) from None
    if "validate" in cfg.outputs:
        checks.append(_checks_entry("r_0 = 1", True))
        checks.append(_checks_entry("connecting operator symmetric", np.array_equal(C, C.T)))
        hb = debranges.hb_check(E, kernel=K)
        checks.append(_checks_entry("Hermite-Biehler", hb.passed, min_hb_gap=hb.min_hb_gap,
                                    min_diagonal=hb.min_diagonal))
        if b is not None:
            G = discrete.gram_matrix(b, T)
            e = float(np.max(np.abs(C - G)) / max(1.0, float(np.max(np.abs(C)))))
            checks.append(_checks_entry("Gram identity", e <= GRAM_REL_TOL, scaled_error=e, tolerance=GRAM_REL_TOL))
            Kd = discrete.kernel_direct(b, T, z[:, None], z[None, :])
            e = float(np.max(np.abs(K(z[:, None], z[None, :]) - Kd) / np.abs(Kd)))
            checks.append(_checks_entry("kernel routes agree", e <= DISCRETE_KERNEL_TOL, max_rel_error=e,
                                        tolerance=DISCRETE_KERNEL_TOL))
            if T > 1:
                e = float(np.max(np.abs(discrete.recover_potential(C, T) - b[: T - 1])))
                checks.append(_checks_entry("inverse roundtrip", e <= ROUNDTRIP_TOL, max_abs_error=e,
                                            tolerance=ROUNDTRIP_TOL))
    return out, samples, checks


def _run_continuous(cfg: ExperimentConfig):
    T, M, z = float(cfg.T), cfg.M, cfg.z_samples
    grid = UniformGrid(T, M)
    out, samples, checks = {}, {}, []
    if cfg.system == "wave":
        V = _continuous_potential(cfg.potential, T)
        rk = wave.response_kernel(V, T, M)
        build, evaluator = wave.connecting_build, wave.kernel_krein_evaluator
        E = wave.E_direct_wave(V, cfg.N)
        Kd = wave.kernel_direct_evaluator(V, cfg.N)
    else:
        V = _dirac_potential(cfg.potential, T)
        rk = dirac.response_kernel_dirac(V, T, M)
        build, evaluator = dirac.connecting_build_dirac, dirac.kernel_krein_evaluator
        E = dirac.E_direct_dirac(V, cfg.N)
        Kd = dirac.kernel_direct_evaluator(V, cfg.N)
    if "response" in cfg.outputs:
        out["response"] = {"t": _real_list(rk.t), "r": _cpair(rk.r) if np.iscomplexobj(rk.r) else _real_list(rk.r)}
    C = build(rk, T, grid)
    if "connecting" in cfg.outputs:
        out["connecting"] = _cpair(C.matrix) if np.iscomplexobj(C.matrix) else _real_list(C.matrix)
    try:
        C.factor
    except ValueError as exc:
        raise InvariantError("connecting operator positive definite", str(exc)) from None
    K = evaluator(C)
    if "krein" in cfg.outputs:
        if cfg.system == "wave":
            J = wave.krein_solve_wave(C, z)
            out["krein"] = [{"z": _cpair(zz), "j": _cpair(J[:, k])} for k, zz in enumerate(z)]
        else:
            j1, j2 = dirac.krein_solve_dirac(C, z)
            out["krein"] = [{"z": _cpair(zz), "j1": _cpair(j1[:, k]), "j2": _cpair(j2[:, k])}
                            for k, zz in enumerate(z)]
    if "kernel" in cfg.outputs:
        out["kernel"] = _cpair(K(z[:, None], z[None, :]))
        samples["kernel"] = (z, K(z, z))
    if "hb" in cfg.outputs:
        out["hb"] = debranges.hb_check(E, kernel=Kd).to_dict()
        samples["E"] = (z, E.value(z))
    if "validate" in cfg.outputs:
        hb = debranges.hb_check(E, kernel=Kd)
        checks.append(_checks_entry("Hermite-Biehler", hb.passed, min_hb_gap=hb.min_hb_gap,
                                    min_diagonal=hb.min_diagonal))
        if cfg.N == T:
            Kk = K(z[:, None], z[None, :])
            Kdv = Kd(z[:, None], z[None, :])
            e = float(np.max(np.abs(Kk - Kdv) / np.abs(Kdv)))
            checks.append(_checks_entry("kernel routes agree", e <= CONTINUOUS_KERNEL_TOL, max_rel_error=e,
                                        tolerance=CONTINUOUS_KERNEL_TOL))
    return out, samples, checks


def _run_bridge(cfg: ExperimentConfig):
    q = _continuous_potential(cfg.potential, float(cfg.T))
    rep = bridge.bridge_report(q, T=float(cfg.T), M=cfg.M, N=float(cfg.N))
    checks = [_checks_entry(k, rep[k]["passed"], max_error=rep[k].get("max_error"))
              for k in ("potential_map", "response_relation", "measure_relation", "isometry")]
    return {"bridge": rep}, {}, checks if "validate" in cfg.outputs else []


def _jsonable(obj):
    return validate._jsonable(obj)


def execute(cfg: ExperimentConfig) -> tuple[dict, dict]:
    """Run the pipeline; returns the JSON report and CSV sample tables."""
    runner = {"discrete": _run_discrete, "wave": _run_continuous, "dirac": _run_continuous,
              "bridge": _run_bridge}[cfg.system]
    try:
        results, samples, checks = runner(cfg)
    except InvariantError as exc:
        report = {"config": cfg.resolved, "seed": validate.seed_from_env(), "passed": False,
                  "failed_property": exc.prop, "error": exc.detail}
        return report, {}
    failed = [c["property"] for c in checks if not c["passed"]]
    report = {"config": cfg.resolved, "seed": validate.seed_from_env(), "results": _jsonable(results),
              "checks": _jsonable(checks), "passed": not failed}
    if failed:
        report["failed_property"] = failed[0]
    return report, samples


def write_csv(path: Path, lam, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for l, v in zip(np.asarray(lam, dtype=complex), np.asarray(values, dtype=complex)):
            w.writerow([repr(float(l.real)), repr(float(l.imag)), repr(float(v.real)), repr(float(v.imag))])


def write_json(path: Path, report: dict):
    path.write_text(validate.dumps(report))


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------
def cmd_run(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
        cfg = parse_config(raw)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report, samples = execute(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "report.json", report)
    for name, (lam, val) in samples.items():
        write_csv(out_dir / f"{name}.csv", lam, val)
    if not report["passed"]:
        print(f"FAILED: {report['failed_property']}", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"wrote {out_dir / 'report.json'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        seed = validate.seed_from_env()
        validate.select(args.filter)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = validate.full_report(seed, args.filter)
    for line in validate.summary_lines(report):
        print(line)
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "validation.json", report)
    if not report["passed"]:
        first = next(r for r in report["criteria"] if not r["passed"])
        print(f"FAILED: criterion {first['id']} ({first['name']})", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bc-debranges",
                                     description="Boundary-control construction of de Branges spaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the pipeline described by a JSON config")
    p_run.add_argument("config", help="path to the JSON config")
    p_run.add_argument("--out-dir", default=".", help="directory for report.json and CSV tables")
    p_run.set_defaults(func=cmd_run)
    p_val = sub.add_parser("validate", help="run the acceptance suite")
    p_val.add_argument("--filter", choices=validate.MODULES, default=None, help="restrict to one module")
    p_val.add_argument("--out-dir", default=None, help="also write validation.json here")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
