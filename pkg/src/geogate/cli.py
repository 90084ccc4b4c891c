"""Config-driven command line front end.

Subcommands: synth, simulate, scan, two-qubit, optimize, accept.  Scenario
configs are JSON; frequencies are given in MHz (rates in kHz) and converted
to angular units internally.  Every run writes deterministic CSV artifacts
plus a manifest recording the config hash, seed and library versions.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .dynamics import (
    DecoherenceRates,
    ErrorFractions,
    TransmonParams,
    build_two_qubit_drive,
    evolve_schrodinger,
    two_qubit_full_hamiltonian,
    IDX_02, IDX_11, IDX_20,
)
from .fidelity import (
    average_gate_fidelity_1q,
    average_gate_fidelity_2q,
    fidelity_dynamics,
    gate_variants,
    robustness_scan,
)
from ._csv import write_csv
from .optimize import OptimizationProblem, optimize
from .pulses import (
    CATALOG,
    TWO_QUBIT_COEFFS,
    AmplitudeBudget,
    default_schedule,
    drag_correct,
    synthesize,
    target_unitary,
)

TWO_PI = 2 * math.pi
MHZ = TWO_PI * 1e-3   # MHz -> rad/ns
KHZ = TWO_PI * 1e-6   # kHz -> rad/ns


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def resolve_workers(config: dict) -> int:
    env = os.environ.get("GG_THREADS")
    if env:
        return max(1, int(env))
    if config.get("workers"):
        return max(1, int(config["workers"]))
    return os.cpu_count() or 1


def write_manifest(out_dir, command, config, seed, outputs):
    manifest = {
        "command": command,
        "config_sha256": config_hash(config),
        "seed": seed,
        "versions": {
            "geogate": __version__,
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    path = os.path.join(out_dir, "manifest.json")
    os.makedirs(out_dir, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _budget(config, args) -> AmplitudeBudget:
    if getattr(args, "omega0", None) is not None:
        return AmplitudeBudget(args.omega0)  # flag value already in rad/ns
    return AmplitudeBudget(config.get("omega0_mhz", 30.0) * MHZ)


def _rates(config) -> DecoherenceRates:
    return DecoherenceRates(gamma_decay=config.get("gamma_khz", 0.0) * KHZ,
                            kappa_dephase=config.get("kappa_khz", 0.0) * KHZ)


def _coeffs(config, args):
    if getattr(args, "coeffs", None):
        return tuple(float(c) for c in args.coeffs.split(","))
    if config.get("coeffs"):
        return tuple(float(c) for c in config["coeffs"])
    return ()


def _gate_name(config, args) -> str:
    name = getattr(args, "gate", None) or config.get("gate")
    if not name:
        raise ConfigError("no gate selected (flag --gate or config key 'gate')")
    return name


def _dt(config, args, default=0.001) -> float:
    if getattr(args, "dt", None) is not None:
        return args.dt
    return config.get("dt_ns", default)


def _out_dir(config, args) -> str:
    return getattr(args, "out", None) or config.get("out_dir", ".")


def cmd_synth(args) -> int:
    config = load_config(args.config)
    gate = _gate_name(config, args)
    spec = CATALOG[gate]
    budget = _budget(config, args)
    coeffs = _coeffs(config, args)
    grid = config.get("grid_points", 4001)
    pulse = synthesize(spec, default_schedule(spec, coeffs), budget, grid)
    if args.drag or config.get("drag"):
        anh = config.get("anharmonicity_mhz", 220.0) * MHZ
        pulse = drag_correct(pulse, anh)
    out_dir = _out_dir(config, args)
    os.makedirs(out_dir, exist_ok=True)
    out = os.path.join(out_dir, f"pulse_{gate}.csv")
    pulse.to_csv(out)
    write_manifest(out_dir, "synth", config, args.seed, [out])
    print(f"tau_ns={pulse.tau:.6f}")
    print(f"wrote {out}")
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    gate = _gate_name(config, args)
    spec = CATALOG[gate]
    budget = _budget(config, args)
    model = args.model or config.get("model", "three_level")
    rates = _rates(config)
    err = ErrorFractions(epsilon=config.get("epsilon", 0.0),
                         delta=config.get("delta", 0.0))
    dt = _dt(config, args)
    anh = config.get("anharmonicity_mhz", 220.0) * MHZ
    pulse = synthesize(spec, default_schedule(spec, _coeffs(config, args)), budget,
                       config.get("grid_points", 4001))
    if model == "three_level" and config.get("drag", True):
        pulse = drag_correct(pulse, anh)
        if _coeffs(config, args):
            print("note: reshaped schedules pair poorly with the leakage correction")
    fid = average_gate_fidelity_1q(pulse, target_unitary(spec), model=model,
                                   anharmonicity=anh, rates=rates, err=err,
                                   n_theta=config.get("n_theta", 1001), dt=dt,
                                   method="channel")
    defaults = {"pi8": [1.0, 1.0], "phase": [1.0, 1.0], "hadamard": [1.0, 0.0]}
    ket0 = config.get("initial_state", defaults.get(gate, [1.0, 0.0]))
    trace = fidelity_dynamics(pulse, ket0, model=model, anharmonicity=anh,
                              rates=rates, err=err, dt=dt,
                              record_stride=config.get("record_stride", 20))
    out_dir = _out_dir(config, args)
    os.makedirs(out_dir, exist_ok=True)
    out = os.path.join(out_dir, f"trace_{gate}_{model}.csv")
    trace.to_csv(out)
    write_manifest(out_dir, "simulate", config, args.seed, [out])
    print(f"fidelity={fid:.6f}")
    print(f"tau_ns={pulse.tau:.6f}")
    print(f"wrote {out}")
    return 0


def cmd_scan(args) -> int:
    config = load_config(args.config)
    gate = _gate_name(config, args)
    scan_cfg = config.get("scan", {})
    axes = scan_cfg.get("axes", [scan_cfg.get("axis", "epsilon")])
    n_points = scan_cfg.get("points", 41)
    lo, hi = scan_cfg.get("min", -0.1), scan_cfg.get("max", 0.1)
    include = tuple(scan_cfg.get("variants", ("geometric", "geometric_po", "dynamical")))
    style = scan_cfg.get("comparator_style", "canonical")
    rates = _rates(config)
    workers = resolve_workers(config)
    variants = gate_variants(gate, _budget(config, args), include, style)
    values = np.linspace(lo, hi, n_points)
    out_dir = _out_dir(config, args)
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    for axis in axes:
        scan = robustness_scan(variants, axis, values, rates=rates,
                               n_theta=config.get("n_theta", 1001),
                               dt=_dt(config, args, default=0.01), workers=workers)
        out = os.path.join(out_dir, f"scan_{gate}_{axis}.csv")
        scan.to_csv(out)
        outputs.append(out)
        for name, fids in sorted(scan.fidelities.items()):
            print(f"{axis} {name}: F(min)={fids.min():.6f} F(0)={fids[n_points // 2]:.6f}")
    write_manifest(out_dir, "scan", config, args.seed, outputs)
    for out in outputs:
        print(f"wrote {out}")
    return 0


def cmd_two_qubit(args) -> int:
    config = load_config(args.config)
    tq = config.get("two_qubit", {})
    params = TransmonParams(g=tq.get("g_mhz", 10.0) * MHZ,
                            Delta=tq.get("delta_mhz", 500.0) * MHZ,
                            anh_a=tq.get("anh_a_mhz", 220.0) * MHZ,
                            anh_b=tq.get("anh_b_mhz", 200.0) * MHZ)
    budget = AmplitudeBudget(tq.get("gprime_max_mhz", 15.0) * MHZ)
    gamma_prime = tq.get("gamma_g_prime_over_pi", 0.25) * math.pi
    coeffs = tuple(tq.get("coeffs", TWO_QUBIT_COEFFS))
    model = args.model or tq.get("model", "full")
    rates = _rates(config) if model == "full" else DecoherenceRates()
    dt = _dt(config, args)
    if gamma_prime == 0.0:
        print("fidelity=1.000000")
        print("tau_ns=0.000000")
        return 0
    from .paths import PathKind, PathSpec
    spec = PathSpec(gamma_g=gamma_prime, alpha0=0.0, beta0=math.pi / 2,
                    kind=PathKind.POLE_START)
    pulse = synthesize(spec, default_schedule(spec, coeffs), budget,
                       config.get("grid_points", 4001))
    drive = build_two_qubit_drive(params, pulse, gamma_prime)
    fid = average_gate_fidelity_2q(params, drive, rates=rates, model=model,
                                   n_theta=tq.get("n_theta", 51), dt=dt)
    out_dir = _out_dir(config, args)
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    if model == "full":
        sampler = two_qubit_full_hamiltonian(params, drive)
        psi0 = np.zeros(9, dtype=complex)
        psi0[IDX_11] = 1.0
        res = evolve_schrodinger(sampler, psi0, (0.0, drive.tau), dt,
                                 record_stride=config.get("record_stride", 200))
        pops = np.abs(res.states) ** 2
        out = os.path.join(out_dir, "trace_two_qubit_full.csv")
        write_csv(out, ["t_ns", "pop_11", "pop_02", "pop_20", "pop_other"],
                  [res.times, pops[:, IDX_11], pops[:, IDX_02], pops[:, IDX_20],
                   1.0 - pops[:, IDX_11] - pops[:, IDX_02] - pops[:, IDX_20]])
        outputs.append(out)
    write_manifest(out_dir, "two-qubit", config, args.seed, outputs)
    print(f"fidelity={fid:.6f}")
    print(f"tau_ns={drive.tau:.6f}")
    for out in outputs:
        print(f"wrote {out}")
    return 0


def cmd_optimize(args) -> int:
    config = load_config(args.config)
    gate = _gate_name(config, args)
    budget = _budget(config, args)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    opt_cfg = config.get("optimize", {})
    problem = OptimizationProblem(CATALOG[gate], budget,
                                  bound=opt_cfg.get("bound", 0.2),
                                  monotone=opt_cfg.get("monotone", True),
                                  grid_points=config.get("grid_points", 4001))
    result = optimize(problem, seed=seed,
                      n_starts=opt_cfg.get("starts", 16),
                      max_evals_per_start=opt_cfg.get("evals_per_start", 500))
    out_dir = _out_dir(config, args)
    os.makedirs(out_dir, exist_ok=True)
    out = os.path.join(out_dir, f"optimize_{gate}.csv")
    result.to_csv(out, gate_name=gate)
    hist = os.path.join(out_dir, f"optimize_{gate}_history.csv")
    result.history_to_csv(hist)
    write_manifest(out_dir, "optimize", config, seed, [out, hist])
    print(f"coeffs={','.join(f'{c:.6f}' for c in result.coeffs)}")
    print(f"tau_ns={result.tau:.6f} (baseline {result.baseline_tau:.6f})")
    print(f"wrote {out}")
    return 0


def cmd_accept(args) -> int:
    from .acceptance import run_all
    results = run_all()
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geogate",
        description="Shortest-path geometric gate synthesis and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_choices=None):
        p.add_argument("--config", help="scenario JSON")
        p.add_argument("--out", help="output directory (default: config out_dir or '.')")
        p.add_argument("--seed", type=int, default=None, help="optimizer seed")
        p.add_argument("--dt", type=float, default=None, help="integrator step, ns")
        p.add_argument("--gate", help="catalog gate: phase, pi8, hadamard")
        p.add_argument("--omega0", type=float, default=None,
                       help="amplitude budget, rad/ns (configs use omega0_mhz)")
        p.add_argument("--coeffs", help="comma-separated schedule coefficients")
        if model_choices:
            p.add_argument("--model", choices=model_choices, default=None)

    p = sub.add_parser("synth", help="synthesize a drive pulse CSV")
    common(p)
    p.add_argument("--drag", action="store_true", help="attach the leakage correction")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("simulate", help="open-system gate simulation and trace CSV")
    common(p, model_choices=("two_level", "three_level"))
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("scan", help="robustness scan CSV over error fractions")
    common(p)
    p.set_defaults(fn=cmd_scan)

    p = sub.add_parser("two-qubit", help="coupled-transmon control-phase benchmark")
    common(p, model_choices=("full", "effective"))
    p.set_defaults(fn=cmd_two_qubit)

    p = sub.add_parser("optimize", help="search schedule coefficients for shorter gates")
    common(p)
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.set_defaults(fn=cmd_accept)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print("error: " + json.dumps({"type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
