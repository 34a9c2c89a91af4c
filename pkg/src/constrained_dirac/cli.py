"""Command-line driver: verify-algebra, bergmann, evolve, quantize.

Every command writes a JSON report (``--out``) and prints a short summary.
The exit code is 0 iff the report's ``failures`` list is empty.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .dirac_bergmann import DiracBergmann, FormalismTrack
from .dynamics import (EvolutionState, InstabilityError, StabilityError, evolve, lattice_frequency,
                       measured_frequency, plane_wave, save_trajectory)
from .gamma_algebra import Representation, build_gamma_set, check_adjoint_relations, check_clifford, verify_all
from .grassmann import identity_suite
from .phase_space import Constants, LatticeSpec, read_config
from .quantization import (MAX_MODES, fundamental_anticommutators, spinorial_identities,
                           verify_all_tracks)

log = logging.getLogger("constrained_dirac")

REPORT_SCHEMA = "constrained-dirac/report/1"
FAULTS = ("gamma-entry", "momentum-sign")

DEFAULTS = {
    "track": "all", "rep": "all", "sites": None, "dx": "1", "dt": None, "steps": 1000,
    "hbar": "1", "c": "1", "mass": "1", "seed": 0, "mode": 1, "initial": "plane-wave",
    "random_trials": None, "out": None, "inject_fault": None, "config": None,
    "trajectory": None, "table": None, "verbose": False,
}


def _tracks(name: str) -> list[FormalismTrack]:
    return list(FormalismTrack) if name == "all" else [FormalismTrack(name)]


def _reps(name: str):
    reps = list(Representation) if name == "all" else [Representation(name)]
    return [build_gamma_set(r) for r in reps]


def _corrupt(gs):
    """Negative control: flip the sign of one nonzero entry of gamma^1."""
    for r, row in enumerate(gs.gamma[1]):
        for c, x in enumerate(row):
            if x:
                return gs.with_entry(1, r, c, -x)
    raise AssertionError("gamma^1 has no nonzero entry")


def _constants(cfg) -> Constants:
    return Constants(Fraction(str(cfg.hbar)), Fraction(str(cfg.c)), Fraction(str(cfg.mass)))


# commands

def cmd_verify_algebra(cfg) -> dict:
    entries = []
    for gs in _reps(cfg.rep):
        if cfg.inject_fault == "gamma-entry":
            gs = _corrupt(gs)
        residuals = verify_all(gs) + check_clifford(gs, exact=False) + check_adjoint_relations(gs, exact=False)
        entries += [r.to_dict() for r in residuals]
    failures = [f"{e['representation']}:{e['identity']}{tuple(e['indices'])}:{e['arithmetic']}"
                for e in entries if not e["ok"]]
    grass = identity_suite(cfg.random_trials or 500, cfg.seed)
    failures += [f"grassmann:{name}" for name, ok in grass if not ok]
    return {"residuals": entries, "grassmann": [{"identity": n, "ok": ok} for n, ok in grass],
            "failures": failures}


def cmd_bergmann(cfg) -> dict:
    constants = _constants(cfg)
    lattice = LatticeSpec(1, cfg.sites or 8, Fraction(str(cfg.dx)))
    runs, failures = [], []
    for gs in _reps(cfg.rep):
        for tr in _tracks(cfg.track):
            driver = DiracBergmann(tr, lattice, gs, constants,
                                   flip_momentum_sign=cfg.inject_fault == "momentum-sign")
            rep = driver.run(cfg.random_trials or 50, cfg.seed)
            if tr is FormalismTrack.GRASSMANN_R and "constraint_matrix" in rep:
                left = DiracBergmann(FormalismTrack.GRASSMANN_L, lattice, gs, constants).constraint_matrix()
                right = driver.constraint_matrix()
                ok = right.block == [[-x for x in row] for row in left.block]
                rep["checks"].append({"name": "matrix_R_is_minus_L", "ok": ok, "detail": None})
                if not ok:
                    rep["failures"].append("matrix_R_is_minus_L")
            runs.append(rep)
            failures += [f"{gs.name}:{tr.value}:{f}" for f in rep["failures"]]
    return {"runs": runs, "failures": failures}


def cmd_evolve(cfg) -> dict:
    constants = _constants(cfg)
    gs = _reps("dirac" if cfg.rep == "all" else cfg.rep)[0]
    lattice = LatticeSpec(1, cfg.sites or 32, Fraction(str(cfg.dx)))
    dx = float(lattice.spacing)
    dt = float(cfg.dt) if cfg.dt is not None else 0.05 * dx
    lam = None
    if cfg.initial == "zero":
        state = EvolutionState(np.zeros((lattice.n_sites, 4)), lattice, gs, constants, dt=dt)
    else:
        state, lam = plane_wave(lattice, gs, constants, cfg.mode, dt=dt)
    traj = evolve(state, cfg.steps)
    summary = {
        "energy_relative_drift": traj.relative_drift("energy"),
        "norm_relative_drift": traj.relative_drift("norm"),
        "max_constraint_residual": max(traj.constraint),
    }
    failures = []
    if summary["energy_relative_drift"] > 1e-8:
        failures.append("energy_drift")
    if summary["norm_relative_drift"] > 1e-8:
        failures.append("norm_drift")
    if lam is not None:
        k = 2 * np.pi * cfg.mode / (lattice.n_sites * dx)
        got = measured_frequency(traj)
        summary.update(lambda_oracle=lam, omega_oracle=lattice_frequency(k, lattice, constants),
                       lambda_measured=got, frequency_relative_error=abs(got - lam) / abs(lam))
        if summary["frequency_relative_error"] > 1e-6:
            failures.append("dispersion")
    else:
        static = bool(np.all(traj.final.psi == 0))
        summary["static"] = static
        if not static:
            failures.append("zero_data_static")
    if cfg.trajectory:
        save_trajectory(traj, cfg.trajectory, cfg.table)
    return {"dt": dt, "dx": dx, "steps": cfg.steps, "summary": summary, "failures": failures}


def cmd_quantize(cfg) -> dict:
    constants = _constants(cfg)
    n_sites = cfg.sites or 1
    if 4 * n_sites > MAX_MODES:
        raise ValueError(f"{4 * n_sites} modes exceed the limit of {MAX_MODES}")
    dx = Fraction(str(cfg.dx))
    out, failures = [], []
    for gs in _reps(cfg.rep):
        fund = fundamental_anticommutators(n_sites, gs, dx)
        sp = spinorial_identities(n_sites, gs, constants, dx)
        verdicts = verify_all_tracks(n_sites, gs, constants, _tracks(cfg.track))
        out.append({"representation": gs.name, "fundamental": fund, "spinorial": sp,
                    "recipes": [v.to_json() for v in verdicts]})
        failures += [f"{gs.name}:fundamental:{k}" for k, ok in fund.items() if not ok]
        failures += [f"{gs.name}:spinorial:{k}" for k, ok in sp.items() if not ok]
        failures += [f"{gs.name}:{v.track}:{v.pair[0]},{v.pair[1]}" for v in verdicts if not v.ok]
    return {"n_sites": n_sites, "n_modes": 4 * n_sites, "results": out, "failures": failures}


COMMANDS = {
    "verify-algebra": cmd_verify_algebra,
    "bergmann": cmd_bergmann,
    "evolve": cmd_evolve,
    "quantize": cmd_quantize,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="constrained-dirac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--track", choices=[t.value for t in FormalismTrack] + ["all"])
    common.add_argument("--rep", choices=[r.value for r in Representation] + ["all"])
    common.add_argument("--sites", type=int)
    common.add_argument("--dx")
    common.add_argument("--dt", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--hbar")
    common.add_argument("--c")
    common.add_argument("--mass")
    common.add_argument("--seed", type=int)
    common.add_argument("--random-trials", dest="random_trials", type=int,
                        help="random samples for property suites")
    common.add_argument("--out", help="write the JSON report here")
    common.add_argument("--inject-fault", choices=FAULTS, help="negative control")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "evolve":
            sp.add_argument("--mode", type=int, help="plane-wave mode number n, k = 2 pi n / L")
            sp.add_argument("--initial", choices=["plane-wave", "zero"])
            sp.add_argument("--trajectory", help="write the trajectory JSON here")
            sp.add_argument("--table", help="write a whitespace table of the diagnostics here")
    return p


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Defaults < config file < flags."""
    merged = dict(DEFAULTS)
    if args.config:
        file_cfg = read_config(args.config)
        for key, val in file_cfg.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise SystemExit(f"unknown config key: {key}")
            merged[key] = int(val) if key in ("steps", "seed", "mode", "random_trials") else val
    for key, val in vars(args).items():
        if val is not None:
            merged[key] = val
    if merged.get("dt") is not None:
        merged["dt"] = float(merged["dt"])
    if merged.get("sites") is not None:
        merged["sites"] = int(merged["sites"])
    return argparse.Namespace(**merged)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = resolve(args)
    try:
        body = COMMANDS[cfg.command](cfg)
    except (StabilityError, InstabilityError, ValueError) as exc:
        body = {"error": f"{type(exc).__name__}: {exc}", "failures": [type(exc).__name__]}
    report = {"schema": REPORT_SCHEMA, "version": __version__, "command": cfg.command,
              "config": {k: cfg.__dict__.get(k) for k in
                         ("track", "rep", "sites", "dx", "dt", "steps", "hbar", "c", "mass", "seed",
                          "inject_fault")},
              **body}
    text = json.dumps(report, indent=1, sort_keys=True, default=str)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    failures = report["failures"]
    if "error" in report:
        print(f"{cfg.command}: aborted: {report['error']}")
    elif failures:
        print(f"{cfg.command}: FAIL ({len(failures)} failures); first failing identity: {failures[0]}")
    else:
        print(f"{cfg.command}: PASS")
    if cfg.command == "evolve" and "summary" in report:
        for k, v in report["summary"].items():
            print(f"  {k}: {v}")
    return 0 if not failures else 1


if __name__ == "__main__":
    sys.exit(main())
