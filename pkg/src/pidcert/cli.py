"""Batch front end: JSON configs in, certificates/trajectories/reports out.

Usage:
    pidcert <mode> --config <path> [--seed N] [--out DIR] [--workers K]

Modes: gains, certify, simulate, sweep, planar, verify-class.
Exit codes: 0 all checks pass, 1 usage/config error, 2 a certification or
audit check failed (the failing report is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import certificates as cert_mod
from . import gain_sets as gs
from . import planar_pi
from . import plant_models as pm
from . import simulator as sim
from .errors import PidcertError, UsageError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2


def _fail(msg: str) -> "UsageError":
    return UsageError(msg)


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise _fail(msg)


def _parse_bounds(node, where: str) -> gs.UncertaintyBounds:
    _expect(isinstance(node, dict), f"{where}: bounds must be an object")
    if "L" in node:
        return gs.UncertaintyBounds.first_order(
            L=float(node["L"]), b_lower=float(node["b_lower"])
        )
    for key in ("L1", "L2", "b_lower"):
        _expect(key in node, f"{where}: missing bounds field {key!r}")
    return gs.UncertaintyBounds(
        L1=float(node["L1"]), L2=float(node["L2"]), b_lower=float(node["b_lower"])
    )


def _parse_gains(node, kind: str, where: str) -> gs.GainVector:
    _expect(isinstance(node, dict), f"{where}: gains must be an object")
    return gs.GainVector(
        kind,
        kp=float(node.get("kp", 0.0)),
        ki=float(node.get("ki", 0.0)),
        kd=float(node.get("kd", 0.0)),
    )


def _parse_plant(node, where: str) -> pm.PlantModel:
    _expect(isinstance(node, dict), f"{where}: plant must be an object")
    _expect("family" in node, f"{where}: plant needs a 'family' field")
    return pm.build_family(node["family"], node.get("params", {}))


def _vector(node, n: int, where: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(node, dtype=float))
    _expect(arr.size == n, f"{where}: expected {n} entries, got {arr.size}")
    return arr


def _dump_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def mode_gains(config: dict, out: Path, seed: int, workers: int) -> int:
    kind = config.get("kind", gs.PID)
    ub = _parse_bounds(config.get("bounds"), "gains mode")
    g = gs.suggest_gains(
        kind, ub, ki=config.get("ki"), margin=float(config.get("margin", 0.1))
    )
    report = gs.membership(g, ub)
    payload = {
        "gains": {"kp": g.kp, "ki": g.ki, "kd": g.kd, "kind": g.kind},
        "member": report.member,
        "margins": {k: v for k, v in report.margins},
        "kbar": report.kbar,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    _dump_json(out / "gains.json", payload)
    return EXIT_OK


def mode_certify(config: dict, out: Path, seed: int, workers: int) -> int:
    kind = config.get("kind", gs.PID)
    ub = _parse_bounds(config.get("bounds"), "certify mode")
    g = _parse_gains(config.get("gains"), kind, "certify mode")
    n = int(config.get("n", 1))
    cert = cert_mod.certify_margin(
        kind,
        g,
        ub,
        n,
        strategy=config.get("strategy"),
        samples=int(config.get("samples", 20_000)),
        safety=float(config.get("safety", 0.2)),
        seed=seed,
    )
    if isinstance(cert, bool):
        payload = {"schur_chain_certified": cert}
        print(json.dumps(payload, indent=2))
        _dump_json(out / "certificate.json", payload)
        return EXIT_OK if cert else EXIT_CHECK_FAILED
    payload = cert.to_json_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    out.mkdir(parents=True, exist_ok=True)
    cert.save(out / "certificate.json")
    return EXIT_OK


def _sim_config_from(config: dict, plant: pm.PlantModel, g: gs.GainVector) -> sim.SimConfig:
    n = plant.n
    y_star = _vector(config.get("y_star", 0.0), n, "simulate mode: y_star")
    want = 2 * n if plant.order == gs.SECOND_ORDER else n
    x0 = _vector(config.get("x0", [0.0] * want), want, "simulate mode: x0")
    return sim.SimConfig(
        plant=plant,
        gains=g,
        y_star=y_star,
        x0=x0,
        t_final=float(config.get("t_final", 30.0)),
        dt_max=float(config.get("dt_max", 0.01)),
        integrator=config.get("integrator", sim.RK45_ADAPTIVE),
        rtol=float(config.get("rtol", 1e-8)),
        atol=float(config.get("atol", 1e-10)),
    )


def mode_simulate(config: dict, out: Path, seed: int, workers: int) -> int:
    plant = _parse_plant(config.get("plant"), "simulate mode")
    ub = (
        _parse_bounds(config["bounds"], "simulate mode")
        if "bounds" in config
        else plant.declared_bounds
    )
    kind = config.get(
        "kind", gs.PI if plant.order == gs.FIRST_ORDER else gs.PID
    )
    if "gains" in config:
        g = _parse_gains(config["gains"], kind, "simulate mode")
    else:
        suggest = config.get("suggest", {})
        g = gs.suggest_gains(
            kind, ub, ki=suggest.get("ki"), margin=float(suggest.get("margin", 0.1))
        )
    cert = None
    if config.get("certify", True):
        cert = cert_mod.certify_margin(
            kind,
            g,
            ub,
            plant.n,
            strategy=config.get("strategy"),
            samples=int(config.get("samples", 20_000)),
            safety=float(config.get("safety", 0.2)),
            seed=seed,
        )
    cfg = _sim_config_from(config, plant, g)
    traj = sim.simulate(cfg, cert=cert)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv")
    summary: dict = {
        "kind": g.kind,
        "gains": {"kp": g.kp, "ki": g.ki, "kd": g.kd},
        "final_error_norm": float(np.linalg.norm(traj.errors[-1])),
        "samples": int(traj.times.size),
    }
    code = EXIT_OK
    if cert is not None:
        audit = sim.envelope_audit(traj)
        monitor = sim.lyapunov_monitor(traj, cert)
        lo, hi = 0.1 * cfg.t_final, 0.9 * cfg.t_final
        try:
            lam_emp, m_emp = sim.fit_decay(traj, (lo, hi))
        except UsageError:
            lam_emp, m_emp = None, None  # signal at the floor: nothing to fit
        summary.update(
            {
                "certificate": cert.to_json_dict(),
                "envelope_pass": audit.passes,
                "min_margin": audit.min_margin,
                "first_violation_time": audit.first_violation_time,
                "v_nonincreasing": monitor.nonincreasing_pass,
                "lambda_emp": lam_emp,
                "M_emp": m_emp,
            }
        )
        if not (audit.passes and monitor.nonincreasing_pass):
            code = EXIT_CHECK_FAILED
    _dump_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return code


def _sweep_cells(config: dict):
    plants = config.get("plants")
    _expect(isinstance(plants, list) and plants, "sweep mode: 'plants' must be a list")
    gains_list = config.get("gain_sets")
    _expect(
        isinstance(gains_list, list) and gains_list,
        "sweep mode: 'gain_sets' must be a list",
    )
    setpoints = config.get("setpoints")
    _expect(
        isinstance(setpoints, list) and setpoints,
        "sweep mode: 'setpoints' must be a list",
    )
    x0s = config.get("x0s", [None])
    _expect(isinstance(x0s, list) and x0s, "sweep mode: 'x0s' must be a list")
    cells = []
    idx = 0
    for ip, pnode in enumerate(plants):
        for ig, gnode in enumerate(gains_list):
            for iy, ynode in enumerate(setpoints):
                for ix, xnode in enumerate(x0s):
                    cells.append((idx, ip, pnode, ig, gnode, ynode, xnode))
                    idx += 1
    return cells


def mode_sweep(config: dict, out: Path, seed: int, workers: int) -> int:
    kind = config.get("kind", gs.PID)
    sim_node = config.get("sim", {})
    cells = _sweep_cells(config)
    plants = [
        _parse_plant(node, f"sweep mode: plants[{i}]")
        for i, node in enumerate(config["plants"])
    ]
    ub = (
        _parse_bounds(config["bounds"], "sweep mode")
        if "bounds" in config
        else plants[0].declared_bounds
    )
    gains = [
        _parse_gains(node, kind, f"sweep mode: gain_sets[{i}]")
        for i, node in enumerate(config["gain_sets"])
    ]
    n = plants[0].n
    for p in plants:
        _expect(p.n == n, "sweep mode: all plants must share the block dimension")

    # one certificate per gain set, seeded by position
    seeds = np.random.SeedSequence(seed).spawn(len(gains))
    certs: list = []
    for i, g in enumerate(gains):
        if not gs.membership(g, ub).member:
            certs.append(None)
            continue
        certs.append(
            cert_mod.certify_margin(
                kind,
                g,
                ub,
                n,
                samples=int(config.get("certify_samples", 20_000)),
                safety=float(config.get("safety", 0.2)),
                seed=int(seeds[i].generate_state(1)[0] % (2**31)),
            )
        )

    t_final = float(sim_node.get("t_final", 30.0))

    def run_cell(cell):
        idx, ip, _, ig, _, ynode, xnode = cell
        plant = plants[ip]
        g = gains[ig]
        row = {
            "cell": idx,
            "plant": plant.family or "custom",
            "kp": g.kp,
            "ki": g.ki,
            "kd": g.kd,
            "y_star": float(np.atleast_1d(ynode)[0]),
            "member": gs.membership(g, ub).member,
            "alpha": "",
            "lambda": "",
            "envelope_pass": "",
            "min_margin": "",
            "lambda_emp": "",
            "error": "",
        }
        if not row["member"]:
            return row
        cert = certs[ig]
        try:
            y_star = _vector(ynode, plant.n, "sweep cell: y_star")
            want = 2 * plant.n if plant.order == gs.SECOND_ORDER else plant.n
            x0 = (
                np.zeros(want)
                if xnode is None
                else _vector(xnode, want, "sweep cell: x0")
            )
            cfg = sim.SimConfig(
                plant=plant,
                gains=g,
                y_star=y_star,
                x0=x0,
                t_final=t_final,
                dt_max=float(sim_node.get("dt_max", 0.01)),
                integrator=sim_node.get("integrator", sim.RK45_ADAPTIVE),
                rtol=float(sim_node.get("rtol", 1e-8)),
                atol=float(sim_node.get("atol", 1e-10)),
            )
            traj = sim.simulate(cfg, cert=cert)
            audit = sim.envelope_audit(traj)
            lam_emp, _ = sim.fit_decay(traj, (0.1 * t_final, 0.9 * t_final))
            row.update(
                {
                    "alpha": repr(cert.alpha),
                    "lambda": repr(cert.lambda_decay),
                    "envelope_pass": audit.passes,
                    "min_margin": repr(audit.min_margin),
                    "lambda_emp": repr(lam_emp),
                }
            )
        except PidcertError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]
    rows.sort(key=lambda r: r["cell"])

    out.mkdir(parents=True, exist_ok=True)
    fieldnames = [
        "cell",
        "plant",
        "kp",
        "ki",
        "kd",
        "y_star",
        "member",
        "alpha",
        "lambda",
        "envelope_pass",
        "min_margin",
        "lambda_emp",
        "error",
    ]
    judged = [r for r in rows if r["member"]]
    passed = [r for r in judged if r["envelope_pass"] is True and not r["error"]]
    pass_fraction = (len(passed) / len(judged)) if judged else 1.0
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for r in rows:
            writer.writerow(r)
        writer.writerow(
            {k: "" for k in fieldnames} | {"cell": "pass_fraction", "plant": repr(pass_fraction)}
        )
    print(f"sweep: {len(passed)}/{len(judged)} certified cells passed")
    return EXIT_OK if len(passed) == len(judged) else EXIT_CHECK_FAILED


def mode_planar(config: dict, out: Path, seed: int, workers: int) -> int:
    payload: dict = {}
    code = EXIT_OK
    if "necessity" in config:
        node = config["necessity"]
        ub = _parse_bounds(config.get("bounds"), "planar mode")
        g = _parse_gains(config.get("gains"), gs.PI, "planar mode")
        report = planar_pi.necessity_counterexample(
            node.get("case", "ki_zero"), ub, g, float(config.get("y_star", 1.0))
        )
        payload["necessity"] = {
            "case": report.case,
            "e_inf_analytic": report.e_inf_analytic,
            "e_inf_observed": report.e_inf_observed,
            "max_re_eigenvalue": report.max_re_eigenvalue,
            "nonconvergent": report.nonconvergent,
        }
        if not report.nonconvergent:
            code = EXIT_CHECK_FAILED
    else:
        plant = _parse_plant(config.get("plant"), "planar mode")
        g = _parse_gains(config.get("gains"), gs.PI, "planar mode")
        field = planar_pi.PlanarField.build(plant, g, float(config.get("y_star", 0.0)))
        grid = config.get("grid", {})
        report = planar_pi.jacobian_conditions(
            field,
            radius=float(grid.get("radius", 20.0)),
            points=int(grid.get("points", 41)),
        )
        payload["jacobian_conditions"] = {
            "max_trace": report.max_trace,
            "min_det": report.min_det,
            "sufficiency": report.sufficiency,
            "analytic_trace_bound": report.analytic_trace_bound,
            "grid_points": report.grid_points,
        }
        if not report.sufficiency:
            code = EXIT_CHECK_FAILED
    _dump_json(out / "planar.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return code


def mode_verify_class(config: dict, out: Path, seed: int, workers: int) -> int:
    plant = _parse_plant(config.get("plant"), "verify-class mode")
    report = pm.validate_class_membership(
        plant,
        samples=int(config.get("samples", 1000)),
        box_radius=float(config.get("box_radius", 10.0)),
        seed=seed,
    )
    payload = {
        "samples": report.samples,
        "box_radius": report.box_radius,
        "max_norm_jac_x1": report.max_norm_jac_x1,
        "max_norm_jac_x2": report.max_norm_jac_x2,
        "min_sym_jac_u": report.min_sym_jac_u,
        "max_fd_rel_error": report.max_fd_rel_error,
        "declared": {
            "L1": report.declared.L1,
            "L2": report.declared.L2,
            "b_lower": report.declared.b_lower,
            "order": report.declared.order,
        },
        "passes": report.passes,
    }
    _dump_json(out / "validation.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK if report.passes else EXIT_CHECK_FAILED


_MODES = {
    "gains": mode_gains,
    "certify": mode_certify,
    "simulate": mode_simulate,
    "sweep": mode_sweep,
    "planar": mode_planar,
    "verify-class": mode_verify_class,
}


def run(mode: str, config_path: str, seed: int = 0, out_dir: str = "pidcert_out", workers: int = 1) -> int:
    """Execute one mode; returns the process exit code."""
    if mode not in _MODES:
        print(f"error: unknown mode {mode!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(config_path) as fh:
            config = json.load(fh)
    except FileNotFoundError:
        print(f"error: config file not found: {config_path}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON in {config_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not isinstance(config, dict):
        print("error: config root must be a JSON object", file=sys.stderr)
        return EXIT_USAGE
    declared_mode = config.get("mode")
    if declared_mode is not None and declared_mode != mode:
        print(
            f"error: config declares mode {declared_mode!r} but {mode!r} was requested",
            file=sys.stderr,
        )
        return EXIT_USAGE
    try:
        return _MODES[mode](config, Path(out_dir), seed, workers)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PidcertError as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pidcert",
        description="Gain regions, Lyapunov certificates, and closed-loop audits "
        "for uncertain non-affine plants.",
    )
    parser.add_argument("mode", choices=sorted(_MODES))
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument("--seed", type=int, default=0, help="seed for all sampling")
    parser.add_argument("--out", default="pidcert_out", help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="sweep worker limit")
    args = parser.parse_args(argv)
    code = run(args.mode, args.config, seed=args.seed, out_dir=args.out, workers=args.workers)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
