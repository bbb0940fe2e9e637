"""Execute parsed scenarios and emit their data tables and reports.

All tables are comma-separated text with a header row; floats are printed
as shortest round-trip decimals so identical runs produce byte-identical
files.  The trajectory table columns are fixed:

    step,t,n_x,n_y,n_z,omega_x,omega_y,omega_z,constraint_err,jz,stage_cost,value_function

``omega`` is the generator leaving the row's state (absent on the final
row), ``jz`` the discrete momentum (defined on interior rows), and the
last two columns are populated in mpc mode only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ScenarioConfig
from .dynamics import consistent_jet, constraint_drift, continuous_momentum_jz, rk4_integrate
from .lgvi import DiscreteTrajectory, boundary_from_states, solve_bvp
from .mpc import ClosedLoopLog, MpcConfig, descent_violations, run_closed_loop, run_open_loop
from .potentials import ObstacleSpec, potential_value_many
from .sphere import geodesic_distance, unit_vector
from .su2 import EZ, inverse_cayley, rotation_matrix


@dataclass
class RunArtifacts:
    output_dir: str
    tables: dict = field(default_factory=dict)
    report_path: str = ""
    summary: dict = field(default_factory=dict)
    all_converged: bool = True


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_table(path: str, header: list, rows: list) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(v) for v in row) + "\n")


def _write_report(path: str, entries: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        for key, value in entries.items():
            fh.write(f"{key}: {value}\n")


def _trajectory_rows(traj: DiscreteTrajectory, spec: Optional[ObstacleSpec]):
    K = len(traj) - 1
    jz = np.diff(traj.generators, axis=0)[:, 2] / traj.h
    drift = np.abs(np.linalg.norm(traj.bloch, axis=1) - 1.0)
    rows = []
    for k in range(K + 1):
        omega = traj.generators[k] if k < K else (None, None, None)
        rows.append(
            [
                k,
                k * traj.h,
                traj.bloch[k, 0],
                traj.bloch[k, 1],
                traj.bloch[k, 2],
                omega[0],
                omega[1],
                omega[2],
                drift[k],
                jz[k - 1] if 1 <= k <= K - 1 else None,
                None,
                None,
            ]
        )
    return rows


TRAJECTORY_HEADER = [
    "step",
    "t",
    "n_x",
    "n_y",
    "n_z",
    "omega_x",
    "omega_y",
    "omega_z",
    "constraint_err",
    "jz",
    "stage_cost",
    "value_function",
]


def _min_clearance(points: np.ndarray, spec: Optional[ObstacleSpec]) -> Optional[float]:
    if spec is None:
        return None
    return float(
        min(min(geodesic_distance(n, c) for c in spec.centers) for n in points)
    )


def _solve_configured_bvp(cfg: ScenarioConfig):
    spec = cfg.obstacle.to_spec()
    d = cfg.discretization
    h = d.total_time / d.steps
    b = cfg.boundary
    end_velocity = None if b.end_velocity == "free" else np.asarray(b.end_velocity, float)
    boundary = boundary_from_states(
        np.asarray(b.start, float),
        np.asarray(b.start_velocity, float),
        np.asarray(b.end, float),
        end_velocity,
        h,
    )
    return solve_bvp(boundary, d.steps, spec, h), spec, h


def _run_cubic(cfg: ScenarioConfig, out: str) -> RunArtifacts:
    (traj, report), spec, h = _solve_configured_bvp(cfg)
    art = RunArtifacts(output_dir=out, all_converged=report.converged)
    table = os.path.join(out, "trajectory.csv")
    _write_table(table, TRAJECTORY_HEADER, _trajectory_rows(traj, spec))
    art.tables["trajectory"] = table
    clearance = _min_clearance(traj.bloch, spec)
    art.summary = {
        "mode": "cubic",
        "converged": report.converged,
        "iterations": report.iterations,
        "final_residual": repr(report.residual_norm),
        "action": repr(report.action),
        "min_clearance": repr(clearance),
    }
    art.report_path = os.path.join(out, "report.txt")
    _write_report(art.report_path, art.summary)
    return art


def _rk4_companion(traj: DiscreteTrajectory, spec: ObstacleSpec, h: float, T: float):
    # initial jet matching the solved trajectory: exact velocity from the
    # first generator, one-sided differences for the higher derivatives
    b = traj.bloch
    v0 = rotation_matrix(traj.unitaries[0]) @ np.cross(traj.generators[0], EZ)
    a0 = (2 * b[0] - 5 * b[1] + 4 * b[2] - b[3]) / h**2
    j0 = (-2.5 * b[0] + 9 * b[1] - 12 * b[2] + 7 * b[3] - 1.5 * b[4]) / h**3
    jet = consistent_jet(b[0], v0, a0, j0)
    return rk4_integrate(jet, spec, T=T, h=h)


def _run_compare(cfg: ScenarioConfig, out: str) -> RunArtifacts:
    (traj, report), spec, h = _solve_configured_bvp(cfg)
    d = cfg.discretization
    rk = _rk4_companion(traj, spec, h, d.total_time)

    art = RunArtifacts(output_dir=out, all_converged=report.converged)
    table = os.path.join(out, "trajectory.csv")
    _write_table(table, TRAJECTORY_HEADER, _trajectory_rows(traj, spec))
    art.tables["trajectory"] = table

    lgvi_drift = np.abs(np.linalg.norm(traj.bloch, axis=1) - 1.0)
    rk_drift = constraint_drift(rk)
    lgvi_jz = np.diff(traj.generators, axis=0)[:, 2] / h
    rk_jz = np.array([continuous_momentum_jz(s) for s in rk.states])
    rows = []
    for k in range(d.steps + 1):
        rows.append(
            [
                k,
                k * h,
                lgvi_drift[k],
                rk_drift[k],
                lgvi_jz[k - 1] if 1 <= k <= d.steps - 1 else None,
                rk_jz[k],
            ]
        )
    compare_path = os.path.join(out, "compare.csv")
    _write_table(
        compare_path,
        ["step", "t", "lgvi_constraint_err", "rk4_constraint_err", "lgvi_jz", "rk4_jz"],
        rows,
    )
    art.tables["compare"] = compare_path
    art.summary = {
        "mode": "compare",
        "converged": report.converged,
        "iterations": report.iterations,
        "final_residual": repr(report.residual_norm),
        "action": repr(report.action),
        "min_clearance": repr(_min_clearance(traj.bloch, spec)),
        "max_lgvi_drift": repr(float(np.max(lgvi_drift))),
        "max_rk4_drift": repr(float(np.max(rk_drift))),
    }
    art.report_path = os.path.join(out, "report.txt")
    _write_report(art.report_path, art.summary)
    return art


def _mpc_rows(log: ClosedLoopLog, h: float):
    U = log.executed_unitaries
    W = np.einsum("kji,kjl->kil", U[:-1].conj(), U[1:])
    omegas = inverse_cayley(W, h)
    jz = np.diff(omegas, axis=0)[:, 2] / h
    drift = np.abs(np.linalg.norm(log.executed, axis=1) - 1.0)
    T = len(log.executed) - 1
    rows = []
    for k in range(T + 1):
        omega = omegas[k] if k < T else (None, None, None)
        rows.append(
            [
                k,
                k * h,
                log.executed[k, 0],
                log.executed[k, 1],
                log.executed[k, 2],
                omega[0],
                omega[1],
                omega[2],
                drift[k],
                jz[k - 1] if 1 <= k <= T - 1 else None,
                log.stage_costs[k] if k < T else None,
                log.value_function[k] if k < T else None,
            ]
        )
    return rows


def _run_mpc(cfg: ScenarioConfig, out: str, open_loop: bool) -> RunArtifacts:
    spec = cfg.obstacle.to_spec()
    d = cfg.discretization
    mpc_cfg = MpcConfig(
        horizon_steps=d.horizon_steps,
        sample_h=d.sample_h,
        terminal_weight=cfg.mpc.terminal_weight,
        target=np.asarray(cfg.mpc.target, float),
        obstacle=spec,
        total_steps=d.total_steps,
    )
    start = unit_vector(np.asarray(cfg.boundary.start, float))
    runner = run_open_loop if open_loop else run_closed_loop
    log = runner(mpc_cfg, start, cfg.mpc.perturbations)

    art = RunArtifacts(
        output_dir=out, all_converged=all(r.converged for r in log.horizon_reports)
    )
    table = os.path.join(out, "trajectory.csv")
    _write_table(table, TRAJECTORY_HEADER, _mpc_rows(log, d.sample_h))
    art.tables["trajectory"] = table
    violations = descent_violations(log)
    art.summary = {
        "mode": "mpc",
        "loop": "open" if open_loop else "closed",
        "converged": art.all_converged,
        "iterations": sum(r.iterations for r in log.horizon_reports),
        "final_residual": repr(max(r.residual_norm for r in log.horizon_reports)),
        "action": repr(float(log.value_function[0])),
        "min_clearance": repr(_min_clearance(log.executed, spec)),
        "max_descent_violation": repr(float(np.max(violations))),
        "terminal_value": repr(float(log.value_function[-1])),
    }
    art.report_path = os.path.join(out, "report.txt")
    _write_report(art.report_path, art.summary)
    return art


def _run_potential_grid(cfg: ScenarioConfig, out: str) -> RunArtifacts:
    spec = cfg.obstacle.to_spec()
    thetas = np.linspace(0.0, np.pi, cfg.grid.theta_points)
    phis = np.linspace(0.0, 2.0 * np.pi, cfg.grid.phi_points)
    tg, pg = np.meshgrid(thetas, phis, indexing="ij")
    points = np.stack(
        [np.sin(tg) * np.cos(pg), np.sin(tg) * np.sin(pg), np.cos(tg)], axis=-1
    ).reshape(-1, 3)
    values = potential_value_many(spec, points)
    rows = [
        [tg.ravel()[i], pg.ravel()[i], values[i]] for i in range(points.shape[0])
    ]
    art = RunArtifacts(output_dir=out)
    table = os.path.join(out, "potential_grid.csv")
    _write_table(table, ["theta", "phi", "value"], rows)
    art.tables["grid"] = table
    art.summary = {
        "mode": "potential-grid",
        "variant": spec.variant,
        "rows": len(rows),
        "max_value": repr(float(values.max())),
    }
    art.report_path = os.path.join(out, "report.txt")
    _write_report(art.report_path, art.summary)
    return art


def run(cfg: ScenarioConfig, open_loop: bool = False, output_dir: Optional[str] = None) -> RunArtifacts:
    """Execute one scenario; outputs are deterministic for identical inputs."""
    out = output_dir or cfg.output.directory
    os.makedirs(out, exist_ok=True)
    if cfg.mode == "cubic":
        return _run_cubic(cfg, out)
    if cfg.mode == "compare":
        return _run_compare(cfg, out)
    if cfg.mode == "mpc":
        return _run_mpc(cfg, out, open_loop)
    if cfg.mode == "potential-grid":
        return _run_potential_grid(cfg, out)
    raise ValueError(f"unknown mode {cfg.mode!r}")
