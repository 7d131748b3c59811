"""Experiment runners: single cases, convergence sweeps, and mode comparisons.

All runners are pure with respect to the filesystem: they return reports
plus named text artifacts (CSV, VTK), and callers decide where to put them.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel

from . import heat, semidiscrete, vtk_io
from .analytic import ErrorReport, decaying_cosine_exact, error_norm, rod_exact
from .config import CaseConfig
from .mesh import SpatialMesh, extrude, line_mesh, rect_mesh
from .moving import PrescribedMotion, march_moving


@dataclass
class Artifact:
    name: str
    content: str


class MovingReport(BaseModel):
    displacement: tuple[float, float]
    magnitude: float
    expected_magnitude: float
    max_conformity_gap: float
    dt: float
    n_steps: int


@dataclass
class CaseResult:
    config: CaseConfig
    report: ErrorReport | None = None
    moving: MovingReport | None = None
    artifacts: list[Artifact] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


class ConvergenceRow(BaseModel):
    scheme: str
    dt: float  # layer thickness
    error: float
    observed_order: float | None = None


class ModeDiffRow(BaseModel):
    dt: float
    classical_error: float
    flipped_error: float
    difference: float
    max_node_difference: float  # relative to the field scale


def _spatial_mesh(config: CaseConfig) -> SpatialMesh:
    if config.case == "manufactured":
        return line_mesh(config.length, config.nx)
    return rect_mesh(config.length, config.width, config.nx, config.ny)


def _boundary_conditions(config: CaseConfig):
    if config.case == "rod":
        return {
            "left": heat.neumann_flux(1.0),
            "right": heat.adiabatic(),
            "space_bottom": heat.adiabatic(),
            "space_top": heat.adiabatic(),
        }
    return {"left": heat.adiabatic(), "right": heat.adiabatic()}


def _exact_profile(config: CaseConfig):
    if config.case == "rod":
        return lambda xs: rod_exact(xs, config.reference_time)
    return lambda xs: decaying_cosine_exact(xs, config.reference_time, config.length,
                                            config.mode_number, config.alpha)


def _initial_values(config: CaseConfig, mesh: SpatialMesh) -> np.ndarray:
    if config.case == "manufactured":
        k = config.mode_number * np.pi / config.length
        return np.cos(k * mesh.nodes[:, 0])
    return np.zeros(mesh.n_nodes)


def _solve_profile(config: CaseConfig, mesh: SpatialMesh):
    """Nodal solution at the reference time, plus VTK inputs for spacetime runs."""
    material = heat.MaterialParams(config.alpha)
    bcs = _boundary_conditions(config)
    t0 = _initial_values(config, mesh)
    if config.scheme == "spacetime":
        slab = extrude(mesh.nodes, mesh.elements, config.time_layers)
        case = heat.HeatCase(
            slab=slab, dt=config.dt, material=material, bcs=bcs,
            jump_mode=config.jump_mode,
            initial=heat.SlabTrace(t0, np.arange(mesh.n_nodes)),
            tol=config.solver_tol, quad_order=config.quad_order,
        )
        result = heat.march(case, config.n_steps)
        return result.traces[-1].values, result.layer_dt, result
    theta = 1.0 if config.scheme == "implicit_euler" else 0.5
    op = semidiscrete.assemble_spatial(mesh, material, bcs, config.quad_order)
    values = semidiscrete.march_theta(op, t0, config.dt, config.n_steps, theta)
    return values, config.dt, None


def _profile_csv(mesh: SpatialMesh, values, exact_fn) -> str:
    """x, numeric, exact along the bottom spatial row, ordered in x."""
    xs = mesh.nodes[:, 0]
    if mesh.dim == 2:
        ymin = mesh.nodes[:, 1].min()
        row = np.abs(mesh.nodes[:, 1] - ymin) <= 1e-12 * max(1.0, abs(ymin) + 1.0)
    else:
        row = np.ones(xs.shape[0], dtype=bool)
    order = np.argsort(xs[row], kind="stable")
    xs_row = xs[row][order]
    num = np.asarray(values)[row][order]
    ref = np.asarray(exact_fn(xs_row))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "T_numeric", "T_exact"])
    for x, a, b in zip(xs_row, num, ref):
        w.writerow([repr(float(x)), repr(float(a)), repr(float(b))])
    return buf.getvalue()


def _report_csv(config: CaseConfig, report: ErrorReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "scheme", "jump_mode", "nx", "ny", "time_layers",
                "dt_slab", "dt_layer", "n_steps", "norm_variant",
                "window_lo", "window_hi", "reference_time", "error", "n_points"])
    w.writerow([config.case, config.scheme, config.jump_mode, config.nx, config.ny,
                config.time_layers, repr(config.dt), repr(report.dt), config.n_steps,
                report.norm_variant, repr(report.window[0]), repr(report.window[1]),
                repr(config.reference_time), repr(report.error), report.n_points])
    return buf.getvalue()


def run_case(config: CaseConfig) -> CaseResult:
    """Run one configured case end to end; deterministic for a fixed config."""
    notes: list[str] = []
    if config.scheme != "spacetime" and "jump_mode" in config.model_fields_set:
        msg = f"jump_mode is ignored for the {config.scheme} scheme"
        warnings.warn(msg)
        notes.append(msg)

    if config.case == "moving":
        return _run_moving(config, notes)

    mesh = _spatial_mesh(config)
    values, layer_dt, st_result = _solve_profile(config, mesh)
    exact_fn = _exact_profile(config)
    report = error_norm(
        mesh.nodes[:, 0], values, exact_fn,
        window=config.error_window, variant=config.norm_variant,
        dt=layer_dt, scheme=config.scheme,
    )
    artifacts = [
        Artifact("profile.csv", _profile_csv(mesh, values, exact_fn)),
        Artifact("error_report.csv", _report_csv(config, report)),
    ]
    if config.write_vtk and st_result is not None:
        text = vtk_io.write_slab_vtk(
            st_result.final_slab, st_result.final_interval,
            point_scalars={"temperature": st_result.final_solution},
            title=f"{config.case} final slab",
        )
        artifacts.append(Artifact("slab.vtk", text))
    return CaseResult(config=config, report=report, artifacts=artifacts, warnings=notes)


def _run_moving(config: CaseConfig, notes: list[str]) -> CaseResult:
    motion = PrescribedMotion(np.asarray(config.velocity), config.total_time)
    result = march_moving(
        motion, config.n_steps, nx=config.nx, ny=config.ny,
        time_layers=config.time_layers, jump_mode=config.jump_mode,
        size=(config.length, config.width),
        tol=config.solver_tol, quad_order=config.quad_order,
    )
    mean_disp = result.final_displacement.mean(axis=0)
    report = MovingReport(
        displacement=(float(mean_disp[0]), float(mean_disp[1])),
        magnitude=float(result.magnitudes.mean()),
        expected_magnitude=result.expected_magnitude,
        max_conformity_gap=float(max(result.conformity_gaps)),
        dt=config.dt,
        n_steps=config.n_steps,
    )
    slab = result.deformed_slabs[-1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "dx", "dy", "magnitude"])
    top = slab.top_nodes
    for node, disp in zip(top, result.final_displacement):
        w.writerow([repr(float(slab.nodes[node, 0])), repr(float(slab.nodes[node, 1])),
                    repr(float(disp[0])), repr(float(disp[1])),
                    repr(float(np.linalg.norm(disp)))])
    artifacts = [Artifact("displacement.csv", buf.getvalue())]
    if config.write_vtk:
        mags = np.linalg.norm(result.final_field, axis=1)
        text = vtk_io.write_slab_vtk(
            slab, result.final_interval,
            point_scalars={"displacement_magnitude": mags},
            point_vectors={"displacement": result.final_field},
            title="rigid-body movement, final slab",
        )
        artifacts.append(Artifact("moving.vtk", text))
    return CaseResult(config=config, moving=report, artifacts=artifacts, warnings=notes)


def _rows_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        out = []
        for key in header:
            v = getattr(row, key)
            out.append("" if v is None else (repr(v) if isinstance(v, float) else str(v)))
        w.writerow(out)
    return buf.getvalue()


@dataclass
class ConvergenceResult:
    rows: list[ConvergenceRow]
    artifacts: list[Artifact]
    error: str | None = None


def run_convergence(config: CaseConfig, dt_list, schemes) -> ConvergenceResult:
    """Temporal-refinement sweep: one row per (scheme, dt) with observed order.

    dt entries are slab sizes; the reported dt column is the layer
    thickness dt/time_layers. On a failure the rows computed so far are
    still returned (and serialized) together with the error message.
    """
    dt_list = list(dt_list)
    if len(dt_list) < 2:
        raise ValueError("convergence sweep needs at least two dt values")
    rows: list[ConvergenceRow] = []
    failure = None
    header = ["scheme", "dt", "error", "observed_order"]
    for scheme in schemes:
        prev: ConvergenceRow | None = None
        for dt in dt_list:
            try:
                cfg = config.with_overrides(dt=dt, scheme=scheme)
                res = run_case(cfg)
            except Exception as exc:  # partial results are part of the contract
                failure = f"scheme={scheme} dt={dt}: {exc}"
                break
            order = None
            if prev is not None:
                order = float(np.log(prev.error / res.report.error)
                              / np.log(prev.dt / res.report.dt))
            row = ConvergenceRow(scheme=scheme, dt=res.report.dt,
                                 error=res.report.error, observed_order=order)
            rows.append(row)
            prev = row
        if failure:
            break
    return ConvergenceResult(rows, [Artifact("convergence.csv", _rows_csv(rows, header))],
                             failure)


@dataclass
class ModeDiffResult:
    rows: list[ModeDiffRow]
    artifacts: list[Artifact]


def run_mode_diff(config: CaseConfig, dt_list) -> ModeDiffResult:
    """Classical vs flipped on the same mesh: each mode's error and their gap."""
    if config.case == "moving":
        raise ValueError("mode comparison needs a fixed-domain case")
    rows = []
    mesh = _spatial_mesh(config)
    exact_fn = _exact_profile(config)
    for dt in dt_list:
        sols = {}
        layer_dt = None
        for mode in ("classical", "flipped"):
            cfg = config.with_overrides(dt=dt, scheme="spacetime", jump_mode=mode)
            values, layer_dt, _ = _solve_profile(cfg, mesh)
            sols[mode] = values
        err_c = error_norm(mesh.nodes[:, 0], sols["classical"], exact_fn,
                           window=config.error_window, variant=config.norm_variant)
        err_f = error_norm(mesh.nodes[:, 0], sols["flipped"], exact_fn,
                           window=config.error_window, variant=config.norm_variant)
        diff = error_norm(mesh.nodes[:, 0], sols["classical"], sols["flipped"],
                          window=config.error_window, variant=config.norm_variant)
        scale = float(np.max(np.abs(sols["classical"]))) or 1.0
        node_diff = float(np.max(np.abs(sols["classical"] - sols["flipped"]))) / scale
        rows.append(ModeDiffRow(dt=layer_dt, classical_error=err_c.error,
                                flipped_error=err_f.error, difference=diff.error,
                                max_node_difference=node_diff))
    header = ["dt", "classical_error", "flipped_error", "difference", "max_node_difference"]
    return ModeDiffResult(rows, [Artifact("modediff.csv", _rows_csv(rows, header))])
