"""Experiment driver: end-to-end runs, diagnostics emission, snapshot
persistence and resume, scattering post-processing, and identity suites.

Outputs land in one directory per run:

    diagnostics.csv    one row per snapshot (17 significant digits)
    summary.json       final conserved-quantity drifts and norm reports
    manifest.json      config, config hash, code version, timings, inventory
    snapshots/*.npz    versioned binary channel snapshots (bit-exact restore)
    plots/*.svg        optional line plot per diagnostic column

Determinism: a config and seed reproduce diagnostics.csv byte for byte on
one platform. A run interrupted between snapshots resumes from the last
snapshot and reproduces the uninterrupted diagnostics to rounding.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__
from .angular import ChannelState, analyze, apply_abs_K_pow, synthesize
from .config import (SimulationConfig, build_basis, build_grid,
                     build_initial_state, build_norm_specs, build_potential,
                     build_quadrature, build_weight, config_hash,
                     config_to_dict, preset)
from .diagnostics import (DiagnosticsSeries, Grid3D, conserved_quantities,
                          cubic_source, hardy_check, lm_monitor,
                          morawetz_residual, scattering_profile,
                          spectrum_probe)
from .evolution import EvolutionState, SolverAbort, Stepper, simulate_channels
from .grids import GridField
from .norms import h1_norm, mixed_norm, smoothing_norm, strichartz_partial
from .svgplot import line_plot_svg

__all__ = ["RunManifest", "run", "simulate", "emit_outputs", "write_snapshot",
           "read_snapshot", "load_trajectory", "scattering_post",
           "identity_checks_suite", "convergence_suite"]

SNAPSHOT_FORMAT = 1


class _StopRun(Exception):
    """Internal: cut a run short after a requested number of snapshots."""


@dataclass
class RunManifest:
    config: dict
    config_hash: str
    code_version: str
    status: str = "incomplete"
    timings: dict = dc_field(default_factory=dict)
    outputs: list = dc_field(default_factory=list)
    warnings: list = dc_field(default_factory=list)
    metadata: dict = dc_field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_snapshot(path: str, state: EvolutionState, cfg_hash: str, index: int):
    tmp = path + ".tmp.npz"
    np.savez(tmp,
             format_version=np.int64(SNAPSHOT_FORMAT),
             t=np.float64(state.t),
             index=np.int64(index),
             psi=state.channels.psi,
             n_r=np.int64(state.channels.grid.n),
             r_max=np.float64(state.channels.grid.r_max),
             two_j_max=np.int64(state.channels.basis.two_j_max),
             quad_degree=np.int64(state.channels.basis.quad.degree),
             config_hash=np.frombuffer(cfg_hash.encode(), dtype=np.uint8))
    os.replace(tmp, path)


def read_snapshot(path: str, grid, basis, cfg_hash: str | None = None):
    with np.load(path) as data:
        if int(data["format_version"]) != SNAPSHOT_FORMAT:
            raise ValueError("unsupported snapshot format")
        stored_hash = data["config_hash"].tobytes().decode()
        if cfg_hash is not None and stored_hash != cfg_hash:
            raise ValueError("snapshot belongs to a different config")
        if (int(data["n_r"]) != grid.n or float(data["r_max"]) != grid.r_max
                or int(data["two_j_max"]) != basis.two_j_max):
            raise ValueError("snapshot grid does not match the config")
        state = EvolutionState(float(data["t"]),
                               ChannelState(data["psi"].copy(), grid, basis))
        return state, int(data["index"])


def load_trajectory(snapdir: str, grid, basis, cfg_hash: str | None = None):
    """Rebuild a Trajectory from the snapshot files of a (possibly resumed) run."""
    from .evolution import Trajectory
    traj = Trajectory()
    for name in sorted(p for p in os.listdir(snapdir) if p.endswith(".npz")):
        state, _ = read_snapshot(os.path.join(snapdir, name), grid, basis, cfg_hash)
        traj.append(state.t, state.channels)
    return traj


def _diagnostic_columns(norm_specs) -> list[str]:
    cols = ["time", "mass", "gamma_charge_re", "gamma_charge_im",
            "beta_pairing_sup", "beta_pairing_l2", "lm_defect",
            "xnorm_strichartz_partial", "xnorm_h1_partial",
            "smoothing_norm", "truncation_loss"]
    cols += [f"norm_{s.name}" for s in norm_specs]
    return cols


def _diagnostics_row(t, state: ChannelState, field: GridField, s_order,
                     weight, norm_specs, trunc_total) -> dict:
    mass, charge = conserved_quantities(field)
    mon = lm_monitor(field)
    weighted = apply_abs_K_pow(state, s_order)
    row = {
        "time": t,
        "mass": mass,
        "gamma_charge_re": charge.real,
        "gamma_charge_im": charge.imag,
        "beta_pairing_sup": mon.chiral_sup,
        "beta_pairing_l2": mon.chiral_l2,
        "lm_defect": mon.defect,
        "xnorm_strichartz_partial": strichartz_partial(state, s_order),
        "xnorm_h1_partial": h1_norm(weighted),
        "smoothing_norm": smoothing_norm(field, weight),
        "truncation_loss": trunc_total,
    }
    for spec in norm_specs:
        row[f"norm_{spec.name}"] = mixed_norm(field, spec)
    return row


def simulate(cfg: SimulationConfig):
    """In-memory run of a config: returns (Trajectory, DiagnosticsSeries).

    The disk-writing front end is ``run``; this entry point serves
    programmatic use and keeps every snapshot in memory.
    """
    cfg.validate()
    grid = build_grid(cfg)
    quad = build_quadrature(cfg)
    basis = build_basis(cfg, quad)
    potential = build_potential(cfg.potential)
    weight = build_weight(cfg.weight)
    norm_specs = build_norm_specs(cfg.norms)
    initial, support = build_initial_state(cfg, grid, basis)
    cfg.wall_guard_check(support)
    stepper = Stepper(grid, basis, potential, nonlinear=cfg.nonlinearity)
    initial, _ = stepper.prepare_initial(initial)
    series = DiagnosticsSeries(_diagnostic_columns(norm_specs))

    def on_snapshot(index, state):
        series.append(_diagnostics_row(state.t, state.channels, state.field(),
                                       cfg.angular_order_s, weight, norm_specs,
                                       stepper.truncation_loss_total))

    traj = simulate_channels(stepper, initial, cfg.dt, cfg.t_final,
                             cfg.snapshot_every, on_snapshot=on_snapshot)
    return traj, series


def run(cfg: SimulationConfig, outdir: str, resume: bool = True,
        svg: bool = False,
        stop_after_snapshots: int | None = None) -> RunManifest:
    """Execute a config end to end; returns the manifest (also written).

    ``stop_after_snapshots`` cuts the run short after that many recorded
    snapshots (used to exercise resume); the partial outputs stay valid.
    """
    cfg.validate()
    os.makedirs(outdir, exist_ok=True)
    snapdir = os.path.join(outdir, "snapshots")
    os.makedirs(snapdir, exist_ok=True)
    chash = config_hash(cfg)
    manifest = RunManifest(config=config_to_dict(cfg), config_hash=chash,
                           code_version=__version__)
    t_start = time.perf_counter()

    if cfg.label == "identity-checks":
        results = identity_checks_suite()
        _atomic_write(os.path.join(outdir, "identities.json"),
                      json.dumps(results, indent=2))
        manifest.status = "complete"
        manifest.outputs.append("identities.json")
        manifest.timings["total_s"] = time.perf_counter() - t_start
        _atomic_write(os.path.join(outdir, "manifest.json"), manifest.to_json())
        return manifest
    if cfg.label == "free-convergence":
        results = convergence_suite(cfg)
        _atomic_write(os.path.join(outdir, "convergence.json"),
                      json.dumps(results, indent=2))
        manifest.status = "complete"
        manifest.outputs.append("convergence.json")
        manifest.timings["total_s"] = time.perf_counter() - t_start
        _atomic_write(os.path.join(outdir, "manifest.json"), manifest.to_json())
        return manifest

    grid = build_grid(cfg)
    quad = build_quadrature(cfg)
    basis = build_basis(cfg, quad)
    potential = build_potential(cfg.potential)
    weight = build_weight(cfg.weight)
    norm_specs = build_norm_specs(cfg.norms)
    initial, support = build_initial_state(cfg, grid, basis)
    cfg.wall_guard_check(support)

    stepper = Stepper(grid, basis, potential, nonlinear=cfg.nonlinearity)
    initial, removed = stepper.prepare_initial(initial)
    manifest.metadata["prepared_removed_mass_fraction"] = removed
    columns = _diagnostic_columns(norm_specs)
    series = DiagnosticsSeries(columns)
    csv_path = os.path.join(outdir, "diagnostics.csv")

    start_state = None
    start_index = 0
    existing_rows: list[str] = []
    if resume:
        snaps = sorted(p for p in os.listdir(snapdir) if p.endswith(".npz"))
        if snaps and os.path.exists(csv_path):
            try:
                start_state, last_idx = read_snapshot(
                    os.path.join(snapdir, snaps[-1]), grid, basis, chash)
                with open(csv_path) as fh:
                    lines = fh.read().splitlines()
                if lines and lines[0] == series.csv_header() and len(lines) > last_idx + 1:
                    existing_rows = lines[1:last_idx + 2]
                    start_index = last_idx + 1
                else:
                    start_state = None
            except Exception:
                start_state, start_index, existing_rows = None, 0, []

    csv_fh = open(csv_path, "w")
    csv_fh.write(series.csv_header() + "\n")
    for line in existing_rows:
        csv_fh.write(line + "\n")
        series.rows.append([float(v) for v in line.split(",")])
    csv_fh.flush()

    top_shell_warned = False

    def on_snapshot(index: int, state: EvolutionState):
        nonlocal top_shell_warned
        field = state.field()
        row = _diagnostics_row(state.t, state.channels, field,
                               cfg.angular_order_s, weight, norm_specs,
                               stepper.truncation_loss_total)
        series.append(row)
        csv_fh.write(",".join(series.format_value(row[c]) for c in columns) + "\n")
        csv_fh.flush()
        write_snapshot(os.path.join(snapdir, f"snap_{index:06d}.npz"),
                       state, chash, index)
        # warn when the two highest j-shells carry visible norm (under-resolution)
        kap = np.abs(state.channels.basis.kappas)
        top = kap >= kap.max() - 1
        frac = (np.sum(np.abs(state.channels.psi[top]) ** 2)
                / max(np.sum(np.abs(state.channels.psi) ** 2), 1e-300))
        if frac > 1e-6 and not top_shell_warned:
            manifest.warnings.append(
                f"top two j-shells carry {frac:.2e} of the norm at t = {state.t:.3f}")
            top_shell_warned = True
        if stop_after_snapshots is not None and index + 1 >= stop_after_snapshots:
            raise _StopRun()

    status = "complete"
    try:
        traj = simulate_channels(
            stepper, initial, cfg.dt, cfg.t_final, cfg.snapshot_every,
            on_snapshot=on_snapshot,
            start_state=start_state, start_snapshot_index=start_index)
    except _StopRun:
        status = "interrupted"
        traj = None
    except SolverAbort as exc:
        status = f"aborted: {exc}"
        traj = None
    finally:
        csv_fh.close()

    manifest.status = status
    manifest.outputs.append("diagnostics.csv")

    if status == "complete":
        emit_outputs(series, {"support_radius": support}, outdir,
                     svg=svg, manifest=manifest)
        if cfg.label in ("scattering", "small-data", "lm-large"):
            # rebuild from the snapshot files so resumed runs integrate the
            # Duhamel source over the full trajectory, not the resumed part
            traj = load_trajectory(snapdir, grid, basis, chash)
            sc = scattering_post(cfg, stepper, traj, grid, basis, potential)
            _atomic_write(os.path.join(outdir, "scattering.json"),
                          json.dumps(sc, indent=2))
            manifest.outputs.append("scattering.json")

    manifest.timings["total_s"] = time.perf_counter() - t_start
    _atomic_write(os.path.join(outdir, "manifest.json"), manifest.to_json())
    manifest.outputs.append("manifest.json")
    return manifest


def emit_outputs(series: DiagnosticsSeries, extra: dict, outdir: str,
                 svg: bool = False, manifest: RunManifest | None = None):
    """Summaries plus optional SVG plots; CSV is streamed by the run itself."""
    summary = dict(extra)
    if series.rows:
        mass = series.column("mass")
        summary["mass_drift_rel"] = float(np.abs(mass - mass[0]).max()
                                          / max(mass[0], 1e-300))
        gre = series.column("gamma_charge_re")
        gim = series.column("gamma_charge_im")
        gdrift = np.abs((gre - gre[0]) + 1j * (gim - gim[0]))
        summary["gamma_charge_drift_abs"] = float(gdrift.max())
        summary["gamma_charge_drift_rel"] = float(gdrift.max() / max(mass[0], 1e-300))
        summary["lm_defect_max"] = float(series.column("lm_defect").max())
        summary["beta_pairing_sup_max"] = float(series.column("beta_pairing_sup").max())
        summary["truncation_loss_final"] = float(series.column("truncation_loss")[-1])
    _atomic_write(os.path.join(outdir, "summary.json"), json.dumps(summary, indent=2))
    if manifest is not None:
        manifest.outputs.append("summary.json")
    if svg and series.rows:
        plotdir = os.path.join(outdir, "plots")
        os.makedirs(plotdir, exist_ok=True)
        t = series.column("time")
        for col in series.columns[1:]:
            svg_text = line_plot_svg(t, series.column(col), title=col)
            _atomic_write(os.path.join(plotdir, f"{col}.svg"), svg_text)
            if manifest is not None:
                manifest.outputs.append(f"plots/{col}.svg")


def scattering_post(cfg: SimulationConfig, stepper: Stepper, traj, grid, basis,
                    potential) -> dict:
    """Duhamel tails over dyadic windows for a completed trajectory.

    For data with a large component in E the comparison solution chi is the
    linear flow of its projection; otherwise chi = 0 and the source is the
    plain cubic term.
    """
    from .algebra import project_E
    exact_prop = stepper.exact_linear_propagator()
    if exact_prop is None:
        raise ValueError("scattering post-processing needs V0 of the form c(r) beta")

    times = traj.times
    lm_mode = cfg.initial_data.get("kind") == "lm-profile"
    if lm_mode:
        field0 = synthesize(traj.states[0])
        chi0_vals = project_E(field0.values).parallel
        chi0 = analyze(GridField(chi0_vals, grid, basis.quad), basis)
        v0_state = ChannelState(traj.states[0].psi - chi0.psi, grid, basis)
    else:
        chi0 = None
        v0_state = traj.states[0]

    sources = []
    for t, s in zip(times, traj.states):
        u_field = synthesize(s)
        chi_field = None
        if chi0 is not None:
            chi_t = ChannelState(exact_prop(chi0.psi, t), grid, basis)
            chi_field = synthesize(chi_t)
        sources.append(analyze(cubic_source(u_field, chi_field), basis))

    t_end = times[-1]
    snap_dt = times[1] - times[0] if len(times) > 1 else t_end
    if t_end < 16 * snap_dt:
        raise ValueError(
            "trajectory too sparse for three dyadic Duhamel windows; "
            "lower snapshot_every or extend t_final")
    windows = []
    lo = t_end
    for _ in range(3):
        hi = lo
        lo = hi / 2.0
        windows.append((lo, hi))
    windows = windows[::-1]

    result = scattering_profile(times, sources, v0_state,
                                backward_propagator=exact_prop,
                                windows=windows)
    out = result.to_dict()
    out["lm_mode"] = lm_mode
    return out


def identity_checks_suite(sizes=(32, 64, 128), half_width: float = 2.0,
                          sigmas=(0.0, 0.25, 0.5, 1.0)) -> dict:
    """Morawetz residual refinement study plus Hardy ratios."""
    def gaussian_spinor(pts):
        r2 = np.sum(pts ** 2, axis=-1)
        base = np.exp(-4.0 * r2)
        out = np.empty(pts.shape[:-1] + (4,), dtype=complex)
        out[..., 0] = base
        out[..., 1] = (0.5 + 0.25j) * pts[..., 0] * base
        out[..., 2] = 0.3j * pts[..., 1] * base
        out[..., 3] = (0.2 - 0.1j) * pts[..., 2] * base
        return out

    res_table = []
    for n in sizes:
        g = Grid3D(n=n, half_width=half_width)
        r1, r2 = morawetz_residual(gaussian_spinor,
                                   lambda r: r ** 2 / 2.0,
                                   lambda r: np.ones_like(r),
                                   c=0.3 + 0.7j, grid=g)
        res_table.append({"n": n, "h": g.h, "res1": r1, "res2": r2})
    hs = np.array([row["h"] for row in res_table])
    slope2 = float(np.polyfit(np.log(hs),
                              np.log([row["res2"] for row in res_table]), 1)[0])
    slope1 = float(np.polyfit(np.log(hs),
                              np.log([row["res1"] for row in res_table]), 1)[0])

    hardy = []
    for s in sigmas:
        ratio = hardy_check(lambda r: np.exp(-r ** 2), s)
        hardy.append({"sigma": s, "ratio": ratio, "bound": 2.0 / (s + 1.0),
                      "passed": ratio <= 2.0 / (s + 1.0) + 1e-3})
    return {"morawetz": {"table": res_table, "slope_res1": slope1,
                         "slope_res2": slope2},
            "hardy": hardy}


def convergence_suite(cfg: SimulationConfig,
                      dts=(0.04, 0.02, 0.01, 0.005)) -> dict:
    """Splitting self-convergence: order from successive dt-halvings."""
    grid = build_grid(cfg)
    quad = build_quadrature(cfg)
    basis = build_basis(cfg, quad)
    potential = build_potential(cfg.potential)
    initial, _ = build_initial_state(cfg, grid, basis)

    finals = []
    for dt in dts:
        stepper = Stepper(grid, basis, potential, nonlinear=cfg.nonlinearity)
        prepared, _ = stepper.prepare_initial(initial)
        traj = simulate_channels(stepper, prepared, dt, cfg.t_final,
                                 snapshot_every=max(1, int(round(cfg.t_final / dt))))
        finals.append(traj.states[-1].psi)
    errors = [float(np.sqrt(grid.h * np.sum(np.abs(a - b) ** 2)))
              for a, b in zip(finals, finals[1:])]
    orders = [float(np.log2(e1 / e2)) for e1, e2 in zip(errors, errors[1:])]
    slope = float(np.polyfit(np.log(dts[:-1]), np.log(errors), 1)[0])
    return {"dts": list(dts), "errors": errors, "orders": orders, "slope": slope}
