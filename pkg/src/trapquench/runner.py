"""Sweep orchestration and deterministic output trees.

Layout of an output directory::

    manifest.txt            run manifest (format_version, resolved config, dims, per-point status)
    summary.txt             one row of scalar results per sweep point
    timings.txt             wall-clock per stage (the only non-reproducible file)
    p000_gAB_0.000000/      one directory per sweep point
        manifest.txt        point manifest (residuals, weight sum, dt, checks)
        echo.txt, entropy.txt, occupations.txt, density_A.txt, density_B.txt,
        subsystem_le.txt, spectrum.txt, spectrum_check.txt
"""

from __future__ import annotations

import logging
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import observables as obs
from .basis import EVEN, ODD, ManyBodyBasis, enumerate_basis
from .config import RunConfig, validate_config
from .hamiltonian import CouplingParams, assemble_block
from .hobasis import DeltaIntegralTable, HoParams
from .quench import (QuenchResult, evolve_state, loschmidt_amplitude, max_dt, prepare_initial,
                     project, time_grid, write_echo)
from .solver import diagonalize
from .textio import atomic_write, fmt, write_columns

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
STATE_CHUNK = 64

_TABLES: dict[tuple, DeltaIntegralTable] = {}


def integral_table(n_max: int, quad_order: int, cache_dir: str = "") -> DeltaIntegralTable:
    key = (n_max, quad_order, cache_dir)
    if key not in _TABLES:
        _TABLES[key] = DeltaIntegralTable.cached(HoParams(n_max, quad_order), cache_dir or None)
    return _TABLES[key]


def point_dirname(index: int, g_AB: float) -> str:
    return f"p{index:03d}_gAB_{g_AB:.6f}"


def resolve_dt(cfg: RunConfig, bandwidth: float) -> float:
    """Explicit dt is checked against the spectrum; ``auto`` takes the largest allowed step
    that divides T into whole steps."""
    limit = max_dt(bandwidth)
    if cfg.dt is None:
        return cfg.T / math.ceil(cfg.T / limit) if math.isfinite(limit) else cfg.T / 1000
    if cfg.dt > limit * (1 + 1e-12):
        raise ValueError(f"dynamics.dt: {cfg.dt} violates (E_max - E_0)*dt <= pi/4 "
                         f"(E_max - E_0 = {bandwidth:.6g}, bound {limit:.6g})")
    return cfg.dt


@dataclass
class PointOutcome:
    index: int
    g_AB: float
    status: str
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    error: str = ""


class _Timer:
    def __init__(self):
        self.stages = {}

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = time.perf_counter() - t0


def _header(cfg: RunConfig, g_AB: float, extra: str = "") -> str:
    lines = ["manifest: manifest.txt", f"g_A = {fmt(cfg.g_A)}", f"g_AB = {fmt(g_AB)}",
             f"n_tot = {cfg.n_tot}", f"n_max = {cfg.n_max}"]
    if extra:
        lines.append(extra)
    return "\n".join(lines)


def _state_observables(cfg, basis, result: QuenchResult, rho_f, point_dir: Path, g_AB: float, checks: dict):
    t_obs = time_grid(cfg.T, cfg.output_dt)
    x = np.asarray(cfg.density_x, dtype=float)
    ent, occ, dens_a, dens_b, le_rows = [], [], [], [], []
    rho_a0 = rho_b0 = None
    worst = dict(rspdm=0.0, density_parity=0.0, density_norm=0.0)
    issues = []
    for s in range(0, len(t_obs), STATE_CHUNK):
        tt = t_obs[s:s + STATE_CHUNK]
        psi = evolve_state(result, tt)
        for j in range(len(tt)):
            ra = obs.rspdm_A(psi[:, j], basis, result.indices)
            rb = obs.rspdm_B(psi[:, j], basis, result.indices)
            if rho_a0 is None:
                rho_a0, rho_b0 = ra.matrix, rb.matrix
            issues.extend(ra.check() + rb.check())
            lam_a = obs.occupations(ra.matrix)
            lam_b = obs.occupations(rb.matrix)
            ent.append((obs.entropy_from_occupations(lam_b), obs.entropy_from_occupations(lam_a),
                        obs.entropy_from_occupations(lam_b)))
            occ.append((lam_a[0], lam_a[1] if len(lam_a) > 1 else 0.0,
                        lam_b[0], lam_b[1] if len(lam_b) > 1 else 0.0))
            if cfg.densities:
                da, db = obs.density(ra, x), obs.density(rb, x)
                for d in (da, db):
                    worst["density_parity"] = max(worst["density_parity"],
                                                  float(np.abs(d.values - d.values[::-1]).max()))
                    worst["density_norm"] = max(worst["density_norm"], abs(d.norm() - d.particles))
                dens_a.append(da.values)
                dens_b.append(db.values)
            if cfg.subsystem_le:
                le_rows.append((obs.uhlmann_fidelity(rho_a0, ra.matrix), obs.uhlmann_fidelity(rho_b0, rb.matrix)))
    checks["rspdm_violations"] = len(issues)
    if issues:
        checks["first_rspdm_violation"] = issues[0]
    checks["density_parity_error"] = worst["density_parity"]
    checks["density_norm_error"] = worst["density_norm"]
    ent = np.array(ent)
    hdr = _header(cfg, g_AB)
    summary = {}
    if cfg.entropy:
        write_columns(point_dir / "entropy.txt", ["t", "S_AB", "S_A", "S_B"],
                      [t_obs, ent[:, 0], ent[:, 1], ent[:, 2]], hdr + "\nentropies in bits")
    lo, hi = obs.PAPER_ENTROPY_WINDOW
    if t_obs[-1] >= hi:
        summary["avg_S_A"] = obs.time_averaged_entropy(t_obs, ent[:, 1])
        summary["avg_S_B"] = obs.time_averaged_entropy(t_obs, ent[:, 2])
    if cfg.natural_orbitals:
        occ = np.array(occ)
        write_columns(point_dir / "occupations.txt", ["t", "lambda0_A", "lambda1_A", "lambda0_B", "lambda1_B"],
                      [t_obs, *occ.T], hdr)
    if cfg.densities:
        names = ["x"] + [f"t={fmt(t)}" for t in t_obs]
        write_columns(point_dir / "density_A.txt", names, [x, *dens_a], hdr + "\nspecies = A, normalized to 2")
        write_columns(point_dir / "density_B.txt", names, [x, *dens_b], hdr + "\nspecies = B, normalized to 1")
    if cfg.subsystem_le:
        lit_a = obs.subsystem_le_literal(rho_a0, rho_f["A"], t_obs)
        lit_b = obs.subsystem_le_literal(rho_b0, rho_f["B"], t_obs)
        le_rows = np.array(le_rows)
        write_columns(point_dir / "subsystem_le.txt", ["t", "L_A_literal", "L_B_literal", "F_A", "F_B"],
                      [t_obs, lit_a, lit_b, le_rows[:, 0], le_rows[:, 1]],
                      hdr + "\nliteral: reduced states as generators; F: Uhlmann fidelity to the t=0 reduced state")
    return summary


def run_point(cfg: RunConfig, index: int, g_AB: float, out_dir) -> PointOutcome:
    """Compute and write every requested output of one sweep point.

    Failures are written to ``error.txt`` in the point directory and reported
    in the outcome; they never touch other points.
    """
    point_dir = Path(out_dir) / point_dirname(index, g_AB)
    point_dir.mkdir(parents=True, exist_ok=True)
    timer = _Timer()
    try:
        with timer.stage("integrals"):
            table = integral_table(cfg.n_max, cfg.quad_order, cfg.integral_cache)
        basis = enumerate_basis(cfg.n_max, cfg.n_tot)
        with timer.stage("initial_state"):
            initial = prepare_initial(basis, cfg.g_A, table)
        with timer.stage("assembly"):
            block = assemble_block(basis, CouplingParams(cfg.g_A, g_AB), table, EVEN)
        with timer.stage("diagonalization"):
            eig = diagonalize(block)
        del block
        result = project(initial, eig)
        checks = {"residual_norm": eig.residual_norm, "orthonormality_error": eig.orthonormality_error,
                  "weight_sum": result.weight_sum}
        dt = resolve_dt(cfg, result.bandwidth)
        summary = {"weight_sum": result.weight_sum, "E_0": result.E_0, "E_final_ground": float(eig.energies[0]),
                   "ground_overlap_sq": float(result.weights[0]), "ipr": result.inverse_participation}
        hdr = _header(cfg, g_AB)
        with timer.stage("loschmidt"):
            t = time_grid(cfg.T, dt)
            nu = loschmidt_amplitude(result, t)
            le = np.abs(nu) ** 2
            k = int(np.argmin(le))
            summary.update(min_L=float(le[k]), t_min_L=float(t[k]))
            checks["L0_error"] = abs(le[0] - 1.0)
            if cfg.loschmidt:
                write_echo(point_dir / "echo.txt", t, nu, hdr + f"\ndt = {fmt(dt)}")
        if cfg.entropy or cfg.densities or cfg.natural_orbitals or cfg.subsystem_le:
            with timer.stage("state_observables"):
                rho_f = {}
                if cfg.subsystem_le:
                    ground = eig.vectors[:, 0].astype(complex)
                    rho_f = {"A": obs.rspdm_A(ground, basis, result.indices).matrix,
                             "B": obs.rspdm_B(ground, basis, result.indices).matrix}
                summary.update(_state_observables(cfg, basis, result, rho_f, point_dir, g_AB, checks))
        if cfg.spectrum or cfg.spectrum_check:
            with timer.stage("spectrum"):
                omega = np.asarray(cfg.omega, dtype=float)
                spec = obs.spectral_eigensum(result, cfg.eta, omega)
                summary["peak_omega"] = spec.peak()
                wide = obs.wide_omega_grid(result, cfg.eta)
                checks["sum_rule"] = obs.spectral_eigensum(result, cfg.eta, wide).sum_rule()
                if cfg.spectrum:
                    write_columns(point_dir / "spectrum.txt", ["omega", "A"], [omega, spec.values],
                                  hdr + f"\neta = {fmt(cfg.eta)}\npeaks at omega = E_0 - E_k")
                if cfg.spectrum_check:
                    a, b, err = obs.spectral_cross_check(result, cfg.eta, omega)
                    checks["spectral_cross_l2"] = err
                    write_columns(point_dir / "spectrum_check.txt", ["omega", "A_eigensum", "A_transform"],
                                  [omega, a.values, b.values], hdr + f"\ntransform window T = {fmt(b.window[1])}")
        lines = [f"format_version = {MANIFEST_VERSION}", f"g_AB = {fmt(g_AB)}", "status = ok",
                 f"dim_even = {len(result.energies)}", f"dt = {fmt(dt)}", f"n_times = {len(t)}"]
        lines += [f"{k} = {fmt(v) if isinstance(v, float) else v}" for k, v in checks.items()]
        lines += [f"{k} = {fmt(v)}" for k, v in summary.items() if k not in checks]
        atomic_write(point_dir / "manifest.txt", "\n".join(lines) + "\n")
        return PointOutcome(index, g_AB, "ok", summary, timer.stages)
    except Exception as exc:  # contained per point
        msg = f"{type(exc).__name__}: {exc}"
        log.error("sweep point %d (g_AB=%s) failed: %s", index, g_AB, msg)
        atomic_write(point_dir / "error.txt", msg + "\n" + traceback.format_exc())
        atomic_write(point_dir / "manifest.txt",
                     f"format_version = {MANIFEST_VERSION}\ng_AB = {fmt(g_AB)}\nstatus = error\nerror = {msg}\n")
        return PointOutcome(index, g_AB, "error", timings=timer.stages, error=msg)


SUMMARY_COLUMNS = ["weight_sum", "E_0", "E_final_ground", "ground_overlap_sq", "ipr", "min_L", "t_min_L",
                   "avg_S_A", "avg_S_B", "peak_omega"]


def _write_run_manifest(cfg: RunConfig, basis: ManyBodyBasis, out: Path, outcomes, state: str):
    lines = [f"format_version = {MANIFEST_VERSION}", f"status = {state}",
             f"dim_total = {len(basis)}", f"dim_even = {len(basis.block(EVEN))}",
             f"dim_odd = {len(basis.block(ODD))}", f"sweep_points = {len(cfg.g_AB)}"]
    for w in cfg.warnings:
        lines.append(f"warning = {w}")
    for o in outcomes:
        entry = f"point.{o.index:03d} = {point_dirname(o.index, o.g_AB)} {o.status}"
        if o.error:
            entry += f" {o.error}"
        lines.append(entry)
    lines += ["", "# resolved configuration", cfg.to_text()]
    atomic_write(out / "manifest.txt", "\n".join(lines))


def run(cfg: RunConfig, out_dir) -> int:
    """Run every sweep point; returns 0 when all points succeed, 3 otherwise."""
    cfg = validate_config(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    basis = enumerate_basis(cfg.n_max, cfg.n_tot)
    _write_run_manifest(cfg, basis, out, [], "running")
    jobs = list(enumerate(cfg.g_AB))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(run_point, cfg, i, g, out) for i, g in jobs]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [run_point(cfg, i, g, out) for i, g in jobs]
    cols = [[o.g_AB for o in outcomes]]
    cols += [[o.summary.get(c, math.nan) for o in outcomes] for c in SUMMARY_COLUMNS]
    write_columns(out / "summary.txt", ["g_AB"] + SUMMARY_COLUMNS, cols,
                  "manifest: manifest.txt\naverages over 1.25 < t/pi < 1.75; nan = not computed")
    timing_lines = ["# wall-clock seconds per stage; not reproducible by design"]
    for o in outcomes:
        for stage, sec in o.timings.items():
            timing_lines.append(f"{point_dirname(o.index, o.g_AB)} {stage} {sec:.3f}")
    atomic_write(out / "timings.txt", "\n".join(timing_lines) + "\n")
    _write_run_manifest(cfg, basis, out, outcomes, "complete")
    return 0 if all(o.status == "ok" for o in outcomes) else 3
