"""Scenario runners behind the ``wqed`` command line.

Each runner takes a resolved :class:`~wqed.config.ScenarioConfig` and
returns a :class:`RunResult` of tables (written as CSV) and scalar
summaries (written as JSON).  Norm and excitation number are checked at
every sample; a violation aborts the run.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analytic import bic_norm, bic_spec, pulse_reflection, two_qubit_rt
from .config import AUTO
from .hamiltonian import QubitSpec, SystemParams, build_control, build_h
from .krylov import PropagatorConfig, evolve_schedule, expmv, expmv_times
from .states import (
    WavepacketSpec,
    gate_fidelity,
    gaussian_packet,
    interaction_picture,
    logical_superposition,
    min_edge_distance,
    photon_density,
    qubit_excitation,
    state_probability,
    total_excitation,
)

CONSERVATION_TOL = 1e-7


class ScenarioError(ValueError):
    pass


class ConservationError(RuntimeError):
    pass


@dataclass
class Table:
    columns: list
    rows: np.ndarray


@dataclass
class RunResult:
    config: object
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    operators: dict = field(default_factory=dict)


def propagator(cfg, sign=1):
    return PropagatorConfig(
        krylov_dim=cfg["propagator.krylov_dim"],
        tol=cfg["propagator.tol"],
        max_substeps=cfg["propagator.max_substeps"],
        sign=sign,
    )


def sample_times(t_max, dt):
    n = int(math.floor(t_max / dt + 1e-9))
    times = [round(i * dt, 12) for i in range(n + 1)]
    if times[-1] < t_max - 1e-12:
        times.append(t_max)
    return times


def check_conservation(v, space, t):
    norm = float(np.linalg.norm(v))
    if abs(norm - 1) >= CONSERVATION_TOL:
        raise ConservationError(f"t={t}: |psi| = {norm!r} deviates from 1 by {abs(norm - 1):.2e}")
    exc = total_excitation(v, space)
    if abs(exc - space.n_exc) >= CONSERVATION_TOL:
        raise ConservationError(
            f"t={t}: photons + excited qubits = {exc!r}, expected {space.n_exc} (off by {abs(exc - space.n_exc):.2e})"
        )
    return abs(norm - 1), abs(exc - space.n_exc)


class _Drift:
    def __init__(self):
        self.norm = 0.0
        self.exc = 0.0

    def check(self, v, space, t):
        dn, de = check_conservation(v, space, t)
        self.norm = max(self.norm, dn)
        self.exc = max(self.exc, de)

    def report(self):
        return {"max_norm_drift": self.norm, "max_excitation_drift": self.exc}


def _qubits(cfg, L):
    omega, gbar, sites = cfg["system.omega"], cfg["system.gbar"], cfg["system.sites"]
    return [QubitSpec(float(o), float(g), int(s)) for o, g, s in zip(omega, gbar, sites)]


def run_scatter_single(cfg):
    """Excitation of one emitter by an ``m``-photon Gaussian pulse."""
    L = cfg["system.L"]
    m = cfg["pulse.photons"]
    qubits = _qubits(cfg, L)
    if len(qubits) != 1:
        raise ScenarioError("scatter-single needs exactly one qubit")
    sigma = cfg["pulse.sigma"]
    k0 = cfg["pulse.k0"]
    if len(k0) != 1:
        raise ScenarioError("scatter-single takes a single pulse.k0")
    k0 = k0[0]
    x0 = cfg["pulse.x0"]
    if x0 == AUTO:
        x0 = float(math.ceil(min_edge_distance(sigma)))
    if x0 >= qubits[0].site:
        raise ScenarioError(f"pulse.x0={x0} must lie left of the qubit at {qubits[0].site}")
    params = SystemParams(L, m, qubits, cfg["system.J"])
    space = params.space()
    H = build_h(params, space=space)
    psi = gaussian_packet(WavepacketSpec(x0, k0, sigma, m), space)
    times = sample_times(cfg["sampling.t_max"], cfg["sampling.dt"])
    states = expmv_times(H, psi, times, propagator(cfg))
    drift = _Drift()
    pe = np.empty(len(times))
    for i, (t, v) in enumerate(zip(times, states)):
        drift.check(v, space, t)
        pe[i] = qubit_excitation(v, space, 0)
    imax = int(np.argmax(pe))
    return RunResult(
        cfg,
        tables={"excitation": Table(["t", "P_e"], np.column_stack([times, pe]))},
        summary={"max_P_e": float(pe[imax]), "t_at_max": float(times[imax]), "photons": m, "x0": x0, **drift.report()},
        info={"basis_dim": space.dim},
        operators={"H": H},
    )


@dataclass
class _ScatterGeometry:
    L: int
    x0: float
    x1: int
    x2: int
    buffer: int
    width: float


def scatter_geometry(cfg):
    sigma = cfg["pulse.sigma"]
    b = cfg["scatter.buffer"]
    width = min_edge_distance(sigma)
    x0 = cfg["pulse.x0"]
    if x0 == AUTO:
        x0 = float(math.ceil(width))
    sites = cfg["system.sites"]
    if sites == AUTO:
        x1 = int(math.ceil(x0 + width + b))
        sites = [x1, x1 + cfg["scatter.R"]]
    x1, x2 = sites
    if x1 - b < width + b:
        raise ScenarioError(f"first qubit at {x1} leaves no room for the reflected pulse; move it right of {width + 2 * b:.0f}")
    L = cfg["system.L"]
    if L == AUTO:
        need = [_min_length(x0, x1, x2, b, width, k0, _t_meas(cfg, x0, x1, k0)) for k0 in cfg["pulse.k0"]]
        L = max(400, max(need))
    return _ScatterGeometry(int(L), float(x0), int(x1), int(x2), int(b), width)


def _t_meas(cfg, x0, x1, k0):
    if cfg["scatter.t_meas"] != AUTO:
        return cfg["scatter.t_meas"]
    # reflected packet centred on the wall: halfway between leaving and re-entering the window
    return (2 * x1 - x0) / (2 * cfg["system.J"] * math.sin(k0))


def _min_length(x0, x1, x2, b, width, k0, t_meas, J=1.0):
    v = 2 * J * math.sin(k0)
    far = x2 + v * t_meas - (x2 - x0) + width
    return int(math.ceil((far + x1 - b) / 2)) + 2


def _check_window(g, k0, t_meas, J):
    v = 2 * J * math.sin(k0)
    if g.x0 + g.width > g.x1 - g.buffer:
        raise ScenarioError("initial pulse overlaps the measurement boundary; move pulse.x0 left or the qubits right")
    u = g.x1 - v * t_meas + (g.x1 - g.x0)
    if u + g.width > g.x1 - g.buffer:
        raise ScenarioError(f"t_meas={t_meas:.1f} is too early for k0={k0:.4f}: reflected pulse not yet clear of the qubits")
    if g.width - u > g.x1 - g.buffer:
        raise ScenarioError(f"t_meas={t_meas:.1f} exceeds the left-wall reflection time; move the qubits right")
    if _min_length(g.x0, g.x1, g.x2, g.buffer, g.width, k0, t_meas, J) > g.L:
        raise ScenarioError(
            f"t_meas={t_meas:.1f} exceeds the right-wall reflection time; use system.L >= "
            f"{_min_length(g.x0, g.x1, g.x2, g.buffer, g.width, k0, t_meas, J)}"
        )


def run_scatter_two(cfg):
    """Reflection of a single-photon pulse from two emitters, numeric vs closed form."""
    g = scatter_geometry(cfg)
    J = cfg["system.J"]
    omega, gbar = cfg["system.omega"], cfg["system.gbar"]
    qubits = [QubitSpec(omega[0], gbar[0], g.x1), QubitSpec(omega[1], gbar[1], g.x2)]
    params = SystemParams(g.L, 1, qubits, J)
    space = params.space()
    H = build_h(params, space=space)
    R = g.x2 - g.x1
    pairs = [(o, gb) for o, gb in zip(omega, gbar)]
    drift = _Drift()
    rows = []
    for k0 in cfg["pulse.k0"]:
        t_meas = _t_meas(cfg, g.x0, g.x1, k0)
        _check_window(g, k0, t_meas, J)
        psi = gaussian_packet(WavepacketSpec(g.x0, k0, cfg["pulse.sigma"], 1), space)
        drift.check(psi, space, 0.0)
        out = expmv(H, psi, t_meas, propagator(cfg))
        drift.check(out, space, t_meas)
        dens = photon_density(out, space)
        refl = float(dens[: g.x1 - g.buffer].sum())
        trans = float(dens[g.x2 + g.buffer + 1 :].sum())
        ana = pulse_reflection(k0, cfg["pulse.sigma"], pairs, R, J)
        rows.append([k0, refl, ana, refl - ana, trans, t_meas])
    rows = np.array(rows)
    kk = np.linspace(0, np.pi, cfg["scatter.k_points"] + 2)[1:-1]
    rk = np.array([[k, abs(c.r) ** 2, abs(c.t) ** 2] for k in kk for c in [two_qubit_rt(k, pairs[0], pairs[1], R, J)]])
    return RunResult(
        cfg,
        tables={
            "reflection": Table(["k0", "R_numeric", "R_analytic", "difference", "T_numeric", "t_meas"], rows),
            "rk": Table(["k", "abs_r2", "abs_t2"], rk),
        },
        summary={
            "max_abs_difference": float(np.max(np.abs(rows[:, 3]))),
            "L": g.L,
            "sites": [g.x1, g.x2],
            "x0": g.x0,
            **drift.report(),
        },
        info={"basis_dim": space.dim},
        operators={"H": H},
    )


def local_maxima(y):
    y = np.asarray(y)
    idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    return idx


def run_bic_evolve(cfg):
    """Two emitters starting doubly excited, photons sharing the two-excitation space."""
    L = cfg["system.L"]
    sites = cfg["system.sites"]
    if len(sites) != 2:
        raise ScenarioError("bic-evolve needs two qubits")
    R = sites[1] - sites[0]
    if cfg["bic.R"] not in (AUTO, R):
        raise ScenarioError(f"bic.R={cfg['bic.R']} disagrees with the qubit separation {R}")
    J = cfg["system.J"]
    spec = bic_spec(R, cfg["bic.parity"], cfg["bic.n"], J)
    omega = cfg["system.omega"]
    if omega == AUTO:
        omega = [spec.omega, spec.omega]
    qubits = [QubitSpec(o, gb, s) for o, gb, s in zip(omega, cfg["system.gbar"], sites)]
    params = SystemParams(L, 2, qubits, J)
    space = params.space()
    H = build_h(params, space=space)
    psi = space.basis_vector(0b11)
    times = sample_times(cfg["sampling.t_max"], cfg["sampling.dt"])
    every = max(1, int(round(cfg["sampling.density_dt"] / cfg["sampling.dt"])))
    states = expmv_times(H, psi, times, propagator(cfg))
    drift = _Drift()
    pops, dens_rows = [], []
    x1, x2 = sites
    for i, (t, v) in enumerate(zip(times, states)):
        drift.check(v, space, t)
        dens = photon_density(v, space)
        n_ph = dens.sum()
        inside = dens[x1 : x2 + 1].sum()
        pops.append([
            t,
            state_probability(v, 0b11, space),
            qubit_excitation(v, space, 0),
            qubit_excitation(v, space, 1),
            n_ph,
            inside / n_ph if n_ph > 0 else 0.0,
        ])
        if i % every == 0:
            dens_rows.append(np.concatenate([[t], dens]))
    pops = np.array(pops)
    maxima = local_maxima(pops[:, 2])
    return RunResult(
        cfg,
        tables={
            "populations": Table(["t", "P_uu", "P_e1", "P_e2", "photons", "inside_fraction"], pops),
            "density": Table(["t"] + [f"n{x}" for x in range(L)], np.array(dens_rows)),
        },
        summary={
            "P_uu_final": float(pops[-1, 1]),
            "P_e1_maxima_times": [float(pops[i, 0]) for i in maxima],
            "n_P_e1_maxima": int(len(maxima)),
            "inside_fraction_at_maxima": [float(pops[i, 5]) for i in maxima],
            "omega": float(omega[0]),
            "k_star": spec.k_star,
            **drift.report(),
        },
        info={"basis_dim": space.dim},
        operators={"H": H},
    )


def gate_params(cfg):
    R, n = cfg["bic.R"], cfg["bic.n"]
    J = cfg["system.J"]
    spec = bic_spec(R, "odd", n, J)
    gap, wall = cfg["layout.gap"], cfg["layout.wall"]
    if gap < 1:
        raise ScenarioError("layout.gap must be positive so the photon clouds stay apart")
    left = wall
    right = left + R + gap
    L = right + R + wall + 1
    if cfg["system.L"] != AUTO:
        if cfg["system.L"] < L:
            raise ScenarioError(f"system.L={cfg['system.L']} too small for the layout (needs {L})")
        L = cfg["system.L"]
    gb = cfg["bic.gbar"]
    qubits = [QubitSpec(spec.omega, gb, s) for s in (left, left + R, right, right + R)]
    return SystemParams(L, 1, qubits, J), spec


def run_gate(cfg):
    """Phase gate on the left logical qubit via a detuning quench."""
    params, spec = gate_params(cfg)
    space = params.space()
    H = build_h(params, space=space)
    H0 = build_h(params, coupling_on=False, space=space)
    dH = build_control(params, cfg["schedule.delta"], cfg["schedule.targets"], space=space)
    t_on, t_off, t_max = cfg["schedule.t_on"], cfg["schedule.t_off"], cfg["sampling.t_max"]
    if not 0 <= t_on <= t_off <= t_max:
        raise ScenarioError(f"need 0 <= t_on <= t_off <= t_max, got {t_on}, {t_off}, {t_max}")
    segments = [(t_on, H), (t_off - t_on, (H + dH).tocsr()), (t_max - t_off, H)]
    psi = logical_superposition(params, spec, space)
    times = sample_times(t_max, cfg["sampling.dt"])
    pc = propagator(cfg)
    drift = _Drift()
    rows = []
    for t, v in evolve_schedule(segments, psi, times, pc):
        drift.check(v, space, t)
        v_int = interaction_picture(v, H0, t, pc)
        F, amps = gate_fidelity(v_int, space, time=t)
        rows.append([t, F, amps.a10.real, amps.a10.imag, amps.a01.real, amps.a01.imag])
    rows = np.array(rows)
    a10 = rows[:, 2] + 1j * rows[:, 3]
    after = rows[:, 0] >= t_off - 1e-12
    return RunResult(
        cfg,
        tables={"fidelity": Table(["t", "F", "a10_re", "a10_im", "a01_re", "a01_im"], rows)},
        summary={
            "F_initial": float(rows[0, 1]),
            "F_after_quench": float(rows[after, 1][0]),
            "F_final": float(rows[-1, 1]),
            "F_ceiling": math.sqrt(2) * bic_norm(spec, cfg["bic.gbar"]),
            "a10_max_excursion": float(np.max(np.abs(a10 - a10[0]))),
            "omega": spec.omega,
            "k_star": spec.k_star,
            "sites": [q.site for q in params.qubits],
            "L": params.L,
            **drift.report(),
        },
        info={"basis_dim": space.dim},
        operators={"H": H, "H0": H0, "dH": dH},
    )


RUNNERS = {
    "scatter-single": run_scatter_single,
    "scatter-two": run_scatter_two,
    "bic-evolve": run_bic_evolve,
    "gate": run_gate,
}


def run(cfg):
    """Dispatch on ``cfg.scenario``; records wall time and thread count."""
    from threadpoolctl import threadpool_limits

    threads = cfg["run.threads"]
    start = time.perf_counter()
    with threadpool_limits(limits=threads):
        result = RUNNERS[cfg.scenario](cfg)
    result.info.update({
        "version": __version__,
        "scenario": cfg.scenario,
        "threads": threads,
        "wall_time_s": round(time.perf_counter() - start, 3),
    })
    return result


def _header(result):
    lines = [f"wqed {result.info['version']}"]
    for key in ("scenario", "basis_dim", "threads", "wall_time_s"):
        lines.append(f"{key}: {result.info[key]}")
    lines.append("config:")
    lines.extend("  " + ln for ln in result.config.to_text().splitlines())
    return lines


def write_outputs(result, outdir):
    """One CSV per table plus ``summary.json``; returns the written paths."""
    os.makedirs(outdir, exist_ok=True)
    header = _header(result)
    paths = []
    for name, table in result.tables.items():
        path = os.path.join(outdir, f"{name}.csv")
        with open(path, "w", newline="") as fh:
            for ln in header:
                fh.write(f"# {ln}\n")
            writer = csv.writer(fh)
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([repr(float(x)) for x in row])
        paths.append(path)
    path = os.path.join(outdir, "summary.json")
    with open(path, "w") as fh:
        json.dump({"info": result.info, "config": result.config.flat(), "summary": result.summary}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(path)
    return paths
