"""Finite-difference traffic solver on a road network.

State is a per-lane density and a speed for every cell of every edge. Each
step advances density by an upwind flux balance and speed by a convection
term, relaxation toward the equilibrium speed of the local fundamental
diagram, and an anticipation term reacting to downstream density. Edge ends
are closed by virtual boundary values: intersections mix the fluxes of their
incoming edges onto their outgoing edges according to turn weights, red
signals cut an edge out of that mixing and pin its stop-line speed to zero,
and uncoupled ends fall back to zero-gradient extrapolation.

Stability requires v_max * dt / dx <= 1 on every edge; ``run`` refuses to
start otherwise.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .fundamental import FdParams, ideal_speed, invert_speed
from .metrics import CongestionMetrics, QueueFnParams, aggregate, step_metrics
from .network import RoadNetwork, turn_angle, turn_speed_factor
from .signals import Phase, edge_phases


class SimulationError(RuntimeError):
    """Raised when a run cannot start or produces non-finite values."""


class CflError(SimulationError):
    """Raised when the time step violates the stability condition."""


@dataclass(frozen=True)
class SimParams:
    """Solver constants.

    relaxation_s pulls speeds toward the equilibrium curve, anticipation
    (m^2/s) scales the reaction to downstream density, and density_guard
    (cars/m) bounds that reaction in nearly empty cells. Densities live in
    [density_floor, jam_density] per lane. red_outflow_density selects what a
    red stop line shows downstream: "jam" (a full road) or "copy" (the
    edge's own last cell). entry_inflow optionally fixes a constant inflow
    flux (cars/s, all lanes) per entry edge.
    """

    relaxation_s: float = 1.0
    anticipation: float = 7.0
    density_guard: float = 0.008
    dt_s: float = 0.5
    jam_density: float = 0.2
    density_floor: float = 1e-4
    init_noise: float = 0.05
    seed: int = 0
    red_outflow_density: str = "jam"
    entry_inflow: Mapping[str, float] | None = None

    def __post_init__(self):
        positive = ("relaxation_s", "anticipation", "density_guard", "dt_s", "jam_density")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"SimParams.{name} must be > 0")
        if not (0 < self.density_floor < self.jam_density):
            raise ValueError("density_floor must be in (0, jam_density)")
        if not (0 <= self.init_noise < 1):
            raise ValueError("init_noise must be in [0, 1)")
        if self.red_outflow_density not in ("jam", "copy"):
            raise ValueError("red_outflow_density must be 'jam' or 'copy'")


@dataclass
class SimState:
    """Flat per-cell arrays over all edges (see RoadNetwork.cell_slice), plus clock."""

    rho: np.ndarray
    v: np.ndarray
    t: float = 0.0
    k: int = 0

    def copy(self) -> "SimState":
        return SimState(rho=self.rho.copy(), v=self.v.copy(), t=self.t, k=self.k)


@dataclass
class VirtualBoundary:
    """Ghost values closing each edge: inflow flux/speed upstream, density downstream."""

    q_in: dict[str, float]
    v_in: dict[str, float]
    rho_out: dict[str, float]


@dataclass(frozen=True)
class CflReport:
    ok: bool
    ratios: dict[str, float]
    violations: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class Snapshot:
    t: float
    rho: np.ndarray
    v: np.ndarray


@dataclass
class RunResult:
    metrics: CongestionMetrics
    final_state: SimState
    steps: int
    warmup_steps: int
    snapshots: list[Snapshot] = field(default_factory=list)


def check_cfl(net: RoadNetwork, dt: float) -> CflReport:
    """Stability ratios v_max * dt / dx per edge; ok iff none exceeds 1."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    ratios = {}
    violations = []
    for eid in net.edge_order:
        e = net.edges[eid]
        ratio = e.free_flow_speed * dt / e.cell_length
        ratios[eid] = ratio
        if ratio > 1.0 + 1e-12:
            violations.append((eid, ratio))
    return CflReport(ok=not violations, ratios=ratios, violations=tuple(violations))


def _coupling(net: RoadNetwork):
    """Per-intersection lookup tables, cached on the network instance."""
    cache = getattr(net, "_coupling_cache", None)
    if cache is not None:
        return cache
    tables = []
    for ix in net.intersections.values():
        rows: dict[str, dict[str, float]] = {}
        row_sum: dict[str, float] = {}
        for (e_in, e_out), w in ix.turn_weights.items():
            if w <= 0:
                continue
            rows.setdefault(e_in, {})[e_out] = w
            row_sum[e_in] = row_sum.get(e_in, 0.0) + w
        factors = {
            (e_in, e_out): turn_speed_factor(turn_angle(net, e_in, e_out))
            for e_in, outs in rows.items()
            for e_out in outs
        }
        tables.append((ix, rows, row_sum, factors))
    net._coupling_cache = tables
    return tables


def virtual_boundaries(net: RoadNetwork, state: SimState, phases: dict, params: SimParams) -> VirtualBoundary:
    """Ghost values for every edge end from intersection mixing and boundary rules.

    For an outgoing edge, the inflow flux is the turn-weight share of every
    green incoming edge's end flux, and the inflow speed is the flux-weighted
    mean of their end speeds, capped by the turn-geometry speed limit (a
    straight movement passes at most v_max, a 90 degree turn at most half of
    it, a U-turn nothing). For an incoming edge, the downstream ghost density
    is a flux-consistent quadratic mean over the receiving edges' first
    cells; a red incoming edge instead sees jam density (or its own last
    cell, per SimParams.red_outflow_density). Uncoupled ends use zero-gradient
    values, with an optional constant inflow flux on entry edges.
    """
    q_in: dict[str, float] = {}
    v_in: dict[str, float] = {}
    rho_out: dict[str, float] = {}

    inflow = params.entry_inflow or {}
    for eid in net.edge_order:
        sl = net.cell_slice(eid)
        e = net.edges[eid]
        if eid not in net.upstream_of:
            if eid in inflow:
                q_in[eid] = float(inflow[eid])
            else:
                q_in[eid] = float(state.rho[sl.start] * state.v[sl.start] * e.lanes)
            v_in[eid] = float(state.v[sl.start])
        if eid not in net.downstream_of:
            rho_out[eid] = float(state.rho[sl.stop - 1])

    for ix, rows, row_sum, factors in _coupling(net):
        end_flux: dict[str, float] = {}
        end_speed: dict[str, float] = {}
        for e_in in ix.incoming:
            sl = net.cell_slice(e_in)
            e = net.edges[e_in]
            end_flux[e_in] = float(state.rho[sl.stop - 1] * state.v[sl.stop - 1] * e.lanes)
            end_speed[e_in] = float(state.v[sl.stop - 1])

        red = {e_in: phases.get(e_in) is Phase.RED for e_in in ix.incoming}

        for e_out in ix.outgoing:
            q0 = 0.0
            speed_flux = 0.0
            cap_flux = 0.0
            for e_in in ix.incoming:
                if red[e_in] or e_in not in rows:
                    continue
                weight = rows[e_in].get(e_out)
                if weight is None:
                    continue
                share = weight / row_sum[e_in]
                contribution = end_flux[e_in] * share
                q0 += contribution
                speed_flux += end_speed[e_in] * contribution
                cap_flux += net.edges[e_in].free_flow_speed * factors[(e_in, e_out)] * contribution
            sl_out = net.cell_slice(e_out)
            if q0 > 0.0:
                v0 = min(speed_flux, cap_flux) / q0
            else:
                v0 = float(state.v[sl_out.start])
            q_in[e_out] = q0
            v_in[e_out] = min(max(v0, 0.0), net.edges[e_out].free_flow_speed)

        for e_in in ix.incoming:
            sl = net.cell_slice(e_in)
            if red[e_in]:
                if params.red_outflow_density == "jam":
                    rho_out[e_in] = params.jam_density
                else:
                    rho_out[e_in] = float(state.rho[sl.stop - 1])
                continue
            num = 0.0
            den = 0.0
            for e_out, w in rows.get(e_in, {}).items():
                first = float(state.rho[net.cell_slice(e_out).start])
                num += first * first * w
                den += first * w
            rho_out[e_in] = num / den if den > 0.0 else float(state.rho[sl.stop - 1])

    return VirtualBoundary(q_in=q_in, v_in=v_in, rho_out=rho_out)


def step(net: RoadNetwork, state: SimState, vb: VirtualBoundary, phases: dict, params: SimParams) -> SimState:
    """Advance one time step; does not mutate ``state``.

    Order within the step: densities from the flux balance, speeds from
    convection + relaxation + anticipation, then red stop lines are pinned to
    zero speed, then both fields are clamped (density into
    [density_floor, jam_density], speed into [0, v_max]). Non-finite values
    abort with the offending edge and cell.
    """
    dt = params.dt_s
    rho_new = np.empty_like(state.rho)
    v_new = np.empty_like(state.v)

    for eid in net.edge_order:
        e = net.edges[eid]
        sl = net.cell_slice(eid)
        rho = state.rho[sl]
        v = state.v[sl]
        dx = e.cell_length
        fd = net.fd_for(eid)

        q = rho * v * e.lanes
        q_up = np.concatenate(([vb.q_in[eid]], q[:-1]))
        r_next = rho - (dt / (e.lanes * dx)) * (q - q_up)

        v_up = np.concatenate(([vb.v_in[eid]], v[:-1]))
        rho_dn = np.concatenate((rho[1:], [vb.rho_out[eid]]))
        v_eq = ideal_speed(fd, rho_dn)
        u_next = (
            v
            - (dt / (2.0 * dx)) * (v * v - v_up * v_up)
            + (dt / params.relaxation_s) * (v_eq - v)
            - (dt * params.anticipation / (rho + params.density_guard)) * (rho_dn - rho) / dx
        )

        if phases.get(eid) is Phase.RED:
            u_next[-1] = 0.0

        finite = np.isfinite(r_next) & np.isfinite(u_next)
        if not np.all(finite):
            cell = int(np.argmin(finite)) + 1
            raise SimulationError(
                f"non-finite state on edge {eid} cell {cell} at step {state.k + 1} (t={state.t + dt:g} s)"
            )

        rho_new[sl] = np.clip(r_next, params.density_floor, params.jam_density)
        v_new[sl] = np.clip(u_next, 0.0, e.free_flow_speed)

    return SimState(rho=rho_new, v=v_new, t=state.t + dt, k=state.k + 1)


def initialize(
    net: RoadNetwork,
    observed: Mapping[str, float],
    params: SimParams,
    default_speed: float | None = None,
    fd: Mapping[str, FdParams] | None = None,
) -> SimState:
    """Initial state from per-edge observed speeds.

    Every cell gets the edge's observed speed with multiplicative uniform
    noise of amplitude params.init_noise (seeded by params.seed, drawn in
    edge-id order, so equal seeds give bit-identical states). Densities are
    the fundamental-diagram inverse of the noisy speeds, clamped into the
    admissible range. ``fd`` may override the per-edge curve.
    """
    rng = np.random.default_rng(params.seed)
    rho = np.empty(net.total_cells)
    v = np.empty(net.total_cells)
    for eid in net.edge_order:
        e = net.edges[eid]
        speed = observed.get(eid, default_speed)
        if speed is None:
            raise ValueError(f"no observed speed for edge {eid} and no default_speed given")
        if not (0.0 < speed <= e.free_flow_speed):
            raise ValueError(
                f"observed speed for edge {eid} must be in (0, {e.free_flow_speed}], got {speed}"
            )
        fd_e = net.fd_for(eid) if fd is None or eid not in fd else fd[eid]
        noise = rng.uniform(-params.init_noise, params.init_noise, e.cell_count)
        cells = np.clip(speed * (1.0 + noise), 1e-9, e.free_flow_speed)
        sl = net.cell_slice(eid)
        v[sl] = cells
        rho[sl] = np.clip(invert_speed(fd_e, cells), params.density_floor, params.jam_density)
    return SimState(rho=rho, v=v, t=0.0, k=0)


def total_cars(net: RoadNetwork, state: SimState) -> float:
    """Vehicles on the network: per-lane density * cell length * lanes, summed."""
    total = 0.0
    for eid in net.edge_order:
        e = net.edges[eid]
        sl = net.cell_slice(eid)
        total += float(np.sum(state.rho[sl])) * e.cell_length * e.lanes
    return total


def run(
    net: RoadNetwork,
    state0: SimState,
    config: dict | None,
    params: SimParams,
    horizon: float = 340.0,
    warmup: float = 100.0,
    probes=None,
    queue_params: QueueFnParams = QueueFnParams(),
    density_weighted: bool = False,
) -> RunResult:
    """Simulate for ``horizon`` seconds and time-average the congestion metrics.

    Metrics are sampled on the state before each step (t = 0, dt, ...) and
    accumulated once t reaches ``warmup``. ``probes`` is an optional list of
    times at which full (rho, v) snapshots are recorded, taken at the first
    state whose clock reaches each probe. Deterministic: no randomness is
    drawn here, so equal inputs give bit-identical results.
    """
    report = check_cfl(net, params.dt_s)
    if not report.ok:
        worst = ", ".join(f"{eid} (ratio {ratio:.3f})" for eid, ratio in report.violations)
        raise CflError(
            f"time step {params.dt_s}s violates the stability condition v_max*dt/dx <= 1 "
            f"on: {worst}; reduce dt or use longer cells"
        )
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if not (0 <= warmup < horizon):
        raise ValueError("warmup must be in [0, horizon)")

    n_steps = math.ceil(horizon / params.dt_s)
    probe_times = sorted(float(p) for p in probes) if probes else []
    probe_idx = 0
    snapshots: list[Snapshot] = []
    speeds: list[float] = []
    queues: list[float] = []

    state = state0.copy()
    for _ in range(n_steps):
        if state.t >= warmup - 1e-9:
            avg, queue = step_metrics(net, state, queue_params, density_weighted)
            speeds.append(avg)
            queues.append(queue)
        while probe_idx < len(probe_times) and state.t >= probe_times[probe_idx] - 1e-9:
            snapshots.append(Snapshot(t=state.t, rho=state.rho.copy(), v=state.v.copy()))
            probe_idx += 1
        phases = edge_phases(net, config, state.t)
        state = step(net, state, virtual_boundaries(net, state, phases, params), phases, params)

    while probe_idx < len(probe_times) and state.t >= probe_times[probe_idx] - 1e-9:
        snapshots.append(Snapshot(t=state.t, rho=state.rho.copy(), v=state.v.copy()))
        probe_idx += 1

    metrics = aggregate(speeds, queues)
    return RunResult(
        metrics=metrics,
        final_state=state,
        steps=n_steps,
        warmup_steps=n_steps - len(speeds),
        snapshots=snapshots,
    )


def read_speeds_csv(path) -> tuple[dict[str, float], float | None]:
    """Per-edge observed speeds from a CSV with header edge_id,speed_mps.

    A row with edge_id ``*`` sets the default speed for unlisted edges.
    """
    speeds: dict[str, float] = {}
    default = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["edge_id", "speed_mps"]:
            raise ValueError("initial speeds CSV must have header edge_id,speed_mps")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ValueError(f"line {line_no}: expected 2 columns, got {len(row)}")
            try:
                value = float(row[1])
            except ValueError:
                raise ValueError(f"line {line_no}: speed_mps is not a number: {row[1]!r}") from None
            if row[0].strip() == "*":
                default = value
            else:
                speeds[row[0].strip()] = value
    return speeds, default


def write_heatmap_csv(net: RoadNetwork, snapshot: Snapshot, path) -> None:
    """Per-cell density and speed of one snapshot as edge_id,cell_index,rho,v rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["edge_id", "cell_index", "rho", "v"])
        for eid in net.edge_order:
            sl = net.cell_slice(eid)
            for i in range(sl.stop - sl.start):
                writer.writerow([eid, i + 1, repr(float(snapshot.rho[sl.start + i])), repr(float(snapshot.v[sl.start + i]))])


def write_heatmap_pgm(net: RoadNetwork, snapshot: Snapshot, path, jam_density: float = 0.2) -> None:
    """Density snapshot as an ASCII graymap: one row per edge, 255 = jam density."""
    width = max(net.edges[eid].cell_count for eid in net.edge_order)
    lines = [f"P2", f"{width} {len(net.edge_order)}", "255"]
    for eid in net.edge_order:
        sl = net.cell_slice(eid)
        gray = np.rint(np.clip(snapshot.rho[sl] / jam_density, 0.0, 1.0) * 255).astype(int)
        row = list(gray) + [0] * (width - (sl.stop - sl.start))
        lines.append(" ".join(str(g) for g in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_metrics_json(result: RunResult, path) -> None:
    doc = {
        "avg_speed_mps": result.metrics.avg_speed,
        "queue_length": result.metrics.queue_length,
        "steps": result.steps,
        "warmup_steps": result.warmup_steps,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
