"""Solver tests.

The boundary-mixing and update rules are checked two ways: against a
plain-Python reference implementation written independently from the
vectorized solver (scalar loops, weights renormalized from the raw
intersection tables, angles recomputed from node coordinates), and against
behavioral invariants (conservation on a closed network, stationarity of an
equilibrium state, queue growth at a red light).
"""
import json
import math

import numpy as np
import pytest

from macrosim.fundamental import ideal_speed, invert_speed
from macrosim.metrics import QueueFnParams, step_metrics
from macrosim.network import turn_angle
from macrosim.signals import IntersectionSignal, Phase, edge_phases, load_config
from macrosim.solver import (
    CflError,
    SimParams,
    SimState,
    SimulationError,
    check_cfl,
    initialize,
    read_speeds_csv,
    run,
    step,
    total_cars,
    virtual_boundaries,
    write_heatmap_csv,
    write_heatmap_pgm,
    write_metrics_json,
)

# ---------------------------------------------------------------- reference


def _reference_boundaries(net, state, phases, params):
    """Scalar re-derivation of the ghost values, kept independent of solver.py."""
    q_in, v_in, rho_out = {}, {}, {}
    inflow = params.entry_inflow or {}

    for eid in net.edge_order:
        sl = net.cell_slice(eid)
        e = net.edges[eid]
        if eid not in net.upstream_of:
            if eid in inflow:
                q_in[eid] = float(inflow[eid])
            else:
                q_in[eid] = float(state.rho[sl.start]) * float(state.v[sl.start]) * e.lanes
            v_in[eid] = float(state.v[sl.start])
        if eid not in net.downstream_of:
            rho_out[eid] = float(state.rho[sl.stop - 1])

    for ix in net.intersections.values():
        def row_total(e_in):
            return sum(w for (a, _), w in ix.turn_weights.items() if a == e_in and w > 0)

        for e_out in ix.outgoing:
            q0 = speed_flux = cap_flux = 0.0
            for e_in in ix.incoming:
                if phases.get(e_in) is Phase.RED:
                    continue
                w = ix.turn_weights.get((e_in, e_out), 0.0)
                if w <= 0:
                    continue
                sl_in = net.cell_slice(e_in)
                q_end = float(state.rho[sl_in.stop - 1]) * float(state.v[sl_in.stop - 1]) * net.edges[e_in].lanes
                part = q_end * (w / row_total(e_in))
                angle = turn_angle(net, e_in, e_out)
                cap = net.edges[e_in].free_flow_speed * (1.0 - math.cos(math.radians(angle))) / 2.0
                q0 += part
                speed_flux += float(state.v[sl_in.stop - 1]) * part
                cap_flux += cap * part
            if q0 > 0.0:
                v0 = min(speed_flux, cap_flux) / q0
            else:
                v0 = float(state.v[net.cell_slice(e_out).start])
            q_in[e_out] = q0
            v_in[e_out] = min(max(v0, 0.0), net.edges[e_out].free_flow_speed)

        for e_in in ix.incoming:
            sl = net.cell_slice(e_in)
            if phases.get(e_in) is Phase.RED:
                if params.red_outflow_density == "jam":
                    rho_out[e_in] = params.jam_density
                else:
                    rho_out[e_in] = float(state.rho[sl.stop - 1])
                continue
            num = den = 0.0
            for e_out in ix.outgoing:
                w = ix.turn_weights.get((e_in, e_out), 0.0)
                if w <= 0:
                    continue
                first = float(state.rho[net.cell_slice(e_out).start])
                num += first * first * w
                den += first * w
            rho_out[e_in] = num / den if den > 0.0 else float(state.rho[sl.stop - 1])

    return q_in, v_in, rho_out


def _reference_step(net, state, vb, phases, params):
    """Scalar re-derivation of one update, cell by cell."""
    rho_new = np.empty_like(state.rho)
    v_new = np.empty_like(state.v)
    dt = params.dt_s
    for eid in net.edge_order:
        e = net.edges[eid]
        sl = net.cell_slice(eid)
        n = sl.stop - sl.start
        dx = e.cell_length
        fd = net.fd_for(eid)
        for i in range(n):
            g = sl.start + i
            rho_i = float(state.rho[g])
            v_i = float(state.v[g])
            if i == 0:
                q_up, v_up = vb.q_in[eid], vb.v_in[eid]
            else:
                q_up = float(state.rho[g - 1]) * float(state.v[g - 1]) * e.lanes
                v_up = float(state.v[g - 1])
            rho_dn = float(state.rho[g + 1]) if i < n - 1 else vb.rho_out[eid]

            r = rho_i - dt / (e.lanes * dx) * (rho_i * v_i * e.lanes - q_up)
            v_eq = fd.v_max * math.exp(-(1.0 / fd.a) * (rho_dn / fd.rho_cr) ** fd.a)
            u = (
                v_i
                - dt / (2.0 * dx) * (v_i * v_i - v_up * v_up)
                + dt / params.relaxation_s * (v_eq - v_i)
                - dt * params.anticipation / (rho_i + params.density_guard) * (rho_dn - rho_i) / dx
            )
            if i == n - 1 and phases.get(eid) is Phase.RED:
                u = 0.0
            rho_new[g] = min(max(r, params.density_floor), params.jam_density)
            v_new[g] = min(max(u, 0.0), e.free_flow_speed)
    return rho_new, v_new


def _random_state(net, seed):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.005, 0.18, net.total_cells)
    v = np.empty(net.total_cells)
    for eid in net.edge_order:
        sl = net.cell_slice(eid)
        v[sl] = rng.uniform(0.0, net.edges[eid].free_flow_speed, sl.stop - sl.start)
    return SimState(rho=rho, v=v, t=0.0, k=0)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("t", [0.0, 15.0])  # group A red, then group B red
def test_boundaries_match_reference_on_cross(cross_net, seed, t):
    config = {"X": IntersectionSignal(red=30, green=30, offset=10)}
    state = _random_state(cross_net, seed)
    phases = edge_phases(cross_net, config, t)
    params = SimParams()
    vb = virtual_boundaries(cross_net, state, phases, params)
    q_ref, v_ref, r_ref = _reference_boundaries(cross_net, state, phases, params)
    assert vb.q_in == pytest.approx(q_ref, abs=1e-12)
    assert vb.v_in == pytest.approx(v_ref, abs=1e-12)
    assert vb.rho_out == pytest.approx(r_ref, abs=1e-12)


@pytest.mark.parametrize("seed", [3, 4])
def test_boundaries_match_reference_on_twolights(twolights_net, fixtures_dir, seed):
    config = load_config(fixtures_dir / "twolights_lights.json")
    state = _random_state(twolights_net, seed)
    for t in (0.0, 31.0):
        phases = edge_phases(twolights_net, config, t)
        for mode in ("jam", "copy"):
            params = SimParams(red_outflow_density=mode)
            vb = virtual_boundaries(twolights_net, state, phases, params)
            q_ref, v_ref, r_ref = _reference_boundaries(twolights_net, state, phases, params)
            assert vb.q_in == pytest.approx(q_ref, abs=1e-12)
            assert vb.v_in == pytest.approx(v_ref, abs=1e-12)
            assert vb.rho_out == pytest.approx(r_ref, abs=1e-12)


@pytest.mark.parametrize("seed", [0, 5])
def test_step_matches_reference(cross_net, ring_net, seed):
    config = {"X": IntersectionSignal(red=30, green=30, offset=10)}
    for net, cfg in ((cross_net, config), (ring_net, None)):
        state = _random_state(net, seed)
        phases = edge_phases(net, cfg, 0.0)
        params = SimParams()
        vb = virtual_boundaries(net, state, phases, params)
        out = step(net, state, vb, phases, params)
        rho_ref, v_ref = _reference_step(net, state, vb, phases, params)
        np.testing.assert_allclose(out.rho, rho_ref, rtol=0, atol=1e-12)
        np.testing.assert_allclose(out.v, v_ref, rtol=0, atol=1e-12)
        assert out.t == state.t + params.dt_s
        assert out.k == state.k + 1
        # input state untouched
        assert state.t == 0.0 and state.k == 0


def test_single_cell_update_by_hand(cross_net):
    """One interior cell of one edge, all terms written out with literals."""
    params = SimParams()
    state = _random_state(cross_net, 9)
    sl = cross_net.cell_slice("n_in")
    state.rho[sl.start:sl.start + 3] = [0.05, 0.04, 0.06]
    state.v[sl.start:sl.start + 3] = [10.0, 8.0, 6.0]
    phases = edge_phases(cross_net, {"X": IntersectionSignal(30, 30, 10)}, 0.0)
    vb = virtual_boundaries(cross_net, state, phases, params)
    out = step(cross_net, state, vb, phases, params)

    # density: 0.04 - (0.5 / 10) * (0.04*8 - 0.05*10) = 0.049
    assert out.rho[sl.start + 1] == pytest.approx(0.049, abs=1e-15)
    # speed: convection + relaxation toward V(0.06) + anticipation on (0.06 - 0.04)
    v_eq = 13.68 * math.exp(-(1 / 1.24) * (0.06 / 0.05) ** 1.24)
    expected = (
        8.0
        - (0.5 / 20.0) * (64.0 - 100.0)
        + 0.5 * (v_eq - 8.0)
        - (0.5 * 7.0 / (0.04 + 0.008)) * (0.06 - 0.04) / 10.0
    )
    assert out.v[sl.start + 1] == pytest.approx(expected, abs=1e-12)


# ------------------------------------------------------------- ghost values


def test_turn_share_and_speed_cap(cross_net):
    """Only n_in green: its end flux splits 0.6/0.25/0.15 and turns are slowed."""
    params = SimParams()
    state = _random_state(cross_net, 2)
    sl = cross_net.cell_slice("n_in")
    state.rho[sl.stop - 1] = 0.05
    state.v[sl.stop - 1] = 10.0
    phases = {"s_in": Phase.RED, "e_in": Phase.RED, "w_in": Phase.RED}
    vb = virtual_boundaries(cross_net, state, phases, params)

    q_end = 0.05 * 10.0
    assert vb.q_in["s_out"] == pytest.approx(q_end * 0.6)
    assert vb.q_in["e_out"] == pytest.approx(q_end * 0.15)
    assert vb.q_in["w_out"] == pytest.approx(q_end * 0.25)
    # straight through keeps the approach speed; a 90 degree turn is capped
    # at half the approach's free-flow speed
    assert vb.v_in["s_out"] == pytest.approx(10.0)
    assert vb.v_in["e_out"] == pytest.approx(13.68 / 2)
    assert vb.v_in["w_out"] == pytest.approx(13.68 / 2)


def test_all_red_outgoing_falls_back_to_first_cell_speed(cross_net):
    params = SimParams()
    state = _random_state(cross_net, 3)
    phases = {e: Phase.RED for e in ("n_in", "s_in", "e_in", "w_in")}
    vb = virtual_boundaries(cross_net, state, phases, params)
    for e_out in ("n_out", "s_out", "e_out", "w_out"):
        sl = cross_net.cell_slice(e_out)
        assert vb.q_in[e_out] == 0.0
        assert vb.v_in[e_out] == pytest.approx(float(state.v[sl.start]))
    for e_in in ("n_in", "s_in", "e_in", "w_in"):
        assert vb.rho_out[e_in] == params.jam_density


def test_red_outflow_copy_mode(cross_net):
    state = _random_state(cross_net, 4)
    phases = {"n_in": Phase.RED}
    vb = virtual_boundaries(cross_net, state, phases, SimParams(red_outflow_density="copy"))
    sl = cross_net.cell_slice("n_in")
    assert vb.rho_out["n_in"] == pytest.approx(float(state.rho[sl.stop - 1]))


def test_downstream_ghost_density_quadratic_mean(cross_net):
    state = _random_state(cross_net, 5)
    firsts = {}
    for e_out in ("e_out", "s_out", "w_out"):
        firsts[e_out] = float(state.rho[cross_net.cell_slice(e_out).start])
    vb = virtual_boundaries(cross_net, state, {}, SimParams())
    w = {"e_out": 0.15, "s_out": 0.6, "w_out": 0.25}
    num = sum(firsts[e] ** 2 * w[e] for e in w)
    den = sum(firsts[e] * w[e] for e in w)
    assert vb.rho_out["n_in"] == pytest.approx(num / den, abs=1e-15)


def test_entry_inflow_overrides_zero_gradient(twolights_net):
    state = _random_state(twolights_net, 6)
    entry = twolights_net.entry_edges[0]
    params = SimParams(entry_inflow={entry: 0.31})
    vb = virtual_boundaries(twolights_net, state, {}, params)
    assert vb.q_in[entry] == 0.31
    other = twolights_net.entry_edges[1]
    sl = twolights_net.cell_slice(other)
    assert vb.q_in[other] == pytest.approx(float(state.rho[sl.start] * state.v[sl.start]))


# ---------------------------------------------------------------- stability


def test_cfl_ratio_of_ring(ring_net):
    report = check_cfl(ring_net, 0.5)
    assert report.ok
    assert report.ratios["re0"] == pytest.approx(13.68 * 0.5 / 10.0)  # 0.684

    report = check_cfl(ring_net, 1.0)
    assert not report.ok
    assert any(eid == "re0" and ratio == pytest.approx(1.368) for eid, ratio in report.violations)

    with pytest.raises(ValueError):
        check_cfl(ring_net, 0.0)


def test_run_refuses_unstable_time_step(ring_net):
    params = SimParams(dt_s=1.0)
    state = initialize(ring_net, {}, params, default_speed=6.0)
    with pytest.raises(CflError, match="stability"):
        run(ring_net, state, None, params, horizon=10.0, warmup=0.0)


def test_step_reports_non_finite_cells(cross_net):
    params = SimParams()
    state = _random_state(cross_net, 7)
    state.v[cross_net.cell_slice("n_in").start] = np.inf
    phases = {}
    vb = virtual_boundaries(cross_net, state, phases, params)
    with np.errstate(invalid="ignore"):
        with pytest.raises(SimulationError, match="edge n_in"):
            step(cross_net, state, vb, phases, params)


# ----------------------------------------------------------- initialization


def test_initialize_is_seeded_and_noise_bounded(ring_net):
    params = SimParams(seed=11, init_noise=0.05)
    s1 = initialize(ring_net, {}, params, default_speed=8.0)
    s2 = initialize(ring_net, {}, params, default_speed=8.0)
    assert np.array_equal(s1.rho, s2.rho) and np.array_equal(s1.v, s2.v)

    s3 = initialize(ring_net, {}, SimParams(seed=12, init_noise=0.05), default_speed=8.0)
    assert not np.array_equal(s1.v, s3.v)

    assert np.all(s1.v >= 8.0 * 0.95 - 1e-12)
    assert np.all(s1.v <= 8.0 * 1.05 + 1e-12)
    # density is the fundamental-diagram inverse of the noisy speed
    fd = ring_net.fd_for("re0")
    np.testing.assert_allclose(ideal_speed(fd, s1.rho), s1.v, rtol=1e-9)


def test_initialize_without_noise_is_exact(ring_net):
    params = SimParams(init_noise=0.0)
    state = initialize(ring_net, {}, params, default_speed=6.0)
    np.testing.assert_allclose(state.v, 6.0, rtol=1e-9)
    fd = ring_net.fd_for("re0")
    np.testing.assert_allclose(state.rho, invert_speed(fd, 6.0), rtol=1e-9)


def test_initialize_per_edge_speeds_and_errors(twolights_net, twolights_speeds):
    speeds, default = twolights_speeds
    params = SimParams(init_noise=0.0)
    state = initialize(twolights_net, speeds, params, default_speed=default)
    for eid in twolights_net.edge_order:
        sl = twolights_net.cell_slice(eid)
        expected = speeds.get(eid, default)
        np.testing.assert_allclose(state.v[sl], expected, rtol=1e-9)

    with pytest.raises(ValueError, match="no observed speed"):
        initialize(twolights_net, {}, params)
    with pytest.raises(ValueError, match="must be in"):
        initialize(twolights_net, {}, params, default_speed=99.0)


# -------------------------------------------------- conservation and rest


def test_closed_ring_conserves_mass_exactly_uniform(ring_net):
    params = SimParams(init_noise=0.0)
    fd = ring_net.fd_for("re0")
    rho0 = 0.05
    state = SimState(
        rho=np.full(ring_net.total_cells, rho0),
        v=np.full(ring_net.total_cells, ideal_speed(fd, rho0)),
    )
    before = total_cars(ring_net, state)
    assert before == pytest.approx(0.05 * 8 * 120.0)
    for _ in range(100):
        phases = {}
        state = step(ring_net, state, virtual_boundaries(ring_net, state, phases, params), phases, params)
    assert total_cars(ring_net, state) == pytest.approx(before, abs=1e-12)


def test_closed_ring_conserves_mass_with_perturbation(ring_net):
    params = SimParams()
    rng = np.random.default_rng(21)
    fd = ring_net.fd_for("re0")
    rho = 0.05 * (1.0 + 0.3 * rng.standard_normal(ring_net.total_cells))
    rho = np.clip(rho, 0.01, 0.15)
    state = SimState(rho=rho, v=ideal_speed(fd, rho))
    before = total_cars(ring_net, state)
    for _ in range(500):
        state = step(ring_net, state, virtual_boundaries(ring_net, state, {}, params), {}, params)
    drift = abs(total_cars(ring_net, state) - before) / before
    assert drift < 1e-9


def test_uniform_equilibrium_is_stationary(ring_net):
    params = SimParams()
    fd = ring_net.fd_for("re0")
    rho0, v0 = 0.05, ideal_speed(fd, 0.05)
    state = SimState(rho=np.full(ring_net.total_cells, rho0), v=np.full(ring_net.total_cells, v0))
    for _ in range(50):
        state = step(ring_net, state, virtual_boundaries(ring_net, state, {}, params), {}, params)
        assert float(np.max(np.abs(state.rho - rho0))) < 1e-12
        assert float(np.max(np.abs(state.v - v0))) < 1e-12


def test_red_light_pins_stop_line_and_grows_queue(cross_net):
    """Group A held red for 59 s: its approaches fill up, then drain on green."""
    config = {"X": IntersectionSignal(red=30, green=30, offset=59)}
    params = SimParams(seed=1)
    state = initialize(cross_net, {}, params, default_speed=8.0)
    sl = cross_net.cell_slice("n_in")

    records = []
    for _ in range(240):  # 120 s
        phases = edge_phases(cross_net, config, state.t)
        state = step(cross_net, state, virtual_boundaries(cross_net, state, phases, params), phases, params)
        records.append((state.t, float(state.v[sl.stop - 1]), float(np.sum(state.rho[sl])) * 10.0))

    by_time = {round(t, 3): (v_stop, mass) for t, v_stop, mass in records}

    # stop line exactly at rest through the whole red interval
    for t, v_stop, _ in records:
        if t <= 59.0 + 1e-9:
            assert v_stop == 0.0

    # vehicles pile up behind the stop line while red, strictly per step
    masses_red = [mass for t, _, mass in records if t <= 30.0 + 1e-9]
    assert all(b > a for a, b in zip(masses_red, masses_red[1:]))

    # green onset at t=59: stop line moves again and the queue drains
    assert by_time[70.0][0] > 1.0
    assert by_time[119.0][1] < by_time[59.0][1]

    # the queue metric sees the same story
    q_red = step_metrics(None, SimState(rho=np.zeros(1), v=np.array([0.0])), QueueFnParams())[1]
    assert q_red == pytest.approx(1.0, abs=1e-6)


# ------------------------------------------------------------------- run()


def test_run_sampling_contract(twolights_net, twolights_speeds, fixtures_dir):
    speeds, default = twolights_speeds
    config = load_config(fixtures_dir / "twolights_lights.json")
    params = SimParams(seed=5)
    state = initialize(twolights_net, speeds, params, default_speed=default)
    result = run(twolights_net, state, config, params, horizon=340.0, warmup=100.0)
    assert result.steps == 680
    assert result.warmup_steps == 200
    assert result.metrics.samples == 480
    assert math.isfinite(result.metrics.avg_speed)
    assert result.final_state.k == 680
    assert result.final_state.t == pytest.approx(340.0)


def test_run_metrics_match_manual_stepping(cross_net):
    config = {"X": IntersectionSignal(red=30, green=30, offset=0)}
    params = SimParams(seed=8)
    state0 = initialize(cross_net, {}, params, default_speed=8.0)

    result = run(cross_net, state0, config, params, horizon=30.0, warmup=10.0)

    state = state0.copy()
    speeds, queues = [], []
    for _ in range(60):
        if state.t >= 10.0 - 1e-9:
            a, q = step_metrics(cross_net, state)
            speeds.append(a)
            queues.append(q)
        phases = edge_phases(cross_net, config, state.t)
        state = step(cross_net, state, virtual_boundaries(cross_net, state, phases, params), phases, params)

    assert result.metrics.samples == len(speeds) == 40
    assert result.metrics.avg_speed == np.mean(speeds)
    assert result.metrics.queue_length == np.mean(queues)
    assert np.array_equal(result.final_state.rho, state.rho)


def test_run_is_deterministic(cross_net):
    config = {"X": IntersectionSignal(red=20, green=20, offset=5)}
    params = SimParams(seed=13)
    state = initialize(cross_net, {}, params, default_speed=8.0)
    r1 = run(cross_net, state, config, params, horizon=50.0, warmup=20.0)
    r2 = run(cross_net, state, config, params, horizon=50.0, warmup=20.0)
    assert r1.metrics == r2.metrics
    assert np.array_equal(r1.final_state.v, r2.final_state.v)


def test_run_probe_snapshots(ring_net):
    params = SimParams(init_noise=0.0)
    state = initialize(ring_net, {}, params, default_speed=6.0)
    result = run(ring_net, state, None, params, horizon=20.0, warmup=0.0, probes=[0.0, 10.0, 20.0])
    assert [s.t for s in result.snapshots] == [0.0, 10.0, 20.0]
    np.testing.assert_array_equal(result.snapshots[0].v, state.v)
    np.testing.assert_array_equal(result.snapshots[-1].v, result.final_state.v)


def test_run_argument_validation(ring_net):
    params = SimParams()
    state = initialize(ring_net, {}, params, default_speed=6.0)
    with pytest.raises(ValueError):
        run(ring_net, state, None, params, horizon=0.0)
    with pytest.raises(ValueError):
        run(ring_net, state, None, params, horizon=10.0, warmup=10.0)


# --------------------------------------------------------------------- I/O


def test_read_speeds_csv(tmp_path):
    path = tmp_path / "init.csv"
    path.write_text("edge_id,speed_mps\na,8.5\n*,6.0\nb,7.25\n")
    speeds, default = read_speeds_csv(path)
    assert speeds == {"a": 8.5, "b": 7.25}
    assert default == 6.0

    bad = tmp_path / "bad.csv"
    bad.write_text("edge,speed\na,8\n")
    with pytest.raises(ValueError, match="header"):
        read_speeds_csv(bad)

    bad.write_text("edge_id,speed_mps\na,fast\n")
    with pytest.raises(ValueError, match="line 2"):
        read_speeds_csv(bad)


def test_heatmap_and_metrics_outputs(tmp_path, ring_net):
    params = SimParams(init_noise=0.0)
    state = initialize(ring_net, {}, params, default_speed=6.0)
    result = run(ring_net, state, None, params, horizon=5.0, warmup=0.0, probes=[5.0])
    snap = result.snapshots[0]

    csv_path = tmp_path / "heat.csv"
    write_heatmap_csv(ring_net, snap, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "edge_id,cell_index,rho,v"
    assert len(lines) == 1 + ring_net.total_cells
    first = lines[1].split(",")
    assert first[0] == "re0" and first[1] == "1"
    assert float(first[2]) == pytest.approx(float(snap.rho[0]))

    pgm_path = tmp_path / "heat.pgm"
    write_heatmap_pgm(ring_net, snap, pgm_path)
    pgm = pgm_path.read_text().splitlines()
    assert pgm[0] == "P2"
    assert pgm[1] == "12 8"
    assert pgm[2] == "255"
    grays = [int(x) for row in pgm[3:] for x in row.split()]
    assert all(0 <= g <= 255 for g in grays)
    assert grays[0] == round(float(snap.rho[0]) / 0.2 * 255)

    json_path = tmp_path / "metrics.json"
    write_metrics_json(result, json_path)
    doc = json.loads(json_path.read_text())
    assert doc["avg_speed_mps"] == result.metrics.avg_speed
    assert doc["steps"] == 10


def test_sim_params_validation():
    with pytest.raises(ValueError):
        SimParams(dt_s=0.0)
    with pytest.raises(ValueError):
        SimParams(init_noise=1.0)
    with pytest.raises(ValueError):
        SimParams(density_floor=0.5, jam_density=0.2)
    with pytest.raises(ValueError):
        SimParams(red_outflow_density="purple")
