"""Acceptance suite: every criterion as one test printing one verdict line.

The sweep-backed criteria share a single full-grid run (4 families x 3 sizes
x 4 penetrations x 2 MRAI values x 20 seeds = 1920 fail-over simulations)
executed once per session; hard per-run invariants (loop freedom, blackhole
freedom, oracle-exact hop counts, repetition-free installed expansions) are
enforced inside every run and abort the sweep on violation.
"""

import json
import time

import numpy as np
import pytest

from fastapi.testclient import TestClient

from routesim.controller import (ATTACH, INTRA, SINK, VIRTUAL, AsGraph,
                                 expansion_is_loop_free, shortest_expansions)
from routesim.experiment import (Cell, SweepConfig, build_cell_scenario,
                                 records_to_csv, run_failover, run_sweep,
                                 run_with_commands, summarize)
from routesim.live import bundled_scenario, create_app
from routesim.metrics import forwarding_snapshot
from routesim.oracle import brute_force_expansions, truth_mismatches
from routesim.simcore import usec
from routesim.topology import link_key
from test_controller import random_asgraph

FAMILIES = ("clique", "erdos-renyi", "barabasi-albert", "newman-watts-strogatz")
SWEEP_WALL_BUDGET_S = 600.0


def verdict(name: str, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


@pytest.fixture(scope="session")
def sweep():
    config = SweepConfig()
    t0 = time.perf_counter()
    records = run_sweep(config, workers=1)
    wall = time.perf_counter() - t0
    summaries = summarize(records, expected_runs=config.runs_per_cell)
    stats = {(s.family, s.size, s.penetration, s.mrai_s): s.stats
             for s in summaries}
    return {"config": config, "records": records, "stats": stats, "wall": wall}


def med(stats, family, size, pen, mrai, metric="convergence_time_s"):
    return stats[(family, size, pen, mrai)][metric]["median"]


def iqr(stats, family, size, pen, mrai, metric="convergence_time_s"):
    s = stats[(family, size, pen, mrai)][metric]
    return s["q3"] - s["q1"]


class TestCriterion01GoldenTransform:
    def test_switch_to_as_transformation_golden_case(self):
        from test_controller import TestGoldenTransform
        ctrl = TestGoldenTransform().golden_controller()
        t0 = time.perf_counter()
        graph = ctrl.transform("8.0.10.0/29")
        elapsed_ms = (time.perf_counter() - t0) * 1e3
        expected = AsGraph({1, 2, 3})
        for a, b in [(1, 2), (2, 1), (2, 3), (3, 2)]:
            expected.add_edge(INTRA, a, b)
        expected.add_edge(VIRTUAL, 2, 1, (11,))
        expected.add_edge(ATTACH, 1, SINK, (20, 9))
        ok = graph == expected and elapsed_ms < 1.0
        assert verdict("c01 switch-to-AS golden transform", ok,
                       f"bit-exact={graph == expected}, runtime {elapsed_ms:.3f} ms")


class TestCriterion02LoopFreedom:
    def test_no_loops_no_blackholes_across_sweep(self, sweep):
        records = sweep["records"]
        loops = sum(r.post_convergence_loops for r in records)
        holes = sum(r.blackholes for r in records)
        # expansion repetition-freedom is enforced per run inside the sweep;
        # a violation would have aborted it before we got here
        ok = len(records) == 1920 and loops == 0 and holes == 0
        assert verdict("c02 loop/blackhole freedom", ok,
                       f"{len(records)} runs, {loops} loops, {holes} blackholes")


class TestCriterion03ShortestPathOracle:
    def test_hop_counts_equal_independent_dijkstra(self, sweep):
        # enforced per run during the sweep; re-verify a spread of cells here
        config = sweep["config"]
        mismatched = 0
        checked = 0
        for family in FAMILIES:
            for size, pen, mrai in [(8, 0, 30.0), (16, 50, 30.0), (32, 75, 0.0)]:
                cell = Cell(family, size, pen, mrai)
                scenario, params, seed = build_cell_scenario(config, cell, 7)
                out = run_failover(scenario, params, seed=seed, cell=cell,
                                   check_invariants=False)
                down = {link_key(scenario.client, scenario.primary)}
                mism = truth_mismatches(out.net, down)
                mismatched += len(mism)
                checked += 1
        ok = mismatched == 0 and len(sweep["records"]) == 1920
        assert verdict("c03 shortest-path oracle", ok,
                       f"{checked} re-verified runs + in-run checks on all 1920; "
                       f"{mismatched} mismatches")


class TestCriterion04DijkstraBruteForce:
    def test_1000_random_graphs_exact(self):
        rng = np.random.default_rng(20150801)
        t0 = time.perf_counter()
        bad = 0
        for _ in range(1000):
            graph = random_asgraph(rng, int(rng.integers(2, 7)),
                                   int(rng.integers(0, 4)))
            if shortest_expansions(graph) != brute_force_expansions(graph):
                bad += 1
        wall = time.perf_counter() - t0
        ok = bad == 0 and wall < 30.0
        assert verdict("c04 route search vs brute force", ok,
                       f"1000 graphs, {bad} mismatches, {wall:.1f} s")


class TestCriterion05ConvergenceTrend:
    def test_high_gradient_decrease_with_penetration(self, sweep):
        stats = sweep["stats"]
        failures = []
        for family in FAMILIES:
            for size in (16, 32):
                meds = [med(stats, family, size, p, 30.0) for p in (0, 25, 50, 75)]
                if meds[3] > 0.6 * meds[0]:
                    failures.append(f"{family}-n{size} 75%/0%={meds[3] / meds[0]:.2f}")
                for i in range(3):
                    if meds[i + 1] > meds[i] * 1.05:
                        failures.append(f"{family}-n{size} rise at "
                                        f"{(0, 25, 50, 75)[i + 1]}%")
        runtime_ok = sweep["wall"] < SWEEP_WALL_BUDGET_S
        ok = not failures and runtime_ok
        assert verdict("c05 convergence trend", ok,
                       f"sweep wall {sweep['wall']:.0f} s (budget {SWEEP_WALL_BUDGET_S:.0f}); "
                       + ("monotone, 75% <= 0.6x 0%" if not failures else "; ".join(failures)))


class TestCriterion06VarianceShrink:
    def test_iqr_at_75_within_iqr_at_0(self, sweep):
        stats = sweep["stats"]
        failures = []
        for family in FAMILIES:
            for size in (16, 32):
                i0 = iqr(stats, family, size, 0, 30.0)
                i75 = iqr(stats, family, size, 75, 30.0)
                if i75 > i0:
                    failures.append(f"{family}-n{size} IQR75={i75:.2f} > IQR0={i0:.2f}")
        assert verdict("c06 variance shrink at 75%", not failures,
                       "; ".join(failures) or "IQR shrinks in every 16/32 cell")


class TestCriterion07CliqueWorstCase:
    def test_clique_slowest_at_zero_penetration(self, sweep):
        stats = sweep["stats"]
        failures = []
        for size in (8, 16, 32):
            clique = med(stats, "clique", size, 0, 30.0)
            for family in FAMILIES[1:]:
                other = med(stats, family, size, 0, 30.0)
                if clique < other:
                    failures.append(f"n{size}: {family} {other:.1f}s > clique {clique:.1f}s")
        assert verdict("c07 full-mesh worst case", not failures,
                       "; ".join(failures) or "clique median >= every family at 0%")


class TestCriterion08ChurnTrend:
    def test_churn_drops_and_update_volume_scales(self, sweep):
        stats = sweep["stats"]
        failures = []
        for family in FAMILIES:
            c0 = med(stats, family, 32, 0, 30.0, "churn_rate")
            c75 = med(stats, family, 32, 75, 30.0, "churn_rate")
            if c75 > c0:
                failures.append(f"{family}-n32 churn up {c0:.1f}->{c75:.1f}")
            counts = [med(stats, family, s, 0, 30.0, "update_count")
                      for s in (8, 16, 32)]
            if not counts[0] < counts[1] < counts[2]:
                failures.append(f"{family} volume not increasing {counts}")
        assert verdict("c08 churn trend and scale ordering", not failures,
                       "; ".join(failures) or "churn drops at n32; volume grows 8<16<32")


class TestCriterion09MraiInsensitivity:
    def test_no_withdrawal_is_ever_mrai_delayed(self, sweep):
        config = sweep["config"]
        delayed = 0
        withdrawals = 0
        for family in FAMILIES:
            cell = Cell(family, 16, 25, 30.0)
            scenario, params, seed = build_cell_scenario(config, cell, 11)
            out = run_failover(scenario, params, seed=seed, cell=cell)
            wd = [e for e in out.net.update_log if e[3] == "withdraw"]
            withdrawals += len(wd)
            delayed += sum(1 for e in wd if e[6] == "mrai")
        ok = withdrawals > 0 and delayed == 0
        assert verdict("c09a withdrawals never rate-limited", ok,
                       f"{withdrawals} withdrawals, {delayed} MRAI-delayed")

    def test_median_convergence_within_25_percent_across_mrai(self, sweep):
        stats = sweep["stats"]
        failures = []
        for family in FAMILIES:
            for size in (8, 16, 32):
                for pen in (0, 25, 50, 75):
                    m30 = med(stats, family, size, pen, 30.0)
                    m0 = med(stats, family, size, pen, 0.0)
                    rel = abs(m30 - m0) / m0 if m0 > 0 else float("inf")
                    if rel > 0.25:
                        failures.append(f"{family}-n{size}-p{pen} {rel:.1f}")
        assert verdict(
            "c09b MRAI=30 vs MRAI=0 medians within 25%", not failures,
            f"{len(failures)}/48 cells exceed the bound"
            + (f" (worst e.g. {failures[:3]})" if failures else ""))


class TestCriterion10Determinism:
    def test_repeat_run_byte_identical(self, sweep):
        config = sweep["config"]
        outs = []
        for _ in range(2):
            cell = Cell("newman-watts-strogatz", 16, 50, 30.0)
            scenario, params, seed = build_cell_scenario(config, cell, 2)
            out = run_failover(scenario, params, seed=seed, cell=cell,
                               record_trace=True)
            outs.append((out.record.to_json(), out.sim.trace, out.net.update_log))
        ok = outs[0] == outs[1]
        assert verdict("c10a run repeatability", ok,
                       "record, trace and update log byte-identical")

    def test_sweep_worker_count_independence(self, sweep):
        config = SweepConfig(families=["clique", "barabasi-albert"], sizes=[8],
                             penetrations=[0, 75], mrai_values_s=[0.0, 30.0],
                             runs_per_cell=3)
        serial = records_to_csv(run_sweep(config, workers=1))
        parallel = records_to_csv(run_sweep(config, workers=2))
        ok = serial == parallel
        assert verdict("c10b worker-count independence", ok,
                       f"{serial.count(chr(10)) - 1} records byte-identical across 1 vs 2 workers")


class TestCriterion11FullPenetrationClosedForm:
    def test_convergence_equals_crwi_install_propagation(self, sweep):
        config = sweep["config"]
        results = []
        for family in ("clique", "erdos-renyi"):
            cell = Cell(family, 8, 100, 30.0)
            scenario, params, seed = build_cell_scenario(config, cell, 0)
            out = run_failover(scenario, params, seed=seed, cell=cell)
            closed_form = usec(params.crwi_s) + usec(params.install_s) \
                + config.link_delay_us + config.proc_delay_us
            quantum = config.link_delay_us + config.proc_delay_us
            results.append((family, out.record.convergence_time_us, closed_form))
        ok = all(abs(m - c) <= config.link_delay_us + config.proc_delay_us
                 for _f, m, c in results)
        assert verdict("c11 100% penetration closed form", ok,
                       "; ".join(f"{f}: measured {m / 1e6:.3f}s vs {c / 1e6:.3f}s"
                                 for f, m, c in results))


class TestCriterion12LiveParity:
    def test_scripted_live_session_matches_batch(self):
        prefix = "198.51.100.0/24"
        app = create_app()
        with TestClient(app) as client:
            r = client.post("/sessions", json={"scenario": "clique8-p50",
                                               "speed": 2_000_000.0})
            sid = r.json()["session_id"]
            deadline = time.time() + 30
            while time.time() < deadline:
                status = client.get(f"/sessions/{sid}").json()
                if status["quiescent"] and status["sim_time_us"] > 0:
                    break
                time.sleep(0.02)
            session = app.state.sessions[sid]
            a, b = session.scenario.client, session.scenario.primary
            with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
                ws.receive_text(); ws.receive_text()
                ws.send_text(json.dumps({"id": "t", "action": "toggle_link",
                                         "a": a, "b": b, "up": False}))
                while True:
                    msg = json.loads(ws.receive_text())
                    if msg["type"] == "command_ack":
                        break
            deadline = time.time() + 30
            while time.time() < deadline:
                status = client.get(f"/sessions/{sid}").json()
                if status["quiescent"]:
                    break
                time.sleep(0.02)
            live_tree, live_counts = forwarding_snapshot(session.net, prefix)
            live_updates = len(session.net.update_log)
            commands = list(session.command_log)

        scenario, params = bundled_scenario("clique8-p50")
        net, sim = run_with_commands(scenario, params, commands)
        batch_tree, batch_counts = forwarding_snapshot(net, prefix)
        ok = (live_tree == batch_tree and live_counts == batch_counts
              and live_updates == len(net.update_log)
              and batch_counts["loops"] == 0)
        assert verdict("c12 live/batch parity", ok,
                       f"final trees equal, {live_updates} updates each, "
                       f"{batch_counts['loops']} loops flagged")
