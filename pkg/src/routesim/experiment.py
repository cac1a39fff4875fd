"""Batch harness for the fail-over parameter sweep.

A cell is (family, size, penetration, MRAI); every cell is executed
runs_per_cell times with derived seeds.  Seeds are paired across penetration
and MRAI levels: the topology, provider draw and cluster permutation depend
only on (family, size, run index), so within a run index the only thing a
higher penetration changes is how many ISPs the cluster owns.

Each run enforces the hard invariants (no post-convergence forwarding loops
or blackholes, hop counts equal the independent graph oracle, advertised
controller expansions loop-free); a violation aborts the whole sweep with
the offending run's identity.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .controller import expansion_is_loop_free
from .metrics import (RunRecord, forwarding_snapshot, measure_churn,
                      measure_convergence)
from .network import Network, RunParams
from .oracle import truth_mismatches
from .simcore import RngStreams, SimTime, Simulator, usec
from .topology import (FAMILIES, ConfigError, FailoverScenario, GraphParams,
                       assign_cluster, build_failover_scenario, generate,
                       link_key)

RUN_LIMIT_US = usec(3600.0)


class RunError(RuntimeError):
    pass


class InvariantViolation(RuntimeError):
    """A hard per-run invariant failed; carries run diagnostics."""


@dataclass(frozen=True)
class Cell:
    family: str
    size: int
    penetration: int
    mrai_s: float

    def cell_id(self) -> str:
        return f"{self.family}-n{self.size}-p{self.penetration}-mrai{self.mrai_s:g}"


@dataclass
class SweepConfig:
    families: list = field(default_factory=lambda: list(FAMILIES))
    sizes: list = field(default_factory=lambda: [8, 16, 32])
    penetrations: list = field(default_factory=lambda: [0, 25, 50, 75])
    mrai_values_s: list = field(default_factory=lambda: [0.0, 30.0])
    runs_per_cell: int = 20
    base_seed: int = 20150801
    crwi_s: float = 1.0
    install_s: float = 0.3
    prepend_count: int = 10
    trigger_offset_s: float = 60.0
    with_collector: bool = True
    link_delay_us: int = 2_000
    proc_delay_us: int = 1_000
    detection_delay_us: int = 0
    er_p: float = 0.3
    ba_m: int = 2
    nws_k: int = 4
    nws_p: float = 0.3

    def validate(self) -> None:
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ConfigError(f"unknown family {fam!r}")

    def cells(self) -> list[Cell]:
        return [Cell(f, n, p, m)
                for f in self.families for n in self.sizes
                for p in self.penetrations for m in self.mrai_values_s]

    def graph_params(self, family: str, size: int) -> GraphParams:
        return GraphParams(family, size, p=(self.nws_p if family == "newman-watts-strogatz"
                                            else self.er_p),
                           m=self.ba_m, k=self.nws_k)

    def run_seed(self, family: str, size: int, run_index: int) -> int:
        fam_idx = FAMILIES.index(family)
        return RngStreams(self.base_seed).derive_seed("run", fam_idx, size, run_index)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def build_cell_scenario(config: SweepConfig, cell: Cell,
                        run_index: int) -> tuple[FailoverScenario, RunParams, int]:
    seed = config.run_seed(cell.family, cell.size, run_index)
    topo = generate(config.graph_params(cell.family, cell.size), seed,
                    link_delay_us=config.link_delay_us)
    topo = assign_cluster(topo, cell.penetration, seed)
    scenario = build_failover_scenario(
        topo, seed, prepend_count=config.prepend_count,
        trigger_offset_us=usec(config.trigger_offset_s),
        with_collector=config.with_collector,
        link_delay_us=config.link_delay_us)
    params = RunParams(mrai_s=cell.mrai_s, crwi_s=config.crwi_s,
                       install_s=config.install_s,
                       proc_delay_us=config.proc_delay_us,
                       detection_delay_us=config.detection_delay_us)
    return scenario, params, seed


@dataclass
class RunOutput:
    record: RunRecord
    net: Network
    sim: Simulator
    trigger_us: int
    snapshot: dict


def check_run_invariants(out: RunOutput) -> None:
    """Hard post-convergence checks; raises InvariantViolation."""
    record = out.record
    where = f"run {record.scenario_id} r{record.run_index} seed {record.seed}"
    if record.post_convergence_loops or record.blackholes:
        raise InvariantViolation(
            f"{where}: {record.post_convergence_loops} loops, "
            f"{record.blackholes} blackholes after convergence")
    scenario = out.net.scenario
    down = {link_key(scenario.client, scenario.primary)}
    mismatches = truth_mismatches(out.net, down)
    if mismatches:
        raise InvariantViolation(f"{where}: hop counts differ from the graph "
                                 f"oracle: {mismatches[:5]}")
    controller = out.net.controller
    if controller is not None:
        for prefix, routes in controller.installed.items():
            for asn, (cost, tail) in routes.items():
                if not expansion_is_loop_free((asn,) + tail):
                    raise InvariantViolation(
                        f"{where}: installed expansion for AS{asn} -> {prefix} "
                        f"revisits an ASN: {(asn,) + tail}")


def run_failover(scenario: FailoverScenario, params: RunParams, *, seed: int,
                 scenario_id: str = "adhoc", cell: Cell | None = None,
                 run_index: int = 0, record_trace: bool = False,
                 check_invariants: bool = True,
                 extra_commands: list | None = None) -> RunOutput:
    """Converge, fail the primary link, converge again, measure.

    ``extra_commands``: optional (offset_us_after_initial_quiescence, a, b, up)
    tuples injected alongside the trigger (live-mode replay uses this).
    """
    sim = Simulator(record_trace=record_trace)
    net = Network(scenario, params, sim)
    net.start()
    first = sim.run_until_quiescent(RUN_LIMIT_US)
    if first.limit_hit:
        raise RunError(f"{scenario_id}: initial convergence exceeded the limit")

    trigger = first.quiescent_at + scenario.trigger_offset_us
    net.schedule_link_command(trigger, scenario.client, scenario.primary, False)
    for offset, a, b, up in (extra_commands or []):
        net.schedule_link_command(first.quiescent_at + offset, a, b, up)
    second = sim.run_until_quiescent(trigger + RUN_LIMIT_US)
    if second.limit_hit:
        raise RunError(f"{scenario_id}: fail-over did not quiesce")

    duration = measure_convergence(net, trigger)
    count, rate, zero = measure_churn(net, trigger, duration)
    snapshot, verdicts = forwarding_snapshot(net, scenario.prefix)
    cell = cell or Cell("adhoc", len(scenario.topology.isp_nodes()), 0, params.mrai_s)
    record = RunRecord(
        scenario_id=scenario_id, family=cell.family, size=cell.size,
        penetration=cell.penetration, mrai_s=cell.mrai_s, run_index=run_index,
        seed=seed, trigger_time_us=trigger, convergence_time_us=duration,
        update_count=count, churn_rate=round(rate, 6), zero_duration=zero,
        post_convergence_loops=verdicts["loops"], blackholes=verdicts["blackholes"],
        reachable_fraction=round(verdicts["reachable_fraction"], 6))
    out = RunOutput(record, net, sim, trigger, snapshot)
    if check_invariants:
        check_run_invariants(out)
    return out


def run_with_commands(scenario: FailoverScenario, params: RunParams,
                      commands: list[tuple[int, int, int, bool]],
                      limit_us: SimTime | None = None) -> tuple[Network, Simulator]:
    """Batch replay of an interactive session: run from t=0 with link
    commands injected at absolute sim times, then run to quiescence."""
    sim = Simulator()
    net = Network(scenario, params, sim)
    net.start()
    for t, a, b, up in commands:
        net.schedule_link_command(t, a, b, up)
    horizon = max([t for t, *_ in commands], default=0) + RUN_LIMIT_US
    result = sim.run_until_quiescent(limit_us if limit_us is not None else horizon)
    if result.limit_hit:
        raise RunError("replay did not quiesce within the limit")
    return net, sim


def run_cell_once(config: SweepConfig, cell: Cell, run_index: int,
                  check_invariants: bool = True) -> RunRecord:
    scenario, params, seed = build_cell_scenario(config, cell, run_index)
    out = run_failover(scenario, params, seed=seed, scenario_id=cell.cell_id(),
                       cell=cell, run_index=run_index,
                       check_invariants=check_invariants)
    return out.record


def _worker(args) -> dict:
    config_dict, cell_tuple, run_index = args
    config = SweepConfig.from_dict(config_dict)
    record = run_cell_once(config, Cell(*cell_tuple), run_index)
    return record.to_dict()


def run_sweep(config: SweepConfig, workers: int = 1) -> list[RunRecord]:
    """Execute every cell runs_per_cell times; deterministic given the base
    seed and independent of the worker count (records are sorted before any
    aggregation)."""
    config.validate()
    tasks = [(config.to_dict(), (c.family, c.size, c.penetration, c.mrai_s), idx)
             for c in config.cells() for idx in range(config.runs_per_cell)]
    if workers <= 1:
        dicts = [_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            dicts = list(pool.map(_worker, tasks, chunksize=16))
    records = [RunRecord.from_dict(d) for d in dicts]
    records.sort(key=lambda r: (r.scenario_id, r.run_index))
    return records


# ------------------------------------------------------------- summaries

SUMMARY_METRICS = ("convergence_time_s", "churn_rate", "update_count")
SUMMARY_STATS = ("min", "q1", "median", "q3", "max")


@dataclass
class CellSummary:
    cell_id: str
    family: str
    size: int
    penetration: int
    mrai_s: float
    runs: int
    stats: dict  # metric -> {statistic -> value}


def _five_numbers(values) -> dict:
    arr = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(arr, [25, 50, 75], method="linear")
    return {"min": float(arr.min()), "q1": float(q1), "median": float(med),
            "q3": float(q3), "max": float(arr.max())}


def summarize(records: list[RunRecord],
              expected_runs: int | None = None) -> list[CellSummary]:
    """Five-number summaries per cell (linear-interpolation quartiles).

    Incomplete cells are an error listing the missing run indices.
    """
    if not records:
        raise ConfigError("no records to summarize")
    by_cell: dict[str, list[RunRecord]] = {}
    for rec in records:
        by_cell.setdefault(rec.scenario_id, []).append(rec)
    expected = expected_runs or max(len(v) for v in by_cell.values())
    summaries = []
    for cell_id in sorted(by_cell):
        group = sorted(by_cell[cell_id], key=lambda r: r.run_index)
        have = {r.run_index for r in group}
        missing = sorted(set(range(expected)) - have)
        if missing or len(group) != expected:
            raise ConfigError(f"cell {cell_id}: missing run indices {missing}")
        first = group[0]
        stats = {m: _five_numbers([getattr(r, m) for r in group])
                 for m in SUMMARY_METRICS}
        summaries.append(CellSummary(cell_id, first.family, first.size,
                                     first.penetration, first.mrai_s,
                                     len(group), stats))
    return summaries


# ------------------------------------------------------------ file output

def records_to_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RunRecord.CSV_FIELDS)
    for rec in records:
        writer.writerow(rec.csv_row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[RunRecord]:
    reader = csv.DictReader(io.StringIO(text))
    records = []
    for row in reader:
        records.append(RunRecord(
            scenario_id=row["scenario_id"], family=row["family"],
            size=int(row["size"]), penetration=int(row["penetration"]),
            mrai_s=float(row["mrai_s"]), run_index=int(row["run_index"]),
            seed=int(row["seed"]), trigger_time_us=int(row["trigger_time_us"]),
            convergence_time_us=int(row["convergence_time_us"]),
            update_count=int(row["update_count"]),
            churn_rate=float(row["churn_rate"]),
            zero_duration=bool(int(row["zero_duration"])),
            post_convergence_loops=int(row["post_convergence_loops"]),
            blackholes=int(row["blackholes"]),
            reachable_fraction=float(row["reachable_fraction"])))
    return records


def summaries_to_csv(summaries: list[CellSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["cell_id", "family", "size", "penetration", "mrai_s", "runs"]
    for metric in SUMMARY_METRICS:
        header += [f"{metric}_{stat}" for stat in SUMMARY_STATS]
    writer.writerow(header)
    for s in summaries:
        row = [s.cell_id, s.family, str(s.size), str(s.penetration),
               f"{s.mrai_s:g}", str(s.runs)]
        for metric in SUMMARY_METRICS:
            row += [f"{s.stats[metric][stat]:.6f}" for stat in SUMMARY_STATS]
        writer.writerow(row)
    return buf.getvalue()


def plot_data_csv(summaries: list[CellSummary]) -> str:
    """Long-format rows (cell key, metric, statistic, value) ready for any
    boxplot frontend."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["family", "size", "penetration", "mrai_s",
                     "metric", "statistic", "value"])
    for s in summaries:
        for metric in SUMMARY_METRICS:
            for stat in SUMMARY_STATS:
                writer.writerow([s.family, str(s.size), str(s.penetration),
                                 f"{s.mrai_s:g}", metric, stat,
                                 f"{s.stats[metric][stat]:.6f}"])
    return buf.getvalue()
