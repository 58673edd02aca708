"""Seeded experiment drivers and CSV/JSON report emission.

Four experiments mirror the optimizer's headline claims at desk scale:
noise robustness, NNA-vs-random ordering, scaling across grid sizes,
and crosstalk model mismatch.  Comparisons are always paired: within a
replica, every method or sweep point reuses the same sampled error
model and the same starting point.

Randomness is split hierarchically from one base seed: replica r and
purpose p (model draw, start draw, noise, order, topology) get the
independent stream SeedSequence(seed, spawn_key=(r, p, ...)), so adding
rsd values or sweep points never perturbs the other draws, and replicas
can run in any order (or in parallel, capped by FREQCAL_THREADS)
without changing a single output byte.
"""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from .bcd import BcdTrace, run as bcd_run
from .blocks import partition_from_order
from .complexity import CostModel, epoch_cost
from .config import ExperimentConfig
from .error_model import (
    random_assignment,
    sample_error_model,
    scale_nonlocal_strengths,
)
from .ordering import SdCostFunction, multi_start_nna
from .topology import add_nonlocal_pairs, build_grid_topology

# purpose tags for the rng substreams
_MODEL, _START, _NOISE, _ORDER, _TOPO = range(5)

REPORT_COLUMNS = (
    "experiment", "sweep_value", "replica", "method", "rsd",
    "g_initial", "g_final", "delta_g", "log_cost_empirical", "log_cost_search",
)


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    sweep_value: float
    replica: int
    method: str
    rsd: float
    g_initial: float
    g_final: float
    delta_g: float
    log_cost_empirical: float
    log_cost_search: float


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    summary: dict

    def to_json_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "summary": self.summary}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentReport":
        return cls(rows=[ReportRow(**r) for r in d["rows"]], summary=d["summary"])


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _n_threads() -> int:
    raw = os.environ.get("FREQCAL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_replicas(fn: Callable[[int], list[ReportRow]], n: int) -> list[ReportRow]:
    """Run one function per replica, merging results in replica order."""
    threads = _n_threads()
    if threads == 1:
        results = [fn(r) for r in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, range(n)))
    return [row for chunk in results for row in chunk]


def _epoch_logcosts(topology, hypothesis, order, k, t, s_iters):
    partition = partition_from_order(order, topology)
    emp = epoch_cost(partition, hypothesis, topology,
                     CostModel("empirical", k=k, t=t, inner_iterations=s_iters))
    sea = epoch_cost(partition, hypothesis, topology,
                     CostModel("search_space", k=k, t=t, inner_iterations=s_iters))
    return emp, sea


def exp_noise_robustness(cfg: ExperimentConfig, seed: int = 0) -> ExperimentReport:
    """Paired runs across noise levels; rsd=0 doubles as the monotone probe."""
    rsds = cfg.experiment.rsd_values
    if 0.0 not in rsds:
        raise ValueError("noise experiment needs rsd=0 among its rsd values")
    topo = build_grid_topology(cfg.topology.rows, cfg.topology.cols)
    monotone_flags: list[bool] = []

    def one(rep: int) -> list[ReportRow]:
        params = sample_error_model(topo, cfg.error_model, substream(seed, rep, _MODEL))
        f0 = random_assignment(params, topo, substream(seed, rep, _START))
        runs = []
        for j, rsd in enumerate(rsds):
            bcd_cfg = cfg.bcd.to_bcd_config(topo, rsd=rsd)
            trace = bcd_run(bcd_cfg, topo, params, f0,
                            rng=substream(seed, rep, _NOISE, j))
            if rsd == 0.0:
                seq = np.concatenate([[trace.g_initial], trace.g_noiseless_series()])
                monotone_flags.append(bool(np.all(np.diff(seq) <= 1e-12)))
            emp, sea = _epoch_logcosts(topo, bcd_cfg.hypothesis, trace.order,
                                       cfg.bcd.cost_k, cfg.bcd.cost_t,
                                       cfg.bcd.inner_iterations)
            runs.append((rsd, trace, emp, sea))
        base_final = next(t.g_final for rsd, t, _, _ in runs if rsd == 0.0)
        return [
            ReportRow(
                experiment="noise", sweep_value=rsd, replica=rep, method="bcd",
                rsd=rsd, g_initial=t.g_initial, g_final=t.g_final,
                delta_g=t.g_final - base_final,
                log_cost_empirical=emp, log_cost_search=sea,
            )
            for rsd, t, emp, sea in runs
        ]

    rows = _map_replicas(one, cfg.experiment.replicas)
    summary = _summarize(rows, group_keys=("rsd",))
    summary["rsd0_monotone_fraction"] = float(np.mean(monotone_flags))
    return ExperimentReport(rows=rows, summary=summary)


def exp_nna_vs_random(cfg: ExperimentConfig, seed: int = 0) -> ExperimentReport:
    """Same model, same start, different visit order per replica."""
    methods = cfg.experiment.methods
    topo = build_grid_topology(cfg.topology.rows, cfg.topology.cols)

    def one(rep: int) -> list[ReportRow]:
        params = sample_error_model(topo, cfg.error_model, substream(seed, rep, _MODEL))
        f0 = random_assignment(params, topo, substream(seed, rep, _START))
        rows = []
        base_final = None
        for j, method in enumerate(methods):
            bcd_cfg = cfg.bcd.to_bcd_config(topo, order_method=method)
            rng = substream(seed, rep, _ORDER, j)
            trace = bcd_run(bcd_cfg, topo, params, f0, rng=rng)
            if j == 0:
                base_final = trace.g_final
            emp, sea = _epoch_logcosts(topo, bcd_cfg.hypothesis, trace.order,
                                       cfg.bcd.cost_k, cfg.bcd.cost_t,
                                       cfg.bcd.inner_iterations)
            rows.append(ReportRow(
                experiment="ordering", sweep_value=0.0, replica=rep, method=method,
                rsd=cfg.bcd.rsd, g_initial=trace.g_initial, g_final=trace.g_final,
                delta_g=trace.g_final - base_final,
                log_cost_empirical=emp, log_cost_search=sea,
            ))
        return rows

    rows = _map_replicas(one, cfg.experiment.replicas)
    summary = _summarize(rows, group_keys=("method",))
    base = methods[0]
    by_rep: dict[int, dict[str, ReportRow]] = {}
    for r in rows:
        by_rep.setdefault(r.replica, {})[r.method] = r
    ratios = [
        float(np.exp(d[m].log_cost_search - d[base].log_cost_search))
        for d in by_rep.values() for m in methods[1:] if m in d
    ]
    if ratios:
        summary["complexity_ratio_vs_" + base] = {
            "mean": float(np.mean(ratios)),
            "fraction_ge_1": float(np.mean([x >= 1.0 for x in ratios])),
        }
    return ExperimentReport(rows=rows, summary=summary)


def exp_scaling(cfg: ExperimentConfig, seed: int = 0) -> ExperimentReport:
    """Initial/final error and epoch cost per grid size and order method."""
    sizes = cfg.experiment.sizes
    if list(sizes) != sorted(sizes, key=lambda rc: rc[0] * rc[1]):
        raise ValueError("scaling sizes must be ascending in qubit count")

    def one_size(args):
        idx, (r, c) = args
        topo = build_grid_topology(r, c)
        rows = []
        for rep in range(cfg.experiment.replicas):
            params = sample_error_model(
                topo, cfg.error_model, substream(seed, rep, _MODEL, idx))
            f0 = random_assignment(params, topo, substream(seed, rep, _START, idx))
            for j, method in enumerate(cfg.experiment.methods):
                bcd_cfg = cfg.bcd.to_bcd_config(topo, order_method=method)
                trace = bcd_run(bcd_cfg, topo, params, f0,
                                rng=substream(seed, rep, _ORDER, idx, j))
                emp, sea = _epoch_logcosts(topo, bcd_cfg.hypothesis, trace.order,
                                           cfg.bcd.cost_k, cfg.bcd.cost_t,
                                           cfg.bcd.inner_iterations)
                rows.append(ReportRow(
                    experiment="scaling", sweep_value=float(topo.n_qubits),
                    replica=rep, method=method, rsd=cfg.bcd.rsd,
                    g_initial=trace.g_initial, g_final=trace.g_final,
                    delta_g=trace.g_final - trace.g_initial,
                    log_cost_empirical=emp, log_cost_search=sea,
                ))
        return rows

    chunks = [one_size(x) for x in enumerate(sizes)]
    rows = [row for chunk in chunks for row in chunk]
    return ExperimentReport(
        rows=rows, summary=_summarize(rows, group_keys=("sweep_value", "method"))
    )


def exp_mismatch(cfg: ExperimentConfig, seed: int = 0) -> ExperimentReport:
    """Crosstalk-aware vs -unaware optimization over a nonlocal-strength sweep.

    One topology and one unit-strength model draw per replica; each sweep
    point rescales the nonlocal strengths, so sweep values share common
    random numbers.  Both runs share the visit order computed from the
    true pair set, isolating the footprint mismatch itself.
    """
    sweep = cfg.experiment.nonlocal_max
    if len(sweep) < 2 or 0.0 not in sweep:
        raise ValueError("mismatch sweep needs at least two values including 0")
    base_grid = build_grid_topology(cfg.topology.rows, cfg.topology.cols)
    ranges = replace(cfg.error_model, nonlocal_strength=(0.0, 1.0))

    def one(rep: int) -> list[ReportRow]:
        topo = add_nonlocal_pairs(
            base_grid, cfg.error_model.nonlocal_radius,
            substream(seed, rep, _TOPO), density=cfg.error_model.nonlocal_density,
        )
        params_unit = sample_error_model(topo, ranges, substream(seed, rep, _MODEL))
        f0 = random_assignment(params_unit, topo, substream(seed, rep, _START))
        order_cf = SdCostFunction(model=CostModel(
            k=cfg.bcd.cost_k, t=cfg.bcd.cost_t,
            inner_iterations=cfg.bcd.inner_iterations))
        route = multi_start_nna(order_cf, topo, topo.true_pairs())
        rows = []
        for j, v in enumerate(sweep):
            params = scale_nonlocal_strengths(params_unit, topo, v)
            finals = {}
            for m, hyp_name in (("aware", "true"), ("unaware", "local")):
                bcd_cfg = cfg.bcd.to_bcd_config(
                    topo, hypothesis=hyp_name,
                    order_method="fixed", fixed_order=route.order)
                trace = bcd_run(bcd_cfg, topo, params, f0,
                                rng=substream(seed, rep, _NOISE, j))
                finals[m] = trace
            pair_delta = finals["unaware"].g_final - finals["aware"].g_final
            for m in ("aware", "unaware"):
                trace = finals[m]
                hyp = cfg.bcd.resolve_hypothesis(
                    topo, "true" if m == "aware" else "local")
                emp, sea = _epoch_logcosts(topo, hyp, trace.order,
                                           cfg.bcd.cost_k, cfg.bcd.cost_t,
                                           cfg.bcd.inner_iterations)
                rows.append(ReportRow(
                    experiment="mismatch", sweep_value=v, replica=rep, method=m,
                    rsd=cfg.bcd.rsd, g_initial=trace.g_initial,
                    g_final=trace.g_final,
                    delta_g=pair_delta if m == "unaware" else 0.0,
                    log_cost_empirical=emp, log_cost_search=sea,
                ))
        return rows

    rows = _map_replicas(one, cfg.experiment.replicas)
    summary = _summarize(rows, group_keys=("sweep_value", "method"))
    deltas = {}
    for v in sweep:
        ds = [r.delta_g for r in rows if r.sweep_value == v and r.method == "unaware"]
        deltas[str(v)] = {"mean": float(np.mean(ds)), "std": float(np.std(ds))}
    summary["delta_g_by_sweep"] = deltas
    return ExperimentReport(rows=rows, summary=summary)


EXPERIMENTS = {
    "noise": exp_noise_robustness,
    "ordering": exp_nna_vs_random,
    "scaling": exp_scaling,
    "mismatch": exp_mismatch,
}


def run_experiment(cfg: ExperimentConfig, seed: int = 0) -> ExperimentReport:
    return EXPERIMENTS[cfg.experiment.name](cfg, seed=seed)


def single_run(cfg: ExperimentConfig, seed: int = 0) -> BcdTrace:
    """One BCD run from the config: sample a model, a start, optimize."""
    topo = build_grid_topology(cfg.topology.rows, cfg.topology.cols)
    if cfg.error_model.nonlocal_density > 0:
        topo = add_nonlocal_pairs(
            topo, cfg.error_model.nonlocal_radius,
            substream(seed, 0, _TOPO), density=cfg.error_model.nonlocal_density)
    params = sample_error_model(topo, cfg.error_model, substream(seed, 0, _MODEL))
    f0 = random_assignment(params, topo, substream(seed, 0, _START))
    bcd_cfg = cfg.bcd.to_bcd_config(topo)
    return bcd_run(bcd_cfg, topo, params, f0, rng=substream(seed, 0, _NOISE))


def _summarize(rows: list[ReportRow], group_keys: tuple[str, ...]) -> dict:
    groups: dict[tuple, list[ReportRow]] = {}
    for r in rows:
        key = tuple(getattr(r, k) for k in group_keys)
        groups.setdefault(key, []).append(r)
    out = {}
    for key, rs in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        finals = np.array([r.g_final for r in rs])
        initials = np.array([r.g_initial for r in rs])
        out["/".join(str(k) for k in key)] = {
            "n": len(rs),
            "g_initial_mean": float(initials.mean()),
            "g_initial_std": float(initials.std()),
            "g_final_mean": float(finals.mean()),
            "g_final_std": float(finals.std()),
            "g_final_q25": float(np.quantile(finals, 0.25)),
            "g_final_q50": float(np.quantile(finals, 0.50)),
            "g_final_q75": float(np.quantile(finals, 0.75)),
            "improved_fraction": float(np.mean(finals < initials)),
        }
    return {"groups": out}


def report_to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in report.rows:
        writer.writerow([getattr(r, c) for c in REPORT_COLUMNS])
    return buf.getvalue()


def emit_report(report: ExperimentReport, fmt: str, path) -> None:
    """Write a report; identical reports produce byte-identical files."""
    if fmt == "csv":
        payload = report_to_csv(report)
    elif fmt == "json":
        payload = json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n"
    else:
        raise ValueError(f"unknown report format: {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(payload)


def trace_to_csv(trace: BcdTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "step", "block_center", "g_noiseless",
                     "g_noisy_local", "evals_cum", "logcost_empirical_cum",
                     "logcost_search_cum"])
    for r in trace.rows:
        writer.writerow([r.epoch, r.step, r.block_center, r.g_noiseless,
                         r.g_noisy_local, r.evals_cum, r.logcost_empirical_cum,
                         r.logcost_search_cum])
    return buf.getvalue()
