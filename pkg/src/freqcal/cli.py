"""Command-line interface: freqcal {run,order,scale,exp}."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .complexity import CostModel, scaling_report
from .config import load_config
from .harness import emit_report, run_experiment, single_run, trace_to_csv
from .ordering import SdCostFunction, order_by_method, route_cost
from .topology import ChipTopology


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqcal",
        description="Block coordinate descent frequency calibration on a "
                    "synthetic crosstalk error model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one optimizer run, trace out")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_common(p_run)

    p_order = sub.add_parser("order", help="compute a block visit order")
    p_order.add_argument("--topology", required=True,
                         help="topology JSON file")
    p_order.add_argument("--mode", choices=("complexity", "neighbors"),
                         default="complexity")
    p_order.add_argument("--method",
                         choices=("nna", "bfs", "dfs", "random", "oracle"),
                         default="nna")
    _add_common(p_order)

    p_scale = sub.add_parser("scale", help="epoch-cost scaling over grid sizes")
    p_scale.add_argument("--sizes", required=True,
                         help="comma-separated, e.g. 2x2,3x3,4x4")
    p_scale.add_argument("--order", choices=("nna", "bfs", "dfs", "random"),
                         default="nna")
    p_scale.add_argument("--model", choices=("empirical", "search"),
                         default="search")
    _add_common(p_scale)

    p_exp = sub.add_parser("exp", help="run a seeded experiment")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_common(p_exp)
    return parser


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    trace = single_run(cfg, seed=args.seed)
    if args.format == "csv":
        _write(trace_to_csv(trace), args.out)
    else:
        payload = {
            "order": list(trace.order),
            "g_initial": trace.g_initial,
            "g_final": trace.g_final,
            "final_values": trace.final_values.tolist(),
            "total_evals": trace.total_evals,
            "epochs_run": trace.epochs_run,
            "logcost_empirical": trace.logcost_empirical,
            "logcost_search": trace.logcost_search,
            "rows": [
                {
                    "epoch": r.epoch, "step": r.step,
                    "block_center": r.block_center,
                    "g_noiseless": r.g_noiseless,
                    "g_noisy_local": r.g_noisy_local,
                    "evals_cum": r.evals_cum,
                    "logcost_empirical_cum": r.logcost_empirical_cum,
                    "logcost_search_cum": r.logcost_search_cum,
                }
                for r in trace.rows
            ],
        }
        _write(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_order(args) -> int:
    with open(args.topology) as fh:
        topo = ChipTopology.from_json(fh.read())
    hypothesis = topo.true_pairs()
    cf = SdCostFunction(mode=args.mode)
    rng = np.random.default_rng(args.seed)
    route = order_by_method(args.method, topo, hypothesis, cf=cf, rng=rng)
    log_cost = route.total_cost
    if log_cost is None:
        log_cost = route_cost(route, cf, topo, hypothesis)
    payload = {"route": list(route.order), "log_cost": float(log_cost)}
    _write(json.dumps(payload, sort_keys=True) + "\n", args.out)
    return 0


def cmd_scale(args) -> int:
    sizes = []
    for token in args.sizes.split(","):
        r, _, c = token.strip().lower().partition("x")
        sizes.append((int(r), int(c)))
    kind = "empirical" if args.model == "empirical" else "search_space"
    model = CostModel(kind=kind)
    rng = np.random.default_rng(args.seed)
    rows = scaling_report(sizes, args.order, model, rng=rng)
    lines = ["n_qubits,order,log_epoch_cost,cost_per_qubit_bound"]
    for row in rows:
        lines.append(
            f"{row.n_qubits},{row.order_method},{row.log_epoch_cost},"
            f"{row.cost_per_qubit_bound}"
        )
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_exp(args) -> int:
    cfg = load_config(args.config)
    report = run_experiment(cfg, seed=args.seed)
    if args.out is None:
        from .harness import report_to_csv

        if args.format == "csv":
            sys.stdout.write(report_to_csv(report))
        else:
            sys.stdout.write(
                json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n"
            )
    else:
        emit_report(report, args.format, args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "order": cmd_order,
        "scale": cmd_scale,
        "exp": cmd_exp,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
