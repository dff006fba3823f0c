"""
Command line entry point.  Every subcommand reads the YAML config,
applies command line overrides and writes its results as CSV files
under ``--out``.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional
from warnings import warn
import yaml
from naqc.circuit import (
    benchmarks,
    build_benchmark,
    read_circuit,
    toffoli_benchmarks,
    valid_size,
)
from naqc.compiler import (
    CompiledProgram,
    compile_circuit,
    retime,
    verify,
    write_program,
)
from naqc.config import Config, load_config
from naqc.const import TOFFOLI_MIN_MID
from naqc.fidelity import FIDELITY_HEADER, max_runnable_size, sweep_two_qubit_error
from naqc.fp import fp_ltp
from naqc.lossim import (
    HOLE_FIDELITY_HEADER,
    HOLES_HEADER,
    OVERHEAD_HEADER,
    SENSITIVITY_HEADER,
    TRACE_HEADER,
    Strategy,
    hole_fidelity_trace,
    loss_rate_slope,
    max_sustained_holes,
    simulate_run,
    sweep_loss_rate,
)
from naqc.topology import GridSpec
from naqc.utilities import print_table, sweep, write_csv

logger = logging.getLogger(__name__)

SWEEP_MID_HEADER = [
    "benchmark",
    "size",
    "mid",
    "gates",
    "depth",
    "swaps",
    "native3q",
    "decomposed",
    "ideal_depth",
]
MAX_SIZE_HEADER = ["benchmark", "mid", "p2", "max_size"]


def fit_size(name: str, size: int) -> Optional[int]:
    """
    Largest valid size of the named benchmark not above ``size``, or
    None if there is none.
    """
    for n in range(size, 1, -1):
        if valid_size(name, n):
            return n
    return None


def _checked(cp: CompiledProgram, circuit, grid: GridSpec) -> CompiledProgram:
    """
    """
    if not verify(cp, circuit, grid):
        raise RuntimeError(
            "Compiled program failed verification. This is a bug."
        )
    return cp


def cmd_compile(args, cfg: Config) -> int:
    """
    Compile one circuit file or benchmark and write its schedule.
    """
    grid = cfg.grid()
    if args.circuit is not None:
        circuit = read_circuit(args.circuit)
        name = os.path.splitext(os.path.basename(args.circuit))[0]
    else:
        circuit = build_benchmark(
            args.benchmark,
            args.size,
            seed=cfg.sweep["seed"],
            density=cfg.sweep["density"],
        )
        name = "{}_{}".format(args.benchmark, args.size)
    cp = compile_circuit(
        circuit,
        grid,
        decompose_toffolis=args.decompose,
        ideal_no_zones=args.ideal_no_zones,
    )
    _checked(cp, circuit, grid)
    output = args.output
    if output is None:
        output = os.path.join(args.out, name + ".sched")
    _makedirs(output)
    write_program(cp, output)
    logger.info("wrote %s", output)
    print("gates={} depth={} swaps={}".format(cp.gate_count, cp.depth, cp.swap_count))
    return 0


def _mid_cell(params) -> Optional[dict]:
    """
    Compile one benchmark, size, MID and Toffoli variant.  Returns
    None for cells that do not fit the grid.
    """
    name, size, grid, decompose, seed, density = params
    circuit = build_benchmark(name, size, seed=seed, density=density)
    try:
        cp = compile_circuit(circuit, grid, decompose_toffolis=decompose)
    except ValueError as err:
        warn("Skipping {} size {} at mid {:g}: {}".format(name, size, grid.mid, err))
        return None
    _checked(cp, circuit, grid)
    ideal = CompiledProgram(
        retime(cp.schedule),
        cp.initial_mapping,
        cp.final_mapping,
        grid,
        decomposed=cp.decomposed,
        ideal_no_zones=True,
    )
    logger.info(
        "%s size %d mid %g decomposed %d done", name, size, grid.mid, cp.decomposed
    )
    return {
        "benchmark": name,
        "size": size,
        "mid": grid.mid,
        "gates": cp.gate_count,
        "depth": cp.depth,
        "swaps": cp.swap_count,
        "native3q": cp.n3,
        "decomposed": cp.decomposed,
        "ideal_depth": ideal.depth,
    }


def mid_cells(cfg: Config) -> List[tuple]:
    """
    Cell parameters of the MID sweep in output order.  Toffoli
    benchmarks get a native and a decomposed cell, except below MID
    sqrt(2) where only the decomposed one exists.
    """
    sw = cfg.sweep
    cells = []
    for name in sw["benchmarks"]:
        sizes = []
        for size in sw["sizes"]:
            n = fit_size(name, size)
            if n is None:
                warn("No valid size of {} up to {}.".format(name, size))
            elif n not in sizes:
                sizes.append(n)
        for size in sizes:
            for mid in sw["mids"]:
                grid = cfg.grid(mid)
                variants = [False]
                if name in toffoli_benchmarks:
                    variants = [True]
                    if not fp_ltp(grid.mid, TOFFOLI_MIN_MID):
                        variants = [False, True]
                for decompose in variants:
                    cells.append(
                        (name, size, grid, decompose, sw["seed"], sw["density"])
                    )
    return cells


def cmd_sweep_mid(args, cfg: Config) -> int:
    """
    Gate count, depth and SWAPs over benchmarks, sizes and MIDs.
    """
    rows = sweep(_mid_cell, mid_cells(cfg), cfg.sweep["processes"])
    path = write_csv(
        os.path.join(args.out, "sweep_mid.csv"),
        SWEEP_MID_HEADER,
        [row for row in rows if row is not None],
    )
    logger.info("wrote %s", path)
    return 0


def _error_cell(params) -> List[dict]:
    """
    """
    name, size, grid, p2_values, base, exponent, seed, density = params
    return sweep_two_qubit_error(
        name,
        size,
        grid,
        p2_values,
        base=base,
        p3_exponent=exponent,
        seed=seed,
        density=density,
    )


def _max_size_cell(params) -> dict:
    """
    """
    name, grid, ep, threshold, seed, density = params
    return {
        "benchmark": name,
        "mid": grid.mid,
        "p2": ep.p2,
        "max_size": max_runnable_size(
            name, grid, ep, threshold=threshold, seed=seed, density=density
        ),
    }


def cmd_sweep_error(args, cfg: Config) -> int:
    """
    Success probability against two-qubit error rate, and the largest
    runnable size of every benchmark at each rate.
    """
    sw = cfg.sweep
    grid = cfg.grid(sw["error_mid"])
    base = cfg.error_params()
    exponent = cfg.p3_exponent
    names = list(sw["benchmarks"])

    error_cells = []
    for name in names:
        size = fit_size(name, min(sw["error_size"], grid.num_sites))
        if size is None:
            warn("No valid size of {} up to {}.".format(name, sw["error_size"]))
            continue
        error_cells.append(
            (name, size, grid, sw["p2_values"], base, exponent, sw["seed"], sw["density"])
        )
    rows = []
    for cell_rows in sweep(_error_cell, error_cells, sw["processes"]):
        rows.extend(cell_rows)
    path = write_csv(
        os.path.join(args.out, "fidelity.csv"),
        FIDELITY_HEADER + ["error_rate"],
        rows,
    )
    logger.info("wrote %s", path)

    size_cells = [
        (name, grid, base.with_p2(p2, exponent), sw["threshold"], sw["seed"], sw["density"])
        for name in names
        for p2 in sw["p2_values"]
    ]
    size_rows = sweep(_max_size_cell, size_cells, sw["processes"])
    path = write_csv(
        os.path.join(args.out, "max_size.csv"), MAX_SIZE_HEADER, size_rows
    )
    logger.info("wrote %s", path)

    table = [list(sw["p2_values"])]
    for name in names:
        table.append([row["max_size"] for row in size_rows if row["benchmark"] == name])
    print_table(table, ["p2"] + names, [4] + [0] * len(names))
    return 0


def cmd_loss(args, cfg: Config) -> int:
    """
    Sustained holes, run traces, overhead, loss rate sensitivity and
    success probability as holes accumulate, per strategy and MID.
    """
    sw = cfg.sweep
    name = sw["loss_benchmark"]
    size = fit_size(name, sw["loss_size"])
    if size is None:
        raise ValueError("No valid size of {} up to {}.".format(name, sw["loss_size"]))
    circuit = build_benchmark(name, size, seed=sw["seed"], density=sw["density"])
    ep = cfg.error_params()
    lm = cfg.loss_model()
    tm = cfg.timing_model()

    holes_rows = []
    trace_rows = []
    overhead_rows = []
    fidelity_rows = []
    for st in cfg.strategies():
        for mid in sw["loss_mids"]:
            grid = cfg.grid(mid)
            if not _loss_cell_valid(st, circuit, grid):
                continue
            stats = max_sustained_holes(
                st, circuit, grid, sw["trials"], sw["seed"], ep, sw["processes"]
            )
            for trial, count in enumerate(stats.counts):
                holes_rows.append(
                    {
                        "strategy": st.name,
                        "mid": grid.mid,
                        "trial": trial,
                        "holes_sustained": count,
                    }
                )
            trace = simulate_run(st, circuit, grid, lm, tm, sw["target_shots"], ep)
            trace_rows.extend(trace.event_rows())
            overhead_rows.append(trace.overhead_row())
            for holes, success in hole_fidelity_trace(st, circuit, grid, ep, sw["seed"]):
                fidelity_rows.append(
                    {
                        "strategy": st.name,
                        "mid": grid.mid,
                        "holes": holes,
                        "success": success,
                    }
                )

    sensitivity_rows = []
    for kind in sw["sensitivity_strategies"]:
        st = Strategy(kind, sw["small_mid_delta"])
        for mid in sw["loss_mids"]:
            grid = cfg.grid(mid)
            if not _loss_cell_valid(st, circuit, grid):
                continue
            rows = sweep_loss_rate(
                st,
                circuit,
                grid,
                lm,
                sw["loss_factors"],
                sw["sensitivity_trials"],
                ep,
                max_shots=sw["sensitivity_max_shots"],
                processes=sw["processes"],
            )
            sensitivity_rows.extend(rows)
            shots = [row["shots_before_reload"] for row in rows]
            if len(shots) > 1 and all(s > 0 for s in shots):
                logger.info(
                    "%s mid %g loss rate slope %.3f",
                    st.name,
                    grid.mid,
                    loss_rate_slope(sw["loss_factors"], shots),
                )

    for fname, header, rows in (
        ("holes.csv", HOLES_HEADER, holes_rows),
        ("trace.csv", TRACE_HEADER, trace_rows),
        ("overhead.csv", OVERHEAD_HEADER, overhead_rows),
        ("loss_sensitivity.csv", SENSITIVITY_HEADER, sensitivity_rows),
        ("hole_fidelity.csv", HOLE_FIDELITY_HEADER, fidelity_rows),
    ):
        path = write_csv(os.path.join(args.out, fname), header, rows)
        logger.info("wrote %s", path)
    return 0


def _loss_cell_valid(st: Strategy, circuit, grid: GridSpec) -> bool:
    """
    """
    if circuit.n_qubits > grid.num_sites:
        warn(
            "Skipping {} at mid {:g}: {} qubits exceed {} sites.".format(
                st.name, grid.mid, circuit.n_qubits, grid.num_sites
            )
        )
        return False
    try:
        st.compile_grid(grid)
    except ValueError as err:
        warn("Skipping {} at mid {:g}: {}".format(st.name, grid.mid, err))
        return False
    return True


def cmd_print_config(args, cfg: Config) -> int:
    """
    """
    sys.stdout.write(cfg.to_yaml())
    return 0


def _makedirs(path: str) -> None:
    """
    """
    dirname = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(dirname):
        os.makedirs(dirname)


def build_parser() -> argparse.ArgumentParser:
    """
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--seed", type=int, help="override sweep.seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )

    parser = argparse.ArgumentParser(
        prog="naqc",
        description="Neutral atom compiler and atom loss simulator.",
    )
    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True

    compile_parser = subparsers.add_parser(
        "compile", parents=[common], help="compile one circuit"
    )
    source = compile_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--circuit", help="naqc-circuit v1 file")
    source.add_argument(
        "--benchmark", choices=sorted(benchmarks), help="benchmark name"
    )
    compile_parser.add_argument("--size", type=int, help="benchmark size")
    compile_parser.add_argument("--mid", type=float, help="override hardware.mid")
    compile_parser.add_argument(
        "--decompose", action="store_true", help="decompose Toffolis first"
    )
    compile_parser.add_argument(
        "--ideal-no-zones",
        action="store_true",
        help="schedule without restriction zones",
    )
    compile_parser.add_argument("--output", help="schedule file path")
    compile_parser.set_defaults(func=cmd_compile)

    for name, func, text in (
        ("sweep-mid", cmd_sweep_mid, "gate count and depth against MID"),
        ("sweep-error", cmd_sweep_error, "success against two-qubit error"),
        ("loss", cmd_loss, "atom loss strategies"),
        ("print-config", cmd_print_config, "print the effective config"),
    ):
        sub = subparsers.add_parser(name, parents=[common], help=text)
        sub.set_defaults(func=func)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line and return its exit code: 0 on success, 1
    for usage, config or input errors and 2 for internal failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 0 if not err.code else 1

    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s"
    )

    try:
        if args.command == "compile" and args.benchmark is not None:
            if args.size is None:
                raise ValueError("--benchmark needs --size.")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.set("sweep", "seed", args.seed)
        if getattr(args, "mid", None) is not None:
            cfg.set("hardware", "mid", args.mid)
        return args.func(args, cfg)
    except (ValueError, OSError, yaml.YAMLError) as err:
        sys.stderr.write("error: {}\n".format(err))
        return 1
    except RuntimeError as err:
        sys.stderr.write("internal error: {}\n".format(err))
        return 2


if __name__ == "__main__":
    sys.exit(main())
