"""Command-line entry point: ``fsmsynth {synthesize,simulate,export,bench}``.

Exit codes: 0 success (for synthesize: a feasible machine was found),
1 usage or input error, 2 synthesis finished with only an infeasible best.
"""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .evolve import ONE_POINT, TWO_POINT, GaConfig, run
from .helicopter import HeliParams, HeliTask, generate_course, load_course
from .helicopter import format_trace as heli_trace
from .hwexport import export_bundle
from .machine import EncodingError, load_machine, make_encoding, save_machine
from .santafe import SantaFeTask, load_trail, santa_fe_trail
from .santafe import format_trace as ant_trace

log = logging.getLogger("fsmsynth")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2

DEFAULT_COURSE_SEED = 0

GLOBAL_DEFAULTS = {
    "task": "santafe", "states": 8, "pc": 0.4, "pm": 0.25, "seed": 0,
    "w1": 1.0, "w2": 0.01, "penalty": 1000.0, "xover": "2pt", "sectors": 4,
    "markers": 20, "course_seed": DEFAULT_COURSE_SEED, "trail": None, "course": None,
    "evals": None, "target": None, "runs": 10,
}
TASK_DEFAULTS = {
    "santafe": {"pop": 1200, "gens": 33000},
    "heli": {"pop": 200, "gens": 10000},
}
XOVER = {"1pt": ONE_POINT, "2pt": TWO_POINT}
OPTION_KEYS = list(GLOBAL_DEFAULTS) + ["pop", "gens"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", choices=sorted(TASK_DEFAULTS))
    p.add_argument("--states", type=int, help="genome capacity S")
    p.add_argument("--pop", type=int, help="population size")
    p.add_argument("--pc", type=float, help="crossover probability")
    p.add_argument("--pm", type=float, help="mutation probability")
    p.add_argument("--gens", type=int, help="maximum generations")
    p.add_argument("--evals", type=int, help="maximum fitness evaluations")
    p.add_argument("--seed", type=int)
    p.add_argument("--w1", type=float, help="weight of the reachable-state count")
    p.add_argument("--w2", type=float, help="weight of the move/step count")
    p.add_argument("--penalty", type=float, help="objective penalty per unit of deficit")
    p.add_argument("--target", type=int, help="stop once a feasible machine has at most this many states")
    p.add_argument("--xover", choices=sorted(XOVER))
    p.add_argument("--sectors", type=int, help="helicopter sight sectors")
    p.add_argument("--markers", type=int, help="markers on a generated course")
    p.add_argument("--course-seed", dest="course_seed", type=int)
    p.add_argument("--trail", help="trail file (32 rows of '#', '.', 'S')")
    p.add_argument("--course", help="course file")
    p.add_argument("--config", help="key = value file mirroring the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsmsynth", description="Genetic synthesis of Mealy machines")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthesize", help="evolve a machine for a task")
    _add_run_flags(p)
    p.add_argument("--out", help="output directory")
    p.add_argument("--trace", help="write a trace of the best machine")
    p.add_argument("--manifest", help="replay the run recorded in this manifest")

    p = sub.add_parser("simulate", help="replay a machine file on a task")
    p.add_argument("--task", choices=sorted(TASK_DEFAULTS), required=True)
    p.add_argument("--machine", required=True)
    p.add_argument("--trace")
    p.add_argument("--sectors", type=int, default=4)
    p.add_argument("--markers", type=int, default=20)
    p.add_argument("--course-seed", dest="course_seed", type=int, default=DEFAULT_COURSE_SEED)
    p.add_argument("--trail")
    p.add_argument("--course")

    p = sub.add_parser("export", help="write truth table, memory-init and HDL files")
    p.add_argument("--machine", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="fsm_rom", help="HDL module name")

    p = sub.add_parser("bench", help="repeat synthesis over seeds and tabulate worst/average/best")
    _add_run_flags(p)
    p.add_argument("--runs", type=int)
    p.add_argument("--out", help="optional CSV of per-run results")
    return parser


def _read_config(path: str) -> dict:
    opts = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in OPTION_KEYS:
            raise UsageError(f"{path}:{n}: unknown option {key!r}")
        opts[key] = value
    return opts


def _coerce(opts: dict) -> dict:
    types = {"states": int, "pop": int, "gens": int, "evals": int, "seed": int, "target": int,
             "sectors": int, "markers": int, "course_seed": int, "runs": int,
             "pc": float, "pm": float, "w1": float, "w2": float, "penalty": float}
    out = {}
    for key, value in opts.items():
        if value is not None and key in types and not isinstance(value, types[key]):
            try:
                value = types[key](value)
            except ValueError:
                raise UsageError(f"option {key} expects {types[key].__name__}, got {value!r}") from None
        out[key] = value
    return out


def resolve_options(args: argparse.Namespace) -> dict:
    """Flags beat the config file, which beats task and global defaults."""
    flags = {k: getattr(args, k, None) for k in OPTION_KEYS}
    from_file = _read_config(args.config) if getattr(args, "config", None) else {}
    merged = dict(GLOBAL_DEFAULTS)
    task = flags.get("task") or from_file.get("task") or merged["task"]
    if task not in TASK_DEFAULTS:
        raise UsageError(f"unknown task {task!r}")
    merged.update(TASK_DEFAULTS[task])
    merged.update(from_file)
    merged.update({k: v for k, v in flags.items() if v is not None})
    merged["task"] = task
    if merged["xover"] not in XOVER:
        raise UsageError(f"unknown crossover {merged['xover']!r}")
    return _coerce(merged)


def make_task(opts: dict):
    if opts["task"] == "santafe":
        world = load_trail(Path(opts["trail"]).read_text()) if opts.get("trail") else santa_fe_trail()
        return SantaFeTask(world)
    params = HeliParams(sectors=opts["sectors"])
    if opts.get("course"):
        course = load_course(opts["course"])
    else:
        course = generate_course(opts["course_seed"], opts["markers"], params=params)
    return HeliTask(course, params)


def make_config(opts: dict, seed: int | None = None) -> GaConfig:
    return GaConfig(
        population_size=opts["pop"], max_generations=opts["gens"],
        crossover_probability=opts["pc"], mutation_probability=opts["pm"],
        crossover_kind=XOVER[opts["xover"]], weights=(opts["w1"], opts["w2"]),
        infeasibility_penalty=opts["penalty"], seed=opts["seed"] if seed is None else seed,
        target=opts["target"], max_evaluations=opts["evals"])


def synthesize(opts: dict, seed: int | None = None):
    task = make_task(opts)
    spec = make_encoding(opts["states"], task.input_bits, task.output_bits, task.action_count)
    config = make_config(opts, seed)
    return task, spec, config, run(spec, task, config)


def _trace_text(task, machine) -> str:
    if isinstance(task, SantaFeTask):
        from .santafe import simulate_ant
        return ant_trace(simulate_ant(machine, task.world, task.max_moves, trace=True))
    from .helicopter import simulate_heli
    return heli_trace(simulate_heli(machine, task.course, task.params, trace=True))


def cmd_synthesize(args) -> int:
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
        opts = _coerce(manifest["options"])
        out = args.out or manifest["outputs"]["dir"]
    else:
        opts = resolve_options(args)
        out = args.out or "run"
    task, spec, config, result = synthesize(opts)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_machine(result.best_machine, out_dir / "best.fsm")
    (out_dir / "stats.csv").write_text(result.stats_csv())
    export_bundle(result.best_machine).write(out_dir, "best")
    if args.trace:
        Path(args.trace).write_text(_trace_text(task, result.best_machine))
    manifest = {
        "tool_version": __version__,
        "options": opts,
        "task": {"name": task.name},
        "encoding": asdict(spec),
        "ga": asdict(config),
        "outputs": {"dir": str(out_dir), "machine": "best.fsm", "stats": "stats.csv",
                    "exports": ["best.truth.txt", "best.mif", "best.v"]},
        "result": {"feasible": result.feasible, "F": result.best_fitness.F,
                   "a1": result.best_fitness.a1, "a2": result.best_fitness.a2,
                   "raw": result.best_fitness.raw, "generations": result.generations_run,
                   "evaluations": result.evaluations},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    fit = result.best_fitness
    print(f"{task.name}: feasible={fit.feasible} states={fit.a1} moves={fit.a2} "
          f"{task.raw_key}={fit.raw[task.raw_key]} F={fit.F:.6f} "
          f"generations={result.generations_run} evaluations={result.evaluations}")
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    machine = load_machine(args.machine)
    opts = {"task": args.task, "trail": args.trail, "course": args.course,
            "sectors": args.sectors, "markers": args.markers, "course_seed": args.course_seed}
    task = make_task(opts)
    spec = machine.spec
    if (spec.input_bits, spec.action_count) != (task.input_bits, task.action_count):
        raise UsageError(f"machine shape does not fit task {task.name!r}")
    res = task.run(machine)
    if isinstance(task, SantaFeTask):
        print(f"food_eaten={res.food_eaten} moves={res.moves_to_finish}")
    else:
        print(f"markers_visited={res.markers_visited} steps={res.steps_used} "
              f"final_distance={res.final_distance:.6f}")
    if args.trace:
        Path(args.trace).write_text(_trace_text(task, machine))
    return EXIT_OK


def cmd_export(args) -> int:
    machine = load_machine(args.machine)
    paths = export_bundle(machine, args.name).write(args.out, Path(args.machine).stem)
    for p in paths:
        print(p)
    return EXIT_OK


def bench(opts: dict) -> tuple[list[dict], str]:
    """Run ``opts['runs']`` seeds (seed, seed+1, ...) and format a worst/average/best table."""
    rows = []
    for i in range(opts["runs"]):
        seed = opts["seed"] + i
        task, _, _, result = synthesize(opts, seed)
        fit = result.best_fitness
        rows.append({"seed": seed, "measure": fit.raw[task.raw_key], "feasible": fit.feasible,
                     "states": fit.a1, "moves": fit.a2, "evaluations": result.evaluations})
        log.info("bench seed %d: %s", seed, rows[-1])
    measures = [r["measure"] for r in rows]
    label = "sectors" if opts["task"] == "heli" else "task"
    key = opts["sectors"] if opts["task"] == "heli" else opts["task"]
    lines = [f"{label}\tworst\taverage\tbest",
             f"{key}\t{min(measures)}\t{statistics.fmean(measures):.2f}\t{max(measures)}",
             "",
             "seed\tmeasure\tfeasible\tstates\tmoves\tevaluations"]
    lines += [f"{r['seed']}\t{r['measure']}\t{int(r['feasible'])}\t{r['states']}\t{r['moves']}\t{r['evaluations']}"
              for r in rows]
    return rows, "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    opts = resolve_options(args)
    if opts["runs"] < 1:
        raise UsageError("--runs must be positive")
    rows, table = bench(opts)
    sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        header = "seed,measure,feasible,states,moves,evaluations\n"
        out.write_text(header + "".join(
            f"{r['seed']},{r['measure']},{int(r['feasible'])},{r['states']},{r['moves']},{r['evaluations']}\n"
            for r in rows))
    return EXIT_OK


COMMANDS = {"synthesize": cmd_synthesize, "simulate": cmd_simulate,
            "export": cmd_export, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, EncodingError, ValueError, OSError) as exc:
        print(f"fsmsynth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
