"""Command line front end.

Subcommands: ``gen-grid``, ``build``, ``solve``, ``verify``, ``hybrid``,
``export-svg`` and ``bench``. Every file written is accompanied by a
``<file>.manifest.json`` :class:`RunManifest`; ``verify`` embeds its manifest
in the report it prints. Exit codes: 0 success, 1 constraint or verification
failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import secrets
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .dqm import PenaltyConfig, Seeds, build_dqm, export_dqm
from .hybrid import run_pipeline, select_seeds
from .instance import Assignment, Instance, InstanceError, generate_grid, heterogeneity, load_instance, save_instance
from .qubo import build_qubo, decode, export_qubo
from .solve import SAParams, rle_encode, solve_exact, solve_sa
from .svgmap import export_svg
from .verify import check_contiguity, complete_flows, theorem1_harness

__all__ = ["RunManifest", "main", "build_parser"]

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad input that should end the run with exit code 2."""


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """What ran, with which settings and seeds, and what it read and wrote.

    ``command`` is the argument list with every auto-drawn seed made
    explicit, so ``replay`` repeats the run exactly.
    """

    command: list[str]
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> RunManifest:
        return cls(**doc)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, path) -> RunManifest:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def replay(self) -> int:
        return main(list(self.command))


def manifest_path(output) -> Path:
    return Path(f"{output}.manifest.json")


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


class _Run:
    """Collects manifest fields while a subcommand executes."""

    def __init__(self, argv: list[str]):
        self.command = list(argv)
        self.config: dict = {}
        self.seeds: dict = {}
        self.inputs: dict = {}
        self.artifacts: dict = {}
        self.start = time.perf_counter()

    def seed(self, args, name: str = "seed") -> int:
        value = getattr(args, name)
        if value is None:
            value = secrets.randbits(32)
            setattr(args, name, value)
            self.command += [f"--{name.replace('_', '-')}", str(value)]
        self.seeds[name] = value
        return value

    def read(self, path) -> Path:
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"no such file: {path}")
        self.inputs[str(path)] = sha256_file(path)
        return path

    def write(self, path, text: str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.artifacts[str(path)] = sha256_file(path)
        return path

    def manifest(self) -> RunManifest:
        return RunManifest(
            self.command,
            self.config,
            self.seeds,
            self.inputs,
            self.artifacts,
            round(time.perf_counter() - self.start, 6),
        )

    def finish(self, output) -> RunManifest:
        m = self.manifest()
        m.write(manifest_path(output))
        return m


# ---------------------------------------------------------------- helpers


def _load(run: _Run, path) -> Instance:
    return load_instance(run.read(path))


def _read_json(run: _Run, path) -> dict:
    try:
        return json.loads(run.read(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc})") from None


def _labels(instance: Instance, doc: dict) -> Assignment:
    """Labels from a solution or state document, either a list or ``{area id: region}``."""
    raw = doc.get("labels")
    if isinstance(raw, dict):
        missing = [a for a in instance.names if a not in raw]
        if missing:
            raise UsageError(f"labels missing for areas {missing}")
        raw = [raw[a] for a in instance.names]
    if not isinstance(raw, list) or len(raw) != instance.n:
        raise UsageError(f"solution needs {instance.n} labels")
    labels = [int(k) for k in raw]
    if any(not 1 <= k <= instance.p for k in labels):
        raise UsageError(f"labels must lie in 1..{instance.p}")
    return Assignment(labels)


def _roots(instance: Instance, spec) -> Seeds | None:
    """Seeds from ``{region: area id}``, a list of area ids, or a comma-separated string."""
    if spec is None:
        return None
    if isinstance(spec, str):
        spec = [s for s in spec.split(",") if s]
    if isinstance(spec, dict):
        items = {int(k): v for k, v in spec.items()}
    else:
        items = {k + 1: v for k, v in enumerate(spec)}
    try:
        seeds = Seeds({k: instance.index(str(v)) for k, v in items.items()})
        seeds.validate(instance)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad roots {spec!r}: {exc}") from None
    return seeds


def _seeds_or_default(instance: Instance, spec) -> Seeds:
    seeds = _roots(instance, spec)
    return seeds if seeds is not None else select_seeds(instance)


def _penalty(instance: Instance, args) -> PenaltyConfig:
    overrides = {}
    if args.penalty is not None:
        overrides = {f"lambda{i}": args.penalty for i in range(1, 5)}
    try:
        return PenaltyConfig.default(instance, M=args.M, L=args.L, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _roots_doc(instance: Instance, seeds: Seeds) -> dict:
    return {str(k): instance.names[r] for k, r in seeds.roots.items()}


# ---------------------------------------------------------------- commands


def cmd_gen_grid(args, run: _Run) -> int:
    if args.attributes == "seeded-random":
        run.seed(args)
    run.config = {
        "rows": args.rows,
        "cols": args.cols,
        "p": args.p,
        "attributes": args.attributes,
        "metric": args.metric,
    }
    try:
        inst = generate_grid(args.rows, args.cols, args.p, args.attributes, args.seed, args.metric)
    except InstanceError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out)
    run.artifacts[str(out)] = sha256_file(out)
    run.finish(out)
    return EXIT_OK


def cmd_build(args, run: _Run) -> int:
    inst = _load(run, args.instance)
    seeds = _seeds_or_default(inst, args.roots)
    config = _penalty(inst, args)
    run.config = {"form": args.form, "penalty": config.to_dict(), "roots": _roots_doc(inst, seeds)}
    if args.form == "qubo":
        model = build_qubo(inst, seeds, config)
        text = export_qubo(model)
    else:
        text = export_dqm(build_dqm(inst, seeds, config))
    run.write(args.out, text)
    run.finish(args.out)
    return EXIT_OK


def cmd_solve(args, run: _Run) -> int:
    inst = _load(run, args.instance)
    seeds = _seeds_or_default(inst, args.roots)
    config = _penalty(inst, args)
    model = build_qubo(inst, seeds, config)
    params: dict = {"sampler": args.sampler, "penalty": config.to_dict(), "roots": _roots_doc(inst, seeds)}
    if args.sampler == "sa":
        run.seed(args)
        sa = SAParams(args.restarts, args.sweeps, None, args.seed, args.workers)
        params.update(sa.to_dict())
        sample = solve_sa(model, sa)
    else:
        params["max_vars"] = args.max_vars
        try:
            sample = solve_exact(model, args.max_vars)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    assignment, flows, report = decode(model, sample.bits, inst)
    doc = {
        "kind": "solution",
        "area_ids": list(inst.names),
        "num_vars": model.num_vars,
        "params": params,
        "energy": sample.energy,
        "restart_index": sample.restart_index,
        "bits": rle_encode(sample.bits),
        "labels": list(assignment.labels),
        "roots": _roots_doc(inst, seeds),
        "flows": [[inst.names[i], inst.names[j], v] for (i, j), v in sorted(flows.flows.items())],
        "heterogeneity": heterogeneity(inst, assignment),
        "feasibility": report.to_dict(),
    }
    run.config = params
    run.write(args.out, _dump(doc))
    run.finish(args.out)
    return EXIT_OK if report.feasible else EXIT_VIOLATION


def cmd_verify(args, run: _Run) -> int:
    inst = _load(run, args.instance)
    doc = _read_json(run, args.solution)
    assignment = _labels(inst, doc)
    seeds = _roots(inst, doc.get("roots"))
    contiguity = check_contiguity(inst, assignment)
    report: dict = {
        "contiguous": contiguity.ok,
        "disconnected_regions": contiguity.disconnected_regions(),
        "components": {
            str(k): [[inst.names[a] for a in comp] for comp in comps]
            for k, comps in sorted(contiguity.components.items())
        },
        "heterogeneity": heterogeneity(inst, assignment),
    }
    ok = contiguity.ok
    if seeds is not None:
        try:
            flows = complete_flows(inst, assignment, seeds)
        except ValueError as exc:
            report["flow_completion"] = {"status": "root-misplaced", "detail": str(exc)}
            ok = False
        else:
            report["flow_completion"] = {
                "status": "ok" if flows is not None else "failed",
                "max_flow": None if flows is None else flows.max_flow(),
            }
            ok = ok and flows is not None
        if args.theorem1 and "detail" not in report["flow_completion"]:
            run.config["theorem1"] = {"M": args.M, "mode": args.mode, "budget": args.budget}
            if args.mode == "randomized":
                run.seed(args)
            verdict = theorem1_harness(inst, assignment, seeds, args.M, args.mode, args.budget, args.seed or 0)
            report["theorem1"] = {
                "contiguous": verdict.contiguous,
                "zero_penalty_flow": verdict.zero_penalty_flow,
                "consistent": verdict.consistent,
                "nodes_explored": verdict.nodes_explored,
            }
            ok = ok and verdict.consistent
    elif args.theorem1:
        raise UsageError("--theorem1 needs roots in the solution document")
    report["ok"] = ok
    report["manifest"] = run.manifest().to_dict()
    print(_dump(report), end="")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_hybrid(args, run: _Run) -> int:
    inst = _load(run, args.instance)
    if args.p is not None:
        try:
            inst = inst.with_p(args.p)
        except InstanceError as exc:
            raise UsageError(str(exc)) from None
    run.seed(args)
    sa = SAParams(args.restarts, args.sweeps, None, args.seed, args.workers)
    run.config = {"p": inst.p, "max_iters": args.max_iters, "seed_strategy": args.seed_strategy, "sa": sa.to_dict()}
    state = run_pipeline(inst, None, None, args.max_iters, sa, args.seed_strategy)
    doc = {"kind": "hybrid-state", "params": run.config, **state.to_dict(inst)}
    doc["contiguous"] = check_contiguity(inst, state.assignment).ok
    run.write(args.out, _dump(doc))
    run.finish(args.out)
    return EXIT_OK if doc["contiguous"] else EXIT_VIOLATION


def cmd_export_svg(args, run: _Run) -> int:
    inst = _load(run, args.instance)
    doc = _read_json(run, args.solution)
    assignment = _labels(inst, doc)
    seeds = _roots(inst, doc.get("roots"))
    if inst.coordinates is None:
        raise UsageError("instance has no x/y coordinates to draw")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    export_svg(inst, assignment, out, seeds)
    run.artifacts[str(out)] = sha256_file(out)
    run.finish(out)
    return EXIT_OK


def _parse_size(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 6x6, got {text!r}") from None
    return rows, cols


def cmd_bench(args, run: _Run) -> int:
    run.seed(args)
    sa = SAParams(args.restarts, args.sweeps, None, args.seed, args.workers)
    run.config = {"sizes": [f"{r}x{c}" for r, c in args.sizes], "p": args.p, "max_iters": args.max_iters, "sa": sa.to_dict()}
    rows = []
    for r, c in args.sizes:
        inst = generate_grid(r, c, args.p, "seeded-random", seed=args.seed)
        t0 = time.perf_counter()
        state = run_pipeline(inst, None, None, args.max_iters, sa)
        rows.append(
            {
                "size": f"{r}x{c}",
                "areas": inst.n,
                "p": inst.p,
                "initial_objective": state.initial_objective,
                "objective": state.objective,
                "iterations": state.iteration,
                "contiguous": check_contiguity(inst, state.assignment).ok,
                "seconds": round(time.perf_counter() - t0, 4),
            }
        )
        print(f"{r}x{c}: {state.initial_objective:.4f} -> {state.objective:.4f} in {rows[-1]['seconds']:.3f}s")
    run.write(args.out, _dump({"kind": "bench", "params": run.config, "results": rows}))
    run.finish(args.out)
    return EXIT_OK if all(row["contiguous"] for row in rows) else EXIT_VIOLATION


# ---------------------------------------------------------------- parser


def _penalty_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--roots", help="comma-separated root area ids, region 1 first (default: max-min dispersion)")
    p.add_argument("--M", type=int, help="flow bound per edge (default n - 1)")
    p.add_argument("--L", type=int, help="bits per flow (default ceil(log2(M + 1)))")
    p.add_argument("--penalty", type=float, help="one value for all four penalty weights (default 1 + sum of w)")


def _sa_args(p: argparse.ArgumentParser, restarts: int, sweeps: int) -> None:
    p.add_argument("--restarts", type=int, default=restarts)
    p.add_argument("--sweeps", type=int, default=sweeps)
    p.add_argument("--seed", type=int, help="RNG seed (drawn and recorded in the manifest when omitted)")
    p.add_argument("--workers", type=int, default=1, help="threads for annealing restarts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialqubo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-grid", help="write a rook-adjacency grid instance")
    p.add_argument("rows", type=int)
    p.add_argument("cols", type=int)
    p.add_argument("--p", type=int, required=True, help="number of regions")
    p.add_argument("--attributes", choices=["constant", "coordinate-sum", "seeded-random"], default="constant")
    p.add_argument("--metric", choices=["l2", "l1"], default="l2")
    p.add_argument("--seed", type=int, help="seed for seeded-random attributes")
    p.add_argument("--out", default="instance.json")
    p.set_defaults(func=cmd_gen_grid)

    p = sub.add_parser("build", help="compile an instance into a QUBO or DQM text export")
    p.add_argument("--instance", required=True)
    p.add_argument("--form", choices=["qubo", "dqm"], default="qubo")
    p.add_argument("--out", default="model.txt")
    _penalty_args(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="anneal or enumerate the monolithic QUBO")
    p.add_argument("--instance", required=True)
    p.add_argument("--sampler", choices=["sa", "exact"], default="sa")
    p.add_argument("--max-vars", type=int, default=24, help="size limit for the exact sampler")
    p.add_argument("--out", default="solution.json")
    _sa_args(p, 16, 1000)
    _penalty_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser(
        "verify",
        help="check contiguity and flow feasibility of a labeling",
        description=(
            "Reports connectivity per region and, when the document has roots, whether "
            "spanning-tree flow completion succeeds. --theorem1 additionally searches "
            "flows in 0..M on intra-region edges; the exhaustive mode is practical up to "
            "about 6 areas with M <= 3, the randomized mode stops after --budget draws."
        ),
    )
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--theorem1", action="store_true")
    p.add_argument("--M", type=int, default=3)
    p.add_argument("--mode", choices=["exhaustive", "randomized"], default="exhaustive")
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--seed", type=int, help="seed for the randomized theorem-1 search")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("hybrid", help="run the seeding and boundary-refinement pipeline")
    p.add_argument("--instance", required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--seed-strategy", choices=["greedy", "qubo"], default="greedy")
    p.add_argument("--out", default="state.json")
    _sa_args(p, 8, 1000)
    p.set_defaults(func=cmd_hybrid)

    p = sub.add_parser("export-svg", help="draw a labeling as an SVG map")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--out", default="map.svg")
    p.set_defaults(func=cmd_export_svg)

    p = sub.add_parser("bench", help="time the hybrid pipeline on seeded random grids")
    p.add_argument("--sizes", type=lambda s: [_parse_size(t) for t in s.split(",")], default=[(6, 6), (10, 10)])
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--out", default="bench.json")
    _sa_args(p, 8, 1000)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    run = _Run(argv)
    try:
        return args.func(args, run)
    except (UsageError, InstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
