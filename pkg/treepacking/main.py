"""Main entry point for the treepacking command line."""

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from treepacking import __version_full__
from treepacking.config import DEFAULT_CONFIG_FILE, Config, ConstructionOptions
from treepacking.errors import (
    IdOutOfRange,
    KindMismatch,
    NoNonBadVertex,
    ParseError,
    SizeTooLarge,
    TreePackingError,
    UsageError,
)
from treepacking.graph_core import (
    Tree,
    canonical_form,
    enumerate_trees,
    format_edge_list,
    is_bad_vertex,
    is_path,
    is_star,
    parse_tree,
    random_tree,
)
from treepacking.labeling import (
    label_bound_t5,
    label_bound_t6,
    labeled_pack_path4,
    labeled_pack_t5,
    labeled_pack_t6,
    lambda2_upper_bound,
)
from treepacking.oracle import SearchConstraints, max_label_packing, search_placements
from treepacking.path_packing import PathView, path4_placement
from treepacking.permutation import format_cycles, parse_cycles
from treepacking.tree_packing import build_placement
from treepacking.verifier import (
    CertificateKind,
    verify_certificate,
    verify_labeled_packing,
    verify_placement,
)

logger = logging.getLogger(__name__)

POWER_KINDS = {
    4: CertificateKind.PATH4,
    5: CertificateKind.GOOD_TREE,
    6: CertificateKind.WELL_TREE,
}


def setup_logging(verbosity: int = 0, color: bool = False, log_file: str = "", silent: bool = False):
    """Setup logging configuration.

    Logs go to stderr so stdout carries only results.

    Args:
        verbosity: Verbosity level (0=INFO, 1=DEBUG, 2+=detailed DEBUG)
        color: Enable colored logging output
        log_file: Optional path of a log file ("" for none)
        silent: Only show warnings and errors
    """
    if silent:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG

    if color:
        try:
            import colorlog

            handler = colorlog.StreamHandler(sys.stderr)
            handler.setFormatter(
                colorlog.ColoredFormatter(
                    "%(log_color)s%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                    log_colors={
                        "DEBUG": "cyan",
                        "INFO": "green",
                        "WARNING": "yellow",
                        "ERROR": "red",
                        "CRITICAL": "red,bg_white",
                    },
                )
            )
            handlers = [handler]
        except ImportError:
            # Fallback if colorlog not available
            handlers = [logging.StreamHandler(sys.stderr)]
    else:
        handlers = [logging.StreamHandler(sys.stderr)]

    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )

    # Library internals only at -vv
    if verbosity >= 2:
        logging.getLogger("networkx").setLevel(logging.DEBUG)
    else:
        logging.getLogger("networkx").setLevel(logging.WARNING)


def _add_format(parser: argparse.ArgumentParser, choices: Sequence[str] = ("text", "json")):
    parser.add_argument(
        "--format",
        choices=choices,
        default=choices[0],
        dest="output_format",
        help=f"Output format (default: {choices[0]})",
    )


def _add_input(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--input",
        required=True,
        metavar="FILE",
        help="Tree as a 1-based edge list ('-' reads stdin)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treepacking",
        description="treepacking - labeled packings of trees into their powers",
    )

    parser.add_argument(
        "-V",
        "--version",
        action="version",
        version=f"treepacking {__version_full__}",
    )

    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        dest="verbosity",
        help="Increase verbosity (-v for DEBUG, -vv for detailed DEBUG with library logs)",
    )

    parser.add_argument(
        "-c",
        "--config",
        type=str,
        default=DEFAULT_CONFIG_FILE,
        metavar="FILE",
        help=f"Path to configuration file (default: {DEFAULT_CONFIG_FILE})",
    )

    parser.add_argument(
        "-C",
        "--color",
        action="store_true",
        help="Enable colored logging output (requires colorlog package)",
    )

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    pack = sub.add_parser("pack", help="Construct a certified placement")
    _add_input(pack)
    pack.add_argument("--power", type=int, choices=(4, 5, 6), required=True)
    pack.add_argument("--vertex", type=int, metavar="V", help="Special vertex (1-based)")
    pack.add_argument(
        "--labels",
        action="store_true",
        dest="with_labels",
        help="Also build the labeled packing",
    )
    _add_format(pack)

    verify = sub.add_parser("verify", help="Check a permutation against a certificate kind")
    _add_input(verify)
    verify.add_argument("--power", type=int, required=True)
    verify.add_argument("--sigma", required=True, metavar="CYCLES", help='e.g. "(1 2 4 3)"')
    verify.add_argument("--vertex", type=int, metavar="V", help="Special vertex (1-based)")
    verify.add_argument("--labels", metavar="JSON", help="Label per vertex as a JSON array")
    verify.add_argument(
        "--kind",
        help="Certificate kind (Path4, WellPath, GoodPath, WellTree, GoodTree)",
    )
    _add_format(verify)

    oracle = sub.add_parser("oracle", help="Exhaustive search on small trees")
    _add_input(oracle)
    oracle.add_argument("--power", type=int, required=True)
    oracle.add_argument(
        "--count-labels",
        action="store_true",
        dest="count_labels",
        help="Report the largest label count instead of listing placements",
    )
    oracle.add_argument("--limit", type=int, default=1, metavar="N", help="Placements to list")
    oracle.add_argument("--vertex", type=int, metavar="V", help="Special vertex (1-based)")
    oracle.add_argument("--kind", help="Certificate kind the placements must satisfy")
    _add_format(oracle)

    gen = sub.add_parser("gen", help="Generate a random tree")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    _add_format(gen, ("edges", "json"))

    batch = sub.add_parser("batch", help="Run the construction over a tree corpus")
    batch.add_argument("--max-n", type=int, dest="max_n", metavar="N")
    batch.add_argument("--samples-per-size", type=int, dest="samples_per_size", metavar="M")
    batch.add_argument(
        "--fallback-oracle",
        action=argparse.BooleanOptionalAction,
        default=None,
        dest="fallback_oracle",
        help="Allow exhaustive search on small components",
    )
    batch.add_argument("--workers", type=int, metavar="N")
    batch.add_argument("--seed", type=int)
    batch.add_argument("--json", action="store_true", dest="json_summary")

    canon = sub.add_parser("canon", help="Print the canonical form of a tree")
    _add_input(canon)
    _add_format(canon)

    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Returns:
        Namespace object containing parsed arguments
    """
    return build_parser().parse_args(argv)


@dataclass
class RunConfig:
    """One validated invocation."""

    command: str
    output_format: str = "text"
    input_path: Optional[str] = None
    power: Optional[int] = None
    vertex: Optional[int] = None
    with_labels: bool = False
    sigma: Optional[str] = None
    labels: Optional[str] = None
    kind: Optional[str] = None
    limit: int = 1
    count_labels: bool = False
    n: Optional[int] = None
    seed: int = 0
    max_n: int = 9
    samples_per_size: int = 0
    sample_sizes: Tuple[int, ...] = (20, 50, 100)
    workers: int = 1
    json_summary: bool = False
    construction: ConstructionOptions = field(default_factory=ConstructionOptions)
    oracle_max_vertices: int = 9
    max_leaves: int = 20


def build_run_config(args: argparse.Namespace, config: Config) -> RunConfig:
    """Merge parsed arguments with configuration; command-line values win."""
    construction = config.to_construction_options()
    command = args.command
    run = RunConfig(
        command=command,
        output_format=getattr(args, "output_format", "text"),
        construction=construction,
        oracle_max_vertices=int(config.get("oracle.max_vertices", 9)),
        max_leaves=int(config.get("corpus.max_leaves_exhaustive", 20)),
    )
    for name in ("power", "vertex", "sigma", "labels", "kind", "n"):
        if hasattr(args, name):
            setattr(run, name, getattr(args, name))
    run.input_path = getattr(args, "input", None)
    run.with_labels = getattr(args, "with_labels", False)
    run.count_labels = getattr(args, "count_labels", False)
    run.limit = getattr(args, "limit", 1)

    if command == "gen":
        run.seed = args.seed
    if command == "batch":
        run.max_n = args.max_n if args.max_n is not None else int(config.get("batch.max_n"))
        run.samples_per_size = (
            args.samples_per_size
            if args.samples_per_size is not None
            else int(config.get("batch.samples_per_size"))
        )
        run.sample_sizes = tuple(config.get("batch.sample_sizes", [20, 50, 100]))
        run.workers = args.workers if args.workers is not None else int(config.get("batch.workers"))
        run.seed = args.seed if args.seed is not None else int(config.get("batch.seed"))
        run.json_summary = args.json_summary
        run.output_format = "json" if args.json_summary else "text"
        if args.fallback_oracle is not None:
            run.construction = ConstructionOptions(
                search_fallback=args.fallback_oracle,
                search_max_vertices=construction.search_max_vertices,
                max_glue_attempts=construction.max_glue_attempts,
                node_budget=construction.node_budget,
            )

    if run.vertex is not None and run.vertex < 1:
        raise IdOutOfRange("vertex ids start at 1")
    if run.power is not None and run.power < 1:
        raise ParseError("--power must be at least 1")
    if run.limit is not None and run.limit < 1:
        raise ParseError("--limit must be at least 1")
    if command == "gen" and (run.n is None or run.n < 1):
        raise ParseError("--n must be at least 1")
    if command == "batch" and (run.max_n < 1 or run.samples_per_size < 0 or run.workers < 1):
        raise ParseError("--max-n and --workers must be positive, --samples-per-size non-negative")
    return run


def _read_tree(path: str) -> Tree:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
    except (OSError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot read '{path}': {e}")
    return parse_tree(text)


def _vertex(t: Tree, vertex: Optional[int]) -> Optional[int]:
    if vertex is None:
        return None
    if vertex > t.n:
        raise IdOutOfRange(f"vertex id {vertex} outside 1..{t.n}")
    return vertex - 1


def _emit(config: RunConfig, record: Dict[str, Any], text: str) -> None:
    if config.output_format == "json":
        print(json.dumps(record, sort_keys=True))
    else:
        print(text)


def _cmd_pack(config: RunConfig) -> int:
    t = _read_tree(config.input_path)
    x = _vertex(t, config.vertex)
    kind = POWER_KINDS[config.power]
    trace: Tuple[str, ...] = ()
    labeled = None

    if kind is CertificateKind.PATH4:
        if not is_path(t):
            raise KindMismatch("--power 4 packs paths only")
        p = PathView.from_tree(t)
        if x is not None and x != p.order[0]:
            if x != p.order[-1]:
                raise KindMismatch(f"vertex {x + 1} is not an end of the path")
            p = p.reversed()
        sigma = path4_placement(p)
        report = verify_certificate(t, sigma, kind, p.order[0])
        x = p.order[0]
        if config.with_labels:
            labeled = labeled_pack_path4(p)
    else:
        if x is None:
            x = 0
            if kind is CertificateKind.GOOD_TREE:
                candidates = [v for v in range(t.n) if not is_bad_vertex(t, v)]
                if not candidates:
                    raise NoNonBadVertex("no vertex can anchor a good placement")
                x = candidates[0]
        result = build_placement(t, kind, x, options=config.construction)
        sigma, report, trace = result.sigma, result.report, result.trace
        if config.with_labels:
            if kind is CertificateKind.WELL_TREE:
                labeled = labeled_pack_t6(t, config.max_leaves, config.construction)
            else:
                labeled = labeled_pack_t5(t, config.max_leaves, config.construction)

    record: Dict[str, Any] = {
        "command": "pack",
        "power": config.power,
        "kind": kind.value,
        "vertex": x + 1,
        "sigma": format_cycles(sigma),
        "report": report.to_dict(),
        "trace": list(trace),
    }
    lines = [f"sigma: {format_cycles(sigma)}", report.render_text()]
    if trace:
        lines.append(f"trace: {' > '.join(trace)}")
    if labeled is not None:
        record["labeled"] = labeled.to_dict()
        lines.append(f"labeled sigma: {format_cycles(labeled.sigma)}")
        lines.append(f"labels: {json.dumps(list(labeled.labels))}")
        lines.append(f"label_count: {labeled.label_count}")
    _emit(config, record, "\n".join(lines))
    return 0 if report.overall else 1


def _parse_labels(text: str) -> List[int]:
    try:
        labels = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"labels are not valid JSON: {e}")
    if not isinstance(labels, list):
        raise ParseError("labels must be a JSON array")
    return labels


def _cmd_verify(config: RunConfig) -> int:
    t = _read_tree(config.input_path)
    sigma = parse_cycles(config.sigma, t.n)
    x = _vertex(t, config.vertex)
    k = config.power

    if config.labels is not None:
        report = verify_labeled_packing(t, sigma, _parse_labels(config.labels), k)
    else:
        kind = CertificateKind.parse(config.kind) if config.kind else None
        if kind is None and k in POWER_KINDS and (x is not None or k == 4):
            kind = POWER_KINDS[k]
            if k == 4 and not is_path(t):
                kind = None
        if kind is not None and kind.power != k:
            raise KindMismatch(f"{kind.value} lives in T^{kind.power}, not T^{k}")
        if kind is None:
            report = verify_placement(t, sigma, k)
        else:
            report = verify_certificate(t, sigma, kind, x)

    record = {"command": "verify", "power": k, "report": report.to_dict()}
    _emit(config, record, report.render_text())
    return 0 if report.overall else 1


def _cmd_oracle(config: RunConfig) -> int:
    t = _read_tree(config.input_path)
    x = _vertex(t, config.vertex)
    k = config.power
    limit = config.oracle_max_vertices

    if config.count_labels:
        count, witness = max_label_packing(t, k, limit)
        record = {
            "command": "oracle",
            "power": k,
            "label_count": count,
            "witness": format_cycles(witness) if witness is not None else None,
        }
        if witness is None:
            text = "no placement exists"
        else:
            text = f"label_count: {count}\nwitness: {format_cycles(witness)}"
        _emit(config, record, text)
        return 0 if witness is not None else 1

    if config.kind:
        kind = CertificateKind.parse(config.kind)
        if kind.power != k:
            raise KindMismatch(f"{kind.value} lives in T^{kind.power}, not T^{k}")
        if kind.needs_vertex and x is None:
            raise KindMismatch(f"{kind.value} needs --vertex")
        constraints = SearchConstraints.for_kind(kind, t, x)
    else:
        constraints = SearchConstraints(power=k)
    found = search_placements(t, constraints, limit=config.limit, max_vertices=limit)
    record = {
        "command": "oracle",
        "power": k,
        "placements": [format_cycles(sigma) for sigma in found],
    }
    text = "\n".join(format_cycles(sigma) for sigma in found) or "no placement exists"
    _emit(config, record, text)
    return 0 if found else 1


def _cmd_gen(config: RunConfig) -> int:
    t = random_tree(config.n, config.seed)
    if config.output_format == "json":
        print(json.dumps({"n": t.n, "edges": [[u + 1, v + 1] for u, v in t.edges()]}))
    else:
        sys.stdout.write(format_edge_list(t))
    return 0


def _cmd_canon(config: RunConfig) -> int:
    t = _read_tree(config.input_path)
    form = canonical_form(t)
    _emit(config, {"command": "canon", "n": t.n, "canonical_form": form}, form)
    return 0


@dataclass(frozen=True)
class BatchJob:
    tree: Tree
    group: str
    all_vertices: bool
    options: ConstructionOptions
    max_leaves: int


def check_tree(job: BatchJob) -> Dict[str, Any]:
    """Construct and check every requested placement and labeled packing of one tree."""
    t = job.tree
    form = canonical_form(t)
    checks = 0
    failures: List[Dict[str, Any]] = []

    def fail(vertex: Optional[int], kind: str, message: str, trace: Sequence[str] = ()):
        failures.append(
            {
                "group": job.group,
                "form": form,
                "vertex": vertex + 1 if vertex is not None else None,
                "kind": kind,
                "error": message,
                "trace": list(trace),
            }
        )

    for kind in (CertificateKind.WELL_TREE, CertificateKind.GOOD_TREE):
        vertices = [
            v
            for v in range(t.n)
            if not (kind is CertificateKind.GOOD_TREE and is_bad_vertex(t, v))
        ]
        if not job.all_vertices:
            vertices = vertices[:1]
        for x in vertices:
            checks += 1
            try:
                build_placement(t, kind, x, options=job.options)
            except TreePackingError as e:
                fail(x, kind.value, str(e), getattr(e, "trace", ()))

    cap = lambda2_upper_bound(t)
    for name, pack, bound, exact in (
        ("labeled_t6", labeled_pack_t6, label_bound_t6, False),
        ("labeled_t5", labeled_pack_t5, label_bound_t5, True),
    ):
        checks += 1
        try:
            packing = pack(t, job.max_leaves, job.options)
            expected = bound(t, job.max_leaves)
        except SizeTooLarge:
            checks -= 1
            continue
        except TreePackingError as e:
            fail(None, name, str(e), getattr(e, "trace", ()))
            continue
        p = packing.label_count
        if p < expected or (exact and p != expected) or p > cap:
            fail(None, name, f"label count {p}, bound {expected}, cap {cap}")

    return {"group": job.group, "checks": checks, "failures": failures}


def _batch_jobs(config: RunConfig) -> List[BatchJob]:
    jobs = []
    for n in range(4, config.max_n + 1):
        for t in enumerate_trees(n):
            if not is_star(t):
                jobs.append(BatchJob(t, f"n={n}", True, config.construction, config.max_leaves))
    for size in config.sample_sizes:
        for i in range(config.samples_per_size):
            t = random_tree(size, config.seed + size * 100003 + i)
            if not is_star(t):
                jobs.append(
                    BatchJob(t, f"random n={size}", False, config.construction, config.max_leaves)
                )
    return jobs


def _cmd_batch(config: RunConfig) -> int:
    jobs = _batch_jobs(config)
    logger.info("Checking %d trees with %d worker(s)", len(jobs), config.workers)
    started = time.monotonic()
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(check_tree, jobs))
    else:
        results = [check_tree(job) for job in jobs]
    logger.info("Batch finished in %.1fs", time.monotonic() - started)

    rows: Dict[str, Dict[str, Any]] = {}
    failures: List[Dict[str, Any]] = []
    for result in results:
        row = rows.setdefault(result["group"], {"group": result["group"], "trees": 0, "checks": 0, "failures": 0})
        row["trees"] += 1
        row["checks"] += result["checks"]
        row["failures"] += len(result["failures"])
        failures.extend(result["failures"])

    ok = not failures
    if config.output_format == "json":
        print(json.dumps({"ok": ok, "rows": list(rows.values()), "failures": failures}, sort_keys=True))
    else:
        print(f"{'group':<16}{'trees':>8}{'checks':>10}{'failures':>10}")
        for row in rows.values():
            print(f"{row['group']:<16}{row['trees']:>8}{row['checks']:>10}{row['failures']:>10}")
        for failure in failures:
            vertex = failure["vertex"] if failure["vertex"] is not None else "-"
            print(
                f"FAIL {failure['group']} {failure['form']} x={vertex} "
                f"{failure['kind']}: {failure['error']}"
            )
            if failure["trace"]:
                print(f"  trace: {' > '.join(failure['trace'])}")
        print(f"overall: {'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


COMMANDS = {
    "pack": _cmd_pack,
    "verify": _cmd_verify,
    "oracle": _cmd_oracle,
    "gen": _cmd_gen,
    "batch": _cmd_batch,
    "canon": _cmd_canon,
}


def run(config: RunConfig) -> int:
    """Execute one subcommand and map errors to exit codes."""
    try:
        return COMMANDS[config.command](config)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TreePackingError as e:
        print(f"error: {e}", file=sys.stderr)
        report = getattr(e, "report", None)
        if report is not None:
            print(report.render_text(), file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    args = parse_args(argv)

    config = Config(config_file=args.config)
    errors = config.validate_schema()
    if errors:
        for error in errors:
            print(f"ERROR: {error}", file=sys.stderr)
        return 2

    # Verbosity: command-line -v overrides config
    config_verbosity = config.get("logging.verbosity", "info")
    verbosity = args.verbosity if args.verbosity > 0 else (1 if config_verbosity == "debug" else 0)
    color_enabled = args.color or config.get("logging.color_enabled", False)
    setup_logging(
        verbosity=verbosity,
        color=color_enabled,
        log_file=config.get("logging.log_file", ""),
        silent=config_verbosity == "silent" and args.verbosity == 0,
    )

    try:
        run_config = build_run_config(args, config)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return run(run_config)


if __name__ == "__main__":
    sys.exit(main())
