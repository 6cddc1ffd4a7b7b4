"""Command-line entry point.

Data goes to stdout or --out files; diagnostics go to stderr.  Exit
status: 0 success, 1 validation problems, 2 I/O or transport problems.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from collections.abc import Iterator
from typing import IO

from . import cost as cost_mod
from .core import CONVENTIONS, dataset_info, normalize_dataset_id
from .evaluate import cross_matrix, recall_table, render_matrix, render_report
from .features import read_features, read_query_embeddings
from .grounder import GrounderConfig, ground, read_predictions, \
    write_predictions
from .ingest import (NlqFieldMap, canonicalize, corpus_stats, filter_split,
                     parse_charades_sta, parse_dense_caption_json,
                     parse_generic_jsonl, parse_nlq_json, read_canonical,
                     read_duration_index, render_stats, write_canonical)
from .sampling import build_epoch, export_batches, load_plan
from .tables import FORMATS
from .unify import (DEFAULT_API_KEY_ENV, QueryCache, UnifierBackend,
                    UnifierUnavailable, unify_corpus)

log = logging.getLogger("vtgkit")

_INGEST_FORMATS = ("auto", "charades-sta", "dense-caption", "nlq", "generic")

# layout inference for datasets whose community distribution is known
_DATASET_LAYOUTS = {
    "charades-sta": "charades-sta",
    "activitynet-captions": "dense-caption",
    "tacos": "dense-caption",
    "youcook2": "dense-caption",
    "coin": "dense-caption",
    "ego4d-nlq": "nlq",
    "goalstep": "nlq",
    "naq": "nlq",
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the contract reserves 2 for I/O."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@contextlib.contextmanager
def _out_sink(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as handle:
            yield handle


def _comma_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return doc


def _pick(args: argparse.Namespace, config: dict, name: str, default):
    """Flag if given, else config value, else hard default."""
    value = getattr(args, name)
    if value is not None:
        return value
    for key in (name, name.replace("_", "-")):
        if key in config:
            return config[key]
    return default


def _shared_flags(suppress: bool) -> _Parser:
    # subparsers copy their parsed namespace over the root one, so the
    # copies they inherit must SUPPRESS defaults or a pre-subcommand -v
    # would be wiped out
    holder = _Parser(add_help=False)
    holder.add_argument("-v", "--verbose", action="count",
                        default=argparse.SUPPRESS if suppress else 0,
                        help="-v for progress, -vv for debug (stderr only)")
    holder.add_argument("--config", metavar="PATH",
                        default=argparse.SUPPRESS if suppress else None,
                        help="JSON file supplying values for omitted flags")
    return holder


def build_parser() -> _Parser:
    parser = _Parser(prog="vtgkit", parents=[_shared_flags(False)],
                     description="Corpus, unification, sampling, grounding "
                                 "and cost tooling for temporal grounding.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                required=True)
    common = _shared_flags(True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("ingest", "convert annotations to the canonical corpus format")
    p.add_argument("--dataset", default=None,
                   help="dataset id (required unless --format generic)")
    p.add_argument("--annotations", required=True, metavar="PATH",
                   help="annotation file")
    p.add_argument("--format", choices=_INGEST_FORMATS, default="auto",
                   help="annotation layout (default: auto, by dataset)")
    p.add_argument("--split", choices=("train", "val", "test"),
                   default="train", help="split tag (default: train)")
    p.add_argument("--duration-index", metavar="PATH", default=None,
                   help="JSONL sidecar of video_id/duration pairs")
    p.add_argument("--field-map", metavar="PATH", default=None,
                   help="JSON key overrides for the nlq layout")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="canonical corpus output (default: stdout)")
    p.set_defaults(func=_cmd_ingest)

    p = add("unify", "fill unified_query over a corpus")
    p.add_argument("--corpus", required=True, metavar="PATH")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="unified corpus output (default: stdout)")
    p.add_argument("--backend", choices=("rules", "llm"), default=None,
                   help="unifier backend (default: rules)")
    p.add_argument("--endpoint", default=None, help="chat API URL (llm)")
    p.add_argument("--model", default=None, help="model name (llm)")
    p.add_argument("--prompt", metavar="PATH", default=None,
                   help="system prompt file (default: bundled)")
    p.add_argument("--cache", metavar="DIR", default=None,
                   help="response cache directory (llm)")
    p.add_argument("--timeout", type=float, default=None, metavar="S",
                   help="request timeout (default: 30)")
    p.add_argument("--max-retries", type=int, default=None, metavar="N",
                   help="attempts per query (default: 3)")
    p.add_argument("--concurrency", type=int, default=None, metavar="N",
                   help="max in-flight requests (default: 4)")
    p.add_argument("--fail-fraction", type=float, default=None, metavar="F",
                   help="abort when this fraction of calls fail "
                        "(default: 0.1)")
    p.add_argument("--api-key-env", default=None, metavar="NAME",
                   help=f"API key variable (default: {DEFAULT_API_KEY_ENV})")
    p.set_defaults(func=_cmd_unify)

    p = add("sample", "emit a balanced batch manifest")
    p.add_argument("--corpus", required=True, metavar="PATH")
    p.add_argument("--seed", type=int, required=True,
                   help="sampling seed (required)")
    p.add_argument("--stage", choices=("I", "II"), default=None,
                   help="plan defaults to apply")
    p.add_argument("--plan", metavar="PATH", default=None,
                   help="JSON plan file; flags override it")
    p.add_argument("--iterations", type=int, default=None, metavar="N",
                   help="batches per replica (default: 10)")
    p.add_argument("--datasets", default=None, metavar="A,B,...",
                   help="override the plan's dataset list")
    p.add_argument("--videos-per-dataset", type=int, default=None, metavar="N")
    p.add_argument("--queries-per-video", type=int, default=None, metavar="N")
    p.add_argument("--replicas", type=int, default=None, metavar="N")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="manifest output (default: stdout)")
    p.set_defaults(func=_cmd_sample)

    p = add("ground", "localize queries in one video's features")
    p.add_argument("--features", required=True, metavar="PATH",
                   help="frame-feature file")
    p.add_argument("--queries", required=True, metavar="PATH",
                   help="query-embedding file")
    p.add_argument("--index", required=True, metavar="PATH",
                   help="uid sidecar for --queries, one per row")
    p.add_argument("--video-id", default=None,
                   help="label for diagnostics (default: file stem)")
    p.add_argument("--window-lengths", default=None, metavar="A,B,...",
                   help="window seconds, ascending (default: 5,10,20,40)")
    p.add_argument("--stride", type=float, default=None, metavar="S",
                   help="window start spacing (default: 2.5)")
    p.add_argument("--nms-iou", type=float, default=None, metavar="T",
                   help="suppression overlap (default: 0.5)")
    p.add_argument("--top-k", type=int, default=None, metavar="K",
                   help="candidates kept per query (default: 5)")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="predictions output (default: stdout)")
    p.set_defaults(func=_cmd_ground)

    p = add("eval", "score predictions against a corpus")
    p.add_argument("--preds", required=True, metavar="PATH")
    p.add_argument("--gt", required=True, metavar="PATH",
                   help="canonical corpus with ground-truth spans")
    p.add_argument("--convention", choices=("auto", "long", "short"),
                   default="auto",
                   help="threshold set (default: auto by dataset)")
    p.add_argument("--dataset", default=None,
                   help="restrict ground truth to one dataset")
    p.add_argument("--split", choices=("train", "val", "test"), default=None,
                   help="restrict ground truth to one split")
    p.add_argument("--format", choices=FORMATS, default=None,
                   help="table format (default: aligned-text)")
    p.add_argument("--figure", metavar="PATH", default=None,
                   help="also render a recall bar chart")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="report output (default: stdout)")
    p.set_defaults(func=_cmd_eval)

    p = add("matrix", "render a train/test transfer matrix")
    p.add_argument("--cells", required=True, metavar="PATH",
                   help='JSONL of {"train","test","value"} entries')
    p.add_argument("--rows", default=None, metavar="A,B,...",
                   help="row order (default: sorted)")
    p.add_argument("--cols", default=None, metavar="A,B,...",
                   help="column order (default: sorted)")
    p.add_argument("--format", choices=FORMATS, default=None,
                   help="table format (default: aligned-text)")
    p.add_argument("--figure", metavar="PATH", default=None,
                   help="also render a heatmap")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="matrix output (default: stdout)")
    p.set_defaults(func=_cmd_matrix)

    p = add("cost", "compare per-video compute cost")
    p.add_argument("--method", action="append", default=None, metavar="NAME",
                   help="unitime, universalvtg, or a backbone name; "
                        "repeatable (default: both built-ins)")
    p.add_argument("--seconds", type=float, required=True,
                   help="video length in seconds")
    p.add_argument("--registry", metavar="PATH", default=None,
                   help="backbone registry JSON (default: bundled)")
    p.add_argument("--coefficient", type=float, default=None, metavar="C",
                   help="grounding TFLOPs/s for backbone methods "
                        f"(default: {cost_mod.DEFAULT_GROUNDING_COEFFICIENT:g})")
    p.add_argument("--format", choices=FORMATS, default=None,
                   help="table format (default: aligned-text)")
    p.add_argument("--figure", metavar="PATH", default=None,
                   help="also render a cost bar chart")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="table output (default: stdout)")
    p.set_defaults(func=_cmd_cost)

    p = add("stats", "summarize a canonical corpus")
    p.add_argument("--corpus", required=True, metavar="PATH")
    p.add_argument("--format", choices=FORMATS, default=None,
                   help="table format (default: aligned-text)")
    p.add_argument("--figure", metavar="PATH", default=None,
                   help="also render per-dataset charts")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="table output (default: stdout)")
    p.set_defaults(func=_cmd_stats)

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_ingest(args: argparse.Namespace, config: dict) -> int:
    layout = args.format
    dataset = normalize_dataset_id(args.dataset) if args.dataset else None
    if layout == "auto":
        layout = _DATASET_LAYOUTS.get(dataset or "", "generic")
    if layout != "generic" and not dataset:
        raise ValueError(f"--dataset is required for the {layout} layout")
    with open(args.annotations, encoding="utf-8") as handle:
        if layout == "charades-sta":
            raws, rejections = parse_charades_sta(handle, args.split)
        elif layout == "dense-caption":
            raws, rejections = parse_dense_caption_json(
                handle.read(), dataset, args.split)
        elif layout == "nlq":
            field_map = NlqFieldMap()
            if args.field_map:
                with open(args.field_map, encoding="utf-8") as fm:
                    field_map = NlqFieldMap.from_json(fm.read())
            raws, rejections = parse_nlq_json(handle.read(), dataset,
                                              args.split, field_map)
        else:
            raws, rejections = parse_generic_jsonl(handle)
    durations = None
    if args.duration_index:
        with open(args.duration_index, encoding="utf-8") as handle:
            durations = read_duration_index(handle)
    result = canonicalize(raws, durations, rejections)
    with _out_sink(args.out) as sink:
        written = write_canonical(result.records, sink)
    log.info("ingest: %d records written, %d rejected, %d clipped",
             written, len(result.rejections), result.clipped)
    for warning in result.warnings:
        log.warning("ingest: %s: %s", warning.source, warning.reason)
    return 0


def _cmd_unify(args: argparse.Namespace, config: dict) -> int:
    kind = _pick(args, config, "backend", "rules")
    prompt_path = _pick(args, config, "prompt", None)
    system_prompt = None
    if prompt_path:
        with open(prompt_path, encoding="utf-8") as handle:
            system_prompt = handle.read()
    backend = UnifierBackend(
        kind=kind,
        endpoint=_pick(args, config, "endpoint", "") or "",
        model=_pick(args, config, "model", "") or "",
        system_prompt=system_prompt,
        timeout_s=float(_pick(args, config, "timeout", 30.0)),
        max_retries=int(_pick(args, config, "max_retries", 3)),
        max_concurrency=int(_pick(args, config, "concurrency", 4)),
        api_key_env=_pick(args, config, "api_key_env", DEFAULT_API_KEY_ENV),
    )
    cache_dir = _pick(args, config, "cache", None)
    cache = QueryCache(cache_dir) if cache_dir else None
    with open(args.corpus, encoding="utf-8") as handle:
        records = read_canonical(handle)
    out_records, report = unify_corpus(
        records, backend, cache,
        fail_fraction=float(_pick(args, config, "fail_fraction", 0.1)))
    with _out_sink(args.out) as sink:
        written = write_canonical(out_records, sink)
    print(json.dumps({
        "queries": report.queries, "llm_calls": report.llm_calls,
        "cache_hits": report.cache_hits, "fallbacks": report.fallbacks,
        "failures": report.failures,
        "mean_latency_s": round(report.mean_latency_s, 6),
        "total_tflops": report.total_tflops,
    }), file=sys.stderr)
    log.info("unify: %d records written", written)
    return 0


def _cmd_sample(args: argparse.Namespace, config: dict) -> int:
    doc: dict = {}
    plan_path = _pick(args, config, "plan", None)
    if plan_path:
        with open(plan_path, encoding="utf-8") as handle:
            doc = json.load(handle)
        if not isinstance(doc, dict):
            raise ValueError("plan file must hold a JSON object")
    for name in ("stage", "videos_per_dataset", "queries_per_video",
                 "replicas"):
        value = _pick(args, config, name, None)
        if value is not None:
            doc[name] = value
    datasets = _pick(args, config, "datasets", None)
    if datasets is not None:
        doc["datasets"] = _comma_list(datasets) \
            if isinstance(datasets, str) else list(datasets)
    plan = load_plan(doc, seed=args.seed)
    iterations = int(_pick(args, config, "iterations", 10))
    with open(args.corpus, encoding="utf-8") as handle:
        corpus = read_canonical(handle)
    batches = build_epoch(plan, corpus, iterations)
    with _out_sink(args.out) as sink:
        written = export_batches(batches, sink)
    log.info("sample: %d batches (%d samples each)", written,
             plan.samples_per_batch)
    return 0


def _cmd_ground(args: argparse.Namespace, config: dict) -> int:
    windows = _pick(args, config, "window_lengths", None)
    if isinstance(windows, str):
        windows = [float(w) for w in _comma_list(windows)]
    cfg_kwargs = {}
    if windows is not None:
        cfg_kwargs["window_lengths"] = tuple(windows)
    for name in ("stride", "nms_iou", "top_k"):
        value = _pick(args, config, name, None)
        if value is not None:
            cfg_kwargs[name] = value
    cfg = GrounderConfig(**cfg_kwargs)
    video_id = args.video_id or args.features.rsplit("/", 1)[-1] \
        .removesuffix(".vtgf")
    with open(args.features, "rb") as handle:
        features = read_features(handle, video_id=video_id)
    with open(args.queries, "rb") as qh, \
            open(args.index, encoding="utf-8") as ih:
        queries = read_query_embeddings(qh, ih)
    preds = [ground(features, q, cfg) for q in queries]
    with _out_sink(args.out) as sink:
        written = write_predictions(preds, sink)
    log.info("ground: %d queries against %s (%d frames)", written,
             video_id, features.num_frames)
    return 0


def _cmd_eval(args: argparse.Namespace, config: dict) -> int:
    with open(args.preds, encoding="utf-8") as handle:
        preds = read_predictions(handle)
    with open(args.gt, encoding="utf-8") as handle:
        records = read_canonical(handle)
    if args.dataset:
        wanted = normalize_dataset_id(args.dataset)
        records = [r for r in records if r.dataset == wanted]
    if args.split:
        records = filter_split(records, args.split)
    datasets = sorted({r.dataset for r in records})
    if args.dataset:
        dataset = normalize_dataset_id(args.dataset)
    elif len(datasets) == 1:
        dataset = datasets[0]
    elif not datasets:
        dataset = "custom"
    else:
        raise ValueError(
            f"ground truth mixes datasets {datasets}; pass --dataset")
    if args.convention == "auto":
        convention = dataset_info(dataset).convention
    else:
        convention = CONVENTIONS[args.convention]
    gts = {r.uid: r.span for r in records}
    report = recall_table(preds, gts, convention, dataset)
    fmt = _pick(args, config, "format", "aligned-text")
    with _out_sink(args.out) as sink:
        sink.write(render_report([report], fmt) + "\n")
    if args.figure:
        from .figures import save_recall_figure
        save_recall_figure([report], args.figure)
        log.info("eval: figure written to %s", args.figure)
    return 0


def _cmd_matrix(args: argparse.Namespace, config: dict) -> int:
    cells: dict[tuple[str, str], float] = {}
    with open(args.cells, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                key = (normalize_dataset_id(str(obj["train"])),
                       normalize_dataset_id(str(obj["test"])))
                cells[key] = float(obj["value"])
            except (json.JSONDecodeError, KeyError, TypeError,
                    ValueError) as exc:
                raise ValueError(f"cells line {number}: {exc}") from exc
    rows = _comma_list(args.rows) if args.rows else None
    cols = _comma_list(args.cols) if args.cols else None
    if rows:
        rows = [normalize_dataset_id(r) for r in rows]
    if cols:
        cols = [normalize_dataset_id(c) for c in cols]
    matrix = cross_matrix(cells, rows, cols)
    fmt = _pick(args, config, "format", "aligned-text")
    with _out_sink(args.out) as sink:
        sink.write(render_matrix(matrix, fmt) + "\n")
    if args.figure:
        from .figures import save_matrix_figure
        save_matrix_figure(matrix, args.figure)
        log.info("matrix: figure written to %s", args.figure)
    return 0


def _cmd_cost(args: argparse.Namespace, config: dict) -> int:
    registry = cost_mod.load_registry(_pick(args, config, "registry", None))
    names = args.method or ["unitime", "universalvtg"]
    coefficient = _pick(args, config, "coefficient",
                        cost_mod.DEFAULT_GROUNDING_COEFFICIENT)
    methods = []
    for name in names:
        key = name.strip().lower()
        if key == "unitime":
            methods.append(cost_mod.unitime_method())
        elif key == "universalvtg":
            methods.append(cost_mod.universalvtg_method(registry))
        else:
            methods.append(cost_mod.MethodSpec(
                name=key,
                backbone=cost_mod.get_backbone(key, registry),
                grounding_coefficient=float(coefficient)))
    estimates = cost_mod.compare_methods(methods, args.seconds)
    fmt = _pick(args, config, "format", "aligned-text")
    with _out_sink(args.out) as sink:
        sink.write(cost_mod.render_cost_table(estimates, fmt, methods) + "\n")
    if args.figure:
        from .figures import save_cost_figure
        save_cost_figure(estimates, args.figure)
        log.info("cost: figure written to %s", args.figure)
    return 0


def _cmd_stats(args: argparse.Namespace, config: dict) -> int:
    with open(args.corpus, encoding="utf-8") as handle:
        records = read_canonical(handle)
    stats = corpus_stats(records)
    fmt = _pick(args, config, "format", "aligned-text")
    with _out_sink(args.out) as sink:
        sink.write(render_stats(stats, fmt) + "\n")
    if args.figure:
        from .figures import save_stats_figure
        save_stats_figure(stats, args.figure)
        log.info("stats: figure written to %s", args.figure)
    return 0


# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except UnifierUnavailable as exc:
        print(f"vtgkit {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"vtgkit {args.command}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"vtgkit {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
