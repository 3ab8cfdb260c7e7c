"""Command-line front end.

Every subcommand accepts ``--config-file FILE``: a JSON object whose keys
are option names (dashes or underscores). Values there override built-in
defaults and are themselves overridden by flags given on the command line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Sequence

from . import __version__
from .anonymizer import SCENARIOS, PrivacyConfig, anonymize
from .bench import GRID_CONFIGS, RunSettings, run_grid, write_grid_outputs
from .csvio import read_dataset, serialize_trace, write_dataset
from .gbdt import GbdtParams
from .hierarchy import GeneralizationHierarchy, HierarchyError
from .model import Original
from .prep import METHODS, STANDARD_METHODS, prepare
from .prep.backends import GatewayBackend, RuleBasedMock
from .prep.llm import INCOME_TARGET_INFO, build_imputation_prompt, build_prediction_prompt
from .privacy import privacy_summary

log = logging.getLogger("anonprep")

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAIL):
        super().__init__(message)
        self.code = code


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _privacy(text: str, seed: int) -> PrivacyConfig:
    try:
        return PrivacyConfig.parse(text, seed)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None


def _load_inputs(args):
    try:
        h = GeneralizationHierarchy.load(args.hierarchy)
    except (OSError, HierarchyError, ValueError) as exc:
        raise CliError(f"cannot load hierarchy {args.hierarchy}: {exc}") from None
    try:
        d = read_dataset(args.input, h)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read dataset {args.input}: {exc}") from None
    return d, h


def _backend(args):
    if args.llm == "mock":
        return RuleBasedMock(default_label=0)
    if args.llm == "gateway":
        return GatewayBackend.from_env()
    return None


def cmd_anonymize(args) -> int:
    cfg = _privacy(args.config, args.seed)
    d, h = _load_inputs(args)
    out, trace = anonymize(d, cfg, h, role=args.role)
    write_dataset(out, args.output)
    trace_path = Path(args.trace or f"{args.output}.trace.csv")
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    trace_path.write_text(serialize_trace(trace), encoding="utf-8")
    log.info("wrote %s and %s", args.output, trace_path)
    return EXIT_OK


def cmd_prepare(args) -> int:
    if args.method not in METHODS or args.method == "llm-predict":
        raise CliError(f"unknown preparation method {args.method!r}", EXIT_INVALID)
    d, h = _load_inputs(args)
    prepared = prepare(d, args.method, h, args.variants, args.mice_iterations, args.seed, _backend(args), args.batch_size)
    write_dataset(prepared.dataset, args.output)
    if args.method == "specialize":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "source_id", "weight"])
        for i, (src, wt) in enumerate(zip(prepared.provenance, prepared.weights)):
            w.writerow([i, int(src), repr(float(wt))])
        side = Path(args.weights or f"{args.output}.weights.csv")
        side.parent.mkdir(parents=True, exist_ok=True)
        side.write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


def cmd_bench(args) -> int:
    configs = _csv_list(args.configs)
    for c in configs:
        _privacy(c, args.seed)
    scenarios = _csv_list(args.scenarios)
    bad = [s for s in scenarios if s not in SCENARIOS]
    if bad:
        raise CliError(f"unknown scenario(s) {bad}", EXIT_INVALID)
    methods = _csv_list(args.methods)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise CliError(f"unknown method(s) {bad}", EXIT_INVALID)
    if args.synthetic:
        from .synth import generate_adult_like

        d, h = generate_adult_like(args.synthetic, args.seed)
    else:
        if not args.input:
            raise CliError("bench needs an input dataset or --synthetic N", EXIT_INVALID)
        d, h = _load_inputs(args)
    gbdt = GbdtParams(
        trees=args.trees, max_depth=args.max_depth, learning_rate=args.learning_rate, seed=args.seed
    )
    settings = RunSettings(
        variants=args.variants,
        gbdt=gbdt,
        mice_iterations=args.mice_iterations,
        seed=args.seed,
        backend=_backend(args),
        batch_size=args.batch_size,
        target_info=args.target_info,
    )
    reports = run_grid(d, h, scenarios, configs, methods, settings, args.ratio, args.jobs)
    paths = write_grid_outputs(reports, args.out_dir)
    failed = sum(1 for r in reports if "status" in r.extra)
    log.info("%d runs, %d failed; results in %s", len(reports), failed, paths["results"])
    return EXIT_OK


def cmd_privacy_metrics(args) -> int:
    d, _ = _load_inputs(args)
    if d.n == 0:
        raise CliError("privacy metrics need at least one record")
    sys.stdout.write(json.dumps(privacy_summary(d), sort_keys=True) + "\n")
    return EXIT_OK


def cmd_prompts(args) -> int:
    d, _ = _load_inputs(args)
    names = d.names
    records = list(d.records)
    out = []
    for start in range(0, len(records), args.batch_size):
        batch = records[start : start + args.batch_size]
        if args.kind == "prediction":
            req = build_prediction_prompt(args.dataset_name or d.name, d.label_name, args.target_info, batch, names)
        else:
            pairs = [(r, [n for n, c in zip(names, r.cells) if not isinstance(c, Original)]) for r in batch]
            pairs = [p for p in pairs if p[1]]
            if not pairs:
                continue
            req = build_imputation_prompt(args.dataset_name or d.name, pairs, names)
        out.append({"system_prompt": req.system_prompt, "user_prompt": req.user_prompt, "temperature": req.temperature})
        if args.max_batches and len(out) >= args.max_batches:
            break
    sys.stdout.write(json.dumps(out, ensure_ascii=False, indent=2) + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import generate_adult_like

    d, h = generate_adult_like(args.rows, args.seed)
    write_dataset(d, args.output)
    h.dump(args.hierarchy_out)
    return EXIT_OK


def _common(p: argparse.ArgumentParser, dataset: bool = True) -> None:
    p.add_argument("--config-file", help="JSON file with option defaults")
    if dataset:
        p.add_argument("input", nargs="?", help="dataset CSV")
        p.add_argument("--hierarchy", help="hierarchy JSON sidecar")
    p.add_argument("--seed", type=int, default=42)


def _llm_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--llm", choices=("none", "mock", "gateway"), default="none", help="backend for llm-* methods")
    p.add_argument("--batch-size", type=int, default=20)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anonprep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anonymize", help="simulate user-driven anonymization")
    _common(p)
    p.add_argument("--config", default="66-17-17", help="O-G-M percent triple, e.g. 66-17-17")
    p.add_argument("--role", default="data", help="sub-seed role key")
    p.add_argument("-o", "--output", default="anonymized.csv")
    p.add_argument("--trace", help="trace sidecar path (default OUTPUT.trace.csv)")
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("prepare", help="apply one preparation method")
    _common(p)
    p.add_argument("--method", default="simple", help=f"one of {', '.join(m for m in METHODS if m != 'llm-predict')}")
    p.add_argument("--variants", type=int, default=2)
    p.add_argument("--mice-iterations", type=int, default=10)
    p.add_argument("-o", "--output", default="prepared.csv")
    p.add_argument("--weights", help="weight/provenance sidecar path (default OUTPUT.weights.csv)")
    _llm_opts(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("bench", help="run the scenario x config x method grid")
    _common(p)
    p.add_argument("--synthetic", type=int, default=0, help="generate N synthetic rows instead of reading input")
    p.add_argument("--scenarios", default=",".join(SCENARIOS))
    p.add_argument("--configs", default=",".join(GRID_CONFIGS))
    p.add_argument("--methods", default=",".join(STANDARD_METHODS))
    p.add_argument("--variants", type=int, default=2)
    p.add_argument("--mice-iterations", type=int, default=10)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--target-info", default=INCOME_TARGET_INFO)
    p.add_argument("--out-dir", default="bench-out")
    _llm_opts(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("privacy-metrics", help="marketer risk and k-anonymity as JSON")
    _common(p)
    p.set_defaults(func=cmd_privacy_metrics)

    p = sub.add_parser("prompts", help="dump LLM prompt bytes for inspection")
    _common(p)
    p.add_argument("--kind", choices=("imputation", "prediction"), default="imputation")
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--max-batches", type=int, default=1, help="0 dumps every batch")
    p.add_argument("--dataset-name", default="")
    p.add_argument("--target-info", default=INCOME_TARGET_INFO)
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("synth", help="write a synthetic census-style dataset and its hierarchy")
    _common(p, dataset=False)
    p.add_argument("--rows", type=int, default=5000)
    p.add_argument("-o", "--output", default="synthetic.csv")
    p.add_argument("--hierarchy-out", default="synthetic.hierarchy.json")
    p.set_defaults(func=cmd_synth)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config_file", None):
        return args
    try:
        doc = json.loads(Path(args.config_file).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read config file {args.config_file}: {exc}", EXIT_INVALID) from None
    if not isinstance(doc, dict):
        raise CliError("config file must hold a JSON object", EXIT_INVALID)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    overrides = {}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise CliError(f"unknown option {key!r} in config file", EXIT_INVALID)
        if isinstance(value, list):
            value = ",".join(map(str, value))
        overrides[dest] = value
    sub.set_defaults(**overrides)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config_file(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        if hasattr(args, "hierarchy") and not getattr(args, "synthetic", 0):
            if not args.input or not args.hierarchy:
                raise CliError("an input dataset and --hierarchy are required", EXIT_INVALID)
        with warnings.catch_warnings():
            if not args.verbose:
                # expected whenever a config leaves no original values in a column
                warnings.filterwarnings("ignore", message="no original values")
            return args.func(args)
    except CliError as exc:
        print(f"anonprep: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
