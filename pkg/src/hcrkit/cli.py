"""Command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .classify import fit_mdc
from .errors import DataError, NumericalError
from .features import EXTRACTORS, extract
from .harness import (
    CLASSIFIERS,
    ExperimentConfig,
    FeatureCache,
    compare_extractors,
    compare_networks,
    evaluation_table,
    load_dataset,
    per_character_report,
    preprocess_dataset,
    run_experiment,
    split_indices,
    write_outputs,
)
from .imaging import generate_glyphs, load_image, save_pgm, write_dataset
from .mlp import init_mlp, one_hot, train_bp, train_lm
from .preprocess import preprocess

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

log = logging.getLogger("hcrkit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> list[str]:
    return [t for t in text.split(",") if t]


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        over["output_dir"] = args.out
    for name in ("dataset_dir", "train_per_class", "test_per_class", "shuffle_seed"):
        val = getattr(args, name, None)
        if val is not None:
            over[name] = val
    if getattr(args, "extractors", None):
        over["extractors"] = tuple(args.extractors)
    if getattr(args, "classifiers", None):
        over["classifiers"] = tuple(args.classifiers)
    if getattr(args, "alphabet", None):
        over["alphabet"] = tuple(args.alphabet)
    if getattr(args, "light_foreground", False):
        over["polarity"] = "light"
    synth = {k: getattr(args, k) for k in ("samples_per_class", "canvas", "stroke_width",
                                         "jitter_translate", "jitter_stroke")
             if getattr(args, k, None) is not None}
    if synth:
        over["synthetic"] = replace(cfg.synthetic, **synth)
    return replace(cfg, **over)


def _out_dir(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output_dir or ".")


def cmd_gen_synthetic(args) -> int:
    cfg = _load_config(args)
    ds = generate_glyphs(replace(cfg.synthetic, seed=cfg.seed), cfg.alphabet)
    paths = write_dataset(ds, _out_dir(cfg))
    print(f"wrote {len(paths)} glyph images to {_out_dir(cfg)}")
    return 0


def cmd_preprocess(args) -> int:
    pre = preprocess(load_image(args.input), "light" if args.light_foreground else "dark")
    save_pgm(args.out_skeleton, pre.skeleton.image)
    save_pgm(args.out_binary, pre.binary)
    print(f"threshold={pre.threshold} box={tuple(pre.box)} crop={pre.binary.shape[1]}x{pre.binary.shape[0]}")
    return 0


def cmd_extract(args) -> int:
    pre = preprocess(load_image(args.input), "light" if args.light_foreground else "dark")
    fv = extract(pre, args.extractor)
    out = Path(args.out)
    if out.suffix.lower() == ".json":
        out.write_text(json.dumps({"extractor": fv.extractor, "values": fv.values.tolist()}) + "\n")
    else:
        out.write_text(",".join(repr(float(v)) for v in fv.values) + "\n")
    print(f"{fv.extractor}: {len(fv)} features -> {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    ds = load_dataset(cfg)
    prepared, _ = preprocess_dataset(ds, cfg.polarity)
    train, _ = split_indices(ds, prepared.keys(), cfg.train_per_class, cfg.test_per_class,
                             cfg.shuffle_seed)
    cache = FeatureCache(prepared)
    y = ds.labels[train]
    out = _out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    mlp_cfg = replace(cfg.mlp, seed=cfg.seed)
    for extractor in cfg.extractors:
        X = cache.matrix(train, extractor)
        for clf in cfg.classifiers:
            stem = out / f"{clf}_{extractor}"
            if clf == "mdc":
                model = fit_mdc(list(zip(X, y)), ds.alphabet, extractor)
                Path(f"{stem}.json").write_text(model.to_json() + "\n")
            else:
                net = init_mlp((X.shape[1], mlp_cfg.hidden, len(ds.alphabet)), seed=mlp_cfg.seed)
                trainer = train_bp if clf == "mlp_bp" else train_lm
                net, trace = trainer(net, X, one_hot(y, len(ds.alphabet)), mlp_cfg)
                Path(f"{stem}.json").write_text(net.to_json() + "\n")
                Path(f"{stem}_log.csv").write_text(trace.to_csv())
            print(f"trained {clf} on {extractor} -> {stem}.json")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(cfg)
    table = evaluation_table(report)
    write_outputs(_out_dir(cfg), report, [table])
    print(table.format())
    return 0


def cmd_compare_extractors(args) -> int:
    cfg = _load_config(args)
    report, table = compare_extractors(cfg, paper_reference=args.paper_reference)
    chars = [c for c in args.chars if c in report.alphabet]
    tables = [table]
    if chars:
        tables.append(per_character_report(report, chars))
    write_outputs(_out_dir(cfg), report, tables)
    print("\n\n".join(t.format() for t in tables))
    return 0


def cmd_compare_networks(args) -> int:
    cfg = _load_config(args)
    if not args.extractors and not args.config:
        cfg = replace(cfg, extractors=("geometric", "gradient"))
    report, tables = compare_networks(cfg, paper_reference=args.paper_reference)
    write_outputs(_out_dir(cfg), report, tables)
    print("\n\n".join(t.format() for t in tables))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")
    out_dir = argparse.ArgumentParser(add_help=False)
    out_dir.add_argument("--out", help="output directory")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--dataset-dir", help="directory of <LABEL>_<id>.png|pgm files")
    data.add_argument("--alphabet", type=_csv_list, help="comma-separated class names")
    data.add_argument("--train-per-class", type=int)
    data.add_argument("--test-per-class", type=int)
    data.add_argument("--shuffle-seed", type=int)
    data.add_argument("--samples-per-class", type=int, help="synthetic renderings per class")
    data.add_argument("--canvas", type=int)
    data.add_argument("--stroke-width", type=float)
    data.add_argument("--jitter-translate", type=float)
    data.add_argument("--jitter-stroke", type=float)
    data.add_argument("--extractors", type=_csv_list)
    data.add_argument("--light-foreground", action="store_true")

    parser = _Parser(prog="hcrkit", description="Handwritten character recognition experiments.",
                     epilog="exit codes: 0 ok, 1 usage/config, 2 data, 3 numerical failure")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-synthetic", parents=[common, out_dir, data], help="render synthetic glyphs")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("preprocess", parents=[common], help="binarize, thin and crop one image")
    p.add_argument("--input", required=True)
    p.add_argument("--out-skeleton", required=True)
    p.add_argument("--out-binary", required=True)
    p.add_argument("--light-foreground", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", parents=[common], help="feature vector of one image")
    p.add_argument("--input", required=True)
    p.add_argument("--extractor", choices=EXTRACTORS, default="proposed")
    p.add_argument("--out", required=True, help="output file, .csv or .json")
    p.add_argument("--light-foreground", action="store_true")
    p.set_defaults(func=cmd_extract)

    for name, func, helptext in (
            ("train", cmd_train, "fit classifiers on the training split and save models"),
            ("evaluate", cmd_evaluate, "run one experiment and write report.json/tables.csv")):
        p = sub.add_parser(name, parents=[common, out_dir, data], help=helptext)
        p.add_argument("--classifiers", type=_csv_list,
                       help=f"comma-separated subset of {','.join(CLASSIFIERS)}")
        p.set_defaults(func=func)

    p = sub.add_parser("compare-extractors", parents=[common, out_dir, data],
                       help="MDC accuracy of the four extractors")
    p.add_argument("--chars", type=_csv_list, default=["A", "L", "Z"],
                   help="characters for the per-character table")
    p.add_argument("--paper-reference", action="store_true",
                   help="add the published accuracies as an annotation column")
    p.set_defaults(func=cmd_compare_extractors)

    p = sub.add_parser("compare-networks", parents=[common, out_dir, data],
                       help="MLP BP vs MLP LM on geometric and gradient features")
    p.add_argument("--paper-reference", action="store_true")
    p.set_defaults(func=cmd_compare_networks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"hcrkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"hcrkit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"hcrkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
