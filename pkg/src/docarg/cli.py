"""Command-line surface.

Verbs: train, eval, predict, synth, visualize, cooccur, errors.
Exit codes: 0 ok, 1 usage, 2 data error, 3 training divergence.
The output directory defaults to $DOCARG_OUT, then the working directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import config as config_mod
from . import synth as synth_mod
from .data import load_dataset, load_predictions, save_dataset, save_predictions
from .exceptions import ConfigError, DataError, DivergenceError, DocargError
from .exports import (
    export_visuals,
    metrics_table_text,
    write_cooccurrence_csv,
    write_json,
)
from .metrics import count_errors
from .templates import make_template_registry
from .training import (
    evaluate_model,
    load_checkpoint,
    predict_instances,
    save_checkpoint,
    train,
)

USAGE_EXIT, DATA_EXIT, DIVERGENCE_EXIT = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _out_dir(args) -> str:
    out = args.out_dir or os.environ.get("DOCARG_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load_config(args) -> config_mod.RunConfig:
    if args.config:
        cfg = config_mod.load_config(args.config)
    else:
        cfg = config_mod.toy(args.variant or "span")
    if args.variant:
        cfg.variant = args.variant
        if cfg.variant == "prompt" and cfg.backend.decoder_layers < 1:
            cfg.backend.decoder_layers = 2
        if cfg.variant == "prompt" and cfg.optimizer.max_grad_norm is None:
            cfg.optimizer.max_grad_norm = 5.0
    if args.seed is not None:
        cfg.seed = args.seed
    if args.ablate:
        cfg.disable_cca = args.ablate in ("cca", "both")
        cfg.disable_rlig = args.ablate in ("rlig", "both")
    return cfg.validate()


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON or TOML RunConfig file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--variant", choices=["span", "prompt"], default=None)
    p.add_argument("--ablate", choices=["cca", "rlig", "both"], default=None)
    p.add_argument("--out-dir", default=None, help="defaults to $DOCARG_OUT or '.'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="docarg", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("train")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--dev", default=None)
    p.add_argument("--templates", default=None, help="template registry JSON")
    p.add_argument("--checkpoint", default=None, help="output path (default <out>/model.ckpt)")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("eval")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", default=None, help="JSON report path (default <out>/report.json)")

    p = sub.add_parser("predict")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--pred", default=None, help="output JSONL (default <out>/predictions.jsonl)")

    p = sub.add_parser("synth")
    _add_common(p)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=50)
    p.add_argument("--vocab", type=int, default=120)
    p.add_argument("--event-types", type=int, default=3)
    p.add_argument("--roles", type=int, default=6)
    p.add_argument("--clue-strength", type=float, default=0.9)

    p = sub.add_parser("visualize")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--index", type=int, default=0, help="instance index to export")

    p = sub.add_parser("cooccur")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--csv", default=None, help="output CSV (default <out>/cooccurrence.csv)")

    p = sub.add_parser("errors")
    _add_common(p)
    p.add_argument("--pred", required=True, help="prediction JSONL")
    p.add_argument("--data", required=True, help="gold JSONL")
    p.add_argument("--report", default=None, help="JSON output (default <out>/errors.json)")
    return parser


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    instances = load_dataset(args.data)
    dev = load_dataset(args.dev) if args.dev else None
    templates = None
    if args.templates:
        templates = make_template_registry(args.templates)
    checkpoint = train(cfg, instances, dev, templates, quiet=not args.verbose)
    out = args.checkpoint or os.path.join(_out_dir(args), "model.ckpt")
    save_checkpoint(checkpoint, out)
    print(f"saved checkpoint to {out}")
    if dev is not None:
        print(json.dumps(checkpoint["history"][-1], indent=2))
    return 0


def _cmd_eval(args) -> int:
    model, assets, _ = load_checkpoint(args.checkpoint)
    instances = load_dataset(args.data)
    report = evaluate_model(model, assets, instances)
    print(metrics_table_text(report))
    out = args.report or os.path.join(_out_dir(args), "report.json")
    write_json(out, report)
    print(f"wrote {out}")
    return 0


def _cmd_predict(args) -> int:
    model, assets, _ = load_checkpoint(args.checkpoint)
    instances = load_dataset(args.data)
    events = predict_instances(model, assets, instances)
    out = args.pred or os.path.join(_out_dir(args), "predictions.jsonl")
    save_predictions(events, out)
    print(f"wrote {out}")
    return 0


def _cmd_synth(args) -> int:
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else 13
    common = dict(
        vocab=args.vocab,
        n_event_types=args.event_types,
        n_roles=args.roles,
        clue_strength=args.clue_strength,
    )
    train_set = synth_mod.generate_synthetic(seed, args.n_train, **common)
    test_set = synth_mod.generate_synthetic(seed + 1, args.n_test, **common)
    save_dataset(train_set, os.path.join(out, "train.jsonl"))
    save_dataset(test_set, os.path.join(out, "test.jsonl"))
    templates = synth_mod.natural_templates(train_set)
    with open(os.path.join(out, "templates.json"), "w", encoding="utf-8") as fh:
        json.dump(templates, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out}/train.jsonl ({len(train_set)}), {out}/test.jsonl ({len(test_set)}), {out}/templates.json")
    return 0


def _cmd_visualize(args) -> int:
    model, assets, _ = load_checkpoint(args.checkpoint)
    instances = load_dataset(args.data)
    if not (0 <= args.index < len(instances)):
        raise DataError(f"--index {args.index} out of range for {len(instances)} instances")
    paths = export_visuals(model, assets, instances[args.index], _out_dir(args))
    for key, path in sorted(paths.items()):
        print(f"{key}: {path}")
    return 0


def _cmd_cooccur(args) -> int:
    instances = load_dataset(args.data)
    out = args.csv or os.path.join(_out_dir(args), "cooccurrence.csv")
    roles = write_cooccurrence_csv(out, instances)
    print(f"wrote {out} ({len(roles)} roles)")
    return 0


def _cmd_errors(args) -> int:
    preds = load_predictions(args.pred)
    golds = load_dataset(args.data)
    if len(preds) != len(golds):
        raise DataError(
            f"prediction file has {len(preds)} events but gold file has {len(golds)}"
        )
    report = count_errors(
        [ev.predictions for ev in preds], [list(inst.gold_args) for inst in golds]
    )
    out = args.report or os.path.join(_out_dir(args), "errors.json")
    write_json(out, report.to_dict())
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    print(f"wrote {out}")
    return 0


COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "synth": _cmd_synth,
    "visualize": _cmd_visualize,
    "cooccur": _cmd_cooccur,
    "errors": _cmd_errors,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return COMMANDS[args.verb](args)
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return DIVERGENCE_EXIT
    except (DataError, ConfigError, DocargError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
