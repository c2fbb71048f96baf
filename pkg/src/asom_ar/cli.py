"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import ADAPTER_SCHEMAS, RunConfig
from .datasets import Dataset, FormatError, load_dataset, manifest_csv, save_canonical, split_cv
from .modelio import ModelFormatError, load_model, save_model
from .patterns import extract_pattern, patterns_to_csv, patterns_to_svg, resample
from .pipeline import (
    DEFAULT_FRACTIONS,
    _trace,
    confusion_csv,
    evaluate,
    folds_csv,
    preprocess_dataset,
    report_text,
    sweep_csv,
    sweep_simulation,
    train_full,
)
from .skeleton import PreprocessError
from .synthetic import make_synthetic

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("asom_ar")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# short flags for the most used settings; every RunConfig field also gets
# a long flag named after it (asom_sigma -> --asom-sigma)
_ALIASES = {
    "--seed": "run_seed", "--out": "run_out", "--jobs": "run_jobs",
    "--epochs-asom": "asom_epochs", "--epochs-som": "som_epochs",
    "--sigma-asom": "asom_sigma", "--sigma-som": "som_sigma",
}
_SWITCHES = {"--constant-beta": "asom_constant_beta", "--zero-native": "asom_zero_native",
             "--stratify": "stratify"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", help="INI file with run settings")
    g.add_argument("--dataset", help="dataset path (directory or file, per adapter)")
    g.add_argument("--adapter", choices=["msr1", "msr2", "florence", "canonical"])
    g.add_argument("--softmax-exp", type=float, help="soft-max exponent for both maps")
    g.add_argument("--strict-sign", action="store_true", default=None,
                   help="use the output-layer update with the (y - d) sign")
    taken = {"dataset", "adapter", "stratify"}
    for flag, name in _ALIASES.items():
        g.add_argument(flag, dest=name, type=_TYPE[name], default=None)
        taken.add(name)
    for flag, name in _SWITCHES.items():
        g.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction, default=None)
        taken.add(name)
    for f in fields(RunConfig):
        if f.name in taken:
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            g.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            g.add_argument(flag, dest=f.name, type=_TYPE[f.name], default=None)


_TYPE = {f.name: {"int": int, "float": float, "bool": bool}.get(f.type, str)
         for f in fields(RunConfig)}


def build_config(args) -> RunConfig:
    try:
        cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    changes = {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            changes[f.name] = v
    if getattr(args, "softmax_exp", None) is not None:
        changes["asom_softmax_exp"] = changes["som_softmax_exp"] = args.softmax_exp
    if getattr(args, "strict_sign", None):
        changes["output_sign"] = "strict"
    if "adapter" in changes and "schema" not in changes:
        if ADAPTER_SCHEMAS.get(changes["adapter"]):
            changes["schema"] = ADAPTER_SCHEMAS[changes["adapter"]]
    try:
        return cfg.replace(**changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_fractions(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"--fractions must be comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError("--fractions is empty")
    return vals


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="asom-ar", description="Skeleton action recognition with an associative "
                "self-organizing map and internal simulation.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("ingest", help="convert a raw dataset to the canonical format")
    _add_config_flags(s)

    s = sub.add_parser("synth", help="write a synthetic canonical dataset")
    s.add_argument("--classes", type=int, default=5)
    s.add_argument("--per-class", type=int, default=12)
    s.add_argument("--noise", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("train", help="train with 10-fold model selection")
    _add_config_flags(s)

    for name, helptext in (("eval", "evaluate a model"), ("sweep", "simulation sweep"),
                           ("export-patterns", "original vs simulated winner patterns")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--model", required=True)
        s.add_argument("--dataset", help="defaults to the dataset recorded in the model")
        s.add_argument("--adapter", choices=["msr1", "msr2", "florence", "canonical"])
        s.add_argument("--out", required=True)
        s.add_argument("--all", action="store_true",
                       help="use every sequence instead of the held-out test set")
        s.add_argument("--allow-large", action="store_true",
                       help="permit simulated fractions above 0.5")
        if name == "eval":
            s.add_argument("--simulate", type=float, default=0.0)
        elif name == "sweep":
            s.add_argument("--fractions", type=_parse_fractions, default=DEFAULT_FRACTIONS)
        else:
            s.add_argument("--simulate", type=float, default=0.5)
            s.add_argument("--limit", type=int, default=10, help="sequences to export")

    s = sub.add_parser("inspect", help="print model metadata")
    s.add_argument("--model", required=True)
    return p


# --- outputs ------------------------------------------------------------------

def _versions() -> dict:
    import numba
    return {"asom_ar": __version__, "numpy": np.__version__, "numba": numba.__version__,
            "python": platform.python_version()}


def _write(out: Path, name: str, content: str | bytes, written: dict) -> None:
    path = out / name
    data = content.encode("utf-8") if isinstance(content, str) else content
    path.write_bytes(data)
    written[name] = hashlib.sha256(data).hexdigest()


def _finish(out: Path, command: str, cfg: RunConfig | None, extra: dict, written: dict) -> None:
    if cfg is not None:
        _write(out, "config.ini", cfg.to_ini(), written)
    manifest = {"command": command, "config": None if cfg is None else cfg.to_dict(),
                "seed": None if cfg is None else cfg.run_seed, "versions": _versions(),
                "outputs": dict(sorted(written.items())), **extra}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(cfg: RunConfig) -> Dataset:
    if not cfg.dataset:
        raise UsageError("--dataset is required")
    ds = load_dataset(cfg.dataset, cfg.adapter)
    for name, reason in ds.load_errors:
        log.warning("skipped %s: %s", name, reason)
    if len(ds) == 0:
        raise FormatError(f"no usable sequences in {cfg.dataset}")
    return ds


# --- commands -----------------------------------------------------------------

def cmd_ingest(args) -> int:
    cfg = build_config(args)
    ds = _load(cfg)
    out = _outdir(cfg.run_out)
    written = {}
    save_canonical(ds, out / "dataset.jsonl")
    written["dataset.jsonl"] = written_hash(out / "dataset.jsonl")
    _write(out, "counts.csv", manifest_csv(ds), written)
    errors = "".join(f"{n}\t{r}\n" for n, r in ds.load_errors)
    _write(out, "load_errors.tsv", errors, written)
    _finish(out, "ingest", cfg, {"sequences": len(ds), "skipped": len(ds.load_errors)}, written)
    print(f"{len(ds)} sequences, {len(ds.classes)} classes, {len(ds.load_errors)} files skipped")
    return EXIT_OK


def cmd_synth(args) -> int:
    ds = make_synthetic(args.classes, args.per_class, noise=args.noise, seed=args.seed)
    out = _outdir(args.out)
    written = {}
    save_canonical(ds, out / "dataset.jsonl")
    written["dataset.jsonl"] = written_hash(out / "dataset.jsonl")
    _write(out, "counts.csv", manifest_csv(ds), written)
    params = {"classes": args.classes, "per_class": args.per_class, "noise": args.noise,
              "seed": args.seed}
    _finish(out, "synth", None, {"synthetic": params}, written)
    print(f"wrote {len(ds)} synthetic sequences to {out / 'dataset.jsonl'}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = build_config(args)
    ds = _load(cfg)
    if cfg.adapter == "canonical":
        cfg = cfg.replace(schema=ds.schema)
    split = split_cv(ds, cfg.run_seed, stratify=cfg.stratify)
    result = train_full(ds, split, cfg)
    out = _outdir(cfg.run_out)
    written = {}
    model_path = out / "model.asom"
    save_model(result.bundle, model_path)
    written["model.asom"] = written_hash(model_path)
    _write(out, "folds.csv", folds_csv(result), written)
    split_doc = {"test": list(split.test), "folds": [list(f) for f in split.folds],
                 "seed": split.seed}
    _write(out, "split.json", json.dumps(split_doc, sort_keys=True) + "\n", written)
    _finish(out, "train", cfg, {"selected_fold": result.bundle.fold}, written)
    acc = result.fold_accuracies[result.bundle.fold]
    print(f"selected fold {result.bundle.fold} (validation accuracy {acc:.4f}); model: {model_path}")
    return EXIT_OK


def _eval_sequences(args, model):
    cfg = model.config
    if args.dataset:
        cfg = cfg.replace(dataset=args.dataset)
    if args.adapter:
        cfg = cfg.replace(adapter=args.adapter)
    ds = _load(cfg)
    if ds.schema != model.preprocess.schema:
        raise FormatError(f"dataset schema {ds.schema!r} does not match the model's "
                          f"{model.preprocess.schema!r}")
    if args.all:
        idx = list(range(len(ds)))
    else:
        idx = list(split_cv(ds, cfg.run_seed, stratify=cfg.stratify).test)
    return ds, idx, cfg


def cmd_eval(args) -> int:
    model = load_model(args.model)
    ds, idx, cfg = _eval_sequences(args, model)
    report = evaluate(model, [ds.sequences[i] for i in idx], args.simulate, args.allow_large)
    out = _outdir(args.out)
    written = {}
    text = report_text(report, model.classes)
    _write(out, "report.txt", text, written)
    _write(out, "confusion.csv", confusion_csv(report, model.classes), written)
    _finish(out, "eval", cfg, {"model": written_hash(args.model), "simulate": args.simulate,
                               "sequences": idx}, written)
    sys.stdout.write(text)
    return EXIT_OK


def written_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_sweep(args) -> int:
    model = load_model(args.model)
    ds, idx, cfg = _eval_sequences(args, model)
    reports = sweep_simulation(model, [ds.sequences[i] for i in idx], args.fractions,
                               args.allow_large)
    out = _outdir(args.out)
    written = {}
    table = sweep_csv(reports)
    _write(out, "sweep.csv", table, written)
    _write(out, "sweep.txt", "".join(report_text(r, model.classes) + "\n" for r in reports),
           written)
    _finish(out, "sweep", cfg, {"model": written_hash(args.model),
                                "fractions": list(args.fractions), "sequences": idx}, written)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_export(args) -> int:
    model = load_model(args.model)
    ds, idx, cfg = _eval_sequences(args, model)
    limit = 1.0 if args.allow_large else 0.5
    if not 0.0 <= args.simulate <= limit:
        raise UsageError(f"--simulate must lie in [0, {limit}]")
    idx = idx[:max(args.limit, 0)]
    seqs = [ds.sequences[i] for i in idx]
    frames = preprocess_dataset(seqs, model.preprocess)
    out = _outdir(args.out)
    written = {}
    rows = []
    zero = cfg.asom_zero_native
    for i, seq, f in zip(idx, seqs, frames):
        sid = seq.name or f"seq{i:04d}"
        orig = resample(extract_pattern(_trace(model.asom, f, 0.0, zero, model.options)),
                        model.k_max)
        sim = resample(extract_pattern(_trace(model.asom, f, args.simulate, zero, model.options)),
                       model.k_max)
        rows += [(sid, orig, False), (sid, sim, True)]
        title = f"{sid} ({model.classes[seq.label]}), {args.simulate:.0%} simulated"
        _write(out, f"{sid}.svg", patterns_to_svg(orig.points, sim.points, model.asom.shape, title),
               written)
    _write(out, "patterns.csv", patterns_to_csv(rows), written)
    _finish(out, "export-patterns", cfg, {"model": written_hash(args.model),
                                          "simulate": args.simulate, "sequences": idx}, written)
    print(f"exported {len(seqs)} sequences to {out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    m = load_model(args.model)
    lines = [
        f"format version: {m.format_version}",
        f"classes ({len(m.classes)}): {', '.join(m.classes)}",
        f"selected fold: {m.fold}",
        f"preprocess: schema={m.preprocess.schema} attention_k={m.preprocess.attention_k} "
        f"egocentric={m.preprocess.egocentric} scale={m.preprocess.scale}",
        f"A-SOM: {m.asom.shape.rows}x{m.asom.shape.cols}, native dim {m.asom.native.dim}, "
        f"{len(m.asom.externals)} external bank(s), sigma={m.asom.sigma}",
        f"K_max: {m.k_max}",
        f"SOM: {m.som2.shape.rows}x{m.som2.shape.cols}, dim {m.som2.dim}",
        f"output: {m.output.n_classes} x {m.output.dim}, gamma={m.output.gamma}",
        f"seed: {m.config.run_seed}",
    ]
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "synth": cmd_synth, "train": cmd_train, "eval": cmd_eval,
            "sweep": cmd_sweep, "export-patterns": cmd_export, "inspect": cmd_inspect}


def run(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        with np.errstate(invalid="raise", divide="raise", over="raise"):
            return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, ArithmeticError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, FormatError, PreprocessError, ModelFormatError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
