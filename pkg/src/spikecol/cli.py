"""``spikecol`` command-line interface.

Subcommands: ``encode``, ``train``, ``eval``, ``experiment`` and ``rerun``.
Exit status is 0 on success, 1 for data or runtime errors and 2 for usage
errors (bad flags, unknown encoder, invalid config).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .column import load_network, save_network
from .config import RunConfig, config_from_dict, load_config
from .corpus import Corpus, Dictionary, build_dictionary, load_corpus, load_pgm, tokenize
from .encoders import ENCODERS, EncoderConfig, build_codebook, encode_sequence, encode_tokens, ttfs_encode
from .errors import ConfigurationError, SpikeColError
from .train import (EXPERIMENTS, Model, build_model, evaluate, experiment, train_epochs)

log = logging.getLogger("spikecol")

METRIC_FIELDS = ("epoch", "correct", "incorrect", "undecided", "accuracy")
TRACE_FIELDS = ("round", "act_group1", "act_group2", "decision")


class UsageError(Exception):
    """Bad invocation; maps to exit status 2."""


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_metrics(path: Path, metrics) -> None:
    rows = [(m.epoch, m.correct, m.incorrect, m.undecided, repr(m.accuracy)) for m in metrics]
    atomic_write(path, _csv_text(METRIC_FIELDS, rows))


def write_trace(path: Path, rounds) -> None:
    rows = [(r["round"], repr(r["act_group1"]), repr(r["act_group2"]), r["decision"]) for r in rounds]
    atomic_write(path, _csv_text(TRACE_FIELDS, rows))


def write_manifest(out: Path, command: List[str], cfg: RunConfig, seed: int, artifacts: dict,
                   started: float, extra: Optional[dict] = None) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": cfg.to_dict(),
        "artifacts": {k: str(v) for k, v in sorted(artifacts.items())},
        "duration_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.with_seed(args.seed)


def _read_sentences(path: Path) -> List[str]:
    """One sentence per non-blank, non-comment line; a trailing ``<TAB>label`` is dropped."""
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#") or line == "text\tlabel":
            continue
        out.append(line.split("\t")[0])
    return out


def cmd_encode(args, cfg: RunConfig) -> dict:
    enc = cfg.train.encoder_config
    rng = np.random.default_rng(args.seed)
    src = Path(args.input)
    if args.encoder == "ttfs":
        train = ttfs_encode(load_pgm(src), enc.window, invert=args.invert)
    else:
        sentences = _read_sentences(src)
        if not sentences:
            raise SpikeColError(f"{src}: no sentences to encode")
        vocab_src = _read_sentences(Path(args.corpus)) if args.corpus else sentences
        dictionary = build_dictionary(vocab_src, cfg.train.v_max)
        codebook = build_codebook(dictionary, enc) if args.encoder in ("codebook", "gauss-pos-word") else None
        items = [encode_tokens(args.encoder, tokenize(s), dictionary, enc, codebook, rng) for s in sentences]
        train = items[0] if len(items) == 1 else encode_sequence(items)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    events, grid = out / "events.csv", out / "grid.csv"
    train.to_csv(events)
    train.to_grid_csv(grid)
    print(f"events={len(train)} horizon={train.horizon} neurons={train.size}")
    return {"events": events, "grid": grid}


def _save_model(model: Model, out: Path) -> Path:
    d = out / "model"
    save_network(model.net, d, extra={"dictionary": model.dictionary.words,
                                      "encoder": model.config.encoder,
                                      "encoder_config": asdict(model.config.encoder_config)})
    return d


def _load_model(directory: Path, cfg: RunConfig) -> Model:
    manifest = json.loads((directory / "manifest.json").read_text())
    net = load_network(directory)
    dictionary = Dictionary(manifest["dictionary"])
    tcfg = replace(cfg.train, encoder=manifest["encoder"], network=net.config)
    enc = EncoderConfig(**manifest["encoder_config"])
    tcfg = replace(tcfg, encoder_config=enc)
    codebook = build_codebook(dictionary, enc) if tcfg.encoder in ("codebook", "gauss-pos-word") else None
    return Model(net, dictionary, codebook, tcfg)


def _corpus(path) -> Corpus:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"corpus not found: {p}")
    return load_corpus(p)


def cmd_train(args, cfg: RunConfig) -> dict:
    corpus = _corpus(args.corpus)
    if not corpus.usable_for_training:
        raise SpikeColError(f"{args.corpus}: training needs samples of both labels")
    tcfg = cfg.train if args.epochs is None else replace(cfg.train, epochs=args.epochs)
    model = build_model(corpus, tcfg)
    rng = np.random.default_rng(args.seed)
    metrics = train_epochs(model, corpus, rng)
    out = Path(args.out)
    write_metrics(out / "metrics.csv", metrics)
    model_dir = _save_model(model, out)
    last = metrics[-1]
    print(f"epochs={len(metrics)} final_correct={last.correct}/{len(corpus)} accuracy={last.accuracy:.3f}")
    return {"metrics": out / "metrics.csv", "model": model_dir, "corpus_sha256": corpus.content_hash()}


def cmd_eval(args, cfg: RunConfig) -> dict:
    corpus = _corpus(args.corpus)
    model = _load_model(Path(args.model), cfg) if args.model else build_model(corpus, cfg.train)
    before = model.net.weight_hash()
    ev = evaluate(model, corpus, np.random.default_rng(args.seed))
    after = model.net.weight_hash()
    out = Path(args.out)
    correct = sum(d is s.label for d, s in zip(ev.decisions, corpus))
    atomic_write(out / "metrics.csv", _csv_text(METRIC_FIELDS, [
        (0, correct, len(corpus) - correct - ev.undecided, ev.undecided, repr(ev.accuracy))]))
    atomic_write(out / "decisions.csv", _csv_text(
        ("index", "label", "decision", "h_correct", "h_incorrect", "undecided"),
        [(i, s.label.value, d.value, r.h_correct, r.h_incorrect, r.undecided_count)
         for i, (s, d, r) in enumerate(zip(corpus, ev.decisions, ev.reports))]))
    print(f"accuracy={ev.accuracy:.3f} undecided={ev.undecided} "
          + " ".join(f"{k}={v:.3f}" for k, v in ev.per_class.items()))
    if args.freeze_check:
        if before != after:
            raise SpikeColError(f"weights changed during evaluation ({before[:12]} -> {after[:12]})")
        print(f"freeze-check ok: weight hash {after}")
    return {"metrics": out / "metrics.csv", "decisions": out / "decisions.csv",
            "corpus_sha256": corpus.content_hash(), "weight_hash": after}


def _run_experiment(kind: str, cfg: RunConfig, seed: int, out: Path, corpus_path: Optional[str]) -> dict:
    cfg = cfg.with_seed(seed)
    corpus = _corpus(corpus_path) if corpus_path else None
    rep = experiment(kind, cfg.train, np.random.default_rng(seed), cfg.experiment, corpus)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(out / "trace.csv", rep.rounds)
    arts = {"trace": str(out / "trace.csv"), "report": str(out / "report.json")}
    if rep.metrics:
        write_metrics(out / "metrics.csv", rep.metrics)
        arts["metrics"] = str(out / "metrics.csv")
    report = {"kind": kind, "seed": seed, "success": bool(rep.success), "summary": rep.summary}
    atomic_write(out / "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return {"seed": seed, "success": bool(rep.success), "summary": rep.summary, "artifacts": arts}


def _job(payload):
    kind, cfg_dict, seed, out, corpus_path = payload
    return _run_experiment(kind, config_from_dict(cfg_dict), seed, Path(out), corpus_path)


def _describe(kind: str, result: dict) -> str:
    s = result["summary"]
    if kind == "single":
        tail = f"initial={s['initial_decision']} flipped_at={s['flipped_at']}"
    elif kind == "four":
        tail = f"solved_at={s['solved_at']} epochs={s['epochs']}"
    else:
        tail = (f"first_quintile={s['first_quintile_mean']:.2f} last_quintile={s['last_quintile_mean']:.2f} "
                f"final_accuracy={s['final_accuracy']:.2f} trend={'increasing' if s['trend'] else 'flat/decreasing'}")
    return f"{kind} seed={result['seed']} {'PASS' if result['success'] else 'FAIL'} {tail}"


def cmd_experiment(args, cfg: RunConfig) -> dict:
    out = Path(args.out)
    seeds = [args.seed + i for i in range(args.replicates)]
    dirs = [out if len(seeds) == 1 else out / f"seed-{s}" for s in seeds]
    payloads = [(args.kind, cfg.to_dict(), s, str(d), args.corpus) for s, d in zip(seeds, dirs)]
    if args.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_job, payloads))
    else:
        results = [_job(p) for p in payloads]
    for r in results:
        print(_describe(args.kind, r))
    if len(results) > 1:
        print(f"{args.kind}: {sum(r['success'] for r in results)}/{len(results)} seeds passed")
    arts = {}
    for r in results:
        for k, v in r["artifacts"].items():
            arts[k if len(results) == 1 else f"seed-{r['seed']}/{k}"] = v
    return arts


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (see README for the schema)")
    common.add_argument("--seed", type=int, default=0, help="master seed for every random draw (default 0)")
    common.add_argument("--out", default="out", help="output directory (default ./out)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    p = argparse.ArgumentParser(prog="spikecol", description="Spiking cortical-column sentiment classifier.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="{encode,train,eval,experiment,rerun}")

    e = sub.add_parser("encode", parents=[common], help="encode an image or sentences into spikes")
    e.add_argument("input", help="PGM image (ttfs) or text/TSV file with one sentence per line")
    e.add_argument("--encoder", required=True, choices=ENCODERS, metavar="NAME",
                   help=f"one of: {', '.join(ENCODERS)}")
    e.add_argument("--corpus", help="build the dictionary from this file instead of the input")
    e.add_argument("--invert", action="store_true", help="ttfs: bright pixels fire first")

    t = sub.add_parser("train", parents=[common], help="train on a labelled corpus")
    t.add_argument("corpus", help="TSV corpus (text<TAB>label)")
    t.add_argument("--epochs", type=int, help="override train.epochs")

    v = sub.add_parser("eval", parents=[common], help="evaluate with plasticity frozen")
    v.add_argument("corpus", help="TSV corpus (text<TAB>label)")
    v.add_argument("--model", help="model directory written by 'train' (default: fresh network)")
    v.add_argument("--freeze-check", action="store_true", help="fail unless weights are bit-identical afterwards")

    x = sub.add_parser("experiment", parents=[common], help="run the single / four / ten input experiment")
    x.add_argument("kind", choices=EXPERIMENTS)
    x.add_argument("--corpus", help="corpus to draw the samples from (default: the bundled ten-sentence set)")
    x.add_argument("--replicates", type=int, default=1, help="independent runs with seeds seed, seed+1, ...")
    x.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")

    r = sub.add_parser("rerun", help="repeat a run from its manifest.json")
    r.add_argument("manifest")
    r.add_argument("--out", help="write to this directory instead of the recorded one")
    return p


COMMANDS = {"encode": cmd_encode, "train": cmd_train, "eval": cmd_eval, "experiment": cmd_experiment}


def _execute(args, argv: List[str], cfg: Optional[RunConfig] = None) -> int:
    started = time.perf_counter()
    if getattr(args, "jobs", 1) < 1 or getattr(args, "replicates", 1) < 1:
        raise UsageError("--jobs and --replicates must be >= 1")
    if getattr(args, "epochs", None) is not None and args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    cfg = cfg or _resolve_config(args)
    arts = COMMANDS[args.command](args, cfg)
    extra = {k: arts.pop(k) for k in ("corpus_sha256", "weight_hash") if k in arts}
    path = write_manifest(Path(args.out), argv, cfg, args.seed, arts, started, extra)
    log.info("manifest written to %s", path)
    return 0


def _rerun(args, parser) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = list(manifest["command"])
    if args.out:
        argv += ["--out", args.out]
    inner = parser.parse_args(argv)
    cfg = config_from_dict(manifest["config"]).with_seed(inner.seed)
    return _execute(inner, argv, cfg)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rerun":
            return _rerun(args, parser)
        return _execute(args, argv)
    except (UsageError, ConfigurationError) as exc:
        print(f"spikecol: usage error: {exc}", file=sys.stderr)
        return 2
    except (SpikeColError, OSError, ValueError, FloatingPointError) as exc:
        print(f"spikecol: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
