"""Command-line interface: ``covertlink <subcommand> [flags]``.

Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataio, pipeline
from .errors import InputError
from .splitter import DEFAULT_RATIOS, make_split

log = logging.getLogger("covertlink")


def _ratios(text: str) -> tuple[float, float, float]:
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--ratios takes three numbers, e.g. 0.85,0.05,0.10")
    return tuple(float(p) for p in parts)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of flag values; explicit flags win")
    p.add_argument("--seed", type=int)


def _add_synthetic(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--blocks", type=int)
    p.add_argument("--p-in", type=float)
    p.add_argument("--p-out", type=float)
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--noise", type=float)


def _add_split(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ratios", type=_ratios, help="train,val,test fractions (default 0.85,0.05,0.10)")
    p.add_argument("--neg-ratio", type=float, help="training negatives per positive (default 1)")
    p.add_argument("--eval-neg-ratio", type=float, help="val/test negatives per positive (default 1)")


def _add_overlay(p: argparse.ArgumentParser) -> None:
    p.add_argument("--decoder", choices=["dot", "mlp"])
    p.add_argument("--weight-mode", choices=["inverse_frequency", "uniform"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--hidden", type=int)
    p.add_argument("--embed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covertlink", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic block-model graph, features and block labels")
    _add_common(p)
    _add_synthetic(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("ingest", help="event log CSV -> co-occurrence edge list + id map")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--min-cooccurrence", type=int)

    p = sub.add_parser("split", help="edge list -> split file")
    _add_common(p)
    _add_split(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train one method on a split file")
    _add_common(p)
    _add_overlay(p)
    p.add_argument("--input", required=True, help="split file")
    p.add_argument("--features", help="side-information feature file")
    p.add_argument("--method", required=True, choices=pipeline.ALL_METHODS)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--loss-out", help="loss trace file (default: <out>.loss)")

    p = sub.add_parser("evaluate", help="score a model on the test partition of a split file")
    _add_common(p)
    p.add_argument("--input", required=True, help="split file")
    p.add_argument("--model", required=True)
    p.add_argument("--features")
    p.add_argument("--out", help="report file (default: stdout)")
    p.add_argument("--format", choices=["table", "json"])

    p = sub.add_parser("benchmark", help="run every method on one dataset and print the comparison")
    _add_common(p)
    _add_synthetic(p)
    _add_split(p)
    _add_overlay(p)
    p.add_argument("--input", help="edge list (omit to generate a synthetic graph)")
    p.add_argument("--features")
    p.add_argument("--method", action="append", choices=pipeline.METHODS,
                   help="restrict to these methods (repeatable)")
    p.add_argument("--out", help="report file (default: stdout)")
    p.add_argument("--format", choices=["table", "json"])
    return parser


DEFAULTS = {
    "seed": 0, "ratios": DEFAULT_RATIOS, "neg_ratio": 1.0, "eval_neg_ratio": 1.0,
    "format": "table", "min_cooccurrence": 1,
    "n": 400, "blocks": 4, "p_in": 0.15, "p_out": 0.01, "feature_dim": None, "noise": 0.5,
}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge defaults < config file < explicit flags."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        try:
            conf = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(conf, dict):
            raise InputError(f"{path}: config must be a JSON object")
        merged.update({k.replace("-", "_"): v for k, v in conf.items()})
    for k, v in vars(args).items():
        if v is not None or k not in merged:
            merged[k] = v
    if isinstance(merged.get("ratios"), list):
        merged["ratios"] = tuple(merged["ratios"])
    return argparse.Namespace(**merged)


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} not found: {p}")
    return p


def _require_parent(path) -> Path:
    p = Path(path)
    if not p.parent.exists():
        raise InputError(f"output directory does not exist: {p.parent}")
    return p


def _overlay(a) -> pipeline.Overlay:
    return pipeline.Overlay(epochs=getattr(a, "epochs", None), lr=getattr(a, "lr", None),
                            hidden=getattr(a, "hidden", None), embed=getattr(a, "embed", None),
                            decoder=getattr(a, "decoder", None), weight_mode=getattr(a, "weight_mode", None))


def _synthetic(a) -> dataio.SyntheticConfig:
    return dataio.SyntheticConfig(n=a.n, k=a.blocks, p_in=a.p_in, p_out=a.p_out,
                                  feature_dim=a.feature_dim, feature_noise=a.noise,
                                  imbalance_ratio=a.neg_ratio, seed=a.seed)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_generate(a) -> None:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    g, X, blocks = dataio.generate_synthetic(_synthetic(a))
    dataio.save_edge_list(out / "graph.txt", g)
    dataio.save_features(out / "features.csv", X)
    dataio.save_labels(out / "labels.txt", blocks)
    log.info("wrote %s (%d nodes, %d edges)", out, g.n, g.num_edges)


def cmd_ingest(a) -> None:
    rows = dataio.read_event_log(_require_file(a.input, "event log"))
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    g, id_map = dataio.ingest_events(rows, a.min_cooccurrence)
    dataio.save_edge_list(out / "graph.txt", g)
    dataio.save_id_map(out / "id_map.csv", id_map)


def cmd_split(a) -> None:
    g = dataio.load_edge_list(_require_file(a.input, "edge list"))
    out = _require_parent(a.out)
    split = make_split(g, a.ratios, a.seed, a.neg_ratio, a.eval_neg_ratio)
    dataio.save_split(out, split)


def _side_info(a, n: int):
    if not getattr(a, "features", None):
        return None
    return dataio.load_features(_require_file(a.features, "feature file"), n)


def cmd_train(a) -> None:
    split = dataio.load_split(_require_file(a.input, "split file"))
    out = _require_parent(a.out)
    side = _side_info(a, split.n)
    trained = pipeline.train_method(a.method, split, side, _overlay(a), a.seed)
    dataio.save_model(out, trained.model, trained.meta)
    loss_out = Path(a.loss_out) if a.loss_out else out.with_name(out.name + ".loss")
    loss_out.write_text("".join(f"{v!r}\n" for v in trained.losses))


def cmd_evaluate(a) -> None:
    split = dataio.load_split(_require_file(a.input, "split file"))
    model, meta = dataio.load_model(_require_file(a.model, "model file"))
    method = meta.get("method")
    if method not in pipeline.ALL_METHODS:
        raise InputError(f"model file does not record a known method (found {method!r})")
    side = _side_info(a, split.n)
    trained = pipeline.Trained(method, model, meta, [])
    report = pipeline.evaluate_method(trained, split, side)
    text = pipeline.format_json([report]) if a.format == "json" else pipeline.format_table([report])
    _emit(text, a.out)


def cmd_benchmark(a) -> None:
    if a.input:
        g = dataio.load_edge_list(_require_file(a.input, "edge list"))
        side = _side_info(a, g.n)
        source = {"input": str(a.input), "features": a.features}
    else:
        cfg = _synthetic(a)
        g, side, _ = dataio.generate_synthetic(cfg)
        source = {"synthetic": vars(cfg)}
    if a.out:
        _require_parent(a.out)
    split = make_split(g, a.ratios, a.seed, a.neg_ratio, a.eval_neg_ratio)
    methods = tuple(a.method) if a.method else pipeline.METHODS
    reports = []
    for method in methods:
        log.info("benchmark: %s", method)
        trained = pipeline.train_method(method, split, side, _overlay(a), a.seed)
        reports.append(pipeline.evaluate_method(trained, split, side))
    if a.format == "json":
        text = pipeline.format_json(reports, {"seed": a.seed, "source": source,
                                              "ratios": list(a.ratios), "neg_ratio": a.neg_ratio})
    else:
        text = pipeline.format_table(reports)
    _emit(text, a.out)


COMMANDS = {
    "generate": cmd_generate, "ingest": cmd_ingest, "split": cmd_split,
    "train": cmd_train, "evaluate": cmd_evaluate, "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    stage = args.command
    try:
        COMMANDS[stage](resolve(args))
    except InputError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error [{stage}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
