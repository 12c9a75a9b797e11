"""Train and evaluate every method on a split; assemble the comparison table."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gcn, heuristics, matfact, trees
from .errors import InputError
from .graph import Graph, normalize_adjacency
from .metrics import EvalReport, auc, best_f1_threshold, binary_metrics
from .rng import derive_seed
from .splitter import EdgeSplit

HEURISTICS = tuple(m.value for m in heuristics.HeuristicMethod)

# Row order and labels of the comparison table.
METHODS = HEURISTICS + ("mf", "tree", "forest", "gcn_uniform", "gcn_weighted")
LABELS = {
    "common_neighbors": "Common Neighbors",
    "jaccard": "Jaccard's Coefficient",
    "adamic_adar": "Adamic/Adar Index",
    "preferential_attachment": "Preferential Attachment",
    "mf": "Matrix Factorization",
    "tree": "Decision Trees",
    "forest": "Random Forests",
    "gcn_uniform": "Standard GCN",
    "gcn_weighted": "Weighted GCN + side info",
    "gcn": "GCN",
}
ALL_METHODS = METHODS + ("gcn",)


@dataclass
class Overlay:
    """User overrides applied on top of each method's defaults."""

    epochs: int | None = None
    lr: float | None = None
    hidden: int | None = None
    embed: int | None = None
    decoder: str | None = None
    weight_mode: str | None = None
    mf: dict = field(default_factory=dict)
    tree: dict = field(default_factory=dict)
    forest: dict = field(default_factory=dict)


@dataclass
class Trained:
    method: str
    model: object
    meta: dict
    losses: list


def method_seed(seed: int, method: str) -> int:
    """Per-method seed: the method's table index mixed into the master seed."""
    return derive_seed(seed, 100 + ALL_METHODS.index(method))


def config_hash(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def gcn_config(method: str, overlay: Overlay, seed: int) -> gcn.TrainConfig:
    cfg = gcn.TrainConfig(seed=seed)
    if method == "gcn_uniform":
        cfg.weight_mode = gcn.WeightMode.UNIFORM
    elif method == "gcn_weighted":
        cfg.weight_mode = gcn.WeightMode.INVERSE_FREQUENCY
    elif overlay.weight_mode:
        cfg.weight_mode = gcn.WeightMode(overlay.weight_mode)
    if overlay.epochs is not None:
        cfg.epochs = overlay.epochs
    if overlay.lr is not None:
        cfg.learning_rate = overlay.lr
    if overlay.hidden is not None:
        cfg.hidden = overlay.hidden
    if overlay.embed is not None:
        cfg.embed = overlay.embed
    if overlay.decoder:
        cfg.decoder = gcn.Decoder(overlay.decoder)
    cfg.__post_init__()
    return cfg


def feature_mode(method: str, side_info: np.ndarray | None) -> str:
    if method == "gcn_uniform" or side_info is None:
        return "onehot"
    return "onehot+side"


def build_features(mode: str, g: Graph, side_info: np.ndarray | None) -> np.ndarray:
    if mode == "onehot":
        return gcn.one_hot_features(g.n)
    if mode == "degree":
        return gcn.degree_features(g)
    if mode == "onehot+side":
        if side_info is None:
            raise InputError("this model was trained with side information; pass --features")
        return gcn.concat_side_info(gcn.one_hot_features(g.n), side_info)
    raise InputError(f"unknown feature mode {mode!r}")


def train_method(method: str, split: EdgeSplit, side_info: np.ndarray | None = None,
                 overlay: Overlay | None = None, seed: int = 0) -> Trained:
    if method not in ALL_METHODS:
        raise InputError(f"unknown method {method!r}; choose from {', '.join(ALL_METHODS)}")
    overlay = overlay or Overlay()
    mseed = method_seed(seed, method)
    g_train = split.train_graph()
    meta = {"method": method, "seed": seed, "split_seed": split.seed}
    if method in HEURISTICS:
        return Trained(method, method, meta, [])
    if method == "mf":
        cfg = matfact.MfConfig(**overlay.mf)
        if overlay.epochs is not None:
            cfg.epochs = overlay.epochs
        if split.train_neg_ratio > 0:
            cfg.neg_ratio = split.train_neg_ratio
        model = matfact.train_mf(split, g_train, cfg, mseed)
        meta["config"] = asdict(cfg)
        return Trained(method, model, meta, list(model.losses))
    if method in ("tree", "forest"):
        pairs, labels = split.pairs("train")
        X = trees.pair_features(g_train, pairs, mask_edge=True)
        if method == "tree":
            cfg = trees.TreeConfig(**overlay.tree)
            model = trees.train_tree(X, labels, cfg)
        else:
            cfg = trees.ForestConfig(**overlay.forest)
            model = trees.train_forest(X, labels, cfg, mseed)
        meta["config"] = asdict(cfg)
        return Trained(method, model, meta, [])
    cfg = gcn_config(method, overlay, mseed)
    mode = feature_mode(method, side_info)
    X = build_features(mode, g_train, side_info)
    result = gcn.train_gcn(g_train, X, split, cfg)
    meta["config"] = {k: (v.value if hasattr(v, "value") else v) for k, v in asdict(cfg).items()}
    meta["feature_mode"] = mode
    meta["best_epoch"] = result.best_epoch
    return Trained(method, result.params, meta, list(result.losses))


def score_method(trained: Trained, split: EdgeSplit, pairs: np.ndarray,
                 side_info: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(raw_scores, probabilities)`` for ``pairs``."""
    g_train = split.train_graph()
    method, model = trained.method, trained.model
    if method in HEURISTICS:
        raw = heuristics.score_pairs(g_train, pairs, method)
        return raw, heuristics.minmax_scale(raw)
    if method == "mf":
        p = matfact.score_mf_pairs(model, pairs)
        return p, p
    if method in ("tree", "forest"):
        p = trees.predict(model, trees.pair_features(g_train, pairs))
        return p, p
    X = build_features(trained.meta.get("feature_mode", "onehot"), g_train, side_info)
    p = gcn.predict_links(model, normalize_adjacency(g_train), X, pairs)
    return p, p


def evaluate_method(trained: Trained, split: EdgeSplit, side_info: np.ndarray | None = None,
                    part: str = "test", threshold: float = 0.5) -> EvalReport:
    pairs, labels = split.pairs(part)
    if labels.sum() == 0 or labels.sum() == len(labels):
        raise InputError(f"the {part} partition needs both positive and negative pairs")
    raw, probs = score_method(trained, split, pairs, side_info)
    bm = binary_metrics(probs, labels, threshold)
    best_t, best_f1 = best_f1_threshold(probs, labels)
    chash = config_hash({"meta": trained.meta, "ratios": split.ratios,
                         "neg": [split.train_neg_ratio, split.eval_neg_ratio], "part": part})
    return EvalReport(
        method=trained.method, precision=bm.precision, recall=bm.recall, f1=bm.f1,
        auc=auc(raw, labels), threshold=threshold,
        tp=bm.counts.tp, fp=bm.counts.fp, tn=bm.counts.tn, fn=bm.counts.fn,
        seed=int(trained.meta.get("seed", 0)), config_hash=chash,
        best_f1=best_f1, best_threshold=best_t,
    )


def run_benchmark(split: EdgeSplit, side_info: np.ndarray | None = None, overlay: Overlay | None = None,
                  seed: int = 0, methods=METHODS) -> list[EvalReport]:
    reports = []
    for method in methods:
        trained = train_method(method, split, side_info, overlay, seed)
        reports.append(evaluate_method(trained, split, side_info))
    return reports


COLUMNS = ("Precision", "Recall", "F1-Score", "AUC", "Best-F1", "Best-Thr")


def format_table(reports: list[EvalReport]) -> str:
    width = max(len(LABELS.get(r.method, r.method)) for r in reports) + 2
    lines = ["Method".ljust(width) + "".join(c.rjust(10) for c in COLUMNS)]
    lines.append("-" * len(lines[0]))
    for r in reports:
        vals = (r.precision, r.recall, r.f1, r.auc, r.best_f1, r.best_threshold)
        lines.append(LABELS.get(r.method, r.method).ljust(width) + "".join(f"{v:10.4f}" for v in vals))
    return "\n".join(lines) + "\n"


def format_json(reports: list[EvalReport], extra: dict | None = None) -> str:
    payload = {"columns": ["precision", "recall", "f1", "auc"], "rows": [r.to_dict() for r in reports]}
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def parse_table(text: str) -> dict[str, tuple[float, ...]]:
    """Inverse of ``format_table``: label -> column values."""
    out = {}
    for line in text.splitlines()[2:]:
        if not line.strip():
            continue
        parts = line.split()
        label = " ".join(parts[:-len(COLUMNS)])
        out[label] = tuple(float(v) for v in parts[-len(COLUMNS):])
    return out
