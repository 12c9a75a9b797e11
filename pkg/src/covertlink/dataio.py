"""File formats, event-log ingestion and the synthetic block-model generator.

Edge list::

    n=<count>
    <i> <j>
    ...

Features: one comma-separated row of numbers per node, no header.
Event log: CSV with header ``event_id,person_id[,attr...]``.
Split file: ``key=value`` header lines, then ``[train_pos]``, ``[train_neg]``,
``[val_pos]``, ``[val_neg]``, ``[test_pos]``, ``[test_neg]`` sections of ``i j`` lines.
Model container: the line ``CLNK1`` followed by one JSON object.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError
from .gcn import Decoder, GcnParams
from .graph import Graph, build_graph
from .matfact import MfModel
from .rng import SplitMix64
from .splitter import PARTITIONS, EdgeSplit
from .trees import ForestModel, TreeModel

MAGIC = "CLNK1"
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_INT = re.compile(r"^\d+$")


def _parse_float(text: str, where: str) -> float:
    text = text.strip()
    if not _NUMBER.match(text):
        raise FormatError(f"{where}: not a decimal number: {text!r}")
    return float(text)


def _fmt(x: float) -> str:
    return repr(float(x))


# -- edge lists ---------------------------------------------------------------------

def parse_edge_list(text: str, source: str = "<string>") -> Graph:
    lines = text.splitlines()
    if not lines or not lines[0].strip().startswith("n="):
        raise FormatError(f"{source}: line 1: expected header 'n=<count>'")
    head = lines[0].strip()[2:]
    if not _INT.match(head):
        raise FormatError(f"{source}: line 1: bad node count {head!r}")
    n = int(head)
    if n < 1:
        raise FormatError(f"{source}: line 1: node count must be >= 1")
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2 or not all(_INT.match(p) for p in parts):
            raise FormatError(f"{source}: line {lineno}: expected 'i j', got {line!r}")
        i, j = int(parts[0]), int(parts[1])
        if i >= n or j >= n:
            raise FormatError(f"{source}: line {lineno}: index out of range for n={n}: {line.strip()!r}")
        edges.append((i, j))
    return build_graph(edges, n)


def load_edge_list(path) -> Graph:
    path = Path(path)
    return parse_edge_list(path.read_text(), str(path))


def format_edge_list(g: Graph) -> str:
    out = [f"n={g.n}"]
    out.extend(f"{i} {j}" for i, j in g.edges().tolist())
    return "\n".join(out) + "\n"


def save_edge_list(path, g: Graph) -> None:
    Path(path).write_text(format_edge_list(g))


# -- features -----------------------------------------------------------------------

def load_features(path, n: int | None = None) -> np.ndarray:
    path = Path(path)
    rows = [line for line in path.read_text().splitlines() if line.strip()]
    if n is not None and len(rows) != n:
        raise FormatError(f"{path}: expected {n} feature rows, found {len(rows)}")
    if not rows:
        raise FormatError(f"{path}: no feature rows")
    data = []
    width = None
    for r, line in enumerate(rows, start=1):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"{path}: row {r}: expected {width} columns, found {len(cells)}")
        data.append([_parse_float(c, f"{path}: row {r}, column {k}") for k, c in enumerate(cells, start=1)])
    return np.array(data, dtype=np.float64)


def save_features(path, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Path(path).write_text("".join(",".join(_fmt(v) for v in row) + "\n" for row in X.tolist()))


def save_labels(path, labels) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in np.asarray(labels).ravel()))


# -- event logs ---------------------------------------------------------------------

def read_event_log(path) -> list[tuple[str, str]]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["event_id", "person_id"]:
            raise FormatError(f"{path}: header must start with 'event_id,person_id'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}: line {lineno}: expected {len(header)} columns, found {len(row)}")
            ev, person = row[0].strip(), row[1].strip()
            if not ev or not person:
                raise FormatError(f"{path}: line {lineno}: empty event_id or person_id")
            rows.append((ev, person))
    return rows


def ingest_events(rows, min_cooccurrence: int = 1) -> tuple[Graph, list[str]]:
    """Person co-occurrence graph: an edge joins two persons seen together in
    at least ``min_cooccurrence`` distinct events.  Node ids follow first appearance."""
    if min_cooccurrence < 1:
        raise InputError("min_cooccurrence must be >= 1")
    rows = list(rows)
    if not rows:
        raise InputError("event log is empty")
    ids: dict[str, int] = {}
    events: dict[str, set[int]] = {}
    for ev, person in rows:
        if person not in ids:
            ids[person] = len(ids)
        events.setdefault(ev, set()).add(ids[person])
    counts: dict[tuple[int, int], int] = {}
    for members in events.values():
        m = sorted(members)
        for a in range(len(m)):
            for b in range(a + 1, len(m)):
                counts[(m[a], m[b])] = counts.get((m[a], m[b]), 0) + 1
    edges = [pair for pair, c in counts.items() if c >= min_cooccurrence]
    id_map = [None] * len(ids)
    for person, k in ids.items():
        id_map[k] = person
    return build_graph(edges, len(ids)), id_map


def save_id_map(path, id_map) -> None:
    Path(path).write_text("node,person_id\n" + "".join(f"{k},{p}\n" for k, p in enumerate(id_map)))


# -- synthetic data ---------------------------------------------------------------------

@dataclass
class SyntheticConfig:
    n: int = 400
    k: int = 4
    p_in: float = 0.15
    p_out: float = 0.01
    feature_dim: int | None = None  # None -> k; columns past k are pure noise
    feature_noise: float = 0.5
    imbalance_ratio: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if not (1 <= self.k <= self.n):
            raise InputError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        if not (0 <= self.p_out <= self.p_in <= 1):
            raise InputError(f"need 0 <= p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}")
        if self.feature_noise < 0:
            raise InputError("feature_noise must be >= 0")
        if self.feature_dim is not None and self.feature_dim < self.k:
            raise InputError(f"feature_dim must be >= k ({self.k})")


def generate_synthetic(cfg: SyntheticConfig) -> tuple[Graph, np.ndarray, np.ndarray]:
    """Stochastic block model graph, noisy block-indicator features, block labels.

    Node i belongs to block ``i * k // n``.  Every unordered pair (i < j), in
    row-major order, consumes one uniform draw; features then consume
    ``n * feature_dim`` normal draws from the same stream.
    """
    cfg.validate()
    n, k = cfg.n, cfg.k
    rng = SplitMix64(cfg.seed)
    blocks = (np.arange(n) * k) // n
    iu, ju = np.triu_indices(n, k=1)
    same = blocks[iu] == blocks[ju]
    u = rng.random(len(iu))
    keep = u < np.where(same, cfg.p_in, cfg.p_out)
    g = build_graph(np.stack([iu[keep], ju[keep]], axis=1), n)
    dim = cfg.feature_dim or k
    X = np.zeros((n, dim))
    X[np.arange(n), blocks] = 1.0
    X += cfg.feature_noise * rng.normal((n, dim))
    return g, X, blocks


# -- splits ------------------------------------------------------------------------------

def format_split(split: EdgeSplit) -> str:
    out = [
        f"n={split.n}",
        f"seed={split.seed}",
        "ratios=" + " ".join(_fmt(r) for r in split.ratios),
        f"train_neg_ratio={_fmt(split.train_neg_ratio)}",
        f"eval_neg_ratio={_fmt(split.eval_neg_ratio)}",
    ]
    for part in PARTITIONS:
        for kind in ("pos", "neg"):
            out.append(f"[{part}_{kind}]")
            out.extend(f"{i} {j}" for i, j in np.asarray(getattr(split, f"{part}_{kind}")).tolist())
    return "\n".join(out) + "\n"


def save_split(path, split: EdgeSplit) -> None:
    Path(path).write_text(format_split(split))


def parse_split(text: str, source: str = "<string>") -> EdgeSplit:
    header: dict[str, str] = {}
    sections: dict[str, list] = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            if current not in {f"{p}_{k}" for p in PARTITIONS for k in ("pos", "neg")}:
                raise FormatError(f"{source}: line {lineno}: unknown section {line!r}")
            sections[current] = []
        elif current is None:
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError(f"{source}: line {lineno}: expected key=value header, got {line!r}")
            header[key] = value
        else:
            parts = line.split()
            if len(parts) != 2 or not all(_INT.match(p) for p in parts):
                raise FormatError(f"{source}: line {lineno}: expected 'i j', got {line!r}")
            sections[current].append((int(parts[0]), int(parts[1])))
    try:
        n = int(header["n"])
        seed = int(header["seed"])
        ratios = tuple(_parse_float(r, f"{source}: ratios") for r in header["ratios"].split())
        train_neg_ratio = _parse_float(header["train_neg_ratio"], f"{source}: train_neg_ratio")
        eval_neg_ratio = _parse_float(header["eval_neg_ratio"], f"{source}: eval_neg_ratio")
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{source}: bad or missing split header field: {exc}") from None
    arrays = {name: np.array(sections.get(name, []), dtype=np.int64).reshape(-1, 2)
              for name in (f"{p}_{k}" for p in PARTITIONS for k in ("pos", "neg"))}
    for name, arr in arrays.items():
        if len(arr) and (arr.min() < 0 or arr.max() >= n):
            raise FormatError(f"{source}: section [{name}] has an index outside [0, {n})")
    return EdgeSplit(n=n, seed=seed, ratios=ratios, train_neg_ratio=train_neg_ratio,
                     eval_neg_ratio=eval_neg_ratio, **arrays)


def load_split(path) -> EdgeSplit:
    path = Path(path)
    return parse_split(path.read_text(), str(path))


# -- model container --------------------------------------------------------------------

def _arr(a) -> dict:
    a = np.asarray(a)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _unarr(d, dtype=np.float64) -> np.ndarray:
    return np.array(d["data"], dtype=dtype).reshape(d["shape"])


def _tree_payload(t: TreeModel) -> dict:
    return {"feature": _arr(t.feature), "threshold": _arr(t.threshold), "left": _arr(t.left),
            "right": _arr(t.right), "value": _arr(t.value)}


def _tree_from(d) -> TreeModel:
    return TreeModel(_unarr(d["feature"], np.int64), _unarr(d["threshold"]), _unarr(d["left"], np.int64),
                     _unarr(d["right"], np.int64), _unarr(d["value"]))


def model_to_payload(model, meta: dict | None = None) -> dict:
    meta = dict(meta or {})
    if isinstance(model, GcnParams):
        d_in, h, p = model.dims
        body = {"kind": "gcn", "dims": [d_in, h, p], "decoder": model.decoder.value,
                "weights": {k: _arr(v) for k, v in model.arrays().items()}}
    elif isinstance(model, MfModel):
        body = {"kind": "mf", "dims": list(model.embeddings.shape), "seed": model.seed,
                "embeddings": _arr(model.embeddings), "bias": _arr(model.bias),
                "losses": [float(x) for x in model.losses]}
    elif isinstance(model, ForestModel):
        body = {"kind": "forest", "seeds": [int(s) for s in model.seeds],
                "trees": [_tree_payload(t) for t in model.trees]}
    elif isinstance(model, TreeModel):
        body = {"kind": "tree", **_tree_payload(model)}
    elif isinstance(model, str):
        body = {"kind": "heuristic", "method": model}
    else:
        raise InputError(f"cannot serialize object of type {type(model).__name__}")
    body["meta"] = meta
    return body


def payload_to_model(body: dict):
    kind = body.get("kind")
    if kind == "gcn":
        w = body["weights"]
        dec = Decoder(body["decoder"])
        params = GcnParams(_unarr(w["W0"]), _unarr(w["W1"]), dec,
                           _unarr(w["W2"]) if "W2" in w else None, _unarr(w["b2"]) if "b2" in w else None)
        if list(params.dims) != body["dims"]:
            raise FormatError(f"gcn dims header {body['dims']} disagrees with weights {list(params.dims)}")
        return params
    if kind == "mf":
        return MfModel(_unarr(body["embeddings"]), _unarr(body["bias"]), body["seed"], list(body["losses"]))
    if kind == "tree":
        return _tree_from(body)
    if kind == "forest":
        return ForestModel([_tree_from(t) for t in body["trees"]], list(body["seeds"]))
    if kind == "heuristic":
        return body["method"]
    raise FormatError(f"unknown model kind tag {kind!r}")


MODEL_KINDS = ("gcn", "mf", "tree", "forest", "heuristic")


def dumps_model(model, meta: dict | None = None) -> str:
    return MAGIC + "\n" + json.dumps(model_to_payload(model, meta), sort_keys=True) + "\n"


def loads_model(text: str, expect_kind: str | None = None, source: str = "<string>"):
    """Parse a model container; returns ``(model, meta)``."""
    first, _, rest = text.partition("\n")
    if first != MAGIC:
        raise FormatError(f"{source}: bad magic {first[:16]!r}, expected {MAGIC!r}")
    try:
        body = json.loads(rest)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}: truncated or corrupt model body ({exc.msg})") from None
    if not isinstance(body, dict):
        raise FormatError(f"{source}: model body is not an object")
    kind = body.get("kind")
    if kind not in MODEL_KINDS:
        raise FormatError(f"{source}: unknown model kind tag {kind!r}")
    if expect_kind is not None and kind != expect_kind:
        raise FormatError(f"{source}: expected a {expect_kind!r} model, found {kind!r}")
    try:
        model = payload_to_model(body)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{source}: malformed {kind} model: {exc}") from None
    return model, body.get("meta", {})


def save_model(path, model, meta: dict | None = None) -> None:
    Path(path).write_text(dumps_model(model, meta))


def load_model(path, expect_kind: str | None = None):
    path = Path(path)
    return loads_model(path.read_text(), expect_kind, str(path))
