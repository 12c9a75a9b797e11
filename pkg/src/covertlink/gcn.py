"""Two-layer GCN link predictor with hand-written backpropagation.

Encoder::

    H1 = relu(A_hat X W0)
    H  = A_hat H1 W1

Decoders score a pair (i, j) from rows H_i, H_j:

* ``dot``: sigmoid(H_i . H_j)
* ``mlp``: sigmoid(w . [H_i * H_j, H_i + H_j, |H_i - H_j|] + b)

Both are symmetric in (i, j) by construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError, InternalError
from .graph import Graph, NormAdj, normalize_adjacency, spmm
from .matfact import sigmoid
from .metrics import auc
from .rng import SplitMix64, derive_seed
from .splitter import EdgeSplit

CLIP = 1e-12
PARAM_NAMES = ("W0", "W1", "W2", "b2")


class Decoder(str, enum.Enum):
    DOT = "dot"
    MLP = "mlp"


class WeightMode(str, enum.Enum):
    INVERSE_FREQUENCY = "inverse_frequency"
    UNIFORM = "uniform"


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    hidden: int = 64
    embed: int = 32
    decoder: Decoder = Decoder.DOT
    weight_mode: WeightMode = WeightMode.INVERSE_FREQUENCY
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    # keep the epoch with the best validation AUC (needs val pairs of both classes)
    select_on_val: bool = True

    def __post_init__(self):
        self.decoder = Decoder(self.decoder)
        self.weight_mode = WeightMode(self.weight_mode)
        if self.epochs < 1:
            raise InputError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise InputError("learning_rate must be >= 0")
        if self.hidden < 1 or self.embed < 1:
            raise InputError("hidden and embed must be >= 1")


@dataclass
class GcnParams:
    W0: np.ndarray
    W1: np.ndarray
    decoder: Decoder = Decoder.DOT
    W2: np.ndarray | None = None
    b2: np.ndarray | None = None
    version: int = 0  # bumped on every in-place update

    def arrays(self) -> dict:
        out = {"W0": self.W0, "W1": self.W1}
        if self.decoder is Decoder.MLP:
            out["W2"] = self.W2
            out["b2"] = self.b2
        return out

    def copy(self) -> "GcnParams":
        return replace(self, **{k: v.copy() for k, v in self.arrays().items()})

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.W0.shape[0], self.W0.shape[1], self.W1.shape[1]


@dataclass
class ClassWeights:
    w_pos: float
    w_neg: float


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros_like(cls, params: GcnParams) -> "AdamState":
        arrs = params.arrays()
        return cls({k: np.zeros_like(a) for k, a in arrs.items()},
                   {k: np.zeros_like(a) for k, a in arrs.items()})


@dataclass
class ForwardCache:
    params_key: tuple
    ax: np.ndarray
    z0: np.ndarray
    h1: np.ndarray
    ah1: np.ndarray
    h: np.ndarray


@dataclass
class TrainResult:
    params: GcnParams
    losses: list = field(default_factory=list)
    weights: ClassWeights | None = None
    val_auc: list = field(default_factory=list)
    best_epoch: int | None = None


# -- features ---------------------------------------------------------------

def one_hot_features(n: int) -> np.ndarray:
    return np.eye(n)


def degree_features(g: Graph) -> np.ndarray:
    return g.degrees.astype(np.float64)[:, None]


def concat_side_info(X, S) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    if S.ndim == 1:
        S = S[:, None]
    if X.shape[0] != S.shape[0]:
        raise InputError(f"side information has {S.shape[0]} rows, features have {X.shape[0]}")
    return np.concatenate([X, S.reshape(X.shape[0], -1)], axis=1)


# -- parameters ---------------------------------------------------------------

def _glorot(rng: SplitMix64, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, (fan_in, fan_out))


def init_params(d_in: int, hidden: int, embed: int, decoder=Decoder.DOT, seed: int = 0) -> GcnParams:
    decoder = Decoder(decoder)
    rng = SplitMix64(derive_seed(seed, 0))
    W0 = _glorot(rng, d_in, hidden)
    W1 = _glorot(rng, hidden, embed)
    if decoder is Decoder.MLP:
        return GcnParams(W0, W1, decoder, _glorot(rng, 3 * embed, 1).ravel(), np.zeros(1))
    return GcnParams(W0, W1, decoder)


# -- forward / decode -----------------------------------------------------------

def gcn_forward(params: GcnParams, a: NormAdj, X, ax: np.ndarray | None = None) -> ForwardCache:
    """Encode all nodes.  ``ax`` may carry a precomputed ``A_hat @ X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.W0.shape[0]:
        raise InputError(f"feature matrix has shape {X.shape}, W0 expects {params.W0.shape[0]} columns")
    if X.shape[0] != a.n:
        raise InputError(f"feature matrix has {X.shape[0]} rows, graph has {a.n} nodes")
    if ax is None:
        ax = spmm(a, X)
    z0 = ax @ params.W0
    h1 = np.maximum(z0, 0.0)
    ah1 = spmm(a, h1)
    h = ah1 @ params.W1
    return ForwardCache((id(params), params.version), ax, z0, h1, ah1, h)


def _check_pairs(pairs, n) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= n):
        raise InputError(f"pair index out of range for n={n}")
    return pairs


def pair_features(H: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    hi, hj = H[pairs[:, 0]], H[pairs[:, 1]]
    return np.concatenate([hi * hj, hi + hj, np.abs(hi - hj)], axis=1)


def decode_logits(H, pairs, params: GcnParams) -> np.ndarray:
    pairs = _check_pairs(pairs, len(H))
    if params.decoder is Decoder.DOT:
        return np.einsum("ij,ij->i", H[pairs[:, 0]], H[pairs[:, 1]])
    return pair_features(H, pairs) @ params.W2 + params.b2[0]


def decode(H, pairs, params_or_decoder) -> np.ndarray:
    """Link probabilities for ``pairs`` from embeddings ``H``."""
    if isinstance(params_or_decoder, GcnParams):
        params = params_or_decoder
    else:
        if Decoder(params_or_decoder) is Decoder.MLP:
            raise InputError("the mlp decoder needs its parameters; pass GcnParams")
        params = GcnParams(np.zeros((0, 0)), np.zeros((0, 0)), Decoder.DOT)
    return sigmoid(decode_logits(np.asarray(H, dtype=np.float64), pairs, params))


# -- loss -------------------------------------------------------------------------

def class_weights(labels) -> ClassWeights:
    """Inverse class frequency weights ``N / (2 N_c)``."""
    labels = np.asarray(labels).ravel()
    n = len(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = n - n_pos
    if n == 0 or n_pos == 0 or n_neg == 0:
        raise InputError(f"class weights need both classes (got {n_pos} positive, {n_neg} negative)")
    return ClassWeights(n / (2.0 * n_pos), n / (2.0 * n_neg))


UNIFORM = ClassWeights(1.0, 1.0)


def weighted_bce(probs, labels, w: ClassWeights = UNIFORM) -> float:
    probs = np.asarray(probs, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if len(probs) != len(labels):
        raise InputError(f"length mismatch: {len(probs)} probabilities vs {len(labels)} labels")
    p = np.clip(probs, CLIP, 1 - CLIP)
    terms = w.w_pos * labels * np.log(p) + w.w_neg * (1 - labels) * np.log(1 - p)
    return float(-np.sum(terms) / len(p))


def _logit_grad(probs, labels, w: ClassWeights) -> np.ndarray:
    """d loss / d logit for each pair (zero where the probability is clipped)."""
    n = len(labels)
    g = np.where(labels == 1, w.w_pos * (probs - 1.0), w.w_neg * probs) / n
    clipped = (probs < CLIP) | (probs > 1 - CLIP)
    return np.where(clipped, 0.0, g)


def gcn_backward(params: GcnParams, a: NormAdj, cache: ForwardCache, pairs, labels,
                 w: ClassWeights = UNIFORM) -> dict:
    """Analytic gradient of weighted BCE through decoder and both GCN layers."""
    if cache.params_key != (id(params), params.version):
        raise InternalError("forward cache was computed for a different parameter set")
    pairs = _check_pairs(pairs, a.n)
    labels = np.asarray(labels, dtype=np.float64).ravel()
    H = cache.h
    probs = sigmoid(decode_logits(H, pairs, params))
    g = _logit_grad(probs, labels, w)
    dH = np.zeros_like(H)
    hi, hj = H[pairs[:, 0]], H[pairs[:, 1]]
    grads = {}
    if params.decoder is Decoder.DOT:
        dhi = g[:, None] * hj
        dhj = g[:, None] * hi
    else:
        p = H.shape[1]
        phi = pair_features(H, pairs)
        grads["W2"] = phi.T @ g
        grads["b2"] = np.array([g.sum()])
        dphi = g[:, None] * params.W2[None, :]
        d_prod, d_sum, d_abs = dphi[:, :p], dphi[:, p:2 * p], dphi[:, 2 * p:]
        sgn = np.sign(hi - hj)
        dhi = d_prod * hj + d_sum + d_abs * sgn
        dhj = d_prod * hi + d_sum - d_abs * sgn
    np.add.at(dH, pairs[:, 0], dhi)
    np.add.at(dH, pairs[:, 1], dhj)
    grads["W1"] = cache.ah1.T @ dH
    # A_hat is symmetric, so A_hat^T @ M == spmm(A_hat, M)
    dH1 = spmm(a, dH @ params.W1.T)
    dZ0 = dH1 * (cache.z0 > 0)
    grads["W0"] = cache.ax.T @ dZ0
    return grads


def loss_value(params: GcnParams, a: NormAdj, X, pairs, labels, w=UNIFORM, ax=None) -> float:
    cache = gcn_forward(params, a, X, ax)
    return weighted_bce(sigmoid(decode_logits(cache.h, pairs, params)), labels, w)


# -- optimizer --------------------------------------------------------------------

def adam_step(params: GcnParams, grads: dict, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> tuple[GcnParams, AdamState]:
    """One bias-corrected Adam update, in place on ``params`` and ``state``."""
    arrays = params.arrays()
    if set(grads) != set(arrays):
        raise InternalError(f"gradient keys {sorted(grads)} do not match parameters {sorted(arrays)}")
    state.t += 1
    params.version += 1
    t = state.t
    for name, theta in arrays.items():
        g = grads[name]
        if g.shape != theta.shape or state.m[name].shape != theta.shape:
            raise InternalError(f"shape mismatch for {name}: {g.shape} vs {theta.shape}")
        state.m[name] = beta1 * state.m[name] + (1 - beta1) * g
        state.v[name] = beta2 * state.v[name] + (1 - beta2) * g * g
        m_hat = state.m[name] / (1 - beta1 ** t)
        v_hat = state.v[name] / (1 - beta2 ** t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


# -- training ---------------------------------------------------------------------

def training_pairs(split: EdgeSplit) -> tuple[np.ndarray, np.ndarray]:
    return split.pairs("train")


def train_gcn(g_train: Graph, X, split: EdgeSplit, cfg: TrainConfig | None = None) -> TrainResult:
    """Full-batch Adam training on train positives and train negatives."""
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != g_train.n:
        raise InputError(f"feature matrix has {X.shape[0]} rows, graph has {g_train.n} nodes")
    pairs, labels = training_pairs(split)
    if labels.sum() == 0 or labels.sum() == len(labels):
        raise InputError("GCN training needs both positive and negative training pairs")
    w = class_weights(labels) if cfg.weight_mode is WeightMode.INVERSE_FREQUENCY else UNIFORM
    a = normalize_adjacency(g_train)
    ax = spmm(a, X)
    params = init_params(X.shape[1], cfg.hidden, cfg.embed, cfg.decoder, cfg.seed)
    state = AdamState.zeros_like(params)
    val_pairs, val_labels = split.pairs("val")
    select = cfg.select_on_val and 0 < val_labels.sum() < len(val_labels)
    result = TrainResult(params, weights=w)
    best = (-1.0, None)
    for epoch in range(cfg.epochs):
        cache = gcn_forward(params, a, X, ax)
        probs = sigmoid(decode_logits(cache.h, pairs, params))
        result.losses.append(weighted_bce(probs, labels, w))
        if select:
            score = auc(decode_logits(cache.h, val_pairs, params), val_labels)
            result.val_auc.append(score)
            if score > best[0]:
                best = (score, params.copy())
                result.best_epoch = epoch
        grads = gcn_backward(params, a, cache, pairs, labels, w)
        adam_step(params, grads, state, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    if select:
        result.params = best[1]
    return result


def predict_links(params: GcnParams, a: NormAdj, X, pairs) -> np.ndarray:
    cache = gcn_forward(params, a, X)
    return sigmoid(decode_logits(cache.h, pairs, params))
