"""Training and evaluation for the three link-prediction tasks.

Task "sign": 3-class classifier (positive / negative / non-existent) trained
on 80% of edges plus matched random non-edges; scored on the sign of held-out
existing edges only.

Task "weight": dual heads, one for link existence (BCE) and one for the
unsigned weight (MSE on existing links, non-edges target 0 implicitly via
the existence head); AUC/F1 on a balanced existing-vs-negative test set,
MAE over existing test links.

Task "signed-weight": same as "weight" with a tanh-bounded signed weight head
on the signed_unit scale.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, Tape, Adam
from .errors import DegenerateTaskError
from .graph import normalize_weights, split_edges
from .layer import WsGatStack
from .metrics import roc_auc, f1_score, mean_absolute_error
from .spectral import signed_spectral_embedding, fallback_features

TASKS = ("sign", "weight", "signed-weight")


@dataclass
class TrainConfig:
    layers: int = 2
    hidden: int = 64
    embed: int = 64
    heads: int = 1
    attention_hidden: int = 32
    activation: str = "elu"
    projection: bool = True
    self_loop_weight: float = 1.0
    features: str = "degree_onehot_log"  # or "sse", "random_normal"
    feature_dim: int = 8
    sse_dim: int = 32
    head_hidden: int = 100   # per-layer neurons of the prediction heads
    head_layers: int = 3
    lr: float = 1e-3
    epochs: int = 300
    patience: int = 30
    lambda_weight: float = 1.0
    train_fraction: float = 0.8
    val_fraction: float = 0.1
    seed: int = 0

    def digest(self):
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class EvalReport:
    task: str
    dataset: str
    seed: int
    roc_auc: float
    f1: float
    mae: float | None
    per_class_counts: dict
    config_digest: str
    epochs_run: int
    wall_s: float

    def to_json_line(self):
        d = asdict(self)
        d["auc"] = d.pop("roc_auc")
        return json.dumps(d, sort_keys=True)

    def to_csv_row(self):
        mae = "" if self.mae is None else f"{self.mae:.6f}"
        return f"{self.task},{self.dataset},{self.seed},{self.roc_auc:.6f},{self.f1:.6f},{mae}"


class PairHead:
    """3-layer MLP over a concatenated pair of node embeddings.

    Two hidden layers of 100 neurons (tanh), then a linear output of
    ``out_width`` units; the caller applies the output activation.
    """

    def __init__(self, tape, prefix, in_width, out_width=1, hidden=100, layers=3):
        sizes = [in_width] + [hidden] * (layers - 1) + [out_width]
        self.weights, self.biases = [], []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            self.weights.append(tape.glorot(f"{prefix}.w{i}", (a, b)))
            self.biases.append(tape.zeros(f"{prefix}.b{i}", (b,)))

    def __call__(self, x):
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = ad.add(ad.matmul(x, w), b)
            if i != last:
                x = ad.tanh(x)
        return x


class TaskModel:
    """Feature source + wsGAT stack + task heads, with one Tape per model."""

    def __init__(self, task, g_train, config):
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        self.task = task
        self.config = config
        self.graph = g_train
        self.X = Tensor(self._features(g_train, config))
        self.tape = Tape(seed=config.seed)
        self.stack = WsGatStack(
            self.tape, self.X.shape[1],
            hidden_width=config.hidden, out_width=config.embed,
            num_layers=config.layers, heads=config.heads,
            attention_hidden=(config.attention_hidden,),
            activation=config.activation,
            self_loop_weight=config.self_loop_weight,
            projection=config.projection,
        )
        pair_width = 2 * self.stack.out_width
        hh, hl = config.head_hidden, config.head_layers
        if task == "sign":
            self.sign_head = PairHead(self.tape, "sign_head", pair_width, out_width=3,
                                      hidden=hh, layers=hl)
        else:
            self.exist_head = PairHead(self.tape, "exist_head", pair_width, out_width=1,
                                       hidden=hh, layers=hl)
            self.weight_head = PairHead(self.tape, "weight_head", pair_width, out_width=1,
                                        hidden=hh, layers=hl)

    @staticmethod
    def _features(g, config):
        if config.features == "sse":
            X, _ = signed_spectral_embedding(g, d=min(config.sse_dim, g.num_nodes),
                                             seed=config.seed)
        else:
            X = fallback_features(g, kind=config.features, d=config.feature_dim,
                                  seed=config.seed)
        # standardize columns so feature scale does not depend on graph size
        std = X.std(axis=0)
        keep = std > 1e-12
        X = X - X.mean(axis=0)
        X[:, keep] /= std[keep]
        return X

    def embeddings(self):
        return self.stack.forward(self.X, self.graph)

    def pair_input(self, emb, pairs):
        return ad.concat([ad.take_rows(emb, pairs[:, 0]), ad.take_rows(emb, pairs[:, 1])], axis=1)

    def sign_logits(self, emb, pairs):
        return self.sign_head(self.pair_input(emb, pairs))

    def existence_logits(self, emb, pairs):
        return _squeeze(self.exist_head(self.pair_input(emb, pairs)))

    def weight_values(self, emb, pairs):
        raw = _squeeze(self.weight_head(self.pair_input(emb, pairs)))
        return ad.tanh(raw) if self.task == "signed-weight" else raw

    def parameter_arrays(self):
        return {k: v.values.copy() for k, v in self.tape.params.items()}

    def load_parameter_arrays(self, arrays):
        for k, v in self.tape.params.items():
            v.values = np.array(arrays[k], dtype=np.float64)


def _squeeze(t):
    out_values = t.values[:, 0]

    def backward(g, out):
        if t.requires_grad:
            t.accumulate_grad(g[:, None])

    return Tensor(out_values, parents=(t,), backward=backward, op="squeeze_col")


def softplus(t):
    out_values = np.logaddexp(0.0, t.values)

    def backward(g, out):
        if t.requires_grad:
            t.accumulate_grad(g / (1.0 + np.exp(-t.values)))

    return Tensor(out_values, parents=(t,), backward=backward, op="softplus")


def bce_with_logits(logits, labels):
    """mean(softplus(z) - z*y), the stable binary cross-entropy."""
    return ad.mean_(ad.sub(softplus(logits), ad.mul(logits, labels)))


def mse(pred, target):
    diff = ad.sub(pred, target)
    return ad.mean_(ad.mul(diff, diff))


def cross_entropy(logits, labels, num_classes=3):
    logp = ad.log_softmax_rows(logits)
    onehot = np.eye(num_classes)[np.asarray(labels, dtype=np.int64)]
    picked = ad.mul(logp, onehot)
    return ad.mul(ad.sum_(picked), -1.0 / len(labels))


def _val_slice(n, frac, rng):
    """Front/back split of a shuffled index range: (train_idx, val_idx).

    frac=0 disables the validation slice; callers then monitor train loss.
    """
    perm = rng.permutation(n)
    n_val = int(np.floor(frac * n))
    if frac > 0 and n > 1:
        n_val = max(1, n_val)
    return perm[n_val:], perm[:n_val]


def _train_loop(model, loss_fn, config):
    """Full-batch Adam with early stopping on a validation loss closure.

    loss_fn(which) -> scalar Tensor, which in {"train", "val"}.
    Returns (epochs_run, train_loss_history).
    """
    opt = Adam(model.tape.parameter_list(), lr=config.lr)
    best_val = np.inf
    best_params = model.parameter_arrays()
    bad_epochs = 0
    history = []
    epochs_run = 0
    for epoch in range(config.epochs):
        model.tape.reset()
        loss = loss_fn("train")
        model.tape.backward(loss)
        opt.step()
        history.append(float(loss.values))
        epochs_run = epoch + 1
        val = float(loss_fn("val").values)
        if val < best_val - 1e-12:
            best_val = val
            best_params = model.parameter_arrays()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break
    model.load_parameter_arrays(best_params)
    return epochs_run, history


def _check_hygiene(split):
    train = split.train_graph.edge_set()
    test_pos = set(map(tuple, split.test_pos[:, :2].astype(np.int64)))
    test_neg = set(map(tuple, split.test_neg))
    assert not (train & test_pos), "test positives leaked into training edges"
    assert not (train & test_neg), "test negatives collide with training edges"


def train_sign_prediction(g, config, dataset="unknown"):
    if not (np.any(g.weight > 0) and np.any(g.weight < 0)):
        raise DegenerateTaskError("sign prediction needs both positive and negative edges")
    t0 = time.time()
    g = normalize_weights(g, "signed_unit")
    split = split_edges(g, config.train_fraction, config.seed)
    _check_hygiene(split)
    tg = split.train_graph
    model = TaskModel("sign", tg, config)

    pos_pairs = np.column_stack([tg.src, tg.dst])
    pos_labels = np.where(tg.weight > 0, 0, 1)  # class 0 positive, 1 negative
    neg_pairs = split.train_neg
    pairs = np.vstack([pos_pairs, neg_pairs])
    labels = np.concatenate([pos_labels, np.full(len(neg_pairs), 2)])

    rng = np.random.default_rng(config.seed + 1)
    tr_idx, va_idx = _val_slice(len(pairs), config.val_fraction, rng)

    def loss_fn(which):
        idx = tr_idx if which == "train" or len(va_idx) == 0 else va_idx
        emb = model.embeddings()
        return cross_entropy(model.sign_logits(emb, pairs[idx]), labels[idx])

    epochs_run, history = _train_loop(model, loss_fn, config)
    report = evaluate(model, split, "sign", dataset=dataset,
                      epochs_run=epochs_run, wall_s=time.time() - t0)
    report.history = history
    return model, report


def _train_weight_task(g, config, dataset, task):
    t0 = time.time()
    mode = "signed_unit" if task == "signed-weight" else "unit_abs"
    if task == "signed-weight" and not np.any(g.weight < 0):
        raise DegenerateTaskError("signed weight prediction needs negative edges")
    g = normalize_weights(g, mode)
    split = split_edges(g, config.train_fraction, config.seed)
    _check_hygiene(split)
    tg = split.train_graph
    model = TaskModel(task, tg, config)

    pos_pairs = np.column_stack([tg.src, tg.dst])
    neg_pairs = split.train_neg
    exist_pairs = np.vstack([pos_pairs, neg_pairs])
    exist_labels = np.concatenate([np.ones(len(pos_pairs)), np.zeros(len(neg_pairs))])
    targets = tg.weight.copy()

    rng = np.random.default_rng(config.seed + 1)
    tr_pos, va_pos = _val_slice(len(pos_pairs), config.val_fraction, rng)
    tr_neg, va_neg = _val_slice(len(neg_pairs), config.val_fraction, rng)

    def loss_fn(which):
        use_train = which == "train" or (len(va_pos) == 0 and len(va_neg) == 0)
        p, q = (tr_pos, tr_neg) if use_train else (va_pos, va_neg)
        idx = np.concatenate([p, q + len(pos_pairs)])
        emb = model.embeddings()
        bce = bce_with_logits(
            model.existence_logits(emb, exist_pairs[idx]),
            Tensor(exist_labels[idx]),
        )
        w_loss = mse(model.weight_values(emb, pos_pairs[p]), Tensor(targets[p]))
        return ad.add(bce, ad.mul(w_loss, config.lambda_weight))

    epochs_run, history = _train_loop(model, loss_fn, config)
    report = evaluate(model, split, task, dataset=dataset,
                      epochs_run=epochs_run, wall_s=time.time() - t0)
    report.history = history
    return model, report


def train_weight_prediction(g, config, dataset="unknown"):
    return _train_weight_task(g, config, dataset, "weight")


def train_signed_weight_prediction(g, config, dataset="unknown"):
    return _train_weight_task(g, config, dataset, "signed-weight")


def evaluate(model, split, task, dataset="unknown", epochs_run=0, wall_s=0.0):
    """Deterministic scoring of a trained model on a held-out split."""
    if task != model.task:
        raise ValueError(f"model trained for {model.task!r}, asked to evaluate {task!r}")
    emb = model.embeddings()
    test_pos_pairs = split.test_pos[:, :2].astype(np.int64)
    test_w = split.test_pos[:, 2]

    if task == "sign":
        logits = model.sign_logits(emb, test_pos_pairs).values
        labels = (test_w > 0).astype(int)
        # positive-vs-negative ranking on existing links, positive-class score
        p = np.exp(logits - logits.max(axis=1, keepdims=True))
        p /= p.sum(axis=1, keepdims=True)
        auc = roc_auc(p[:, 0], labels)
        pred = (logits[:, 0] >= logits[:, 1]).astype(int)  # argmax over {pos, neg}
        f1 = f1_score(pred, labels)
        counts = {"positive": int(labels.sum()), "negative": int(len(labels) - labels.sum())}
        mae = None
    else:
        pairs = np.vstack([test_pos_pairs, split.test_neg])
        labels = np.concatenate([np.ones(len(test_pos_pairs)), np.zeros(len(split.test_neg))])
        scores = 1.0 / (1.0 + np.exp(-model.existence_logits(emb, pairs).values))
        auc = roc_auc(scores, labels)
        f1 = f1_score((scores >= 0.5).astype(int), labels.astype(int))
        pred_w = model.weight_values(emb, test_pos_pairs).values
        mae = mean_absolute_error(pred_w, test_w)
        counts = {"existing": len(test_pos_pairs), "non_existing": len(split.test_neg)}

    return EvalReport(
        task=task, dataset=dataset, seed=split.seed,
        roc_auc=float(auc), f1=float(f1), mae=mae,
        per_class_counts=counts, config_digest=model.config.digest(),
        epochs_run=epochs_run, wall_s=wall_s,
    )


def train(task, g, config, dataset="unknown"):
    fn = {
        "sign": train_sign_prediction,
        "weight": train_weight_prediction,
        "signed-weight": train_signed_weight_prediction,
    }[task]
    return fn(g, config, dataset=dataset)
