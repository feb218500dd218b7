"""Bidirectional-GRU attention classifier over frozen motif embeddings.

A song enters as the sequence of its motif vectors. Forward and backward
GRU scans produce annotations h_j = [fwd_j; bwd_j]; an additive attention
scorer e_j = u . tanh(W_a h_j + b_a) turns them into weights alpha and a
context vector c = sum_j alpha_j h_j, which a single linear layer maps to
class probabilities. Training minimizes the negative log likelihood by
mini-batch SGD with gradient-norm clipping.

All gradients are derived by hand and verified against central finite
differences in the test suite; no autodiff is involved.
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .sgns import Embeddings, TrainingDiverged, read_embeddings, write_embeddings
from .tokens import TokenizedSong
from .vocab import Vocabulary, write_vocab


@dataclass
class GruDirection:
    """One scan direction: update (z), reset (r), and candidate (h) gates."""

    w_z: np.ndarray  # H x d
    u_z: np.ndarray  # H x H
    b_z: np.ndarray  # H
    w_r: np.ndarray
    u_r: np.ndarray
    b_r: np.ndarray
    w_h: np.ndarray
    u_h: np.ndarray
    b_h: np.ndarray


@dataclass
class AttentionParams:
    w: np.ndarray  # A x 2H
    b: np.ndarray  # A
    u: np.ndarray  # A, the learned query


@dataclass
class OutputParams:
    w: np.ndarray  # L x 2H
    b: np.ndarray  # L


@dataclass
class ModelParams:
    gru_fwd: GruDirection
    gru_bwd: GruDirection
    attn: AttentionParams
    out: OutputParams


@dataclass
class AttentionModel:
    labels: list[str]  # class index -> name
    params: ModelParams
    epoch_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.params.gru_fwd.w_z.shape[1]

    @property
    def hidden(self) -> int:
        return self.params.gru_fwd.w_z.shape[0]

    @property
    def attention_dim(self) -> int:
        return self.params.attn.w.shape[0]


@dataclass
class ClassifierConfig:
    hidden: int = 200  # per direction
    attention_dim: int = 100
    batch: int = 10
    lr: float = 0.05
    epochs: int = 30
    clip_norm: float = 5.0
    max_len: int = 500  # songs longer than this many motifs are truncated
    val_fraction: float = 0.0  # > 0 keeps the best epoch by held-out loss
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if min(self.hidden, self.attention_dim, self.batch, self.epochs, self.workers) < 1:
            raise ValueError("hidden, attention_dim, batch, epochs, and workers must be positive")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")


@dataclass
class SongExample:
    id: str
    x: np.ndarray  # T x d, frozen motif vectors
    label: int
    tokens: tuple[str, ...]  # the in-vocabulary motifs behind the rows of x


def _param_arrays(obj, prefix: str = ""):
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, np.ndarray):
            yield f"{prefix}{f.name}", value
        elif dataclasses.is_dataclass(value):
            yield from _param_arrays(value, f"{prefix}{f.name}.")


def _map_arrays(fn, obj):
    kwargs = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, np.ndarray):
            kwargs[f.name] = fn(value)
        elif dataclasses.is_dataclass(value):
            kwargs[f.name] = _map_arrays(fn, value)
        else:
            kwargs[f.name] = value
    return type(obj)(**kwargs)


def zero_gradients(params: ModelParams) -> ModelParams:
    return _map_arrays(np.zeros_like, params)


def _xavier(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_model(
    dim: int, labels: Sequence[str], hidden: int = 200, attention_dim: int = 100, seed: int = 0
) -> AttentionModel:
    """Xavier-uniform matrices, zero biases; draw order is fixed for determinism."""
    if len(labels) < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    h, a, L = hidden, attention_dim, len(labels)

    def direction():
        return GruDirection(
            w_z=_xavier(rng, h, dim),
            u_z=_xavier(rng, h, h),
            b_z=np.zeros(h),
            w_r=_xavier(rng, h, dim),
            u_r=_xavier(rng, h, h),
            b_r=np.zeros(h),
            w_h=_xavier(rng, h, dim),
            u_h=_xavier(rng, h, h),
            b_h=np.zeros(h),
        )

    params = ModelParams(
        gru_fwd=direction(),
        gru_bwd=direction(),
        attn=AttentionParams(w=_xavier(rng, a, 2 * h), b=np.zeros(a), u=_xavier(rng, 1, a)[0]),
        out=OutputParams(w=_xavier(rng, L, 2 * h), b=np.zeros(L)),
    )
    return AttentionModel(labels=list(labels), params=params)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = np.exp(x - x.max())
    return shifted / shifted.sum()


def gru_step(x: np.ndarray, h_prev: np.ndarray, p: GruDirection) -> np.ndarray:
    """One GRU update: h = (1 - z) * h_prev + z * tanh-candidate."""
    z = _sigmoid(p.w_z @ x + p.u_z @ h_prev + p.b_z)
    r = _sigmoid(p.w_r @ x + p.u_r @ h_prev + p.b_r)
    h_cand = np.tanh(p.w_h @ x + p.u_h @ (r * h_prev) + p.b_h)
    return (1.0 - z) * h_prev + z * h_cand


@dataclass
class _ScanCache:
    xs: np.ndarray  # T x d in processing order
    z: np.ndarray  # T x H
    r: np.ndarray
    h_cand: np.ndarray
    h_prev: np.ndarray  # state entering each step
    h: np.ndarray  # state leaving each step


def _scan(xs: np.ndarray, p: GruDirection) -> _ScanCache:
    T = xs.shape[0]
    H = p.b_z.shape[0]
    # The input projections do not depend on the recurrent state, so they
    # are batched over all timesteps.
    xz = xs @ p.w_z.T + p.b_z
    xr = xs @ p.w_r.T + p.b_r
    xh = xs @ p.w_h.T + p.b_h
    z = np.empty((T, H))
    r = np.empty((T, H))
    h_cand = np.empty((T, H))
    h_prev = np.empty((T, H))
    h = np.empty((T, H))
    state = np.zeros(H)
    for t in range(T):
        h_prev[t] = state
        z[t] = _sigmoid(xz[t] + p.u_z @ state)
        r[t] = _sigmoid(xr[t] + p.u_r @ state)
        h_cand[t] = np.tanh(xh[t] + p.u_h @ (r[t] * state))
        state = (1.0 - z[t]) * state + z[t] * h_cand[t]
        h[t] = state
    return _ScanCache(xs=xs, z=z, r=r, h_cand=h_cand, h_prev=h_prev, h=h)


def _scan_grad(dh_seq: np.ndarray, cache: _ScanCache, p: GruDirection, g: GruDirection) -> None:
    """Backpropagate through one scan, accumulating parameter grads into g.

    dh_seq holds the loss gradient w.r.t. each emitted state, in processing
    order. Gradients w.r.t. the inputs are not needed (frozen embeddings).
    """
    carry = np.zeros_like(dh_seq[0])
    for t in range(dh_seq.shape[0] - 1, -1, -1):
        dh = dh_seq[t] + carry
        z, r, hc, hp, x = cache.z[t], cache.r[t], cache.h_cand[t], cache.h_prev[t], cache.xs[t]
        dz = dh * (hc - hp)
        dah = (dh * z) * (1.0 - hc * hc)
        daz = dz * z * (1.0 - z)
        uh_dah = p.u_h.T @ dah
        dar = (uh_dah * hp) * r * (1.0 - r)
        carry = dh * (1.0 - z) + p.u_z.T @ daz + p.u_r.T @ dar + uh_dah * r
        g.w_z += np.outer(daz, x)
        g.u_z += np.outer(daz, hp)
        g.b_z += daz
        g.w_r += np.outer(dar, x)
        g.u_r += np.outer(dar, hp)
        g.b_r += dar
        g.w_h += np.outer(dah, x)
        g.u_h += np.outer(dah, r * hp)
        g.b_h += dah


def bgru_encode(x: np.ndarray, params: ModelParams) -> np.ndarray:
    """Annotations h_1..h_T, each the concat of forward and backward states."""
    fwd = _scan(x, params.gru_fwd)
    bwd = _scan(x[::-1], params.gru_bwd)
    return np.concatenate([fwd.h, bwd.h[::-1]], axis=1)


def attend(annotations: np.ndarray, attn: AttentionParams) -> tuple[np.ndarray, np.ndarray]:
    """Context vector and attention weights over the annotations."""
    q = np.tanh(annotations @ attn.w.T + attn.b)
    alpha = _softmax(q @ attn.u)
    return alpha @ annotations, alpha


@dataclass
class _ForwardCache:
    fwd: _ScanCache
    bwd: _ScanCache
    annotations: np.ndarray  # T x 2H
    q: np.ndarray  # T x A
    alpha: np.ndarray  # T
    context: np.ndarray  # 2H
    probs: np.ndarray  # L


def _forward(x: np.ndarray, params: ModelParams) -> _ForwardCache:
    fwd = _scan(x, params.gru_fwd)
    bwd = _scan(x[::-1], params.gru_bwd)
    annotations = np.concatenate([fwd.h, bwd.h[::-1]], axis=1)
    q = np.tanh(annotations @ params.attn.w.T + params.attn.b)
    alpha = _softmax(q @ params.attn.u)
    context = alpha @ annotations
    probs = _softmax(params.out.w @ context + params.out.b)
    return _ForwardCache(
        fwd=fwd, bwd=bwd, annotations=annotations, q=q, alpha=alpha, context=context, probs=probs
    )


def forward_loss(x: np.ndarray, label: int, params: ModelParams) -> tuple[np.ndarray, float]:
    """Class probabilities and the negative log likelihood of the label."""
    cache = _forward(x, params)
    with np.errstate(divide="ignore"):
        return cache.probs, float(-np.log(cache.probs[label]))


def _energy_grad(alpha: np.ndarray, d_alpha: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. softmax outputs back to the energies.

    The softmax Jacobian has zero row sums, so the result always sums to 0:
    shifting every energy by a constant cannot change the weights.
    """
    return alpha * (d_alpha - alpha @ d_alpha)


def backward(x: np.ndarray, label: int, params: ModelParams) -> tuple[float, ModelParams]:
    """Loss and its gradient w.r.t. every parameter (embeddings stay frozen)."""
    cache = _forward(x, params)
    probs, alpha, q, annotations = cache.probs, cache.alpha, cache.q, cache.annotations
    with np.errstate(divide="ignore"):
        loss = float(-np.log(probs[label]))
    g = zero_gradients(params)

    d_logits = probs.copy()
    d_logits[label] -= 1.0
    g.out.w += np.outer(d_logits, cache.context)
    g.out.b += d_logits
    d_context = params.out.w.T @ d_logits

    d_alpha = annotations @ d_context
    d_energy = _energy_grad(alpha, d_alpha)
    g.attn.u += q.T @ d_energy
    d_q = np.outer(d_energy, params.attn.u)
    d_a = d_q * (1.0 - q * q)
    g.attn.w += d_a.T @ annotations
    g.attn.b += d_a.sum(axis=0)
    d_annotations = np.outer(alpha, d_context) + d_a @ params.attn.w

    H = params.gru_fwd.b_z.shape[0]
    _scan_grad(d_annotations[:, :H], cache.fwd, params.gru_fwd, g.gru_fwd)
    _scan_grad(d_annotations[::-1, H:], cache.bwd, params.gru_bwd, g.gru_bwd)

    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss}; lower the learning rate")
    return loss, g


def _accumulate(total: ModelParams, part: ModelParams) -> None:
    for (_, t), (_, p) in zip(_param_arrays(total), _param_arrays(part)):
        t += p


def _sgd_step(params: ModelParams, grads: ModelParams, lr: float, clip_norm: float) -> None:
    norm = np.sqrt(sum(float((g * g).sum()) for _, g in _param_arrays(grads)))
    scale = clip_norm / norm if norm > clip_norm else 1.0
    for (_, p), (_, g) in zip(_param_arrays(params), _param_arrays(grads)):
        p -= lr * scale * g


def make_examples(
    songs: Iterable[TokenizedSong],
    embeddings: Embeddings,
    classes: Sequence[str],
    max_len: int = 500,
) -> list[SongExample]:
    """Look up each song's in-vocabulary motif vectors as a frozen input matrix."""
    class_index = {c: i for i, c in enumerate(classes)}
    examples = []
    for song in songs:
        kept = [t for t in song.tokens if t in embeddings.vocab]
        if not kept:
            raise ValueError(f"untokenizable song {song.id!r}: no in-vocabulary motifs")
        kept = kept[:max_len]
        rows = embeddings.vocab.encode(kept)
        if song.label not in class_index:
            raise ValueError(f"song {song.id!r} has unknown class {song.label!r}")
        examples.append(
            SongExample(
                id=song.id,
                x=embeddings.input_vectors[rows].copy(),
                label=class_index[song.label],
                tokens=tuple(kept),
            )
        )
    return examples


def train_classifier(
    examples: Sequence[SongExample],
    classes: Sequence[str],
    config: Optional[ClassifierConfig] = None,
) -> AttentionModel:
    """Mini-batch SGD; deterministic (bit-reproducible) when workers=1.

    With val_fraction > 0 a seeded holdout is split off and the parameters
    of the best epoch by holdout loss are returned; otherwise the final
    parameters are.
    """
    config = config or ClassifierConfig()
    if not examples:
        raise ValueError("empty training set")
    dim = examples[0].x.shape[1]
    model = init_model(
        dim, classes, hidden=config.hidden, attention_dim=config.attention_dim, seed=config.seed
    )
    rng = np.random.default_rng(config.seed)
    examples = list(examples)
    n_val = int(round(config.val_fraction * len(examples)))
    if n_val:
        order = rng.permutation(len(examples))
        val = [examples[i] for i in order[:n_val]]
        train = [examples[i] for i in order[n_val:]]
    else:
        val, train = [], examples
    if not train:
        raise ValueError("validation split leaves no training data")

    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    best_val = np.inf
    best_params = None
    try:
        for _ in range(config.epochs):
            order = rng.permutation(len(train))
            epoch_loss = 0.0
            for start in range(0, len(order), config.batch):
                batch = [train[i] for i in order[start : start + config.batch]]
                grads = zero_gradients(model.params)
                if pool is None:
                    results = [backward(ex.x, ex.label, model.params) for ex in batch]
                else:
                    # Batch members all see the pre-update parameters, so the
                    # aggregate matches the serial result batch for batch.
                    results = list(
                        pool.map(lambda ex: backward(ex.x, ex.label, model.params), batch)
                    )
                for loss, g in results:
                    epoch_loss += loss
                    _accumulate(grads, g)
                for _, g in _param_arrays(grads):
                    g /= len(batch)
                _sgd_step(model.params, grads, config.lr, config.clip_norm)
            mean_loss = epoch_loss / len(train)
            if not np.isfinite(mean_loss):
                raise TrainingDiverged(
                    f"epoch loss went non-finite ({mean_loss}); lower the learning rate"
                )
            model.epoch_losses.append(mean_loss)
            if val:
                val_loss = float(
                    np.mean([forward_loss(ex.x, ex.label, model.params)[1] for ex in val])
                )
                model.val_losses.append(val_loss)
                if val_loss < best_val:
                    best_val = val_loss
                    best_params = copy.deepcopy(model.params)
    finally:
        if pool is not None:
            pool.shutdown()
    if best_params is not None:
        model.params = best_params
    return model


def predict(model: AttentionModel, x: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    """Argmax class index, class probabilities, and attention weights."""
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] != model.dim:
        raise ValueError(f"expected a T x {model.dim} input, got {x.shape}")
    cache = _forward(x, model.params)
    return int(np.argmax(cache.probs)), cache.probs, cache.alpha


def predict_song(
    model: AttentionModel, song: TokenizedSong, embeddings: Embeddings, max_len: int = 500
) -> tuple[str, np.ndarray, list[tuple[str, float]]]:
    """Predicted label plus (motif, attention weight) pairs for inspection."""
    kept = [t for t in song.tokens if t in embeddings.vocab][:max_len]
    if not kept:
        raise ValueError(f"untokenizable song {song.id!r}: no in-vocabulary motifs")
    x = embeddings.input_vectors[embeddings.vocab.encode(kept)]
    label, probs, alpha = predict(model, x)
    return model.labels[label], probs, list(zip(kept, alpha.tolist()))


def alpha_csv(weighted_motifs: Sequence[tuple[str, float]]) -> str:
    """CSV export of per-motif attention weights: motif, weight."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["motif", "weight"])
    for motif, weight in weighted_motifs:
        writer.writerow([motif, repr(float(weight))])
    return buf.getvalue()


def vocab_digest(vocab: Vocabulary) -> str:
    return hashlib.sha256(write_vocab(vocab).encode("utf-8")).hexdigest()


def save_model(model: AttentionModel, vocab_hash: str = "") -> str:
    """Checkpoint: one JSON config line, then each parameter in the
    embedding text format (name as the header's first field)."""
    meta = {
        "labels": model.labels,
        "dim": model.dim,
        "hidden": model.hidden,
        "attention_dim": model.attention_dim,
        "vocab_sha256": vocab_hash,
    }
    chunks = [json.dumps(meta, sort_keys=True) + "\n"]
    for name, arr in _param_arrays(model.params):
        matrix = arr.reshape(1, -1) if arr.ndim == 1 else arr
        rows = write_embeddings([f"{name}[{i}]" for i in range(matrix.shape[0])], matrix)
        chunks.append(f"@{name} {arr.ndim}\n{rows}")
    return "".join(chunks)


def load_model(text: str) -> tuple[AttentionModel, dict]:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty model file")
    meta = json.loads(lines[0])
    arrays: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        if not lines[i].startswith("@"):
            raise ValueError(f"line {i + 1}: expected a @parameter header")
        name, ndim = lines[i][1:].rsplit(" ", 1)
        if i + 1 >= len(lines):
            raise ValueError(f"truncated checkpoint: no data after parameter {name}")
        n_rows = int(lines[i + 1].split()[0])
        if i + 2 + n_rows > len(lines):
            raise ValueError(f"truncated checkpoint inside parameter {name}")
        block = "\n".join(lines[i + 1 : i + 2 + n_rows]) + "\n"
        _, matrix = read_embeddings(block)
        arrays[name] = matrix[0] if int(ndim) == 1 else matrix
        i += 2 + n_rows
    model = init_model(
        dim=meta["dim"],
        labels=meta["labels"],
        hidden=meta["hidden"],
        attention_dim=meta["attention_dim"],
    )
    for name, arr in _param_arrays(model.params):
        if name not in arrays:
            raise ValueError(f"checkpoint is missing parameter {name}")
        if arrays[name].shape != arr.shape:
            raise ValueError(
                f"parameter {name} has shape {arrays[name].shape}, expected {arr.shape}"
            )
        arr[...] = arrays[name]
    return model, meta
