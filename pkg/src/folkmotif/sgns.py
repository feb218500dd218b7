"""Skip-gram with negative sampling, plus the PV-DBOW document-vector variant.

Training ascends, per (target, context) pair,

    log sigma(v_c . v_w) + sum_{i=1..k} log sigma(-v_{c'_i} . v_w)

with negatives drawn from the count^0.75 unigram distribution. The input
matrix holds the queried vectors v_w; the output matrix holds context
vectors v_c. PV-DBOW reuses the same objective with a per-song document
vector standing in for v_w.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .tokens import TokenizedSong
from .vocab import SamplingDist, Vocabulary, negative_sampling_dist


class TrainingDiverged(RuntimeError):
    """Raised when an objective goes non-finite (learning rate too high)."""


@dataclass
class SkipgramConfig:
    dim: int = 150
    window: int = 4
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    lr_min: float = 0.0001
    power: float = 0.75
    seed: int = 0
    workers: int = 1  # >1 trades determinism for wall-clock time

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise ValueError("dim, window, negatives, and epochs must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass
class Embeddings:
    vocab: Vocabulary
    input_vectors: np.ndarray  # V x d, the representation used for queries
    output_vectors: np.ndarray  # V x d, context matrix
    epoch_objectives: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def vector(self, token: str) -> np.ndarray:
        return self.input_vectors[self._index(token)]

    def _index(self, token: str) -> int:
        if token not in self.vocab:
            hints = _nearby_tokens(token, self.vocab.tokens)
            hint = f"; did you mean {', '.join(hints)}?" if hints else ""
            raise KeyError(f"unknown token {token!r}{hint}")
        return self.vocab.index[token]


@dataclass
class DocVectors:
    ids: list[str]
    vectors: np.ndarray  # one row per song
    epoch_objectives: list[float] = field(default_factory=list)

    def vector(self, song_id: str) -> np.ndarray:
        try:
            return self.vectors[self.ids.index(song_id)]
        except ValueError:
            raise KeyError(f"unknown song id {song_id!r}") from None


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(_log_sigmoid(x))


def pair_objective(
    w: np.ndarray, ctx: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative SGNS objective for one target vector against rows of ctx.

    labels holds 1 for the positive context and 0 for negatives. Returns
    (loss, d loss/d w, d loss/d ctx); minimizing this loss ascends the
    objective.
    """
    # Divergence shows up as overflowing scores; that is detected via the
    # finiteness of the loss, so the overflow itself is not worth a warning.
    with np.errstate(over="ignore", invalid="ignore"):
        scores = ctx @ w
        loss = -float(np.where(labels == 1, _log_sigmoid(scores), _log_sigmoid(-scores)).sum())
        g = _sigmoid(scores) - labels
        return loss, g @ ctx, np.outer(g, w)


def _encode_corpus(songs: Iterable[TokenizedSong], vocab: Vocabulary) -> list[np.ndarray]:
    encoded = []
    for song in songs:
        idx = vocab.encode(song.tokens)
        if idx:
            encoded.append(np.asarray(idx, dtype=np.int64))
    if not encoded:
        raise ValueError("no song has any in-vocabulary token")
    return encoded


def _train_pass(
    sequences: Sequence[np.ndarray],
    target_rows: Sequence[int] | None,
    input_vectors: np.ndarray,
    output_vectors: np.ndarray,
    dist: SamplingDist,
    config: SkipgramConfig,
    rng: np.random.Generator,
    progress: Iterable[float],
) -> float:
    """One epoch of SGD over all (target, context) pairs.

    ``target_rows`` selects the input row per sequence (PV-DBOW document
    mode); when None the targets are the tokens themselves (skip-gram).
    Returns the total pair loss; raises TrainingDiverged on non-finite loss.
    """
    k = config.negatives
    labels = np.zeros(k + 1)
    labels[0] = 1.0
    idx = np.empty(k + 1, dtype=np.int64)
    total = 0.0
    progress_iter = iter(progress)
    for s, seq in enumerate(sequences):
        for t in range(len(seq)):
            lr = max(config.lr_min, config.lr * (1.0 - next(progress_iter)))
            if target_rows is None:
                b = int(rng.integers(1, config.window + 1))
                contexts = np.concatenate([seq[max(0, t - b) : t], seq[t + 1 : t + 1 + b]])
                row = seq[t]
            else:
                contexts = seq[t : t + 1]
                row = target_rows[s]
            w = input_vectors[row]
            for c in contexts:
                idx[0] = c
                idx[1:] = dist.draw(rng, k)
                loss, grad_w, grad_ctx = pair_objective(w, output_vectors[idx], labels)
                total += loss
                np.add.at(output_vectors, idx, -lr * grad_ctx)
                input_vectors[row] = w - lr * grad_w
    if not np.isfinite(total):
        raise TrainingDiverged(
            f"non-finite training objective {total}; lower the learning rate ({config.lr})"
        )
    return total


def _linear_progress(epochs: int, centers_per_epoch: int):
    total = epochs * centers_per_epoch
    return (i / total for i in range(total))


def _run_epochs(
    sequences: list[np.ndarray],
    target_rows: Optional[list[int]],
    input_vectors: np.ndarray,
    output_vectors: np.ndarray,
    dist: SamplingDist,
    config: SkipgramConfig,
) -> list[float]:
    centers = sum(len(s) for s in sequences)
    objectives = []
    if config.workers == 1:
        rng = np.random.default_rng(config.seed)
        progress = _linear_progress(config.epochs, centers)
        for _ in range(config.epochs):
            total = _train_pass(
                sequences, target_rows, input_vectors, output_vectors, dist, config, rng, progress
            )
            objectives.append(-total / centers)
        return objectives

    # Parallel mode: workers update the shared matrices without locks
    # (hogwild-style); results are not bit-reproducible.
    shards = [sequences[i :: config.workers] for i in range(config.workers)]
    row_shards = (
        [None] * config.workers
        if target_rows is None
        else [target_rows[i :: config.workers] for i in range(config.workers)]
    )
    for epoch in range(config.epochs):
        epoch_total = 0.0
        lock = threading.Lock()
        threads = []

        def work(shard, rows, seed):
            nonlocal epoch_total
            rng = np.random.default_rng(seed)
            n = sum(len(s) for s in shard)
            start = epoch / config.epochs
            span = 1.0 / config.epochs
            progress = (start + span * i / max(1, n) for i in range(n))
            total = _train_pass(
                shard, rows, input_vectors, output_vectors, dist, config, rng, progress
            )
            with lock:
                epoch_total += total

        for i, (shard, rows) in enumerate(zip(shards, row_shards)):
            t = threading.Thread(target=work, args=(shard, rows, config.seed + 1000 * epoch + i))
            t.start()
            threads.append(t)
        for t in threads:
            t.join()
        objectives.append(-epoch_total / centers)
    return objectives


def train_skipgram(
    songs: Sequence[TokenizedSong], vocab: Vocabulary, config: Optional[SkipgramConfig] = None
) -> Embeddings:
    """Learn token embeddings; deterministic (bit-reproducible) when workers=1."""
    config = config or SkipgramConfig()
    sequences = _encode_corpus(songs, vocab)
    rng = np.random.default_rng(config.seed)
    V, d = len(vocab), config.dim
    input_vectors = (rng.random((V, d)) - 0.5) / d
    output_vectors = np.zeros((V, d))
    dist = negative_sampling_dist(vocab, config.power)
    objectives = _run_epochs(sequences, None, input_vectors, output_vectors, dist, config)
    return Embeddings(
        vocab=vocab,
        input_vectors=input_vectors,
        output_vectors=output_vectors,
        epoch_objectives=objectives,
    )


def train_pvdbow(
    songs: Sequence[TokenizedSong], vocab: Vocabulary, config: Optional[SkipgramConfig] = None
) -> DocVectors:
    """Learn one vector per song that predicts the song's tokens (PV-DBOW)."""
    config = config or SkipgramConfig()
    ids = []
    sequences = []
    for song in songs:
        idx = vocab.encode(song.tokens)
        if idx:
            ids.append(song.id)
            sequences.append(np.asarray(idx, dtype=np.int64))
    if not ids:
        raise ValueError("no song has any in-vocabulary token")
    rng = np.random.default_rng(config.seed)
    d = config.dim
    doc_vectors = (rng.random((len(ids), d)) - 0.5) / d
    output_vectors = np.zeros((len(vocab), d))
    dist = negative_sampling_dist(vocab, config.power)
    target_rows = list(range(len(ids)))
    objectives = _run_epochs(sequences, target_rows, doc_vectors, output_vectors, dist, config)
    return DocVectors(ids=ids, vectors=doc_vectors, epoch_objectives=objectives)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


def most_similar(embeddings: Embeddings, token: str, k: int = 10) -> list[tuple[str, float]]:
    """Top-k input-matrix neighbors by cosine, excluding the query itself."""
    if k < 1:
        raise ValueError("k must be positive")
    qi = embeddings._index(token)
    M = embeddings.input_vectors
    norms = np.linalg.norm(M, axis=1)
    q = M[qi]
    qn = norms[qi]
    if qn == 0.0:
        raise ValueError(f"token {token!r} has a zero vector")
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(norms > 0.0, (M @ q) / (norms * qn), -np.inf)
    sims[qi] = -np.inf
    order = np.argsort(-sims, kind="stable")[: min(k, len(sims) - 1)]
    return [(embeddings.vocab.tokens[i], float(sims[i])) for i in order]


def _edit_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _nearby_tokens(token: str, candidates: Sequence[str], limit: int = 5) -> list[str]:
    scored = [
        (dist, c)
        for c in candidates
        if abs(len(c) - len(token)) <= 2 and (dist := _edit_distance(token, c)) <= 2
    ]
    return [repr(c) for _, c in sorted(scored)[:limit]]


def write_embeddings(tokens: Sequence[str], matrix: np.ndarray) -> str:
    """Text format: header "V d", then one token and d floats per line."""
    V, d = matrix.shape
    if len(tokens) != V:
        raise ValueError("token count must match matrix rows")
    lines = [f"{V} {d}"]
    for tok, row in zip(tokens, matrix):
        lines.append(tok + " " + " ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def read_embeddings(text: str) -> tuple[list[str], np.ndarray]:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty embedding file")
    try:
        V, d = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise ValueError(f'bad header {lines[0]!r}; expected "V d"') from exc
    tokens = []
    matrix = np.empty((V, d))
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != V:
        raise ValueError(f"expected {V} rows, found {len(body)}")
    for i, line in enumerate(body):
        fields = line.split(" ")
        if len(fields) != d + 1:
            raise ValueError(f"line {i + 2}: expected token and {d} floats")
        tokens.append(fields[0])
        matrix[i] = [float(x) for x in fields[1:]]
    return tokens, matrix
