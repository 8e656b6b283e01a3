"""GRU anomaly detector over embedding sequences.

Sequences are sliding runs of L window embeddings. A 2-layer GRU (hidden 64,
inter-layer dropout 0.3) with a 64->32->1 sigmoid head scores each timestep;
the final timestep's score is the sequence probability. Window-level scores
aggregate each window's per-occurrence probabilities by mean or max.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .analysis import MetricBlock, compute_metrics
from .encoder import EMBED_DIM

HIDDEN_DIM = 64
HEAD_DIM = 32
DROPOUT_P = 0.3


@dataclass
class DetectorConfig:
    epochs: int = 100
    lr: float = 1e-3
    batch_size: int = 32
    patience: int = 20
    seed: int = 0
    grad_clip: float = 5.0  # 0 disables clipping
    dropout: float = DROPOUT_P


@dataclass(frozen=True)
class EmbeddingSequence:
    start_index: int
    vectors: np.ndarray  # (L, 32), window order
    label: int


@dataclass
class DetectionReport:
    threshold: float
    sequence_rows: list    # (start_index, prob, decision, label)
    mean_rows: list        # (window_index, score, decision, label)
    max_rows: list
    metrics: dict          # view name -> MetricBlock

    def view_rows(self, view: str) -> list:
        return {"sequence": self.sequence_rows, "mean": self.mean_rows, "max": self.max_rows}[view]


def make_sequences(embeddings, length: int) -> list:
    """Stride-1 sliding sequences S_n = [h_n, ..., h_{n+L-1}] with any-attack labels."""
    if length < 1:
        raise ValueError(f"sequence length must be >= 1, got {length}")
    m = len(embeddings)
    if length > m:
        raise ValueError(f"sequence length {length} exceeds window count {m}")
    for prev, cur in zip(embeddings, embeddings[1:]):
        if cur.window_index != prev.window_index + 1:
            raise ValueError("embeddings must have consecutive window indices")
    out = []
    for n in range(m - length + 1):
        chunk = embeddings[n : n + length]
        out.append(EmbeddingSequence(
            start_index=embeddings[n].window_index,
            vectors=np.stack([e.vector for e in chunk]),
            label=1 if any(e.label == 1 for e in chunk) else 0))
    return out


def _gru_params(prefix: str, d_in: int, d_h: int, rng) -> dict:
    names = {"w_z": (d_in, d_h), "u_z": (d_h, d_h), "b_z": (d_h,),
             "w_r": (d_in, d_h), "u_r": (d_h, d_h), "b_r": (d_h,),
             "w_n": (d_in, d_h), "u_n": (d_h, d_h), "b_in": (d_h,), "b_hn": (d_h,)}
    params = {}
    for key, shape in names.items():
        fan_in = shape[0] if len(shape) > 1 else d_h
        params[key] = nn.Parameter(nn.seeded_init(shape, fan_in, rng), f"{prefix}_{key}")
    return params


class DetectorModel:
    def __init__(self, seed: int = 0, dropout_p: float = DROPOUT_P):
        rng = np.random.default_rng(seed)
        self.gru1 = _gru_params("gru1", EMBED_DIM, HIDDEN_DIM, rng)
        self.gru2 = _gru_params("gru2", HIDDEN_DIM, HIDDEN_DIM, rng)
        self.fc1_w = nn.Parameter(nn.seeded_init((HIDDEN_DIM, HEAD_DIM), HIDDEN_DIM, rng), "fc1_w")
        self.fc1_b = nn.Parameter(nn.seeded_init((HEAD_DIM,), HIDDEN_DIM, rng), "fc1_b")
        self.fc2_w = nn.Parameter(nn.seeded_init((HEAD_DIM, 1), HEAD_DIM, rng), "fc2_w")
        self.fc2_b = nn.Parameter(nn.seeded_init((1,), HEAD_DIM, rng), "fc2_b")
        self.dropout_p = dropout_p

    def parameters(self):
        out = list(self.gru1.values()) + list(self.gru2.values())
        out += [self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b]
        return out

    def _head(self, h) -> nn.Tensor:
        return nn.sigmoid(nn.linear(nn.relu(nn.linear(h, self.fc1_w, self.fc1_b)),
                                    self.fc2_w, self.fc2_b))

    def forward_batch(self, x: np.ndarray, training: bool = False, rng=None):
        """Run the GRU stack over a (B, L, 32) batch.

        Returns (seq_probs Tensor (B, 1), window_probs list of L Tensors (B, 1)).
        seq_probs is the head on the final hidden state, i.e. window_probs[-1].
        """
        if x.ndim != 3 or x.shape[2] != EMBED_DIM:
            raise ValueError(f"expected (B, L, {EMBED_DIM}) input, got {x.shape}")
        if training and self.dropout_p > 0 and rng is None:
            raise ValueError("training-mode forward needs an rng for dropout")
        b, length, _ = x.shape
        h1 = nn.Tensor(np.zeros((b, HIDDEN_DIM)))
        h2 = nn.Tensor(np.zeros((b, HIDDEN_DIM)))
        window_probs = []
        for t in range(length):
            xt = nn.Tensor(x[:, t, :])
            h1 = nn.gru_cell(xt, h1, self.gru1)
            h1d = nn.dropout(h1, self.dropout_p, training, rng)
            h2 = nn.gru_cell(h1d, h2, self.gru2)
            window_probs.append(self._head(h2))
        return window_probs[-1], window_probs

    def snapshot(self) -> dict:
        return {p.name: p.data.copy() for p in self.parameters()}

    def load_state(self, state: dict) -> None:
        for p in self.parameters():
            p.data[...] = state[p.name]

    def save(self, path) -> None:
        nn.save_checkpoint(self.parameters(), path)

    def load(self, path) -> None:
        nn.restore_parameters(self.parameters(), path)


def detector_forward(model: DetectorModel, seq: EmbeddingSequence, training: bool = False, rng=None):
    """Score one sequence: (sequence probability, per-timestep window probabilities)."""
    seq_prob, window_probs = model.forward_batch(seq.vectors[None, :, :], training, rng)
    return float(seq_prob.data[0, 0]), [float(p.data[0, 0]) for p in window_probs]


def train_detector(model: DetectorModel, train_seqs, val_seqs, config: DetectorConfig = DetectorConfig()):
    """Minimize sequence-level BCE; keep the epoch with best validation F1 at 0.5.

    Window-level probabilities carry no loss. Raises on a single-class
    training set, where BCE evaluation is degenerate.
    """
    labels = {s.label for s in train_seqs}
    if labels != {0, 1}:
        raise ValueError(f"training set must contain both classes, got labels {sorted(labels)}")
    rng = np.random.default_rng(config.seed)
    x_train = np.stack([s.vectors for s in train_seqs])
    y_train = np.array([[s.label] for s in train_seqs], dtype=np.float64)
    x_val = np.stack([s.vectors for s in val_seqs])
    y_val = np.array([s.label for s in val_seqs], dtype=np.int64)

    log = []
    best_f1 = -1.0
    best_state = model.snapshot()
    best_epoch = -1
    stale = 0
    n = len(train_seqs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            seq_probs, _ = model.forward_batch(x_train[idx], training=True, rng=rng)
            loss = nn.bce_loss(seq_probs, nn.Tensor(y_train[idx]))
            loss.backward()
            if config.grad_clip > 0:
                nn.clip_global_norm(model.parameters(), config.grad_clip)
            nn.adam_step(model.parameters(), lr=config.lr)
            epoch_loss += loss.item() * len(idx)
        epoch_loss /= n
        if not np.isfinite(epoch_loss):
            raise FloatingPointError(f"detector training diverged at epoch {epoch}")
        val_probs = _score_sequences(model, x_val)
        val_dec = (val_probs >= 0.5).astype(np.int64)
        val_metrics = compute_metrics(val_dec, y_val, val_probs)
        log.append({"epoch": epoch, "train_loss": epoch_loss, "val_f1": val_metrics.f1})
        if val_metrics.f1 > best_f1:
            best_f1 = val_metrics.f1
            best_state = model.snapshot()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break
    model.load_state(best_state)
    return model, {"epochs_run": len(log), "best_epoch": best_epoch, "best_val_f1": best_f1,
                   "history": log}


def _score_sequences(model: DetectorModel, x: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Inference-mode sequence probabilities, chunked to bound tape memory."""
    out = np.empty(len(x))
    for start in range(0, len(x), chunk):
        probs, _ = model.forward_batch(x[start : start + chunk], training=False)
        out[start : start + chunk] = probs.data[:, 0]
    return out


def detect(model: DetectorModel, embeddings, length: int, threshold: float = 0.5,
           chunk: int = 256) -> DetectionReport:
    """Full detection pass: sequence view plus mean- and max-aggregated window views."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    seqs = make_sequences(embeddings, length)
    m = len(embeddings)
    base = embeddings[0].window_index

    seq_probs = np.empty(len(seqs))
    # per-window contribution lists, indexed by position in `embeddings`
    contributions = [[] for _ in range(m)]
    x = np.stack([s.vectors for s in seqs])
    for start in range(0, len(seqs), chunk):
        probs, window_probs = model.forward_batch(x[start : start + chunk], training=False)
        seq_probs[start : start + chunk] = probs.data[:, 0]
        for t, pt in enumerate(window_probs):
            col = pt.data[:, 0]
            for b in range(len(col)):
                contributions[start + b + t].append(float(col[b]))

    sequence_rows = [(s.start_index, float(p), int(p >= threshold), s.label)
                     for s, p in zip(seqs, seq_probs)]
    mean_rows, max_rows = [], []
    for w, e in enumerate(embeddings):
        c = contributions[w]
        mean_score = float(np.mean(c))
        max_score = float(np.max(c))
        mean_rows.append((e.window_index, mean_score, int(mean_score >= threshold), e.label))
        max_rows.append((e.window_index, max_score, int(max_score >= threshold), e.label))

    metrics = {}
    for view, rows in (("sequence", sequence_rows), ("mean", mean_rows), ("max", max_rows)):
        metrics[view] = compute_metrics([r[2] for r in rows], [r[3] for r in rows],
                                        [r[1] for r in rows])
    return DetectionReport(threshold=threshold, sequence_rows=sequence_rows,
                           mean_rows=mean_rows, max_rows=max_rows, metrics=metrics)


def write_report_csvs(report: DetectionReport, out_dir) -> None:
    out_dir = Path(out_dir)
    for view in ("sequence", "mean", "max"):
        with (out_dir / f"detect_{view}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            unit = "start_index" if view == "sequence" else "window_index"
            w.writerow([unit, "probability", "decision", "label"])
            for row in report.view_rows(view):
                w.writerow([row[0], repr(row[1]), row[2], row[3]])


def summary_table(report: DetectionReport, window_size: int, sequence_length: int) -> str:
    """Plain-text block with one row per view: accuracy/precision/recall/F1/AUC."""
    lines = ["Win  Seq  Type      Accuracy  Precision  Recall   F1-score  AUC"]
    for view in ("sequence", "mean", "max"):
        mb = report.metrics[view]
        auc = f"{mb.auc:.4f}" if mb.auc is not None else "n/a"
        lines.append(f"{window_size:<4} {sequence_length:<4} {view:<9} "
                     f"{mb.accuracy:.4f}    {mb.precision:.4f}     {mb.recall:.4f}   "
                     f"{mb.f1:.4f}    {auc}")
    return "\n".join(lines)
