"""Overcomplete-AE + graph-convolution encoder.

Trains on normal-only window graphs by node-feature reconstruction (MSE),
then embeds arbitrary graphs into 1x32 vectors via global mean pooling.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .graph import WindowGraph, normalized_adjacency

IN_DIM = 9
LATENT_DIM = 16
EMBED_DIM = 32


@dataclass
class EncoderConfig:
    epochs: int = 100
    lr: float = 1e-3
    patience: int = 20
    seed: int = 0
    grad_clip: float = 5.0  # 0 disables clipping
    val_fraction: float = 0.1


@dataclass(frozen=True)
class GraphEmbedding:
    """The pooled 1x32 representation of one window."""

    vector: np.ndarray  # shape (32,)
    window_index: int
    label: int


class EncoderModel:
    """AE encoder 9->16->16, three 32-wide graph convolutions, decoder 32->16->9."""

    def __init__(self, seed: int = 0):
        rng = np.random.default_rng(seed)
        widths = [
            ("enc1", IN_DIM, LATENT_DIM),
            ("enc2", LATENT_DIM, LATENT_DIM),
            ("gcn1", LATENT_DIM, EMBED_DIM),
            ("gcn2", EMBED_DIM, EMBED_DIM),
            ("gcn3", EMBED_DIM, EMBED_DIM),
            ("dec1", EMBED_DIM, LATENT_DIM),
            ("dec2", LATENT_DIM, IN_DIM),
        ]
        self.params = {}
        for name, d_in, d_out in widths:
            self.params[f"{name}_w"] = nn.Parameter(nn.seeded_init((d_in, d_out), d_in, rng), f"{name}_w")
            self.params[f"{name}_b"] = nn.Parameter(nn.seeded_init((d_out,), d_in, rng), f"{name}_b")

    def parameters(self):
        return list(self.params.values())

    def forward(self, graph: WindowGraph, norm_adj: np.ndarray = None):
        """Return (node_embeddings (W,32), reconstruction (W,9)), both differentiable."""
        if graph.node_features.shape[1] != IN_DIM:
            raise ValueError(f"expected {IN_DIM}-wide node features, got {graph.node_features.shape[1]}")
        if norm_adj is None:
            norm_adj = normalized_adjacency(graph)
        p = self.params
        h = nn.relu(nn.linear(nn.Tensor(graph.node_features), p["enc1_w"], p["enc1_b"]))
        h = nn.relu(nn.linear(h, p["enc2_w"], p["enc2_b"]))
        h = nn.relu(nn.gcn_conv(h, norm_adj, p["gcn1_w"], p["gcn1_b"]))
        h = nn.relu(nn.gcn_conv(h, norm_adj, p["gcn2_w"], p["gcn2_b"]))
        node_emb = nn.relu(nn.gcn_conv(h, norm_adj, p["gcn3_w"], p["gcn3_b"]))
        d = nn.relu(nn.linear(node_emb, p["dec1_w"], p["dec1_b"]))
        recon = nn.linear(d, p["dec2_w"], p["dec2_b"])
        return node_emb, recon

    def snapshot(self) -> dict:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state(self, state: dict) -> None:
        for name, p in self.params.items():
            p.data[...] = state[name]

    def save(self, path) -> None:
        nn.save_checkpoint(self.parameters(), path)

    def load(self, path) -> None:
        nn.restore_parameters(self.parameters(), path)


def _reconstruction_loss(model: EncoderModel, graph: WindowGraph, adj: np.ndarray) -> nn.Tensor:
    _, recon = model.forward(graph, adj)
    return nn.mse_loss(recon, nn.Tensor(graph.node_features))


def train_encoder(graphs, config: EncoderConfig = EncoderConfig()):
    """Train on normal-only graphs; returns (model, log of per-epoch losses).

    Keeps the parameters from the epoch with the lowest validation
    reconstruction loss; stops early after `patience` epochs without
    improvement.
    """
    if not graphs:
        raise ValueError("no graphs to train on")
    bad = [g.window_index for g in graphs if g.label != 0]
    if bad:
        raise ValueError(f"encoder training requires normal-only graphs; got attack windows {bad[:5]}")
    n_val = max(1, int(len(graphs) * config.val_fraction)) if len(graphs) > 1 else 0
    train_graphs = graphs[: len(graphs) - n_val] if n_val else list(graphs)
    val_graphs = graphs[len(graphs) - n_val :] if n_val else list(graphs)

    model = EncoderModel(seed=config.seed)
    adjs = {id(g): normalized_adjacency(g) for g in graphs}
    log = []
    best_val = np.inf
    best_state = model.snapshot()
    best_epoch = -1
    stale = 0
    for epoch in range(config.epochs):
        train_loss = 0.0
        for g in train_graphs:
            loss = _reconstruction_loss(model, g, adjs[id(g)])
            loss.backward()
            if config.grad_clip > 0:
                nn.clip_global_norm(model.parameters(), config.grad_clip)
            nn.adam_step(model.parameters(), lr=config.lr)
            train_loss += loss.item()
        train_loss /= len(train_graphs)
        if not np.isfinite(train_loss):
            raise FloatingPointError(f"encoder training diverged at epoch {epoch}")
        val_loss = float(np.mean([
            _reconstruction_loss(model, g, adjs[id(g)]).item() for g in val_graphs]))
        log.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_state = model.snapshot()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break
    model.load_state(best_state)
    return model, {"epochs_run": len(log), "best_epoch": best_epoch, "history": log}


def embed(model: EncoderModel, graph: WindowGraph) -> GraphEmbedding:
    """Pooled 1x32 embedding; the decoder is not executed."""
    node_emb, _ = model.forward(graph)
    pooled = nn.global_mean_pool(node_emb)
    return GraphEmbedding(vector=pooled.data.reshape(EMBED_DIM).copy(),
                          window_index=graph.window_index, label=graph.label)


def write_embeddings_csv(embeddings, path) -> None:
    """Embedding export: one row per window (window_index, label, 32 values)."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_index", "label"] + [f"e{i}" for i in range(EMBED_DIM)])
        for e in embeddings:
            w.writerow([e.window_index, e.label] + [repr(float(v)) for v in e.vector])


def read_embeddings_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        out = []
        for row in reader:
            out.append(GraphEmbedding(
                vector=np.array([float(v) for v in row[2:]], dtype=np.float64),
                window_index=int(row[0]), label=int(row[1])))
    return out
