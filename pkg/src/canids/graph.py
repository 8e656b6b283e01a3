"""Order-preserving window graphs: path edges over frames, 9-dim node features."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frames import Window


class ByteMode(enum.Enum):
    BINARIZED = "binarized"
    NORMALIZED = "normalized"


@dataclass
class WindowGraph:
    """Directed path graph over a window's frames.

    node_features: (W, 9) array, column 0 = dlc_norm, columns 1..8 = byte features.
    edges: (i, i+1) pairs for i in [0, W-2].
    """

    node_features: np.ndarray
    edges: list
    label: int
    window_index: int

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]


def build_graph(window: Window, byte_mode: ByteMode = ByteMode.BINARIZED) -> WindowGraph:
    """Turn a window into a path graph whose node i carries frame i's features."""
    w = window.size
    if w < 2:
        raise ValueError(f"window must hold at least 2 frames to form a path, got {w}")
    feats = np.empty((w, 9), dtype=np.float64)
    for i, f in enumerate(window.frames):
        feats[i, 0] = f.dlc_norm
        if byte_mode is ByteMode.BINARIZED:
            feats[i, 1:] = f.byte_bin
        else:
            feats[i, 1:] = f.byte_norm
    edges = [(i, i + 1) for i in range(w - 1)]
    return WindowGraph(node_features=feats, edges=edges, label=window.label, window_index=window.index)


def normalized_adjacency(graph: WindowGraph) -> np.ndarray:
    """Symmetric degree-normalized adjacency with self-loops.

    A_hat = D^(-1/2) (A + A^T + I) D^(-1/2), where D is the row-degree diagonal
    of the symmetrized, self-looped adjacency. Self-loops guarantee degree >= 1.
    """
    w = graph.num_nodes
    a = np.zeros((w, w), dtype=np.float64)
    for (i, j) in graph.edges:
        a[i, j] = 1.0
    a_sym = np.minimum(a + a.T + np.eye(w), 1.0)
    deg = a_sym.sum(axis=1)
    d_inv_sqrt = 1.0 / np.sqrt(deg)
    return a_sym * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


def write_graph_dump(graphs, feature_path, edge_path) -> None:
    """Dump node features and an edge manifest for external inspection."""
    with Path(feature_path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_index", "node_index"] + [f"f{i}" for i in range(9)])
        for g in graphs:
            for i in range(g.num_nodes):
                w.writerow([g.window_index, i] + [repr(float(v)) for v in g.node_features[i]])
    with Path(edge_path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_index", "src", "dst"])
        for g in graphs:
            for (i, j) in g.edges:
                w.writerow([g.window_index, i, j])
