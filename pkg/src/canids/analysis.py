"""Shannon-entropy window-size analysis and binary classification metrics."""
from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class EntropyStats:
    window_size: int
    mean: float
    median: float
    min: float
    max: float
    std: float
    growth_rate: Optional[float]  # None for the first swept size


@dataclass
class MetricBlock:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: Optional[float]        # None when labels are single-class
    degenerate: bool = False    # a zero-denominator precision/recall was reported as 0


def entropy_bits(counts) -> float:
    """Shannon entropy -sum p log2 p of a count distribution."""
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * np.log2(p)
    return float(h)


def window_entropy(window) -> float:
    """Entropy of the arbitration-ID distribution within one window, in bits."""
    if window.size == 0:
        raise ValueError("window is empty")
    counts = Counter(f.arbitration_id for f in window.frames)
    return entropy_bits(counts.values())


def entropy_sweep(frames, sizes) -> list:
    """Per-window-size entropy statistics over non-overlapping windows.

    growth_rate is the relative change of the mean vs the previous swept size
    (0/0 taken as 0); the first size has none. Sizes exceeding the frame count
    are skipped with a warning.
    """
    if list(sizes) != sorted(set(sizes)):
        raise ValueError("sizes must be strictly increasing")
    if any(s < 1 for s in sizes):
        raise ValueError("sizes must be >= 1")
    out = []
    prev_mean = None
    ids = [f.arbitration_id for f in frames]
    for size in sizes:
        n_full = len(ids) // size
        if n_full == 0:
            log.warning("window size %d exceeds frame count %d; skipped", size, len(ids))
            continue
        ent = np.empty(n_full)
        for i in range(n_full):
            counts = Counter(ids[i * size : (i + 1) * size])
            ent[i] = entropy_bits(counts.values())
        mean = float(ent.mean())
        if prev_mean is None:
            growth = None
        elif prev_mean == 0.0:
            growth = 0.0 if mean == 0.0 else float("inf")
        else:
            growth = (mean - prev_mean) / prev_mean
        out.append(EntropyStats(
            window_size=size, mean=mean, median=float(np.median(ent)),
            min=float(ent.min()), max=float(ent.max()), std=float(ent.std()),
            growth_rate=growth))
        prev_mean = mean
    return out


def write_entropy_csv(stats, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_size", "mean", "median", "min", "max", "std", "growth_rate"])
        for s in stats:
            w.writerow([s.window_size, repr(s.mean), repr(s.median), repr(s.min),
                        repr(s.max), repr(s.std),
                        "" if s.growth_rate is None else repr(s.growth_rate)])


def auc_score(scores, labels) -> Optional[float]:
    """Mann-Whitney AUC: P(random positive outranks random negative), ties at 0.5.

    Computed from average ranks, which is exactly the pairwise formulation.
    Returns None when only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def compute_metrics(decisions, labels, scores) -> MetricBlock:
    """Confusion-matrix metrics plus Mann-Whitney AUC from the raw scores.

    Zero-denominator precision/recall are reported as 0 with the degenerate
    flag set; single-class labels leave AUC as None.
    """
    decisions = np.asarray(decisions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if not (len(decisions) == len(labels) == len(scores)) or len(labels) == 0:
        raise ValueError("decisions, labels, scores must have equal nonzero length")
    tp = int(np.sum((decisions == 1) & (labels == 1)))
    fp = int(np.sum((decisions == 1) & (labels == 0)))
    tn = int(np.sum((decisions == 0) & (labels == 0)))
    fn = int(np.sum((decisions == 0) & (labels == 1)))
    degenerate = False
    accuracy = (tp + tn) / len(labels)
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, degenerate = 0.0, True
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, degenerate = 0.0, True
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
    return MetricBlock(tp=tp, fp=fp, tn=tn, fn=fn, accuracy=accuracy,
                       precision=precision, recall=recall, f1=f1,
                       auc=auc_score(scores, labels), degenerate=degenerate)
