"""Out-of-sample scoring: log likelihood, EBF, ROC/AUC, relative MSE.

log L and log PPL are per-observation averages of the (optionally class-
weighted) Bernoulli log likelihood over the training and test periods. The
empirical Bayes factor compares an alternative model's test-period average
against the benchmark's:

    EBF = exp(log_ppl_alt - log_ppl_benchmark)

i.e. the geometric-mean predictive-likelihood ratio. EBFs at or above
sqrt(10) count as substantial evidence under Jeffreys' criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SingleClass, ZeroBenchmark
from .logit import PROB_CEIL, PROB_FLOOR

JEFFREYS_THRESHOLD = math.sqrt(10.0)


@dataclass(frozen=True)
class EvalReport:
    """Per-model, per-horizon forecast metrics."""

    horizon_months: int
    kind: str
    log_l_train: float
    log_ppl_test: float
    ebf: float
    auc_train: float
    auc_test: float
    rm: float
    avg_weight: float


def avg_log_likelihood(
    targets: np.ndarray,
    probabilities: np.ndarray,
    weights: np.ndarray | None = None,
) -> float:
    """Mean over observations of w_i [y_i ln p_i + (1-y_i) ln(1-p_i)].

    Weights default to one; for class-weighted runs pass per-row weights
    built from the TRAINING recession ratio, even when scoring test rows.
    """
    y = np.asarray(targets, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    if y.shape != p.shape:
        raise LengthMismatch(f"targets {y.shape} vs probabilities {p.shape}")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != y.shape:
        raise LengthMismatch(f"targets {y.shape} vs weights {w.shape}")
    p = np.clip(p, PROB_FLOOR, PROB_CEIL)
    ll = w * (y * np.log(p) + (1.0 - y) * np.log1p(-p))
    return float(ll.mean())


def ebf(log_ppl_alt: float, log_ppl_benchmark: float) -> float:
    """exp of the difference of per-observation average log PPLs."""
    return float(np.exp(log_ppl_alt - log_ppl_benchmark))


def model_avg_weight(ebf_value: float) -> float:
    """Posterior weight EBF/(1+EBF) on the alternative under equal priors."""
    if ebf_value <= 0.0:
        raise ValueError("EBF must be positive")
    return float(ebf_value / (1.0 + ebf_value))


def exceeds_jeffreys(ebf_value: float) -> bool:
    """True when the EBF clears sqrt(10), Jeffreys' substantial-evidence bar."""
    return ebf_value >= JEFFREYS_THRESHOLD


def _check_two_classes(y: np.ndarray) -> tuple[int, int]:
    n_pos = int(np.sum(y == 1.0))
    n_neg = int(np.sum(y == 0.0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC statistics need both classes present")
    return n_pos, n_neg


def roc_curve(targets: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """(false positive rate, true positive rate) points, one per threshold.

    Thresholds are the distinct score values in decreasing order (a point
    classifies score >= threshold as positive); tied scores share a single
    threshold. The endpoints (0,0) and (1,1) are always included. Returns
    an array of shape (m, 2) ordered along the curve.
    """
    y = np.asarray(targets, dtype=float)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise LengthMismatch(f"targets {y.shape} vs scores {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos, n_neg = _check_two_classes(y)

    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(1.0 - y_sorted)
    # last index of each tie group marks the threshold at that score
    last_of_group = np.flatnonzero(np.diff(s_sorted) != 0.0)
    idx = np.concatenate([last_of_group, [len(s_sorted) - 1]])
    points = [(0.0, 0.0)]
    for i in idx:
        points.append((fp[i] / n_neg, tp[i] / n_pos))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return np.array(points)


def auc(targets: np.ndarray, scores: np.ndarray) -> float:
    """Mann-Whitney AUC: (#{pos>neg} + 0.5 #{ties}) / (n_pos * n_neg).

    Computed from average ranks, so ties get half credit; this equals the
    trapezoidal area under ``roc_curve``.
    """
    y = np.asarray(targets, dtype=float)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise LengthMismatch(f"targets {y.shape} vs scores {s.shape}")
    n_pos, n_neg = _check_two_classes(y)

    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[y == 1.0]))
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def trapezoid_auc(points: np.ndarray) -> float:
    """Trapezoidal area under an ordered ROC curve (cross-check for auc)."""
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def relative_mse(
    targets: np.ndarray,
    probs_alt: np.ndarray,
    probs_benchmark: np.ndarray,
) -> float:
    """MSE(alternative) / MSE(benchmark), both against the binary targets."""
    y = np.asarray(targets, dtype=float)
    a = np.asarray(probs_alt, dtype=float)
    b = np.asarray(probs_benchmark, dtype=float)
    if y.shape != a.shape or y.shape != b.shape:
        raise LengthMismatch("targets and forecast vectors must share a length")
    mse_bench = float(np.mean((y - b) ** 2))
    if mse_bench == 0.0:
        raise ZeroBenchmark("benchmark forecast has zero mean squared error")
    return float(np.mean((y - a) ** 2)) / mse_bench
