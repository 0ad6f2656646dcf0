"""Encoder fine-tuning on labeled embedding pairs.

Pairs of fused vectors are labeled 1 (same ground-truth template) or 0
(different templates), sampled dissimilar-heavy at a configurable ratio.
The two affine layers are trained with mini-batch Adam to minimize the MSE
between the predicted cosine similarity of the encoded pair and the label.
The backward pass is hand-rolled; gradient_check validates it against a
central finite-difference oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .embedding import (
    EmbeddingProvider,
    EncoderWeights,
    embed_raw,
    fuse_word_count,
)
from .errors import ConfigError
from .records import LogRecord


@dataclass(frozen=True)
class TrainingPair:
    left: np.ndarray
    right: np.ndarray
    label: float


@dataclass
class TrainConfig:
    learning_rate: float = 0.0005
    batch_size: int = 2048
    epochs: int = 50
    pairs_per_dataset: int = 24000
    similar_to_dissimilar_ratio: Fraction = Fraction(1, 5)
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if min(self.batch_size, self.pairs_per_dataset) < 1 or self.epochs < 0:
            raise ConfigError("batch_size/epochs/pairs_per_dataset out of range")
        ratio = Fraction(self.similar_to_dissimilar_ratio)
        if ratio <= 0 or ratio > 1:
            raise ConfigError("ratio must be dissimilar-heavy (numerator <= denominator)")
        self.similar_to_dissimilar_ratio = ratio


def build_pair_dataset(labeled_logs: list[tuple[LogRecord, object]],
                       cfg: TrainConfig,
                       provider: EmbeddingProvider) -> list[TrainingPair]:
    """Sample similar/dissimilar fused-vector pairs at the configured ratio.

    Similar pairs are uniform over within-template log pairs, dissimilar
    pairs uniform over cross-template log pairs; both with replacement, so
    the requested count is always met. Seeded and reproducible.
    """
    groups: dict[object, list[int]] = {}
    for i, (_, template_id) in enumerate(labeled_logs):
        groups.setdefault(template_id, []).append(i)
    if len(groups) < 2:
        raise ConfigError("need at least 2 distinct templates to form dissimilar pairs")
    pairable = {t: members for t, members in groups.items() if len(members) >= 2}
    if not pairable:
        raise ConfigError("need at least one template with >= 2 logs for similar pairs")

    fused = [
        fuse_word_count(embed_raw(record, provider), record.word_count)
        for record, _ in labeled_logs
    ]
    templates = [template_id for _, template_id in labeled_logs]

    ratio = cfg.similar_to_dissimilar_ratio
    n_similar = round(cfg.pairs_per_dataset * ratio.numerator
                      / (ratio.numerator + ratio.denominator))
    n_dissimilar = cfg.pairs_per_dataset - n_similar

    rng = np.random.default_rng(cfg.rng_seed)
    pair_counts = np.array([len(m) * (len(m) - 1) // 2 for m in pairable.values()],
                           dtype=np.float64)
    group_list = list(pairable.values())
    weights = pair_counts / pair_counts.sum()

    pairs: list[TrainingPair] = []
    for _ in range(n_similar):
        members = group_list[rng.choice(len(group_list), p=weights)]
        i, j = rng.choice(len(members), size=2, replace=False)
        pairs.append(TrainingPair(fused[members[i]], fused[members[j]], 1.0))
    n = len(labeled_logs)
    for _ in range(n_dissimilar):
        while True:
            i, j = rng.integers(n), rng.integers(n)
            if templates[i] != templates[j]:
                break
        pairs.append(TrainingPair(fused[i], fused[j], 0.0))
    return pairs


def _stack(pairs: list[TrainingPair]):
    left = np.stack([p.left for p in pairs])
    right = np.stack([p.right for p in pairs])
    labels = np.array([p.label for p in pairs])
    return left, right, labels


def _forward(left, right, w: EncoderWeights):
    hl = left @ w.w1.T + w.b1
    hr = right @ w.w1.T + w.b1
    u = hl @ w.w2.T + w.b2
    v = hr @ w.w2.T + w.b2
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    sim = np.sum(u * v, axis=1) / (nu * nv)
    return hl, hr, u, v, nu, nv, sim


def predict_similarity(pair: TrainingPair, weights: EncoderWeights) -> float:
    """Cosine similarity of the two encoded vectors, in [-1, 1]."""
    _, _, _, _, nu, nv, sim = _forward(pair.left[None, :], pair.right[None, :], weights)
    if min(nu[0], nv[0]) < 1e-12:
        from .errors import DegenerateEmbeddingError
        raise DegenerateEmbeddingError("encoded pair member has near-zero norm")
    return float(np.clip(sim[0], -1.0, 1.0))


def mse_loss(pairs: list[TrainingPair], weights: EncoderWeights) -> float:
    """Mean squared error between predicted cosine similarity and labels."""
    if not pairs:
        raise ValueError("empty batch")
    left, right, labels = _stack(pairs)
    *_, sim = _forward(left, right, weights)
    return float(np.mean((labels - sim) ** 2))


def _gradients(left, right, labels, w: EncoderWeights):
    """Analytic gradients of the batch MSE w.r.t. all four parameters."""
    n = left.shape[0]
    hl, hr, u, v, nu, nv, sim = _forward(left, right, w)
    dsim = (-2.0 / n) * (labels - sim)  # dL/d(sim), per pair
    inv = 1.0 / (nu * nv)
    g_u = dsim[:, None] * (v * inv[:, None] - (sim / nu**2)[:, None] * u)
    g_v = dsim[:, None] * (u * inv[:, None] - (sim / nv**2)[:, None] * v)
    d_w2 = g_u.T @ hl + g_v.T @ hr
    d_b2 = (g_u + g_v).sum(axis=0)
    g_hl = g_u @ w.w2
    g_hr = g_v @ w.w2
    d_w1 = g_hl.T @ left + g_hr.T @ right
    d_b1 = (g_hl + g_hr).sum(axis=0)
    return d_w1, d_b1, d_w2, d_b2


@dataclass
class TrainResult:
    weights: EncoderWeights
    loss_trace: list[float] = field(default_factory=list)


def train(pairs: list[TrainingPair], cfg: TrainConfig,
          initial: EncoderWeights | None = None) -> TrainResult:
    """Shuffled mini-batch Adam (beta1=0.9, beta2=0.999, eps=1e-8).

    Starts from identity-padded weights unless given. The loss trace holds
    the full-dataset loss before training and after each epoch. Aborts on a
    non-finite loss.
    """
    if not pairs:
        raise ValueError("no training pairs")
    fused_dim = pairs[0].left.shape[0]
    weights = (initial.copy() if initial is not None
               else EncoderWeights.identity_init(fused_dim - 1))
    left, right, labels = _stack(pairs)

    params = [weights.w1, weights.b1, weights.w2, weights.b2]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    rng = np.random.default_rng(cfg.rng_seed)
    trace = [mse_loss(pairs, weights)]
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(pairs), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grads = _gradients(left[batch], right[batch], labels[batch], weights)
            step += 1
            for p, g, m_i, v_i in zip(params, grads, m, v):
                m_i += (1 - beta1) * (g - m_i)
                v_i += (1 - beta2) * (g * g - v_i)
                m_hat = m_i / (1 - beta1**step)
                v_hat = v_i / (1 - beta2**step)
                p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        epoch_loss = mse_loss(pairs, weights)
        if not np.isfinite(epoch_loss):
            raise ArithmeticError(
                f"non-finite loss after epoch {len(trace)}; lower the learning rate"
            )
        trace.append(epoch_loss)
    return TrainResult(weights=weights, loss_trace=trace)


def gradient_check(weights: EncoderWeights, small_batch: list[TrainingPair],
                   h: float = 1e-5, max_params: int = 200,
                   seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients
    over a sampled parameter subset."""
    if not 1 <= len(small_batch) <= 8:
        raise ValueError("small_batch must hold 1..8 pairs")
    if not 1e-6 <= h <= 1e-4:
        raise ValueError("h out of supported range")
    left, right, labels = _stack(small_batch)
    w = weights.copy()
    analytic = _gradients(left, right, labels, w)
    params = [w.w1, w.b1, w.w2, w.b2]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, g in zip(params, analytic):
        flat = p.reshape(-1)
        g_flat = g.reshape(-1)
        count = min(max_params, flat.size)
        picks = rng.choice(flat.size, size=count, replace=False)
        for k in picks:
            orig = flat[k]
            flat[k] = orig + h
            plus = mse_loss(small_batch, w)
            flat[k] = orig - h
            minus = mse_loss(small_batch, w)
            flat[k] = orig
            numeric = (plus - minus) / (2 * h)
            denom = max(abs(numeric) + abs(g_flat[k]), 1e-8)
            worst = max(worst, abs(numeric - g_flat[k]) / denom)
    return worst
