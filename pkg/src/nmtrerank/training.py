"""Per-sentence SGD with the halve-on-dev-decrease learning-rate schedule."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scorer import NeuralScorer, _forward, loss_and_gradient

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    initial_learning_rate: float = 0.1
    max_epochs: int = 10
    seed: int = 42
    clip_norm: float | None = 5.0

    def __post_init__(self):
        if not self.initial_learning_rate > 0:
            raise ValueError("initial_learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive or None")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_ll: float   # mean per-token log-likelihood seen during the epoch's updates
    dev_ll: float     # mean per-token log-likelihood on the dev set after the epoch
    lr: float         # learning rate carried into the next epoch

    def render(self) -> str:
        return f"{self.epoch}\t{self.train_ll!r}\t{self.dev_ll!r}\t{self.lr!r}"


EPOCH_LOG_HEADER = "epoch\ttrain_ll\tdev_ll\tlr"


def next_learning_rate(lr: float, previous_dev: float | None, dev: float) -> float:
    """Halve ``lr`` when dev likelihood went down since the previous epoch."""
    if previous_dev is not None and dev < previous_dev:
        return lr / 2.0
    return lr


def learning_rate_schedule(dev_lls: Sequence[float], initial: float = 0.1) -> list[float]:
    """Learning rate in force after each epoch, given the dev likelihood sequence."""
    rates, lr, prev = [], initial, None
    for dev in dev_lls:
        lr = next_learning_rate(lr, prev, dev)
        rates.append(lr)
        prev = dev
    return rates


def mean_token_loglik(scorer: NeuralScorer, pairs) -> float:
    total, tokens = 0.0, 0
    for src, trg in pairs:
        fw = _forward(scorer, src, [trg])
        total += float(fw.token_logp.sum())
        tokens += len(trg) + 1
    return total / tokens


def train(scorer: NeuralScorer, train_pairs, dev_pairs, config: TrainConfig = TrainConfig(),
          on_epoch=None) -> tuple[NeuralScorer, list[EpochRecord]]:
    """SGD on one (source, target) pair at a time, in a seeded shuffle each epoch.

    Gradients whose global L2 norm exceeds ``config.clip_norm`` are rescaled to it.

    Returns the parameters of the epoch with the best dev likelihood and the
    per-epoch log.  ``on_epoch`` is called with each :class:`EpochRecord`.
    """
    if not train_pairs or not dev_pairs:
        raise ValueError("training and dev sets must be non-empty")
    rng = np.random.default_rng(config.seed)
    model = scorer.copy()
    params = model.params
    lr = config.initial_learning_rate
    prev_dev, best_dev, best = None, -math.inf, None
    history = []
    for epoch in range(1, config.max_epochs + 1):
        total, tokens = 0.0, 0
        for k in rng.permutation(len(train_pairs)):
            src, trg = train_pairs[k]
            loss, grads = loss_and_gradient(model, src, trg)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, example {k}")
            step = lr
            if config.clip_norm is not None:
                norm = math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))
                if norm > config.clip_norm:
                    step = lr * config.clip_norm / norm
            for name, g in grads.items():
                params[name] -= step * g
            total -= loss
            tokens += len(trg) + 1
        dev = mean_token_loglik(model, dev_pairs)
        if not math.isfinite(dev):
            raise TrainingError(f"non-finite dev likelihood at epoch {epoch}")
        if dev > best_dev:
            best_dev, best = dev, model.copy()
        lr = next_learning_rate(lr, prev_dev, dev)
        prev_dev = dev
        rec = EpochRecord(epoch, total / tokens, dev, lr)
        history.append(rec)
        log.info("epoch %d train_ll %.4f dev_ll %.4f lr %g", epoch, rec.train_ll, dev, lr)
        if on_epoch is not None:
            on_epoch(rec)
    return best, history
