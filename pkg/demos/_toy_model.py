"""Train (or reload) a small scorer on the sequence-reversal task."""

from pathlib import Path

import numpy as np

from nmtrerank import scorer as S, toy
from nmtrerank.corpus import build_vocabulary
from nmtrerank.training import TrainConfig, train

CACHE = Path(__file__).parent / "out" / "reversal.bin"


def toy_scorer(pairs=2000, dim=32, epochs=3, verbose=True):
    if CACHE.exists():
        return S.NeuralScorer.load(CACHE)
    rng = np.random.default_rng(7)
    train_pairs = toy.reversal_pairs(pairs, rng)
    dev_pairs = toy.reversal_pairs(200, rng)
    vocab = build_vocabulary([s for s, _ in train_pairs])
    model = S.init_scorer(S.ScorerConfig(vocab, vocab, dim, dim, seed=42))
    report = (lambda r: print("  " + r.render())) if verbose else None
    if verbose:
        print("  epoch\ttrain_ll\tdev_ll\tlr")
    best, _ = train(model, train_pairs, dev_pairs, TrainConfig(0.1, epochs, seed=42), on_epoch=report)
    CACHE.parent.mkdir(exist_ok=True)
    best.save(CACHE)
    return best
