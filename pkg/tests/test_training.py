import numpy as np
import pytest

from nmtrerank import scorer as S
from nmtrerank.corpus import Sentence, Vocabulary
from nmtrerank.training import (EpochRecord, TrainConfig, TrainingError, learning_rate_schedule,
                                mean_token_loglik, next_learning_rate, train)

from conftest import TOKENS, random_pairs


def tiny(vocab, dim=4, seed=0):
    return S.init_scorer(S.ScorerConfig(vocab, vocab, dim, dim, seed=seed))


def test_schedule_halves_on_dev_decrease():
    assert learning_rate_schedule([-5.0, -4.0, -4.5]) == [0.1, 0.1, 0.05]


def test_schedule_keeps_halving():
    assert learning_rate_schedule([-1.0, -2.0, -3.0, -2.5], 0.8) == [0.8, 0.4, 0.2, 0.2]


def test_equal_dev_keeps_rate():
    assert next_learning_rate(0.1, -3.0, -3.0) == 0.1
    assert next_learning_rate(0.1, None, -9.0) == 0.1


@pytest.mark.parametrize("kw", [dict(initial_learning_rate=0), dict(max_epochs=0), dict(clip_norm=-1.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        TrainConfig(**kw)


def test_overfits_single_pair():
    vocab = Vocabulary(["a", "b", "c"])
    pair = (Sentence("a b c".split()), Sentence("c b a".split()))
    best, _ = train(tiny(vocab, dim=8), [pair], [pair], TrainConfig(0.5, 200, seed=1))
    assert -S.score(best, *pair) < 0.1


def test_training_deterministic(vocab):
    rng = np.random.default_rng(2)
    pairs, dev = random_pairs(rng, 12), random_pairs(rng, 4)
    cfg = TrainConfig(0.1, 3, seed=7)
    a_model, a_log = train(tiny(vocab), pairs, dev, cfg)
    b_model, b_log = train(tiny(vocab), pairs, dev, cfg)
    assert [r.render() for r in a_log] == [r.render() for r in b_log]
    assert S.to_bytes(a_model) == S.to_bytes(b_model)


def test_returns_best_dev_epoch_and_log(vocab):
    rng = np.random.default_rng(3)
    pairs, dev = random_pairs(rng, 10), random_pairs(rng, 4)
    seen = []
    best, history = train(tiny(vocab), pairs, dev, TrainConfig(0.1, 4, seed=1), on_epoch=seen.append)
    assert seen == history and [r.epoch for r in history] == [1, 2, 3, 4]
    assert mean_token_loglik(best, dev) == max(r.dev_ll for r in history)
    assert [r.lr for r in history] == learning_rate_schedule([r.dev_ll for r in history], 0.1)


def test_input_scorer_untouched(vocab):
    sc = tiny(vocab)
    before = S.to_bytes(sc)
    train(sc, random_pairs(np.random.default_rng(0), 3), random_pairs(np.random.default_rng(1), 2),
          TrainConfig(0.1, 1))
    assert S.to_bytes(sc) == before


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_aborts(vocab):
    pairs = random_pairs(np.random.default_rng(4), 6)
    with pytest.raises(TrainingError, match="non-finite"):
        train(tiny(vocab), pairs, pairs, TrainConfig(1e308, 3, clip_norm=None))


def test_empty_sets_rejected(vocab):
    with pytest.raises(ValueError):
        train(tiny(vocab), [], random_pairs(np.random.default_rng(0), 1))


def test_epoch_record_render():
    assert EpochRecord(2, -1.5, -0.25, 0.05).render() == "2\t-1.5\t-0.25\t0.05"
