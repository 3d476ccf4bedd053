import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmtrerank import metrics, rerank as R, scorer as S, toy
from nmtrerank.corpus import Hypothesis, NBestList, Sentence, Vocabulary

import oracle
from test_scorer import hand_set_scorer


def H(text, **features):
    return Hypothesis(Sentence(text.split()), features, sum(features.values()))


def toy_set(n=6, size=10, seed=0):
    return toy.reranking_set(n, np.random.default_rng(seed), size=size)


# --- augment -------------------------------------------------------------------

def test_augment_adds_exactly_one_feature():
    vocab = Vocabulary(["a", "b"])
    sc = hand_set_scorer(vocab)
    lists = [NBestList(0, (Hypothesis(Sentence(["a"]), {}, 0.0), Hypothesis(Sentence(["b", "a"]), {}, 0.0)))]
    out = R.augment(lists, [sc], None, [Sentence(["b", "b"])])
    for hyp in out[0]:
        assert list(hyp.features) == [R.NMT_FEATURE]


def test_augment_matches_forward_oracle():
    vocab = Vocabulary(["a", "b"])
    sc = hand_set_scorer(vocab)
    src = Sentence(["a", "b", "b"])
    hyps = (H("a", lm=-1.0), H("b a a", lm=-2.0), H("", lm=-3.0))
    out = R.augment([NBestList(0, hyps)], [sc], [1.0], [src])
    for hyp in out[0]:
        want, _, _ = oracle.forward(sc.params, vocab.encode(src), vocab.encode(hyp.tokens))
        assert hyp.features[R.NMT_FEATURE] == pytest.approx(want, abs=1e-8)
        assert hyp.features["lm"] < 0


def test_augment_twice_rejected():
    vocab = Vocabulary(["a", "b"])
    sc = hand_set_scorer(vocab)
    lists = R.augment([NBestList(0, (H("a", lm=-1.0),))], [sc], None, [Sentence(["a"])])
    with pytest.raises(ValueError, match="feature already present"):
        R.augment(lists, [sc], None, [Sentence(["a"])])


def test_augment_thread_count_irrelevant(small_scorer):
    rng = np.random.default_rng(1)
    srcs, _, lists = toy.reranking_set(5, rng, size=4, tokens=[f"w{i}" for i in range(17)])
    one = R.augment(lists, [small_scorer], None, srcs, threads=1)
    four = R.augment(lists, [small_scorer], None, srcs, threads=4)
    assert one == four


def test_id_gaps_listed():
    lists = [NBestList(0, (H("a"),)), NBestList(2, (H("b"),))]
    with pytest.raises(ValueError, match="missing ids: 1"):
        R.check_ids(lists, 3)
    with pytest.raises(ValueError, match="unexpected ids: 2"):
        R.check_ids(lists, 2)


# --- select ------------------------------------------------------------------

def test_select_brute_force_example():
    nb = NBestList(0, (H("x", lm=-2.0), H("y", lm=-1.0), H("z", lm=-3.0)))
    assert R.select(nb, {"lm": 1.0}).tokens == Sentence(["y"])
    assert R.select_index(nb, {"lm": 1.0}) == 1


def test_select_n1_is_baseline():
    _, _, lists = toy_set()
    for nb in lists:
        assert R.select(nb, {"base": -3.0, "other": 2.0}, n=1) is nb[0]


def test_zero_neural_weight_reproduces_baseline(small_scorer):
    _, _, lists = toy_set()
    aug = [NBestList(nb.sentence_id, tuple(h.with_feature(R.NMT_FEATURE, -float(k)) for k, h in enumerate(nb)))
           for nb in lists]
    assert R.rerank(aug, {"base": 1.0, R.NMT_FEATURE: 0.0}) == R.baseline_one_best(aug)


def test_ties_go_to_smaller_rank():
    nb = NBestList(0, (H("x", lm=-1.0), H("y", lm=-1.0)))
    assert R.select_index(nb, {"lm": 1.0}) == 0
    assert R.select_index(nb, {}) == 0


def test_missing_feature_scores_zero():
    nb = NBestList(0, (H("x", lm=-1.0), Hypothesis(Sentence(["y"]), {}, 0.0)))
    assert R.select_index(nb, {"lm": 1.0}) == 1


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=1, max_size=8),
       st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 100))
def test_selection_scale_invariant(values, w1, w2, c):
    nb = NBestList(0, tuple(Hypothesis(Sentence([f"h{i}"]), {"f": a, "g": b}, 0.0)
                            for i, (a, b) in enumerate(values)))
    w = {"f": w1, "g": w2}
    scores = R.model_scores(nb, w)
    scaled = R.model_scores(nb, {k: c * v for k, v in w.items()})
    # argmax moves only if rounding creates or breaks a near-exact tie
    top = scores.max()
    near_tie = np.sum(np.abs(scores - top) <= 1e-9 * max(1.0, abs(top))) > 1
    if not near_tie:
        assert int(np.argmax(scaled)) == int(np.argmax(scores))


def test_select_rejects_nonpositive_n():
    with pytest.raises(ValueError):
        R.select_index(NBestList(0, (H("a"),)), {}, 0)


# --- sweep -------------------------------------------------------------------

def test_sweep_size1_is_baseline_bleu():
    _, refs, lists = toy_set()
    [pt] = R.sweep(lists, refs, {"base": -1.0}, [1])
    assert pt.bleu == R.corpus_bleu_of(R.baseline_one_best(lists), refs)


def test_sweep_matches_brute_force():
    _, refs, lists = toy_set(8, size=8, seed=3)
    weights = {"base": -1.0}
    points = R.sweep(lists, refs, weights, [1, 2, 4])
    for pt in points:
        chosen = []
        for nb in lists:
            scores = [sum(weights.get(k, 0.0) * v for k, v in h.features.items()) for h in nb.hypotheses[:pt.n]]
            chosen.append(nb[scores.index(max(scores))])
        assert pt.bleu == metrics.bleu([h.tokens for h in chosen], refs)
        assert pt.model_score == pytest.approx(np.mean([max(
            sum(weights.get(k, 0.0) * v for k, v in h.features.items()) for h in nb.hypotheses[:pt.n])
            for nb in lists]), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(-2, 2))
def test_sweep_model_score_monotone(seed, wb, wx):
    rng = np.random.default_rng(seed)
    _, refs, lists = toy.reranking_set(4, rng, size=12)
    lists = [NBestList(nb.sentence_id, tuple(h.with_feature("x", float(rng.normal())) for h in nb)) for nb in lists]
    points = R.sweep(lists, refs, {"base": wb, "x": wx}, range(1, 13))
    scores = [p.model_score for p in points]
    assert all(a <= b for a, b in zip(scores, scores[1:]))


def test_sweep_validation():
    _, refs, lists = toy_set(2)
    with pytest.raises(ValueError):
        R.sweep(lists, refs, {}, [2, 1])
    with pytest.raises(ValueError):
        R.sweep(lists, refs, {}, [0])
    with pytest.raises(ValueError):
        R.sweep(lists, refs[:1], {}, [1])


def test_render_sweep_format():
    text = R.render_sweep([R.SweepPoint(1, -0.5, 0.25), R.SweepPoint(2, -0.25, 0.3)])
    assert text == "n\tmodel_score\tbleu\n1\t-0.5\t0.25\n2\t-0.25\t0.3\n"


def test_oracle_injection_beats_baseline():
    # the reference is the only hypothesis with a positive "oracle" feature
    _, refs, lists = toy_set(20, seed=4)
    marked = [NBestList(nb.sentence_id, tuple(h.with_feature("oracle", float(h.tokens == refs[i])) for h in nb))
              for i, nb in enumerate(lists)]
    reranked = R.corpus_bleu_of(R.rerank(marked, {"oracle": 1.0, "base": 0.01}), refs)
    assert reranked == 1.0 > R.corpus_bleu_of(R.baseline_one_best(marked), refs)
