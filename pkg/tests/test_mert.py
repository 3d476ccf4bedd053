import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmtrerank import metrics
from nmtrerank.corpus import Hypothesis, NBestList, Sentence
from nmtrerank.mert import MertConfig, MertStep, mert, render_mert_log, upper_envelope

GRID = np.round(np.arange(-500, 501) * 0.01, 10)


def nbest(i, rows):
    """rows: (text, {feature: value}) pairs in baseline rank order."""
    return NBestList(i, tuple(Hypothesis(Sentence(t.split()), f, 0.0) for t, f in rows))


def tuning_bleu(lists, refs, weights):
    # plain-Python selection, independent of the package's scoring code
    chosen = []
    for nb in lists:
        scores = [sum(w * h.features.get(k, 0.0) for k, w in weights.items()) for h in nb]
        chosen.append(nb[scores.index(max(scores))].tokens)
    return metrics.bleu(chosen, refs)


def grid_best(lists, refs, name):
    return max(tuning_bleu(lists, refs, {name: float(w)}) for w in GRID)


# --- upper envelope ----------------------------------------------------------

def test_envelope_two_lines():
    starts, winners = upper_envelope(np.array([0.0, 1.0]), np.array([1.0, -1.0]))
    assert starts.tolist() == [-np.inf, 0.5] and winners.tolist() == [1, 0]


def test_envelope_drops_dominated_and_duplicate_lines():
    a = np.array([0.0, -5.0, 0.0, 0.0])
    b = np.array([1.0, 0.0, -1.0, 1.0])
    starts, winners = upper_envelope(a, b)
    assert winners.tolist() == [2, 0] and starts.tolist() == [-np.inf, 0.0]


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-3, 3)), min_size=1, max_size=6))
def test_envelope_matches_pointwise_max(lines):
    a = np.array([float(x) for x, _ in lines])
    b = np.array([float(y) for _, y in lines])
    starts, winners = upper_envelope(a, b)
    bounds = list(starts[1:])
    for g in np.linspace(-20, 20, 161):
        seg = int(np.searchsorted(bounds, g, side="right"))
        vals = a + g * b
        assert vals[winners[seg]] == pytest.approx(vals.max(), abs=1e-9)


# --- toy examples --------------------------------------------------------------

def test_sign_regime_example():
    # hypothesis A (the reference) has f = +1, B has f = -1 in both sentences
    refs = [Sentence("a b c d".split()), Sentence("e f g h".split())]
    lists = [nbest(0, [("x y z w", {"f": -1.0}), ("a b c d", {"f": 1.0})]),
             nbest(1, [("p q r s", {"f": -1.0}), ("e f g h", {"f": 1.0})])]
    w = mert(lists, refs, {"f": -1.0}, MertConfig(restarts=0))
    assert w["f"] > 0
    assert tuning_bleu(lists, refs, w) == 1.0


def test_already_optimal_is_kept():
    refs = [Sentence("a b c d".split())]
    lists = [nbest(0, [("a b c d", {"f": 1.0}), ("a b c x", {"f": 0.0})])]
    w = mert(lists, refs, {"f": 2.0}, MertConfig(restarts=2))
    assert w["f"] > 0 and tuning_bleu(lists, refs, w) == 1.0


def test_unknown_tuned_feature_rejected():
    lists = [nbest(0, [("a", {"f": 1.0})])]
    with pytest.raises(ValueError, match="unknown feature"):
        mert(lists, [Sentence(["a"])], {}, tune=["g"])


def test_tune_only_leaves_other_weights():
    refs = [Sentence("a b c d".split()), Sentence("e f g h".split())]
    lists = [nbest(0, [("x y z w", {"f": -1.0, "g": 0.3}), ("a b c d", {"f": 1.0, "g": 0.1})]),
             nbest(1, [("p q r s", {"f": -1.0, "g": 0.2}), ("e f g h", {"f": 1.0, "g": 0.0})])]
    w = mert(lists, refs, {"f": 0.0, "g": 1.0}, MertConfig(restarts=3), tune=["f"])
    assert w["g"] == 1.0 and w["f"] > 0


# --- grid oracle and non-worsening ---------------------------------------------

words = st.sampled_from(list("abcde"))
sentence = st.lists(words, min_size=1, max_size=6).map(" ".join)


@st.composite
def single_feature_instance(draw):
    n = draw(st.integers(1, 5))
    lists, refs = [], []
    for i in range(n):
        refs.append(Sentence(draw(sentence).split()))
        k = draw(st.integers(1, 4))
        texts = draw(st.lists(sentence, min_size=k, max_size=k, unique=True))
        vals = draw(st.lists(st.integers(-6, 6).map(lambda v: v / 2), min_size=k, max_size=k))
        lists.append(nbest(i, [(t, {"f": v}) for t, v in zip(texts, vals)]))
    init = draw(st.integers(-20, 20).map(lambda v: v / 4))
    return lists, refs, init


@settings(max_examples=60, deadline=None)
@given(single_feature_instance())
def test_envelope_mert_not_beaten_by_grid(case):
    lists, refs, init = case
    w = mert(lists, refs, {"f": init}, MertConfig(restarts=0))
    got = tuning_bleu(lists, refs, w)
    assert got >= grid_best(lists, refs, "f") - 1e-9
    assert got >= tuning_bleu(lists, refs, {"f": init})


@st.composite
def multi_feature_instance(draw):
    n = draw(st.integers(1, 5))
    lists, refs = [], []
    for i in range(n):
        refs.append(Sentence(draw(sentence).split()))
        k = draw(st.integers(1, 5))
        texts = draw(st.lists(sentence, min_size=k, max_size=k, unique=True))
        feats = [{name: draw(st.floats(-3, 3)) for name in ("f", "g", "h")} for _ in range(k)]
        lists.append(nbest(i, list(zip(texts, feats))))
    init = {name: draw(st.floats(-2, 2)) for name in ("f", "g", "h")}
    return lists, refs, init


@settings(max_examples=40, deadline=None)
@given(multi_feature_instance())
def test_mert_never_worsens(case):
    lists, refs, init = case
    w = mert(lists, refs, init, MertConfig(restarts=3, iterations=5))
    assert tuning_bleu(lists, refs, w) >= tuning_bleu(lists, refs, init)


def test_mert_deterministic_with_log():
    rng = np.random.default_rng(0)
    refs = [Sentence(rng.choice(list("abcd"), 5)) for _ in range(6)]
    lists = [nbest(i, [(" ".join(rng.choice(list("abcd"), 5)),
                        {n: float(rng.normal()) for n in "xyz"}) for _ in range(6)]) for i in range(6)]
    h1, h2 = [], []
    a = mert(lists, refs, {}, MertConfig(restarts=4, iterations=4, seed=3), history=h1)
    b = mert(lists, refs, {}, MertConfig(restarts=4, iterations=4, seed=3), history=h2)
    assert a == b and h1 == h2
    text = render_mert_log(h1)
    assert text.splitlines()[0] == "iteration\tdirection\tgamma\tbleu"
    assert len(text.splitlines()) == len(h1) + 1
    assert all(isinstance(s, MertStep) for s in h1)
    bleus = [s.bleu for s in h1]
    assert bleus == sorted(bleus)
