"""Synthetic sequence-reversal translation task and n-best lists built around it.

The "translation" of a source sentence is its reversal, so the correct output
is always known.  N-best lists mimic a decoder's: the reference sits at a
random rank among corrupted variants, and a ``base`` feature decreases with
rank so the baseline 1-best is the rank-1 hypothesis.
"""

from __future__ import annotations

import numpy as np

from .corpus import Hypothesis, NBestList, Sentence

BASE_FEATURE = "base"


def toy_tokens(vocab_size: int = 20) -> list[str]:
    return [f"t{i:02d}" for i in range(vocab_size)]


def random_sentence(rng: np.random.Generator, tokens, min_len=3, max_len=10) -> Sentence:
    n = int(rng.integers(min_len, max_len + 1))
    return Sentence(tokens[i] for i in rng.integers(0, len(tokens), size=n))


def reversal_pairs(n: int, rng: np.random.Generator, tokens=None, min_len=3, max_len=10):
    tokens = tokens or toy_tokens()
    out = []
    for _ in range(n):
        src = random_sentence(rng, tokens, min_len, max_len)
        out.append((src, Sentence(reversed(src))))
    return out


def corrupt(sent: Sentence, rng: np.random.Generator, tokens, edits: int = 1) -> Sentence:
    """Apply ``edits`` random swaps, substitutions, deletions or insertions."""
    toks = list(sent)
    for _ in range(edits):
        op = rng.integers(4) if len(toks) > 1 else rng.choice([1, 3])
        if op == 0:
            i = int(rng.integers(len(toks) - 1))
            toks[i], toks[i + 1] = toks[i + 1], toks[i]
        elif op == 1:
            toks[int(rng.integers(len(toks)))] = tokens[int(rng.integers(len(tokens)))]
        elif op == 2:
            del toks[int(rng.integers(len(toks)))]
        else:
            toks.insert(int(rng.integers(len(toks) + 1)), tokens[int(rng.integers(len(tokens)))])
    return Sentence(toks)


def make_nbest(sentence_id: int, reference: Sentence, rng: np.random.Generator, tokens=None,
               size: int = 10, reference_top: int = 10) -> NBestList:
    """A unique n-best list with ``reference`` at a uniform rank among the first ``reference_top``.

    Distractors further down the list carry more edits.  The ``base`` feature
    (and the total score) strictly decreases with rank.
    """
    tokens = tokens or toy_tokens()
    ref_rank = int(rng.integers(min(size, reference_top)))
    seen = {reference}
    distractors = []
    tries = 0
    while len(distractors) < size - 1:
        edits = 1 + len(distractors) // 64 + int(rng.integers(2))
        cand = corrupt(reference, rng, tokens, edits)
        tries += 1
        if tries > 1000 * size:
            raise RuntimeError("could not build enough unique distractors")
        if len(cand) == 0 or cand in seen:
            continue
        seen.add(cand)
        distractors.append(cand)
    order = distractors[:ref_rank] + [reference] + distractors[ref_rank:]
    gaps = rng.uniform(0.05, 0.5, size=size)
    base = -np.cumsum(gaps)
    hyps = [Hypothesis(s, {BASE_FEATURE: float(b)}, float(b)) for s, b in zip(order, base)]
    return NBestList(sentence_id, tuple(hyps))


def reranking_set(n_sentences: int, rng: np.random.Generator, size: int = 10, reference_top: int = 10,
                  tokens=None, min_len=3, max_len=10):
    """``(sources, references, nbest_lists)`` for the reversal task."""
    tokens = tokens or toy_tokens()
    pairs = reversal_pairs(n_sentences, rng, tokens, min_len, max_len)
    sources = [s for s, _ in pairs]
    refs = [r for _, r in pairs]
    lists = [make_nbest(i, r, rng, tokens, size, reference_top) for i, r in enumerate(refs)]
    return sources, refs, lists
