# Train the attentional scorer on a toy "translation" task: reverse the input.

import numpy as np

from nmtrerank import scorer as S, toy
from nmtrerank.corpus import Sentence

from _toy_model import CACHE, toy_scorer

if CACHE.exists():
    CACHE.unlink()
print("training (about half a minute)...")
model = toy_scorer()

src = Sentence("t03 t11 t07 t15 t02".split())
good = Sentence(reversed(src))
bad = Sentence("t03 t11 t07 t15 t02".split())   # copying is wrong here
print("log p(reversal):", round(S.score(model, src, good), 3))
print("log p(copy):    ", round(S.score(model, src, bad), 3))

# attention should point at the mirrored source position
tr = S.trace(model, src, good)
np.set_printoptions(precision=2, suppress=True)
print("attention (rows: target steps incl. </s>, cols: source words)")
print(tr.attention)
print("argmax source position per target word:", tr.attention[:-1].argmax(axis=1))

# a held-out ranking check against random edits of the right answer
rng = np.random.default_rng(1)
wins = 0
for src, ref in toy.reversal_pairs(100, rng):
    distractors = [toy.corrupt(ref, rng, toy.toy_tokens(), 1) for _ in range(9)]
    distractors = [d for d in distractors if d != ref and len(d)]
    wins += S.score_batch(model, src, [ref] + distractors).argmax() == 0
print(f"correct reversal ranked first for {wins}/100 sources")
