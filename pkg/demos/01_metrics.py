# Evaluation metrics on tiny hand-made corpora.

import numpy as np

from nmtrerank import metrics
from nmtrerank.corpus import AnnotationRecord, PairwiseJudgment, Sentence

S = lambda text: Sentence(text.split())

# BLEU counts clipped n-gram matches up to order 4
stats = metrics.bleu_stats(S("the the the"), S("the cat"))
print("unigram matches / candidates:", stats.matches[0], "/", stats.candidates[0])

# no 4-gram in a 3-word hypothesis, so corpus BLEU is 0
print("BLEU('the cat sat' vs 'the cat sat down'):",
      metrics.corpus_bleu(metrics.bleu_stats(S("the cat sat"), S("the cat sat down"))))

# the smoothed sentence-level variant stays positive
print("BLEU+1('a b' vs 'a c'):", metrics.sentence_bleu_plus1(S("a b"), S("a c")))

# RIBES cares about word order
for hyp in ["a b c d", "b a c d", "d c b a"]:
    print(f"RIBES({hyp!r} vs 'a b c d'):", round(metrics.ribes(S(hyp), S("a b c d")), 4))

# bootstrap resampling: is system A better than B?
rng = np.random.default_rng(0)
refs = [Sentence(rng.choice(list("abcdefg"), 8)) for _ in range(40)]
noisy = lambda r, p: Sentence(w if rng.random() > p else "x" for w in r)
sys_a = [noisy(r, 0.2) for r in refs]
sys_b = [noisy(r, 0.4) for r in refs]
print("BLEU A:", round(metrics.bleu(sys_a, refs), 4), " BLEU B:", round(metrics.bleu(sys_b, refs), 4))
print("p-value, significant:", metrics.bootstrap_test(sys_a, sys_b, refs, "bleu", 1000, seed=42))
print("A against itself:", metrics.bootstrap_test(sys_a, sys_a, refs, "bleu", 1000, seed=42))

# pairwise human judgments
outcomes = ["win"] * 5 + ["loss"] * 2 + ["tie"] * 3
print("HUMAN score:", metrics.human_score([PairwiseJudgment(i, o) for i, o in enumerate(outcomes)]))

# error categories of improved / degraded sentences
counts = [("Reordering", 55, 9), ("Deletion", 20, 10), ("Insertion", 19, 2),
          ("Substitution", 15, 11), ("Conjugation", 8, 1)]
records = []
for cat, improved, degraded in counts:
    records += [AnnotationRecord(len(records) + i, "improved", cat) for i in range(improved)]
    records += [AnnotationRecord(len(records) + i, "degraded", cat) for i in range(degraded)]
print(metrics.render_tally(*metrics.error_tally(records)))
