# Rerank synthetic n-best lists with the neural feature and tune its weight by MERT.

import numpy as np

from nmtrerank import metrics, mert, rerank, toy

from _toy_model import toy_scorer

model = toy_scorer()
rng = np.random.default_rng(11)

# the reference hides at a random rank in the top 10; "base" prefers rank 1
dev_src, dev_ref, dev_lists = toy.reranking_set(100, rng, size=10)
test_src, test_ref, test_lists = toy.reranking_set(200, rng, size=10)
print("one n-best entry:", dev_lists[0][0])

dev = rerank.augment(dev_lists, [model], None, dev_src)
test = rerank.augment(test_lists, [model], None, test_src)
print("augmented features:", sorted(test[0][0].features))

init = {"base": 1.0, "nmt_loglik": 0.0}
steps = []
weights = mert.mert(dev, dev_ref, init, mert.MertConfig(seed=42), tune=["nmt_loglik"], history=steps)
print("tuned weights:", dict(weights))
print(mert.render_mert_log(steps[:5]), end="")

baseline = [h.tokens for h in rerank.baseline_one_best(test)]
reranked = [h.tokens for h in rerank.rerank(test, weights)]
print(f"test BLEU: baseline {100 * metrics.bleu(baseline, test_ref):.1f}"
      f" -> reranked {100 * metrics.bleu(reranked, test_ref):.1f}")
print(f"test RIBES: baseline {metrics.corpus_ribes(baseline, test_ref):.3f}"
      f" -> reranked {metrics.corpus_ribes(reranked, test_ref):.3f}")
print("bootstrap (p, significant):", metrics.bootstrap_test(reranked, baseline, test_ref, "bleu", 1000, 42))
