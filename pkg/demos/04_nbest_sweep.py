# How much does reranking gain as the n-best list grows?

import sys

import numpy as np

from nmtrerank import mert, rerank, toy

from _toy_model import CACHE, toy_scorer

model = toy_scorer()
rng = np.random.default_rng(13)

src, refs, lists = toy.reranking_set(40, rng, size=256, reference_top=10)
lists = rerank.augment(lists, [model], None, src)

# tune on the 10-best prefix, then sweep the full lists
tuned = mert.mert([nb.truncate(10) for nb in lists], refs, {"base": 1.0, "nmt_loglik": 0.0},
                  tune=["nmt_loglik"])
sizes = [2 ** k for k in range(9)]
points = rerank.sweep(lists, refs, tuned, sizes)
print(rerank.render_sweep(points), end="")

if "--plot" in sys.argv:
    import matplotlib.pyplot as plt   # optional, not a package dependency

    fig, ax = plt.subplots(1, 2, figsize=(8, 3))
    ax[0].semilogx([p.n for p in points], [p.model_score for p in points], "o-", base=2)
    ax[0].set(xlabel="n", ylabel="mean model score")
    ax[1].semilogx([p.n for p in points], [100 * p.bleu for p in points], "o-", base=2)
    ax[1].set(xlabel="n", ylabel="BLEU")
    fig.tight_layout()
    out = CACHE.parent / "sweep.png"
    fig.savefig(out)
    print("wrote", out)
