"""Neural feature augmentation, log-linear hypothesis selection and the n-best size sweep."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import metrics
from .corpus import Hypothesis, NBestList, Sentence, render_float
from .scorer import NeuralScorer, ensemble_score_batch

NMT_FEATURE = "nmt_loglik"


def check_ids(lists: Sequence[NBestList], n_sources: int | None = None) -> None:
    """Require sentence ids 0..N-1 in order (N = ``n_sources`` when given)."""
    n = len(lists) if n_sources is None else n_sources
    ids = [nb.sentence_id for nb in lists]
    if ids != list(range(n)):
        present = set(ids)
        missing = [i for i in range(max([n, *ids]) if ids else n) if i not in present]
        extra = [i for i in ids if i >= n]
        msg = f"n-best ids do not match {n} source sentences"
        if missing:
            msg += f"; missing ids: {' '.join(map(str, missing))}"
        if extra:
            msg += f"; unexpected ids: {' '.join(map(str, extra))}"
        raise ValueError(msg)


def augment(lists: Sequence[NBestList], scorers: Sequence[NeuralScorer], ensemble_weights,
            sources: Sequence[Sentence], threads: int = 1) -> list[NBestList]:
    """Add the ensemble log-likelihood of each hypothesis as the ``nmt_loglik`` feature."""
    if len(lists) != len(sources):
        raise ValueError(f"{len(lists)} n-best lists for {len(sources)} source sentences")
    check_ids(lists, len(sources))
    for nb in lists:
        for hyp in nb:
            if NMT_FEATURE in hyp.features:
                raise ValueError(f"feature already present: {NMT_FEATURE}")

    def one(i):
        nb = lists[i]
        scores = ensemble_score_batch(scorers, ensemble_weights, sources[i], [h.tokens for h in nb])
        if not np.all(np.isfinite(scores)):
            raise ValueError(f"non-finite neural score in sentence {nb.sentence_id}")
        # log-probabilities can round a hair above zero; the feature is a log-likelihood
        scores = np.minimum(scores, 0.0)
        return NBestList(nb.sentence_id,
                         tuple(h.with_feature(NMT_FEATURE, s) for h, s in zip(nb, scores)))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, range(len(lists))))
    return [one(i) for i in range(len(lists))]


def feature_matrix(nbest: NBestList, names: Sequence[str]) -> np.ndarray:
    """(K, F) feature values in ``names`` order; missing features are 0."""
    return np.array([[h.features.get(n, 0.0) for n in names] for h in nbest], dtype=np.float64).reshape(
        len(nbest), len(names))


def linear_scores(X: np.ndarray, names: Sequence[str], weights: Mapping[str, float]) -> np.ndarray:
    """Weighted feature sums, accumulated feature by feature in sorted-name order.

    The fixed accumulation order makes a score depend only on the non-zero
    weights, so equal weight vectors give bit-identical scores everywhere.
    """
    col = {n: j for j, n in enumerate(names)}
    out = np.zeros(X.shape[0])
    for name in sorted(weights):
        w = weights[name]
        if w != 0.0 and name in col:
            out += w * X[:, col[name]]
    return out


def model_scores(nbest: NBestList, weights: Mapping[str, float]) -> np.ndarray:
    names = nbest.feature_names()
    return linear_scores(feature_matrix(nbest, names), names, weights)


def select_index(nbest: NBestList, weights: Mapping[str, float], n: int | None = None) -> int:
    """Rank of the best hypothesis among the first ``n``; ties go to the smaller rank."""
    if n is not None and n < 1:
        raise ValueError("n must be >= 1")
    scores = model_scores(nbest, weights)
    k = len(scores) if n is None else min(n, len(scores))
    return int(np.argmax(scores[:k]))


def select(nbest: NBestList, weights: Mapping[str, float], n: int | None = None) -> Hypothesis:
    return nbest[select_index(nbest, weights, n)]


def rerank(lists: Sequence[NBestList], weights: Mapping[str, float], n: int | None = None) -> list[Hypothesis]:
    return [select(nb, weights, n) for nb in lists]


def baseline_one_best(lists: Sequence[NBestList]) -> list[Hypothesis]:
    return [nb[0] for nb in lists]


def corpus_bleu_of(hyps: Sequence[Hypothesis], references: Sequence[Sentence]) -> float:
    return metrics.bleu([h.tokens for h in hyps], references)


@dataclass(frozen=True)
class SweepPoint:
    n: int
    model_score: float
    bleu: float

    def render(self) -> str:
        return f"{self.n}\t{render_float(self.model_score)}\t{render_float(self.bleu)}"


SWEEP_HEADER = "n\tmodel_score\tbleu"


def sweep(lists: Sequence[NBestList], references: Sequence[Sentence], weights: Mapping[str, float],
          sizes: Sequence[int]) -> list[SweepPoint]:
    """Rerank with every list truncated to each size in ``sizes``."""
    sizes = list(sizes)
    if any(n < 1 for n in sizes):
        raise ValueError("sizes must be positive")
    if sizes != sorted(sizes):
        raise ValueError("sizes must be sorted ascending")
    if len(lists) != len(references):
        raise ValueError(f"{len(lists)} n-best lists for {len(references)} references")
    if not lists:
        raise ValueError("nothing to sweep")
    all_scores = [model_scores(nb, weights) for nb in lists]
    stats_cache: list[dict[int, np.ndarray]] = [{} for _ in lists]
    points = []
    for n in sizes:
        total_score = 0.0
        stats = np.zeros(metrics.N_STATS, dtype=np.int64)
        for s, (nb, scores) in enumerate(zip(lists, all_scores)):
            k = int(np.argmax(scores[:n]))
            total_score += scores[k]
            if k not in stats_cache[s]:
                stats_cache[s][k] = metrics.bleu_stats(nb[k].tokens, references[s]).as_array()
            stats += stats_cache[s][k]
        points.append(SweepPoint(n, total_score / len(lists), metrics.corpus_bleu(stats)))
    return points


def render_sweep(points: Sequence[SweepPoint]) -> str:
    return "\n".join([SWEEP_HEADER, *(p.render() for p in points)]) + "\n"


