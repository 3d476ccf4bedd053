"""BLEU, BLEU+1, RIBES, paired bootstrap resampling, HUMAN score and error tallies.

Scores are returned on the [0, 1] scale (HUMAN on [-100, 100]).  Multiply by 100
for the usual percentage display.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import AnnotationRecord, PairwiseJudgment

MAX_ORDER = 4
RIBES_ALPHA = 0.25
RIBES_BETA = 0.10

#: layout of a BLEU statistics row: matches 1..4, candidates 1..4, hyp len, ref len
N_STATS = 2 * MAX_ORDER + 2


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class BleuStats:
    matches: tuple[int, ...]
    candidates: tuple[int, ...]
    hyp_len: int
    ref_len: int

    def __post_init__(self):
        if len(self.matches) != MAX_ORDER or len(self.candidates) != MAX_ORDER:
            raise ValueError(f"need {MAX_ORDER} orders")
        for m, c in zip(self.matches, self.candidates):
            if m < 0 or c < 0 or m > c:
                raise ValueError("require 0 <= matches <= candidates")
        if self.hyp_len < 0 or self.ref_len < 0:
            raise ValueError("lengths must be non-negative")

    def __add__(self, other: "BleuStats") -> "BleuStats":
        return BleuStats(
            tuple(a + b for a, b in zip(self.matches, other.matches)),
            tuple(a + b for a, b in zip(self.candidates, other.candidates)),
            self.hyp_len + other.hyp_len,
            self.ref_len + other.ref_len,
        )

    def __radd__(self, other):
        # lets sum() start from 0
        if other == 0:
            return self
        return NotImplemented

    @classmethod
    def zero(cls) -> "BleuStats":
        return cls((0,) * MAX_ORDER, (0,) * MAX_ORDER, 0, 0)

    def as_array(self) -> np.ndarray:
        return np.array([*self.matches, *self.candidates, self.hyp_len, self.ref_len], dtype=np.int64)

    @classmethod
    def from_array(cls, row) -> "BleuStats":
        row = [int(x) for x in row]
        return cls(tuple(row[:MAX_ORDER]), tuple(row[MAX_ORDER:2 * MAX_ORDER]), row[-2], row[-1])


def bleu_stats(hypothesis: Sequence[str], reference: Sequence[str]) -> BleuStats:
    """Clipped n-gram matches against a single reference."""
    matches, candidates = [], []
    for n in range(1, MAX_ORDER + 1):
        hyp_counts = ngrams(hypothesis, n)
        ref_counts = ngrams(reference, n)
        matches.append(sum(min(c, ref_counts[g]) for g, c in hyp_counts.items()))
        candidates.append(max(len(hypothesis) - n + 1, 0))
    return BleuStats(tuple(matches), tuple(candidates), len(hypothesis), len(reference))


def _as_row(stats) -> np.ndarray:
    if isinstance(stats, BleuStats):
        return stats.as_array()
    return np.asarray(stats)


def brevity_penalty(hyp_len: float, ref_len: float) -> float:
    if hyp_len <= 0:
        return 0.0
    return math.exp(min(0.0, 1.0 - ref_len / hyp_len))


def corpus_bleu(stats) -> float:
    """BLEU from summed statistics (a :class:`BleuStats` or a stats row)."""
    row = _as_row(stats)
    m, c = row[:MAX_ORDER], row[MAX_ORDER:2 * MAX_ORDER]
    hyp_len, ref_len = row[-2], row[-1]
    if hyp_len <= 0 or np.any(m <= 0):
        return 0.0
    log_prec = sum(math.log(mi / ci) for mi, ci in zip(m.tolist(), c.tolist())) / MAX_ORDER
    return math.exp(log_prec) * brevity_penalty(hyp_len, ref_len)


def corpus_bleu_rows(rows: np.ndarray) -> np.ndarray:
    """Vectorized :func:`corpus_bleu` over a (k, N_STATS) array of summed stats."""
    rows = np.asarray(rows, dtype=np.float64)
    m, c = rows[:, :MAX_ORDER], rows[:, MAX_ORDER:2 * MAX_ORDER]
    hyp_len, ref_len = rows[:, -2], rows[:, -1]
    ok = (hyp_len > 0) & np.all(m > 0, axis=1)
    out = np.zeros(len(rows))
    if ok.any():
        log_prec = np.log(m[ok] / c[ok]).mean(axis=1)
        log_bp = np.minimum(0.0, 1.0 - ref_len[ok] / hyp_len[ok])
        out[ok] = np.exp(log_prec + log_bp)
    return out


def stats_matrix(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]) -> np.ndarray:
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        return np.zeros((0, N_STATS), dtype=np.int64)
    return np.stack([bleu_stats(h, r).as_array() for h, r in zip(hypotheses, references)])


def bleu(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]) -> float:
    """Corpus BLEU of aligned hypothesis and reference sentences."""
    return corpus_bleu(stats_matrix(hypotheses, references).sum(axis=0))


def sentence_bleu_plus1(hypothesis: Sequence[str], reference: Sequence[str]) -> float:
    """Sentence BLEU with add-one smoothing on orders 2-4; unigram precision is unsmoothed."""
    st = bleu_stats(hypothesis, reference)
    if st.hyp_len == 0 or st.matches[0] == 0:
        return 0.0
    log_prec = math.log(st.matches[0] / st.candidates[0])
    for m, c in zip(st.matches[1:], st.candidates[1:]):
        log_prec += math.log((m + 1) / (c + 1))
    return math.exp(log_prec / MAX_ORDER) * brevity_penalty(st.hyp_len, st.ref_len)


# ---------------------------------------------------------------------------
# RIBES


def _count_sub(seq: Sequence[str], sub: Sequence[str]) -> int:
    k = len(sub)
    sub = tuple(sub)
    return sum(1 for i in range(len(seq) - k + 1) if tuple(seq[i:i + k]) == sub)


def _find_sub(seq: Sequence[str], sub: Sequence[str]) -> int:
    k = len(sub)
    sub = tuple(sub)
    for i in range(len(seq) - k + 1):
        if tuple(seq[i:i + k]) == sub:
            return i
    return -1


def ribes_alignment(hypothesis: Sequence[str], reference: Sequence[str]) -> list[int]:
    """Reference positions of aligned hypothesis words, in hypothesis order.

    A word occurring once in both sentences aligns directly.  Otherwise the
    smallest n-gram context (left-extending first, then right-extending) that
    is unique in both sentences decides the position; words with no such
    context stay unaligned.
    """
    hyp, ref = list(hypothesis), list(reference)
    ref_counts, hyp_counts = Counter(ref), Counter(hyp)
    out = []
    for i, w in enumerate(hyp):
        if w not in ref_counts:
            continue
        if ref_counts[w] == 1 and hyp_counts[w] == 1:
            out.append(ref.index(w))
            continue
        for window in range(1, max(i + 1, len(hyp) - i + 1)):
            if window <= i:
                gram = hyp[i - window:i + 1]
                if _count_sub(ref, gram) == 1 and _count_sub(hyp, gram) == 1:
                    out.append(_find_sub(ref, gram) + window)
                    break
            if i + window < len(hyp):
                gram = hyp[i:i + window + 1]
                if _count_sub(ref, gram) == 1 and _count_sub(hyp, gram) == 1:
                    out.append(_find_sub(ref, gram))
                    break
    return out


def normalized_kendall_tau(positions: Sequence[int]) -> float:
    """(tau + 1) / 2, i.e. the fraction of position pairs in ascending order."""
    n = len(positions)
    if n < 2:
        raise ValueError("need at least two positions")
    ascending = sum(1 for i in range(n) for j in range(i + 1, n) if positions[i] < positions[j])
    return ascending / (n * (n - 1) / 2)


def ribes(hypothesis: Sequence[str], reference: Sequence[str],
          alpha: float = RIBES_ALPHA, beta: float = RIBES_BETA) -> float:
    """Sentence RIBES: NKT * precision**alpha * BP**beta."""
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be non-negative")
    if not hypothesis:
        return 0.0
    aligned = ribes_alignment(hypothesis, reference)
    if len(aligned) < 2:
        return 0.0
    nkt = normalized_kendall_tau(aligned)
    precision = len(aligned) / len(hypothesis)
    bp = min(1.0, math.exp(1.0 - len(reference) / len(hypothesis)))
    return nkt * precision ** alpha * bp ** beta


def corpus_ribes(hypotheses, references, alpha: float = RIBES_ALPHA, beta: float = RIBES_BETA) -> float:
    """Mean sentence RIBES."""
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ValueError("empty corpus")
    return sum(ribes(h, r, alpha, beta) for h, r in zip(hypotheses, references)) / len(hypotheses)


# ---------------------------------------------------------------------------
# significance


@dataclass
class EvalReport:
    metric: str
    value: float
    per_sentence: list[float] | None = None
    p_value: float | None = None
    significant: bool | None = None


def _resample_indices(n: int, samples: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, n, size=(samples, n))


def bootstrap_test(hyp_a, hyp_b, refs, metric: str | Callable = "bleu", samples: int = 1000,
                   seed: int = 42, threshold: float = 0.05,
                   alpha: float = RIBES_ALPHA, beta: float = RIBES_BETA) -> tuple[float, bool]:
    """Paired bootstrap: how often does system A fail to beat system B?

    ``metric`` is ``"bleu"``, ``"ribes"`` or a callable ``f(hyps, refs) -> float``.
    Each of ``samples`` resamples draws sentence indices with replacement; the
    p-value is the fraction where metric(A) <= metric(B).  Ties count against A.
    """
    n = len(refs)
    if len(hyp_a) != n or len(hyp_b) != n:
        raise ValueError(f"misaligned corpora: {len(hyp_a)}, {len(hyp_b)}, {n} sentences")
    if n < 2:
        raise ValueError("bootstrap needs at least 2 sentences")
    if samples < 1:
        raise ValueError("samples must be positive")
    idx = _resample_indices(n, samples, seed)

    if metric == "bleu":
        sa, sb = stats_matrix(hyp_a, refs), stats_matrix(hyp_b, refs)
        score_a = corpus_bleu_rows(sa[idx].sum(axis=1))
        score_b = corpus_bleu_rows(sb[idx].sum(axis=1))
    elif metric == "ribes":
        ra = np.array([ribes(h, r, alpha, beta) for h, r in zip(hyp_a, refs)])
        rb = np.array([ribes(h, r, alpha, beta) for h, r in zip(hyp_b, refs)])
        score_a, score_b = ra[idx].mean(axis=1), rb[idx].mean(axis=1)
    elif callable(metric):
        score_a = np.array([metric([hyp_a[i] for i in row], [refs[i] for i in row]) for row in idx])
        score_b = np.array([metric([hyp_b[i] for i in row], [refs[i] for i in row]) for row in idx])
    else:
        raise ValueError(f"unknown metric {metric!r}")
    p = float(np.count_nonzero(score_a <= score_b)) / samples
    return p, p < threshold


# ---------------------------------------------------------------------------
# human evaluation arithmetic


def human_score(judgments: Iterable[PairwiseJudgment]) -> float:
    """100 * (wins - losses) / (wins + losses + ties)."""
    counts = Counter(j.outcome for j in judgments)
    total = counts["win"] + counts["loss"] + counts["tie"]
    if total == 0:
        raise ValueError("no judgments")
    return 100.0 * (counts["win"] - counts["loss"]) / total


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class TallyRow:
    category: str
    improved: int
    degraded: int

    @property
    def percent_improved(self) -> int | None:
        changed = self.improved + self.degraded
        if changed == 0:
            return None
        return round_half_up(100.0 * self.improved / changed)

    def render(self) -> str:
        pct = self.percent_improved
        return f"{self.category}\t{self.improved}\t{self.degraded}\t{'-' if pct is None else f'{pct}%'}"


def error_tally(annotations: Iterable[AnnotationRecord]) -> tuple[list[TallyRow], TallyRow]:
    """Improved/degraded counts per category (first-seen order) plus a total row.

    ``equal`` verdicts add no counts; a category seen only with them gets a row
    of zeros whose percentage is undefined.
    """
    improved: dict[str, int] = {}
    degraded: dict[str, int] = {}
    for rec in annotations:
        if rec.verdict == "equal" and not rec.category:
            continue
        improved.setdefault(rec.category, 0)
        degraded.setdefault(rec.category, 0)
        if rec.verdict == "improved":
            improved[rec.category] += 1
        elif rec.verdict == "degraded":
            degraded[rec.category] += 1
    rows = [TallyRow(cat, improved[cat], degraded[cat]) for cat in improved]
    total = TallyRow("Total", sum(r.improved for r in rows), sum(r.degraded for r in rows))
    return rows, total


def render_tally(rows: Sequence[TallyRow], total: TallyRow) -> str:
    lines = ["category\timproved\tdegraded\tpercent_improved"]
    lines += [r.render() for r in rows]
    lines.append(total.render())
    return "\n".join(lines) + "\n"
