"""Minimum error rate training: exact line search over the BLEU step function.

Along a direction ``d`` from weights ``w`` every hypothesis scores
``w.x + gamma * d.x``, a line in ``gamma``.  The upper envelope of a
sentence's lines splits the real line into intervals with a constant argmax.
Merging the breakpoints of all sentences and sweeping left to right while
swapping BLEU sufficient statistics gives corpus BLEU exactly on every
interval (and at every breakpoint, where tied hypotheses resolve to the
smallest baseline rank).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import metrics
from .corpus import NBestList, Sentence, WeightVector, render_float
from .rerank import feature_matrix, linear_scores

log = logging.getLogger(__name__)

# relative tolerance for treating breakpoints from different sentences as one point
_MERGE_RTOL = 1e-12
# relative tolerance for lines tied at a breakpoint
_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class MertConfig:
    restarts: int = 8
    iterations: int = 30
    seed: int = 42
    min_improvement: float = 1e-4


@dataclass(frozen=True)
class MertStep:
    iteration: int
    direction: str
    gamma: float
    bleu: float
    accepted: bool

    def render(self) -> str:
        return f"{self.iteration}\t{self.direction}\t{render_float(self.gamma)}\t{render_float(self.bleu)}"


MERT_LOG_HEADER = "iteration\tdirection\tgamma\tbleu"


def upper_envelope(intercepts: np.ndarray, slopes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Segments of max_k(intercepts[k] + gamma * slopes[k]).

    Returns ``(starts, winners)``: segment ``i`` covers ``[starts[i], starts[i+1])``
    with ``starts[0] = -inf``.  Identical lines resolve to the smallest index.
    """
    K = len(intercepts)
    # slope ascending, then intercept descending, then index ascending
    order = np.lexsort((np.arange(K), -intercepts, slopes))
    stack: list[int] = []
    starts: list[float] = []
    prev_slope = None
    for k in order:
        if prev_slope is not None and slopes[k] == prev_slope:
            continue   # dominated by the earlier line with the same slope
        prev_slope = slopes[k]
        x = -np.inf
        while stack:
            t = stack[-1]
            with np.errstate(over="ignore"):
                x = (intercepts[t] - intercepts[k]) / (slopes[k] - slopes[t])
            if x <= starts[-1]:
                stack.pop()
                starts.pop()
                x = -np.inf
            else:
                break
        stack.append(int(k))
        starts.append(x)
    return np.array(starts), np.array(stack, dtype=np.int64)


def _point_winner(intercepts, slopes, gamma) -> int:
    vals = intercepts + gamma * slopes
    top = vals.max()
    tied = np.flatnonzero(vals >= top - _TIE_RTOL * max(1.0, abs(top)))
    return int(tied.min())


class _Problem:
    """Feature matrices and BLEU statistics for the tuning set, built once."""

    def __init__(self, lists: Sequence[NBestList], references: Sequence[Sentence], names: Sequence[str]):
        self.names = list(names)
        self.X = [feature_matrix(nb, self.names) for nb in lists]
        self.S = [metrics.stats_matrix([h.tokens for h in nb], [ref] * len(nb))
                  for nb, ref in zip(lists, references)]

    def weight_array(self, weights: Mapping[str, float]) -> np.ndarray:
        return np.array([weights.get(n, 0.0) for n in self.names])

    def as_weights(self, w: np.ndarray) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, w)}

    def bleu(self, w: np.ndarray) -> float:
        """Corpus BLEU of the selection made by :func:`rerank.select` under ``w``."""
        weights = self.as_weights(w)
        total = np.zeros(metrics.N_STATS, dtype=np.int64)
        for X, S in zip(self.X, self.S):
            total += S[int(np.argmax(linear_scores(X, self.names, weights)))]
        return metrics.corpus_bleu(total)

    def line_search(self, w: np.ndarray, d: np.ndarray) -> tuple[float, float]:
        """Best ``(gamma, bleu)`` along ``w + gamma * d`` by envelope sweep."""
        events = []          # (gamma, sentence, left winner, point winner, right winner)
        stats = np.zeros(metrics.N_STATS, dtype=np.int64)
        for s, (X, S) in enumerate(zip(self.X, self.S)):
            a, b = X @ w, X @ d
            starts, winners = upper_envelope(a, b)
            stats += S[winners[0]]
            for i in range(1, len(starts)):
                g = starts[i]
                if not np.isfinite(g):
                    break   # overflowed crossing (subnormal slope gap): never reached
                events.append((g, s, winners[i - 1], _point_winner(a, b, g), winners[i]))
        if not events:
            return 0.0, metrics.corpus_bleu(stats)
        events.sort(key=lambda e: (e[0], e[1]))

        groups = []
        for ev in events:
            if groups and ev[0] - groups[-1][0][0] <= _MERGE_RTOL * max(1.0, abs(ev[0])):
                groups[-1].append(ev)
            else:
                groups.append([ev])

        cand_gamma, cand_stats, at_point = [], [], []
        first = groups[0][0][0]
        cand_gamma.append(first - 1.0)
        cand_stats.append(stats.copy())
        at_point.append(False)
        for gi, group in enumerate(groups):
            g = float(np.mean([ev[0] for ev in group]))
            point = stats.copy()
            for _, s, left, pt, right in group:
                S = self.S[s]
                point += S[pt] - S[left]
                stats += S[right] - S[left]
            cand_gamma.append(g)
            cand_stats.append(point)
            at_point.append(True)
            if gi + 1 < len(groups):
                nxt = groups[gi + 1][0][0]
                cand_gamma.append(0.5 * (group[-1][0] + nxt))
            else:
                cand_gamma.append(group[-1][0] + 1.0)
            cand_stats.append(stats.copy())
            at_point.append(False)

        scores = metrics.corpus_bleu_rows(np.array(cand_stats))
        gammas = np.array(cand_gamma)
        best = scores.max()
        # prefer an interval midpoint over a tie point, then stay closest to the current weights
        idx = np.flatnonzero(scores == best)
        interior = idx[~np.array(at_point)[idx]]
        if len(interior):
            idx = interior
        k = idx[np.argmin(np.abs(gammas[idx]))]
        gamma = float(gammas[k])
        # "boundary + 1" after a previous "boundary + 1" step cancels to rounding residue
        if abs(gamma) <= 1e-12 * max(1.0, abs(groups[0][0][0]), abs(groups[-1][-1][0])):
            gamma = 0.0
        return gamma, float(scores[k])


def _step(w, gamma, d):
    new = w + gamma * d
    # cancellation residue (e.g. landing exactly on the origin) snaps to zero
    new[np.abs(new) <= 1e-12 * (np.abs(w) + np.abs(gamma * d))] = 0.0
    return new


def mert(lists: Sequence[NBestList], references: Sequence[Sentence], init: Mapping[str, float],
         config: MertConfig = MertConfig(), tune: Sequence[str] | None = None,
         history: list | None = None) -> WeightVector:
    """Tune log-linear weights for corpus BLEU on ``lists``.

    ``tune`` restricts the search to the named features (default: every feature
    in the lists and in ``init``).  Each iteration line-searches the coordinate
    axes and then ``config.restarts`` random unit directions, applying
    improvements one at a time; a step is kept only if it raises tuning BLEU.
    ``history`` (if given) receives one :class:`MertStep` per direction tried.
    """
    if not lists:
        raise ValueError("no n-best lists to tune on")
    if len(lists) != len(references):
        raise ValueError(f"{len(lists)} n-best lists for {len(references)} references")
    names = sorted(set(init) | {n for nb in lists for n in nb.feature_names()})
    tuned = sorted(names) if tune is None else list(tune)
    for n in tuned:
        if n not in names:
            raise ValueError(f"cannot tune unknown feature {n!r}")
    problem = _Problem(lists, references, names)
    col = {n: j for j, n in enumerate(names)}
    rng = np.random.default_rng(config.seed)

    w = problem.weight_array(init)
    current = problem.bleu(w)
    log.info("mert: initial BLEU %.6f", current)
    for it in range(1, config.iterations + 1):
        start = current
        directions = []
        for n in tuned:
            d = np.zeros(len(names))
            d[col[n]] = 1.0
            directions.append((f"axis:{n}", d))
        for r in range(config.restarts):
            v = rng.standard_normal(len(tuned))
            v /= np.linalg.norm(v)
            d = np.zeros(len(names))
            for n, x in zip(tuned, v):
                d[col[n]] = x
            directions.append((f"random:{r}", d))
        for label, d in directions:
            gamma, predicted = problem.line_search(w, d)
            accepted = False
            if predicted > current and gamma != 0.0:
                cand = _step(w, gamma, d)
                actual = problem.bleu(cand)
                if actual > current:
                    w, current, accepted = cand, actual, True
            if history is not None:
                history.append(MertStep(it, label, gamma, current, accepted))
        log.info("mert: iteration %d BLEU %.6f", it, current)
        if current - start < config.min_improvement:
            break
    return WeightVector(problem.as_weights(w))


def render_mert_log(steps: Sequence[MertStep]) -> str:
    return "\n".join([MERT_LOG_HEADER, *(s.render() for s in steps)]) + "\n"
