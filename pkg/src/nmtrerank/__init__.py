"""Neural n-best reranking for machine translation.

Score hypotheses with an attentional encoder-decoder, tune log-linear weights
with MERT, and evaluate with BLEU, RIBES, bootstrap resampling and pairwise
human-judgment arithmetic.
"""

from .corpus import (AnnotationRecord, Hypothesis, NBestList, PairwiseJudgment, Sentence, Vocabulary,
                     WeightVector, build_vocabulary, read_annotations, read_corpus, read_judgments,
                     read_nbest, read_weights, write_nbest, write_weights)
from .mert import MertConfig
from .metrics import (bleu, bleu_stats, bootstrap_test, corpus_bleu, corpus_ribes, error_tally,
                      human_score, ribes, sentence_bleu_plus1)
from .rerank import NMT_FEATURE, augment, select, sweep
from .scorer import (NeuralScorer, ScorerConfig, attention, encode, ensemble_score, gradient, init_scorer,
                     score)
from .training import TrainConfig, train

# the ``rerank`` and ``mert`` functions stay in their modules so the module names are not shadowed

__version__ = "0.1.0"
