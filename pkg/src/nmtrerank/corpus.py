"""Sentences, vocabularies, n-best lists and the small text formats around them.

All readers are strict: a malformed line raises :class:`FormatError` carrying the
1-based line number.  Writers produce canonical text that the readers parse back
to equal objects.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

UNK, BOS, EOS = "<unk>", "<s>", "</s>"
UNK_ID, BOS_ID, EOS_ID = 0, 1, 2

VERDICTS = ("improved", "degraded", "equal")
OUTCOMES = ("win", "loss", "tie")

_WS = re.compile(r"\s")


class FormatError(ValueError):
    """A file did not follow its line grammar."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.path = path
        self.line = line


class Sentence(tuple):
    """An immutable sequence of whitespace-free, non-empty tokens."""

    __slots__ = ()

    def __new__(cls, tokens: Iterable[str] = ()):
        tokens = tuple(tokens)
        for tok in tokens:
            if not isinstance(tok, str) or not tok or _WS.search(tok):
                raise ValueError(f"invalid token {tok!r}")
        return super().__new__(cls, tokens)

    @classmethod
    def parse(cls, text: str) -> "Sentence":
        return cls(text.split())

    def render(self) -> str:
        return " ".join(self)

    def __repr__(self):
        return f"Sentence({self.render()!r})"


def render_float(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""
    return repr(float(value))


def _read_lines(path) -> list[str]:
    data = Path(path).read_bytes()
    if not data:
        return []
    raw = data.split(b"\n")
    if raw[-1] == b"":
        raw.pop()
    lines = []
    for lineno, chunk in enumerate(raw, 1):
        try:
            lines.append(chunk.decode("utf-8").rstrip("\r"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"invalid UTF-8 ({exc.reason})", path, lineno) from None
    return lines


def read_corpus(path) -> list[Sentence]:
    """One :class:`Sentence` per line; tokens split on any whitespace run."""
    return [Sentence.parse(line) for line in _read_lines(path)]


def write_corpus(path, sentences: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in sentences:
            f.write(" ".join(s) + "\n")


# ---------------------------------------------------------------------------
# vocabulary


class Vocabulary:
    """Token/id bijection with ids 0, 1, 2 reserved for unknown, start and end."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._tokens = [UNK, BOS, EOS]
        self._ids = {UNK: UNK_ID, BOS: BOS_ID, EOS: EOS_ID}
        for tok in tokens:
            if tok in self._ids:
                raise ValueError(f"duplicate vocabulary entry {tok!r}")
            self._ids[tok] = len(self._tokens)
            self._tokens.append(tok)

    def __len__(self):
        return len(self._tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def __contains__(self, token):
        return token in self._ids

    def id_of(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    @property
    def tokens(self) -> list[str]:
        """Non-reserved tokens in id order."""
        return self._tokens[3:]

    def encode(self, sentence: Sequence[str]) -> list[int]:
        return [self._ids.get(t, UNK_ID) for t in sentence]

    def save(self, path) -> None:
        write_corpus(path, [[t] for t in self.tokens])

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls(line.strip() for line in _read_lines(path))


def build_vocabulary(corpus: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Ids by descending frequency, ties broken lexicographically."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter(tok for sent in corpus for tok in sent)
    for reserved in (UNK, BOS, EOS):
        counts.pop(reserved, None)
    kept = sorted((tok for tok, c in counts.items() if c >= min_count),
                  key=lambda t: (-counts[t], t))
    return Vocabulary(kept)


# ---------------------------------------------------------------------------
# n-best lists


@dataclass(frozen=True)
class Hypothesis:
    tokens: Sentence
    features: Mapping[str, float] = field(default_factory=dict)
    base_score: float = 0.0

    def __post_init__(self):
        if not isinstance(self.tokens, Sentence):
            object.__setattr__(self, "tokens", Sentence(self.tokens))
        if not math.isfinite(self.base_score):
            raise ValueError("base_score must be finite")
        object.__setattr__(self, "features", dict(self.features))

    def with_feature(self, name: str, value: float) -> "Hypothesis":
        if name in self.features:
            raise ValueError(f"feature already present: {name}")
        return Hypothesis(self.tokens, {**self.features, name: float(value)}, self.base_score)


@dataclass(frozen=True)
class NBestList:
    sentence_id: int
    hypotheses: tuple[Hypothesis, ...]

    def __post_init__(self):
        if self.sentence_id < 0:
            raise ValueError("sentence_id must be non-negative")
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        if not self.hypotheses:
            raise ValueError("an n-best list cannot be empty")
        seen = set()
        for hyp in self.hypotheses:
            if hyp.tokens in seen:
                raise ValueError(f"duplicate hypothesis {hyp.tokens.render()!r}")
            seen.add(hyp.tokens)

    def __len__(self):
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)

    def __getitem__(self, i):
        return self.hypotheses[i]

    def truncate(self, n: int) -> "NBestList":
        """The baseline's ``n``-best: the first ``n`` hypotheses in rank order."""
        if n < 1:
            raise ValueError("n must be >= 1")
        return NBestList(self.sentence_id, self.hypotheses[:n])

    def feature_names(self) -> list[str]:
        return sorted({name for hyp in self.hypotheses for name in hyp.features})


def _parse_features(text: str, path, lineno) -> dict[str, float]:
    groups: list[tuple[str, list[float]]] = []
    for item in text.split():
        if item.endswith("="):
            groups.append((item[:-1], []))
            continue
        if not groups:
            raise FormatError(f"feature value {item!r} before any feature name", path, lineno)
        try:
            value = float(item)
        except ValueError:
            raise FormatError(f"non-numeric feature value {item!r}", path, lineno) from None
        groups[-1][1].append(value)
    features: dict[str, float] = {}
    for name, values in groups:
        if not name or not values:
            raise FormatError(f"feature {name!r} has no values", path, lineno)
        names = [name] if len(values) == 1 else [f"{name}_{k}" for k in range(len(values))]
        for n, v in zip(names, values):
            if n in features:
                raise FormatError(f"duplicate feature name {n!r}", path, lineno)
            features[n] = v
    return features


def parse_nbest_lines(lines: Iterable[str], path=None) -> list[NBestList]:
    lists: list[NBestList] = []
    cur_id, cur_hyps, seen = None, [], set()

    def flush():
        if cur_id is not None:
            lists.append(NBestList(cur_id, tuple(cur_hyps)))

    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        fields = line.split("|||")
        if len(fields) != 4:
            raise FormatError(f"expected 4 '|||'-separated fields, got {len(fields)}", path, lineno)
        id_text, tok_text, feat_text, total_text = (f.strip() for f in fields)
        try:
            sid = int(id_text)
        except ValueError:
            raise FormatError(f"bad sentence id {id_text!r}", path, lineno) from None
        if sid < 0:
            raise FormatError(f"negative sentence id {sid}", path, lineno)
        try:
            total = float(total_text)
        except ValueError:
            raise FormatError(f"non-numeric total score {total_text!r}", path, lineno) from None
        if not math.isfinite(total):
            raise FormatError("total score is not finite", path, lineno)
        features = _parse_features(feat_text, path, lineno)
        if sid != cur_id:
            if cur_id is not None and sid < cur_id:
                raise FormatError(f"sentence id {sid} after {cur_id}; ids must be non-decreasing",
                                  path, lineno)
            flush()
            cur_id, cur_hyps, seen = sid, [], set()
        tokens = Sentence(tok_text.split())
        if tokens in seen:
            continue
        seen.add(tokens)
        cur_hyps.append(Hypothesis(tokens, features, total))
    flush()
    return lists


def read_nbest(path) -> list[NBestList]:
    """Parse a Moses-style ``id ||| tokens ||| name= v ... ||| total`` file.

    Lists come back grouped by id in file order.  A name followed by several
    values expands to ``name_0``, ``name_1``, ...  Repeated token sequences
    within one id keep their first occurrence only.
    """
    return parse_nbest_lines(_read_lines(path), path)


def render_nbest_line(sentence_id: int, hyp: Hypothesis) -> str:
    feats = " ".join(f"{name}= {render_float(hyp.features[name])}" for name in sorted(hyp.features))
    return f"{sentence_id} ||| {hyp.tokens.render()} ||| {feats} ||| {render_float(hyp.base_score)}"


def write_nbest(path, lists: Iterable[NBestList]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for nb in lists:
            for hyp in nb:
                f.write(render_nbest_line(nb.sentence_id, hyp) + "\n")


# ---------------------------------------------------------------------------
# weights, annotations, judgments


class WeightVector(dict):
    """Feature name to finite real weight."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for name, value in self.items():
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"weight {name!r} is not finite")
            super().__setitem__(name, value)

    def __setitem__(self, name, value):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"weight {name!r} is not finite")
        super().__setitem__(name, value)


def read_weights(path) -> WeightVector:
    weights = WeightVector()
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError("expected 'name<TAB>value'", path, lineno)
        name, value = parts[0].strip(), parts[1].strip()
        if name in weights:
            raise FormatError(f"duplicate weight {name!r}", path, lineno)
        try:
            weights[name] = float(value)
        except ValueError as exc:
            raise FormatError(str(exc), path, lineno) from None
    return weights


def render_weights(weights: Mapping[str, float]) -> str:
    return "".join(f"{name}\t{render_float(weights[name])}\n" for name in sorted(weights))


def write_weights(path, weights: Mapping[str, float]) -> None:
    Path(path).write_text(render_weights(weights), encoding="utf-8")


@dataclass(frozen=True)
class AnnotationRecord:
    sentence_id: int
    verdict: str
    category: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")


@dataclass(frozen=True)
class PairwiseJudgment:
    sentence_id: int
    outcome: str

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")


def _tsv_records(path, ncols_allowed):
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) not in ncols_allowed:
            raise FormatError(f"expected {ncols_allowed[-1]} tab-separated fields", path, lineno)
        try:
            sid = int(parts[0])
        except ValueError:
            raise FormatError(f"bad sentence id {parts[0]!r}", path, lineno) from None
        yield lineno, sid, parts[1:]


def read_annotations(path) -> list[AnnotationRecord]:
    """``sentence_id<TAB>verdict<TAB>category`` lines; category may be omitted for ``equal``."""
    records = []
    for lineno, sid, rest in _tsv_records(path, (2, 3)):
        category = rest[1].strip() if len(rest) > 1 else ""
        try:
            records.append(AnnotationRecord(sid, rest[0].strip(), category))
        except ValueError as exc:
            raise FormatError(str(exc), path, lineno) from None
    return records


def write_annotations(path, records: Iterable[AnnotationRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(f"{r.sentence_id}\t{r.verdict}\t{r.category}\n")


def read_judgments(path) -> list[PairwiseJudgment]:
    """``sentence_id<TAB>outcome`` lines with outcome in win/loss/tie."""
    judgments = []
    for lineno, sid, rest in _tsv_records(path, (2,)):
        try:
            judgments.append(PairwiseJudgment(sid, rest[0].strip()))
        except ValueError as exc:
            raise FormatError(str(exc), path, lineno) from None
    return judgments


def write_judgments(path, judgments: Iterable[PairwiseJudgment]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for j in judgments:
            f.write(f"{j.sentence_id}\t{j.outcome}\n")
