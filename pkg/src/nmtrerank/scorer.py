"""Attentional bidirectional-LSTM encoder-decoder used as a reranking feature.

The scorer never generates; it returns the natural-log likelihood of a given
target sentence (plus its end-of-sentence token) under the model.  Everything
runs in float64.

Shapes use E = embedding size, H = hidden size per direction, A = attention
hidden size, J = source length, B = number of targets scored against one
source, T = longest target length + 1.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lstm
from .corpus import BOS_ID, EOS_ID, Vocabulary

MAGIC = b"NMTRRSC\x00"
FORMAT_VERSION = 1
INIT_SCALE = 0.1


@dataclass(frozen=True, eq=False)
class ScorerConfig:
    source_vocab: Vocabulary
    target_vocab: Vocabulary
    embedding_dim: int = 256
    hidden_dim: int = 256
    attention_hidden_dim: int | None = None
    seed: int = 42

    def __post_init__(self):
        if self.attention_hidden_dim is None:
            object.__setattr__(self, "attention_hidden_dim", self.hidden_dim)
        for name in ("embedding_dim", "hidden_dim", "attention_hidden_dim"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    def __eq__(self, other):
        return isinstance(other, ScorerConfig) and self._key() == other._key()

    def _key(self):
        return (self.source_vocab.tokens, self.target_vocab.tokens, self.embedding_dim,
                self.hidden_dim, self.attention_hidden_dim, self.seed)

    def to_json(self) -> dict:
        return {
            "embedding_dim": int(self.embedding_dim),
            "hidden_dim": int(self.hidden_dim),
            "attention_hidden_dim": int(self.attention_hidden_dim),
            "seed": int(self.seed),
            "source_vocab": self.source_vocab.tokens,
            "target_vocab": self.target_vocab.tokens,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ScorerConfig":
        return cls(Vocabulary(d["source_vocab"]), Vocabulary(d["target_vocab"]),
                   d["embedding_dim"], d["hidden_dim"], d["attention_hidden_dim"], d["seed"])


def parameter_shapes(config: ScorerConfig) -> dict[str, tuple[int, ...]]:
    E, H, A = config.embedding_dim, config.hidden_dim, config.attention_hidden_dim
    Vs, Vt = len(config.source_vocab), len(config.target_vocab)
    return {
        "src_emb": (Vs, E),
        "trg_emb": (Vt, E),
        "enc_fwd_W": (4 * H, E + H),
        "enc_fwd_b": (4 * H,),
        "enc_bwd_W": (4 * H, E + H),
        "enc_bwd_b": (4 * H,),
        "dec_init_W": (2 * H, H),
        "dec_init_b": (2 * H,),
        "att_W_dec": (A, H),
        "att_W_enc": (A, 2 * H),
        "att_b": (A,),
        "att_v": (A,),
        "dec_W": (4 * H, E + 2 * H + H),
        "dec_b": (4 * H,),
        "out_W": (Vt, 3 * H),
        "out_b": (Vt,),
    }


class NeuralScorer:
    """A configuration plus its named parameter tensors."""

    def __init__(self, config: ScorerConfig, params: dict[str, np.ndarray]):
        shapes = parameter_shapes(config)
        if set(params) != set(shapes):
            raise ValueError(f"parameter names differ: {sorted(set(params) ^ set(shapes))}")
        self.config = config
        self.params = {}
        for name, shape in shapes.items():
            arr = np.array(params[name], dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name}: shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite values")
            self.params[name] = arr

    def copy(self) -> "NeuralScorer":
        return NeuralScorer(self.config, self.params)

    def __getitem__(self, name):
        return self.params[name]

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(to_bytes(self))

    @classmethod
    def load(cls, path) -> "NeuralScorer":
        with open(path, "rb") as f:
            return from_bytes(f.read())


def init_scorer(config: ScorerConfig) -> NeuralScorer:
    """Uniform(-0.1, 0.1) parameters drawn in a fixed order from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    params = {name: rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)
              for name, shape in parameter_shapes(config).items()}
    return NeuralScorer(config, params)


# ---------------------------------------------------------------------------
# model file


def to_bytes(scorer: NeuralScorer) -> bytes:
    shapes = parameter_shapes(scorer.config)
    header = {
        "format_version": FORMAT_VERSION,
        "config": scorer.config.to_json(),
        "tensors": [[name, list(shape)] for name, shape in shapes.items()],
    }
    head = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(head)), head]
    for name in shapes:
        chunks.append(np.ascontiguousarray(scorer.params[name], dtype="<f8").tobytes())
    return b"".join(chunks)


def from_bytes(data: bytes) -> NeuralScorer:
    if not data.startswith(MAGIC):
        raise ValueError("not a scorer model file (bad magic)")
    pos = len(MAGIC)
    version, head_len = struct.unpack_from("<II", data, pos)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    pos += 8
    header = json.loads(data[pos:pos + head_len].decode("utf-8"))
    pos += head_len
    config = ScorerConfig.from_json(header["config"])
    params = {}
    for name, shape in header["tensors"]:
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(shape)
        params[name] = arr.astype(np.float64)
        pos += 8 * count
    if pos != len(data):
        raise ValueError("trailing bytes in model file")
    return NeuralScorer(config, params)


def save_scorer(scorer: NeuralScorer, path) -> None:
    scorer.save(path)


def load_scorer(path) -> NeuralScorer:
    return NeuralScorer.load(path)


# ---------------------------------------------------------------------------
# forward pass


def _softmax_rows(x):
    x = x - x.max(axis=-1, keepdims=True)
    e = np.exp(x)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax_rows(x):
    x = x - x.max(axis=-1, keepdims=True)
    return x - np.log(np.exp(x).sum(axis=-1, keepdims=True))


def _source_ids(scorer, source) -> list[int]:
    if len(source) == 0:
        raise ValueError("empty source")
    return scorer.config.source_vocab.encode(source)


def _encode_ids(p, src_ids, keep_cache=False):
    H = p["enc_fwd_b"].shape[0] // 4
    X = p["src_emb"][src_ids]
    J = len(src_ids)
    zeros = np.zeros((1, H), dtype=X.dtype)
    hf, hb = [None] * J, [None] * J
    fcache, bcache = [None] * J, [None] * J
    h, c = zeros, zeros
    for j in range(J):
        h, c, fcache[j] = lstm.cell_forward(p["enc_fwd_W"], p["enc_fwd_b"], X[j:j + 1], h, c)
        hf[j] = h
    h, c = zeros, zeros
    for j in reversed(range(J)):
        h, c, bcache[j] = lstm.cell_forward(p["enc_bwd_W"], p["enc_bwd_b"], X[j:j + 1], h, c)
        hb[j] = h
    enc = np.concatenate([np.vstack(hf), np.vstack(hb)], axis=1)
    return enc, (fcache, bcache) if keep_cache else None


def encode(scorer: NeuralScorer, source: Sequence[str]) -> np.ndarray:
    """Encoding vectors, one row ``[forward; backward]`` of length 2H per source word."""
    enc, _ = _encode_ids(scorer.params, _source_ids(scorer, source))
    return enc


def context_vector(weights, encodings) -> np.ndarray:
    """Weighted sum of encoding vectors."""
    weights = np.asarray(weights, dtype=np.float64)
    encodings = np.asarray(encodings, dtype=np.float64)
    if weights.shape[-1] != encodings.shape[0]:
        raise ValueError(f"{weights.shape[-1]} weights for {encodings.shape[0]} encodings")
    return weights @ encodings


def attention(scorer: NeuralScorer, decoder_state, encodings) -> tuple[np.ndarray, np.ndarray]:
    """Soft alignment of one decoder state over the encodings, and the resulting context.

    Scores come from a one-hidden-layer tanh perceptron on the decoder state and
    each encoding; the weights are their softmax over source positions.
    """
    p = scorer.params
    s = np.asarray(decoder_state, dtype=np.float64)
    enc = np.asarray(encodings, dtype=np.float64)
    if enc.ndim != 2 or len(enc) == 0:
        raise ValueError("need a non-empty (J, 2H) array of encodings")
    if s.shape != (p["att_W_dec"].shape[1],) or enc.shape[1] != p["att_W_enc"].shape[1]:
        raise ValueError(f"dimension mismatch: state {s.shape}, encodings {enc.shape}")
    t = np.tanh(enc @ p["att_W_enc"].T + p["att_b"] + p["att_W_dec"] @ s)
    a = _softmax_rows(t @ p["att_v"])
    return a, context_vector(a, enc)


def _target_arrays(scorer, targets):
    vocab = scorer.config.target_vocab
    B = len(targets)
    T = max(len(t) for t in targets) + 1
    y_in = np.full((B, T), EOS_ID, dtype=np.int64)
    y_out = np.full((B, T), EOS_ID, dtype=np.int64)
    mask = np.zeros((B, T), dtype=np.int8)
    y_in[:, 0] = BOS_ID
    for b, tgt in enumerate(targets):
        ids = vocab.encode(tgt)
        n = len(ids)
        y_in[b, 1:n + 1] = ids
        y_out[b, :n] = ids
        mask[b, :n + 1] = 1.0
    return y_in, y_out, mask


@dataclass
class _Forward:
    token_logp: np.ndarray            # (B, T), zero where masked
    mask: np.ndarray                  # (B, T)
    log_probs: list | None = None     # T arrays of (B, V)
    attn: list | None = None          # T arrays of (B, J)
    contexts: list | None = None
    states: list | None = None        # decoder states s_0 .. s_T
    encodings: np.ndarray | None = None
    cache: dict | None = None


def _forward(scorer: NeuralScorer, source, targets, keep_cache=False, keep_dists=False) -> _Forward:
    p = scorer.params
    src_ids = _source_ids(scorer, source)
    enc, enc_cache = _encode_ids(p, src_ids, keep_cache)
    H = p["enc_fwd_b"].shape[0] // 4
    y_in, y_out, mask = _target_arrays(scorer, targets)
    B, T = y_in.shape

    z0 = p["dec_init_W"] @ enc[0, H:] + p["dec_init_b"]
    s0 = np.tanh(z0[:H])
    s = np.broadcast_to(s0, (B, H)).copy()
    c = np.broadcast_to(z0[H:], (B, H)).copy()
    pre = enc @ p["att_W_enc"].T + p["att_b"]          # (J, A)

    token_logp = np.zeros((B, T), dtype=enc.dtype)
    steps = [] if keep_cache else None
    log_probs = [] if keep_dists else None
    attn = [] if keep_dists else None
    contexts = [] if keep_dists else None
    states = [s] if keep_dists else None
    rows = np.arange(B)
    for t in range(T):
        th = np.tanh(pre[None, :, :] + (s @ p["att_W_dec"].T)[:, None, :])   # (B, J, A)
        a = _softmax_rows(th @ p["att_v"])                                    # (B, J)
        g = a @ enc                                                           # (B, 2H)
        x = np.concatenate([p["trg_emb"][y_in[:, t]], g], axis=1)
        s_new, c, cell = lstm.cell_forward(p["dec_W"], p["dec_b"], x, s, c)
        o_in = np.concatenate([s_new, g], axis=1)
        logp = _log_softmax_rows(o_in @ p["out_W"].T + p["out_b"])
        token_logp[:, t] = logp[rows, y_out[:, t]] * mask[:, t]
        if keep_cache:
            steps.append((s, th, a, g, cell, o_in, logp))
        if keep_dists:
            log_probs.append(logp)
            attn.append(a)
            contexts.append(g)
            states.append(s_new)
        s = s_new

    out = _Forward(token_logp, mask, log_probs, attn, contexts, states, enc)
    if keep_cache:
        out.cache = dict(src_ids=src_ids, enc=enc, enc_cache=enc_cache, z0=z0, s0=s0,
                         y_in=y_in, y_out=y_out, steps=steps)
    return out


def score_batch(scorer: NeuralScorer, source: Sequence[str], targets: Sequence[Sequence[str]]) -> np.ndarray:
    """Log-likelihoods of several targets for one source (encoder run once)."""
    if not targets:
        return np.zeros(0)
    return _forward(scorer, source, targets).token_logp.sum(axis=1)


def score(scorer: NeuralScorer, source: Sequence[str], target: Sequence[str]) -> float:
    """sum_i log p(e_i | e_<i, f), including the end-of-sentence token."""
    return float(score_batch(scorer, source, [target])[0])


@dataclass
class DecodeTrace:
    """Per-step internals of scoring one target."""

    encodings: np.ndarray          # (J, 2H)
    states: np.ndarray             # (T, H) decoder state each attention step consumed
    attention: np.ndarray          # (T, J)
    contexts: np.ndarray           # (T, 2H)
    log_probs: np.ndarray          # (T, V) full output distribution per step
    token_log_probs: np.ndarray    # (T,)


def trace(scorer: NeuralScorer, source, target) -> DecodeTrace:
    fw = _forward(scorer, source, [target], keep_dists=True)
    T = int(fw.mask[0].sum())
    return DecodeTrace(
        encodings=fw.encodings,
        states=np.vstack([s[0] for s in fw.states[:T]]),
        attention=np.vstack([a[0] for a in fw.attn[:T]]),
        contexts=np.vstack([g[0] for g in fw.contexts[:T]]),
        log_probs=np.vstack([lp[0] for lp in fw.log_probs[:T]]),
        token_log_probs=fw.token_logp[0, :T],
    )


# ---------------------------------------------------------------------------
# backward pass


def _backward(scorer: NeuralScorer, fw: _Forward) -> dict[str, np.ndarray]:
    """Gradient of the summed negative log-likelihood of every target in ``fw``."""
    p = scorer.params
    cache = fw.cache
    grads = {name: np.zeros_like(v) for name, v in p.items()}
    enc, y_in, y_out, mask = cache["enc"], cache["y_in"], cache["y_out"], fw.mask
    B, T = y_in.shape
    J, H2 = enc.shape
    H = H2 // 2
    E = p["trg_emb"].shape[1]
    rows = np.arange(B)

    d_enc = np.zeros_like(enc)
    d_pre = np.zeros((J, p["att_W_enc"].shape[0]))
    ds = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t in reversed(range(T)):
        s_prev, th, a, g, cell, o_in, logp = cache["steps"][t]
        dlogits = np.exp(logp)
        dlogits[rows, y_out[:, t]] -= 1.0
        dlogits *= mask[:, t:t + 1]
        grads["out_W"] += dlogits.T @ o_in
        grads["out_b"] += dlogits.sum(axis=0)
        do_in = dlogits @ p["out_W"]
        ds = ds + do_in[:, :H]
        dg = do_in[:, H:]

        dxh, dc = lstm.cell_backward(p["dec_W"], cell, ds, dc, grads["dec_W"], grads["dec_b"])
        np.add.at(grads["trg_emb"], y_in[:, t], dxh[:, :E])
        dg = dg + dxh[:, E:E + H2]
        ds_prev = dxh[:, E + H2:]

        d_enc += a.T @ dg
        da = dg @ enc.T
        dsc = a * (da - (da * a).sum(axis=1, keepdims=True))
        grads["att_v"] += np.einsum("bj,bja->a", dsc, th)
        de = dsc[:, :, None] * p["att_v"] * (1.0 - th * th)     # (B, J, A)
        de_dec = de.sum(axis=1)
        grads["att_W_dec"] += de_dec.T @ s_prev
        ds_prev = ds_prev + de_dec @ p["att_W_dec"]
        d_pre += de.sum(axis=0)
        ds = ds_prev

    grads["att_W_enc"] += d_pre.T @ enc
    grads["att_b"] += d_pre.sum(axis=0)
    d_enc += d_pre @ p["att_W_enc"]

    # decoder initial state is shared by the whole batch
    dz0 = np.concatenate([ds.sum(axis=0) * (1.0 - cache["s0"] ** 2), dc.sum(axis=0)])
    hb1 = enc[0, H:]
    grads["dec_init_W"] += np.outer(dz0, hb1)
    grads["dec_init_b"] += dz0
    d_enc[0, H:] += p["dec_init_W"].T @ dz0

    src_ids = cache["src_ids"]
    fcache, bcache = cache["enc_cache"]
    dh = np.zeros((1, H))
    dcc = np.zeros((1, H))
    for j in reversed(range(J)):
        dxh, dcc = lstm.cell_backward(p["enc_fwd_W"], fcache[j], d_enc[j:j + 1, :H] + dh, dcc,
                                      grads["enc_fwd_W"], grads["enc_fwd_b"])
        grads["src_emb"][src_ids[j]] += dxh[0, :E]
        dh = dxh[:, E:]
    dh = np.zeros((1, H))
    dcc = np.zeros((1, H))
    for j in range(J):
        dxh, dcc = lstm.cell_backward(p["enc_bwd_W"], bcache[j], d_enc[j:j + 1, H:] + dh, dcc,
                                      grads["enc_bwd_W"], grads["enc_bwd_b"])
        grads["src_emb"][src_ids[j]] += dxh[0, :E]
        dh = dxh[:, E:]
    return grads


def loss_and_gradient(scorer: NeuralScorer, source, target) -> tuple[float, dict[str, np.ndarray]]:
    """Negative log-likelihood of one pair and its gradient."""
    fw = _forward(scorer, source, [target], keep_cache=True)
    return -float(fw.token_logp.sum()), _backward(scorer, fw)


def gradient(scorer: NeuralScorer, source, target) -> dict[str, np.ndarray]:
    """d(-log-likelihood)/d(theta), one tensor per parameter."""
    return loss_and_gradient(scorer, source, target)[1]


def batch_gradient(scorer: NeuralScorer, pairs) -> dict[str, np.ndarray]:
    """Summed gradient over (source, target) pairs."""
    total = {name: np.zeros_like(v) for name, v in scorer.params.items()}
    for src, trg in pairs:
        for name, g in gradient(scorer, src, trg).items():
            total[name] += g
    return total


# ---------------------------------------------------------------------------
# ensembles


def _check_ensemble(scorers, weights):
    if not scorers:
        raise ValueError("need at least one scorer")
    if weights is None:
        weights = [1.0 / len(scorers)] * len(scorers)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(scorers),):
        raise ValueError(f"{len(w)} weights for {len(scorers)} scorers")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("ensemble weights must be non-negative and sum to 1")
    vocab = scorers[0].config.target_vocab
    for sc in scorers[1:]:
        if sc.config.target_vocab != vocab:
            raise ValueError("target vocabulary mismatch between ensembled scorers")
    return w


def ensemble_score_batch(scorers: Sequence[NeuralScorer], weights, source, targets) -> np.ndarray:
    """Per step, mix the scorers' distributions with ``weights``; sum the log of the mixture."""
    w = _check_ensemble(scorers, weights)
    if not targets:
        return np.zeros(0)
    if len(scorers) == 1:
        return score_batch(scorers[0], source, targets)
    # log-sum-exp over models of log w_k + log p_k(e_i); zero-weight models drop out
    terms, mask = [], None
    for wk, sc in zip(w, scorers):
        if wk == 0.0:
            continue
        fw = _forward(sc, source, targets)
        terms.append(np.log(wk) + fw.token_logp)
        mask = fw.mask
    stacked = np.stack(terms)
    m = stacked.max(axis=0)
    mixed = m + np.log(np.exp(stacked - m).sum(axis=0))
    return (mixed * mask).sum(axis=1)


def ensemble_score(scorers: Sequence[NeuralScorer], weights, source, target) -> float:
    return float(ensemble_score_batch(scorers, weights, source, [target])[0])


def ensemble_step_distributions(scorers, weights, source, target) -> np.ndarray:
    """(T, V) mixture distributions, one row per target step."""
    w = _check_ensemble(scorers, weights)
    return sum(wk * np.exp(trace(sc, source, target).log_probs) for wk, sc in zip(w, scorers))


