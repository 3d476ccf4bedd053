"""``nmtrerank`` command line: train, rerank, mert, evaluate, sweep, human-score, error-tally."""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import metrics
from .corpus import (FormatError, build_vocabulary, read_annotations, read_corpus, read_judgments,
                     read_nbest, read_weights, render_float, render_weights, render_nbest_line)
from .mert import MertConfig, mert, render_mert_log
from .rerank import NMT_FEATURE, augment, check_ids, rerank, render_sweep, sweep
from .scorer import NeuralScorer, ScorerConfig, init_scorer, to_bytes
from .training import EPOCH_LOG_HEADER, TrainConfig, TrainingError, train

DEFAULT_SEED = 42

log = logging.getLogger("nmtrerank")


class CommandError(Exception):
    exit_status = 1


class UsageError(CommandError):
    """Bad or missing command-line input; exits like an argparse error."""

    exit_status = 2


@contextlib.contextmanager
def _output(path, mode="w"):
    """Write ``path`` via a temporary file; nothing is left behind on failure."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"encoding": "utf-8", "newline": "\n"})) as f:
            yield f
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _load_models(paths):
    return [NeuralScorer.load(p) for p in paths or []]


def _augmented_lists(args):
    """Read --nbest and add the neural feature unless the file already carries it."""
    lists = read_nbest(args.nbest)
    sources = read_corpus(args.src)
    check_ids(lists, len(sources))
    has_feature = [NMT_FEATURE in h.features for nb in lists for h in nb]
    if args.model:
        return augment(lists, _load_models(args.model), args.ensemble_weights, sources, args.threads)
    if has_feature and all(has_feature):
        return lists
    raise CommandError(f"--model is required unless every hypothesis already has {NMT_FEATURE}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args):
    for flag, path in (("--src", args.src), ("--trg", args.trg),
                       ("--dev-src", args.dev_src), ("--dev-trg", args.dev_trg)):
        if not Path(path).is_file():
            raise UsageError(f"{flag}: no such file {path}")
    src, trg = read_corpus(args.src), read_corpus(args.trg)
    dev_src, dev_trg = read_corpus(args.dev_src), read_corpus(args.dev_trg)
    if len(src) != len(trg):
        raise CommandError(f"--src has {len(src)} lines but --trg has {len(trg)}")
    if len(dev_src) != len(dev_trg):
        raise CommandError(f"--dev-src has {len(dev_src)} lines but --dev-trg has {len(dev_trg)}")
    pairs = [(s, t) for s, t in zip(src, trg) if len(s)]
    dev = [(s, t) for s, t in zip(dev_src, dev_trg) if len(s)]
    config = ScorerConfig(build_vocabulary(src, args.vocab_min_count),
                          build_vocabulary(trg, args.vocab_min_count),
                          args.embed, args.hidden, args.attention_hidden, args.seed)
    out = sys.stdout
    out.write(EPOCH_LOG_HEADER + "\n")
    best, _ = train(init_scorer(config), pairs, dev,
                    TrainConfig(args.lr, args.epochs, args.seed, args.clip_norm),
                    on_epoch=lambda rec: (out.write(rec.render() + "\n"), out.flush()))
    with _output(args.model, "wb") as f:
        f.write(to_bytes(best))


def cmd_rerank(args):
    lists = _augmented_lists(args)
    weights = read_weights(args.weights)
    if args.dump_nbest:
        with _output(args.dump_nbest) as f:
            for nb in lists:
                for h in nb:
                    f.write(render_nbest_line(nb.sentence_id, h) + "\n")
    with _output(args.out) as f:
        for hyp in rerank(lists, weights, args.n):
            f.write(hyp.tokens.render() + "\n")


def cmd_mert(args):
    lists = _augmented_lists(args)
    refs = read_corpus(args.refs)
    if len(refs) != len(lists):
        raise CommandError(f"--refs has {len(refs)} lines for {len(lists)} n-best lists")
    init = read_weights(args.init_weights) if args.init_weights else {}
    tune = [args.tune_only] if args.tune_only else None
    steps = []
    weights = mert(lists, refs, init, MertConfig(args.restarts, args.iters, args.seed), tune, steps)
    with _output(args.out) as f:
        f.write(render_weights(weights))
    if args.log:
        with _output(args.log) as f:
            f.write(render_mert_log(steps))


def cmd_evaluate(args):
    hyp, ref = read_corpus(args.hyp), read_corpus(args.ref)
    if len(hyp) != len(ref):
        raise CommandError(f"--hyp has {len(hyp)} lines but --ref has {len(ref)}")
    base = read_corpus(args.baseline_hyp) if args.baseline_hyp else None
    if base is not None and len(base) != len(ref):
        raise CommandError(f"--baseline-hyp has {len(base)} lines but --ref has {len(ref)}")
    names = ["bleu", "ribes"] if args.metric == "both" else [args.metric]
    rows = []
    for name in names:
        if name == "bleu":
            value = metrics.bleu(hyp, ref)
        else:
            value = metrics.corpus_ribes(hyp, ref, args.alpha, args.beta)
        row = [name, render_float(value)]
        if base is not None:
            p, sig = metrics.bootstrap_test(hyp, base, ref, name, args.bootstrap_samples, args.seed,
                                            alpha=args.alpha, beta=args.beta)
            row += [render_float(p), "yes" if sig else "no"]
        rows.append("\t".join(row))
    header = "metric\tvalue" + ("\tp_value\tsignificant" if base is not None else "")
    with _output(args.out) as f:
        f.write("\n".join([header, *rows]) + "\n")


def cmd_sweep(args):
    lists = _augmented_lists(args)
    refs = read_corpus(args.refs)
    if len(refs) != len(lists):
        raise CommandError(f"--refs has {len(refs)} lines for {len(lists)} n-best lists")
    weights = read_weights(args.weights)
    max_n = args.max_n or max(len(nb) for nb in lists)
    points = sweep(lists, refs, weights, range(1, max_n + 1))
    with _output(args.out) as f:
        f.write(render_sweep(points))


def cmd_human_score(args):
    judgments = read_judgments(args.judgments)
    score = metrics.human_score(judgments)
    counts = {o: sum(j.outcome == o for j in judgments) for o in ("win", "loss", "tie")}
    with _output(args.out) as f:
        f.write("wins\tlosses\tties\thuman\n")
        f.write(f"{counts['win']}\t{counts['loss']}\t{counts['tie']}\t{render_float(score)}\n")


def cmd_error_tally(args):
    rows, total = metrics.error_tally(read_annotations(args.annotations))
    with _output(args.out) as f:
        f.write(metrics.render_tally(rows, total))


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nmtrerank", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--threads", type=int, default=1, help="scoring workers (results do not depend on it)")

    def models(p):
        p.add_argument("--model", action="append", help="scorer model file; repeat to ensemble")
        p.add_argument("--ensemble-weights", type=_float_list, default=None,
                       help="interpolation weights, one per --model (default uniform)")

    p = sub.add_parser("train", help="train a neural scorer")
    p.add_argument("--src", required=True)
    p.add_argument("--trg", required=True)
    p.add_argument("--dev-src", required=True)
    p.add_argument("--dev-trg", required=True)
    p.add_argument("--embed", type=int, default=256)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--attention-hidden", type=int, default=None)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--clip-norm", type=float, default=5.0)
    p.add_argument("--vocab-min-count", type=int, default=1)
    p.add_argument("--model", required=True, help="output model file")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rerank", help="pick the best hypothesis per sentence")
    p.add_argument("--nbest", required=True)
    p.add_argument("--src", required=True)
    models(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--n", type=int, default=None, help="use only the first N hypotheses")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-nbest", default=None, help="also write the augmented n-best list")
    common(p)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("mert", help="tune feature weights for BLEU")
    p.add_argument("--nbest", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--refs", required=True)
    models(p)
    p.add_argument("--init-weights", default=None)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--tune-all", action="store_true", help="tune every feature (default)")
    mode.add_argument("--tune-only", metavar="NAME", default=None, help="tune a single feature")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="per-direction MERT log (TSV)")
    common(p)
    p.set_defaults(func=cmd_mert)

    p = sub.add_parser("evaluate", help="BLEU / RIBES with optional bootstrap test")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--baseline-hyp", default=None)
    p.add_argument("--metric", choices=["bleu", "ribes", "both"], default="both")
    p.add_argument("--bootstrap-samples", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=metrics.RIBES_ALPHA)
    p.add_argument("--beta", type=float, default=metrics.RIBES_BETA)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="rerank at every n-best size from 1 to --max-n")
    p.add_argument("--nbest", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--refs", required=True)
    models(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--max-n", type=int, default=None)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("human-score", help="pairwise HUMAN score against a baseline")
    p.add_argument("--judgments", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_human_score)

    p = sub.add_parser("error-tally", help="improvement/degradation counts per error category")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_error_tally)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (CommandError, FormatError, TrainingError, ValueError, OSError) as exc:
        print(f"nmtrerank {args.command}: error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_status", 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
