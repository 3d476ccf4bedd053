import numpy as np
import pytest

from nmtrerank import scorer as S
from nmtrerank.corpus import Sentence, Vocabulary

TOKENS = [f"w{i}" for i in range(17)]   # 17 words + 3 reserved ids = 20


@pytest.fixture
def vocab():
    return Vocabulary(TOKENS)


def random_pairs(rng, n, max_len=6, tokens=TOKENS):
    return [(Sentence(rng.choice(tokens, rng.integers(1, max_len + 1))),
             Sentence(rng.choice(tokens, rng.integers(0, max_len + 1)))) for _ in range(n)]


def spread_scorer(vocab, dim=8, seed=0, scale=0.5):
    """A small scorer with parameters wider than the default init, so attention is far from uniform."""
    sc = S.init_scorer(S.ScorerConfig(vocab, vocab, dim, dim, dim, seed=seed))
    rng = np.random.default_rng(seed + 1000)
    return S.NeuralScorer(sc.config, {k: rng.uniform(-scale, scale, v.shape) for k, v in sc.params.items()})


@pytest.fixture
def small_scorer(vocab):
    return spread_scorer(vocab)


# --- acceptance summary ----------------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    n, text = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[n] = (text, "PASS" if report.outcome == "passed" else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result()._criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        text, status = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {text}")
