import numpy as np
import pytest

from lspsched import DelimiterSet, OracleDenoiser, SequenceState, Tokenizer, load_corpus


class MarginDenoiser:
    """Returns rows whose top-1 is ``ids[row]`` with margin ``margins[row]``.

    ``margins`` and ``ids`` are callables of (absolute position, step) so a
    test can script any margin pattern; the runner-up is always id 0 or 1.
    """

    def __init__(self, vocab_size, margin_fn, id_fn=lambda pos, step: 2, mask_id=None):
        self.vocab_size = vocab_size
        self.margin_fn = margin_fn
        self.id_fn = id_fn
        self.mask_id = vocab_size - 1 if mask_id is None else mask_id

    def predict(self, frozen, active_len, step, seed, islands=None):
        logits = np.full((active_len, self.vocab_size), -5.0)
        for i in range(active_len):
            pos = len(frozen) + i
            top = self.id_fn(pos, step)
            runner = 0 if top != 0 else 1
            logits[i, runner] = 0.0
            logits[i, top] = self.margin_fn(pos, step)
        logits[:, self.mask_id] = -1e9
        return logits


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance check; re-raises failures."""
    lines = request.config.stash[ACCEPTANCE]

    class _Check:
        def __init__(self, name):
            self.name = name
            self.detail = ""

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type is None:
                line = f"PASS  {self.name}  {self.detail}".rstrip()
            else:
                line = f"FAIL  {self.name}  {exc_type.__name__}: {exc}".splitlines()[0]
            lines.append(line)
            print(line)
            return False

    return _Check


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def tokenizer(corpus):
    return Tokenizer.from_corpus(corpus)


@pytest.fixture(scope="session")
def delims(tokenizer):
    return DelimiterSet.from_tokenizer(tokenizer)


@pytest.fixture(scope="session")
def stream(tokenizer, corpus):
    return tokenizer.tokenize("\n" + "\n".join(corpus[1:]))


@pytest.fixture
def make_oracle(tokenizer, stream):
    def _make(gen_len, prompt_len=0, **kw):
        return OracleDenoiser(tuple(stream[:gen_len]), tokenizer.vocab_size,
                              tokenizer.mask_id, prompt_len, **kw)
    return _make


@pytest.fixture
def noiseless(make_oracle):
    def _make(gen_len, prompt_len=0, mu=10.0):
        return make_oracle(gen_len, prompt_len, mu=mu, gamma=1.0, sigma=0.0, flip_prob=0.0)
    return _make


@pytest.fixture
def start(tokenizer):
    def _start(gen_len, prompt=()):
        return SequenceState.start(list(prompt), gen_len, tokenizer.mask_id)
    return _start
