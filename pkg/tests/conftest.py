import json

import numpy as np
import pytest

from opinionrec.dcnn import DcnnConfig, DcnnModel, Sample
from opinionrec.synthetic import write_bundle


def fixture_config(L=12):
    """Small network used by the gradient checks: d_w=8, 8+8 word and 4+4 POS filters."""
    return DcnnConfig(word_dim=8, word_filters=(8, 8), pos_filters=(4, 4), widths=(5, 3),
                      dropout=0.5, seq_len=L)


def random_samples(n, L, word_dim, seed=0, labeled=True):
    rng = np.random.default_rng(seed)
    out = []
    tags = ("B", "I", "O")
    for _ in range(n):
        length = int(rng.integers(3, L + 1))
        word = np.zeros((L, word_dim))
        word[:length] = rng.normal(size=(length, word_dim))
        pos = np.zeros((L, 45))
        pos[np.arange(length), rng.integers(0, 45, length)] = 1.0
        bio = [tags[i] for i in rng.integers(0, 3, length)]
        label = int(rng.integers(0, 2)) if labeled else None
        out.append(Sample(word, pos, length, bio, label))
    return out


@pytest.fixture
def grad_fixture():
    cfg = fixture_config()
    model = DcnnModel(cfg, seed=3)
    return model, random_samples(4, cfg.seq_len, cfg.word_dim, seed=5)


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory):
    """A 120-review planted bundle with a tiny network, for fast CLI runs."""
    paths = write_bundle(tmp_path_factory.mktemp("bundle"), n_reviews=120)
    cfg = json.loads(paths["config"].read_text())
    cfg.update(epochs=2, word_filters=[8, 8], pos_filters=[4, 4], svd_rank=5, mf_epochs=3,
               cp_iters=30)
    paths["config"].write_text(json.dumps(cfg, indent=2) + "\n")
    return paths


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
