import time

import numpy as np
import pytest
from hypothesis import settings

from factqa.config import Hyperparams, RunConfig
from factqa.kb import KnowledgeBase
from factqa.pipeline import train_all
from factqa.toydata import generate_toy_corpus, write_toy_corpus
from factqa.training import load_dataset

settings.register_profile("suite", max_examples=50, deadline=None,
                          derandomize=True)
settings.load_profile("suite")


def scaled_hyper(**overrides) -> Hyperparams:
    """Desk-scale capacity with the published optimizer settings."""
    base = dict(embedding_dim=64, hidden_size=64, relation_dim=64,
                entity_dim=64, batch_size=32, epochs=40)
    base.update(overrides)
    return Hyperparams(**base)


@pytest.fixture
def single_fact_kb() -> KnowledgeBase:
    return KnowledgeBase.from_tables(
        facts=[("HarryPotter", "character_created_by", "JKRowling")],
        aliases=[("HarryPotter", "HarryPotter"),
                 ("HarryPotter", "harry potter"),
                 ("JKRowling", "JKRowling"),
                 ("JKRowling", "jk rowling")],
        types=[("HarryPotter", "character"),
               ("JKRowling", "person"), ("JKRowling", "author")],
    )


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    corpus = generate_toy_corpus(seed=0)
    paths = write_toy_corpus(corpus, out)
    return paths


@pytest.fixture(scope="session")
def toy_kb(toy_dir) -> KnowledgeBase:
    return KnowledgeBase.load(toy_dir["triples"], toy_dir["aliases"],
                              toy_dir["types"])


@pytest.fixture(scope="session")
def toy_samples(toy_dir, toy_kb):
    return {
        "train": load_dataset(toy_dir["train"], toy_kb),
        "test": load_dataset(toy_dir["test"], toy_kb),
    }


@pytest.fixture(scope="session")
def trained_pipeline(toy_dir, toy_kb, toy_samples, tmp_path_factory):
    """Full training run used by the end-to-end acceptance criteria."""
    ckpt = tmp_path_factory.mktemp("ckpt")
    config = RunConfig(
        kb_triples=toy_dir["triples"], kb_aliases=toy_dir["aliases"],
        kb_types=toy_dir["types"], dataset=toy_dir["train"],
        checkpoint_dir=str(ckpt), entity_repr="typevec", encoder="bigru",
        seed=0, workers=1, hyper=scaled_hyper(),
    )
    start = time.monotonic()
    result = train_all(config, toy_kb, toy_samples["train"])
    elapsed = time.monotonic() - start
    result["elapsed"] = elapsed
    result["config"] = config
    result["checkpoint_dir"] = str(ckpt)
    return result


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
