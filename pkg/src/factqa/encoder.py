"""Question encoders.

``QuestionEncoder`` embeds tokens, runs a stacked BiGRU, and projects the
final states to a fixed-size vector (optionally squashed through a sigmoid
when the output must live in (0,1), e.g. for type-membership scoring).
``EmbedAvgEncoder`` is the bag-of-embeddings baseline.

Each encoder owns its embedding table; tables are never shared between
models.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import DataError
from .gru import BiGruStack
from .numutil import sigmoid
from .params import DTYPE, GradBag, Parameter, sink, uniform_init

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

UNK_INDEX = 0


def tokenize(question: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation; punctuation dropped."""
    tokens = _TOKEN_RE.findall(question.lower())
    if not tokens:
        raise ValueError("question has no tokens")
    return tokens


class Vocabulary:
    """Token -> index map; index 0 is reserved for unknown tokens."""

    def __init__(self, tokens: list[str]):
        self._index: dict[str, int] = {}
        for tok in tokens:
            if tok not in self._index:
                self._index[tok] = len(self._index) + 1
        self._tokens = list(self._index)

    @classmethod
    def from_corpus(cls, token_seqs) -> "Vocabulary":
        flat = [tok for seq in token_seqs for tok in seq]
        return cls(flat)

    @property
    def size(self) -> int:
        """Number of known tokens (excluding the unknown slot)."""
        return len(self._tokens)

    @property
    def table_rows(self) -> int:
        """Rows an embedding table needs: known tokens plus the unk row."""
        return len(self._tokens) + 1

    def index(self, token: str) -> int:
        return self._index.get(token, UNK_INDEX)

    def encode(self, tokens) -> np.ndarray:
        return np.array([self.index(t) for t in tokens], dtype=np.int64)

    def tokens(self) -> list[str]:
        return list(self._tokens)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self._tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            return cls([line.rstrip("\n") for line in fh if line.rstrip("\n")])


def load_word_embeddings(path, vocab: Vocabulary, dim: int,
                         rng: np.random.Generator,
                         init_range: float = 0.08) -> np.ndarray:
    """Embedding table initialized from a text file of pretrained vectors.

    File format: one token per line, ``token v1 v2 ... v_dim`` separated by
    spaces. Tokens absent from the file (and the unk row) stay randomly
    initialized.
    """
    table = rng.uniform(-init_range, init_range, size=(vocab.table_rows, dim))
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise DataError(
                    f"{path}:{lineno}: expected token + {dim} values, "
                    f"got {len(parts) - 1}")
            idx = vocab.index(parts[0])
            if idx != UNK_INDEX:
                table[idx] = [float(v) for v in parts[1:]]
    return table


class QuestionEncoder:
    """Embedding + two-layer BiGRU + linear projection (+ optional sigmoid)."""

    def __init__(self, vocab: Vocabulary, embedding: Parameter,
                 stack: BiGruStack, proj_w: Parameter, proj_b: Parameter,
                 squash: bool):
        self.vocab = vocab
        self.embedding = embedding
        self.stack = stack
        self.proj_w = proj_w
        self.proj_b = proj_b
        self.squash = squash

    @classmethod
    def create(cls, name: str, vocab: Vocabulary, d_emb: int, d_h: int,
               d_out: int, squash: bool, rng: np.random.Generator,
               num_layers: int = 2, dropout_rate: float = 0.5,
               init_range: float = 0.08,
               embedding_table: np.ndarray | None = None) -> "QuestionEncoder":
        if embedding_table is not None:
            embedding = Parameter(f"{name}.embedding", embedding_table)
        else:
            embedding = uniform_init(f"{name}.embedding",
                                     (vocab.table_rows, d_emb), rng, init_range)
        stack = BiGruStack.create(f"{name}.gru", d_emb, d_h, num_layers, rng,
                                  dropout_rate, init_range)
        proj_w = uniform_init(f"{name}.proj_w", (2 * d_h, d_out), rng, init_range)
        proj_b = uniform_init(f"{name}.proj_b", (d_out,), rng, init_range)
        return cls(vocab, embedding, stack, proj_w, proj_b, squash)

    @property
    def d_out(self) -> int:
        return self.proj_w.value.shape[1]

    def parameters(self) -> list[Parameter]:
        return [self.embedding, *self.stack.parameters(),
                self.proj_w, self.proj_b]

    def encode_with_cache(self, tokens, training: bool = False,
                          rng: np.random.Generator | None = None):
        if not tokens:
            raise ValueError("cannot encode an empty token list")
        idxs = self.vocab.encode(tokens)
        X = self.embedding.value[idxs]
        hidden_seq, final, stack_cache = self.stack.forward(X, training, rng)
        pre = final @ self.proj_w.value + self.proj_b.value
        out = sigmoid(pre) if self.squash else pre
        cache = (idxs, final, stack_cache, out)
        return out, cache

    def encode(self, tokens, training: bool = False,
               rng: np.random.Generator | None = None) -> np.ndarray:
        out, _ = self.encode_with_cache(tokens, training, rng)
        return out

    def backward(self, cache, d_out, grads: GradBag | None = None,
                 presquash: bool = False) -> None:
        """Accumulate gradients of a scalar loss given d(loss)/d(output).

        With ``presquash=True`` the incoming gradient is taken with respect
        to the pre-sigmoid projection (used by losses that fuse the sigmoid
        for numerical stability).
        """
        idxs, final, stack_cache, out = cache
        d_out = np.asarray(d_out, dtype=DTYPE)
        if self.squash and not presquash:
            d_pre = d_out * out * (1.0 - out)
        else:
            d_pre = d_out
        sink(self.proj_w, grads)[...] += np.outer(final, d_pre)
        sink(self.proj_b, grads)[...] += d_pre
        d_final = self.proj_w.value @ d_pre
        dX = self.stack.backward(stack_cache, d_final=d_final, grads=grads)
        emb_grad = sink(self.embedding, grads)
        np.add.at(emb_grad, idxs, dX)


class EmbedAvgEncoder:
    """Question representation as the mean of its token embeddings."""

    def __init__(self, vocab: Vocabulary, embedding: Parameter):
        self.vocab = vocab
        self.embedding = embedding

    @classmethod
    def create(cls, name: str, vocab: Vocabulary, d_emb: int,
               rng: np.random.Generator, init_range: float = 0.08,
               embedding_table: np.ndarray | None = None) -> "EmbedAvgEncoder":
        if embedding_table is not None:
            embedding = Parameter(f"{name}.embedding", embedding_table)
        else:
            embedding = uniform_init(f"{name}.embedding",
                                     (vocab.table_rows, d_emb), rng, init_range)
        return cls(vocab, embedding)

    @property
    def d_out(self) -> int:
        return self.embedding.value.shape[1]

    def parameters(self) -> list[Parameter]:
        return [self.embedding]

    def encode_with_cache(self, tokens, training: bool = False,
                          rng: np.random.Generator | None = None):
        if not tokens:
            raise ValueError("cannot encode an empty token list")
        idxs = self.vocab.encode(tokens)
        out = self.embedding.value[idxs].mean(axis=0)
        return out, idxs

    def encode(self, tokens, training: bool = False,
               rng: np.random.Generator | None = None) -> np.ndarray:
        out, _ = self.encode_with_cache(tokens, training, rng)
        return out

    def backward(self, cache, d_out, grads: GradBag | None = None,
                 presquash: bool = False) -> None:
        idxs = cache
        if presquash:
            raise ValueError("EmbedAvgEncoder has no squash stage")
        d_row = np.asarray(d_out, dtype=DTYPE) / len(idxs)
        emb_grad = sink(self.embedding, grads)
        np.add.at(emb_grad, idxs, d_row)


def embed_avg_encode(embedding: Parameter, vocab: Vocabulary, tokens) -> np.ndarray:
    """Functional form of the embedding-average encoder."""
    return EmbedAvgEncoder(vocab, embedding).encode(tokens)
