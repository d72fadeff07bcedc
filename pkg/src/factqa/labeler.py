"""Subject-mention labeling: BiGRU emissions with a linear-chain CRF.

Two labels per token: O (index 0) and SUB (index 1). The chain score of a
labeling y is

    score(y) = sum_t emit[t, y_t] + sum_{t>=2} trans[y_{t-1}, y_t]

with no start/stop terms. The partition function uses the log-space
forward recursion; decoding is Viterbi with ties broken toward O.
"""

from __future__ import annotations

import numpy as np

from .encoder import Vocabulary
from .errors import DataError
from .gru import BiGruStack
from .numutil import logsumexp
from .params import DTYPE, GradBag, Parameter, sink, uniform_init

LABEL_O = 0
LABEL_SUB = 1
NUM_LABELS = 2
LABEL_NAMES = ("O", "SUB")


# -- pure CRF computations on (T, 2) emission and (2, 2) transition arrays --

def crf_sequence_score(emit: np.ndarray, trans: np.ndarray, labels) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    T = emit.shape[0]
    if labels.shape != (T,):
        raise ValueError(f"labels length {labels.shape} != sequence length {T}")
    score = float(emit[np.arange(T), labels].sum())
    if T > 1:
        score += float(trans[labels[:-1], labels[1:]].sum())
    return score

def crf_log_partition(emit: np.ndarray, trans: np.ndarray) -> float:
    alpha = emit[0].astype(DTYPE)
    for t in range(1, emit.shape[0]):
        # alpha[j] = emit[t,j] + logsumexp_i(alpha[i] + trans[i,j])
        stacked = alpha[:, None] + trans
        m = stacked.max(axis=0)
        alpha = emit[t] + m + np.log(np.exp(stacked - m).sum(axis=0))
    return logsumexp(alpha)

def crf_viterbi(emit: np.ndarray, trans: np.ndarray):
    """Best labeling and its score; argmax ties resolve to the O label."""
    T = emit.shape[0]
    delta = emit[0].astype(DTYPE)
    back = np.zeros((T, NUM_LABELS), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, None] + trans  # [prev, next]
        best_prev = cand.argmax(axis=0)  # first (O) wins ties
        back[t] = best_prev
        delta = emit[t] + cand[best_prev, np.arange(NUM_LABELS)]
    last = int(delta.argmax())
    labels = np.empty(T, dtype=np.int64)
    labels[-1] = last
    for t in range(T - 1, 0, -1):
        labels[t - 1] = back[t, labels[t]]
    return labels, float(delta[last])

def crf_marginals(emit: np.ndarray, trans: np.ndarray):
    """Node marginals (T,2), edge marginals (T-1,2,2), and log partition."""
    T = emit.shape[0]
    log_alpha = np.empty((T, NUM_LABELS), dtype=DTYPE)
    log_beta = np.empty((T, NUM_LABELS), dtype=DTYPE)
    log_alpha[0] = emit[0]
    for t in range(1, T):
        stacked = log_alpha[t - 1][:, None] + trans
        m = stacked.max(axis=0)
        log_alpha[t] = emit[t] + m + np.log(np.exp(stacked - m).sum(axis=0))
    log_beta[-1] = 0.0
    for t in range(T - 2, -1, -1):
        stacked = trans + (emit[t + 1] + log_beta[t + 1])[None, :]
        m = stacked.max(axis=1)
        log_beta[t] = m + np.log(np.exp(stacked - m[:, None]).sum(axis=1))
    log_z = logsumexp(log_alpha[-1])
    node = np.exp(log_alpha + log_beta - log_z)
    edge = np.empty((max(T - 1, 0), NUM_LABELS, NUM_LABELS), dtype=DTYPE)
    for t in range(T - 1):
        log_edge = (log_alpha[t][:, None] + trans
                    + (emit[t + 1] + log_beta[t + 1])[None, :] - log_z)
        edge[t] = np.exp(log_edge)
    return node, edge, log_z


def extract_mention(labels, tokens=None):
    """Longest run of SUB labels as a (start, stop) span; leftmost on ties.

    Returns None when no token is labeled SUB. When ``tokens`` is given,
    returns (start, stop, mention_string) instead.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if tokens is not None and len(tokens) != labels.shape[0]:
        raise ValueError("labels and tokens must have equal length")
    best = None
    start = None
    for i, lab in enumerate(labels):
        if lab == LABEL_SUB and start is None:
            start = i
        elif lab != LABEL_SUB and start is not None:
            if best is None or i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    if start is not None:
        i = labels.shape[0]
        if best is None or i - start > best[1] - best[0]:
            best = (start, i)
    if best is None:
        return None
    if tokens is None:
        return best
    return best[0], best[1], " ".join(tokens[best[0]:best[1]])


class MentionLabeler:
    """Token labeler: embedding, two-layer BiGRU, emission head, CRF."""

    def __init__(self, vocab: Vocabulary, embedding: Parameter,
                 stack: BiGruStack, emit_w: Parameter, emit_b: Parameter,
                 trans: Parameter):
        self.vocab = vocab
        self.embedding = embedding
        self.stack = stack
        self.emit_w = emit_w
        self.emit_b = emit_b
        self.trans = trans

    @classmethod
    def create(cls, name: str, vocab: Vocabulary, d_emb: int, d_h: int,
               rng: np.random.Generator, num_layers: int = 2,
               dropout_rate: float = 0.5,
               init_range: float = 0.08) -> "MentionLabeler":
        embedding = uniform_init(f"{name}.embedding",
                                 (vocab.table_rows, d_emb), rng, init_range)
        stack = BiGruStack.create(f"{name}.gru", d_emb, d_h, num_layers, rng,
                                  dropout_rate, init_range)
        emit_w = uniform_init(f"{name}.emit_w", (2 * d_h, NUM_LABELS), rng,
                              init_range)
        emit_b = uniform_init(f"{name}.emit_b", (NUM_LABELS,), rng, init_range)
        trans = uniform_init(f"{name}.trans", (NUM_LABELS, NUM_LABELS), rng,
                             init_range)
        return cls(vocab, embedding, stack, emit_w, emit_b, trans)

    def parameters(self) -> list[Parameter]:
        return [self.embedding, *self.stack.parameters(),
                self.emit_w, self.emit_b, self.trans]

    def emissions(self, tokens, training: bool = False,
                  rng: np.random.Generator | None = None):
        if not tokens:
            raise ValueError("cannot label an empty token list")
        idxs = self.vocab.encode(tokens)
        X = self.embedding.value[idxs]
        hidden_seq, _, stack_cache = self.stack.forward(X, training, rng)
        emit = hidden_seq @ self.emit_w.value + self.emit_b.value
        return emit, (idxs, hidden_seq, stack_cache)

    def _emissions_backward(self, cache, d_emit, grads: GradBag | None) -> None:
        idxs, hidden_seq, stack_cache = cache
        sink(self.emit_w, grads)[...] += hidden_seq.T @ d_emit
        sink(self.emit_b, grads)[...] += d_emit.sum(axis=0)
        d_hidden = d_emit @ self.emit_w.value.T
        dX = self.stack.backward(stack_cache, d_hidden_seq=d_hidden, grads=grads)
        np.add.at(sink(self.embedding, grads), idxs, dX)

    def sequence_score(self, tokens, labels) -> float:
        emit, _ = self.emissions(tokens)
        return crf_sequence_score(emit, self.trans.value, labels)

    def log_partition(self, tokens) -> float:
        emit, _ = self.emissions(tokens)
        return crf_log_partition(emit, self.trans.value)

    def viterbi(self, tokens):
        emit, _ = self.emissions(tokens)
        return crf_viterbi(emit, self.trans.value)

    def predict_mention(self, tokens):
        """Decode and extract the mention span; None when all-O."""
        labels, _ = self.viterbi(tokens)
        return extract_mention(labels, tokens)

    def nll_loss(self, tokens, gold_labels, grads: GradBag | None = None,
                 training: bool = False,
                 rng: np.random.Generator | None = None,
                 accumulate: bool = True) -> float:
        """Negative log-likelihood of the gold labeling under the CRF."""
        gold = np.asarray(gold_labels, dtype=np.int64)
        emit, cache = self.emissions(tokens, training, rng)
        T = emit.shape[0]
        if gold.shape != (T,):
            raise ValueError("gold labels must match the token count")
        trans = self.trans.value
        node, edge, log_z = crf_marginals(emit, trans)
        gold_score = crf_sequence_score(emit, trans, gold)
        loss = log_z - gold_score
        if accumulate:
            d_emit = node.copy()
            d_emit[np.arange(T), gold] -= 1.0
            d_trans = edge.sum(axis=0)
            for t in range(1, T):
                d_trans[gold[t - 1], gold[t]] -= 1.0
            sink(self.trans, grads)[...] += d_trans
            self._emissions_backward(cache, d_emit, grads)
        return loss


def save_labeled_file(path, rows) -> None:
    """Write ``token token ...<TAB>label label ...`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for tokens, labels in rows:
            names = " ".join(LABEL_NAMES[l] for l in labels)
            fh.write(" ".join(tokens) + "\t" + names + "\n")


def load_labeled_file(path) -> list[tuple[list[str], np.ndarray]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 tab-separated fields")
            tokens = parts[0].split(" ")
            names = parts[1].split(" ")
            if len(tokens) != len(names):
                raise DataError(f"{path}:{lineno}: token/label count mismatch")
            try:
                labels = np.array([LABEL_NAMES.index(n) for n in names],
                                  dtype=np.int64)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad label: {exc}") from exc
            rows.append((tokens, labels))
    return rows
