"""Training: optimizer, label generation, batch engine, model trainers.

Determinism contract: every random decision flows from a seeded generator
derived from (seed, stream, epoch, sample index), so runs with the same
seed and config produce byte-identical checkpoints, and parallel batch
evaluation is bit-identical to serial evaluation (per-sample gradients go
into private buffers and are merged in sample order).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .encoder import EmbedAvgEncoder, QuestionEncoder, Vocabulary, tokenize
from .errors import DataError, NumericsError
from .kb import KnowledgeBase, normalize_alias
from .labeler import LABEL_O, LABEL_SUB, MentionLabeler
from .params import GradBag, Parameter, by_name, sink
from .relation_model import RelationScorer, sample_negative_relations
from .subject_model import (EntityRepr, REPR_TYPEVEC, SubjectScorer,
                            sample_negative_entities)

# rng stream ids; never reorder, they pin checkpoint reproducibility
STREAM_INIT = 1
STREAM_SHUFFLE = 2
STREAM_SAMPLE = 3
MODEL_LABELER = 10
MODEL_RELATION = 11
MODEL_SUBJECT = 12
MODEL_TRANSE = 13


def rng_for(seed: int, *streams: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *map(int, streams)])


class AdagradMomentum:
    """Adaptive per-element step with momentum on the adjusted gradient.

    Update per element: acc += g^2; adj = g / (sqrt(acc) + eps);
    vel = mu * vel + lr * adj; w -= vel. Gradients are zeroed afterwards.
    """

    def __init__(self, params: Sequence[Parameter], lr: float,
                 momentum: float = 0.9, eps: float = 1e-8):
        if not 0.0 <= momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        self.params = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.eps = float(eps)
        self.acc = [np.zeros_like(p.value) for p in self.params]
        self.vel = [np.zeros_like(p.value) for p in self.params]

    def step(self, scale: float = 1.0) -> None:
        for p, acc, vel in zip(self.params, self.acc, self.vel):
            g = p.grad if scale == 1.0 else p.grad * scale
            if not np.all(np.isfinite(g)):
                raise NumericsError(f"non-finite gradient in '{p.name}'")
            acc += g * g
            adj = g / (np.sqrt(acc) + self.eps)
            vel *= self.momentum
            vel += self.lr * adj
            p.value -= vel
            p.zero_grad()


# -- datasets ---------------------------------------------------------------

@dataclass
class TrainingSample:
    question: str
    tokens: list[str]
    subject: int
    relation: int
    object: int | None = None


def load_dataset(path, kb: KnowledgeBase) -> list[TrainingSample]:
    """Read ``question<TAB>subject<TAB>relation[<TAB>object]`` lines."""
    samples = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) not in (3, 4):
                raise DataError(
                    f"{path}:{lineno}: expected 3 or 4 tab-separated fields")
            question, subj_name, rel_name = fields[:3]
            try:
                sid = kb.entity_id(subj_name)
                rid = kb.relation_id(rel_name)
                oid = kb.entity_id(fields[3]) if len(fields) == 4 else None
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if oid is not None and not kb.has_fact(sid, rid, oid):
                raise DataError(
                    f"{path}:{lineno}: triple not present in the KB")
            samples.append(TrainingSample(question, tokenize(question),
                                          sid, rid, oid))
    if not samples:
        raise DataError(f"{path}: dataset is empty")
    return samples


def reverse_link_labels(kb: KnowledgeBase, tokens,
                        subject: int) -> np.ndarray | None:
    """Token labels from matching the subject's aliases against n-grams.

    The longest matching n-gram wins (leftmost on ties); its tokens get
    SUB, everything else O. None when no alias matches.
    """
    aliases = set(kb.aliases_of(subject))
    if not aliases:
        return None
    T = len(tokens)
    for n in range(T, 0, -1):
        for start in range(0, T - n + 1):
            gram = normalize_alias(" ".join(tokens[start:start + n]))
            if gram in aliases:
                labels = np.full(T, LABEL_O, dtype=np.int64)
                labels[start:start + n] = LABEL_SUB
                return labels
    return None


def build_labeled_dataset(kb: KnowledgeBase, samples: Iterable[TrainingSample]):
    """Labeled rows for every linkable sample, plus the match rate."""
    rows = []
    total = 0
    for sample in samples:
        total += 1
        labels = reverse_link_labels(kb, sample.tokens, sample.subject)
        if labels is not None:
            rows.append((sample.tokens, labels))
    rate = len(rows) / total if total else 0.0
    return rows, rate


# -- batch engine ------------------------------------------------------------

def _run_epochs(n: int, epochs: int, batch_size: int, seed: int,
                model_stream: int, workers: int,
                params_map: dict[str, Parameter],
                optimizer: AdagradMomentum,
                sample_loss: Callable[[int, np.random.Generator, GradBag], float],
                ) -> list[float]:
    """Shuffled mini-batch epochs; returns the mean-loss curve."""

    def one_sample(epoch: int, idx: int):
        rng = rng_for(seed, STREAM_SAMPLE, model_stream, epoch, idx)
        bag = GradBag()
        loss = sample_loss(idx, rng, bag)
        return loss, bag

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    curve = []
    try:
        for epoch in range(epochs):
            order = rng_for(seed, STREAM_SHUFFLE, model_stream,
                            epoch).permutation(n)
            total = 0.0
            for start in range(0, n, batch_size):
                batch = order[start:start + batch_size]
                if pool is None:
                    results = [one_sample(epoch, int(i)) for i in batch]
                else:
                    futures = [pool.submit(one_sample, epoch, int(i))
                               for i in batch]
                    results = [f.result() for f in futures]
                for loss, bag in results:
                    total += loss
                    bag.merge_into(params_map)
                optimizer.step(scale=1.0 / len(batch))
            mean = total / n
            if not np.isfinite(mean):
                raise NumericsError(f"training diverged at epoch {epoch}")
            curve.append(mean)
    finally:
        if pool is not None:
            pool.shutdown()
    return curve


def save_loss_curve(path, curve: Sequence[float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,meanLoss\n")
        for epoch, loss in enumerate(curve):
            fh.write(f"{epoch},{loss:.10g}\n")


# -- model trainers ----------------------------------------------------------

def train_labeler(rows, vocab: Vocabulary, hyper, seed: int,
                  workers: int = 1):
    """Fit the mention labeler on (tokens, labels) rows."""
    if not rows:
        raise DataError("labeler dataset is empty")
    rng = rng_for(seed, STREAM_INIT, MODEL_LABELER)
    model = MentionLabeler.create("labeler", vocab, hyper.embedding_dim,
                                  hyper.hidden_size, rng, hyper.num_layers,
                                  hyper.dropout, hyper.init_range)
    params = model.parameters()
    optimizer = AdagradMomentum(params, hyper.lr_labeler, hyper.momentum)

    def sample_loss(idx: int, rng: np.random.Generator, bag: GradBag) -> float:
        tokens, labels = rows[idx]
        return model.nll_loss(tokens, labels, grads=bag, training=True,
                              rng=rng)

    curve = _run_epochs(len(rows), hyper.epochs, hyper.batch_size, seed,
                        MODEL_LABELER, workers, by_name(params), optimizer,
                        sample_loss)
    return model, curve


def make_relation_encoder(kind: str, vocab: Vocabulary, hyper,
                          rng: np.random.Generator,
                          embedding_table: np.ndarray | None = None):
    if kind == "bigru":
        return QuestionEncoder.create(
            "relation.encoder", vocab, hyper.embedding_dim, hyper.hidden_size,
            hyper.relation_dim, squash=False, rng=rng,
            num_layers=hyper.num_layers, dropout_rate=hyper.dropout,
            init_range=hyper.init_range, embedding_table=embedding_table)
    if kind == "avg":
        return EmbedAvgEncoder.create("relation.encoder", vocab,
                                      hyper.embedding_dim, rng,
                                      hyper.init_range, embedding_table)
    raise ValueError(f"unknown encoder kind '{kind}'")


def train_relation_model(samples: Sequence[TrainingSample],
                         kb: KnowledgeBase, vocab: Vocabulary, hyper,
                         seed: int, workers: int = 1,
                         encoder_kind: str = "bigru", forced_hubs=(),
                         embedding_table: np.ndarray | None = None):
    """Fit the relation scorer with margin loss over sampled negatives."""
    if not samples:
        raise DataError("relation dataset is empty")
    rng = rng_for(seed, STREAM_INIT, MODEL_RELATION)
    encoder = make_relation_encoder(encoder_kind, vocab, hyper, rng,
                                    embedding_table)
    model = RelationScorer.create("relation", encoder, kb.num_relations, rng,
                                  hyper.init_range)
    params = model.parameters()
    lr = hyper.lr_embed_avg if encoder_kind == "avg" else hyper.lr_relation
    optimizer = AdagradMomentum(params, lr, hyper.momentum)

    def sample_loss(idx: int, rng: np.random.Generator, bag: GradBag) -> float:
        sample = samples[idx]
        negatives = sample_negative_relations(kb, sample.relation,
                                              sample.subject, hyper.m_r, rng,
                                              forced_hubs)
        return model.hinge_loss(sample.tokens, sample.relation, negatives,
                                hyper.gamma_r, grads=bag, training=True,
                                rng=rng)

    curve = _run_epochs(len(samples), hyper.epochs, hyper.batch_size, seed,
                        MODEL_RELATION, workers, by_name(params), optimizer,
                        sample_loss)
    return model, curve


def train_subject_model(samples: Sequence[TrainingSample], kb: KnowledgeBase,
                        vocab: Vocabulary, hyper, seed: int,
                        workers: int = 1, repr_mode: str = REPR_TYPEVEC,
                        pretrained_table: np.ndarray | None = None,
                        freeze_entities: bool = False):
    """Fit the subject scorer (margin loss, or per-type BCE for typevec)."""
    if not samples:
        raise DataError("subject dataset is empty")
    rng = rng_for(seed, STREAM_INIT, MODEL_SUBJECT)
    typevec = repr_mode == REPR_TYPEVEC
    if typevec:
        repr_ = EntityRepr.type_vector(kb)
    elif repr_mode == "pretrained":
        if pretrained_table is None:
            raise ValueError("pretrained mode needs an entity table")
        repr_ = EntityRepr.pretrained("subject", pretrained_table,
                                      trainable=not freeze_entities)
    else:
        repr_ = EntityRepr.random("subject", kb.num_entities,
                                  hyper.entity_dim, rng, hyper.init_range)
    encoder = QuestionEncoder.create(
        "subject.encoder", vocab, hyper.embedding_dim, hyper.hidden_size,
        repr_.dim, squash=typevec, rng=rng, num_layers=hyper.num_layers,
        dropout_rate=hyper.dropout, init_range=hyper.init_range)
    model = SubjectScorer(encoder, repr_, hyper.alpha)
    params = model.parameters()
    lr = hyper.lr_typevec_encoder if typevec else hyper.lr_subject
    optimizer = AdagradMomentum(params, lr, hyper.momentum)

    def sample_loss(idx: int, rng: np.random.Generator, bag: GradBag) -> float:
        sample = samples[idx]
        if typevec:
            return model.type_bce_loss(sample.tokens, sample.subject,
                                       grads=bag, training=True, rng=rng)
        negatives = sample_negative_entities(kb, sample.subject, hyper.m_s,
                                             rng)
        return model.hinge_loss(kb, sample.tokens, sample.subject,
                                sample.relation, negatives, hyper.gamma_s,
                                grads=bag, training=True, rng=rng)

    curve = _run_epochs(len(samples), hyper.epochs, hyper.batch_size, seed,
                        MODEL_SUBJECT, workers, by_name(params), optimizer,
                        sample_loss)
    return model, curve


# -- translation-based KB embedding pretraining ------------------------------

def transe_loss(ent: Parameter, rel: Parameter, pos: tuple[int, int, int],
                neg: tuple[int, int, int], margin: float,
                grads: GradBag | None = None, accumulate: bool = True) -> float:
    """Margin loss between a true triple and a corrupted one.

    Distance is squared Euclidean ||E(s) + E(r) - E(o)||^2.
    """
    s, r, o = pos
    s2, r2, o2 = neg
    diff_p = ent.value[s] + rel.value[r] - ent.value[o]
    diff_n = ent.value[s2] + rel.value[r2] - ent.value[o2]
    loss = margin + float(diff_p @ diff_p) - float(diff_n @ diff_n)
    if loss <= 0.0:
        return 0.0
    if accumulate:
        e_grad = sink(ent, grads)
        r_grad = sink(rel, grads)
        e_grad[s] += 2.0 * diff_p
        e_grad[o] -= 2.0 * diff_p
        r_grad[r] += 2.0 * diff_p
        e_grad[s2] -= 2.0 * diff_n
        e_grad[o2] += 2.0 * diff_n
        r_grad[r2] -= 2.0 * diff_n
    return loss


def transe_pretrain(kb: KnowledgeBase, dim: int, epochs: int,
                    lr: float = 0.01, margin: float = 1.0,
                    seed: int = 0):
    """Train entity/relation embeddings so E(s) + E(r) tracks E(o).

    Per-fact SGD with one uniformly corrupted subject-or-object negative;
    entity rows are renormalized to unit length after every epoch.
    Returns (entity_table, relation_table, loss_curve).
    """
    if kb.num_facts < 1:
        raise DataError("cannot pretrain embeddings on an empty KB")
    rng = rng_for(seed, STREAM_INIT, MODEL_TRANSE)
    n_e, n_r = kb.num_entities, kb.num_relations
    bound = 6.0 / np.sqrt(dim)
    ent = rng.uniform(-bound, bound, size=(n_e, dim))
    rel = rng.uniform(-bound, bound, size=(n_r, dim))
    _renorm_rows(ent)
    facts = np.array(kb.facts, dtype=np.int64)
    curve = []
    for epoch in range(epochs):
        ep_rng = rng_for(seed, STREAM_SAMPLE, MODEL_TRANSE, epoch)
        order = ep_rng.permutation(len(facts))
        total = 0.0
        for i in order:
            s, r, o = (int(v) for v in facts[i])
            if ep_rng.random() < 0.5:
                s2 = _corrupt(ep_rng, n_e, s)
                neg = (s2, r, o)
            else:
                o2 = _corrupt(ep_rng, n_e, o)
                neg = (s, r, o2)
            diff_p = ent[s] + rel[r] - ent[o]
            diff_n = ent[neg[0]] + rel[r] - ent[neg[2]]
            loss = margin + float(diff_p @ diff_p) - float(diff_n @ diff_n)
            if loss > 0.0:
                total += loss
                step = {}
                _acc(step, ("e", s), 2.0 * diff_p)
                _acc(step, ("e", o), -2.0 * diff_p)
                _acc(step, ("r", r), 2.0 * diff_p)
                _acc(step, ("e", neg[0]), -2.0 * diff_n)
                _acc(step, ("e", neg[2]), 2.0 * diff_n)
                _acc(step, ("r", r), -2.0 * diff_n)
                for (kind, idx), g in step.items():
                    if kind == "e":
                        ent[idx] -= lr * g
                    else:
                        rel[idx] -= lr * g
        _renorm_rows(ent)
        curve.append(total / len(facts))
    return ent, rel, curve


def _corrupt(rng: np.random.Generator, n: int, avoid: int) -> int:
    if n <= 1:
        return avoid
    draw = int(rng.integers(0, n - 1))
    return draw + (1 if draw >= avoid else 0)


def _acc(store: dict, key, value) -> None:
    if key in store:
        store[key] = store[key] + value
    else:
        store[key] = value


def _renorm_rows(table: np.ndarray) -> None:
    norms = np.linalg.norm(table, axis=1, keepdims=True)
    np.divide(table, norms, out=table, where=norms > 0)
