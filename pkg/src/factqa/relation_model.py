"""Relation scoring: how well a question matches each KB relation.

The score is a dot product between the question encoding and a trainable
relation embedding row. Probabilities are softmax-normalized over whatever
candidate set the caller supplies; training uses a margin (hinge) loss
against sampled negative relations.
"""

from __future__ import annotations

import logging

import numpy as np

from .kb import KnowledgeBase
from .numutil import log_softmax
from .params import GradBag, Parameter, sink, uniform_init

log = logging.getLogger(__name__)


class RelationScorer:
    """Question encoder + one embedding row per relation."""

    def __init__(self, encoder, rel_embedding: Parameter):
        self.encoder = encoder
        self.rel_embedding = rel_embedding
        if rel_embedding.value.shape[1] != encoder.d_out:
            raise ValueError("relation embedding dim must equal encoder output dim")

    @classmethod
    def create(cls, name: str, encoder, num_relations: int,
               rng: np.random.Generator, init_range: float = 0.08) -> "RelationScorer":
        table = uniform_init(f"{name}.rel_embedding",
                             (num_relations, encoder.d_out), rng, init_range)
        return cls(encoder, table)

    @property
    def num_relations(self) -> int:
        return self.rel_embedding.value.shape[0]

    def parameters(self) -> list[Parameter]:
        return [*self.encoder.parameters(), self.rel_embedding]

    def _check_relation(self, rid: int) -> None:
        if not 0 <= rid < self.num_relations:
            raise KeyError(f"unknown relation id {rid}")

    def score(self, tokens, rid: int) -> float:
        """Similarity between the question and one relation."""
        self._check_relation(rid)
        f = self.encoder.encode(tokens)
        return float(f @ self.rel_embedding.value[rid])

    def scores(self, tokens, rids) -> np.ndarray:
        """Scores for several relations with a single encoder pass."""
        rids = list(rids)
        for rid in rids:
            self._check_relation(rid)
        f = self.encoder.encode(tokens)
        return self.rel_embedding.value[rids] @ f

    def log_probs(self, tokens, candidates) -> dict[int, float]:
        """Log-probabilities softmax-normalized over the candidate set."""
        rids = sorted(set(candidates))
        if not rids:
            raise ValueError("empty candidate set")
        logp = log_softmax(self.scores(tokens, rids))
        return dict(zip(rids, logp.tolist()))

    def hinge_loss(self, tokens, gold: int, negatives, margin: float,
                   grads: GradBag | None = None, training: bool = False,
                   rng: np.random.Generator | None = None,
                   accumulate: bool = True) -> float:
        """Margin loss: sum_j max(0, margin - v(gold) + v(neg_j)).

        When ``accumulate`` the gradients flow into the relation table and
        the encoder (into ``grads`` buffers if given).
        """
        negatives = list(negatives)
        if gold in negatives:
            raise ValueError("gold relation listed among negatives")
        self._check_relation(gold)
        for rid in negatives:
            self._check_relation(rid)
        f, cache = self.encoder.encode_with_cache(tokens, training, rng)
        table = self.rel_embedding.value
        v_gold = float(f @ table[gold])
        if not negatives:
            return 0.0
        v_neg = table[negatives] @ f
        terms = margin - v_gold + v_neg
        active = terms > 0.0
        loss = float(terms[active].sum())
        if accumulate and active.any():
            n_active = int(active.sum())
            emb_grad = sink(self.rel_embedding, grads)
            emb_grad[gold] += -n_active * f
            np.add.at(emb_grad, np.asarray(negatives)[active], f)
            d_f = table[np.asarray(negatives)[active]].sum(axis=0) \
                - n_active * table[gold]
            self.encoder.backward(cache, d_f, grads)
        return loss


def sample_negative_relations(kb: KnowledgeBase, gold: int, subject: int,
                              count: int, rng: np.random.Generator,
                              forced=()) -> list[int]:
    """Relations the subject does NOT have, sampled without replacement.

    Relations in ``forced`` are always included when eligible (hubs that
    would otherwise dominate by frequency). Returns fewer than ``count``
    when the KB has too few eligible relations.
    """
    connected = kb.adjacency(subject)
    connected.add(gold)
    forced_eligible = [r for r in forced if r not in connected]
    pool = np.array([r for r in range(kb.num_relations)
                     if r not in connected and r not in forced_eligible],
                    dtype=np.int64)
    take = min(count - len(forced_eligible), len(pool))
    if len(forced_eligible) + max(take, 0) < count:
        log.debug("negative-relation shortfall: wanted %d, eligible %d",
                  count, len(forced_eligible) + len(pool))
    sampled = rng.choice(pool, size=max(take, 0), replace=False) if take > 0 else []
    return forced_eligible + [int(r) for r in sampled]
