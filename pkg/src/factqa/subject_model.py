"""Subject scoring: which entity the question is about, given a relation.

The score combines a context term (question encoding dotted with an entity
representation) and a structural term: ``alpha`` times an indicator that
the entity actually has the candidate relation.

Entity representations come in three flavors:
  * random      - trainable table, randomly initialized
  * pretrained  - table initialized from translation-based KB embeddings,
                  optionally frozen
  * typevec     - fixed binary bag-of-types vectors from the KB (the
                  encoder output is sigmoid-squashed to match)
"""

from __future__ import annotations

import numpy as np

from .kb import KnowledgeBase
from .params import GradBag, Parameter, sink, uniform_init

REPR_RANDOM = "random"
REPR_PRETRAINED = "pretrained"
REPR_TYPEVEC = "typevec"

BCE_CLAMP = 1e-7


class EntityRepr:
    """Entity vector lookup for one of the three representation modes."""

    def __init__(self, mode: str, table: Parameter | None = None,
                 kb: KnowledgeBase | None = None, trainable: bool = True):
        if mode not in (REPR_RANDOM, REPR_PRETRAINED, REPR_TYPEVEC):
            raise ValueError(f"unknown entity representation mode '{mode}'")
        if mode == REPR_TYPEVEC:
            if kb is None:
                raise ValueError("typevec mode needs a KB")
            trainable = False
        elif table is None:
            raise ValueError(f"{mode} mode needs a table parameter")
        self.mode = mode
        self.table = table
        self.kb = kb
        self.trainable = trainable

    @classmethod
    def random(cls, name: str, num_entities: int, dim: int,
               rng: np.random.Generator, init_range: float = 0.08) -> "EntityRepr":
        table = uniform_init(f"{name}.ent_embedding", (num_entities, dim),
                             rng, init_range)
        return cls(REPR_RANDOM, table=table)

    @classmethod
    def pretrained(cls, name: str, table: np.ndarray,
                   trainable: bool = True) -> "EntityRepr":
        return cls(REPR_PRETRAINED,
                   table=Parameter(f"{name}.ent_embedding", table),
                   trainable=trainable)

    @classmethod
    def type_vector(cls, kb: KnowledgeBase) -> "EntityRepr":
        return cls(REPR_TYPEVEC, kb=kb)

    @property
    def dim(self) -> int:
        if self.mode == REPR_TYPEVEC:
            return self.kb.num_types
        return self.table.value.shape[1]

    def row(self, eid: int) -> np.ndarray:
        if self.mode == REPR_TYPEVEC:
            return self.kb.type_matrix()[eid]
        return self.table.value[eid]

    def rows(self, eids) -> np.ndarray:
        if self.mode == REPR_TYPEVEC:
            return self.kb.type_matrix()[list(eids)]
        return self.table.value[list(eids)]

    def parameters(self) -> list[Parameter]:
        if self.mode == REPR_TYPEVEC or not self.trainable:
            return []
        return [self.table]


class SubjectScorer:
    """Encoder + entity representation + structural-compatibility weight."""

    def __init__(self, encoder, repr_: EntityRepr, alpha: float = 1.0):
        if encoder.d_out != repr_.dim:
            raise ValueError(
                f"encoder output dim {encoder.d_out} != entity dim {repr_.dim}")
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        self.encoder = encoder
        self.repr = repr_
        self.alpha = float(alpha)

    def parameters(self) -> list[Parameter]:
        """Trainable parameters (a frozen entity table is excluded)."""
        return [*self.encoder.parameters(), *self.repr.parameters()]

    def state_parameters(self) -> list[Parameter]:
        """Everything a checkpoint must carry, trainable or not."""
        out = [*self.encoder.parameters()]
        if self.repr.table is not None:
            out.append(self.repr.table)
        return out

    def score(self, kb: KnowledgeBase, tokens, sid: int, rid: int) -> float:
        """Context score plus alpha * [subject has the relation]."""
        g = self.encoder.encode(tokens)
        return float(g @ self.repr.row(sid)) + self.alpha * kb.has_relation(sid, rid)

    def scores(self, kb: KnowledgeBase, tokens, pairs) -> np.ndarray:
        """Scores for (sid, rid) pairs with a single encoder pass."""
        g = self.encoder.encode(tokens)
        out = np.empty(len(pairs), dtype=np.float64)
        for i, (sid, rid) in enumerate(pairs):
            out[i] = float(g @ self.repr.row(sid)) \
                + self.alpha * kb.has_relation(sid, rid)
        return out

    def hinge_loss(self, kb: KnowledgeBase, tokens, gold: int, rid: int,
                   negatives, margin: float, grads: GradBag | None = None,
                   training: bool = False,
                   rng: np.random.Generator | None = None,
                   accumulate: bool = True) -> float:
        """Margin loss over negative entities (random/pretrained modes)."""
        if self.repr.mode == REPR_TYPEVEC:
            raise ValueError("hinge loss undefined in typevec mode; use "
                             "type_bce_loss")
        negatives = list(negatives)
        if gold in negatives:
            raise ValueError("gold entity listed among negatives")
        g, cache = self.encoder.encode_with_cache(tokens, training, rng)
        table = self.repr.table.value
        u_gold = float(g @ table[gold]) + self.alpha * kb.has_relation(gold, rid)
        if not negatives:
            return 0.0
        neg_ids = np.asarray(negatives, dtype=np.int64)
        h_neg = np.array([kb.has_relation(int(s), rid) for s in neg_ids],
                         dtype=np.float64)
        u_neg = table[neg_ids] @ g + self.alpha * h_neg
        terms = margin - u_gold + u_neg
        active = terms > 0.0
        loss = float(terms[active].sum())
        if accumulate and active.any():
            n_active = int(active.sum())
            d_g = table[neg_ids[active]].sum(axis=0) - n_active * table[gold]
            if self.repr.trainable:
                ent_grad = sink(self.repr.table, grads)
                ent_grad[gold] += -n_active * g
                np.add.at(ent_grad, neg_ids[active], g)
            self.encoder.backward(cache, d_g, grads)
        return loss

    def type_bce_loss(self, tokens, gold: int, grads: GradBag | None = None,
                      training: bool = False,
                      rng: np.random.Generator | None = None,
                      accumulate: bool = True) -> float:
        """Per-type binary cross-entropy against the gold type vector.

        The encoder output is read as independent type probabilities.
        Probabilities are clamped away from {0,1} before the log; the
        gradient is injected at the pre-sigmoid stage, which is exact
        wherever the clamp is inactive and bounded everywhere.
        """
        if self.repr.mode != REPR_TYPEVEC:
            raise ValueError("type_bce_loss requires typevec mode")
        if not self.encoder.squash:
            raise ValueError("typevec encoder must squash its output")
        target = self.repr.row(gold)
        p, cache = self.encoder.encode_with_cache(tokens, training, rng)
        clamped = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
        loss = float(-(target * np.log(clamped)
                       + (1.0 - target) * np.log(1.0 - clamped)).sum())
        if accumulate:
            self.encoder.backward(cache, p - target, grads, presquash=True)
        return loss


def sample_negative_entities(kb: KnowledgeBase, gold: int, count: int,
                             rng: np.random.Generator) -> list[int]:
    """Up to ``count`` distinct entities != gold, uniform over the KB."""
    n = kb.num_entities
    take = min(count, n - 1)
    if take <= 0:
        return []
    drawn = rng.choice(n - 1, size=take, replace=False)
    drawn = drawn + (drawn >= gold)
    return [int(e) for e in drawn]
