"""Gradient-check suites covering every trainable module.

Each suite builds a tiny instance of one model piece, wires a scalar loss
around it, and runs the central-difference comparison. Hinge-style suites
re-draw their random instance if any margin term sits within 10*epsilon of
its kink, where the loss is not differentiable.
"""

from __future__ import annotations

import numpy as np

from .encoder import EmbedAvgEncoder, QuestionEncoder, Vocabulary
from .errors import NumericsError
from .gradcheck import finite_diff_check
from .gru import BiGruStack, GruCell
from .kb import KnowledgeBase
from .labeler import MentionLabeler
from .params import Parameter
from .relation_model import RelationScorer
from .subject_model import EntityRepr, SubjectScorer
from .training import transe_loss

TOLERANCE = 1e-3
EPSILON = 1e-4


def _tiny_kb() -> KnowledgeBase:
    facts = [
        ("a", "r0", "b"), ("a", "r1", "c"), ("b", "r1", "c"),
        ("c", "r2", "d"), ("d", "r0", "a"), ("e", "r2", "b"),
    ]
    aliases = [(e, e) for e in "abcde"]
    types = [("a", "t0"), ("a", "t1"), ("b", "t1"), ("c", "t2"),
             ("d", "t0"), ("e", "t2")]
    return KnowledgeBase.from_tables(facts, aliases, types)


def _vocab() -> Vocabulary:
    return Vocabulary(["alpha", "beta", "gamma", "delta"])


def check_quadratic(seed: int, epsilon: float) -> float:
    rng = np.random.default_rng([seed, 1])
    w = Parameter("w", rng.normal(size=6))

    def loss():
        w.grad += w.value
        return 0.5 * float(w.value @ w.value)

    return finite_diff_check(loss, [w], epsilon)


def check_gru_cell(seed: int, epsilon: float) -> float:
    rng = np.random.default_rng([seed, 2])
    cell = GruCell.create("cell", 3, 3, rng)
    X = rng.normal(size=(3, 3))
    a = rng.normal(size=3)
    B = rng.normal(size=(3, 3))

    def loss():
        H, cache = cell.forward(X)
        cell.backward(cache, dh_seq=B, dh_last=a)
        return float((B * H).sum() + a @ H[-1])

    return finite_diff_check(loss, cell.parameters(), epsilon)


def check_bigru_stack(seed: int, epsilon: float) -> float:
    rng = np.random.default_rng([seed, 3])
    stack = BiGruStack.create("stack", 3, 2, 2, rng)
    X = rng.normal(size=(3, 3))
    a = rng.normal(size=4)
    B = rng.normal(size=(3, 4))

    def loss():
        hidden, final, cache = stack.forward(X)
        stack.backward(cache, d_hidden_seq=B, d_final=a)
        return float((B * hidden).sum() + a @ final)

    return finite_diff_check(loss, stack.parameters(), epsilon)


def check_encoder_bigru(seed: int, epsilon: float) -> float:
    rng = np.random.default_rng([seed, 4])
    enc = QuestionEncoder.create("enc", _vocab(), 3, 2, 3, squash=False,
                                 rng=rng, dropout_rate=0.0)
    tokens = ["alpha", "unseen", "gamma"]
    a = rng.normal(size=3)

    def loss():
        out, cache = enc.encode_with_cache(tokens)
        enc.backward(cache, a)
        return float(a @ out)

    return finite_diff_check(loss, enc.parameters(), epsilon)


def check_encoder_embed_avg(seed: int, epsilon: float) -> float:
    rng = np.random.default_rng([seed, 5])
    enc = EmbedAvgEncoder.create("avg", _vocab(), 3, rng)
    tokens = ["alpha", "beta", "beta"]
    a = rng.normal(size=3)

    def loss():
        out, cache = enc.encode_with_cache(tokens)
        enc.backward(cache, a)
        return float(a @ out)

    return finite_diff_check(loss, enc.parameters(), epsilon)


def _relation_instance(seed: int, attempt: int, epsilon: float):
    rng = np.random.default_rng([seed, 6, attempt])
    enc = QuestionEncoder.create("enc", _vocab(), 3, 2, 3, squash=False,
                                 rng=rng, dropout_rate=0.0)
    model = RelationScorer.create("rel", enc, 5, rng)
    # spread scores so no hinge term sits on its kink
    model.rel_embedding.value[...] = rng.normal(size=(5, 3))
    tokens = ["alpha", "beta", "gamma"]
    margin = 0.1
    f = enc.encode(tokens)
    v = model.rel_embedding.value @ f
    terms = margin - v[0] + v[1:]
    if np.any(np.abs(terms) < 10 * epsilon) or not np.any(terms > 0):
        return None
    return model, tokens, margin


def check_relation_hinge(seed: int, epsilon: float) -> float:
    for attempt in range(50):
        built = _relation_instance(seed, attempt, epsilon)
        if built is not None:
            model, tokens, margin = built

            def loss():
                return model.hinge_loss(tokens, 0, [1, 2, 3, 4], margin)

            return finite_diff_check(loss, model.parameters(), epsilon)
    raise NumericsError("could not build a kink-free relation instance")


def check_subject_hinge(seed: int, epsilon: float) -> float:
    kb = _tiny_kb()
    for attempt in range(50):
        rng = np.random.default_rng([seed, 7, attempt])
        enc = QuestionEncoder.create("enc", _vocab(), 3, 2, 3, squash=False,
                                     rng=rng, dropout_rate=0.0)
        repr_ = EntityRepr.random("subj", kb.num_entities, 3, rng)
        repr_.table.value[...] = rng.normal(size=repr_.table.value.shape)
        model = SubjectScorer(enc, repr_, alpha=1.0)
        tokens = ["alpha", "beta"]
        gold, rid = 0, 0
        negatives = [1, 2, 3]
        margin = 0.1
        g = enc.encode(tokens)
        u = lambda s: float(g @ repr_.table.value[s]) + kb.has_relation(s, rid)
        terms = np.array([margin - u(gold) + u(n) for n in negatives])
        if np.any(np.abs(terms) < 10 * epsilon) or not np.any(terms > 0):
            continue

        def loss():
            return model.hinge_loss(kb, tokens, gold, rid, negatives, margin)

        return finite_diff_check(loss, model.parameters(), epsilon)
    raise NumericsError("could not build a kink-free subject instance")


def check_type_bce(seed: int, epsilon: float) -> float:
    kb = _tiny_kb()
    rng = np.random.default_rng([seed, 8])
    enc = QuestionEncoder.create("enc", _vocab(), 3, 2, kb.num_types,
                                 squash=True, rng=rng, dropout_rate=0.0)
    model = SubjectScorer(enc, EntityRepr.type_vector(kb), alpha=1.0)
    tokens = ["alpha", "gamma", "delta"]

    def loss():
        return model.type_bce_loss(tokens, gold=0)

    return finite_diff_check(loss, model.encoder.parameters(), epsilon)


def check_crf_nll(seed: int, epsilon: float) -> float:
    rng = np.random.default_rng([seed, 9])
    model = MentionLabeler.create("lab", _vocab(), 3, 2, rng,
                                  dropout_rate=0.0)
    tokens = ["alpha", "beta", "gamma", "alpha"]
    gold = np.array([0, 1, 1, 0])

    def loss():
        return model.nll_loss(tokens, gold)

    return finite_diff_check(loss, model.parameters(), epsilon)


def check_transe(seed: int, epsilon: float) -> float:
    for attempt in range(50):
        rng = np.random.default_rng([seed, 10, attempt])
        ent = Parameter("ent", rng.normal(size=(4, 3)))
        rel = Parameter("rel", rng.normal(size=(2, 3)))
        pos = (0, 0, 1)
        neg = (2, 0, 3)
        margin = 1.0
        dp = ent.value[0] + rel.value[0] - ent.value[1]
        dn = ent.value[2] + rel.value[0] - ent.value[3]
        raw = margin + float(dp @ dp) - float(dn @ dn)
        if abs(raw) < 10 * epsilon or raw <= 0:
            continue

        def loss():
            return transe_loss(ent, rel, pos, neg, margin)

        return finite_diff_check(loss, [ent, rel], epsilon)
    raise NumericsError("could not build an active translation instance")


SUITES = {
    "quadratic": check_quadratic,
    "gru_cell": check_gru_cell,
    "bigru_stack": check_bigru_stack,
    "encoder_bigru": check_encoder_bigru,
    "encoder_embed_avg": check_encoder_embed_avg,
    "relation_hinge": check_relation_hinge,
    "subject_hinge": check_subject_hinge,
    "type_bce": check_type_bce,
    "crf_nll": check_crf_nll,
    "transe": check_transe,
}


def run_gradient_suites(seed: int = 0, epsilon: float = EPSILON) -> dict[str, float]:
    """Max relative gradient error per suite."""
    return {name: fn(seed, epsilon) for name, fn in SUITES.items()}
