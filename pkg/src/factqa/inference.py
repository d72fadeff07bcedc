"""End-to-end answering over the pruned candidate space.

The answer is the candidate pair maximizing
log p(r | q) + log p(s | q, r), each conditional softmax-normalized over
the candidates actually in play (relations present in the candidate set;
subjects paired with the chosen relation). A raw-score mode skips the
normalization for ablation. ``exact_infer`` is the brute-force oracle that
scores every fact-backed pair with independently written arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .encoder import tokenize
from .kb import KnowledgeBase
from .labeler import MentionLabeler
from .numutil import log_softmax
from .pruning import CandidateSet, focused_prune, full_candidates, ngram_prune
from .relation_model import RelationScorer
from .subject_model import SubjectScorer

COMBINE_SOFTMAX = "softmax"
COMBINE_RAW = "raw"

EXACT_INFER_MAX_FACTS = 100_000


@dataclass
class Prediction:
    subject: int
    relation: int
    objects: list[int]
    log_prob_relation: float
    log_prob_subject: float
    combined: float
    candidate_count: int

    def pair(self) -> tuple[int, int]:
        return (self.subject, self.relation)


def _score_candidates(kb: KnowledgeBase, rel_model: RelationScorer,
                      subj_model: SubjectScorer, tokens,
                      candidates: CandidateSet, combine: str):
    """(pair -> (rel term, subj term)) under the chosen combination mode."""
    rids = candidates.relations()
    f = rel_model.encoder.encode(tokens)
    g = subj_model.encoder.encode(tokens)
    rel_scores = {rid: float(f @ rel_model.rel_embedding.value[rid])
                  for rid in rids}
    if combine == COMBINE_SOFTMAX:
        logp = log_softmax([rel_scores[rid] for rid in rids])
        rel_terms = dict(zip(rids, logp.tolist()))
    elif combine == COMBINE_RAW:
        rel_terms = rel_scores
    else:
        raise ValueError(f"unknown combine mode '{combine}'")
    out = {}
    for rid in rids:
        sids = candidates.subjects_for(rid)
        u = [float(g @ subj_model.repr.row(sid))
             + subj_model.alpha * kb.has_relation(sid, rid) for sid in sids]
        if combine == COMBINE_SOFTMAX:
            subj_terms = log_softmax(u).tolist()
        else:
            subj_terms = u
        for sid, term in zip(sids, subj_terms):
            out[(sid, rid)] = (rel_terms[rid], term)
    return out


def _pick_best(kb: KnowledgeBase, scored: dict) -> tuple[tuple[int, int], float, float]:
    """Argmax with deterministic tie-breaking.

    Ties resolve to the higher-degree subject, then the lower subject id,
    then the lower relation id.
    """
    best_key = None
    best_pair = None
    for (sid, rid), (rel_term, subj_term) in scored.items():
        key = (rel_term + subj_term, kb.degree(sid), -sid, -rid)
        if best_key is None or key > best_key:
            best_key = key
            best_pair = (sid, rid)
    rel_term, subj_term = scored[best_pair]
    return best_pair, rel_term, subj_term


def answer_with_candidates(kb: KnowledgeBase, rel_model: RelationScorer,
                           subj_model: SubjectScorer,
                           labeler: MentionLabeler | None, question: str,
                           pruning: str = "focused",
                           combine: str = COMBINE_SOFTMAX):
    """Prediction plus the candidate set it was chosen from.

    ``pruning`` is one of focused | ngram | full. Returns (None, candidates)
    when pruning produced nothing.
    """
    tokens = tokenize(question)
    if pruning == "focused":
        if labeler is None:
            raise ValueError("focused pruning needs a labeler")
        candidates = focused_prune(kb, labeler, tokens)
    elif pruning == "ngram":
        candidates = ngram_prune(kb, tokens)
    elif pruning == "full":
        candidates = full_candidates(kb)
    else:
        raise ValueError(f"unknown pruning mode '{pruning}'")
    if not candidates.pairs:
        return None, candidates
    scored = _score_candidates(kb, rel_model, subj_model, tokens, candidates,
                               combine)
    (sid, rid), rel_term, subj_term = _pick_best(kb, scored)
    pred = Prediction(
        subject=sid,
        relation=rid,
        objects=kb.lookup_objects(sid, rid),
        log_prob_relation=rel_term,
        log_prob_subject=subj_term,
        combined=rel_term + subj_term,
        candidate_count=len(candidates.pairs),
    )
    return pred, candidates


def answer(kb: KnowledgeBase, rel_model: RelationScorer,
           subj_model: SubjectScorer, labeler: MentionLabeler | None,
           question: str, pruning: str = "focused",
           combine: str = COMBINE_SOFTMAX) -> Prediction | None:
    pred, _ = answer_with_candidates(kb, rel_model, subj_model, labeler,
                                     question, pruning, combine)
    return pred


def exact_infer(kb: KnowledgeBase, rel_model: RelationScorer,
                subj_model: SubjectScorer, question: str,
                combine: str = COMBINE_SOFTMAX) -> Prediction | None:
    """Brute force over all fact-backed pairs; test oracle for ``answer``.

    Deliberately written with plain per-pair loops and its own softmax
    arithmetic rather than reusing the batched scoring path.
    """
    if kb.num_facts > EXACT_INFER_MAX_FACTS:
        raise ValueError(
            f"KB too large for exact inference ({kb.num_facts} facts)")
    tokens = tokenize(question)
    pairs = kb.all_pairs()
    if not pairs:
        return None
    f = rel_model.encoder.encode(tokens)
    g = subj_model.encoder.encode(tokens)
    v = {}
    subjects_of = {}
    for sid, rid in pairs:
        if rid not in v:
            score = 0.0
            row = rel_model.rel_embedding.value[rid]
            for k in range(f.shape[0]):
                score += float(f[k]) * float(row[k])
            v[rid] = score
        subjects_of.setdefault(rid, []).append(sid)
    u = {}
    for sid, rid in pairs:
        row = subj_model.repr.row(sid)
        score = 0.0
        for k in range(g.shape[0]):
            score += float(g[k]) * float(row[k])
        u[(sid, rid)] = score + subj_model.alpha * kb.has_relation(sid, rid)

    if combine == COMBINE_SOFTMAX:
        rids = sorted(v)
        m = max(v[r] for r in rids)
        z = sum(math.exp(v[r] - m) for r in rids)
        rel_term = {r: (v[r] - m) - math.log(z) for r in rids}
        subj_term = {}
        for rid in rids:
            sids = sorted(set(subjects_of[rid]))
            mm = max(u[(s, rid)] for s in sids)
            zz = sum(math.exp(u[(s, rid)] - mm) for s in sids)
            for s in sids:
                subj_term[(s, rid)] = (u[(s, rid)] - mm) - math.log(zz)
    elif combine == COMBINE_RAW:
        rel_term = v
        subj_term = u
    else:
        raise ValueError(f"unknown combine mode '{combine}'")

    best_pair = None
    best_key = None
    for sid, rid in pairs:
        total = rel_term[rid] + subj_term[(sid, rid)]
        key = (total, kb.degree(sid), -sid, -rid)
        if best_key is None or key > best_key:
            best_key = key
            best_pair = (sid, rid)
    sid, rid = best_pair
    return Prediction(
        subject=sid,
        relation=rid,
        objects=kb.lookup_objects(sid, rid),
        log_prob_relation=rel_term[rid],
        log_prob_subject=subj_term[(sid, rid)],
        combined=rel_term[rid] + subj_term[(sid, rid)],
        candidate_count=len(pairs),
    )


def eval_accuracy(predictions, golds) -> float:
    """Fraction of questions with both subject and relation correct."""
    predictions = list(predictions)
    golds = list(golds)
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds must align")
    if not golds:
        raise ValueError("empty evaluation set")
    hits = 0
    for pred, gold in zip(predictions, golds):
        if pred is not None and pred.pair() == tuple(gold):
            hits += 1
    return hits / len(golds)


def serialize_prediction(question: str, pred: Prediction | None,
                         kb: KnowledgeBase) -> str:
    """One evaluation line: question, names, objects, combined score."""
    if pred is None:
        return f"{question}\t\t\t\t"
    objs = ",".join(kb.entity_name(o) for o in pred.objects)
    return "\t".join([
        question,
        kb.entity_name(pred.subject),
        kb.relation_name(pred.relation),
        objs,
        f"{pred.combined:.6f}",
    ])
