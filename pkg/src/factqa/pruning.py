"""Candidate-space construction: from a question to (subject, relation) pairs.

Focused pruning asks the mention labeler for the single most probable
subject span and links only that; n-gram pruning links every contiguous
n-gram. Either way, matched entities are expanded to pairs via their
outgoing relations, so every candidate pair is backed by at least one fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kb import KnowledgeBase
from .labeler import MentionLabeler


@dataclass
class CandidateSet:
    """Pruned (subject, relation) pairs plus the mention each came from."""

    pairs: list[tuple[int, int]] = field(default_factory=list)
    provenance: dict[tuple[int, int], str] = field(default_factory=dict)

    def __contains__(self, pair) -> bool:
        return pair in self.provenance

    def __len__(self) -> int:
        return len(self.pairs)

    def subjects(self) -> list[int]:
        return sorted({s for s, _ in self.pairs})

    def relations(self) -> list[int]:
        return sorted({r for _, r in self.pairs})

    def subjects_for(self, rid: int) -> list[int]:
        return sorted({s for s, r in self.pairs if r == rid})


def _expand_entities(kb: KnowledgeBase, entities, mention: str,
                     out: CandidateSet) -> None:
    for sid in sorted(entities):
        for rid in sorted(kb.adjacency(sid)):
            pair = (sid, rid)
            if pair not in out.provenance:
                out.provenance[pair] = mention
                out.pairs.append(pair)


def ngram_prune(kb: KnowledgeBase, tokens) -> CandidateSet:
    """Candidates from strict alias matches of every contiguous n-gram."""
    if not tokens:
        raise ValueError("cannot prune an empty token list")
    out = CandidateSet()
    T = len(tokens)
    for start in range(T):
        for stop in range(start + 1, T + 1):
            gram = " ".join(tokens[start:stop])
            entities = kb.match_alias(gram, "strict")
            if entities:
                _expand_entities(kb, entities, gram, out)
    out.pairs.sort()
    return out


def focused_prune(kb: KnowledgeBase, labeler: MentionLabeler,
                  tokens) -> CandidateSet:
    """Candidates from the labeler's predicted mention.

    Strict alias match first, approximate only when strict finds nothing.
    When the labeler predicts no mention at all, falls back to n-gram
    pruning so recall does not silently collapse.
    """
    if not tokens:
        raise ValueError("cannot prune an empty token list")
    span = labeler.predict_mention(tokens)
    if span is None:
        return ngram_prune(kb, tokens)
    mention = span[2]
    entities = kb.match_alias(mention, "strict")
    if not entities:
        entities = kb.match_alias(mention, "approximate")
    out = CandidateSet()
    _expand_entities(kb, entities, mention, out)
    out.pairs.sort()
    return out


def full_candidates(kb: KnowledgeBase) -> CandidateSet:
    """Every fact-backed pair; the no-pruning baseline."""
    out = CandidateSet()
    for pair in kb.all_pairs():
        out.provenance[pair] = ""
        out.pairs.append(pair)
    return out


def recall_at(candidates: CandidateSet, gold: tuple[int, int]) -> int:
    """1 iff the gold (subject, relation) pair survived pruning."""
    return 1 if tuple(gold) in candidates.provenance else 0
