"""In-memory knowledge base: facts, alias index, types, adjacency.

Entities, relations and types are interned to dense integer ids in file
order, so identical input files always produce identical ids. The KB is
immutable after load and safe for concurrent readers.

File formats (UTF-8, tab-separated, no header):
    triples.tsv   subject <TAB> relation <TAB> object
    aliases.tsv   entity  <TAB> alias
    types.tsv     entity  <TAB> type
"""

from __future__ import annotations

import string
from typing import Iterable

import numpy as np

from .errors import DataError

APPROX_MATCH_CAP = 20

_PUNCT = string.punctuation


def normalize_alias(text: str) -> str:
    """Case-fold, collapse whitespace, strip leading/trailing punctuation."""
    folded = " ".join(text.casefold().split())
    return folded.strip(_PUNCT + " ")


def edit_distance_at_most_one(a: str, b: str) -> bool:
    """True iff one substitution, insertion, deletion, or adjacent swap
    (or none) turns a into b."""
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la > lb:
        a, b, la, lb = b, a, lb, la
    i = 0
    while i < la and a[i] == b[i]:
        i += 1
    if i == la:
        return True  # a is a prefix of b (lengths differ by <= 1)
    if la == lb:
        if a[i + 1:] == b[i + 1:]:
            return True  # single substitution
        # single transposition of adjacent characters
        return (i + 1 < la and a[i] == b[i + 1] and a[i + 1] == b[i]
                and a[i + 2:] == b[i + 2:])
    return a[i:] == b[i + 1:]  # single insertion into the shorter string


class _Interner:
    """Bijective string <-> dense id map, insertion ordered."""

    def __init__(self):
        self.names: list[str] = []
        self.ids: dict[str, int] = {}

    def intern(self, name: str) -> int:
        idx = self.ids.get(name)
        if idx is None:
            idx = len(self.names)
            self.ids[name] = idx
            self.names.append(name)
        return idx

    def __len__(self) -> int:
        return len(self.names)


def _read_tsv(path, num_fields: int):
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != num_fields:
                raise DataError(
                    f"{path}:{lineno}: expected {num_fields} tab-separated "
                    f"fields, got {len(fields)}")
            yield fields


class KnowledgeBase:
    """Entity/relation/fact store with alias, type and adjacency indexes."""

    def __init__(self):
        self._entities = _Interner()
        self._relations = _Interner()
        self._types = _Interner()
        self.facts: list[tuple[int, int, int]] = []
        self._fact_set: set[tuple[int, int, int]] = set()
        # per subject: relation id -> object ids in insertion order
        self._outgoing: dict[int, dict[int, list[int]]] = {}
        self._degree: dict[int, int] = {}
        self._alias_index: dict[str, tuple[int, ...]] = {}
        self._entity_types: dict[int, tuple[int, ...]] = {}
        self._type_matrix: np.ndarray | None = None

    # -- construction -----------------------------------------------------

    @classmethod
    def load(cls, triples_path, aliases_path, types_path) -> "KnowledgeBase":
        kb = cls()
        for subj, rel, obj in _read_tsv(triples_path, 3):
            kb._add_fact(subj, rel, obj)
        alias_sets: dict[str, set[int]] = {}
        for entity, alias in _read_tsv(aliases_path, 2):
            eid = kb._entities.intern(entity)
            norm = normalize_alias(alias)
            if norm:
                alias_sets.setdefault(norm, set()).add(eid)
        kb._alias_index = {a: tuple(sorted(eids)) for a, eids in alias_sets.items()}
        type_sets: dict[int, set[int]] = {}
        for entity, type_name in _read_tsv(types_path, 2):
            eid = kb._entities.intern(entity)
            tid = kb._types.intern(type_name)
            type_sets.setdefault(eid, set()).add(tid)
        kb._entity_types = {e: tuple(sorted(ts)) for e, ts in type_sets.items()}
        return kb

    @classmethod
    def from_tables(cls, facts: Iterable[tuple[str, str, str]],
                    aliases: Iterable[tuple[str, str]] = (),
                    types: Iterable[tuple[str, str]] = ()) -> "KnowledgeBase":
        """Build directly from in-memory rows (mainly for tests and tools)."""
        kb = cls()
        for subj, rel, obj in facts:
            kb._add_fact(subj, rel, obj)
        alias_sets: dict[str, set[int]] = {}
        for entity, alias in aliases:
            eid = kb._entities.intern(entity)
            norm = normalize_alias(alias)
            if norm:
                alias_sets.setdefault(norm, set()).add(eid)
        kb._alias_index = {a: tuple(sorted(es)) for a, es in alias_sets.items()}
        type_sets: dict[int, set[int]] = {}
        for entity, type_name in types:
            eid = kb._entities.intern(entity)
            tid = kb._types.intern(type_name)
            type_sets.setdefault(eid, set()).add(tid)
        kb._entity_types = {e: tuple(sorted(ts)) for e, ts in type_sets.items()}
        return kb

    def _add_fact(self, subj: str, rel: str, obj: str) -> None:
        s = self._entities.intern(subj)
        r = self._relations.intern(rel)
        o = self._entities.intern(obj)
        fact = (s, r, o)
        if fact in self._fact_set:
            return
        self._fact_set.add(fact)
        self.facts.append(fact)
        self._outgoing.setdefault(s, {}).setdefault(r, []).append(o)
        self._degree[s] = self._degree.get(s, 0) + 1

    # -- id helpers --------------------------------------------------------

    @property
    def num_entities(self) -> int:
        return len(self._entities)

    @property
    def num_relations(self) -> int:
        return len(self._relations)

    @property
    def num_types(self) -> int:
        return len(self._types)

    @property
    def num_facts(self) -> int:
        return len(self.facts)

    def entity_name(self, eid: int) -> str:
        self._check_entity(eid)
        return self._entities.names[eid]

    def relation_name(self, rid: int) -> str:
        self._check_relation(rid)
        return self._relations.names[rid]

    def type_name(self, tid: int) -> str:
        if not 0 <= tid < len(self._types):
            raise KeyError(f"unknown type id {tid}")
        return self._types.names[tid]

    def entity_id(self, name: str) -> int:
        eid = self._entities.ids.get(name)
        if eid is None:
            raise KeyError(f"unknown entity '{name}'")
        return eid

    def relation_id(self, name: str) -> int:
        rid = self._relations.ids.get(name)
        if rid is None:
            raise KeyError(f"unknown relation '{name}'")
        return rid

    def _check_entity(self, eid: int) -> None:
        if not 0 <= eid < len(self._entities):
            raise KeyError(f"unknown entity id {eid}")

    def _check_relation(self, rid: int) -> None:
        if not 0 <= rid < len(self._relations):
            raise KeyError(f"unknown relation id {rid}")

    # -- queries -----------------------------------------------------------

    def match_alias(self, text: str, mode: str = "strict") -> set[int]:
        """Entities whose alias matches the text.

        'strict' requires normalized equality. 'approximate' returns the
        strict result when non-empty, otherwise entities whose alias is
        within edit distance 1, capped at APPROX_MATCH_CAP.
        """
        if mode not in ("strict", "approximate"):
            raise ValueError(f"unknown match mode '{mode}'")
        norm = normalize_alias(text)
        strict = set(self._alias_index.get(norm, ()))
        if mode == "strict" or strict:
            return strict
        found: list[int] = []
        seen: set[int] = set()
        for alias in sorted(self._alias_index):
            if edit_distance_at_most_one(norm, alias):
                for eid in self._alias_index[alias]:
                    if eid not in seen:
                        seen.add(eid)
                        found.append(eid)
                        if len(found) >= APPROX_MATCH_CAP:
                            return set(found)
        return set(found)

    def adjacency(self, eid: int) -> set[int]:
        """Relations r with at least one fact (eid, r, _)."""
        self._check_entity(eid)
        return set(self._outgoing.get(eid, ()))

    def has_fact(self, s: int, r: int, o: int) -> bool:
        return (s, r, o) in self._fact_set

    def has_relation(self, s: int, r: int) -> int:
        """1 iff some fact (s, r, _) exists."""
        self._check_entity(s)
        self._check_relation(r)
        return 1 if r in self._outgoing.get(s, ()) else 0

    def lookup_objects(self, s: int, r: int) -> list[int]:
        """Objects of (s, r, _), ordered by descending degree then id."""
        self._check_entity(s)
        self._check_relation(r)
        objs = self._outgoing.get(s, {}).get(r, [])
        return sorted(set(objs), key=lambda o: (-self.degree(o), o))

    def degree(self, eid: int) -> int:
        """Number of facts with this entity as subject."""
        self._check_entity(eid)
        return self._degree.get(eid, 0)

    def entity_types(self, eid: int) -> tuple[int, ...]:
        self._check_entity(eid)
        return self._entity_types.get(eid, ())

    def type_vector(self, eid: int) -> np.ndarray:
        """Binary type-membership vector of length num_types."""
        self._check_entity(eid)
        vec = np.zeros(self.num_types, dtype=np.float64)
        for tid in self._entity_types.get(eid, ()):
            vec[tid] = 1.0
        return vec

    def type_matrix(self) -> np.ndarray:
        """Dense (num_entities, num_types) binary matrix, built lazily."""
        if self._type_matrix is None:
            mat = np.zeros((self.num_entities, self.num_types), dtype=np.float64)
            for eid, tids in self._entity_types.items():
                for tid in tids:
                    mat[eid, tid] = 1.0
            self._type_matrix = mat
        return self._type_matrix

    def subjects_with_facts(self) -> list[int]:
        """Entity ids that appear as subject of at least one fact, sorted."""
        return sorted(self._outgoing)

    def all_pairs(self) -> list[tuple[int, int]]:
        """Every (subject, relation) pair backed by a fact, sorted."""
        out = []
        for s in sorted(self._outgoing):
            for r in sorted(self._outgoing[s]):
                out.append((s, r))
        return out

    def aliases_of(self, eid: int) -> list[str]:
        """Normalized aliases that point at the entity, sorted."""
        self._check_entity(eid)
        return sorted(a for a, eids in self._alias_index.items() if eid in eids)

    def stats(self) -> dict[str, int]:
        return {
            "entities": self.num_entities,
            "relations": self.num_relations,
            "facts": self.num_facts,
            "types": self.num_types,
            "aliases": len(self._alias_index),
        }
