import string

import numpy as np
import pytest
from hypothesis import given, strategies as st

from factqa.errors import DataError
from factqa.kb import (KnowledgeBase, edit_distance_at_most_one,
                       normalize_alias)


def write_kb_files(tmp_path, triples, aliases, types):
    paths = {}
    for name, rows in (("triples", triples), ("aliases", aliases),
                       ("types", types)):
        p = tmp_path / f"{name}.tsv"
        p.write_text("".join("\t".join(r) + "\n" for r in rows),
                     encoding="utf-8")
        paths[name] = str(p)
    return paths


class TestLoad:
    def test_single_fact(self, tmp_path):
        paths = write_kb_files(
            tmp_path,
            [("HarryPotter", "character_created_by", "JKRowling")],
            [("HarryPotter", "harry potter"), ("JKRowling", "JKRowling")],
            [("JKRowling", "author")])
        kb = KnowledgeBase.load(paths["triples"], paths["aliases"],
                                paths["types"])
        assert kb.num_entities == 2
        assert kb.num_relations == 1
        assert kb.num_facts == 1

    def test_empty_triples(self, tmp_path):
        paths = write_kb_files(tmp_path, [], [("X", "x")], [])
        kb = KnowledgeBase.load(paths["triples"], paths["aliases"],
                                paths["types"])
        assert kb.num_facts == 0
        assert kb.match_alias("x") == {kb.entity_id("X")}
        assert kb.adjacency(kb.entity_id("X")) == set()

    def test_malformed_line_reports_line_number(self, tmp_path):
        p = tmp_path / "triples.tsv"
        p.write_text("a\tr\tb\nbroken line\n", encoding="utf-8")
        empty = tmp_path / "empty.tsv"
        empty.write_text("", encoding="utf-8")
        with pytest.raises(DataError, match=r":2:"):
            KnowledgeBase.load(str(p), str(empty), str(empty))

    def test_duplicate_facts_deduplicated(self):
        kb = KnowledgeBase.from_tables(
            [("a", "r", "b"), ("a", "r", "b")], [("a", "a")], [])
        assert kb.num_facts == 1

    def test_deterministic_id_assignment(self, tmp_path):
        triples = [("b", "r1", "c"), ("a", "r2", "b"), ("d", "r1", "a")]
        paths = write_kb_files(tmp_path, triples, [("a", "a")], [])
        kb1 = KnowledgeBase.load(paths["triples"], paths["aliases"],
                                 paths["types"])
        kb2 = KnowledgeBase.load(paths["triples"], paths["aliases"],
                                 paths["types"])
        names1 = [kb1.entity_name(i) for i in range(kb1.num_entities)]
        names2 = [kb2.entity_name(i) for i in range(kb2.num_entities)]
        assert names1 == names2 == ["b", "c", "a", "d"]

    def test_large_load_smoke(self, tmp_path):
        lines = [f"e{i % 997}\tr{i % 13}\te{(i * 7) % 997}\n"
                 for i in range(10_000)]
        p = tmp_path / "triples.tsv"
        p.write_text("".join(lines), encoding="utf-8")
        empty = tmp_path / "empty.tsv"
        empty.write_text("", encoding="utf-8")
        kb = KnowledgeBase.load(str(p), str(empty), str(empty))
        assert kb.num_relations == 13
        assert kb.num_facts > 9_000  # a few duplicates collapse

    def test_object_only_entities_have_ids(self, single_fact_kb):
        rowling = single_fact_kb.entity_id("JKRowling")
        assert single_fact_kb.adjacency(rowling) == set()
        assert single_fact_kb.degree(rowling) == 0


class TestAliasMatch:
    def test_strict_hit_after_normalization(self, single_fact_kb):
        hp = single_fact_kb.entity_id("HarryPotter")
        assert single_fact_kb.match_alias("Harry Potter") == {hp}
        assert single_fact_kb.match_alias("  HARRY   POTTER! ") == {hp}

    def test_strict_miss(self, single_fact_kb):
        assert single_fact_kb.match_alias("harry pottre", "strict") == set()

    def test_approximate_recovers_typo(self, single_fact_kb):
        hp = single_fact_kb.entity_id("HarryPotter")
        assert single_fact_kb.match_alias("harry pottre",
                                          "approximate") == {hp}

    def test_approximate_brute_force_oracle(self, toy_kb):
        # every approximate hit must be within one edit of some alias
        for text in ("harry pottre", "lisbn", "oslo", "xyzzy"):
            hits = toy_kb.match_alias(text, "approximate")
            norm = normalize_alias(text)
            for eid in hits:
                assert any(edit_distance_at_most_one(norm, a)
                           for a in toy_kb.aliases_of(eid))

    def test_cap_at_twenty(self):
        aliases = [(f"E{i}", "shared name") for i in range(30)]
        kb = KnowledgeBase.from_tables([], aliases, [])
        hits = kb.match_alias("shared namex", "approximate")  # distance 1
        assert len(hits) == 20

    def test_strict_subset_of_approximate(self, toy_kb):
        for text in ("harry potter", "harry pottre", "oslo", "zzz"):
            strict = toy_kb.match_alias(text, "strict")
            approx = toy_kb.match_alias(text, "approximate")
            assert strict <= approx or strict == approx

    def test_bad_mode_rejected(self, single_fact_kb):
        with pytest.raises(ValueError):
            single_fact_kb.match_alias("x", "fuzzy")


class TestQueries:
    def test_has_relation(self, single_fact_kb):
        hp = single_fact_kb.entity_id("HarryPotter")
        jk = single_fact_kb.entity_id("JKRowling")
        rel = single_fact_kb.relation_id("character_created_by")
        assert single_fact_kb.has_relation(hp, rel) == 1
        assert single_fact_kb.has_relation(jk, rel) == 0

    def test_has_relation_unknown_id(self, single_fact_kb):
        with pytest.raises(KeyError):
            single_fact_kb.has_relation(99, 0)
        with pytest.raises(KeyError):
            single_fact_kb.has_relation(0, 99)

    def test_has_relation_exhaustive(self, toy_kb):
        for s, r, _ in toy_kb.facts:
            assert toy_kb.has_relation(s, r) == 1

    def test_has_relation_matches_lookup(self, toy_kb):
        for s in range(toy_kb.num_entities):
            for r in range(toy_kb.num_relations):
                assert toy_kb.has_relation(s, r) == int(
                    bool(toy_kb.lookup_objects(s, r)))

    def test_lookup_objects(self, single_fact_kb):
        hp = single_fact_kb.entity_id("HarryPotter")
        jk = single_fact_kb.entity_id("JKRowling")
        rel = single_fact_kb.relation_id("character_created_by")
        assert single_fact_kb.lookup_objects(hp, rel) == [jk]
        assert single_fact_kb.lookup_objects(jk, rel) == []

    def test_lookup_objects_multi_and_order(self):
        kb = KnowledgeBase.from_tables(
            [("s", "r", "low"), ("s", "r", "high"),
             ("high", "r2", "x"), ("high", "r3", "y")],
            [("s", "s")], [])
        objs = kb.lookup_objects(kb.entity_id("s"), kb.relation_id("r"))
        assert len(objs) == 2
        assert objs[0] == kb.entity_id("high")  # degree 2 sorts first

    def test_adjacency_rebuild_roundtrip(self, toy_kb):
        rebuilt = {}
        for s, r, _ in toy_kb.facts:
            rebuilt.setdefault(s, set()).add(r)
        for s in range(toy_kb.num_entities):
            assert toy_kb.adjacency(s) == rebuilt.get(s, set())

    def test_degree_counts_subject_facts(self, toy_kb):
        counts = {}
        for s, _, _ in toy_kb.facts:
            counts[s] = counts.get(s, 0) + 1
        for s in range(toy_kb.num_entities):
            assert toy_kb.degree(s) == counts.get(s, 0)


class TestTypeVector:
    def test_membership_encoding(self):
        kb = KnowledgeBase.from_tables(
            [], [("p", "p")],
            [("p", "person"), ("p", "author"), ("q", "place")])
        vec = kb.type_vector(kb.entity_id("p"))
        assert vec.tolist() == [1.0, 1.0, 0.0]

    def test_untyped_entity_all_zero(self, single_fact_kb):
        kb = KnowledgeBase.from_tables([("a", "r", "b")], [("a", "a")],
                                       [("b", "thing")])
        assert kb.type_vector(kb.entity_id("a")).sum() == 0.0

    def test_sum_matches_type_count(self, toy_kb):
        for eid in range(toy_kb.num_entities):
            assert toy_kb.type_vector(eid).sum() == len(
                toy_kb.entity_types(eid))

    def test_type_matrix_consistent(self, toy_kb):
        mat = toy_kb.type_matrix()
        for eid in range(toy_kb.num_entities):
            assert np.array_equal(mat[eid], toy_kb.type_vector(eid))


class TestNormalization:
    def test_examples(self):
        assert normalize_alias("  Harry   Potter ") == "harry potter"
        assert normalize_alias("'Harry Potter!'") == "harry potter"
        assert normalize_alias("J.K. Rowling") == "j.k. rowling"

    @given(st.text(alphabet=string.ascii_letters + string.punctuation + " ",
                   max_size=40))
    def test_idempotent(self, text):
        once = normalize_alias(text)
        assert normalize_alias(once) == once
