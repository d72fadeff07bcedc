import numpy as np
import pytest

from factqa.encoder import QuestionEncoder, Vocabulary
from factqa.inference import (answer, answer_with_candidates, eval_accuracy,
                              exact_infer, serialize_prediction)
from factqa.kb import KnowledgeBase
from factqa.labeler import MentionLabeler
from factqa.relation_model import RelationScorer
from factqa.subject_model import EntityRepr, SubjectScorer


def zeroed_labeler(vocab, rng):
    """All-zero labeler: decodes all-O, so pruning falls back to n-grams."""
    labeler = MentionLabeler.create("lab", vocab, 3, 2, rng,
                                    dropout_rate=0.0)
    for p in labeler.parameters():
        p.value[...] = 0.0
    return labeler


def random_models(kb, vocab, rng, d=8):
    enc_f = QuestionEncoder.create("f", vocab, 4, 3, d, squash=False,
                                   rng=rng, dropout_rate=0.0)
    rel = RelationScorer.create("rel", enc_f, kb.num_relations, rng)
    rel.rel_embedding.value[...] = rng.normal(size=(kb.num_relations, d))
    enc_g = QuestionEncoder.create("g", vocab, 4, 3, d, squash=False,
                                   rng=rng, dropout_rate=0.0)
    repr_ = EntityRepr.random("subj", kb.num_entities, d, rng)
    repr_.table.value[...] = rng.normal(size=(kb.num_entities, d))
    subj = SubjectScorer(enc_g, repr_, alpha=1.0)
    return rel, subj


@pytest.fixture
def small_kb():
    return KnowledgeBase.from_tables(
        facts=[("HarryPotter", "character_created_by", "JKRowling"),
               ("NewYork", "city_located_in", "USA"),
               ("JKRowling", "person_born_in", "Yate")],
        aliases=[("HarryPotter", "harry potter"),
                 ("HarryPotter", "HarryPotter"),
                 ("NewYork", "new york"), ("JKRowling", "jk rowling"),
                 ("JKRowling", "JKRowling")],
        types=[("HarryPotter", "character"), ("JKRowling", "person")],
    )


class TestAnswer:
    def test_worked_example(self, small_kb, rng):
        vocab = Vocabulary("who created the character harry potter".split())
        rel, subj = random_models(small_kb, vocab, rng)
        labeler = zeroed_labeler(vocab, rng)
        pred = answer(small_kb, rel, subj, labeler,
                      "Who created the character Harry Potter")
        assert pred is not None
        assert small_kb.entity_name(pred.subject) == "HarryPotter"
        assert small_kb.relation_name(pred.relation) == "character_created_by"
        assert [small_kb.entity_name(o) for o in pred.objects] == ["JKRowling"]

    def test_single_candidate_has_zero_combined_score(self, small_kb, rng):
        vocab = Vocabulary(["harry", "potter"])
        rel, subj = random_models(small_kb, vocab, rng)
        labeler = zeroed_labeler(vocab, rng)
        pred = answer(small_kb, rel, subj, labeler, "harry potter")
        assert pred.candidate_count == 1
        assert pred.combined == pytest.approx(0.0)
        assert pred.log_prob_relation == pytest.approx(0.0)
        assert pred.log_prob_subject == pytest.approx(0.0)

    def test_empty_candidates_yield_none(self, small_kb, rng):
        vocab = Vocabulary(["nothing"])
        rel, subj = random_models(small_kb, vocab, rng)
        labeler = zeroed_labeler(vocab, rng)
        pred, candidates = answer_with_candidates(
            small_kb, rel, subj, labeler, "nothing matches here")
        assert pred is None
        assert candidates.pairs == []

    def test_combined_is_sum_of_terms(self, small_kb, rng):
        vocab = Vocabulary(["harry", "potter", "new", "york"])
        rel, subj = random_models(small_kb, vocab, rng)
        for combine in ("softmax", "raw"):
            pred = answer(small_kb, rel, subj, None,
                          "harry potter new york", pruning="full",
                          combine=combine)
            assert pred.combined == pytest.approx(
                pred.log_prob_relation + pred.log_prob_subject)

    def test_deterministic_given_fixed_parameters(self, small_kb, rng):
        vocab = Vocabulary(["harry", "potter"])
        rel, subj = random_models(small_kb, vocab, rng)
        labeler = zeroed_labeler(vocab, rng)
        p1 = answer(small_kb, rel, subj, labeler, "harry potter")
        p2 = answer(small_kb, rel, subj, labeler, "harry potter")
        assert p1 == p2


class TestExactInferenceEquivalence:
    def test_full_candidates_match_brute_force(self, toy_kb, toy_samples,
                                               rng):
        vocab = Vocabulary.from_corpus(
            [s.tokens for s in toy_samples["train"]])
        rel, subj = random_models(toy_kb, vocab, rng, d=8)
        for sample in toy_samples["test"][:30]:
            fast = answer(toy_kb, rel, subj, None, sample.question,
                          pruning="full")
            brute = exact_infer(toy_kb, rel, subj, sample.question)
            assert fast.pair() == brute.pair()

    def test_single_fact_kb(self, single_fact_kb, rng):
        vocab = Vocabulary(["anything"])
        rel, subj = random_models(single_fact_kb, vocab, rng)
        pred = exact_infer(single_fact_kb, rel, subj, "anything at all")
        assert single_fact_kb.entity_name(pred.subject) == "HarryPotter"

    def test_guard_on_oversized_kb(self, single_fact_kb, rng, monkeypatch):
        monkeypatch.setattr("factqa.inference.EXACT_INFER_MAX_FACTS", 0)
        vocab = Vocabulary(["x"])
        rel, subj = random_models(single_fact_kb, vocab, rng)
        with pytest.raises(ValueError):
            exact_infer(single_fact_kb, rel, subj, "x")


class TestRelabelingInvariance:
    def test_entity_id_permutation_keeps_names(self, rng):
        facts_a = [("anchor", "r1", "x"), ("anchor", "r2", "x"),
                   ("foo", "r1", "y"), ("bar", "r1", "z"),
                   ("foo", "r2", "x"), ("bar", "r2", "y")]
        # same facts, two entity introductions swapped
        facts_b = [facts_a[0], facts_a[1], facts_a[3], facts_a[2],
                   facts_a[5], facts_a[4]]
        aliases = [(e, e) for e in ("anchor", "x", "foo", "y", "bar", "z")]
        types = [("anchor", "t0"), ("x", "t1"), ("foo", "t2"), ("y", "t3"),
                 ("bar", "t4"), ("z", "t5")]
        kb_a = KnowledgeBase.from_tables(facts_a, aliases, types)
        kb_b = KnowledgeBase.from_tables(facts_b, aliases, types)
        assert kb_a.entity_id("foo") != kb_b.entity_id("foo")

        vocab = Vocabulary(["some", "question", "words"])
        enc_f = QuestionEncoder.create("f", vocab, 3, 2, 4, squash=False,
                                       rng=np.random.default_rng(5),
                                       dropout_rate=0.0)
        rel = RelationScorer.create("rel", enc_f, 2,
                                    np.random.default_rng(6))
        question = "some question words"
        names = []
        for kb in (kb_a, kb_b):
            enc_g = QuestionEncoder.create(
                "g", vocab, 3, 2, kb.num_types, squash=True,
                rng=np.random.default_rng(7), dropout_rate=0.0)
            subj = SubjectScorer(enc_g, EntityRepr.type_vector(kb), alpha=1.0)
            pred = answer(kb, rel, subj, None, question, pruning="full")
            names.append((kb.entity_name(pred.subject),
                          kb.relation_name(pred.relation),
                          pred.combined))
        assert names[0][:2] == names[1][:2]
        assert names[0][2] == pytest.approx(names[1][2], abs=1e-12)


class TestEvalAccuracy:
    def test_all_correct(self, small_kb, rng):
        vocab = Vocabulary(["harry", "potter"])
        rel, subj = random_models(small_kb, vocab, rng)
        labeler = zeroed_labeler(vocab, rng)
        pred = answer(small_kb, rel, subj, labeler, "harry potter")
        gold = pred.pair()
        assert eval_accuracy([pred, pred], [gold, gold]) == 1.0

    def test_all_none_scores_zero(self):
        assert eval_accuracy([None, None], [(0, 0), (1, 1)]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            eval_accuracy([None], [])


class TestSerialization:
    def test_line_format(self, small_kb, rng):
        vocab = Vocabulary(["harry", "potter"])
        rel, subj = random_models(small_kb, vocab, rng)
        labeler = zeroed_labeler(vocab, rng)
        pred = answer(small_kb, rel, subj, labeler, "harry potter")
        line = serialize_prediction("harry potter", pred, small_kb)
        fields = line.split("\t")
        assert fields[0] == "harry potter"
        assert fields[1] == "HarryPotter"
        assert fields[2] == "character_created_by"
        assert fields[3] == "JKRowling"
        assert float(fields[4]) == pytest.approx(0.0)

    def test_none_prediction(self, small_kb):
        line = serialize_prediction("q", None, small_kb)
        assert line.split("\t") == ["q", "", "", "", ""]
