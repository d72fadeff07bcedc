"""End-to-end orchestration: train all models, persist, reload, evaluate."""

from __future__ import annotations

import os

import numpy as np

from .checkpoint import load_checkpoint, restore_parameters, save_checkpoint
from .config import RunConfig
from .encoder import (EmbedAvgEncoder, QuestionEncoder, Vocabulary,
                      load_word_embeddings)
from .errors import DataError
from .inference import answer_with_candidates, eval_accuracy
from .kb import KnowledgeBase
from .labeler import MentionLabeler
from .params import Parameter
from .pruning import recall_at
from .relation_model import RelationScorer
from .subject_model import EntityRepr, SubjectScorer
from .training import (TrainingSample, build_labeled_dataset, load_dataset,
                       rng_for, save_loss_curve, train_labeler,
                       train_relation_model, train_subject_model,
                       transe_pretrain)

META_FILE = "meta.txt"
VOCAB_FILE = "vocab.txt"


def load_kb(config: RunConfig) -> KnowledgeBase:
    config.require_paths("kb_triples", "kb_aliases", "kb_types")
    return KnowledgeBase.load(config.kb_triples, config.kb_aliases,
                              config.kb_types)


def train_all(config: RunConfig, kb: KnowledgeBase,
              samples: list[TrainingSample] | None = None) -> dict:
    """Train labeler, relation and subject models; write checkpoint dir."""
    config.validate()
    if samples is None:
        config.require_paths("dataset")
        samples = load_dataset(config.dataset, kb)
    out_dir = config.checkpoint_dir
    if not out_dir:
        raise DataError("missing required path setting 'checkpoint_dir'")
    os.makedirs(out_dir, exist_ok=True)
    hyper = config.hyper
    seed = config.seed
    vocab = Vocabulary.from_corpus([s.tokens for s in samples])
    vocab.save(os.path.join(out_dir, VOCAB_FILE))

    embedding_table = None
    if config.embedding_file:
        config.require_paths("embedding_file")
        embedding_table = load_word_embeddings(
            config.embedding_file, vocab, hyper.embedding_dim,
            rng_for(seed, 99), hyper.init_range)

    labeled_rows, match_rate = build_labeled_dataset(kb, samples)
    if not labeled_rows:
        raise DataError("no training question could be linked to its subject")
    labeler, labeler_curve = train_labeler(labeled_rows, vocab, hyper, seed,
                                           config.workers)
    save_checkpoint(os.path.join(out_dir, "labeler.ckpt"),
                    labeler.parameters())
    save_loss_curve(os.path.join(out_dir, "loss_labeler.csv"), labeler_curve)

    hubs = []
    for name in config.hub_relation_names():
        hubs.append(kb.relation_id(name))
    rel_model, rel_curve = train_relation_model(
        samples, kb, vocab, hyper, seed, config.workers,
        encoder_kind=config.encoder, forced_hubs=tuple(hubs),
        embedding_table=embedding_table)
    save_checkpoint(os.path.join(out_dir, "relation.ckpt"),
                    rel_model.parameters())
    save_loss_curve(os.path.join(out_dir, "loss_relation.csv"), rel_curve)

    pretrained_table = None
    if config.entity_repr == "pretrained":
        ent, rel_tab, transe_curve = transe_pretrain(
            kb, hyper.entity_dim, hyper.transe_epochs, hyper.transe_lr,
            hyper.transe_margin, seed)
        save_checkpoint(os.path.join(out_dir, "transe.ckpt"), [
            Parameter("transe.ent_embedding", ent),
            Parameter("transe.rel_embedding", rel_tab),
        ])
        save_loss_curve(os.path.join(out_dir, "loss_transe.csv"),
                        transe_curve)
        pretrained_table = ent
    subj_model, subj_curve = train_subject_model(
        samples, kb, vocab, hyper, seed, config.workers,
        repr_mode=config.entity_repr, pretrained_table=pretrained_table,
        freeze_entities=config.freeze_entities)
    save_checkpoint(os.path.join(out_dir, "subject.ckpt"),
                    subj_model.state_parameters())
    save_loss_curve(os.path.join(out_dir, "loss_subject.csv"), subj_curve)

    _write_meta(os.path.join(out_dir, META_FILE), config, kb)
    return {
        "labeler": labeler,
        "relation": rel_model,
        "subject": subj_model,
        "vocab": vocab,
        "match_rate": match_rate,
        "curves": {"labeler": labeler_curve, "relation": rel_curve,
                   "subject": subj_curve},
    }


def _write_meta(path, config: RunConfig, kb: KnowledgeBase) -> None:
    hyper = config.hyper
    rows = {
        "entity_repr": config.entity_repr,
        "encoder": config.encoder,
        "embedding_dim": hyper.embedding_dim,
        "hidden_size": hyper.hidden_size,
        "num_layers": hyper.num_layers,
        "relation_dim": hyper.relation_dim,
        "entity_dim": hyper.entity_dim,
        "alpha": hyper.alpha,
        "dropout": hyper.dropout,
        "init_range": hyper.init_range,
        "num_relations": kb.num_relations,
        "num_entities": kb.num_entities,
        "num_types": kb.num_types,
        "seed": config.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in rows.items():
            fh.write(f"{key}={value}\n")


def _read_meta(path) -> dict[str, str]:
    meta = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                key, _, value = line.partition("=")
                meta[key] = value
    return meta


def load_models(checkpoint_dir, kb: KnowledgeBase):
    """Reconstruct trained models from a checkpoint directory."""
    meta = _read_meta(os.path.join(checkpoint_dir, META_FILE))
    vocab = Vocabulary.load(os.path.join(checkpoint_dir, VOCAB_FILE))
    for key in ("num_relations", "num_entities", "num_types"):
        expected = int(meta[key])
        actual = getattr(kb, key)
        if actual != expected:
            raise DataError(
                f"checkpoint was trained against a KB with {expected} "
                f"{key.removeprefix('num_')}, loaded KB has {actual}")
    d_emb = int(meta["embedding_dim"])
    d_h = int(meta["hidden_size"])
    layers = int(meta["num_layers"])
    init_rng = rng_for(0, 0)

    labeler = MentionLabeler.create("labeler", vocab, d_emb, d_h, init_rng,
                                    layers)
    restore_parameters(labeler.parameters(),
                       load_checkpoint(os.path.join(checkpoint_dir,
                                                    "labeler.ckpt")),
                       "labeler.ckpt")

    encoder_kind = meta["encoder"]
    if encoder_kind == "bigru":
        rel_encoder = QuestionEncoder.create(
            "relation.encoder", vocab, d_emb, d_h, int(meta["relation_dim"]),
            squash=False, rng=init_rng, num_layers=layers)
    else:
        rel_encoder = EmbedAvgEncoder.create("relation.encoder", vocab,
                                             d_emb, init_rng)
    rel_model = RelationScorer.create("relation", rel_encoder,
                                      int(meta["num_relations"]), init_rng)
    restore_parameters(rel_model.parameters(),
                       load_checkpoint(os.path.join(checkpoint_dir,
                                                    "relation.ckpt")),
                       "relation.ckpt")

    repr_mode = meta["entity_repr"]
    typevec = repr_mode == "typevec"
    if typevec:
        repr_ = EntityRepr.type_vector(kb)
    else:
        table = np.zeros((int(meta["num_entities"]),
                          int(meta["entity_dim"])))
        repr_ = (EntityRepr.pretrained("subject", table)
                 if repr_mode == "pretrained"
                 else EntityRepr("random",
                                 Parameter("subject.ent_embedding", table)))
    subj_encoder = QuestionEncoder.create(
        "subject.encoder", vocab, d_emb, d_h, repr_.dim, squash=typevec,
        rng=init_rng, num_layers=layers)
    subj_model = SubjectScorer(subj_encoder, repr_, float(meta["alpha"]))
    restore_parameters(subj_model.state_parameters(),
                       load_checkpoint(os.path.join(checkpoint_dir,
                                                    "subject.ckpt")),
                       "subject.ckpt")
    return labeler, rel_model, subj_model, meta


def evaluate(kb: KnowledgeBase, rel_model, subj_model, labeler,
             samples, pruning: str = "focused",
             combine: str = "softmax") -> dict:
    """Accuracy, pruning recall, and the single/multi-subject breakdown."""
    preds = []
    golds = []
    recalls = []
    buckets = {"single": [0, 0], "multi": [0, 0]}  # [correct, total]
    subject_counts = []
    for sample in samples:
        pred, candidates = answer_with_candidates(
            kb, rel_model, subj_model, labeler, sample.question,
            pruning=pruning, combine=combine)
        gold = (sample.subject, sample.relation)
        preds.append(pred)
        golds.append(gold)
        recalls.append(recall_at(candidates, gold))
        n_subjects = len(candidates.subjects())
        subject_counts.append(n_subjects)
        correct = pred is not None and pred.pair() == gold
        if n_subjects >= 1:
            bucket = "single" if n_subjects == 1 else "multi"
            buckets[bucket][0] += int(correct)
            buckets[bucket][1] += 1
    single_c, single_n = buckets["single"]
    multi_c, multi_n = buckets["multi"]
    return {
        "accuracy": eval_accuracy(preds, golds),
        "recall": sum(recalls) / len(recalls),
        "single_subject_acc": single_c / single_n if single_n else 0.0,
        "multi_subject_acc": multi_c / multi_n if multi_n else 0.0,
        "single_subject_count": single_n,
        "multi_subject_count": multi_n,
        "mean_candidate_subjects": (sum(subject_counts) / len(subject_counts)
                                    if subject_counts else 0.0),
        "predictions": preds,
    }
