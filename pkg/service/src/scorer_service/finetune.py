"""Training loop for the pair classifier on labeled pair corpora.

Corpora use the pair-generation JSONL format:
    {"text_a": ..., "text_b": ..., "label": 0|1, "source": ...}

The recorded hyperparameter defaults (learning rate 1e-6, batch size 32)
match large pretrained-critic fine-tuning practice; this small model trains
from scratch, so callers typically pass a larger learning rate.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass

import torch
from torch import nn

from .model import PairClassifier, load_model, save_model

logger = logging.getLogger("scorer_service.finetune")


@dataclass(frozen=True)
class Hyperparameters:
    learning_rate: float = 1e-6
    batch_size: int = 32
    epochs: int = 3
    holdout: float = 0.2
    seed: int = 0


def load_pair_corpus(path) -> list[tuple[str, str, int]]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                rows.append((row["text_a"], row["text_b"], int(row["label"])))
            except (json.JSONDecodeError, KeyError) as e:
                raise ValueError(f"{path}:{lineno}: bad pair row: {e}") from e
    return rows


def _batches(items, size):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def pair_accuracy(model: PairClassifier, rows: list[tuple[str, str, int]]) -> float:
    if not rows:
        raise ValueError("empty evaluation set")
    scores = model.score([(a, b) for a, b, _ in rows])
    correct = sum(1 for s, (_, _, y) in zip(scores, rows) if (s > 0.5) == (y == 1))
    return correct / len(rows)


def finetune(
    corpus: list[tuple[str, str, int]],
    base_model_path=None,
    hp: Hyperparameters = Hyperparameters(),
    out_path=None,
) -> tuple[PairClassifier, dict]:
    """Train (or continue training) the classifier; returns (model, metrics).

    Held-out metrics are logged per epoch and returned. Raises ValueError on
    an empty or single-label corpus.
    """
    if not corpus:
        raise ValueError("empty pair corpus")
    labels = {y for _, _, y in corpus}
    if labels != {0, 1}:
        raise ValueError(f"corpus needs both labels, got {sorted(labels)}")

    torch.manual_seed(hp.seed)
    rows = list(corpus)
    random.Random(hp.seed).shuffle(rows)
    n_holdout = max(1, int(len(rows) * hp.holdout)) if hp.holdout > 0 else 0
    held, train = rows[:n_holdout], rows[n_holdout:]
    if not train:
        raise ValueError("holdout leaves no training rows")

    model = load_model(base_model_path) if base_model_path else PairClassifier()
    optimizer = torch.optim.Adam(model.parameters(), lr=hp.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()
    order = list(range(len(train)))
    shuffler = random.Random(hp.seed + 1)

    history = []
    for epoch in range(1, hp.epochs + 1):
        model.train()
        shuffler.shuffle(order)
        total_loss = 0.0
        for batch_idx in _batches(order, hp.batch_size):
            batch = [train[i] for i in batch_idx]
            optimizer.zero_grad()
            logits = model([a for a, _, _ in batch], [b for _, b, _ in batch])
            target = torch.tensor([float(y) for _, _, y in batch])
            loss = loss_fn(logits, target)
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * len(batch)
        epoch_loss = total_loss / len(train)
        entry = {"epoch": epoch, "train_loss": round(epoch_loss, 6)}
        if held:
            entry["holdout_accuracy"] = round(pair_accuracy(model, held), 6)
        history.append(entry)
        logger.info("epoch %d: %s", epoch, entry)

    metrics = {
        "train_rows": len(train),
        "holdout_rows": len(held),
        "epochs": hp.epochs,
        "final": history[-1] if history else {},
        "history": history,
    }
    if held:
        metrics["holdout_accuracy"] = pair_accuracy(model, held)
        logger.info("final held-out accuracy: %.4f", metrics["holdout_accuracy"])
    if out_path is not None:
        save_model(model, out_path)
        logger.info("saved model artifact to %s", out_path)
    return model, metrics
