"""Sentence-pair classifier behind the scoring service.

A deliberately small model: hashed bag-of-token embeddings for each sentence,
combined symmetrically (sum, absolute difference, product) and passed through
a two-layer head with a sigmoid output. Token hashing keeps the vocabulary
fixed so artifacts stay self-contained.
"""

from __future__ import annotations

import re
import zlib

import torch
from torch import nn

VOCAB_SIZE = 4096
EMBEDDING_DIM = 32
HIDDEN_DIM = 64
ARTIFACT_VERSION = 1

_TOKEN_RE = re.compile(r"[a-z0-9_$.']+")


def token_ids(text: str) -> list[int]:
    """Hash tokens into [1, VOCAB_SIZE]; id 0 is reserved for empty input."""
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        return [0]
    return [zlib.crc32(t.encode("utf-8")) % VOCAB_SIZE + 1 for t in tokens]


class PairClassifier(nn.Module):
    def __init__(self):
        super().__init__()
        self.embedding = nn.EmbeddingBag(VOCAB_SIZE + 1, EMBEDDING_DIM, mode="mean")
        self.head = nn.Sequential(
            nn.Linear(3 * EMBEDDING_DIM, HIDDEN_DIM),
            nn.ReLU(),
            nn.Linear(HIDDEN_DIM, 1),
        )

    def _embed(self, texts: list[str]) -> torch.Tensor:
        ids, offsets = [], []
        for text in texts:
            offsets.append(len(ids))
            ids.extend(token_ids(text))
        return self.embedding(torch.tensor(ids, dtype=torch.long), torch.tensor(offsets, dtype=torch.long))

    def forward(self, texts_a: list[str], texts_b: list[str]) -> torch.Tensor:
        ea = self._embed(texts_a)
        eb = self._embed(texts_b)
        features = torch.cat([ea + eb, (ea - eb).abs(), ea * eb], dim=1)
        return self.head(features).squeeze(1)

    @torch.no_grad()
    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        self.eval()
        logits = self.forward([a for a, _ in pairs], [b for _, b in pairs])
        return [float(s) for s in torch.sigmoid(logits)]


def save_model(model: PairClassifier, path) -> None:
    torch.save({"version": ARTIFACT_VERSION, "state_dict": model.state_dict()}, path)


def load_model(path) -> PairClassifier:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("version") != ARTIFACT_VERSION:
        raise ValueError(f"unsupported model artifact version {payload.get('version')!r}")
    model = PairClassifier()
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
