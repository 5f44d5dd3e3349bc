"""Similarity scorers mapping sentence pairs to scores in [0, 1].

The scorer contract is a single method, ``score_pairs``, returning one score
per input pair in order. A trainable feature-based baseline keeps the whole
pipeline self-contained; a remote client speaks the HTTP wire protocol
(POST /score with {"pairs": [[a, b], ...]} answered by {"scores": [...]})
for plugging in an external model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests

MODEL_FORMAT_VERSION = 1

_TOKEN_RE = re.compile(r"[a-z0-9_$.']+")


class RemoteProtocolError(Exception):
    """The remote scorer violated the wire protocol (shape, range, status)."""


class RemoteUnavailableError(Exception):
    """The remote scorer could not be reached."""


class DegenerateCorpusError(ValueError):
    """Training corpus contains a single label."""


class Scorer:
    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        raise NotImplementedError


def score_batch(pairs: Sequence[tuple[str, str]], scorer: Scorer) -> list[float]:
    """Score pairs, enforcing the contract: one score per pair, each in [0, 1].

    Violations raise RemoteProtocolError instead of being clamped.
    """
    pairs = list(pairs)
    if not pairs:
        return []
    scores = scorer.score_pairs(pairs)
    if len(scores) != len(pairs):
        raise RemoteProtocolError(
            f"scorer returned {len(scores)} scores for {len(pairs)} pairs"
        )
    out = []
    for s in scores:
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not 0.0 <= s <= 1.0:
            raise RemoteProtocolError(f"score out of range [0, 1]: {s!r}")
        out.append(float(s))
    return out


class ConstantScorer(Scorer):
    def __init__(self, value: float):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"constant score must be in [0, 1], got {value}")
        self.value = float(value)

    def score_pairs(self, pairs):
        return [self.value] * len(pairs)


class OracleScorer(Scorer):
    """Scores 1.0 when the second element equals the gold processed text."""

    def __init__(self, gold_text: str):
        self.gold_text = gold_text

    def score_pairs(self, pairs):
        return [1.0 if b == self.gold_text else 0.0 for _, b in pairs]


def oracle_scorer(gold_processed_text: str) -> OracleScorer:
    return OracleScorer(gold_processed_text)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace and punctuation."""
    return _TOKEN_RE.findall(text.lower())


def _char_ngrams(tokens: list[str], n: int = 3) -> set[str]:
    joined = " ".join(tokens)
    if len(joined) <= n:
        return {joined} if joined else set()
    return {joined[i : i + n] for i in range(len(joined) - n + 1)}


def _jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


@dataclass(frozen=True)
class BaselineConfig:
    epochs: int = 150
    learning_rate: float = 1.0
    batch_size: int = 256
    l2: float = 0.0
    seed: int = 0
    rare_df_max: int = 2


class BaselineScorer(Scorer):
    """Logistic model over symmetric surface-similarity features.

    Features: token Jaccard, character trigram Jaccard, token length ratio,
    and the shared fraction of rare tokens (rare = document frequency at or
    below the configured cap in the training corpus; unseen tokens count as
    rare). The logistic link keeps scores inside (0, 1).
    """

    FEATURES = ("token_jaccard", "char3_jaccard", "length_ratio", "shared_rare")

    def __init__(
        self,
        weights: np.ndarray,
        bias: float,
        common_tokens: frozenset[str],
        config: BaselineConfig,
    ):
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (len(self.FEATURES),):
            raise ValueError(f"expected {len(self.FEATURES)} weights, got {self.weights.shape}")
        self.bias = float(bias)
        self.common_tokens = frozenset(common_tokens)
        self.config = config

    def features(self, text_a: str, text_b: str) -> np.ndarray:
        ta, tb = tokenize(text_a), tokenize(text_b)
        sa, sb = set(ta), set(tb)
        token_j = _jaccard(sa, sb)
        char_j = _jaccard(_char_ngrams(ta), _char_ngrams(tb))
        if not ta and not tb:
            length = 1.0
        elif not ta or not tb:
            length = 0.0
        else:
            length = min(len(ta), len(tb)) / max(len(ta), len(tb))
        rare_a = sa - self.common_tokens
        rare_b = sb - self.common_tokens
        rare_union = len(rare_a | rare_b)
        shared_rare = len(rare_a & rare_b) / rare_union if rare_union else 0.0
        return np.array([token_j, char_j, length, shared_rare], dtype=np.float64)

    def score_pairs(self, pairs):
        if not pairs:
            return []
        x = np.stack([self.features(a, b) for a, b in pairs])
        z = x @ self.weights + self.bias
        return [float(s) for s in _sigmoid(z)]

    def save(self, path) -> None:
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "features": list(self.FEATURES),
            "weights": [float(w) for w in self.weights],
            "bias": self.bias,
            "seed": self.config.seed,
            "config": {
                "epochs": self.config.epochs,
                "learning_rate": self.config.learning_rate,
                "batch_size": self.config.batch_size,
                "l2": self.config.l2,
                "rare_df_max": self.config.rare_df_max,
            },
            "common_tokens": sorted(self.common_tokens),
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "BaselineScorer":
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        version = payload.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version!r}")
        if tuple(payload["features"]) != cls.FEATURES:
            raise ValueError(f"unexpected feature set {payload['features']}")
        cfg = payload.get("config", {})
        config = BaselineConfig(
            epochs=cfg.get("epochs", 0),
            learning_rate=cfg.get("learning_rate", 0.0),
            batch_size=cfg.get("batch_size", 0),
            l2=cfg.get("l2", 0.0),
            seed=payload.get("seed", 0),
            rare_df_max=cfg.get("rare_df_max", 0),
        )
        return cls(
            np.array(payload["weights"], dtype=np.float64),
            payload["bias"],
            frozenset(payload["common_tokens"]),
            config,
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _pair_fields(pair) -> tuple[str, str, int]:
    if hasattr(pair, "text_a"):
        return pair.text_a, pair.text_b, pair.label
    a, b, label = pair
    return a, b, label


def train_baseline(corpus, config: BaselineConfig = BaselineConfig()) -> BaselineScorer:
    """Fit the baseline by minibatch gradient descent on log-loss.

    Deterministic under a fixed seed (the seed drives minibatch shuffling).
    Raises DegenerateCorpusError when the corpus has a single label.
    """
    rows = [_pair_fields(p) for p in corpus]
    labels = {label for _, _, label in rows}
    if labels != {0, 1}:
        raise DegenerateCorpusError(f"corpus labels must include both 0 and 1, got {sorted(labels)}")

    df: dict[str, int] = {}
    for a, b, _ in rows:
        for text in (a, b):
            for token in set(tokenize(text)):
                df[token] = df.get(token, 0) + 1
    common = frozenset(t for t, n in df.items() if n > config.rare_df_max)

    model = BaselineScorer(np.zeros(4), 0.0, common, config)
    x = np.stack([model.features(a, b) for a, b, _ in rows])
    y = np.array([label for _, _, label in rows], dtype=np.float64)

    w = np.zeros(4, dtype=np.float64)
    bias = 0.0
    rng = np.random.default_rng(config.seed)
    n = len(rows)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x[idx], y[idx]
            err = _sigmoid(xb @ w + bias) - yb
            w -= config.learning_rate * (xb.T @ err / len(idx) + config.l2 * w)
            bias -= config.learning_rate * float(np.mean(err))
    return BaselineScorer(w, bias, common, config)


def evaluate_pairs(scorer: Scorer, corpus) -> float:
    """Pair classification accuracy at the 0.5 threshold."""
    rows = [_pair_fields(p) for p in corpus]
    if not rows:
        raise ValueError("empty evaluation corpus")
    scores = score_batch([(a, b) for a, b, _ in rows], scorer)
    correct = sum(1 for s, (_, _, label) in zip(scores, rows) if (s > 0.5) == (label == 1))
    return correct / len(rows)


class RemoteScorer(Scorer):
    """Client for the HTTP scorer protocol.

    POST <base_url>/score with {"pairs": [["a", "b"], ...]}; the reply must be
    {"scores": [...]} with one value in [0, 1] per pair, in order. Any other
    reply raises RemoteProtocolError; transport failures raise
    RemoteUnavailableError.
    """

    def __init__(self, base_url: str, timeout: float = 30.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        # module-level requests is safe for concurrent in-flight batches;
        # a shared Session is not
        self.session = session or requests

    def score_pairs(self, pairs):
        if not pairs:
            return []
        try:
            resp = self.session.post(
                f"{self.base_url}/score",
                json={"pairs": [[a, b] for a, b in pairs]},
                timeout=self.timeout,
            )
        except requests.RequestException as e:
            raise RemoteUnavailableError(f"scorer at {self.base_url} unreachable: {e}") from e
        if resp.status_code != 200:
            raise RemoteProtocolError(f"scorer returned HTTP {resp.status_code}")
        try:
            body = resp.json()
        except ValueError as e:
            raise RemoteProtocolError(f"scorer reply is not JSON: {e}") from e
        if not isinstance(body, dict) or not isinstance(body.get("scores"), list):
            raise RemoteProtocolError(f"scorer reply missing 'scores' list: {body!r}")
        scores = body["scores"]
        if len(scores) != len(pairs):
            raise RemoteProtocolError(
                f"scorer returned {len(scores)} scores for {len(pairs)} pairs"
            )
        for s in scores:
            if isinstance(s, bool) or not isinstance(s, (int, float)) or not 0.0 <= s <= 1.0:
                raise RemoteProtocolError(f"score out of range [0, 1]: {s!r}")
        return [float(s) for s in scores]
