"""Deterministic synthetic corpora for self-contained experiments.

``make_corpus`` builds a dataset plus beams with exact gold-presence and
generator-top-1 rates, so oracle metrics have closed-form expected values.
``make_pair_texts`` builds a linearly separable sentence-pair corpus
(positives share at least 60% of their tokens, negatives at most 20%).
"""

from __future__ import annotations

import random

from .data import BeamCandidate, DatasetExample, Utterance
from .lf import FUNQL, parse
from .pairgen import SOURCE_BEAM, SOURCE_GOLD, PairExample

OVERNIGHT_DOMAINS = (
    "basketball",
    "blocks",
    "calendar",
    "housing",
    "publications",
    "recipes",
    "restaurants",
    "social",
)

_NOUNS = (
    "river", "mountain", "city", "state", "flight", "airline", "meeting",
    "player", "recipe", "article", "venue", "lake", "road", "park", "train",
    "hotel", "museum", "garden", "bridge", "harbor", "castle", "island",
    "valley", "canyon", "forest", "desert", "beach", "tower", "square",
    "market", "library", "stadium", "theater", "airport", "station", "plaza",
    "house", "school", "office", "farm",
)

_RELATIONS = (
    "crosses", "borders", "serves", "visits", "joins", "cites", "hosts",
    "feeds", "links", "guides", "ranks", "tracks", "maps", "lists", "counts",
    "finds", "marks", "keeps", "sells", "shows",
)

_FILLERS = (("the", "some"), ("which", "the"), ("every", "some"), ("each", "any"))

_EXTRA_WORDS = (
    "amber", "basil", "cedar", "daisy", "ember", "fable", "gale", "hazel",
    "iris", "jade", "kite", "lilac", "maple", "nectar", "olive", "pearl",
    "quartz", "reed", "sage", "thyme", "umber", "violet", "willow", "yarrow",
    "zephyr", "acorn", "birch", "clover", "dew", "elm", "fern", "grove",
    "heather", "ivy", "juniper", "kelp", "laurel", "moss", "nettle", "oak",
    "poppy", "quince", "rose", "sorrel", "tulip", "vine", "wheat", "aster",
    "briar", "cress", "dill", "elder", "flax", "gorse", "holly", "indigo",
    "jasmine", "larch", "mint", "nutmeg",
)


def _sample_triple(rng: random.Random) -> tuple[str, str, str]:
    n1 = rng.choice(_NOUNS)
    n2 = rng.choice([n for n in _NOUNS if n != n1])
    rel = rng.choice(_RELATIONS)
    return n1, rel, n2


def _mutate(triple: tuple[str, str, str], rng: random.Random) -> tuple[str, str, str]:
    n1, rel, n2 = triple
    slots = rng.sample(range(3), rng.choice((1, 1, 2)))
    out = [n1, rel, n2]
    for slot in slots:
        pool = _RELATIONS if slot == 1 else _NOUNS
        out[slot] = rng.choice([w for w in pool if w != out[slot]])
    return tuple(out)


def _lf_text(triple: tuple[str, str, str]) -> str:
    n1, rel, n2 = triple
    return f"{rel}({n1},{n2})"


def make_corpus(
    n_examples: int = 200,
    beam_size: int = 10,
    gold_rate: float = 0.95,
    top1_rate: float = 0.70,
    seed: int = 13,
) -> tuple[list[DatasetExample], dict[str, list[BeamCandidate]]]:
    """Dataset plus beams with exact category counts.

    round(n * top1_rate) examples have gold at rank 1, round(n * gold_rate)
    have gold somewhere in the beam, and the rest have no gold candidate.
    """
    rng = random.Random(seed)
    n_gold = round(n_examples * gold_rate)
    n_top1 = round(n_examples * top1_rate)
    if not 0 <= n_top1 <= n_gold <= n_examples:
        raise ValueError("need top1_rate <= gold_rate <= 1")
    categories = ["top1"] * n_top1 + ["lower"] * (n_gold - n_top1) + ["absent"] * (
        n_examples - n_gold
    )
    rng.shuffle(categories)

    dataset: list[DatasetExample] = []
    beams: dict[str, list[BeamCandidate]] = {}
    for i, category in enumerate(categories):
        example_id = f"ex{i:04d}"
        domain = OVERNIGHT_DOMAINS[i % len(OVERNIGHT_DOMAINS)]
        gold_triple = _sample_triple(rng)
        f1, f2 = rng.choice(_FILLERS)
        n1, rel, n2 = gold_triple
        text = f"{f1} {n1} {rel} {f2} {n2}"
        gold_lf = parse(_lf_text(gold_triple), FUNQL)
        dataset.append(
            DatasetExample(
                id=example_id,
                utterance=Utterance(example_id, text, domain),
                gold_lf=gold_lf,
                domain=domain,
                formalism=FUNQL,
            )
        )

        if category == "top1":
            gold_rank = 1
        elif category == "lower":
            gold_rank = rng.randint(2, beam_size)
        else:
            gold_rank = None
        used = {gold_triple}
        candidates = []
        for rank in range(1, beam_size + 1):
            if rank == gold_rank:
                triple = gold_triple
            else:
                triple = _mutate(gold_triple, rng)
                while triple in used:
                    triple = _mutate(gold_triple, rng)
                used.add(triple)
            candidates.append(
                BeamCandidate(
                    lf=parse(_lf_text(triple), FUNQL),
                    generator_rank=rank,
                    generator_score=round(1.0 / rank, 6),
                )
            )
        beams[example_id] = candidates
    return dataset, beams


def make_pair_texts(n_pairs: int = 400, seed: int = 7) -> list[PairExample]:
    """Separable pair corpus: positives keep >= 6 of 10 tokens, negatives <= 2."""
    vocab = list(_NOUNS + _RELATIONS + _EXTRA_WORDS)
    rng = random.Random(seed)
    pairs = []
    for i in range(n_pairs):
        base = rng.sample(vocab, 10)
        positive = i % 2 == 0
        n_replace = rng.randint(1, 4) if positive else rng.randint(8, 10)
        replacements = rng.sample([w for w in vocab if w not in base], n_replace)
        partner = list(base)
        for pos, word in zip(rng.sample(range(10), n_replace), replacements):
            partner[pos] = word
        pairs.append(
            PairExample(
                " ".join(base),
                " ".join(partner),
                1 if positive else 0,
                SOURCE_GOLD if positive else SOURCE_BEAM,
            )
        )
    return pairs


def split_pairs(pairs, holdout_frac: float = 0.2, seed: int = 0):
    """Seeded shuffle followed by a train/held-out split."""
    if not 0.0 < holdout_frac < 1.0:
        raise ValueError("holdout_frac must be in (0, 1)")
    shuffled = list(pairs)
    random.Random(seed).shuffle(shuffled)
    n_holdout = max(1, int(len(shuffled) * holdout_frac))
    return shuffled[n_holdout:], shuffled[:n_holdout]
