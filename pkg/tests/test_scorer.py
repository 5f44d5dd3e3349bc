"""Baseline scorer training, the scorer contract, and the remote client."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from lfrerank.pairgen import SOURCE_BEAM, SOURCE_GOLD, PairExample
from lfrerank.scorer import (
    BaselineConfig,
    BaselineScorer,
    ConstantScorer,
    DegenerateCorpusError,
    OracleScorer,
    RemoteProtocolError,
    RemoteScorer,
    RemoteUnavailableError,
    Scorer,
    evaluate_pairs,
    oracle_scorer,
    score_batch,
    tokenize,
    train_baseline,
)
from lfrerank.synth import make_pair_texts, split_pairs


def _token_overlap(a, b):
    sa, sb = set(tokenize(a)), set(tokenize(b))
    return len(sa & sb) / len(sa | sb) if sa | sb else 1.0


def best_threshold_accuracy(pairs):
    """Grid-search a token-overlap threshold; confirms the corpus is separable."""
    scored = [(_token_overlap(p.text_a, p.text_b), p.label) for p in pairs]
    best = 0.0
    for i in range(101):
        threshold = i / 100
        acc = sum(1 for s, y in scored if (s > threshold) == (y == 1)) / len(scored)
        best = max(best, acc)
    return best


@pytest.fixture(scope="module")
def separable_corpus():
    pairs = make_pair_texts(n_pairs=400, seed=7)
    return split_pairs(pairs, 0.2, seed=1)


@pytest.fixture(scope="module")
def trained(separable_corpus):
    train, _ = separable_corpus
    return train_baseline(train, BaselineConfig(epochs=150, seed=0))


class TestTrainBaseline:
    def test_corpus_is_separable_then_model_fits(self, separable_corpus):
        train, held = separable_corpus
        assert best_threshold_accuracy(held) >= 0.90
        model = train_baseline(train, BaselineConfig(epochs=150, seed=0))
        assert evaluate_pairs(model, held) >= 0.90

    def test_single_label_rejected(self):
        pairs = [PairExample("a b", "a c", 1, SOURCE_GOLD)] * 5
        with pytest.raises(DegenerateCorpusError):
            train_baseline(pairs)

    def test_same_seed_identical_weights(self, separable_corpus):
        train, _ = separable_corpus
        cfg = BaselineConfig(epochs=40, seed=11)
        m1 = train_baseline(train, cfg)
        m2 = train_baseline(train, cfg)
        assert m1.weights.tolist() == m2.weights.tolist()
        assert m1.bias == m2.bias

    def test_model_file_bitwise_deterministic(self, separable_corpus, tmp_path):
        train, _ = separable_corpus
        cfg = BaselineConfig(epochs=40, seed=11)
        p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
        train_baseline(train, cfg).save(p1)
        train_baseline(train, cfg).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_save_load_round_trip(self, trained, tmp_path):
        path = tmp_path / "model.json"
        trained.save(path)
        loaded = BaselineScorer.load(path)
        pairs = [("a b c", "a b d"), ("x", "y z")]
        assert loaded.score_pairs(pairs) == trained.score_pairs(pairs)

    def test_load_rejects_bad_version(self, trained, tmp_path):
        path = tmp_path / "model.json"
        trained.save(path)
        payload = json.loads(path.read_text())
        payload["format_version"] = 99
        path.write_text(json.dumps(payload))
        with pytest.raises(ValueError):
            BaselineScorer.load(path)


class TestScoreBatch:
    def test_identical_strings_score_high(self, trained):
        [score] = score_batch([("a b c", "a b c")], trained)
        assert score > 0.5

    def test_empty_pairs(self, trained):
        assert score_batch([], trained) == []

    def test_length_mismatch_rejected(self):
        class Broken(Scorer):
            def score_pairs(self, pairs):
                return [0.5] * (len(pairs) + 1)

        with pytest.raises(RemoteProtocolError):
            score_batch([("a", "b"), ("c", "d")], Broken())

    def test_out_of_range_rejected_not_clamped(self):
        class Wild(Scorer):
            def score_pairs(self, pairs):
                return [1.5] * len(pairs)

        with pytest.raises(RemoteProtocolError):
            score_batch([("a", "b")], Wild())

    def test_scores_in_unit_interval(self, trained):
        pairs = [("alpha beta", "gamma"), ("", ""), ("same", "same")]
        for s in score_batch(pairs, trained):
            assert 0.0 <= s <= 1.0

    def test_symmetry(self, trained):
        a, b = "the river crosses the state", "state ( river )"
        assert score_batch([(a, b)], trained) == score_batch([(b, a)], trained)

    def test_determinism(self, trained):
        pairs = [("p q r", "p q s")] * 3
        assert score_batch(pairs, trained) == score_batch(pairs, trained)


class TestSimpleScorers:
    def test_oracle_hit(self):
        scorer = oracle_scorer("the gold text")
        assert scorer.score_pairs([("x", "the gold text")]) == [1.0]

    def test_oracle_miss(self):
        scorer = oracle_scorer("the gold text")
        assert scorer.score_pairs([("x", "other")]) == [0.0]

    def test_oracle_batch_indicator(self):
        scorer = OracleScorer("g")
        pairs = [("u", "g"), ("u", "h"), ("u", "g")]
        assert scorer.score_pairs(pairs) == [1.0, 0.0, 1.0]

    def test_constant_validates_range(self):
        with pytest.raises(ValueError):
            ConstantScorer(1.2)
        assert ConstantScorer(0.7).score_pairs([("a", "b")]) == [0.7]


class _CannedHandler(BaseHTTPRequestHandler):
    responses = {}

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        n = len(body.get("pairs", []))
        status, payload = self.responses.get(self.server.mode, (200, None))
        if payload is None:
            payload = json.dumps({"scores": [0.5] * n}).encode()
        elif callable(payload):
            payload = payload(n)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def canned_server():
    _CannedHandler.responses = {
        "ok": (200, None),
        "extra": (200, lambda n: json.dumps({"scores": [0.5] * (n + 1)}).encode()),
        "range": (200, lambda n: json.dumps({"scores": [2.0] * n}).encode()),
        "bool": (200, lambda n: json.dumps({"scores": [True] * n}).encode()),
        "garbage": (200, lambda n: b"not json"),
        "shape": (200, lambda n: json.dumps({"values": []}).encode()),
        "error": (500, lambda n: b"{}"),
    }
    server = ThreadingHTTPServer(("127.0.0.1", 0), _CannedHandler)
    server.mode = "ok"
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()


class TestRemoteScorer:
    def _client(self, server):
        return RemoteScorer(f"http://127.0.0.1:{server.server_address[1]}")

    def test_ok(self, canned_server):
        canned_server.mode = "ok"
        assert self._client(canned_server).score_pairs([("a", "b")]) == [0.5]

    def test_empty_short_circuits(self, canned_server):
        assert self._client(canned_server).score_pairs([]) == []

    @pytest.mark.parametrize("mode", ["extra", "range", "bool", "garbage", "shape", "error"])
    def test_protocol_violations(self, canned_server, mode):
        canned_server.mode = mode
        with pytest.raises(RemoteProtocolError):
            self._client(canned_server).score_pairs([("a", "b"), ("c", "d")])

    def test_unreachable(self):
        client = RemoteScorer("http://127.0.0.1:1", timeout=0.5)
        with pytest.raises(RemoteUnavailableError):
            client.score_pairs([("a", "b")])


class TestPairEvaluation:
    def test_empty_corpus_rejected(self, trained):
        with pytest.raises(ValueError):
            evaluate_pairs(trained, [])

    def test_perfect_on_labels(self):
        class Echo(Scorer):
            def score_pairs(self, pairs):
                return [1.0 if a == b else 0.0 for a, b in pairs]

        pairs = [
            PairExample("x", "x", 1, SOURCE_GOLD),
            PairExample("x", "y", 0, SOURCE_BEAM),
        ]
        assert evaluate_pairs(Echo(), pairs) == 1.0
