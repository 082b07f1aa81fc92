"""Acceptance suite: every criterion at its stated tolerance, one pass/fail
line per criterion (run with `pytest tests/test_acceptance.py -v -s`)."""

import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import (
    bigram_oracle,
    finite_difference_grads,
    grad_vector_relative_error,
    oracle_perplexity,
    pair_windows_oracle,
)

GOLDEN = Path(__file__).parent / "golden" / "eval_report.json"


def _report(name: str, ok: bool = True) -> None:
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}")


class Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, (
                f"runtime budget exceeded: {self.elapsed:.1f}s >= {self.seconds}s"
            )
        return False


def test_bigram_lm_matches_bruteforce_oracle():
    """log_prob/perplexity vs oracle within 1e-9 on 25 random corpora;
    per-history normalization 1 +/- 1e-9; < 5 s."""
    from stylebot.ngram_lm import BOS, EOS, log_prob, perplexity, train_lm

    rng = np.random.default_rng(31)
    words = ["a", "b", "c", "d", "warp", "core", "how", "you", "sir"]
    with Budget(5.0):
        for trial in range(25):
            n_sents = int(rng.integers(1, 21))
            corpus = [
                [words[i] for i in rng.integers(0, len(words), size=rng.integers(1, 7))]
                for _ in range(n_sents)
            ]
            k = float(rng.choice([0.5, 1.0, 2.0]))
            min_count = int(rng.choice([1, 2]))
            lm = train_lm(corpus, smoothing_k=k, min_count=min_count)
            oracle_lp, _, _ = bigram_oracle(corpus, k=k, min_count=min_count)
            for _ in range(4):
                query = [words[i] for i in rng.integers(0, len(words), size=rng.integers(1, 7))]
                assert abs(log_prob(lm, query) - oracle_lp(query)) < 1e-9
                assert abs(perplexity(lm, query) - oracle_perplexity(oracle_lp, query)) < 1e-9
            predictable = lm.vocab - {BOS}
            for history in lm.vocab - {EOS}:
                total = sum(lm.prob(w, history) for w in predictable)
                assert abs(total - 1.0) < 1e-9
    _report("bigram LM oracle equivalence and normalization")


def test_pair_construction_matches_enumeration_oracle():
    """(A,B),(B,C),(AB,C) exactly; superset across max_context; exhaustive
    scenes up to length 6 vs the window oracle; < 1 s."""
    from stylebot.corpus import Utterance, build_pairs

    def utt(*tokens):
        return Utterance(speaker=None, tokens=tokens, raw=" ".join(tokens))

    with Budget(1.0):
        a, b, c = utt("a1", "a2"), utt("b1"), utt("c1")
        got = [(p.post, p.response) for p in build_pairs([a, b, c], 2)]
        assert got == [
            (("a1", "a2"), ("b1",)),
            (("b1",), ("c1",)),
            (("a1", "a2", "<sep>", "b1"), ("c1",)),
        ]
        for n in range(2, 7):
            scene = [utt(f"u{i}") for i in range(n)]
            raw = [list(u.tokens) for u in scene]
            previous: set = set()
            for max_context in range(1, n + 1):
                got_pairs = [(p.post, p.response, p.context_depth) for p in build_pairs(scene, max_context)]
                assert got_pairs == pair_windows_oracle(raw, max_context)
                current = {(p[0], p[1]) for p in got_pairs}
                assert previous <= current
                previous = current
    _report("pair construction oracle equivalence and superset property")


def test_classifier_separable_accuracy_and_gradient():
    """Held-out accuracy 100% on the separable fixture; gradient vs central
    differences rel err < 1e-5 on 20 random instances; < 10 s."""
    from stylebot.classifier import RouterConfig, loss_and_grad, train_router

    rng = np.random.default_rng(3)
    filler = ["lorem", "ipsum", "dolor", "sit", "amet", "consectetur"]
    with Budget(10.0):
        pos, neg = [], []
        for _ in range(50):
            extra = list(rng.choice(filler, size=rng.integers(1, 4)))
            pos.append(["alpha"] + extra)
            neg.append(["beta"] + extra)
        result = train_router(pos, neg, RouterConfig(seed=13))
        assert result.held_out_accuracy == 1.0

        grad_rng = np.random.default_rng(17)
        for _ in range(20):
            n, f = 6, 10
            x = grad_rng.normal(size=(n, f))
            y = (grad_rng.random(n) > 0.5).astype(np.float64)
            w = grad_rng.normal(size=f)
            b = float(grad_rng.normal())
            _, grad_w, grad_b = loss_and_grad(w, b, x, y, 1e-3)
            eps = 1e-6
            fd_w = np.zeros(f)
            for i in range(f):
                w[i] += eps
                up = loss_and_grad(w, b, x, y, 1e-3)[0]
                w[i] -= 2 * eps
                down = loss_and_grad(w, b, x, y, 1e-3)[0]
                w[i] += eps
                fd_w[i] = (up - down) / (2 * eps)
            fd_b = (
                loss_and_grad(w, b + eps, x, y, 1e-3)[0]
                - loss_and_grad(w, b - eps, x, y, 1e-3)[0]
            ) / (2 * eps)
            analytic = np.append(grad_w, grad_b)
            numeric = np.append(fd_w, fd_b)
            rel = np.linalg.norm(analytic - numeric) / max(
                np.linalg.norm(analytic), np.linalg.norm(numeric)
            )
            assert rel < 1e-5
    _report("classifier 100% separable accuracy and gradient check")


def test_word_graph_shift_and_tiebreak(figure_graph_fixture):
    """Name-prepending candidate produced and selected; edit-distance-1 and
    witnessing edges for every candidate; keyword tie-break fires; < 1 s."""
    from stylebot.ngram_lm import train_lm
    from stylebot.textproc import parse_tagged_line, pos_tag, train_tagger
    from stylebot.wordgraph import (
        BOS_NODE,
        EOS_NODE,
        build_graph,
        insertion_candidates,
        length_normalized_score,
        style_shift,
    )

    with Budget(1.0):
        graph, tagger, lm = figure_graph_fixture
        inp = ["how", "are", "you"]
        tagged_inp = pos_tag(tagger, inp)
        cands = insertion_candidates(graph, tagged_inp)
        assert any(c.inserted_word == "uhura" and c.position == 0 for c in cands)
        for c in cands:
            assert len(c.tokens) == len(inp) + 1
            assert list(c.tokens[: c.position]) + list(c.tokens[c.position + 1 :]) == inp
            node = (c.inserted_word, c.source_pos)
            left = {BOS_NODE} if c.position == 0 else graph.match_token(tagged_inp[c.position - 1])
            right = (
                {EOS_NODE} if c.position == len(inp) else graph.match_token(tagged_inp[c.position])
            )
            assert any(graph.has_edge(l, node) for l in left)
            assert any(graph.has_edge(node, r) for r in right)
        shifted = style_shift(graph, lm, frozenset(["captain"]), inp, tagger)
        assert shifted.best == ("uhura", "how", "are", "you")

        tie_corpus = [parse_tagged_line("captain_NN smiles_VBZ"), parse_tagged_line("dax_NNP smiles_VBZ")]
        tie_graph = build_graph(tie_corpus)
        tie_tagger = train_tagger(tie_corpus)
        tie_lm = train_lm([["captain", "smiles"], ["dax", "smiles"]])
        assert length_normalized_score(tie_lm, ["captain", "smiles"]) == length_normalized_score(
            tie_lm, ["dax", "smiles"]
        )
        tie = style_shift(tie_graph, tie_lm, frozenset(["captain"]), ["smiles"], tie_tagger)
        assert tie.best == ("captain", "smiles")
    _report("word graph insertion, witnesses, selection, keyword tie-break")


def test_seq2seq_gradients_memorization_softmax():
    """Gradient rel err < 1e-4 at 20 random parameter points; 50-pair
    memorization to < 0.1 nats with >= 90% greedy reproduction; per-step
    softmax sums 1 +/- 1e-6; < 3 min."""
    from stylebot.corpus import DialogPair
    from stylebot.seq2seq import (
        EOS_ID,
        Seq2SeqConfig,
        TrainingConfig,
        generate,
        greedy_decode,
        init_params,
        mean_token_loss,
        pair_loss_and_grads,
        train_seq2seq,
    )

    with Budget(180.0):
        rng = np.random.default_rng(42)
        for point in range(20):
            layers = int(rng.integers(1, 3))
            attention = bool(rng.integers(0, 2))
            cfg = Seq2SeqConfig(
                embedding_dim=int(rng.integers(3, 6)),
                hidden_dim=int(rng.integers(4, 9)),
                num_layers=layers,
                attention=attention,
            )
            vocab_size = int(rng.integers(8, 13))
            src = rng.integers(5, vocab_size, size=int(rng.integers(2, 5))).astype(np.int64)
            tgt = np.append(
                rng.integers(5, vocab_size, size=int(rng.integers(1, 5))), EOS_ID
            ).astype(np.int64)
            params = init_params(cfg, vocab_size, int(rng.integers(0, 10_000)))
            _, grads, _ = pair_loss_and_grads(params, cfg, src, tgt)
            numeric = finite_difference_grads(
                lambda: pair_loss_and_grads(params, cfg, src, tgt)[0], params
            )
            assert grad_vector_relative_error(grads, numeric) < 1e-4

        words = [
            "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
            "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
            "quebec", "romeo", "sierra", "tango",
        ]
        data_rng = np.random.default_rng(5)
        pairs = []
        seen = set()
        while len(pairs) < 50:
            post = tuple(data_rng.choice(words, size=data_rng.integers(2, 6)))
            resp = tuple(data_rng.choice(words, size=data_rng.integers(2, 6)))
            if post not in seen:
                seen.add(post)
                pairs.append(DialogPair(post=post, response=resp, domain="toy"))
        model = train_seq2seq(
            Seq2SeqConfig(embedding_dim=32, hidden_dim=64, num_layers=1, attention=True),
            pairs,
            TrainingConfig(epochs=300, learning_rate=0.01, seed=17),
        )
        assert mean_token_loss(model, pairs) < 0.1
        hits = sum(generate(model, p.post).tokens == p.response for p in pairs)
        assert hits >= 45  # >= 90%

        _, prob_vectors = greedy_decode(model, pairs[0].post, collect_probs=True)
        assert prob_vectors
        for probs in prob_vectors:
            assert abs(float(probs.sum()) - 1.0) < 1e-6
    _report("seq2seq gradient check, 50-pair memorization, softmax sums")


def test_gate_verdicts_and_provenance_over_randomized_turns():
    """All three verdicts exercised; final response always the accepted
    candidate or a fallback member, over 1000 randomized stub turns; < 10 s."""
    from stylebot.classifier import TfidfRouter, fit_tfidf
    from stylebot.generators import GeneratorOutput, ScriptedGenerator, StandardResponseSet
    from stylebot.ngram_lm import corpus_perplexity, train_lm
    from stylebot.pipeline import Engine, PipelineConfig, respond
    from stylebot.textproc import parse_tagged_line, train_tagger
    from stylebot.wordgraph import build_graph

    lines = [
        "uhura_NNP how_WRB are_VBP you_PRP",
        "uhura_NNP how_WRB are_VBP things_NNS",
        "i_PRP am_VBP sorry_JJ miranda_NNP",
        "i_PRP am_VBP sorry_JJ",
        "how_WRB are_VBP you_PRP",
    ]
    tagged = [parse_tagged_line(line) for line in lines]
    sentences = [[t.word for t in s] for s in tagged]
    lm = train_lm(sentences)
    graph = build_graph(tagged)
    tagger = train_tagger(tagged)
    fallbacks = StandardResponseSet(
        responses=[("standard", "one"), ("standard", "two"), ("qapla",)],
        klingon_flags=[False, False, True],
        selection_seed=4,
    )
    vocab = fit_tfidf([["a"], ["b"]], use_bigrams=False)
    config = PipelineConfig(reference_perplexity=corpus_perplexity(lm, sentences), seed=4)

    def constant_router(bias):
        return TfidfRouter(
            vocabulary=vocab,
            weights=np.zeros(len(vocab)),
            bias=bias,
            positive_label="startrek",
            negative_label="general",
        )

    words = ["uhura", "how", "are", "you", "zork", "sorry", "am", "i", "grue", "miranda"]
    rng = np.random.default_rng(99)
    verdict_counts: dict[str, int] = {}
    with Budget(10.0):
        for turn in range(1000):
            tokens = tuple(rng.choice(words, size=rng.integers(1, 5)))
            conf = float(rng.uniform(-8, 0))
            gen = ScriptedGenerator({}, GeneratorOutput(tokens, conf))
            engine = Engine(
                router=constant_router(float(rng.choice([-1.0, 0.0]))),
                style_generator=gen,
                general_generator=gen,
                graph=graph,
                style_lm=lm,
                tagger=tagger,
                fallbacks=fallbacks,
                keywords=frozenset(["uhura"]),
                config=config,
            )
            final, trace = respond(engine, ("ping",), f"turn-{turn}")
            verdict_counts[trace.verdict] = verdict_counts.get(trace.verdict, 0) + 1
            if trace.verdict == "accept":
                if trace.candidates is None:
                    assert final == tokens
                else:
                    assert final in [t for t, _ in trace.candidates]
            else:
                assert final in fallbacks.responses
    assert set(verdict_counts) == {"accept", "fallback_low_confidence", "fallback_perplexity"}
    _report(f"gate verdicts and provenance over 1000 stub turns {verdict_counts}")


def test_eval_harness_aggregates_and_golden(engine):
    """Reference-average reproduction within 0.01; overlap hand cases exact;
    fixture eval report matches the frozen golden byte-for-byte; < 30 s."""
    from stylebot.evalharness import (
        AnnotationSheet,
        aggregate_annotations,
        load_eval_set,
        run_eval,
        vocabulary_overlap,
    )

    with Budget(30.0):
        annotators = [f"a{n}" for n in range(10)]
        items = [f"i{n}" for n in range(20)]
        flat = [(a, i) for a in annotators for i in items]
        cells = {
            key: {
                "grammar": 1 if idx < 187 else 0,
                "coherence": 1 if idx < 147 else 0,
                "style": 1 if idx < 172 else 0,
            }
            for idx, key in enumerate(flat)
        }
        result = aggregate_annotations(AnnotationSheet(annotators, items, cells))
        assert result["grammar"] == pytest.approx(93.5)
        assert result["coherence"] == pytest.approx(73.5)
        assert result["style"] == pytest.approx(86.0)
        assert abs(result["average"] - 84.33) <= 0.01
        assert abs(result["average"] - (93.5 + 73.5 + 86.0) / 3) < 1e-12

        assert vocabulary_overlap([["warp", "speed", "now"]], {"warp", "speed"}) == 200 / 3
        assert vocabulary_overlap([["a", "b"], ["c"]], {"a", "b", "c"}) == 100.0

        eval_set = load_eval_set()
        report = run_eval(engine, eval_set, engine.style_lm, set(engine.style_lm.vocab))
        assert report.to_json_text().encode("utf-8") == GOLDEN.read_bytes()
    _report("eval harness aggregation, overlap, and frozen golden report")


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_end_to_end_determinism_and_serving(fixture_dir, tmp_path):
    """train-all twice with one seed -> byte-identical artifacts; a real
    served instance answers 200 with non-empty responses for all 20 eval
    inputs; < 5 min."""
    import requests

    from stylebot.evalharness import load_eval_set
    from stylebot.training import train_all

    with Budget(300.0):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        train_all(fixture_dir / "train_config.json", outdir=out_a)
        train_all(fixture_dir / "train_config.json", outdir=out_b)
        files_a = sorted(p.name for p in out_a.iterdir())
        files_b = sorted(p.name for p in out_b.iterdir())
        assert files_a == files_b
        for name in files_a:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

        port = _free_port()
        proc = subprocess.Popen(
            [
                sys.executable, "-m", "stylebot", "serve",
                "--manifest", str(out_a / "manifest.json"),
                "--bind", f"127.0.0.1:{port}",
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        try:
            base = f"http://127.0.0.1:{port}"
            deadline = time.time() + 60
            ready = False
            while time.time() < deadline:
                try:
                    if requests.get(f"{base}/api/health", timeout=2).json()["status"] == "ok":
                        ready = True
                        break
                except requests.RequestException:
                    pass
                time.sleep(0.2)
            assert ready, "service never became healthy"
            for item in load_eval_set().items:
                r = requests.post(
                    f"{base}/api/chat",
                    json={"session_id": "acc", "utterance": item.utterance},
                    timeout=10,
                )
                assert r.status_code == 200
                body = r.json()
                assert body["response"].strip()
                tr = requests.get(f"{base}{body['trace_ref']}", timeout=10)
                assert tr.status_code == 200
        finally:
            proc.terminate()
            proc.wait(timeout=10)
    _report("end-to-end determinism and live service over all eval inputs")
