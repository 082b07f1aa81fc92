import pytest
from hypothesis import given
from hypothesis import strategies as st

from stylebot.textproc import (
    DEFAULT_SUFFIX_RULES,
    TAGSET,
    TaggedToken,
    default_stopwords,
    default_tagger,
    load_tagged_corpus,
    parse_tagged_line,
    pos_tag,
    remove_stopwords,
    tokenize,
    train_tagger,
)


def tagged(*pairs):
    return [TaggedToken(w, t) for w, t in pairs]


class TestTokenize:
    def test_lowercases_and_splits_punctuation(self):
        assert tokenize("Fascinating, Captain.") == ["fascinating", ",", "captain", "."]

    def test_whitespace_only(self):
        assert tokenize("   \t ") == []

    def test_apostrophes_split(self):
        assert tokenize("don't") == ["don", "'", "t"]


class TestTrainTagger:
    def test_majority_tag(self):
        model = train_tagger([tagged(("run", "VB"), ("run", "VB"), ("run", "NN"))])
        assert model.lexicon["run"] == "VB"

    def test_single_tag_becomes_default(self):
        model = train_tagger([tagged(("a", "DT"))])
        assert model.default_tag == "DT"

    def test_majority_tie_breaks_lexicographically(self):
        model = train_tagger([tagged(("run", "VB"), ("run", "NN"))])
        assert model.lexicon["run"] == "NN"

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty tagger corpus"):
            train_tagger([])

    def test_suffix_rule_applies_to_unseen_word(self):
        model = train_tagger([tagged(("a", "DT"))])
        assert pos_tag(model, ["quickly"])[0].pos == "RB"
        assert ("ly", "RB") in DEFAULT_SUFFIX_RULES


class TestPosTag:
    def test_empty_input(self):
        model = train_tagger([tagged(("a", "DT"))])
        assert pos_tag(model, []) == []

    def test_lexicon_lookup(self):
        model = train_tagger([tagged(("run", "VB"), ("run", "VB"), ("run", "NN"))])
        assert pos_tag(model, ["run"]) == [TaggedToken("run", "VB")]

    def test_shipped_model_lookup_and_fallback(self):
        model = default_tagger()
        out = pos_tag(model, ["captain", "frobnicates"])
        assert out[0] == TaggedToken("captain", "NN")
        # unseen word, "-s" suffix rule
        assert out[1] == TaggedToken("frobnicates", "NNS")

    @given(st.lists(st.text(alphabet="abcdefg", min_size=1, max_size=8), max_size=12))
    def test_length_preserving_and_tags_in_tagset(self, words):
        model = default_tagger()
        out = pos_tag(model, words)
        assert len(out) == len(words)
        assert all(t.pos in TAGSET for t in out)

    def test_deterministic(self):
        model = default_tagger()
        toks = ["the", "warp", "core", "is", "stable", "."]
        assert pos_tag(model, toks) == pos_tag(model, toks)


class TestStopwords:
    def test_the_removed(self):
        assert remove_stopwords(["the", "warp", "drive"]) == ["warp", "drive"]

    def test_empty(self):
        assert remove_stopwords([]) == []

    def test_shipped_list_example(self):
        assert remove_stopwords(["i", "do", "not", "know"]) == ["know"]

    @given(st.lists(st.sampled_from(["i", "the", "warp", "core", "not", "engage"]), max_size=20))
    def test_idempotent(self, toks):
        once = remove_stopwords(toks)
        assert remove_stopwords(once) == once


class TestTaggerModelRoundtrip:
    def test_save_load(self, tmp_path):
        model = default_tagger()
        path = tmp_path / "tagger.json"
        model.save(path)
        from stylebot.textproc import TaggerModel

        loaded = TaggerModel.load(path)
        assert loaded.lexicon == model.lexicon
        assert loaded.default_tag == model.default_tag
        assert loaded.suffix_rules == model.suffix_rules

    def test_shipped_corpus_parses_and_tags_in_tagset(self):
        corpus = load_tagged_corpus()
        assert len(corpus) >= 200
        assert all(t.pos in TAGSET for s in corpus for t in s)

    def test_malformed_tagged_token_rejected(self):
        with pytest.raises(ValueError, match="malformed"):
            parse_tagged_line("notag")
