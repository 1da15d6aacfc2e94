"""Lexicon and suffix-rule POS tagging, one-hot encoding."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from opinionrec.tagger import (N_TAGS, PENN_TAGS, TAG_INDEX, TagLexicon, load_lexicon, one_hot,
                               one_hot_matrix, read_tag_file, tag_sequence)

words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=12)


def test_tag_set():
    assert N_TAGS == 45 and len(set(PENN_TAGS)) == 45
    assert TAG_INDEX["CC"] == 0
    word_tags = PENN_TAGS[:36]
    assert list(word_tags) == sorted(word_tags)


def test_lexicon_hits():
    lex = TagLexicon({"great": "JJ", "sound": "NN"})
    assert tag_sequence(["great", "sound"], lex) == ["JJ", "NN"]


@pytest.mark.parametrize("word,tag", [("blorping", "VBG"), ("zzqq", "NN"), ("frobbed", "VBD"),
                                      ("quickly", "RB"), ("widgets", "NNS"), ("grumpest", "JJS"),
                                      ("tinier", "JJR"), ("ring", "NN"), ("bed", "NN")])
def test_suffix_rules(word, tag):
    # "ring" and "bed" leave stems shorter than three letters, so no rule fires
    assert TagLexicon().tag(word) == tag


def test_longest_suffix_wins():
    lex = TagLexicon(suffix_rules=(("s", "NNS"), ("ness", "NN")))
    assert lex.tag("kindness") == "NN"


def test_unknown_tag_rejected():
    with pytest.raises(ValueError):
        TagLexicon({"x": "NOPE"})


def test_shipped_lexicon_and_override(tmp_path):
    lex = load_lexicon()
    assert len(lex.words) > 500
    assert lex.tag("the") == "DT"
    override = tmp_path / "o.tsv"
    override.write_text("# comment\nthe\tNN\nblorp\tVB\n")
    merged = load_lexicon(override=override)
    assert merged.tag("the") == "NN" and merged.tag("blorp") == "VB"
    assert read_tag_file(override) == {"the": "NN", "blorp": "VB"}


@given(st.lists(words, max_size=30))
def test_total_length_preserving_deterministic(tokens):
    lex = load_lexicon()
    tags = tag_sequence(tokens, lex)
    assert len(tags) == len(tokens)
    assert all(t in TAG_INDEX for t in tags)
    assert tags == tag_sequence(tokens, lex)


def test_one_hot_cc():
    v = one_hot("CC")
    assert v[0] == 1.0 and v.sum() == 1.0 and v.shape == (45,)


@given(st.sampled_from(PENN_TAGS), st.sampled_from(PENN_TAGS))
def test_one_hot_orthonormal(a, b):
    assert one_hot(a).sum() == 1.0
    assert one_hot(a) @ one_hot(b) == float(a == b)


def test_one_hot_matrix_pads_and_truncates():
    m = one_hot_matrix(["NN", "JJ", "VB"], 2)
    assert m.shape == (2, 45)
    assert m[0, TAG_INDEX["NN"]] == 1 and m[1, TAG_INDEX["JJ"]] == 1
    padded = one_hot_matrix(["NN"], 4)
    assert np.all(padded[1:] == 0)
