import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import BACKENDS, use_backend
from medspeech.errors import EmptyCorpus, EmptyReference
from medspeech.wer import WerBreakdown, WordSequence, corpus_wer, normalize_tokens, wer

words = st.lists(st.sampled_from("abcde"), max_size=8)


def test_normalize_examples():
    assert normalize_tokens("The cat, sat.").words == ("the", "cat", "sat")
    assert normalize_tokens("").words == ()
    assert normalize_tokens("  A  b ").words == ("a", "b")
    assert normalize_tokens('"Hi!" (x) [y]; z: w?').words == ("hi", "x", "y", "z", "w")


def test_word_sequence_rejects_bad_tokens():
    for bad in ("", " a", "a b", "b\t"):
        with pytest.raises(ValueError):
            WordSequence((bad,))


def test_examples(backend):
    assert wer("the cat", "the cat").wer == 0
    b = wer("the cat sat on the mat".split(), "the cat sat mat".split())
    assert (b.substitutions, b.deletions, b.insertions) == (0, 2, 0)
    assert b.wer == pytest.approx(2 / 6)
    b = wer(["a", "b", "c"], ["a", "x", "c", "y"])
    assert (b.substitutions, b.deletions, b.insertions) == (1, 0, 1)
    assert b.wer == pytest.approx(2 / 3)


def test_examples_agree_with_oracle():
    assert oracles.optimal_counts("the cat sat on the mat".split(), "the cat sat mat".split()) == {(0, 2, 0)}
    assert oracles.optimal_counts("a b c".split(), "a x c y".split()) == {(1, 0, 1)}


def test_empty_reference(backend):
    with pytest.raises(EmptyReference):
        wer([], ["a"])
    with pytest.raises(EmptyReference):
        wer("...", "a")


def test_wer_can_exceed_one(backend):
    assert wer(["a"], ["x", "y", "z"]).wer == 3.0


@pytest.mark.parametrize("name", BACKENDS)
@settings(max_examples=300, deadline=None)
@given(ref=words.filter(bool), hyp=words)
def test_matches_oracles(name, ref, hyp):
    with use_backend(name):
        b = wer(ref, hyp)
    counts = (b.substitutions, b.deletions, b.insertions)
    assert b.errors == oracles.levenshtein(ref, hyp)
    assert counts in oracles.optimal_counts(ref, hyp)
    assert counts == oracles.tiebreak_counts(ref, hyp)
    assert b.hits + b.substitutions + b.deletions == len(ref)
    assert abs(len(ref) - len(hyp)) <= b.errors <= max(len(ref), len(hyp))


@pytest.mark.parametrize("name", BACKENDS)
@settings(max_examples=100, deadline=None)
@given(ref=words.filter(bool))
def test_identity_and_all_deleted(name, ref):
    with use_backend(name):
        assert wer(ref, ref).wer == 0
        assert wer(ref, []).wer == 1.0


def test_tie_break_prefers_substitution(backend):
    # "a b" vs "b c": 2 subs or 1 del + 1 ins both cost 2
    b = wer(["a", "b"], ["b", "c"])
    assert (b.substitutions, b.deletions, b.insertions) == (2, 0, 0)


def test_corpus_examples(backend):
    assert corpus_wer([("a b", "a b"), ("c", "c")]).wer == 0
    assert corpus_wer([("a b", "a b"), ("c d", "")]).wer == 0.5
    single = wer("a b c", "a c d")
    assert corpus_wer([("a b c", "a c d")]) == single


def test_corpus_pools_oracle_counts(backend):
    r = random.Random(5)
    pairs = []
    for _ in range(50):
        ref = [r.choice("abcde") for _ in range(r.randint(1, 8))]
        hyp = [r.choice("abcde") for _ in range(r.randint(0, 8))]
        pairs.append((ref, hyp))
    total = corpus_wer(pairs)
    expected = [oracles.tiebreak_counts(r_, h) for r_, h in pairs]
    assert total.substitutions == sum(e[0] for e in expected)
    assert total.deletions == sum(e[1] for e in expected)
    assert total.insertions == sum(e[2] for e in expected)
    assert total.reference_length == sum(len(r_) for r_, _ in pairs)


def test_corpus_errors():
    with pytest.raises(EmptyCorpus):
        corpus_wer([])
    with pytest.raises(EmptyReference) as info:
        corpus_wer([("a", "a"), ("", "b")])
    assert info.value.index == 1


def test_breakdown_dict():
    d = WerBreakdown(1, 0, 1, 2, 3).to_dict()
    assert d == {"substitutions": 1, "deletions": 0, "insertions": 1, "hits": 2, "reference_length": 3, "wer": 2 / 3}
