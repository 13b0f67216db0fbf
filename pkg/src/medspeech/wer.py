"""Word error rate with explicit substitution / deletion / insertion counts."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _accel
from .errors import EmptyCorpus, EmptyReference

_PUNCTUATION = re.compile(r'[.,!?;:"()\[\]]')


@dataclass(frozen=True)
class WordSequence:
    words: tuple

    def __post_init__(self):
        words = tuple(self.words)
        for w in words:
            if not w or w != w.strip() or any(c.isspace() for c in w):
                raise ValueError(f"invalid token {w!r}")
        object.__setattr__(self, "words", words)

    def __iter__(self):
        return iter(self.words)

    def __len__(self):
        return len(self.words)

    def __getitem__(self, i):
        return self.words[i]

    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    hits: int
    reference_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        if self.reference_length == 0:
            return 0.0 if self.errors == 0 else float("inf")
        return self.errors / self.reference_length

    def __add__(self, other: "WerBreakdown") -> "WerBreakdown":
        return WerBreakdown(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.hits + other.hits,
            self.reference_length + other.reference_length,
        )

    def to_dict(self):
        return {
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "hits": self.hits,
            "reference_length": self.reference_length,
            "wer": self.wer,
        }


def normalize_tokens(text: str) -> WordSequence:
    """Lowercase, drop ``.,!?;:"()[]`` and split on whitespace."""
    return WordSequence(tuple(_PUNCTUATION.sub("", text.lower()).split()))


def _as_words(seq) -> Sequence[str]:
    if isinstance(seq, str):
        return normalize_tokens(seq).words
    return tuple(seq)


def _encode(ref, hyp):
    vocab: dict = {}
    r = np.array([vocab.setdefault(w, len(vocab)) for w in ref], dtype=np.int64)
    h = np.array([vocab.setdefault(w, len(vocab)) for w in hyp], dtype=np.int64)
    return r, h


def wer(reference, hypothesis) -> WerBreakdown:
    """Align ``hypothesis`` to ``reference`` with unit edit costs.

    Both arguments may be :class:`WordSequence`, a sequence of tokens, or a raw
    string (normalised first). Among equally cheap alignments the backtrace
    prefers a diagonal step, then a deletion, then an insertion.
    """
    ref = _as_words(reference)
    hyp = _as_words(hypothesis)
    if not ref:
        raise EmptyReference()
    r, h = _encode(ref, hyp)
    s, d, i, hits = _accel.kernels.edit_counts(r, h)
    return WerBreakdown(int(s), int(d), int(i), int(hits), len(ref))


def corpus_wer(pairs: Iterable) -> WerBreakdown:
    """Pooled (micro-averaged) WER over ``(reference, hypothesis)`` pairs."""
    total = None
    for index, (ref, hyp) in enumerate(pairs):
        try:
            b = wer(ref, hyp)
        except EmptyReference:
            raise EmptyReference(index=index) from None
        total = b if total is None else total + b
    if total is None:
        raise EmptyCorpus("no pairs to score")
    return total
