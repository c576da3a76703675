"""IOB2 chunking with a second-order hidden Markov model.

Sentences are tagged with begin/inside tags over the chunkable features
(action, type, color, indicator, relation, cardinal, reference) plus O for
glue words.  The tag sequence is modeled as a trigram chain smoothed by
deleted interpolation, with a hapax-based reserve for unknown words, and
decoded exactly with Viterbi.  The decoding kernel is a compiled extension
when available and a numpy implementation otherwise; set LOSR_PURE_PYTHON=1
to force the fallback.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .trees import CHUNKABLE_FEATURES, Feature, LosrNode, chunk_feature, item_at

if os.environ.get("LOSR_PURE_PYTHON"):
    from . import _viterbi_py as _kernel
    KERNEL_NAME = "python"
else:
    try:
        from . import _viterbi as _kernel  # type: ignore[attr-defined]
        KERNEL_NAME = "cython"
    except ImportError:
        from . import _viterbi_py as _kernel
        KERNEL_NAME = "python"

OUTSIDE = "O"
TAGS = [OUTSIDE]
for _f in CHUNKABLE_FEATURES:
    TAGS.append(f"B-{_f}")
    TAGS.append(f"I-{_f}")
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}

START_SYMBOL = "<s>"
STOP_SYMBOL = "</s>"

# Reserve added to each tag's hapax count so unknown words stay decodable
# even for tags that never produced a hapax.
UNKNOWN_RESERVE = 0.5

FORMAT_HEADER = "losr-hmm 1"


class ChunkError(ValueError):
    pass


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Chunk:
    """A maximal tagged span: feature name plus token span [start, end)."""

    feature: str
    start: int
    end: int
    words: tuple

    @property
    def phrase(self) -> str:
        return " ".join(self.words)


def tag_is_legal(previous: str, tag: str) -> bool:
    """IOB2 wellformedness: I-f only directly after B-f or I-f."""
    if not tag.startswith("I-"):
        return True
    feature = tag[2:]
    return previous in (f"B-{feature}", f"I-{feature}")


def aligned_tree_to_iob2(tokens, gold: LosrNode, alignment) -> list:
    """Project tree-to-span alignments onto an IOB2 tag sequence.

    alignment is a sequence of (path, (start, end)) pairs; each path selects
    a feature leaf of the gold tree and the span covers the tokens realizing
    it.  Spans must be non-empty, in bounds and pairwise disjoint.
    """
    tags = [OUTSIDE] * len(tokens)
    spans = []
    for path, (start, end) in alignment:
        leaf = item_at(gold, path)
        if not isinstance(leaf, Feature):
            raise AlignmentError(f"path {tuple(path)!r} does not select a feature leaf")
        if leaf.name in ("id", "reference-id"):
            raise AlignmentError(f"{leaf.name} leaves have no surface realization")
        if not (0 <= start < end <= len(tokens)):
            raise AlignmentError(f"span [{start}, {end}) out of bounds")
        spans.append((start, end, chunk_feature(leaf)))
    spans.sort()
    previous_end = 0
    for start, end, feature in spans:
        if start < previous_end:
            raise AlignmentError(f"overlapping span at token {start}")
        previous_end = end
        tags[start] = f"B-{feature}"
        for i in range(start + 1, end):
            tags[i] = f"I-{feature}"
    return tags


def extract_chunks(tokens, tags) -> list:
    """Collapse an IOB2 tag sequence into chunks; raises on illegal I tags."""
    if len(tokens) != len(tags):
        raise ChunkError("token and tag sequences differ in length")
    chunks = []
    previous = OUTSIDE
    start = -1
    feature = None
    for i, tag in enumerate(tags):
        if not tag_is_legal(previous, tag):
            raise ChunkError(f"illegal {tag} after {previous} at token {i}")
        if tag.startswith("B-"):
            if feature is not None:
                chunks.append(Chunk(feature, start, i, tuple(tokens[start:i])))
            feature = tag[2:]
            start = i
        elif tag == OUTSIDE:
            if feature is not None:
                chunks.append(Chunk(feature, start, i, tuple(tokens[start:i])))
                feature = None
        previous = tag
    if feature is not None:
        chunks.append(Chunk(feature, start, len(tokens), tuple(tokens[start:])))
    return chunks


class HmmModel:
    """Counts, smoothing weights and cached decoding tables."""

    def __init__(self, trigram, emission, lambdas):
        self.trigram = Counter(trigram)
        self.emission = Counter(emission)
        self.lambdas = tuple(lambdas)
        self._derive()
        self._tables = None

    def _derive(self):
        self.bigram = Counter()
        self.context2 = Counter()
        self.context1 = Counter()
        self.targets = Counter()
        for (x, y, z), c in self.trigram.items():
            self.bigram[(y, z)] += c
            self.context2[(x, y)] += c
            self.context1[y] += c
            self.targets[z] += c
        self.tag_counts = Counter()
        self.vocab = Counter()
        for (tag, word), c in self.emission.items():
            self.tag_counts[tag] += c
            self.vocab[word] += c
        self.hapax = Counter()
        for (tag, word), c in self.emission.items():
            if self.vocab[word] == 1:
                self.hapax[tag] += 1
        self.real_total = sum(c for z, c in self.targets.items() if z != STOP_SYMBOL)
        self.target_total = sum(self.targets.values())

    # Maximum-likelihood component distributions.

    def trigram_prob(self, x, y, z) -> float:
        context = self.context2.get((x, y), 0)
        return self.trigram.get((x, y, z), 0) / context if context else 0.0

    def bigram_prob(self, y, z) -> float:
        context = self.context1.get(y, 0)
        return self.bigram.get((y, z), 0) / context if context else 0.0

    def unigram_prob(self, z) -> float:
        """Relative tag frequency; the stop symbol is measured over all targets."""
        if z == STOP_SYMBOL:
            return self.targets.get(z, 0) / self.target_total if self.target_total else 0.0
        return self.targets.get(z, 0) / self.real_total if self.real_total else 0.0

    def transition_prob(self, x, y, z) -> float:
        l1, l2, l3 = self.lambdas
        return l3 * self.trigram_prob(x, y, z) + l2 * self.bigram_prob(y, z) + l1 * self.unigram_prob(z)

    def _unknown_reserve(self, tag) -> float:
        return self.hapax.get(tag, 0) + UNKNOWN_RESERVE

    def emission_prob(self, tag, word) -> float:
        denominator = self.tag_counts.get(tag, 0) + self._unknown_reserve(tag)
        if word in self.vocab:
            return self.emission.get((tag, word), 0) / denominator
        return self._unknown_reserve(tag) / denominator

    def decode_tables(self):
        """Dense log-space tables for the Viterbi kernels (cached)."""
        if self._tables is None:
            T = len(TAGS)
            symbols = TAGS + [START_SYMBOL]
            trans = np.full((T + 1, T + 1, T), -np.inf)
            stop = np.full((T + 1, T), -np.inf)
            for xi, x in enumerate(symbols):
                for yi, y in enumerate(symbols):
                    for zi, z in enumerate(TAGS):
                        if not tag_is_legal(y, z):
                            continue
                        p = self.transition_prob(x, y, z)
                        if p > 0.0:
                            trans[xi, yi, zi] = math.log(p)
            for ui, u in enumerate(symbols):
                for vi, v in enumerate(TAGS):
                    p = self.transition_prob(u, v, STOP_SYMBOL)
                    if p > 0.0:
                        stop[ui, vi] = math.log(p)
            self._tables = (np.ascontiguousarray(trans), np.ascontiguousarray(stop))
        return self._tables

    def emission_table(self, tokens):
        T = len(TAGS)
        emit = np.full((len(tokens), T), -np.inf)
        for i, word in enumerate(tokens):
            for zi, z in enumerate(TAGS):
                p = self.emission_prob(z, word)
                if p > 0.0:
                    emit[i, zi] = math.log(p)
        return emit


def train(sentences) -> HmmModel:
    """Estimate the model from (tokens, tags) pairs."""
    trigram = Counter()
    emission = Counter()
    for tokens, tags in sentences:
        if len(tokens) != len(tags):
            raise ChunkError("token and tag sequences differ in length")
        padded = [START_SYMBOL, START_SYMBOL] + list(tags) + [STOP_SYMBOL]
        for i in range(2, len(padded)):
            trigram[(padded[i - 2], padded[i - 1], padded[i])] += 1
        for word, tag in zip(tokens, tags):
            emission[(tag, word)] += 1
    lambdas = deleted_interpolation(trigram)
    return HmmModel(trigram, emission, lambdas)


def deleted_interpolation(trigram) -> tuple:
    """Brants-style weights: each trigram token votes for the order whose
    held-out relative frequency is highest, preferring higher orders on ties."""
    bigram = Counter()
    context2 = Counter()
    context1 = Counter()
    targets = Counter()
    for (x, y, z), c in trigram.items():
        bigram[(y, z)] += c
        context2[(x, y)] += c
        context1[y] += c
        targets[z] += c
    total = sum(targets.values())
    votes = [0.0, 0.0, 0.0]
    for (x, y, z), c in trigram.items():
        v3 = (c - 1) / (context2[(x, y)] - 1) if context2[(x, y)] > 1 else 0.0
        v2 = (bigram[(y, z)] - 1) / (context1[y] - 1) if context1[y] > 1 else 0.0
        v1 = (targets[z] - 1) / (total - 1) if total > 1 else 0.0
        if v3 == v2 == v1 == 0.0:
            continue
        if v3 >= v2 and v3 >= v1:
            votes[2] += c
        elif v2 >= v1:
            votes[1] += c
        else:
            votes[0] += c
    mass = sum(votes)
    if mass == 0.0:
        return (1 / 3, 1 / 3, 1 / 3)
    return tuple(v / mass for v in votes)


def tag(model: HmmModel, tokens) -> list:
    """Viterbi-decode the tag sequence for a tokenized sentence."""
    if not tokens:
        return []
    trans, stop = model.decode_tables()
    emit = model.emission_table(tokens)
    try:
        indices, _ = _kernel.decode(trans, stop, emit)
    except ValueError as exc:
        # A sentence can be undecodable when every path needs a (word, tag)
        # pair the training data never exhibited.
        raise ChunkError(str(exc)) from exc
    return [TAGS[i] for i in indices]


def chunk(model: HmmModel, tokens) -> list:
    return extract_chunks(tokens, tag(model, tokens))


def save_model(model: HmmModel, path) -> None:
    lines = [FORMAT_HEADER]
    l1, l2, l3 = model.lambdas
    lines.append(f"lambda {l1!r} {l2!r} {l3!r}")
    for (x, y, z), c in sorted(model.trigram.items()):
        lines.append(f"trigram {x} {y} {z} {c}")
    for (t, w), c in sorted(model.emission.items()):
        lines.append(f"emission {t} {w} {c}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_model(path) -> HmmModel:
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ChunkError(f"unsupported model format: {lines[0] if lines else 'empty file'!r}")
    lambdas = None
    trigram = Counter()
    emission = Counter()
    for line in lines[1:]:
        parts = line.split(" ")
        if parts[0] == "lambda" and len(parts) == 4:
            lambdas = tuple(float(p) for p in parts[1:])
        elif parts[0] == "trigram" and len(parts) == 5:
            trigram[(parts[1], parts[2], parts[3])] = int(parts[4])
        elif parts[0] == "emission" and len(parts) == 4:
            emission[(parts[1], parts[2])] = int(parts[3])
        else:
            raise ChunkError(f"bad model line: {line!r}")
    if lambdas is None:
        raise ChunkError("model file lacks a lambda line")
    return HmmModel(trigram, emission, lambdas)
