"""Lexical and grammatical knowledge induced from an aligned treebank.

Three artifacts come out of the gold trees: a weighted lexicon mapping
(phrase, feature) pairs to the values they realized in training, a set of
productions describing which item sequences each element label dominates,
and ellipsis rules keyed by the chunk features flanking an unspoken
reference.  All three persist as sorted text files, so retraining diffs are
readable.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

from .trees import ENTITY, Feature, LosrNode, chunk_feature

LEXICON_HEADER = "losr-lexicon 1"
GRAMMAR_HEADER = "losr-grammar 1"
ELLIPSIS_HEADER = "losr-ellipsis 1"

ELLIPSIS_TEMPLATE = LosrNode(ENTITY, (Feature("type", "reference"),))


class OovError(KeyError):
    """A chunk with no lexicon entry; the sentence cannot be parsed."""

    def __init__(self, phrase: str, feature: str):
        super().__init__(f"no {feature} entry for {phrase!r}")
        self.phrase = phrase
        self.feature = feature

    def __str__(self) -> str:
        return f"no {self.feature} entry for {self.phrase!r}"


class Lexicon:
    """Relative-frequency senses per (phrase, feature) pair."""

    def __init__(self, counts):
        self.counts = Counter(counts)
        self._index = {}
        totals = Counter()
        for (phrase, feature, value), c in self.counts.items():
            totals[(phrase, feature)] += c
        for (phrase, feature, value), c in self.counts.items():
            weight = c / totals[(phrase, feature)]
            self._index.setdefault((phrase, feature), []).append((value, weight))
        for senses in self._index.values():
            senses.sort(key=lambda vw: (-vw[1], str(vw[0])))

    def lookup(self, phrase: str, feature: str) -> list:
        """Senses as (value, weight) pairs, heaviest first; raises OovError."""
        try:
            return list(self._index[(phrase, feature)])
        except KeyError:
            raise OovError(phrase, feature) from None

    def weight(self, phrase: str, feature: str, value) -> float:
        for v, w in self._index.get((phrase, feature), ()):
            if v == value:
                return w
        return 0.0

    def __len__(self) -> int:
        return len(self._index)


def _aligned_leaves(record):
    """(phrase, chunk feature, value, span start) per aligned leaf."""
    from .trees import item_at

    out = []
    for path, (start, end) in record.alignment:
        leaf = item_at(record.gold, path)
        phrase = " ".join(record.tokens[start:end])
        out.append((phrase, chunk_feature(leaf), leaf.value, start))
    out.sort(key=lambda t: t[3])
    return out


def induce_lexicon(records) -> Lexicon:
    counts = Counter()
    for record in records:
        for phrase, feature, value, _ in _aligned_leaves(record):
            counts[(phrase, feature, value)] += 1
    return Lexicon(counts)


@dataclass(frozen=True)
class Production:
    lhs: str
    rhs: tuple


def production_of(node: LosrNode) -> Production:
    """The production a node instantiates; id and reference-id features are
    suppressed because anaphora resolution adds both after parsing."""
    rhs = []
    for item in node.items:
        if isinstance(item, Feature):
            if item.name in ("id", "reference-id"):
                continue
            rhs.append(item.name)
        else:
            rhs.append(item.label)
    return Production(node.label, tuple(rhs))


class Grammar:
    def __init__(self, productions):
        self.productions = sorted(set(productions), key=lambda p: (p.lhs, p.rhs))
        self._by_last = defaultdict(list)
        for p in self.productions:
            if p.rhs:
                self._by_last[p.rhs[-1]].append(p)

    def by_last_symbol(self, symbol: str) -> list:
        return self._by_last.get(symbol, [])

    def derives(self, tree: LosrNode) -> bool:
        """True if every node instantiates a known production."""
        known = set(self.productions)
        stack = [tree]
        while stack:
            node = stack.pop()
            if production_of(node) not in known:
                return False
            stack.extend(node.children)
        return True

    def __len__(self) -> int:
        return len(self.productions)


def induce_grammar(records) -> Grammar:
    productions = []
    for record in records:
        stack = [record.gold]
        while stack:
            node = stack.pop()
            productions.append(production_of(node))
            stack.extend(node.children)
    return Grammar(productions)


class EllipsisRules:
    """Templates for chunkless anaphors, keyed by flanking chunk features."""

    def __init__(self, rules):
        self.rules = dict(rules)

    def lookup(self, before: str, after: str):
        return self.rules.get((before, after))

    def __len__(self) -> int:
        return len(self.rules)


def induce_ellipsis(records) -> EllipsisRules:
    """Learn which chunk-feature contexts license an unspoken reference.

    An entity whose (type: reference) leaf has no aligned span was never
    spoken; the rule records the chunk features immediately before and after
    it in surface order.  Anaphors at the sentence edge produce no rule.
    """
    rules = {}
    for record in records:
        aligned = {tuple(path) for path, _ in record.alignment}
        sequence = []

        def walk(node: LosrNode, path: tuple):
            for i, item in enumerate(node.items):
                p = path + (i,)
                if isinstance(item, Feature):
                    if p in aligned and item.name not in ("id", "reference-id"):
                        sequence.append(("chunk", chunk_feature(item)))
                else:
                    if item.label == ENTITY and item.feature_value("type") == "reference":
                        type_index = next(
                            j for j, it in enumerate(item.items)
                            if isinstance(it, Feature) and it.name == "type"
                        )
                        if p + (type_index,) not in aligned:
                            sequence.append(("ellipsis", None))
                    walk(item, p)

        walk(record.gold, ())
        for i, (kind, _) in enumerate(sequence):
            if kind != "ellipsis":
                continue
            before = next((f for k, f in reversed(sequence[:i]) if k == "chunk"), None)
            after = next((f for k, f in sequence[i + 1:] if k == "chunk"), None)
            if before is not None and after is not None:
                rules[(before, after)] = ELLIPSIS_TEMPLATE
    return EllipsisRules(rules)


# Text persistence.  Phrases contain spaces, so lexicon lines are
# tab-separated; grammar and ellipsis lines are space-joined symbols.

def save_lexicon(lexicon: Lexicon, path) -> None:
    lines = [LEXICON_HEADER]
    for (phrase, feature, value), c in sorted(lexicon.counts.items(), key=lambda kv: (kv[0][0], kv[0][1], str(kv[0][2]))):
        lines.append(f"entry\t{phrase}\t{feature}\t{value}\t{c}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_lexicon(path) -> Lexicon:
    counts = Counter()
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines or lines[0] != LEXICON_HEADER:
        raise ValueError("unsupported lexicon format")
    for line in lines[1:]:
        parts = line.split("\t")
        if len(parts) != 5 or parts[0] != "entry":
            raise ValueError(f"bad lexicon line: {line!r}")
        _, phrase, feature, value, count = parts
        parsed = int(value) if feature == "cardinal" else value
        counts[(phrase, feature, parsed)] = int(count)
    return Lexicon(counts)


def save_grammar(grammar: Grammar, path) -> None:
    lines = [GRAMMAR_HEADER]
    for p in grammar.productions:
        if not p.rhs:
            continue
        lines.append("production " + p.lhs + " -> " + " ".join(p.rhs))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines or lines[0] != GRAMMAR_HEADER:
        raise ValueError("unsupported grammar format")
    productions = []
    for line in lines[1:]:
        parts = line.split(" ")
        if len(parts) < 4 or parts[0] != "production" or parts[2] != "->":
            raise ValueError(f"bad grammar line: {line!r}")
        productions.append(Production(parts[1], tuple(parts[3:])))
    return Grammar(productions)


def save_ellipsis(rules: EllipsisRules, path) -> None:
    lines = [ELLIPSIS_HEADER]
    for (before, after), template in sorted(rules.rules.items()):
        lines.append(f"rule {before} {after} {template.text}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_ellipsis(path) -> EllipsisRules:
    from .trees import deserialize

    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines or lines[0] != ELLIPSIS_HEADER:
        raise ValueError("unsupported ellipsis rule format")
    rules = {}
    for line in lines[1:]:
        parts = line.split(" ", 3)
        if len(parts) != 4 or parts[0] != "rule":
            raise ValueError(f"bad ellipsis line: {line!r}")
        rules[(parts[1], parts[2])] = deserialize(parts[3])
    return EllipsisRules(rules)
