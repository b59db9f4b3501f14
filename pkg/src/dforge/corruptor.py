"""Pseudo training data: span corruptions of fluent text with machine-generated labels."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    DataError,
    DegenerateDelete,
    InsufficientCorpus,
    InsufficientNgrams,
)
from .textproc import Sentence

O_LABEL = "O"  # fluent word
D_LABEL = "D"  # artificially added word

PAIR_LABELS = ("add_0", "add_1", "del_0", "del_1")

MAX_SPAN = 6  # span lengths are uniform on 1..6
MAX_POSITIONS = 3  # 1..3 perturbation positions per sentence

_NGRAM_MAGIC = b"DFNG"
_NGRAM_VERSION = 1


@dataclass(frozen=True)
class PerturbationOp:
    """One planned corruption: kind in {repetition, inserting, delete}.

    `position` indexes the original sentence; `length` is the span length
    before clamping. `mgram` is only set for inserting ops.
    """

    kind: str
    position: int
    length: int
    mgram: tuple[str, ...] | None = None


@dataclass(frozen=True)
class TaggedExample:
    """Token sequence with parallel O/D labels; removing D tokens recovers `source`."""

    tokens: tuple[str, ...]
    labels: tuple[str, ...]
    source: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.labels):
            raise DataError(
                f"tokens/labels length mismatch: {len(self.tokens)} vs {len(self.labels)}"
            )

    def fluent_part(self) -> tuple[str, ...]:
        return tuple(t for t, l in zip(self.tokens, self.labels) if l == O_LABEL)


@dataclass(frozen=True)
class PairExample:
    """Ordered sentence pair; the label says which side was corrupted and how."""

    s1: tuple[str, ...]
    s2: tuple[str, ...]
    label: str

    def __post_init__(self) -> None:
        if self.label not in PAIR_LABELS:
            raise DataError(f"bad pair label {self.label!r}")


class NgramIndex:
    """Reservoir-sampled m-grams (m = 1..6) drawn from a fluent corpus."""

    def __init__(self, buckets: dict[int, list[tuple[str, ...]]], per_m_capacity: int):
        self.buckets = buckets
        self.per_m_capacity = per_m_capacity

    def sample(self, m: int, rng: np.random.Generator) -> tuple[str, ...]:
        bucket = self.buckets[m]
        return bucket[int(rng.integers(len(bucket)))]

    def counts(self) -> dict[int, int]:
        return {m: len(bucket) for m, bucket in sorted(self.buckets.items())}


def build_ngram_index(
    corpus: Iterable[Sentence],
    per_m_capacity: int = 1_000_000,
    rng_seed: int = 0,
) -> NgramIndex:
    """Reservoir-sample up to `per_m_capacity` m-grams per m over one corpus pass.

    Uniform over all windows (Algorithm R). The iteration order --
    per sentence, m ascending, window start ascending -- is part of the
    determinism contract.
    """
    if per_m_capacity < 1:
        raise DataError(f"per_m_capacity must be >= 1, got {per_m_capacity}")
    rng = np.random.default_rng(rng_seed)
    buckets: dict[int, list[tuple[str, ...]]] = {m: [] for m in range(1, MAX_SPAN + 1)}
    seen = {m: 0 for m in range(1, MAX_SPAN + 1)}
    for sentence in corpus:
        for m in range(1, MAX_SPAN + 1):
            bucket = buckets[m]
            for start in range(len(sentence) - m + 1):
                window = sentence[start : start + m]
                seen[m] += 1
                if len(bucket) < per_m_capacity:
                    bucket.append(window)
                else:
                    j = int(rng.integers(seen[m]))
                    if j < per_m_capacity:
                        bucket[j] = window
    empty = [m for m in range(1, MAX_SPAN + 1) if not buckets[m]]
    if empty:
        raise InsufficientNgrams(
            f"corpus yields no m-grams for m in {empty}; "
            f"need at least one sentence of {max(empty)} tokens"
        )
    return NgramIndex(buckets, per_m_capacity)


def apply_repetition(s: Sentence, k: int, m: int) -> TaggedExample:
    """Repeat the m tokens starting at position k; the first copy is labeled D.

    m is clamped to the tokens available from k.
    """
    if not 0 <= k < len(s):
        raise DataError(f"repetition position {k} out of range for length {len(s)}")
    m_eff = min(m, len(s) - k)
    span = s[k : k + m_eff]
    tokens = s[:k] + span + span + s[k + m_eff :]
    labels = (O_LABEL,) * k + (D_LABEL,) * m_eff + (O_LABEL,) * (len(s) - k)
    return TaggedExample(tokens, labels, source=s)


def apply_inserting(s: Sentence, k: int, mgram: Sequence[str]) -> TaggedExample:
    """Splice an m-gram in at position k; inserted tokens are labeled D."""
    if not 0 <= k <= len(s):
        raise DataError(f"insertion position {k} out of range for length {len(s)}")
    if not 1 <= len(mgram) <= MAX_SPAN:
        raise DataError(f"m-gram length must be 1..{MAX_SPAN}, got {len(mgram)}")
    tokens = s[:k] + tuple(mgram) + s[k:]
    labels = (O_LABEL,) * k + (D_LABEL,) * len(mgram) + (O_LABEL,) * (len(s) - k)
    return TaggedExample(tokens, labels, source=s)


def apply_delete(s: Sentence, k: int, m: int) -> Sentence:
    """Remove the m tokens starting at position k, clamped so the result is non-empty."""
    if not 0 <= k < len(s):
        raise DataError(f"delete position {k} out of range for length {len(s)}")
    if len(s) == 1:
        raise DegenerateDelete("cannot delete from a one-token sentence")
    m_eff = min(m, len(s) - k, len(s) - 1)
    return s[:k] + s[k + m_eff :]


def plan_perturbations(
    s: Sentence, index: NgramIndex, rng: np.random.Generator
) -> list[PerturbationOp]:
    """Choose 1..3 distinct positions and a repetition-or-insertion op for each.

    Positions are returned in descending order so the plan can be applied
    left of any already-modified material. Draw order (count, positions,
    then per position: coin, span length, bucket element) is part of the
    determinism contract.
    """
    p = min(int(rng.integers(1, MAX_POSITIONS + 1)), len(s))
    positions = sorted(
        (int(k) for k in rng.choice(len(s), size=p, replace=False)), reverse=True
    )
    ops: list[PerturbationOp] = []
    for k in positions:
        repeat = rng.random() < 0.5
        m = int(rng.integers(1, MAX_SPAN + 1))
        if repeat:
            ops.append(PerturbationOp("repetition", k, m))
        else:
            ops.append(PerturbationOp("inserting", k, m, index.sample(m, rng)))
    return ops


def _apply_tagging_plan(s: Sentence, ops: Sequence[PerturbationOp]) -> TaggedExample:
    # Ops must be position-descending. A repetition span may cover tokens a
    # later (higher-position) op already added; those keep their labels in the
    # second copy, so filtering on O still recovers the source.
    tokens = list(s)
    labels = [O_LABEL] * len(s)
    for op in ops:
        k = op.position
        if op.kind == "repetition":
            m_eff = min(op.length, len(tokens) - k)
            span_tokens = tokens[k : k + m_eff]
            span_labels = labels[k : k + m_eff]
            tokens[k:k] = span_tokens
            labels[k:k] = [D_LABEL] * m_eff
            labels[k + m_eff : k + 2 * m_eff] = span_labels
        elif op.kind == "inserting":
            assert op.mgram is not None
            tokens[k:k] = list(op.mgram)
            labels[k:k] = [D_LABEL] * len(op.mgram)
        else:
            raise DataError(f"unexpected op kind {op.kind!r} in tagging plan")
    return TaggedExample(tuple(tokens), tuple(labels), source=s)


def corrupt_for_tagging(
    s: Sentence, index: NgramIndex, rng: np.random.Generator
) -> TaggedExample:
    """Generate a pseudo disfluent sentence by repeating or inserting spans."""
    if len(s) < 1:
        raise DataError("cannot corrupt an empty sentence")
    return _apply_tagging_plan(s, plan_perturbations(s, index, rng))


def _apply_delete_plan(s: Sentence, rng: np.random.Generator) -> Sentence:
    p = min(int(rng.integers(1, MAX_POSITIONS + 1)), len(s))
    positions = sorted(
        (int(k) for k in rng.choice(len(s), size=p, replace=False)), reverse=True
    )
    result = s
    for k in positions:
        m = int(rng.integers(1, MAX_SPAN + 1))
        result = apply_delete(result, k, m)
    return result


def make_pair(
    s: Sentence, kind: str, index: NgramIndex, rng: np.random.Generator
) -> PairExample:
    """Build a (fluent, corrupted) pair in random order with the matching 4-way label.

    add_0/del_0 mean the first sentence was generated from the second;
    the _1 labels are the mirrored direction.
    """
    if kind == "add":
        corrupted = corrupt_for_tagging(s, index, rng).tokens
    elif kind == "del":
        if len(s) < 2:
            raise DegenerateDelete("del-kind pairs need a source of >= 2 tokens")
        corrupted = _apply_delete_plan(s, rng)
    else:
        raise DataError(f"pair kind must be 'add' or 'del', got {kind!r}")
    corrupted_first = rng.random() < 0.5
    if corrupted_first:
        return PairExample(corrupted, s, f"{kind}_0")
    return PairExample(s, corrupted, f"{kind}_1")


def build_pretraining_corpus(
    corpus: Iterable[Sentence],
    n_tagging: int,
    n_pairs: int,
    index: NgramIndex,
    rng: np.random.Generator,
) -> tuple[list[TaggedExample], list[PairExample]]:
    """Draw sentences from one stream into the two pre-training datasets.

    The tagging set is half corrupted / half untouched all-O; the pair set is
    split evenly between add and del kinds. Each source sentence feeds exactly
    one output example; sentences that cannot support their drawn kind
    (degenerate deletes) are skipped entirely.
    """
    needs = {
        "tag_fluent": n_tagging // 2,
        "tag_corrupt": n_tagging - n_tagging // 2,
        "pair_add": n_pairs - n_pairs // 2,
        "pair_del": n_pairs // 2,
    }
    order = ("tag_fluent", "tag_corrupt", "pair_add", "pair_del")
    tagging: list[TaggedExample] = []
    pairs: list[PairExample] = []
    consumed = 0
    for sentence in corpus:
        remaining = sum(needs.values())
        if remaining == 0:
            break
        consumed += 1
        # Proportional-to-need category draw with exact integer arithmetic.
        r = int(rng.integers(remaining))
        for category in order:
            if r < needs[category]:
                break
            r -= needs[category]
        try:
            if category == "tag_fluent":
                tagging.append(
                    TaggedExample(sentence, (O_LABEL,) * len(sentence), source=sentence)
                )
            elif category == "tag_corrupt":
                tagging.append(corrupt_for_tagging(sentence, index, rng))
            elif category == "pair_add":
                pairs.append(make_pair(sentence, "add", index, rng))
            else:
                pairs.append(make_pair(sentence, "del", index, rng))
        except DegenerateDelete:
            continue  # sentence consumed, need unchanged
        needs[category] -= 1
    missing = sum(needs.values())
    if missing:
        raise InsufficientCorpus(
            f"corpus exhausted after {consumed} sentences; "
            f"{missing} of {n_tagging + n_pairs} examples still needed"
        )
    return tagging, pairs


def write_tagging_file(examples: Iterable[TaggedExample], path: str) -> None:
    """Two-column format: "token<TAB>label" lines, blank line between sentences."""
    with open(path, "w", encoding="utf-8") as handle:
        for example in examples:
            for token, label in zip(example.tokens, example.labels):
                handle.write(f"{token}\t{label}\n")
            handle.write("\n")


def read_tagging_file(path: str) -> list[TaggedExample]:
    examples: list[TaggedExample] = []
    tokens: list[str] = []
    labels: list[str] = []

    def flush() -> None:
        if tokens:
            example = TaggedExample(tuple(tokens), tuple(labels), source=())
            examples.append(
                TaggedExample(example.tokens, example.labels, example.fluent_part())
            )
            tokens.clear()
            labels.clear()

    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle):
            line = line.rstrip("\n")
            if not line:
                flush()
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{line_no + 1}: expected 'token<TAB>label'")
            token, label = parts
            if label not in (O_LABEL, D_LABEL):
                raise DataError(f"{path}:{line_no + 1}: label must be O or D, got {label!r}")
            tokens.append(token)
            labels.append(label)
    flush()
    return examples


def write_pairs_file(pairs: Iterable[PairExample], path: str) -> None:
    """Three-column TSV: space-joined s1, space-joined s2, label."""
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(f"{' '.join(pair.s1)}\t{' '.join(pair.s2)}\t{pair.label}\n")


def read_pairs_file(path: str) -> list[PairExample]:
    pairs: list[PairExample] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{line_no + 1}: expected 3 tab-separated fields")
            s1, s2, label = parts
            if label not in PAIR_LABELS:
                raise DataError(f"{path}:{line_no + 1}: bad pair label {label!r}")
            pairs.append(PairExample(tuple(s1.split(" ")), tuple(s2.split(" ")), label))
    return pairs


def save_ngram_index(index: NgramIndex, path: str) -> None:
    """Binary, versioned: header, internal string table, per-m counts, id sequences."""
    table: dict[str, int] = {}
    for m in range(1, MAX_SPAN + 1):
        for window in index.buckets[m]:
            for token in window:
                if token not in table:
                    table[token] = len(table)
    with open(path, "wb") as handle:
        handle.write(_NGRAM_MAGIC)
        handle.write(struct.pack("<II", _NGRAM_VERSION, index.per_m_capacity))
        handle.write(struct.pack("<I", len(table)))
        for token in table:
            raw = token.encode("utf-8")
            handle.write(struct.pack("<H", len(raw)))
            handle.write(raw)
        handle.write(struct.pack("<B", MAX_SPAN))
        for m in range(1, MAX_SPAN + 1):
            bucket = index.buckets[m]
            handle.write(struct.pack("<I", len(bucket)))
            ids = np.array(
                [table[token] for window in bucket for token in window],
                dtype="<u4",
            )
            handle.write(ids.tobytes())


def load_ngram_index(path: str) -> NgramIndex:
    with open(path, "rb") as handle:
        raw = handle.read()
    view = memoryview(raw)
    offset = 0

    def take(n: int) -> memoryview:
        nonlocal offset
        if offset + n > len(view):
            raise DataError(f"{path}: truncated n-gram index")
        chunk = view[offset : offset + n]
        offset += n
        return chunk

    if bytes(take(4)) != _NGRAM_MAGIC:
        raise DataError(f"{path}: not an n-gram index file")
    version, capacity = struct.unpack("<II", take(8))
    if version != _NGRAM_VERSION:
        raise DataError(
            f"{path}: n-gram index version {version}, this build reads {_NGRAM_VERSION}"
        )
    (n_tokens,) = struct.unpack("<I", take(4))
    tokens: list[str] = []
    for _ in range(n_tokens):
        (length,) = struct.unpack("<H", take(2))
        tokens.append(bytes(take(length)).decode("utf-8"))
    (max_m,) = struct.unpack("<B", take(1))
    buckets: dict[int, list[tuple[str, ...]]] = {}
    for m in range(1, max_m + 1):
        (count,) = struct.unpack("<I", take(4))
        ids = np.frombuffer(take(count * m * 4), dtype="<u4")
        bucket = [
            tuple(tokens[i] for i in ids[j * m : (j + 1) * m]) for j in range(count)
        ]
        buckets[m] = bucket
    return NgramIndex(buckets, capacity)
