"""Text normalization and vocabulary management for the tagging pipeline."""
from __future__ import annotations

import hashlib
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DataError, EmptyCorpus

# A sentence is an ordered, non-empty sequence of lowercase whitespace-free tokens.
Sentence = tuple[str, ...]

PAD, UNK, CLS, SEP = "<pad>", "<unk>", "<cls>", "<sep>"
PAD_ID, UNK_ID, CLS_ID, SEP_ID = 0, 1, 2, 3
RESERVED_TOKENS = (PAD, UNK, CLS, SEP)

_FILLERS = frozenset({"um", "uh"})
_CUE_MERGES = {("you", "know"): "you_know", ("i", "mean"): "i_mean"}


def _strip_punctuation(token: str) -> str:
    # Apostrophes stay inside words (it's, don't); underscores stay because
    # merged cue tokens use them, which keeps normalize idempotent.
    kept = "".join(
        ch
        for ch in token
        if ch in ("'", "_") or not unicodedata.category(ch).startswith("P")
    )
    return kept.strip("'")


def normalize(raw_line: str) -> Sentence | None:
    """Normalize one raw text line into a token sequence.

    Lower-cases, strips punctuation characters (Unicode category P*,
    except apostrophes and underscores), drops partial words (whitespace
    tokens ending in "-"), drops the fillers "um"/"uh", and merges the
    adjacent cue phrases "you know" / "i mean" into single tokens.

    Returns None when no tokens survive; callers skip such lines.
    """
    kept: list[str] = []
    for token in raw_line.lower().split():
        if token.endswith("-"):  # partial word
            continue
        token = _strip_punctuation(token)
        if not token or token in _FILLERS:
            continue
        kept.append(token)

    merged: list[str] = []
    i = 0
    while i < len(kept):
        if i + 1 < len(kept) and (kept[i], kept[i + 1]) in _CUE_MERGES:
            merged.append(_CUE_MERGES[kept[i], kept[i + 1]])
            i += 2
        else:
            merged.append(kept[i])
            i += 1
    return tuple(merged) if merged else None


def read_corpus(path: str) -> Iterable[Sentence]:
    """Yield normalized sentences from a one-sentence-per-line UTF-8 file."""
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            sentence = normalize(line)
            if sentence is not None:
                yield sentence


@dataclass(frozen=True)
class Vocabulary:
    """Bijective token<->id mapping with the four reserved entries first."""

    id_to_token: tuple[str, ...]
    min_frequency: int = 1
    token_to_id: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        mapping = {token: idx for idx, token in enumerate(self.id_to_token)}
        if len(mapping) != len(self.id_to_token):
            raise DataError("vocabulary contains duplicate tokens")
        if self.id_to_token[: len(RESERVED_TOKENS)] != RESERVED_TOKENS:
            raise DataError("vocabulary must start with the reserved entries")
        object.__setattr__(self, "token_to_id", mapping)

    def __len__(self) -> int:
        return len(self.id_to_token)

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def encode(self, sentence: Sequence[str]) -> list[int]:
        """Map tokens to ids; unknown tokens become UNK. Length is preserved."""
        get = self.token_to_id.get
        return [get(token, UNK_ID) for token in sentence]

    def decode(self, ids: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.id_to_token[i] for i in ids)

    def fingerprint(self) -> str:
        """Stable hash of the full mapping, stored in checkpoints for mismatch detection."""
        payload = "\n".join(
            f"{token}\t{idx}" for idx, token in enumerate(self.id_to_token)
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_vocab(corpus: Iterable[Sentence], min_frequency: int = 2) -> Vocabulary:
    """Count tokens over a sentence stream and build the id mapping.

    Ids are deterministic: reserved entries first, then corpus tokens by
    descending frequency with lexicographic tie-breaking.
    """
    if min_frequency < 1:
        raise DataError(f"min_frequency must be >= 1, got {min_frequency}")
    counts: Counter[str] = Counter()
    n_sentences = 0
    for sentence in corpus:
        n_sentences += 1
        counts.update(sentence)
    if n_sentences == 0:
        raise EmptyCorpus("vocabulary construction needs at least one sentence")
    reserved = set(RESERVED_TOKENS)
    kept = sorted(
        (
            token
            for token, count in counts.items()
            if count >= min_frequency and token not in reserved
        ),
        key=lambda token: (-counts[token], token),
    )
    return Vocabulary(RESERVED_TOKENS + tuple(kept), min_frequency=min_frequency)


def save_vocab(vocab: Vocabulary, path: str) -> None:
    """Write "token<TAB>id" lines, reserved entries first."""
    with open(path, "w", encoding="utf-8") as handle:
        for idx, token in enumerate(vocab.id_to_token):
            handle.write(f"{token}\t{idx}\n")


def load_vocab(path: str) -> Vocabulary:
    """Load a vocabulary file, validating the id space (min_frequency is not persisted)."""
    tokens: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{line_no + 1}: expected 'token<TAB>id'")
            token, id_text = parts
            try:
                idx = int(id_text)
            except ValueError as exc:
                raise DataError(f"{path}:{line_no + 1}: bad id {id_text!r}") from exc
            if idx != len(tokens):
                raise DataError(
                    f"{path}:{line_no + 1}: ids must be contiguous from 0, got {idx}"
                )
            tokens.append(token)
    if not tokens:
        raise DataError(f"{path}: empty vocabulary file")
    return Vocabulary(tuple(tokens))
