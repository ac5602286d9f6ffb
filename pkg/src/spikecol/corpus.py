"""Sentiment corpus I/O, tokenisation, dictionary building and PGM loading."""
from __future__ import annotations

import hashlib
import string
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .errors import (DataFormatError, InputValidationError, PGMFormatError, PGMMaxvalError,
                     PGMTruncatedError)
from .labels import Decision

MAX_TOKENS = 20
HEADER = "text\tlabel"
_LABELS = {"pos": Decision.POSITIVE, "neg": Decision.NEGATIVE}
_PUNCT = string.punctuation + "‘’“”…"


def tokenize(text: str) -> List[str]:
    """Lowercase, split on whitespace, strip punctuation from token ends."""
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class Sample:
    text: str
    label: Decision

    def __post_init__(self):
        if not self.text.strip():
            raise InputValidationError("sample text must be non-empty")
        if self.label not in (Decision.POSITIVE, Decision.NEGATIVE):
            raise InputValidationError(f"sample label must be pos or neg, got {self.label!r}")

    @property
    def tokens(self) -> List[str]:
        return tokenize(self.text)


@dataclass
class Corpus:
    samples: List[Sample] = field(default_factory=list)
    name: str = "corpus"
    source: Optional[str] = None

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def of_label(self, label: Decision) -> List[Sample]:
        return [s for s in self.samples if s.label is label]

    @property
    def usable_for_training(self) -> bool:
        """At least one sample of each label."""
        return bool(self.of_label(Decision.POSITIVE)) and bool(self.of_label(Decision.NEGATIVE))

    def subset(self, samples: Sequence[Sample], name: Optional[str] = None) -> "Corpus":
        return Corpus(list(samples), name or self.name, self.source)

    def content_hash(self) -> str:
        """SHA-256 over the canonical TSV serialisation."""
        h = hashlib.sha256()
        h.update((HEADER + "\n").encode())
        for s in self.samples:
            h.update(f"{s.text}\t{s.label.value}\n".encode())
        return h.hexdigest()


def load_corpus(path, max_tokens: int = MAX_TOKENS) -> Corpus:
    """Parse a UTF-8 ``text<TAB>label`` file.

    Lines starting with ``#`` are comments; the ``text<TAB>label`` header is
    optional. Blank lines are skipped.
    """
    path = Path(path)
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            if line == HEADER:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip():
                raise DataFormatError("expected 'text<TAB>label'", path, lineno)
            text, label = parts[0], parts[1].strip()
            if label not in _LABELS:
                raise DataFormatError(f"unknown label {label!r} (expected pos or neg)", path, lineno)
            n = len(tokenize(text))
            if n > max_tokens:
                raise DataFormatError(f"sentence has {n} tokens, limit is {max_tokens}", path, lineno)
            samples.append(Sample(text, _LABELS[label]))
    return Corpus(samples, path.stem, str(path))


def save_corpus(corpus: Corpus, path, comment: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            for c in comment.splitlines():
                fh.write(f"# {c}\n")
        fh.write(HEADER + "\n")
        for s in corpus.samples:
            fh.write(f"{s.text}\t{s.label.value}\n")


def bundled_corpus_path(name: str = "corpus") -> Path:
    """Path of a shipped data file: ``"corpus"`` (100 rows) or ``"table1"`` (10 rows)."""
    return Path(str(resources.files("spikecol") / "data" / f"{name}.tsv"))


def load_bundled(name: str = "corpus") -> Corpus:
    return load_corpus(bundled_corpus_path(name))


class Dictionary:
    """Word to index map with indices exactly ``0..V-1``.

    Lookups of unknown words return ``None``.
    """

    def __init__(self, words: Sequence[str]):
        if len(set(words)) != len(words):
            raise InputValidationError("dictionary words must be unique")
        self.words: List[str] = list(words)
        self._index: Dict[str, int] = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self._index

    def index(self, word: str) -> Optional[int]:
        return self._index.get(word)

    def lookup(self, tokens: Iterable[str]) -> List[Optional[int]]:
        return [self._index.get(t) for t in tokens]

    def as_dict(self) -> Dict[str, int]:
        return dict(self._index)

    def __eq__(self, other):
        return isinstance(other, Dictionary) and self.words == other.words

    def __repr__(self):
        return f"Dictionary(V={len(self)})"


def build_dictionary(corpus: Union[Corpus, Iterable[str]], v_max: int) -> Dictionary:
    """Index the ``v_max`` most frequent tokens; ties go to the lexicographically smaller word."""
    texts = [s.text for s in corpus] if isinstance(corpus, Corpus) else list(corpus)
    if not texts:
        raise InputValidationError("cannot build a dictionary from an empty corpus")
    counts = Counter(t for text in texts for t in tokenize(text))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Dictionary([w for w, _ in ranked[:max(v_max, 0)]])


@dataclass(frozen=True)
class GrayscaleImage:
    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels).ravel()
        if px.size != self.width * self.height:
            raise InputValidationError(f"expected {self.width * self.height} pixels, got {px.size}")
        if px.size and (px.min() < 0 or px.max() > 255):
            raise InputValidationError("pixel values must lie in [0, 255]")
        object.__setattr__(self, "pixels", px.astype(np.int64))


def _pgm_tokens(data: bytes, count: int, path):
    """Split the header into ``count`` whitespace tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that ends the header.
    """
    toks, i, n = [], 0, len(data)
    while len(toks) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        if i >= n:
            raise PGMTruncatedError("header ended early", path)
        j = i
        while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
            j += 1
        toks.append(data[i:j])
        i = j
    return toks, i + 1


def load_pgm(path) -> GrayscaleImage:
    """Read a P2 (ASCII) or P5 (binary) PGM with maxval 255."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMFormatError(f"unsupported magic {magic!r}; only P2 and P5 are accepted", path)
    toks, offset = _pgm_tokens(data[2:], 3, path)
    offset += 2
    try:
        width, height, maxval = (int(t) for t in toks)
    except ValueError:
        raise PGMFormatError("non-integer header field", path) from None
    if maxval != 255:
        raise PGMMaxvalError(f"maxval must be 255, got {maxval}", path)
    count = width * height
    if magic == b"P5":
        payload = data[offset:offset + count]
        if len(payload) < count:
            raise PGMTruncatedError(f"expected {count} pixel bytes, got {len(payload)}", path)
        pixels = np.frombuffer(payload, dtype=np.uint8)
    else:
        body = data[offset - 1:].split()
        if len(body) < count:
            raise PGMTruncatedError(f"expected {count} pixel values, got {len(body)}", path)
        pixels = np.array([int(b) for b in body[:count]])
        if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
            raise PGMFormatError("pixel value outside [0, 255]", path)
    return GrayscaleImage(width, height, pixels)


def save_pgm(image: GrayscaleImage, path, binary: bool = True) -> None:
    head = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n255\n".encode()
    if binary:
        body = image.pixels.astype(np.uint8).tobytes()
    else:
        body = (" ".join(str(int(p)) for p in image.pixels) + "\n").encode()
    Path(path).write_bytes(head + body)
