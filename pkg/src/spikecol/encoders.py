"""Spike encoders for images and token sequences.

Every encoder returns a :class:`SpikeTrain` with horizon ``window + 1`` so the
endpoint step ``window`` is representable. Slot-based encoders place token
``i`` at step ``round(i * window / max_len)``. Steps are rounded half away
from zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import SpikeTrain, round_half_away
from .corpus import Dictionary, GrayscaleImage
from .errors import CapacityError, ConfigurationError, InputValidationError

ENCODERS = ("ttfs", "poisson", "pos-fixed", "pos-word", "codebook", "gauss-pos-word")


@dataclass(frozen=True)
class EncoderConfig:
    window: int = 100
    max_len: int = 20
    n_word_neurons: int = 100
    n_pos_neurons: int = 50
    poisson_rate: float = 0.1
    sparsity: float = 0.10
    gaussian_sigma: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ConfigurationError("window must be >= 1")
        if self.max_len < 1:
            raise ConfigurationError("max_len must be >= 1")
        if self.n_word_neurons < 1 or self.n_pos_neurons < 1:
            raise ConfigurationError("neuron counts must be >= 1")
        if not 0 < self.sparsity <= 1:
            raise ConfigurationError("sparsity must lie in (0, 1]")
        if self.poisson_rate < 0:
            raise ConfigurationError("poisson_rate must be >= 0")
        if self.gaussian_sigma < 0:
            raise ConfigurationError("gaussian_sigma must be >= 0")

    @property
    def horizon(self) -> int:
        return self.window + 1

    def slot_step(self, i: int) -> int:
        return round_half_away(i * self.window / self.max_len)


def code_size(sparsity: float, n: int) -> int:
    """``ceil(sparsity * n)``, immune to products like ``0.1 * 30 = 3.0000000000000004``."""
    return max(1, math.ceil(round(sparsity * n, 9)))


def ttfs_encode(image: GrayscaleImage, window: int, invert: bool = False) -> SpikeTrain:
    """One spike per pixel at ``round(window * pixel / 255)``.

    ``invert`` uses ``window * (1 - pixel / 255)`` so bright pixels fire first.
    """
    if window < 1:
        raise InputValidationError("window must be >= 1")
    px = np.asarray(image.pixels)
    if px.size and (px.min() < 0 or px.max() > 255):
        raise InputValidationError("pixel values must lie in [0, 255]")
    frac = px / 255.0
    if invert:
        frac = 1.0 - frac
    steps = np.floor(window * frac + 0.5).astype(np.int64)
    steps = np.clip(steps, 0, window)
    return SpikeTrain(np.arange(px.size), steps, window + 1, px.size)


def poisson_encode(tokens: Sequence[str], dictionary: Dictionary, config: EncoderConfig,
                   rng: np.random.Generator) -> SpikeTrain:
    """Bernoulli-per-step spiking, probability ``min(rate, 1)``, for every dictionary word present."""
    V = len(dictionary)
    present = np.zeros(V, dtype=bool)
    for idx in dictionary.lookup(tokens):
        if idx is not None:
            present[idx] = True
    p = min(config.poisson_rate, 1.0)
    draws = rng.random((V, config.window)) < p
    draws &= present[:, None]
    neurons, steps = np.nonzero(draws)
    return SpikeTrain(neurons, steps, config.horizon, V)


def position_fixed_encode(tokens: Sequence[str], dictionary: Dictionary, config: EncoderConfig) -> SpikeTrain:
    """Word neuron fires once at the token's relative position in the window."""
    L = len(tokens)
    span = max(L - 1, 1)
    events = set()
    for i, idx in enumerate(dictionary.lookup(tokens)):
        if idx is not None:
            events.add((idx, round_half_away(config.window * i / span)))
    return SpikeTrain.from_events(sorted(events), config.horizon, len(dictionary))


def pos_word_encode(tokens: Sequence[str], dictionary: Dictionary, config: EncoderConfig) -> SpikeTrain:
    """Word neuron ``w`` and position neuron ``V + i`` fire together in slot ``i``."""
    L = len(tokens)
    if L > config.n_pos_neurons or L > config.max_len:
        raise CapacityError(f"{L} tokens exceed {min(config.n_pos_neurons, config.max_len)} position slots")
    V = len(dictionary)
    events = []
    for i, idx in enumerate(dictionary.lookup(tokens)):
        if idx is not None:
            s = config.slot_step(i)
            events += [(idx, s), (V + i, s)]
    return SpikeTrain.from_events(events, config.horizon, V + config.n_pos_neurons)


@dataclass(frozen=True)
class Codebook:
    """Fixed sparse neuron subsets per dictionary word and per position slot.

    Word codes index ``[0, n_word_neurons)``; position codes index
    ``[0, n_pos_neurons)`` and are offset by ``n_word_neurons`` when emitted.
    """

    word_codes: np.ndarray
    pos_codes: np.ndarray
    n_word_neurons: int
    n_pos_neurons: int

    @property
    def size(self) -> int:
        return self.n_word_neurons + self.n_pos_neurons

    def word_code(self, index: int) -> np.ndarray:
        return self.word_codes[index]

    def pos_code(self, position: int) -> np.ndarray:
        if not 0 <= position < len(self.pos_codes):
            raise CapacityError(f"no position code for index {position} (have {len(self.pos_codes)})")
        return self.pos_codes[position]

    def __eq__(self, other):
        return (isinstance(other, Codebook)
                and np.array_equal(self.word_codes, other.word_codes)
                and np.array_equal(self.pos_codes, other.pos_codes)
                and self.n_word_neurons == other.n_word_neurons
                and self.n_pos_neurons == other.n_pos_neurons)


def _merged(neurons, steps, horizon, size) -> SpikeTrain:
    if not neurons:
        return SpikeTrain.empty(horizon, size)
    pairs = np.unique(np.stack([np.concatenate(steps), np.concatenate(neurons)], axis=1), axis=0)
    return SpikeTrain(pairs[:, 1], pairs[:, 0], horizon, size)


def _draw_codes(rng, count, n, k):
    codes = np.empty((count, k), dtype=np.int64)
    for c in range(count):
        codes[c] = np.sort(rng.choice(n, size=k, replace=False))
    return codes


def build_codebook(dictionary: Dictionary, config: EncoderConfig) -> Codebook:
    """Sample every code without replacement from ``default_rng(config.seed)``."""
    rng = np.random.default_rng(config.seed)
    words = _draw_codes(rng, len(dictionary), config.n_word_neurons,
                        code_size(config.sparsity, config.n_word_neurons))
    pos = _draw_codes(rng, config.max_len, config.n_pos_neurons,
                      code_size(config.sparsity, config.n_pos_neurons))
    words.flags.writeable = False
    pos.flags.writeable = False
    return Codebook(words, pos, config.n_word_neurons, config.n_pos_neurons)


def codebook_encode(tokens: Sequence[str], dictionary: Dictionary, codebook: Codebook,
                    config: EncoderConfig) -> SpikeTrain:
    """Token ``i`` fires its word code together with position ``i``'s code in slot ``i``."""
    if len(tokens) > len(codebook.pos_codes):
        raise CapacityError(f"{len(tokens)} tokens exceed {len(codebook.pos_codes)} position codes")
    neurons, steps = [], []
    for i, idx in enumerate(dictionary.lookup(tokens)):
        if idx is None:
            continue
        s = config.slot_step(i)
        cell = np.concatenate([codebook.word_code(idx), codebook.n_word_neurons + codebook.pos_code(i)])
        neurons.append(cell)
        steps.append(np.full(cell.size, s))
    return _merged(neurons, steps, config.horizon, codebook.size)


def gaussian_position_sample(mu: float, sigma: float, k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` Normal(mu, sigma) draws rounded and clamped into ``[0, n)``; duplicates kept."""
    draws = rng.normal(mu, sigma, size=k) if sigma > 0 else np.full(k, float(mu))
    idx = np.sign(draws) * np.floor(np.abs(draws) + 0.5)
    return np.clip(idx, 0, n - 1).astype(np.int64)


def gaussian_pos_word_encode(tokens: Sequence[str], dictionary: Dictionary, codebook: Codebook,
                             config: EncoderConfig, rng: np.random.Generator) -> SpikeTrain:
    """Codebook word codes; position neurons drawn around the relative position."""
    L = len(tokens)
    if L > config.max_len:
        raise CapacityError(f"{L} tokens exceed {config.max_len} position slots")
    n_pos = codebook.n_pos_neurons
    k = code_size(config.sparsity, n_pos)
    span = max(L - 1, 1)
    neurons, steps = [], []
    for i, idx in enumerate(dictionary.lookup(tokens)):
        if idx is None:
            continue
        mu = (n_pos - 1) * i / span
        pos = np.unique(gaussian_position_sample(mu, config.gaussian_sigma, k, n_pos, rng))
        cell = np.concatenate([codebook.word_code(idx), codebook.n_word_neurons + pos])
        neurons.append(cell)
        steps.append(np.full(cell.size, config.slot_step(i)))
    return _merged(neurons, steps, config.horizon, codebook.size)


def encode_sequence(item_trains: Sequence[SpikeTrain]) -> SpikeTrain:
    """Concatenate items in time; item ``j`` is shifted by ``j`` item horizons."""
    if not item_trains:
        raise ConfigurationError("need at least one item train")
    size, window = item_trains[0].size, item_trains[0].horizon
    for t in item_trains:
        if t.size != size or t.horizon != window:
            raise ConfigurationError("item trains must share neuron space and horizon")
    neurons = np.concatenate([t.neurons for t in item_trains])
    steps = np.concatenate([t.steps + j * window for j, t in enumerate(item_trains)])
    return SpikeTrain(neurons, steps, window * len(item_trains), size, item_trains[0].population)


def input_size(name: str, dictionary: Optional[Dictionary], config: EncoderConfig) -> int:
    """Neuron-space width produced by a token encoder."""
    if name in ("poisson", "pos-fixed"):
        return len(dictionary)
    if name == "pos-word":
        return len(dictionary) + config.n_pos_neurons
    if name in ("codebook", "gauss-pos-word"):
        return config.n_word_neurons + config.n_pos_neurons
    raise ConfigurationError(f"unknown token encoder {name!r}; choose from {', '.join(ENCODERS[1:])}")


def encode_tokens(name: str, tokens: Sequence[str], dictionary: Dictionary, config: EncoderConfig,
                  codebook: Optional[Codebook] = None, rng: Optional[np.random.Generator] = None) -> SpikeTrain:
    """Dispatch to a token encoder by its CLI name."""
    if name == "poisson":
        return poisson_encode(tokens, dictionary, config, rng)
    if name == "pos-fixed":
        return position_fixed_encode(tokens, dictionary, config)
    if name == "pos-word":
        return pos_word_encode(tokens, dictionary, config)
    if name == "codebook":
        return codebook_encode(tokens, dictionary, codebook, config)
    if name == "gauss-pos-word":
        return gaussian_pos_word_encode(tokens, dictionary, codebook, config, rng)
    raise ConfigurationError(f"unknown token encoder {name!r}; choose from {', '.join(ENCODERS[1:])}")
