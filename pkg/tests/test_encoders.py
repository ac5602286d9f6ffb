import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikecol.core import SpikeTrain
from spikecol.corpus import GrayscaleImage, build_dictionary, tokenize
from spikecol.encoders import (EncoderConfig, build_codebook, code_size, codebook_encode,
                               encode_sequence, encode_tokens, gaussian_pos_word_encode,
                               gaussian_position_sample, input_size, poisson_encode,
                               pos_word_encode, position_fixed_encode, ttfs_encode)
from spikecol.errors import CapacityError, ConfigurationError, InputValidationError

SENTENCES = ["the film was great and the cast was great",
             "a dull and boring plot",
             "great visuals but a dull story"]
DICT = build_dictionary(SENTENCES, 100)
CFG = EncoderConfig()


def image(*px):
    return GrayscaleImage(len(px), 1, np.array(px))


# ---------------------------------------------------------------- ttfs

def test_ttfs_examples():
    t = ttfs_encode(image(0, 255, 128), 100)
    assert dict((n, s) for n, s in t.events) == {0: 0, 1: 100, 2: 50}
    assert t.horizon == 101


def test_ttfs_invert():
    t = ttfs_encode(image(0, 255, 128), 100, invert=True)
    assert dict((n, s) for n, s in t.events) == {0: 100, 1: 0, 2: 50}


def test_ttfs_one_event_per_pixel(rng):
    px = rng.integers(0, 256, 64)
    t = ttfs_encode(GrayscaleImage(8, 8, px), 37)
    assert len(t) == 64 and np.all(t.counts() == 1)


def test_ttfs_rejects_bad_pixels():
    bad = GrayscaleImage.__new__(GrayscaleImage)
    object.__setattr__(bad, "width", 1)
    object.__setattr__(bad, "height", 1)
    object.__setattr__(bad, "pixels", np.array([300]))
    with pytest.raises(InputValidationError):
        ttfs_encode(bad, 10)
    with pytest.raises(InputValidationError):
        GrayscaleImage(1, 1, np.array([-1]))


# ---------------------------------------------------------------- poisson

def test_poisson_rate_zero_is_silent(rng):
    cfg = EncoderConfig(poisson_rate=0.0)
    assert len(poisson_encode(tokenize(SENTENCES[0]), DICT, cfg, rng)) == 0


def test_poisson_absent_words_silent(rng):
    t = poisson_encode(["dull"], DICT, EncoderConfig(poisson_rate=0.5), rng)
    assert set(t.neurons.tolist()) == {DICT.index("dull")}


def test_poisson_mean_within_three_standard_errors():
    cfg = EncoderConfig(poisson_rate=0.1, window=100)
    idx = DICT.index("dull")
    counts = np.array([poisson_encode(["dull"], DICT, cfg, np.random.default_rng(s)).counts()[idx]
                       for s in range(1000)])
    p, n = 0.1, 100
    se = math.sqrt(n * p * (1 - p) / 1000)
    assert abs(counts.mean() - n * p) < 3 * se
    assert 9.0 <= counts.mean() <= 11.0


# ---------------------------------------------------------------- position encoders

def test_position_fixed_examples():
    assert position_fixed_encode(["great"], DICT, CFG).events[0].step == 0
    toks = ["a", "dull", "and", "boring", "plot"]
    t = position_fixed_encode(toks, DICT, CFG)
    steps = {n: s for n, s in t.events}
    assert steps[DICT.index("and")] == 50
    assert steps[DICT.index("plot")] == 100


def test_pos_word_examples():
    assert len(pos_word_encode([], DICT, CFG)) == 0
    one = pos_word_encode(["great"], DICT, CFG)
    assert len(one) == 2 and len(set(one.steps.tolist())) == 1
    three = pos_word_encode(["a", "dull", "plot"], DICT, CFG)
    assert len(three) == 6
    V = len(DICT)
    by_step = {}
    for n, s in three.events:
        by_step.setdefault(s, []).append(n)
    assert all(len(v) == 2 and sum(x >= V for x in v) == 1 for v in by_step.values())


def test_pos_word_capacity():
    cfg = EncoderConfig(n_pos_neurons=2, max_len=20)
    with pytest.raises(CapacityError):
        pos_word_encode(["a", "dull", "plot"], DICT, cfg)


# ---------------------------------------------------------------- codebook

@pytest.mark.parametrize("n", [10, 50, 100, 1000])
def test_code_size_exact(n):
    cfg = EncoderConfig(n_word_neurons=n, n_pos_neurons=n)
    book = build_codebook(DICT, cfg)
    want = math.ceil(0.10 * n)
    for code in list(book.word_codes) + list(book.pos_codes):
        assert len(set(code.tolist())) == want == len(code)


def test_code_size_float_noise():
    assert code_size(0.1, 30) == 3
    assert code_size(0.15, 10) == 2


def test_codebook_invariance_and_determinism():
    book = build_codebook(DICT, CFG)
    assert book == build_codebook(DICT, CFG)
    assert book != build_codebook(DICT, EncoderConfig(seed=1))
    a = codebook_encode(["great", "film"], DICT, book, CFG)
    b = codebook_encode(["a", "dull", "great"], DICT, book, CFG)
    word = set(book.word_code(DICT.index("great")).tolist())
    at = lambda t, s: {n for n, st in t.events if st == s}
    assert word <= at(a, CFG.slot_step(0))
    assert word <= at(b, CFG.slot_step(2))
    pos_a = at(a, CFG.slot_step(0)) - word
    pos_b = at(b, CFG.slot_step(2)) - word
    assert pos_a != pos_b


def test_codebook_codes_are_frozen():
    book = build_codebook(DICT, CFG)
    with pytest.raises(ValueError):
        book.word_codes[0, 0] = 1


def test_codebook_capacity():
    book = build_codebook(DICT, EncoderConfig(max_len=2))
    with pytest.raises(CapacityError):
        codebook_encode(["a", "dull", "plot"], DICT, book, EncoderConfig(max_len=2))


# ---------------------------------------------------------------- gaussian positions

def test_gaussian_zero_sigma_collapses():
    idx = gaussian_position_sample(17.0, 0.0, 5, 50, np.random.default_rng(0))
    assert idx.tolist() == [17] * 5


def test_gaussian_clamps_at_edges(rng):
    for mu in (0.0, 49.0):
        idx = gaussian_position_sample(mu, 10.0, 500, 50, rng)
        assert idx.min() >= 0 and idx.max() < 50


def test_gaussian_sample_mean():
    idx = gaussian_position_sample(50.0, 5.0, 10000, 1000, np.random.default_rng(3))
    assert 49.8 <= idx.mean() <= 50.2


def test_gaussian_encoder_word_part_matches_codebook(rng):
    cfg = EncoderConfig(gaussian_sigma=0.0)
    book = build_codebook(DICT, cfg)
    t = gaussian_pos_word_encode(["great"], DICT, book, cfg, rng)
    word = set(book.word_code(DICT.index("great")).tolist())
    assert word <= set(t.neurons.tolist())
    # L=1 sits at relative position 0; with sigma 0 every draw lands there
    assert set(t.neurons.tolist()) - word == {cfg.n_word_neurons}
    spread = gaussian_pos_word_encode(["a", "dull", "plot"], DICT, book, CFG, rng)
    per_slot = [set(spread.neurons[spread.steps == CFG.slot_step(i)].tolist()) for i in range(3)]
    assert all(len(s - set(range(CFG.n_word_neurons))) <= code_size(CFG.sparsity, CFG.n_pos_neurons)
               for s in per_slot)


# ---------------------------------------------------------------- sequences

def test_sequence_examples():
    one = SpikeTrain([1, 2], [0, 3], 100, 4)
    assert encode_sequence([one]) == one
    two = encode_sequence([SpikeTrain.empty(100, 4), SpikeTrain([0], [3], 100, 4)])
    assert two.events == [(0, 103)]
    empty = encode_sequence([SpikeTrain.empty(100, 4)] * 3)
    assert len(empty) == 0 and empty.horizon == 300


def test_sequence_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        encode_sequence([SpikeTrain.empty(10, 4), SpikeTrain.empty(10, 5)])
    with pytest.raises(ConfigurationError):
        encode_sequence([])


# ---------------------------------------------------------------- all encoders

TOKEN_ENCODERS = ["poisson", "pos-fixed", "pos-word", "codebook", "gauss-pos-word"]


@pytest.mark.parametrize("name", TOKEN_ENCODERS)
def test_encoders_deterministic_and_in_range(name):
    book = build_codebook(DICT, CFG)
    for text in SENTENCES:
        toks = tokenize(text)
        a = encode_tokens(name, toks, DICT, CFG, book, np.random.default_rng(5))
        b = encode_tokens(name, toks, DICT, CFG, book, np.random.default_rng(5))
        assert a == b
        assert a.size == input_size(name, DICT, CFG)
        if len(a):
            assert a.steps.max() <= CFG.window and a.neurons.max() < a.size


def test_unknown_tokens_skipped():
    book = build_codebook(DICT, CFG)
    assert len(codebook_encode(["zzz", "qqq"], DICT, book, CFG)) == 0


def test_unknown_encoder_name():
    with pytest.raises(ConfigurationError):
        encode_tokens("morse", ["a"], DICT, CFG)


@settings(max_examples=60, deadline=None)
@given(px=st.lists(st.integers(0, 255), min_size=1, max_size=30), window=st.integers(1, 300),
       invert=st.booleans())
def test_ttfs_property(px, window, invert):
    t = ttfs_encode(image(*px), window, invert)
    assert len(t) == len(px)
    assert t.steps.min() >= 0 and t.steps.max() <= window


def test_config_validation():
    for bad in (dict(window=0), dict(sparsity=0), dict(sparsity=1.5), dict(poisson_rate=-1)):
        with pytest.raises(ConfigurationError):
            EncoderConfig(**bad)
