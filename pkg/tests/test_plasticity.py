import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikecol.core import Connection, SpikeTrain
from spikecol.errors import ConfigurationError, DomainError
from spikecol.plasticity import (EligibilityTrace, RewardSignal, StdpParams, TrialHistory,
                                 accumulate_eligibility, apply_rstdp, apply_stdp,
                                 compute_reward_simple, compute_reward_weighted, load_connection,
                                 save_connection, stdp_delta)

from conftest import random_train

PARAMS = StdpParams()


def nn_oracle(pre: SpikeTrain, post: SpikeTrain, p: StdpParams, dt=1.0, tau_e=None):
    """Enumerate nearest-neighbour pairs synapse by synapse from event lists."""
    pre_times = [sorted(s for n, s in pre.events if n == i) for i in range(pre.size)]
    post_times = [sorted(s for n, s in post.events if n == j) for j in range(post.size)]
    pairs = []  # (i, j, later_step, delta)
    for i, tp in enumerate(pre_times):
        for j, tq in enumerate(post_times):
            for t in tq:
                earlier = [s for s in tp if s < t]
                if earlier:
                    pairs.append((i, j, t, p.a_plus * math.exp(-(t - earlier[-1]) * dt / p.tau_plus)))
            for t in tp:
                earlier = [s for s in tq if s < t]
                if earlier:
                    pairs.append((i, j, t, -p.a_minus * math.exp(-(t - earlier[-1]) * dt / p.tau_minus)))
    dw = np.zeros((pre.size, post.size))
    if not pairs:
        return dw, -1
    t_last = max(t for *_, t, _ in [(0, 0, t, d) for _, _, t, d in pairs])
    for i, j, t, d in pairs:
        decay = 1.0 if tau_e is None else math.exp(-(t_last - t) * dt / tau_e)
        dw[i, j] += d * decay
    return dw, t_last


# ---------------------------------------------------------------- stdp_delta

def test_delta_examples():
    assert stdp_delta(0, PARAMS) == 0.0
    assert abs(stdp_delta(20.0, PARAMS) - 0.018394) < 5e-7
    assert 0 < stdp_delta(10 * 20 + 1, PARAMS) < 0.05 * math.exp(-10)


def test_delta_sign_grid():
    d = np.linspace(-200, 200, 4001)
    out = stdp_delta(d, PARAMS)
    assert np.all(out[d > 0] > 0)
    assert np.all(out[d < 0] < 0)
    assert np.all(out[d == 0] == 0)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        StdpParams(a_plus=-1)
    with pytest.raises(ConfigurationError):
        StdpParams(tau_minus=0)
    with pytest.raises(ConfigurationError):
        StdpParams(w_min=1, w_max=1)


# ---------------------------------------------------------------- apply_stdp

def _conn(n_pre, n_post, w=0.5):
    return Connection("a", "b", np.full((n_pre, n_post), w), mode="stdp")


def test_empty_post_leaves_weights():
    c = _conn(3, 2)
    apply_stdp(c, SpikeTrain([0, 1], [2, 5], 10, 3), SpikeTrain.empty(10, 2), PARAMS)
    assert np.all(c.weights == 0.5)


def test_causal_pair_hand_trace():
    c = _conn(2, 2)
    apply_stdp(c, SpikeTrain([1], [5], 20, 2), SpikeTrain([0], [8], 20, 2), PARAMS)
    expect = np.full((2, 2), 0.5)
    expect[1, 0] += stdp_delta(3, PARAMS)
    assert np.allclose(c.weights, expect, rtol=0, atol=1e-15)


def test_anticausal_pair_hand_trace():
    c = _conn(2, 2)
    apply_stdp(c, SpikeTrain([1], [8], 20, 2), SpikeTrain([0], [5], 20, 2), PARAMS)
    assert c.weights[1, 0] == pytest.approx(0.5 - abs(stdp_delta(-3, PARAMS)), abs=1e-15)
    assert np.count_nonzero(c.weights != 0.5) == 1


def test_simultaneous_spikes_do_not_pair():
    c = _conn(1, 1)
    apply_stdp(c, SpikeTrain([0], [4], 10, 1), SpikeTrain([0], [4], 10, 1), PARAMS)
    assert c.weights[0, 0] == 0.5


def test_apply_stdp_matches_oracle(rng):
    for _ in range(500):
        n_pre, n_post = (int(x) for x in rng.integers(1, 6, 2))
        horizon = int(rng.integers(2, 30))
        budget = int(rng.integers(0, 21))
        k = int(rng.integers(0, budget + 1))
        pre = random_train(rng, n_pre, horizon, k)
        post = random_train(rng, n_post, horizon, budget - k)
        w0 = rng.uniform(0, 1, (n_pre, n_post))
        c = Connection("a", "b", w0, mode="stdp")
        apply_stdp(c, pre, post, PARAMS)
        dw, _ = nn_oracle(pre, post, PARAMS)
        np.testing.assert_allclose(c.weights, np.clip(w0 + dw, 0, 1), rtol=0, atol=1e-12)
        assert c.weights.min() >= 0 and c.weights.max() <= 1


def test_apply_stdp_checks_shapes_and_mode():
    with pytest.raises(ConfigurationError):
        apply_stdp(_conn(2, 2), SpikeTrain.empty(5, 3), SpikeTrain.empty(5, 2), PARAMS)
    with pytest.raises(ConfigurationError):
        apply_stdp(_conn(2, 2), SpikeTrain.empty(5, 2), SpikeTrain.empty(6, 2), PARAMS)
    fixed = Connection("a", "b", [[0.1]], mode="none")
    with pytest.raises(ConfigurationError):
        apply_stdp(fixed, SpikeTrain.empty(5, 1), SpikeTrain.empty(5, 1), PARAMS)


# ---------------------------------------------------------------- eligibility

def test_trace_no_spikes_stays_zero():
    tr = EligibilityTrace((2, 2))
    accumulate_eligibility(tr, SpikeTrain.empty(10, 2), SpikeTrain.empty(10, 2), PARAMS)
    assert not tr.values.any()


def test_trace_single_pair_equals_delta():
    tr = EligibilityTrace((1, 1))
    accumulate_eligibility(tr, SpikeTrain([0], [2], 10, 1), SpikeTrain([0], [6], 10, 1), PARAMS)
    assert tr.values[0, 0] == pytest.approx(stdp_delta(4, PARAMS), abs=1e-15)


def test_trace_two_pairs_decay():
    tr = EligibilityTrace((1, 1), tau_e=200.0)
    pre = SpikeTrain([0, 0], [0, 10], 20, 1)
    post = SpikeTrain([0, 0], [3, 13], 20, 1)
    accumulate_eligibility(tr, pre, post, PARAMS)
    # pre@10 also pairs (anti-causally) with post@3, as nearest-neighbour requires
    d1, d_ltd, d2 = stdp_delta(3, PARAMS), stdp_delta(-7, PARAMS), stdp_delta(3, PARAMS)
    expect = d1 * math.exp(-10 / 200) + d_ltd * math.exp(-3 / 200) + d2
    assert tr.values[0, 0] == pytest.approx(expect, rel=1e-12)


def test_trace_two_presentations_decay_between():
    tr = EligibilityTrace((1, 1), tau_e=200.0)
    pre, post = SpikeTrain([0], [0], 10, 1), SpikeTrain([0], [3], 10, 1)
    accumulate_eligibility(tr, pre, post, PARAMS, t_offset=0.0)
    accumulate_eligibility(tr, pre, post, PARAMS, t_offset=10.0)
    d = stdp_delta(3, PARAMS)
    assert tr.values[0, 0] == pytest.approx(d * math.exp(-10 / 200) + d, rel=1e-12)


def test_trace_matches_oracle_with_decay(rng):
    for _ in range(200):
        pre = random_train(rng, 3, 25, int(rng.integers(0, 10)))
        post = random_train(rng, 2, 25, int(rng.integers(0, 10)))
        tr = EligibilityTrace((3, 2), tau_e=50.0)
        accumulate_eligibility(tr, pre, post, PARAMS)
        dw, _ = nn_oracle(pre, post, PARAMS, tau_e=50.0)
        np.testing.assert_allclose(tr.values, dw, rtol=0, atol=1e-12)


# ---------------------------------------------------------------- rewards

ALL_HISTORIES = [(hc, hic) for hc in range(11) for hic in range(11 - hc)]


def test_there_are_66_histories():
    assert len(ALL_HISTORIES) == 66


@pytest.mark.parametrize("hc,hic", ALL_HISTORIES)
def test_reward_formulas_exact(hc, hic):
    s = compute_reward_simple(TrialHistory(hc, hic))
    assert (s.reward, s.punishment, s.k) == (hic / 10, hc / 10, 1.0)
    # the sum picks up at most one rounding step from the float addition
    assert abs(s.reward + s.punishment - (hc + hic) / 10) <= math.ulp((hc + hic) / 10)
    w = compute_reward_weighted(TrialHistory(hc, hic))
    k = abs(hc - hic) / 10
    assert (w.reward, w.punishment, w.k) == (k * (hic / 10), k * (hc / 10), k)


def test_reward_examples():
    s = compute_reward_simple(TrialHistory(3, 7))
    assert (s.reward, s.punishment) == (0.7, 0.3)
    assert compute_reward_simple(TrialHistory(0, 0)).is_zero
    w = compute_reward_weighted(TrialHistory(8, 2))
    assert w.k == pytest.approx(0.6) and w.reward == pytest.approx(0.12) and w.punishment == pytest.approx(0.48)


@pytest.mark.parametrize("h", range(6))
def test_k_gate(h):
    assert compute_reward_weighted(TrialHistory(h, h)).is_zero


def test_history_validation():
    with pytest.raises(DomainError):
        TrialHistory(6, 5)
    with pytest.raises(DomainError):
        TrialHistory(-1, 0)


def _rconn(w):
    return Connection("h", "x", np.array([[w]], dtype=float), mode="rstdp")


def _trace(v):
    t = EligibilityTrace((1, 1))
    t.values[:] = v
    return t


def test_rstdp_zero_signal_no_op():
    a, b = _rconn(0.3), _rconn(0.6)
    apply_rstdp(a, b, _trace(0.2), _trace(0.2), RewardSignal(0, 0, 0))
    assert a.weights[0, 0] == 0.3 and b.weights[0, 0] == 0.6


def test_rstdp_punishes_wrong_column():
    a, b = _rconn(0.3), _rconn(0.5)
    tb = _trace(0.1)
    apply_rstdp(a, b, _trace(0.1), tb, RewardSignal(0.0, 1.0, 1.0))
    assert b.weights[0, 0] == pytest.approx(0.4)
    assert a.weights[0, 0] == 0.3
    assert not tb.values.any()


def test_rstdp_rewards_correct_column_and_clamps():
    a, b = _rconn(0.95), _rconn(0.05)
    apply_rstdp(a, b, _trace(0.2), _trace(0.1), RewardSignal(1.0, 1.0, 1.0))
    assert a.weights[0, 0] == 1.0 and b.weights[0, 0] == 0.0


def test_rstdp_rejects_bad_signal():
    with pytest.raises(DomainError):
        RewardSignal(1.5, 0, 0)
    bad = RewardSignal.__new__(RewardSignal)
    object.__setattr__(bad, "reward", -0.1)
    object.__setattr__(bad, "punishment", 0.0)
    object.__setattr__(bad, "k", 0.0)
    with pytest.raises(DomainError):
        apply_rstdp(_rconn(0.1), _rconn(0.1), _trace(0), _trace(0), bad)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), steps=st.integers(1, 15))
def test_weights_bounded_under_random_updates(seed, steps):
    r = np.random.default_rng(seed)
    a = Connection("h", "p", r.uniform(0, 1, (4, 3)), mode="rstdp")
    b = Connection("h", "n", r.uniform(0, 1, (4, 3)), mode="rstdp")
    s = Connection("i", "h", r.uniform(0, 1, (3, 4)), mode="stdp")
    for _ in range(steps):
        apply_stdp(s, random_train(r, 3, 20, 8), random_train(r, 4, 20, 8), StdpParams(a_plus=0.5, a_minus=0.6))
        ta, tb = _random_trace(r), _random_trace(r)
        hc = int(r.integers(0, 11))
        sig = compute_reward_weighted(TrialHistory(hc, int(r.integers(0, 11 - hc))))
        apply_rstdp(a, b, ta, tb, sig)
        for c in (a, b, s):
            assert c.weights.min() >= 0.0 and c.weights.max() <= 1.0


def _random_trace(r):
    t = EligibilityTrace((4, 3))
    t.values[:] = r.normal(0, 2, (4, 3))
    return t


def test_connection_snapshot_round_trip(tmp_path, rng):
    c = Connection("h", "p", rng.uniform(0, 1, (4, 3)), mode="rstdp", gain=15.0)
    save_connection(c, tmp_path / "h__p")
    back = load_connection(tmp_path / "h__p")
    assert np.array_equal(back.weights, c.weights)
    assert (back.sign, back.mode, back.gain, back.w_max) == (c.sign, c.mode, c.gain, c.w_max)
