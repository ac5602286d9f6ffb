"""Pair-based STDP, eligibility traces and confidence-scaled reward.

Pairing is nearest-neighbour: every postsynaptic spike pairs with the most
recent strictly earlier presynaptic spike (potentiation) and every
presynaptic spike with the most recent strictly earlier postsynaptic spike
(depression). Simultaneous spikes do not pair.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .core import Connection, SpikeTrain
from .errors import ConfigurationError, DomainError

N_TRIALS = 10


@dataclass(frozen=True)
class StdpParams:
    a_plus: float = 0.05
    a_minus: float = 0.055
    tau_plus: float = 20.0
    tau_minus: float = 20.0
    w_min: float = 0.0
    w_max: float = 1.0

    def __post_init__(self):
        if self.a_plus < 0 or self.a_minus < 0:
            raise ConfigurationError("STDP amplitudes must be >= 0")
        if not (self.tau_plus > 0 and self.tau_minus > 0):
            raise ConfigurationError("STDP time constants must be > 0")
        if not self.w_min < self.w_max:
            raise ConfigurationError("need w_min < w_max")

    def scaled(self, factor: float) -> "StdpParams":
        """Same window with both amplitudes multiplied by ``factor``."""
        return StdpParams(self.a_plus * factor, self.a_minus * factor, self.tau_plus,
                          self.tau_minus, self.w_min, self.w_max)


def stdp_delta(delta_t, params: StdpParams):
    """Weight change for ``delta_t = t_post - t_pre`` (ms). Scalar or array."""
    d = np.asarray(delta_t, dtype=float)
    out = np.where(d > 0, params.a_plus * np.exp(-np.abs(d) / params.tau_plus),
                   np.where(d < 0, -params.a_minus * np.exp(-np.abs(d) / params.tau_minus), 0.0))
    return float(out) if out.ndim == 0 else out


def _tables(horizon: int, params: StdpParams, dt: float, tau_e: Optional[float]):
    k = np.arange(horizon + 1) * dt
    ltp = np.exp(-k / params.tau_plus)
    ltd = np.exp(-k / params.tau_minus)
    decay = np.ones(horizon + 1) if tau_e is None else np.exp(-k / tau_e)
    return ltp, ltd, decay


def pair_rasters(pre: np.ndarray, post: np.ndarray, params: StdpParams, dt: float = 1.0,
                 tau_e: Optional[float] = None):
    """Summed pairing terms for boolean ``(T, n_pre)`` / ``(T, n_post)`` rasters.

    With ``tau_e`` each term is discounted by ``exp(-(t_last - t)/tau_e)``,
    where ``t_last`` is the step of the last pair formed. Returns
    ``(dw, t_last)``; ``t_last`` is -1 when no pair formed.
    """
    if pre.shape[0] != post.shape[0]:
        raise ConfigurationError("pre and post rasters must share the horizon")
    ltp, ltd, decay = _tables(pre.shape[0], params, dt, tau_e)
    return kernels.pair_stdp(np.ascontiguousarray(pre, dtype=np.bool_),
                             np.ascontiguousarray(post, dtype=np.bool_),
                             ltp, ltd, decay, params.a_plus, params.a_minus)


def _check_trains(shape, pre_train: SpikeTrain, post_train: SpikeTrain):
    if pre_train.horizon != post_train.horizon:
        raise ConfigurationError("pre and post trains must share the horizon")
    if (pre_train.size, post_train.size) != tuple(shape):
        raise ConfigurationError(
            f"trains span {pre_train.size}x{post_train.size} neurons, weights are {shape[0]}x{shape[1]}")


def apply_stdp(connection: Connection, pre_train: SpikeTrain, post_train: SpikeTrain,
               params: StdpParams, dt: float = 1.0) -> Connection:
    """Add the nearest-neighbour STDP update to ``connection`` in place."""
    if connection.mode != "stdp":
        raise ConfigurationError(f"connection {connection.pre}->{connection.post} is not in stdp mode")
    _check_trains(connection.shape, pre_train, post_train)
    dw, _ = pair_rasters(pre_train.to_raster(), post_train.to_raster(), params, dt)
    _apply_delta(connection, dw, params)
    return connection


def _apply_delta(connection: Connection, dw: np.ndarray, params: StdpParams) -> None:
    w = connection.weights
    w += dw
    np.clip(w, params.w_min, params.w_max, out=w)
    connection.clamp()


class EligibilityTrace:
    """Per-synapse store of pending STDP updates, decaying with ``tau_e`` (ms).

    ``values`` holds the trace as of ``t_last``, the absolute time (ms) of
    the most recent contribution.
    """

    def __init__(self, shape, tau_e: float = 250.0):
        if not tau_e > 0:
            raise ConfigurationError("tau_e must be positive")
        self.values = np.zeros(shape)
        self.tau_e = float(tau_e)
        self.t_last: Optional[float] = None

    @classmethod
    def for_connection(cls, connection: Connection, tau_e: float = 250.0) -> "EligibilityTrace":
        return cls(connection.shape, tau_e)

    @property
    def shape(self):
        return self.values.shape

    def reset(self) -> None:
        self.values[:] = 0.0
        self.t_last = None

    def add(self, dw: np.ndarray, t_at: float) -> None:
        """Fold in contributions already referenced to time ``t_at`` (ms)."""
        if self.t_last is None:
            self.values[:] = dw
        else:
            if t_at < self.t_last:
                raise ConfigurationError("eligibility contributions must arrive in time order")
            self.values *= math.exp(-(t_at - self.t_last) / self.tau_e)
            self.values += dw
        self.t_last = t_at


def accumulate_rasters(trace: EligibilityTrace, pre: np.ndarray, post: np.ndarray,
                       params: StdpParams, dt: float = 1.0, t_offset: float = 0.0) -> EligibilityTrace:
    if (pre.shape[1], post.shape[1]) != trace.shape:
        raise ConfigurationError(f"rasters span {pre.shape[1]}x{post.shape[1]}, trace is {trace.shape}")
    dw, t_last = pair_rasters(pre, post, params, dt, trace.tau_e)
    if t_last >= 0:
        trace.add(dw, t_offset + t_last * dt)
    return trace


def accumulate_eligibility(trace: EligibilityTrace, pre_train: SpikeTrain, post_train: SpikeTrain,
                           params: StdpParams, dt: float = 1.0, t_offset: float = 0.0) -> EligibilityTrace:
    """Store this train pair's STDP terms in ``trace`` instead of applying them.

    ``t_offset`` (ms) places the trains on the trace's absolute clock, so
    successive presentations decay earlier contributions.
    """
    _check_trains(trace.shape, pre_train, post_train)
    return accumulate_rasters(trace, pre_train.to_raster(), post_train.to_raster(), params, dt, t_offset)


@dataclass(frozen=True)
class TrialHistory:
    h_correct: int = 0
    h_incorrect: int = 0

    def __post_init__(self):
        if self.h_correct < 0 or self.h_incorrect < 0:
            raise DomainError("history counts must be >= 0")
        if self.h_correct + self.h_incorrect > N_TRIALS:
            raise DomainError(f"h_correct + h_incorrect must be <= {N_TRIALS}")


@dataclass(frozen=True)
class RewardSignal:
    reward: float = 0.0
    punishment: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        for name in ("reward", "punishment", "k"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")

    @property
    def is_zero(self) -> bool:
        return self.reward == 0.0 and self.punishment == 0.0


def compute_reward_simple(history: TrialHistory) -> RewardSignal:
    """Reward grows with wrong answers, punishment with right ones."""
    return RewardSignal(reward=history.h_incorrect / 10, punishment=history.h_correct / 10, k=1.0)


def compute_reward_weighted(history: TrialHistory) -> RewardSignal:
    """As :func:`compute_reward_simple`, scaled by the confidence ``k = |H_C - H_IC| / 10``."""
    k = abs(history.h_correct - history.h_incorrect) / 10
    return RewardSignal(reward=k * (history.h_incorrect / 10), punishment=k * (history.h_correct / 10), k=k)


REWARD_SCHEMES = {"simple": compute_reward_simple, "weighted": compute_reward_weighted}


def apply_rstdp(conn_to_correct: Connection, conn_to_wrong: Connection,
                trace_correct: EligibilityTrace, trace_wrong: EligibilityTrace,
                signal: RewardSignal) -> tuple:
    """Convert stored traces into weight changes, then clear the traces.

    Afferents of the correct column move by ``+reward * trace``, afferents of
    the wrong column by ``-punishment * trace``.
    """
    for name in ("reward", "punishment", "k"):
        v = getattr(signal, name)
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"signal {name} must lie in [0, 1], got {v}")
    for c in (conn_to_correct, conn_to_wrong):
        if c.mode != "rstdp":
            raise ConfigurationError(f"connection {c.pre}->{c.post} is not in rstdp mode")
    if trace_correct.shape != conn_to_correct.shape or trace_wrong.shape != conn_to_wrong.shape:
        raise ConfigurationError("trace shape does not match its connection")
    if signal.reward != 0.0:
        conn_to_correct.weights += signal.reward * trace_correct.values
        conn_to_correct.clamp()
    if signal.punishment != 0.0:
        conn_to_wrong.weights -= signal.punishment * trace_wrong.values
        conn_to_wrong.clamp()
    trace_correct.reset()
    trace_wrong.reset()
    return conn_to_correct, conn_to_wrong


def save_connection(connection: Connection, path) -> None:
    """Write ``<path>.csv`` (rows pre, columns post) and ``<path>.meta.json``."""
    path = Path(path)
    with open(path.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in connection.weights:
            w.writerow([repr(float(x)) for x in row])
    meta = {"pre": connection.pre, "post": connection.post, "sign": connection.sign,
            "mode": connection.mode, "w_min": connection.w_min, "w_max": connection.w_max,
            "gain": connection.gain, "shape": list(connection.shape)}
    path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_connection(path) -> Connection:
    path = Path(path)
    meta = json.loads(path.with_suffix(".meta.json").read_text())
    with open(path.with_suffix(".csv"), newline="") as fh:
        rows = [[float(x) for x in r] for r in csv.reader(fh) if r]
    w = np.array(rows, dtype=float).reshape(meta["shape"])
    return Connection(meta["pre"], meta["post"], w, meta["sign"], meta["mode"],
                      meta["w_min"], meta["w_max"], meta["gain"])


def params_dict(params: StdpParams) -> dict:
    return asdict(params)
