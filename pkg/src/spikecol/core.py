"""Discrete-time LIF populations, signed connections and the activity readout."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, DomainError, InputValidationError, SimulationFault

EXCITATORY = 1
INHIBITORY = -1
PLASTICITY_MODES = ("none", "stdp", "rstdp")


def round_half_away(x: float) -> int:
    """Round to the nearest integer, ties away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class SimClock:
    dt: float = 1.0
    horizon: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")


class SpikeEvent(NamedTuple):
    neuron: int
    step: int


class SpikeTrain:
    """Sorted, duplicate-free (neuron, step) events over a fixed horizon.

    ``size`` is the width of the neuron space the events live in; it bounds
    neuron indices and sets the row count of dense rasters.
    """

    __slots__ = ("neurons", "steps", "horizon", "size", "population")

    def __init__(self, neurons, steps, horizon: int, size: int, population: str = "input"):
        neurons = np.asarray(neurons, dtype=np.int64).ravel()
        steps = np.asarray(steps, dtype=np.int64).ravel()
        if neurons.shape != steps.shape:
            raise InputValidationError("neurons and steps must have equal length")
        if horizon < 0 or size < 0:
            raise InputValidationError("horizon and size must be non-negative")
        if neurons.size:
            if steps.min() < 0 or steps.max() >= horizon:
                raise InputValidationError(f"event step outside [0, {horizon})")
            if neurons.min() < 0 or neurons.max() >= size:
                raise InputValidationError(f"event neuron outside [0, {size})")
            order = np.lexsort((neurons, steps))
            neurons, steps = neurons[order], steps[order]
            dup = (np.diff(steps) == 0) & (np.diff(neurons) == 0)
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise InputValidationError(f"duplicate event (neuron={neurons[k]}, step={steps[k]})")
        neurons.flags.writeable = False
        steps.flags.writeable = False
        self.neurons = neurons
        self.steps = steps
        self.horizon = int(horizon)
        self.size = int(size)
        self.population = population

    @classmethod
    def empty(cls, horizon: int, size: int, population: str = "input") -> "SpikeTrain":
        return cls([], [], horizon, size, population)

    @classmethod
    def from_events(cls, events: Iterable, horizon: int, size: int, population: str = "input"):
        events = list(events)
        neurons = [e[0] for e in events]
        steps = [e[1] for e in events]
        return cls(neurons, steps, horizon, size, population)

    @classmethod
    def from_raster(cls, raster, population: str = "input") -> "SpikeTrain":
        """Build from a boolean ``(horizon, size)`` array."""
        raster = np.asarray(raster, dtype=bool)
        steps, neurons = np.nonzero(raster)
        return cls(neurons, steps, raster.shape[0], raster.shape[1], population)

    def to_raster(self) -> np.ndarray:
        raster = np.zeros((self.horizon, self.size), dtype=bool)
        raster[self.steps, self.neurons] = True
        return raster

    @property
    def events(self) -> List[SpikeEvent]:
        return [SpikeEvent(int(n), int(s)) for n, s in zip(self.neurons, self.steps)]

    def __len__(self):
        return int(self.neurons.size)

    def __eq__(self, other):
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.size == other.size
            and np.array_equal(self.neurons, other.neurons)
            and np.array_equal(self.steps, other.steps)
        )

    def __repr__(self):
        return (f"SpikeTrain(population={self.population!r}, size={self.size}, "
                f"horizon={self.horizon}, events={len(self)})")

    def counts(self) -> np.ndarray:
        """Spike count per neuron."""
        return np.bincount(self.neurons, minlength=self.size)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["neuron", "step"])
            for n, s in zip(self.neurons.tolist(), self.steps.tolist()):
                w.writerow([n, s])

    @classmethod
    def read_csv(cls, path, horizon: int, size: int, population: str = "input") -> "SpikeTrain":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["neuron", "step"]:
            raise InputValidationError(f"{path}: expected header 'neuron,step'")
        body = [(int(r[0]), int(r[1])) for r in rows[1:] if r]
        return cls.from_events(body, horizon, size, population)

    def to_grid_csv(self, path) -> None:
        """Dense 0/1 grid, one row per neuron and one column per step."""
        grid = self.to_raster().T.astype(np.uint8)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["neuron"] + [str(s) for s in range(self.horizon)])
            for n, row in enumerate(grid):
                w.writerow([n] + row.tolist())


@dataclass(frozen=True)
class NeuronParams:
    """LIF constants; the defaults are the published cortical-column values."""

    tau: float = 10.0
    resistance: float = 5.0
    u_reset: float = -75.0
    u_rest: float = -67.0
    u_threshold: float = -37.0
    i_background: float = 0.7

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigurationError("tau must be positive")
        if not self.resistance > 0:
            raise ConfigurationError("resistance must be positive")
        if not (self.u_reset <= self.u_rest < self.u_threshold):
            raise ConfigurationError("need u_reset <= u_rest < u_threshold")


def lif_step(potential, input_current, params: NeuronParams, dt: float = 1.0, step: int = 0):
    """Advance membrane potential(s) by one forward-Euler step.

    Works on scalars or arrays. Returns ``(potential, spiked)``; neurons that
    reach threshold are reset to ``u_reset`` and the potential never drops
    below ``u_reset``.
    """
    u = np.asarray(potential, dtype=float)
    i = np.asarray(input_current, dtype=float)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(i))):
        raise SimulationFault("non-finite potential or current", step)
    v = u + (dt / params.tau) * (-(u - params.u_rest) + params.resistance * i)
    spiked = v >= params.u_threshold
    out = np.where(spiked, params.u_reset, np.maximum(v, params.u_reset))
    if out.ndim == 0:
        return float(out), bool(spiked)
    return out, spiked


class Population:
    def __init__(self, pid: str, size: int, params: Optional[NeuronParams] = None):
        if size < 1:
            raise ConfigurationError(f"population {pid!r} must have size >= 1, got {size}")
        self.id = pid
        self.size = int(size)
        self.params = params or NeuronParams()
        self.potentials = np.full(self.size, self.params.u_rest)

    def reset(self) -> None:
        self.potentials[:] = self.params.u_rest

    def __repr__(self):
        return f"Population({self.id!r}, size={self.size})"


class Connection:
    """Dense weight magnitudes between two populations with a fixed sign.

    The current a presynaptic spike delivers is ``sign * gain * weight``.
    ``gain`` rescales the bounded magnitudes into the membrane's current
    range without touching the plastic variable. An optional boolean
    ``mask`` marks which synapses exist; absent ones stay at weight zero.
    """

    def __init__(self, pre: str, post: str, weights, sign: int = EXCITATORY,
                 mode: str = "none", w_min: float = 0.0, w_max: float = 1.0, gain: float = 1.0,
                 mask=None):
        if sign not in (EXCITATORY, INHIBITORY):
            raise ConfigurationError(f"sign must be +1 or -1, got {sign}")
        if mode not in PLASTICITY_MODES:
            raise ConfigurationError(f"plasticity mode must be one of {PLASTICITY_MODES}, got {mode!r}")
        if not w_min < w_max:
            raise ConfigurationError("need w_min < w_max")
        w = np.array(weights, dtype=float)
        if w.ndim != 2:
            raise ConfigurationError("weights must be a 2-D matrix")
        self.pre = pre
        self.post = post
        self._sign = sign
        self.mode = mode
        self.w_min = float(w_min)
        self.w_max = float(w_max)
        self.gain = float(gain)
        if mask is not None:
            mask = np.array(mask, dtype=bool)
            if mask.shape != w.shape:
                raise ConfigurationError("mask shape must match weights")
        self.mask = mask
        self.weights = w
        self.clamp()

    @property
    def sign(self) -> int:
        return self._sign

    @property
    def shape(self):
        return self.weights.shape

    def clamp(self) -> None:
        """Enforce the bounds; synapses outside ``mask`` are held at zero."""
        np.clip(self.weights, self.w_min, self.w_max, out=self.weights)
        if self.mask is not None:
            self.weights[~self.mask] = 0.0

    def effective(self) -> np.ndarray:
        return self._sign * self.gain * self.weights

    def copy(self) -> "Connection":
        return Connection(self.pre, self.post, self.weights, self._sign, self.mode,
                          self.w_min, self.w_max, self.gain, self.mask)

    def __repr__(self):
        kind = "exc" if self._sign > 0 else "inh"
        return f"Connection({self.pre}->{self.post}, {kind}, {self.mode}, shape={self.shape})"


@dataclass(frozen=True)
class ActivityWindow:
    window: int
    n_act: int
    size: int

    def __post_init__(self):
        if self.size < 1 or self.window < 1:
            raise DomainError("population size and window must be >= 1")
        if not 0 <= self.n_act <= self.size * self.window:
            raise DomainError("n_act exceeds size * window")

    @property
    def activity(self) -> float:
        return self.n_act / (self.size * self.window)


def measure_activity(train: SpikeTrain, population_size: int, window_start: int, window_len: int) -> float:
    """Spikes per neuron per step inside ``[window_start, window_start + window_len)``."""
    if population_size < 1:
        raise DomainError("population size must be >= 1")
    if window_len < 1:
        raise DomainError("window length must be >= 1")
    if window_start < 0 or window_start + window_len > train.horizon:
        raise DomainError(f"window [{window_start}, {window_start + window_len}) outside horizon {train.horizon}")
    lo = np.searchsorted(train.steps, window_start, side="left")
    hi = np.searchsorted(train.steps, window_start + window_len, side="left")
    return ActivityWindow(window_len, int(hi - lo), population_size).activity


@dataclass
class RunResult:
    """Per-population spike trains of one simulated run."""

    trains: Dict[str, SpikeTrain]
    rasters: Dict[str, np.ndarray] = field(repr=False)

    def __getitem__(self, pid):
        return self.trains[pid]


class Network:
    """Populations plus connections; membrane state lives in the populations.

    ``input_id`` names the population that receives the external train; each
    external event injects ``input_current`` into its neuron on the same step.
    Spikes reach their targets one step after they are emitted.
    """

    def __init__(self, populations: Sequence[Population], connections: Sequence[Connection],
                 input_id: Optional[str] = None, input_current: float = 100.0, dt: float = 1.0):
        self.populations: Dict[str, Population] = {}
        for p in populations:
            if p.id in self.populations:
                raise ConfigurationError(f"duplicate population id {p.id!r}")
            self.populations[p.id] = p
        for c in connections:
            for pid in (c.pre, c.post):
                if pid not in self.populations:
                    raise ConfigurationError(f"connection {c.pre}->{c.post} references unknown population {pid!r}")
            want = (self.populations[c.pre].size, self.populations[c.post].size)
            if c.shape != want:
                raise ConfigurationError(f"connection {c.pre}->{c.post} has shape {c.shape}, expected {want}")
        if input_id is None:
            input_id = next(iter(self.populations))
        if input_id not in self.populations:
            raise ConfigurationError(f"unknown input population {input_id!r}")
        SimClock(dt=dt)
        self.connections: List[Connection] = list(connections)
        self.input_id = input_id
        self.input_current = float(input_current)
        self.dt = float(dt)
        self.offsets: Dict[str, int] = {}
        off = 0
        for pid, p in self.populations.items():
            self.offsets[pid] = off
            off += p.size
        self.total_size = off
        self.last_spikes = np.zeros(off, dtype=bool)

    def connection(self, pre: str, post: str) -> Connection:
        for c in self.connections:
            if c.pre == pre and c.post == post:
                return c
        raise KeyError(f"no connection {pre}->{post}")

    def reset(self) -> None:
        for p in self.populations.values():
            p.reset()
        self.last_spikes[:] = False

    def _slice(self, pid):
        o = self.offsets[pid]
        return slice(o, o + self.populations[pid].size)

    def effective_matrix(self) -> np.ndarray:
        """Global signed current matrix, rows presynaptic, columns postsynaptic."""
        W = np.zeros((self.total_size, self.total_size))
        for c in self.connections:
            W[self._slice(c.pre), self._slice(c.post)] += c.effective()
        return W

    def _neuron_arrays(self):
        fields = ("tau", "resistance", "u_rest", "u_reset", "u_threshold", "i_background")
        out = {k: np.empty(self.total_size) for k in fields}
        for pid, p in self.populations.items():
            for k in fields:
                out[k][self._slice(pid)] = getattr(p.params, k)
        return out

    def potentials(self) -> np.ndarray:
        return np.concatenate([p.potentials for p in self.populations.values()])

    def _set_potentials(self, u):
        for pid, p in self.populations.items():
            p.potentials[:] = u[self._slice(pid)]

    def _external_current(self, train: SpikeTrain, horizon: int) -> np.ndarray:
        inp = self.populations[self.input_id]
        if train.size != inp.size:
            raise ConfigurationError(f"external train has {train.size} neurons, input population has {inp.size}")
        ext = np.zeros((horizon, self.total_size))
        keep = train.steps < horizon
        np.add.at(ext, (train.steps[keep], train.neurons[keep] + self.offsets[self.input_id]), self.input_current)
        return ext

    def run(self, external: SpikeTrain, rng: Optional[np.random.Generator] = None,
            noise_sigma: float = 0.0, horizon: Optional[int] = None) -> RunResult:
        """Advance the network ``horizon`` steps (default: the train's horizon).

        Gaussian current noise of ``noise_sigma`` is drawn per neuron per step
        from ``rng`` when the sigma is positive.
        """
        T = external.horizon if horizon is None else int(horizon)
        if T < 1:
            raise InputValidationError("presentation horizon must be >= 1")
        ext = self._external_current(external, T)
        if noise_sigma > 0:
            if rng is None:
                raise ConfigurationError("noise requires an rng")
            noise = rng.standard_normal((T, self.total_size)) * noise_sigma
        else:
            noise = np.zeros((0, 0))
        a = self._neuron_arrays()
        raster, u, fault = kernels.simulate(
            self.effective_matrix(), ext, noise, a["tau"], a["resistance"], a["u_rest"],
            a["u_reset"], a["u_threshold"], a["i_background"], self.dt,
            self.potentials(), self.last_spikes.copy())
        if fault >= 0:
            raise SimulationFault("non-finite membrane potential", int(fault))
        self._set_potentials(u)
        self.last_spikes[:] = raster[-1]
        rasters = {pid: raster[:, self._slice(pid)] for pid in self.populations}
        trains = {pid: SpikeTrain.from_raster(r, population=pid) for pid, r in rasters.items()}
        return RunResult(trains, rasters)


def step_network(network: Network, external: SpikeTrain, step: int,
                 rng: Optional[np.random.Generator] = None, noise_sigma: float = 0.0) -> Dict[str, List[SpikeEvent]]:
    """Advance every population by one step and return the emitted events.

    Reference path for ``Network.run``: same update order, one step at a time.
    """
    if not 0 <= step < external.horizon:
        raise InputValidationError(f"step {step} outside horizon {external.horizon}")
    prev = network.last_spikes
    if prev.any():
        syn = network.effective_matrix()[np.flatnonzero(prev)].sum(axis=0)
    else:
        syn = np.zeros(network.total_size)
    ext = np.zeros(network.total_size)
    sel = external.steps == step
    ext[external.neurons[sel] + network.offsets[network.input_id]] = network.input_current
    if noise_sigma > 0:
        if rng is None:
            raise ConfigurationError("noise requires an rng")
        noise = rng.standard_normal(network.total_size) * noise_sigma
    else:
        noise = 0.0
    fired_all = np.zeros(network.total_size, dtype=bool)
    events: Dict[str, List[SpikeEvent]] = {}
    for pid, p in network.populations.items():
        sl = network._slice(pid)
        cur = p.params.i_background + ext[sl]
        if noise_sigma > 0:
            cur = cur + noise[sl]
        cur = cur + syn[sl]
        u, fired = lif_step(p.potentials, cur, p.params, network.dt, step)
        p.potentials[:] = u
        fired_all[sl] = fired
        events[pid] = [SpikeEvent(int(n), step) for n in np.flatnonzero(fired)]
    network.last_spikes[:] = fired_all
    return events
