"""Three-layer cortical-column classifier.

Topology::

    in --(exc, stdp)--> ng1 --(exc, rstdp)--> pos
                        ng1 --(exc, rstdp)--> neg
    ng1 --(inh, fixed, zero diagonal)--> ng1
    pos --(inh, fixed)--> neg,  neg --(inh, fixed)--> pos

The class whose column is more active over the decision window wins,
unless the activity gap is below the decision threshold.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .core import (EXCITATORY, INHIBITORY, Connection, Network, NeuronParams, Population, SpikeTrain,
                   measure_activity)
from .errors import ConfigurationError, DomainError, InputValidationError
from .labels import Decision
from .plasticity import EligibilityTrace, StdpParams, accumulate_rasters, pair_rasters, _apply_delta
from . import plasticity

IN, HIDDEN, POS, NEG = "in", "ng1", "pos", "neg"
COLUMNS = {Decision.POSITIVE: POS, Decision.NEGATIVE: NEG}


@dataclass(frozen=True)
class ColumnNetConfig:
    n_input: int = 150
    n_hidden: int = 100
    n_column: int = 25
    init_lo: float = 0.1
    init_hi: float = 0.3
    input_init_lo: Optional[float] = None
    input_init_hi: Optional[float] = None
    input_connectivity: float = 0.2
    output_connectivity: float = 1.0
    lateral_inhibition_weight: float = 0.3
    mutual_inhibition_weight: float = 0.5
    input_gain: float = 35.0
    output_gain: float = 15.0
    lateral_gain: float = 5.0
    mutual_gain: float = 10.0
    input_current: float = 100.0
    decision_window: Optional[int] = None
    decision_threshold: float = 0.002
    repetitions: int = 10
    noise_sigma: float = 10.0
    tail_steps: int = 5
    dt: float = 1.0
    tau_e: float = 250.0
    stdp: StdpParams = field(default_factory=lambda: StdpParams(a_plus=0.001, a_minus=0.0013))
    rstdp: StdpParams = field(default_factory=lambda: StdpParams(a_plus=0.02, a_minus=0.02, tau_minus=5.0))
    neuron: NeuronParams = field(default_factory=NeuronParams)
    seed: int = 0

    def __post_init__(self):
        for name in ("n_input", "n_hidden", "n_column", "repetitions"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.decision_threshold < 0:
            raise ConfigurationError("decision_threshold must be >= 0")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")
        if not 0 <= self.init_lo <= self.init_hi:
            raise ConfigurationError("need 0 <= init_lo <= init_hi")
        if self.decision_window is not None and self.decision_window < 1:
            raise ConfigurationError("decision_window must be >= 1")
        if self.tail_steps < 0:
            raise ConfigurationError("tail_steps must be >= 0")
        if not self.tau_e > 0 or not self.dt > 0:
            raise ConfigurationError("dt and tau_e must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnNetConfig":
        d = dict(d)
        for key, typ in (("stdp", StdpParams), ("rstdp", StdpParams), ("neuron", NeuronParams)):
            if isinstance(d.get(key), dict):
                d[key] = typ(**d[key])
        return cls(**d)


@dataclass
class ConfidenceReport:
    h_correct: int
    h_incorrect: int
    undecided_count: int
    majority: Decision
    confidence_fraction: float
    decisions: List[Decision] = field(default_factory=list)
    activities: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        n = self.h_correct + self.h_incorrect + self.undecided_count
        if self.decisions and n != len(self.decisions):
            raise ValueError("tally does not match the number of decisions")

    @property
    def repetitions(self) -> int:
        return self.h_correct + self.h_incorrect + self.undecided_count


@dataclass
class Presentation:
    history: dict
    rasters: dict
    act_pos: float
    act_neg: float

    @property
    def decision_inputs(self):
        return self.act_pos, self.act_neg


class ColumnNet:
    """A built network plus its configuration and output eligibility traces."""

    def __init__(self, network: Network, config: ColumnNetConfig):
        self.network = network
        self.config = config
        self.traces = {
            POS: EligibilityTrace(self.connection(HIDDEN, POS).shape, config.tau_e),
            NEG: EligibilityTrace(self.connection(HIDDEN, NEG).shape, config.tau_e),
        }

    def connection(self, pre: str, post: str) -> Connection:
        return self.network.connection(pre, post)

    @property
    def output_connections(self):
        return {POS: self.connection(HIDDEN, POS), NEG: self.connection(HIDDEN, NEG)}

    @property
    def horizon_padding(self) -> int:
        return self.config.tail_steps

    def weights_snapshot(self) -> dict:
        return {f"{c.pre}->{c.post}": c.weights.copy() for c in self.network.connections}

    def weight_hash(self) -> str:
        import hashlib
        h = hashlib.sha256()
        for c in self.network.connections:
            h.update(f"{c.pre}->{c.post}".encode())
            h.update(np.ascontiguousarray(c.weights).tobytes())
        return h.hexdigest()

    def clone(self) -> "ColumnNet":
        pops = [Population(p.id, p.size, p.params) for p in self.network.populations.values()]
        net = Network(pops, [c.copy() for c in self.network.connections], IN,
                      self.network.input_current, self.network.dt)
        return ColumnNet(net, self.config)


def build_network(config: ColumnNetConfig) -> ColumnNet:
    rng = np.random.default_rng(config.seed)
    p = config.neuron
    pops = [Population(IN, config.n_input, p), Population(HIDDEN, config.n_hidden, p),
            Population(POS, config.n_column, p), Population(NEG, config.n_column, p)]
    lo, hi = config.init_lo, config.init_hi
    ilo = lo if config.input_init_lo is None else config.input_init_lo
    ihi = hi if config.input_init_hi is None else config.input_init_hi
    ff = rng.uniform(ilo, ihi, (config.n_input, config.n_hidden))
    to_pos = rng.uniform(lo, hi, (config.n_hidden, config.n_column))
    to_neg = rng.uniform(lo, hi, (config.n_hidden, config.n_column))
    ff_mask = rng.random(ff.shape) < config.input_connectivity if config.input_connectivity < 1.0 else None
    out_masks = [None, None]
    if config.output_connectivity < 1.0:
        out_masks = [rng.random(to_pos.shape) < config.output_connectivity for _ in range(2)]
    lateral = np.full((config.n_hidden, config.n_hidden), config.lateral_inhibition_weight)
    np.fill_diagonal(lateral, 0.0)
    mutual = np.full((config.n_column, config.n_column), config.mutual_inhibition_weight)
    s, r = config.stdp, config.rstdp
    cons = [
        Connection(IN, HIDDEN, ff, EXCITATORY, "stdp", s.w_min, s.w_max, config.input_gain, ff_mask),
        Connection(HIDDEN, HIDDEN, lateral, INHIBITORY, "none", 0.0, 1.0, config.lateral_gain),
        Connection(HIDDEN, POS, to_pos, EXCITATORY, "rstdp", r.w_min, r.w_max, config.output_gain, out_masks[0]),
        Connection(HIDDEN, NEG, to_neg, EXCITATORY, "rstdp", r.w_min, r.w_max, config.output_gain, out_masks[1]),
        Connection(POS, NEG, mutual, INHIBITORY, "none", 0.0, 1.0, config.mutual_gain),
        Connection(NEG, POS, mutual.copy(), INHIBITORY, "none", 0.0, 1.0, config.mutual_gain),
    ]
    return ColumnNet(Network(pops, cons, IN, config.input_current, config.dt), config)


def decide(act_pos: float, act_neg: float, threshold: float) -> Decision:
    """Larger column wins unless the gap is below ``threshold``.

    An exact tie is Undecided even at ``threshold == 0``.
    """
    if act_pos < 0 or act_neg < 0:
        raise DomainError("activities must be >= 0")
    if act_pos == act_neg or abs(act_pos - act_neg) < threshold:
        return Decision.UNDECIDED
    return Decision.POSITIVE if act_pos > act_neg else Decision.NEGATIVE


def present(net: ColumnNet, train: SpikeTrain, rng: Optional[np.random.Generator] = None,
            noise_sigma: float = 0.0) -> Presentation:
    """Run one presentation from the resting state; weights are not touched."""
    cfg = net.config
    if train.horizon < 1:
        raise InputValidationError("presentation horizon must be >= 1")
    if train.size != cfg.n_input:
        raise ConfigurationError(f"train spans {train.size} neurons, network input has {cfg.n_input}")
    horizon = train.horizon + cfg.tail_steps
    net.network.reset()
    result = net.network.run(train, rng, noise_sigma, horizon)
    win = horizon if cfg.decision_window is None else min(cfg.decision_window, horizon)
    start = horizon - win
    act_pos = measure_activity(result[POS], cfg.n_column, start, win)
    act_neg = measure_activity(result[NEG], cfg.n_column, start, win)
    return Presentation(result.trains, result.rasters, act_pos, act_neg)


def repeated_presentation(net: ColumnNet, train: SpikeTrain, label: Decision,
                          rng: np.random.Generator, plastic: bool = True,
                          log: Optional[list] = None) -> Tuple[ConfidenceReport, dict]:
    """Present ``train`` ``repetitions`` times and tally the answers.

    Once any presentation is Undecided, the remaining ones run with current
    noise. With ``plastic`` the input-to-hidden STDP is applied after every
    presentation and the output eligibility traces accumulate across all of
    them.
    """
    if label not in COLUMNS:
        raise DomainError(f"label must be Positive or Negative, got {label!r}")
    cfg = net.config
    horizon = train.horizon + cfg.tail_steps
    decisions, acts = [], []
    noisy = False
    for rep in range(cfg.repetitions):
        sigma = cfg.noise_sigma if noisy else 0.0
        pres = present(net, train, rng, sigma)
        d = decide(pres.act_pos, pres.act_neg, cfg.decision_threshold)
        decisions.append(d)
        acts.append((pres.act_pos, pres.act_neg))
        if d is Decision.UNDECIDED:
            noisy = True
        if plastic:
            r = pres.rasters
            dw, _ = pair_rasters(r[IN], r[HIDDEN], cfg.stdp, cfg.dt)
            if dw.any():
                _apply_delta(net.connection(IN, HIDDEN), dw, cfg.stdp)
                if log is not None:
                    log.append(("stdp", f"{IN}->{HIDDEN}"))
            t0 = rep * horizon * cfg.dt
            for col in (POS, NEG):
                accumulate_rasters(net.traces[col], r[HIDDEN], r[col], cfg.rstdp, cfg.dt, t0)
    report = tally(decisions, label, acts)
    return report, net.traces


def tally(decisions: List[Decision], label: Decision, activities=None) -> ConfidenceReport:
    hc = sum(d is label for d in decisions)
    hu = sum(d is Decision.UNDECIDED for d in decisions)
    hic = len(decisions) - hc - hu
    n_pos = sum(d is Decision.POSITIVE for d in decisions)
    n_neg = sum(d is Decision.NEGATIVE for d in decisions)
    if n_pos > n_neg:
        majority = Decision.POSITIVE
    elif n_neg > n_pos:
        majority = Decision.NEGATIVE
    else:
        majority = Decision.UNDECIDED
    frac = hc / len(decisions) if decisions else 0.0
    return ConfidenceReport(hc, hic, hu, majority, frac, list(decisions), list(activities or []))


def bias_weights(net: ColumnNet, group, factor: float) -> ColumnNet:
    """Scale every hidden-to-``group`` weight by ``factor`` and clamp."""
    if not factor > 0:
        raise DomainError("factor must be positive")
    key = COLUMNS.get(group, group)
    if key not in (POS, NEG):
        raise DomainError(f"unknown output group {group!r}")
    c = net.connection(HIDDEN, key)
    c.weights *= factor
    c.clamp()
    return net


def save_network(net: ColumnNet, directory, extra: Optional[dict] = None) -> None:
    """Weight CSVs plus ``manifest.json`` (config, seed, population sizes)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = []
    for c in net.network.connections:
        stem = f"{c.pre}__{c.post}"
        plasticity.save_connection(c, d / stem)
        files.append(stem)
    manifest = {
        "config": net.config.to_dict(),
        "seed": net.config.seed,
        "populations": {pid: p.size for pid, p in net.network.populations.items()},
        "connections": files,
    }
    if extra:
        manifest.update(extra)
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_network(directory) -> ColumnNet:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    cfg = ColumnNetConfig.from_dict(manifest["config"])
    net = build_network(cfg)
    loaded = [plasticity.load_connection(d / stem) for stem in manifest["connections"]]
    for c in loaded:
        target = net.connection(c.pre, c.post)
        if target.shape != c.shape or target.sign != c.sign:
            raise ConfigurationError(f"snapshot connection {c.pre}->{c.post} does not match the manifest config")
        target.weights[:] = c.weights
    return net
