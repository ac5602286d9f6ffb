"""Reward-driven training loop, frozen evaluation and the single / four / ten input experiments."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .column import (COLUMNS, ColumnNet, ColumnNetConfig, ConfidenceReport,
                     bias_weights, build_network, repeated_presentation)
from .corpus import Corpus, Dictionary, Sample, build_dictionary, load_bundled
from .encoders import Codebook, EncoderConfig, build_codebook, encode_tokens, input_size
from .errors import ConfigurationError
from .labels import Decision
from .plasticity import REWARD_SCHEMES, TrialHistory, apply_rstdp

log = logging.getLogger(__name__)

EXPERIMENTS = ("single", "four", "ten")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    reward_scheme: str = "weighted"
    encoder: str = "codebook"
    encoder_config: EncoderConfig = field(default_factory=EncoderConfig)
    network: ColumnNetConfig = field(default_factory=ColumnNetConfig)
    v_max: int = 1000
    plastic: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.reward_scheme not in REWARD_SCHEMES:
            raise ConfigurationError(f"reward_scheme must be one of {sorted(REWARD_SCHEMES)}")
        if self.encoder == "ttfs":
            raise ConfigurationError("ttfs encodes images; training needs a token encoder")
        if self.v_max < 1:
            raise ConfigurationError("v_max must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if isinstance(d.get("encoder_config"), dict):
            d["encoder_config"] = EncoderConfig(**d["encoder_config"])
        if isinstance(d.get("network"), dict):
            d["network"] = ColumnNetConfig.from_dict(d["network"])
        return cls(**d)


@dataclass
class EpochMetrics:
    epoch: int
    decisions: List[Decision]
    correct: int
    incorrect: int
    undecided: int

    @property
    def accuracy(self) -> float:
        n = self.correct + self.incorrect + self.undecided
        return self.correct / n if n else 0.0


@dataclass
class Model:
    """A network together with the vocabulary it was built for."""

    net: ColumnNet
    dictionary: Dictionary
    codebook: Optional[Codebook]
    config: TrainConfig

    def encode(self, sample: Sample, rng: np.random.Generator):
        return encode_tokens(self.config.encoder, sample.tokens, self.dictionary,
                             self.config.encoder_config, self.codebook, rng)


def build_model(corpus: Corpus, config: TrainConfig) -> Model:
    """Dictionary from ``corpus``, codebook from the encoder seed, network sized to match."""
    dictionary = build_dictionary(corpus, config.v_max)
    enc = config.encoder_config
    codebook = build_codebook(dictionary, enc) if config.encoder in ("codebook", "gauss-pos-word") else None
    n_input = input_size(config.encoder, dictionary, enc)
    net_cfg = replace(config.network, n_input=n_input)
    return Model(build_network(net_cfg), dictionary, codebook, config)


def train_sample(model: Model, sample: Sample, rng: np.random.Generator,
                 events: Optional[list] = None):
    """One reward trial: repeated presentation, reward from the tally, R-STDP update."""
    cfg = model.config
    net = model.net
    train = model.encode(sample, rng)
    for t in net.traces.values():
        t.reset()
    report, traces = repeated_presentation(net, train, sample.label, rng, plastic=cfg.plastic, log=events)
    if cfg.plastic:
        history = TrialHistory(report.h_correct, report.h_incorrect)
        signal = REWARD_SCHEMES[cfg.reward_scheme](history)
        right, wrong = COLUMNS[sample.label], COLUMNS[sample.label.opposite]
        conns = net.output_connections
        apply_rstdp(conns[right], conns[wrong], traces[right], traces[wrong], signal)
        if events is not None:
            events.append(("reward", signal))
    return report, net


def train_epochs(model: Model, corpus: Corpus, rng: np.random.Generator,
                 epochs: Optional[int] = None, events: Optional[list] = None,
                 callback=None, on_report=None) -> List[EpochMetrics]:
    """Train for ``epochs`` passes over ``corpus`` in a fresh seeded order each pass.

    ``callback(metrics)`` runs after each epoch and stops training by
    returning ``False``; ``on_report(report, sample)`` sees every trial.
    """
    if not corpus.usable_for_training:
        raise ConfigurationError("training corpus needs samples of both labels")
    n_epochs = model.config.epochs if epochs is None else epochs
    if n_epochs < 1:
        raise ConfigurationError("epochs must be >= 1")
    metrics = []
    for epoch in range(n_epochs):
        decisions: List[Optional[Decision]] = [None] * len(corpus)
        for k in rng.permutation(len(corpus)):
            report, _ = train_sample(model, corpus[k], rng, events)
            decisions[k] = report.majority
            if on_report is not None:
                on_report(report, corpus[k])
        m = _metrics(epoch, decisions, corpus)
        metrics.append(m)
        log.debug("epoch %d: %d/%d correct", epoch, m.correct, len(corpus))
        if callback is not None and callback(m) is False:
            break
    return metrics


def _metrics(epoch, decisions, corpus) -> EpochMetrics:
    correct = sum(d is s.label for d, s in zip(decisions, corpus))
    undecided = sum(d is Decision.UNDECIDED for d in decisions)
    return EpochMetrics(epoch, list(decisions), correct, len(corpus) - correct - undecided, undecided)


@dataclass
class Evaluation:
    accuracy: float
    per_class: Dict[str, float]
    decisions: List[Decision]
    reports: List[ConfidenceReport] = field(repr=False, default_factory=list)

    @property
    def undecided(self) -> int:
        return sum(d is Decision.UNDECIDED for d in self.decisions)


def evaluate(model: Model, corpus: Corpus, rng: np.random.Generator) -> Evaluation:
    """Majority vote per sample with all plasticity frozen."""
    reports = []
    for s in corpus:
        report, _ = repeated_presentation(model.net, model.encode(s, rng), s.label, rng, plastic=False)
        reports.append(report)
    decisions = [r.majority for r in reports]
    hits = [d is s.label for d, s in zip(decisions, corpus)]
    per_class = {}
    for label in (Decision.POSITIVE, Decision.NEGATIVE):
        idx = [i for i, s in enumerate(corpus) if s.label is label]
        per_class[label.value] = float(np.mean([hits[i] for i in idx])) if idx else float("nan")
    acc = float(np.mean(hits)) if hits else 0.0
    return Evaluation(acc, per_class, decisions, reports)


@dataclass(frozen=True)
class ExperimentConfig:
    """Per-experiment knobs layered on top of a :class:`TrainConfig`."""

    bias_factor: float = 5.0
    single_rounds: int = 200
    four_epochs: int = 100
    ten_epochs: int = 200


@dataclass
class ExperimentReport:
    kind: str
    rounds: List[dict]
    metrics: List[EpochMetrics]
    success: bool
    summary: dict


def experiment_samples(kind: str, corpus: Optional[Corpus] = None) -> Corpus:
    """Subsets of the ten-sentence set: one negative, 2+2, or 5+5 samples."""
    corpus = corpus or load_bundled("table1")
    pos = corpus.of_label(Decision.POSITIVE)
    neg = corpus.of_label(Decision.NEGATIVE)
    if kind == "single":
        picked = neg[:1]
    elif kind == "four":
        picked = [pos[0], neg[0], pos[1], neg[1]]
    elif kind == "ten":
        picked = [s for pair in zip(pos[:5], neg[:5]) for s in pair]
    else:
        raise ConfigurationError(f"unknown experiment {kind!r}; choose from {', '.join(EXPERIMENTS)}")
    if kind != "single" and len(picked) < {"four": 4, "ten": 10}[kind]:
        raise ConfigurationError(f"corpus has too few samples for the {kind} experiment")
    return corpus.subset(picked, name=f"{corpus.name}-{kind}")


def _round_row(index, report: ConfidenceReport, label: Decision) -> dict:
    acts = np.array(report.activities) if report.activities else np.zeros((1, 2))
    own = 0 if label is Decision.POSITIVE else 1
    return {"round": index, "act_group1": float(acts[:, own].mean()),
            "act_group2": float(acts[:, 1 - own].mean()), "decision": str(report.majority)}


def trend_holds(correct_counts: Sequence[float]) -> bool:
    """Mean over the last fifth strictly exceeds the mean over the first fifth."""
    n = len(correct_counts)
    q = max(1, n // 5)
    return float(np.mean(correct_counts[-q:])) > float(np.mean(correct_counts[:q]))


def experiment(kind: str, config: TrainConfig, rng: np.random.Generator,
               exp: ExperimentConfig = ExperimentConfig(), corpus: Optional[Corpus] = None) -> ExperimentReport:
    """Run the single / four / ten input experiment.

    Only ``single`` biases the positive column first.

    The vocabulary always comes from the full ten-sentence set so that every kind
    sees the same input space. ``four`` stops at the first epoch whose
    training majorities are all correct.
    """
    base = corpus or load_bundled("table1")
    data = experiment_samples(kind, base)
    model = build_model(base, config)
    rounds: List[dict] = []
    metrics: List[EpochMetrics] = []

    if kind == "single":
        sample = data[0]
        bias_weights(model.net, Decision.POSITIVE, exp.bias_factor)
        probe, _ = repeated_presentation(model.net, model.encode(sample, rng), sample.label, rng, plastic=False)
        rounds.append(_round_row(0, probe, sample.label))
        flipped_at = None
        for r in range(1, exp.single_rounds + 1):
            report, _ = train_sample(model, sample, rng)
            rounds.append(_round_row(r, report, sample.label))
            if report.majority is sample.label:
                flipped_at = r
                break
        summary = {"initial_decision": str(probe.majority), "flipped_at": flipped_at,
                   "rounds": len(rounds) - 1}
        return ExperimentReport(kind, rounds, metrics, flipped_at is not None, summary)

    epochs = exp.four_epochs if kind == "four" else exp.ten_epochs
    solved_at = None
    epoch_reports: List[ConfidenceReport] = []

    def on_report(report, sample):
        epoch_reports.append((report, sample.label))

    def on_epoch(m: EpochMetrics):
        nonlocal solved_at
        own = [a[0 if lab is Decision.POSITIVE else 1] for r, lab in epoch_reports for a in r.activities]
        other = [a[1 if lab is Decision.POSITIVE else 0] for r, lab in epoch_reports for a in r.activities]
        rounds.append({"round": m.epoch, "act_group1": float(np.mean(own)) if own else 0.0,
                       "act_group2": float(np.mean(other)) if other else 0.0,
                       "decision": f"{m.correct}/{len(data)}"})
        epoch_reports.clear()
        if kind == "four" and m.correct == len(data):
            solved_at = m.epoch
            return False
        return True

    metrics = train_epochs(model, data, rng, epochs=epochs, callback=on_epoch, on_report=on_report)
    counts = [m.correct for m in metrics]
    if kind == "four":
        summary = {"solved_at": solved_at, "epochs": len(metrics)}
        return ExperimentReport(kind, rounds, metrics, solved_at is not None, summary)
    q = max(1, len(counts) // 5)
    summary = {"first_quintile_mean": float(np.mean(counts[:q])),
               "last_quintile_mean": float(np.mean(counts[-q:])),
               "final_accuracy": metrics[-1].accuracy,
               "trend": trend_holds(counts)}
    return ExperimentReport(kind, rounds, metrics, summary["trend"], summary)
