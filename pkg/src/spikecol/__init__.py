"""Spiking cortical-column sentiment classifier.

LIF populations wired as input, hidden and two competing class columns,
trained with STDP in the hidden layer and reward-modulated STDP at the
output. Hot loops run through numba when available; set
``SPIKECOL_DISABLE_NUMBA=1`` to force the pure-numpy kernels.
"""
__version__ = "0.1.0"

from ._accel import backend
from .column import (ColumnNet, ColumnNetConfig, ConfidenceReport, bias_weights, build_network, decide,
                     load_network, present, repeated_presentation, save_network)
from .core import (ActivityWindow, Connection, Network, NeuronParams, Population, SimClock, SpikeEvent,
                   SpikeTrain, lif_step, measure_activity, step_network)
from .corpus import (Corpus, Dictionary, GrayscaleImage, Sample, build_dictionary, load_bundled, load_corpus,
                     load_pgm, save_pgm, tokenize)
from .encoders import (Codebook, EncoderConfig, build_codebook, codebook_encode, encode_sequence,
                       gaussian_pos_word_encode, poisson_encode, pos_word_encode, position_fixed_encode,
                       ttfs_encode)
from .errors import (CapacityError, ConfigurationError, DataFormatError, DomainError, InputValidationError,
                     SimulationFault, SpikeColError)
from .labels import Decision
from .plasticity import (EligibilityTrace, RewardSignal, StdpParams, TrialHistory, apply_rstdp, apply_stdp,
                         compute_reward_simple, compute_reward_weighted, stdp_delta)
from .train import (ExperimentConfig, TrainConfig, build_model, evaluate, experiment, train_epochs,
                    train_sample)

__all__ = [
    "__version__", "backend", "ColumnNet", "ColumnNetConfig", "ConfidenceReport", "bias_weights",
    "build_network", "decide", "load_network", "present", "repeated_presentation", "save_network",
    "ActivityWindow", "Connection", "Network", "NeuronParams", "Population", "SimClock", "SpikeEvent",
    "SpikeTrain", "lif_step", "measure_activity", "step_network", "Corpus", "Dictionary", "GrayscaleImage",
    "Sample", "build_dictionary", "load_bundled", "load_corpus", "load_pgm", "save_pgm", "tokenize",
    "Codebook", "EncoderConfig", "build_codebook", "codebook_encode", "encode_sequence",
    "gaussian_pos_word_encode", "poisson_encode", "pos_word_encode", "position_fixed_encode",
    "ttfs_encode", "CapacityError", "ConfigurationError", "DataFormatError", "DomainError",
    "InputValidationError", "SimulationFault", "SpikeColError", "Decision", "EligibilityTrace",
    "RewardSignal", "StdpParams", "TrialHistory", "apply_rstdp", "apply_stdp", "compute_reward_simple",
    "compute_reward_weighted", "stdp_delta", "ExperimentConfig", "TrainConfig", "build_model", "evaluate",
    "experiment", "train_epochs", "train_sample",
]
