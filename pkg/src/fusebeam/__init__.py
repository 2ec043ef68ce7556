"""Sequence decoding with language-model fusion and ALP-based data selection."""

from .beam import BeamConfig, CandidateReport, DecodeResult, beam_search
from .core import (
    Hypothesis,
    InvalidTokenIdError,
    UnknownTokenError,
    Vocabulary,
    decode_text,
    encode,
    load_vocabulary,
    save_vocabulary,
)
from .fusion import FusionConfig, fuse_step
from .metrics import WerBreakdown, aggregate_wer, perplexity, wer
from .penalty import (
    CycleReport,
    apply_cycle_penalty,
    apply_truncation_penalty,
    detect_max_cycle,
)
from .scorers import (
    AcousticScenario,
    EmptyCorpusError,
    NGramLM,
    NGramScorer,
    SequenceScorer,
    TableAcousticScorer,
    UniformScorer,
    load_lm,
    load_scenario,
    save_lm,
    save_scenario,
    train_ngram,
)
from .selection import (
    SampleRecord,
    SelectionReport,
    batch_decode,
    read_manifest,
    select_top_fraction,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "AcousticScenario",
    "BeamConfig",
    "CandidateReport",
    "CycleReport",
    "DecodeResult",
    "EmptyCorpusError",
    "FusionConfig",
    "Hypothesis",
    "InvalidTokenIdError",
    "NGramLM",
    "NGramScorer",
    "SampleRecord",
    "SelectionReport",
    "SequenceScorer",
    "TableAcousticScorer",
    "UniformScorer",
    "UnknownTokenError",
    "Vocabulary",
    "WerBreakdown",
    "aggregate_wer",
    "apply_cycle_penalty",
    "apply_truncation_penalty",
    "batch_decode",
    "beam_search",
    "decode_text",
    "detect_max_cycle",
    "encode",
    "fuse_step",
    "load_lm",
    "load_scenario",
    "load_vocabulary",
    "perplexity",
    "read_manifest",
    "save_lm",
    "save_scenario",
    "save_vocabulary",
    "select_top_fraction",
    "train_ngram",
    "wer",
    "write_manifest",
    "__version__",
]
