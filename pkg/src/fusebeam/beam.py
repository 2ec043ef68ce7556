"""Autoregressive beam search with score fusion and penalized ALP ranking.

The loop keeps up to ``beam_size`` live hypotheses. At each step every live
hypothesis is scored once (acoustic and language vectors fused per step) and
extended by every emittable token -- content tokens and EOT; BOS is pure
conditioning and never an extension. Candidates are ranked by raw summed log
probability (SLP), ties broken by shorter then lexicographically smaller
token sequence, and scanned best-first:

* a candidate whose new token is EOT is finished;
* a candidate reaching ``max_tokens`` without EOT is finished as truncated;
* anything else refills the live set, and the scan stops as soon as
  ``beam_size`` live candidates have been collected (lower-ranked enders are
  pruned with everything else below the cutoff).

Search ends when ``beam_size`` finished hypotheses exist or no live ones
remain. Finished hypotheses never consume live slots.

Raw SLP drives the within-search comparison; the penalties (truncation,
cyclic repetition) touch only the finished candidates, and the final winner
maximizes penalized SLP divided by token count (ALP). The divisor counts
every decoded token including EOT, and equals ``max_tokens`` for truncated
candidates.

Everything here is deterministic: identical inputs give bit-identical
results, which the exhaustive-search equivalence tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .core import Hypothesis, Vocabulary, decode_text
from .fusion import FusionConfig, fuse_step
from .penalty import CycleReport, apply_cycle_penalty, apply_truncation_penalty, detect_max_cycle
from .scorers import AcousticScenario, ScorerState, SequenceScorer, TableAcousticScorer


@dataclass(frozen=True)
class BeamConfig:
    beam_size: int = 5
    max_tokens: int = 64
    fusion: FusionConfig = field(default_factory=FusionConfig)
    hallucination_penalty_enabled: bool = True
    truncation_penalty_enabled: bool = True

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class CandidateReport:
    """A finished candidate with its raw and penalized scores."""

    hypothesis: Hypothesis
    raw_slp: float
    penalized_slp: float
    cycle: CycleReport

    @property
    def alp(self) -> float:
        return self.penalized_slp / len(self.hypothesis.tokens)

    def to_json_dict(self) -> dict:
        return {
            "tokens": list(self.hypothesis.tokens),
            "raw_slp": self.raw_slp,
            "penalized_slp": self.penalized_slp,
            "alp": self.alp,
            "truncated": self.hypothesis.truncated,
            "cycle": self.cycle.to_json_dict(),
        }


@dataclass(frozen=True)
class DecodeResult:
    """Best candidate plus the full ranked candidate list."""

    best: Hypothesis
    alp: float
    candidates: tuple[CandidateReport, ...]
    text: str

    def to_json_dict(self) -> dict:
        return {
            "text": self.text,
            "alp": self.alp,
            "candidates": [c.to_json_dict() for c in self.candidates],
        }


class _Live(NamedTuple):
    tokens: tuple[int, ...]
    slp: float
    acoustic_state: ScorerState
    lm_state: ScorerState


def _finish(
    tokens: tuple[int, ...],
    slp: float,
    truncated: bool,
    eot_id: int,
    config: BeamConfig,
) -> CandidateReport:
    hyp = Hypothesis(tokens=tokens, slp=slp, finished=True, truncated=truncated)
    content = tokens[:-1] if tokens and tokens[-1] == eot_id else tokens
    cycle = detect_max_cycle(content)
    penalized = slp
    if config.truncation_penalty_enabled:
        penalized = apply_truncation_penalty(penalized, len(tokens), truncated)
    if config.hallucination_penalty_enabled:
        penalized = apply_cycle_penalty(penalized, cycle)
    return CandidateReport(hypothesis=hyp, raw_slp=slp, penalized_slp=penalized, cycle=cycle)


def beam_search(
    acoustic: AcousticScenario | SequenceScorer,
    lm: SequenceScorer,
    vocab: Vocabulary,
    config: BeamConfig,
) -> DecodeResult:
    """Decode one utterance; see the module docstring for the exact loop."""
    if isinstance(acoustic, AcousticScenario):
        acoustic = TableAcousticScorer(acoustic)
    if acoustic.vocab_size != vocab.size or lm.vocab_size != vocab.size:
        raise ValueError(
            f"scorer vocabulary mismatch: acoustic={acoustic.vocab_size} "
            f"lm={lm.vocab_size} vocab={vocab.size}"
        )
    eot = vocab.eot_id
    extension_ids = [i for i in range(vocab.size) if i != vocab.bos_id]

    live = [_Live((), 0.0, acoustic.start(), lm.start())]
    finished: list[CandidateReport] = []

    while live and len(finished) < config.beam_size:
        pool = []
        for hyp in live:
            fused = fuse_step(
                acoustic.step(hyp.acoustic_state), lm.step(hyp.lm_state), config.fusion, eot
            )
            for tid in extension_ids:
                pool.append((hyp.tokens + (tid,), hyp.slp + fused[tid], hyp, tid))
        pool.sort(key=lambda c: (-c[1], len(c[0]), c[0]))
        new_live = []
        for tokens, slp, parent, tid in pool:
            if tid == eot:
                finished.append(_finish(tokens, slp, False, eot, config))
            elif len(tokens) >= config.max_tokens:
                finished.append(_finish(tokens, slp, True, eot, config))
            else:
                new_live.append(
                    _Live(
                        tokens,
                        slp,
                        acoustic.advance(parent.acoustic_state, tid),
                        lm.advance(parent.lm_state, tid),
                    )
                )
                if len(new_live) == config.beam_size:
                    break
        live = new_live

    if not finished:
        raise RuntimeError("beam search produced no finished hypothesis")

    ranked = sorted(
        finished,
        key=lambda r: (-r.alp, -r.raw_slp, len(r.hypothesis.tokens), r.hypothesis.tokens),
    )
    best = ranked[0]
    return DecodeResult(
        best=best.hypothesis,
        alp=best.alp,
        candidates=tuple(ranked),
        text=decode_text(best.hypothesis.tokens, vocab),
    )
