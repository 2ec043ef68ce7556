"""Acoustic- and language-scorer contracts with incremental per-prefix state.

A scorer answers "distribution over the next token given the prefix so far".
State is an immutable value created by ``start()`` and grown by ``advance()``;
``step()`` only queries and never mutates, because beam search scores one
state under many candidate extensions. Since states are plain tuples, keeping
a reference around *is* a snapshot: the original and any branch advanced from
it evolve independently.

Cache transparency is the core contract: advancing a state token by token and
then querying must equal querying a fresh state fed the same full prefix.

Three implementations are provided:

* :class:`TableAcousticScorer` -- plays back an :class:`AcousticScenario`,
  a table mapping decoding prefixes to acoustic posterior distributions
  (the stand-in for one audio clip).
* :class:`NGramScorer` -- serves an add-k smoothed :class:`NGramLM`.
* :class:`UniformScorer` -- the indifferent baseline, every entry -ln|V|.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .core import (
    NEG_INF,
    InvalidTokenIdError,
    Vocabulary,
    log_probs_from_probs,
    validate_prob_vector,
)

ScorerState = tuple[int, ...]


class EmptyCorpusError(ValueError):
    """Training was requested on an empty corpus."""


class SequenceScorer(ABC):
    """Incremental next-token scorer; see module docstring for the contract."""

    vocab_size: int

    @abstractmethod
    def start(self) -> ScorerState:
        """State for the empty prefix (BOS is implicit conditioning)."""

    @abstractmethod
    def step(self, state: ScorerState) -> tuple[float, ...]:
        """Log distribution over the next token; does not advance the state."""

    def advance(self, state: ScorerState, token: int) -> ScorerState:
        if not 0 <= token < self.vocab_size:
            raise InvalidTokenIdError(f"token id {token} out of range 0..{self.vocab_size - 1}")
        return state + (token,)


@dataclass(frozen=True)
class AcousticScenario:
    """Table-driven acoustic model for one utterance.

    ``entries`` maps prefix token sequences to probability vectors over the
    full vocabulary; ``default_probs`` answers for unlisted prefixes. Stored
    values are probabilities (not logs) so that files round-trip bit-exactly.
    """

    scenario_id: str
    vocab_ref: str
    entries: tuple[tuple[tuple[int, ...], tuple[float, ...]], ...]
    default_probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "default_probs", tuple(self.default_probs))
        object.__setattr__(
            self,
            "entries",
            tuple((tuple(prefix), tuple(probs)) for prefix, probs in self.entries),
        )
        size = len(self.default_probs)
        if size < 3:
            raise ValueError("scenario vectors must cover at least 3 tokens")
        validate_prob_vector(self.default_probs)
        seen = set()
        for prefix, probs in self.entries:
            if len(probs) != size:
                raise ValueError(f"entry for prefix {prefix} has length {len(probs)}, expected {size}")
            validate_prob_vector(probs)
            for tid in prefix:
                if not 0 <= tid < size:
                    raise InvalidTokenIdError(f"prefix token id {tid} out of range")
            if prefix in seen:
                raise ValueError(f"duplicate entry for prefix {prefix}")
            seen.add(prefix)
        if () not in seen:
            raise ValueError("scenario must list the empty prefix")

    @property
    def vocab_size(self) -> int:
        return len(self.default_probs)

    def to_json_dict(self) -> dict:
        return {
            "id": self.scenario_id,
            "vocab_ref": self.vocab_ref,
            "entries": [{"prefix": list(prefix), "probs": list(probs)} for prefix, probs in self.entries],
            "default_probs": list(self.default_probs),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "AcousticScenario":
        return cls(
            scenario_id=data["id"],
            vocab_ref=data.get("vocab_ref", ""),
            entries=tuple(
                (tuple(int(t) for t in e["prefix"]), tuple(float(p) for p in e["probs"]))
                for e in data["entries"]
            ),
            default_probs=tuple(float(p) for p in data["default_probs"]),
        )


def save_scenario(scenario: AcousticScenario, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario.to_json_dict(), sort_keys=True) + "\n", encoding="utf-8"
    )


def load_scenario(path: str | Path) -> AcousticScenario:
    return AcousticScenario.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class TableAcousticScorer(SequenceScorer):
    """Serves an :class:`AcousticScenario` through the scorer contract."""

    def __init__(self, scenario: AcousticScenario):
        self.scenario = scenario
        self.vocab_size = scenario.vocab_size
        self._table = {
            prefix: log_probs_from_probs(probs) for prefix, probs in scenario.entries
        }
        self._default = log_probs_from_probs(scenario.default_probs)

    def start(self) -> ScorerState:
        return ()

    def step(self, state: ScorerState) -> tuple[float, ...]:
        return self._table.get(state, self._default)


@dataclass(frozen=True)
class NGramLM:
    """Add-k smoothed n-gram counts over token ids.

    Contexts are the last ``order - 1`` tokens, BOS-padded at sequence start,
    so every stored context has exactly that length (empty for order 1).
    P(y | ctx) = (count(ctx, y) + k) / (count(ctx, *) + k * vocab_size), which
    sums to 1 over the vocabulary for every context by construction.
    """

    order: int
    k: float
    vocab_size: int
    bos_id: int
    counts: dict[tuple[int, ...], dict[int, int]]

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.k <= 0:
            raise ValueError("smoothing constant k must be > 0")
        if not 0 <= self.bos_id < self.vocab_size:
            raise InvalidTokenIdError(f"bos_id {self.bos_id} out of range")

    def context_total(self, context: tuple[int, ...]) -> int:
        return sum(self.counts.get(context, {}).values())

    def probability(self, token: int, context: tuple[int, ...]) -> float:
        context = context[-(self.order - 1):] if self.order > 1 else ()
        nexts = self.counts.get(context, {})
        total = sum(nexts.values())
        return (nexts.get(token, 0) + self.k) / (total + self.k * self.vocab_size)

    def to_json_dict(self) -> dict:
        counts = {
            " ".join(str(t) for t in ctx): {str(tok): n for tok, n in nexts.items()}
            for ctx, nexts in self.counts.items()
        }
        return {
            "order": self.order,
            "k": self.k,
            "vocab_size": self.vocab_size,
            "bos_id": self.bos_id,
            "counts": counts,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "NGramLM":
        counts = {}
        for ctx_key, nexts in data["counts"].items():
            ctx = tuple(int(t) for t in ctx_key.split()) if ctx_key else ()
            counts[ctx] = {int(tok): int(n) for tok, n in nexts.items()}
        return cls(
            order=int(data["order"]),
            k=float(data["k"]),
            vocab_size=int(data["vocab_size"]),
            bos_id=int(data["bos_id"]),
            counts=counts,
        )


def save_lm(lm: NGramLM, path: str | Path) -> None:
    Path(path).write_text(json.dumps(lm.to_json_dict(), sort_keys=True) + "\n", encoding="utf-8")


def load_lm(path: str | Path) -> NGramLM:
    return NGramLM.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_ngram(corpus, order: int, k: float, vocab: Vocabulary) -> NGramLM:
    """Count n-grams over token sequences (append EOT yourself if wanted).

    Each sequence is BOS-padded on the left; BOS itself is never a predicted
    token, only context.
    """
    sequences = [tuple(seq) for seq in corpus]
    if not sequences:
        raise EmptyCorpusError("cannot train an n-gram model on an empty corpus")
    if order < 1:
        raise ValueError("order must be >= 1")
    if k <= 0:
        raise ValueError("smoothing constant k must be > 0")
    counts: dict[tuple[int, ...], dict[int, int]] = defaultdict(lambda: defaultdict(int))
    pad = (vocab.bos_id,) * (order - 1)
    for seq in sequences:
        for tid in seq:
            if not 0 <= tid < vocab.size:
                raise InvalidTokenIdError(f"token id {tid} out of range 0..{vocab.size - 1}")
        padded = pad + seq
        for i, tid in enumerate(seq):
            context = padded[i : i + order - 1]
            counts[context][tid] += 1
    plain = {ctx: dict(nexts) for ctx, nexts in counts.items()}
    return NGramLM(order=order, k=k, vocab_size=vocab.size, bos_id=vocab.bos_id, counts=plain)


class NGramScorer(SequenceScorer):
    """Scorer view of an :class:`NGramLM`; states are truncated contexts."""

    def __init__(self, lm: NGramLM):
        self.lm = lm
        self.vocab_size = lm.vocab_size
        self._cache: dict[ScorerState, tuple[float, ...]] = {}

    def start(self) -> ScorerState:
        return (self.lm.bos_id,) * (self.lm.order - 1)

    def step(self, state: ScorerState) -> tuple[float, ...]:
        cached = self._cache.get(state)
        if cached is not None:
            return cached
        lm = self.lm
        nexts = lm.counts.get(state, {})
        denom = sum(nexts.values()) + lm.k * lm.vocab_size
        vec = tuple(math.log((nexts.get(y, 0) + lm.k) / denom) for y in range(lm.vocab_size))
        self._cache[state] = vec
        return vec

    def advance(self, state: ScorerState, token: int) -> ScorerState:
        if not 0 <= token < self.vocab_size:
            raise InvalidTokenIdError(f"token id {token} out of range 0..{self.vocab_size - 1}")
        if self.lm.order == 1:
            return ()
        return (state + (token,))[-(self.lm.order - 1):]


class UniformScorer(SequenceScorer):
    """Context-free scorer assigning -ln|V| to every token."""

    def __init__(self, vocab_size: int):
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.vocab_size = vocab_size
        self._vec = (-math.log(vocab_size),) * vocab_size

    def start(self) -> ScorerState:
        return ()

    def step(self, state: ScorerState) -> tuple[float, ...]:
        return self._vec
