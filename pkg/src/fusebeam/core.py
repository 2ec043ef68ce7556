"""Shared domain types: vocabulary, token codecs, hypotheses, log-prob helpers.

All log probabilities throughout the package are natural logarithms (nats);
"halving a probability" therefore means subtracting ln 2. Impossible tokens
are represented by ``-inf``, which propagates through sums and is never
selected by an argmax while any finite entry exists.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

NEG_INF = float("-inf")

NORMALIZATION_TOL = 1e-9


class UnknownTokenError(ValueError):
    """A text unit has no content-token id (or names a reserved token)."""


class InvalidTokenIdError(ValueError):
    """A token id lies outside the vocabulary range."""


@dataclass(frozen=True)
class Vocabulary:
    """Dense token-id <-> string mapping with reserved BOS and EOT ids.

    ``mode`` selects the text codec: ``"word"`` splits on whitespace and
    joins with single spaces, ``"char"`` maps every character to a token.
    Instances are immutable and safe to share across concurrent decoders.
    """

    tokens: tuple[str, ...]
    bos_id: int
    eot_id: int
    mode: str = "word"
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if len(self.tokens) < 3:
            raise ValueError("vocabulary needs BOS, EOT and at least one content token")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("token strings must be unique")
        for tid in (self.bos_id, self.eot_id):
            if not 0 <= tid < len(self.tokens):
                raise InvalidTokenIdError(f"reserved id {tid} out of range")
        if self.bos_id == self.eot_id:
            raise ValueError("bos_id and eot_id must differ")
        if self.mode not in ("word", "char"):
            raise ValueError(f"unknown vocabulary mode {self.mode!r}")
        for i, tok in enumerate(self.tokens):
            if i in (self.bos_id, self.eot_id):
                if not tok:
                    raise ValueError("reserved tokens must be non-empty strings")
                continue
            if self.mode == "word" and (not tok or tok.split() != [tok]):
                raise ValueError(f"word-mode token {tok!r} must be non-empty, no whitespace")
            if self.mode == "char" and len(tok) != 1:
                raise ValueError(f"char-mode token {tok!r} must be a single character")
        object.__setattr__(self, "_index", {tok: i for i, tok in enumerate(self.tokens)})

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def content_ids(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.tokens)) if i not in (self.bos_id, self.eot_id))

    def id_of(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise UnknownTokenError(f"unknown token {token!r}") from None

    def token_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise InvalidTokenIdError(f"token id {token_id} out of range 0..{len(self.tokens) - 1}")
        return self.tokens[token_id]

    def to_json_dict(self) -> dict:
        return {"tokens": list(self.tokens), "bos": self.bos_id, "eot": self.eot_id, "mode": self.mode}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Vocabulary":
        return cls(
            tokens=tuple(data["tokens"]),
            bos_id=int(data["bos"]),
            eot_id=int(data["eot"]),
            mode=data.get("mode", "word"),
        )


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(vocab.to_json_dict(), sort_keys=True) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    return Vocabulary.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def encode(text: str, vocab: Vocabulary) -> list[int]:
    """Map text to content-token ids; reserved tokens are never emitted."""
    units = text.split() if vocab.mode == "word" else list(text)
    ids = []
    for unit in units:
        tid = vocab._index.get(unit)
        if tid is None:
            raise UnknownTokenError(f"unknown token {unit!r}")
        if tid in (vocab.bos_id, vocab.eot_id):
            raise UnknownTokenError(f"reserved token {unit!r} cannot appear in text")
        ids.append(tid)
    return ids


def decode_text(tokens, vocab: Vocabulary) -> str:
    """Inverse of encode. EOT renders as the empty string."""
    parts = []
    for tid in tokens:
        if not 0 <= tid < vocab.size:
            raise InvalidTokenIdError(f"token id {tid} out of range 0..{vocab.size - 1}")
        if tid == vocab.eot_id:
            continue
        parts.append(vocab.tokens[tid])
    sep = " " if vocab.mode == "word" else ""
    return sep.join(parts)


@dataclass(frozen=True)
class Hypothesis:
    """One beam candidate.

    ``slp`` is the sum of per-step fused log probabilities of ``tokens``
    (before any penalty). A finished hypothesis either ends in EOT or was
    truncated at the token limit, never both.
    """

    tokens: tuple[int, ...]
    slp: float
    finished: bool
    truncated: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)


def log_probs_from_probs(probs) -> tuple[float, ...]:
    """Probabilities -> log vector; zero maps to the -inf sentinel."""
    return tuple(math.log(p) if p > 0.0 else NEG_INF for p in probs)


def validate_prob_vector(probs, tol: float = NORMALIZATION_TOL) -> None:
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p!r} outside [0, 1]")
    total = math.fsum(probs)
    if abs(total - 1.0) > tol:
        raise ValueError(f"probabilities sum to {total!r}, expected 1 within {tol}")


def validate_log_prob_vector(vec, tol: float = NORMALIZATION_TOL) -> None:
    """Reject vectors that are not normalized log distributions."""
    for v in vec:
        if v > 0.0:
            raise ValueError(f"log probability {v!r} above 0")
    total = math.fsum(math.exp(v) for v in vec)
    if abs(total - 1.0) > tol:
        raise ValueError(f"exp-sum is {total!r}, expected 1 within {tol}")


def argmax_index(vec) -> int:
    """Smallest index attaining the maximum."""
    best, best_i = vec[0], 0
    for i in range(1, len(vec)):
        if vec[i] > best:
            best, best_i = vec[i], i
    return best_i
