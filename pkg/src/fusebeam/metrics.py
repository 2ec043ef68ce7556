"""Evaluation: word error rate and language-model perplexity."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import NEG_INF
from .scorers import NGramLM, NGramScorer, SequenceScorer


class EmptyReferenceError(ValueError):
    """The reference transcript has no words."""


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int
    wer: float

    def to_json_dict(self) -> dict:
        return {
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "ref_words": self.ref_words,
            "wer": self.wer,
        }


def wer(reference: str, hypothesis: str) -> WerBreakdown:
    """Minimum word-level edit distance with a fixed S/D/I decomposition.

    Words are whitespace-delimited; no other normalization is applied. When
    alignment costs tie, substitution is preferred over insertion over
    deletion, making the breakdown reproducible (the WER value itself does
    not depend on the tie rule). WER can exceed 1 on insertion-heavy output.
    """
    ref = reference.split()
    hyp = hypothesis.split()
    if not ref:
        raise EmptyReferenceError("reference must contain at least one word")
    m, n = len(ref), len(hyp)
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dist[i][0] = i
    for j in range(1, n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        row, prev = dist[i], dist[i - 1]
        for j in range(1, n + 1):
            sub = prev[j - 1] + (ref[i - 1] != hyp[j - 1])
            row[j] = min(sub, row[j - 1] + 1, prev[j] + 1)
    subs = dels = ins = 0
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            subs += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif j > 0 and dist[i][j] == dist[i][j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return WerBreakdown(
        substitutions=subs,
        deletions=dels,
        insertions=ins,
        ref_words=m,
        wer=(subs + dels + ins) / m,
    )


def aggregate_wer(breakdowns) -> WerBreakdown:
    """Corpus-level aggregate: total errors over total reference words."""
    breakdowns = list(breakdowns)
    if not breakdowns:
        raise ValueError("nothing to aggregate")
    subs = sum(b.substitutions for b in breakdowns)
    dels = sum(b.deletions for b in breakdowns)
    ins = sum(b.insertions for b in breakdowns)
    ref = sum(b.ref_words for b in breakdowns)
    return WerBreakdown(subs, dels, ins, ref, (subs + dels + ins) / ref)


def perplexity(lm: NGramLM | SequenceScorer, corpus, eot_id: int | None = None) -> float:
    """exp of the average negative log probability per token.

    ``corpus`` is a list of token-id sequences. When ``eot_id`` is given,
    each sequence is additionally scored (and counted) on predicting EOT at
    its end -- use this for models trained with EOT appended. A zero
    probability anywhere yields ``inf``; add-k smoothing never produces one.
    """
    scorer = NGramScorer(lm) if isinstance(lm, NGramLM) else lm
    sequences = [list(seq) for seq in corpus]
    if not sequences:
        raise ValueError("corpus must be non-empty")
    total = 0.0
    count = 0
    for seq in sequences:
        if not seq and eot_id is None:
            raise ValueError("corpus sequences must be non-empty")
        state = scorer.start()
        scored = seq + [eot_id] if eot_id is not None else seq
        for tid in scored:
            logp = scorer.step(state)[tid]
            if logp == NEG_INF:
                return math.inf
            total += logp
            count += 1
            state = scorer.advance(state, tid)
    return math.exp(-total / count)
