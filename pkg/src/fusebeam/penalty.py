"""Hallucination controls: cyclic-run detection and SLP penalties.

Hallucinated transcripts tend to show up either as a phrase repeated over
and over, or as a decode that only stops because it hit the token limit.
Both get their summed log probability (SLP) reduced here, approximating a
halving of every offending token's probability: ln 2 per repeated-run token
(period * extra repeats) and ln 2 per token of a truncated decode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LN2 = math.log(2.0)


@dataclass(frozen=True)
class CycleReport:
    """Maximal consecutive repetition found in a token sequence.

    ``period`` is the repeated block length, ``repeats`` counts repetitions
    beyond the first occurrence, ``start`` is where the run begins. A report
    of (0, 0, 0) means no block of length >= 1 occurs twice in a row.
    Serialized manifests carry these as ``L``/``C``/``start``.
    """

    period: int
    repeats: int
    start: int

    def to_json_dict(self) -> dict:
        return {"L": self.period, "C": self.repeats, "start": self.start}

    @classmethod
    def from_json_dict(cls, data: dict) -> "CycleReport":
        return cls(period=int(data["L"]), repeats=int(data["C"]), start=int(data["start"]))


def detect_max_cycle(tokens) -> CycleReport:
    """Find the maximal cyclic run in a token sequence.

    Among all runs of r >= 2 consecutive copies of a block of length p >= 1,
    picks the largest p, breaking ties by larger r then smaller start index.
    Non-primitive periods count ("XXXX" reports period 2, not 1). Plain
    O(n^2) scan with greedy run extension; sequences are short at desk scale.
    """
    tokens = tuple(tokens)
    n = len(tokens)
    best_p, best_r, best_s = 0, 0, 0
    for period in range(1, n // 2 + 1):
        start = 0
        while start + 2 * period <= n:
            block = tokens[start : start + period]
            if tokens[start + period : start + 2 * period] == block:
                copies = 2
                while (
                    start + (copies + 1) * period <= n
                    and tokens[start + copies * period : start + (copies + 1) * period] == block
                ):
                    copies += 1
                extra = copies - 1
                if period > best_p or (
                    period == best_p
                    and (extra > best_r or (extra == best_r and start < best_s))
                ):
                    best_p, best_r, best_s = period, extra, start
            start += 1
    if best_p == 0:
        return CycleReport(0, 0, 0)
    return CycleReport(best_p, best_r, best_s)


def apply_cycle_penalty(slp: float, report: CycleReport) -> float:
    """SLP minus period * repeats * ln 2; identity when no run was found."""
    return slp - report.period * report.repeats * LN2


def apply_truncation_penalty(slp: float, n_tokens: int, truncated: bool) -> float:
    """SLP minus n_tokens * ln 2 for decodes cut off at the token limit."""
    if n_tokens < 0:
        raise ValueError("n_tokens must be >= 0")
    if not truncated:
        return slp
    return slp - n_tokens * LN2
