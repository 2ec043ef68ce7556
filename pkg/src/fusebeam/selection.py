"""Pseudo-label pipeline: batch decoding, ALP ranking, top-fraction selection.

Decoding an unlabeled set yields one :class:`SampleRecord` per utterance with
its transcript and penalized ALP. Ranking by ALP (descending, sample_id as
tie-break) and keeping the top fraction produces the subset handed to an
external fine-tuning step; this module ends at emitting that manifest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .beam import BeamConfig, beam_search
from .core import Vocabulary
from .penalty import CycleReport
from .scorers import AcousticScenario, SequenceScorer


@dataclass(frozen=True)
class SampleRecord:
    """One utterance in a manifest. ``alp`` is penalized SLP / n_tokens as
    produced by the decoder; ``error`` is set (and the metrics nulled) when
    the sample failed to decode."""

    sample_id: str
    scenario_ref: str
    text: str
    alp: float | None
    n_tokens: int
    truncated: bool
    cycle: CycleReport
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "scenario_ref": self.scenario_ref,
            "text": self.text,
            "alp": self.alp,
            "n_tokens": self.n_tokens,
            "truncated": self.truncated,
            "cycle": self.cycle.to_json_dict(),
            "error": self.error,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SampleRecord":
        return cls(
            sample_id=data["sample_id"],
            scenario_ref=data["scenario_ref"],
            text=data["text"],
            alp=None if data["alp"] is None else float(data["alp"]),
            n_tokens=int(data["n_tokens"]),
            truncated=bool(data["truncated"]),
            cycle=CycleReport.from_json_dict(data["cycle"]),
            error=data.get("error"),
        )


@dataclass(frozen=True)
class SelectionReport:
    fraction: float
    selected_count: int
    alp_threshold: float
    selected_ids: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "selected_count": self.selected_count,
            "alp_threshold": self.alp_threshold,
            "selected_ids": list(self.selected_ids),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SelectionReport":
        return cls(
            fraction=float(data["fraction"]),
            selected_count=int(data["selected_count"]),
            alp_threshold=float(data["alp_threshold"]),
            selected_ids=tuple(data["selected_ids"]),
        )


def batch_decode(
    scenarios,
    lm: SequenceScorer,
    vocab: Vocabulary,
    config: BeamConfig,
    refs=None,
) -> list[SampleRecord]:
    """Decode every scenario independently; output order matches input order.

    A failing sample is flagged in its record instead of aborting the batch.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("no scenarios to decode")
    if refs is None:
        refs = [s.scenario_id for s in scenarios]
    refs = list(refs)
    if len(refs) != len(scenarios):
        raise ValueError("refs must parallel scenarios")
    records = []
    for scenario, ref in zip(scenarios, refs):
        sample_id = scenario.scenario_id
        try:
            result = beam_search(scenario, lm, vocab, config)
            best = result.candidates[0]
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    scenario_ref=ref,
                    text=result.text,
                    alp=result.alp,
                    n_tokens=best.hypothesis.n_tokens,
                    truncated=best.hypothesis.truncated,
                    cycle=best.cycle,
                )
            )
        except Exception as exc:  # noqa: BLE001 - flagged per sample by contract
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    scenario_ref=ref,
                    text="",
                    alp=None,
                    n_tokens=0,
                    truncated=False,
                    cycle=CycleReport(0, 0, 0),
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return records


def select_top_fraction(records, fraction: float) -> SelectionReport:
    """Keep the ceil(fraction * n) records with the highest ALP.

    Ties rank by ascending sample_id, so the selected set at a smaller
    fraction is always a subset of the set at a larger one.
    """
    records = list(records)
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if not records:
        raise ValueError("no records to select from")
    bad = [r.sample_id for r in records if r.alp is None]
    if bad:
        raise ValueError(f"records without a valid alp cannot be ranked: {bad}")
    ranked = sorted(records, key=lambda r: (-r.alp, r.sample_id))
    # the 1e-9 slack absorbs binary-float noise in decimal fractions
    count = math.ceil(fraction * len(ranked) - 1e-9)
    selected = ranked[:count]
    return SelectionReport(
        fraction=fraction,
        selected_count=count,
        alp_threshold=selected[-1].alp,
        selected_ids=tuple(r.sample_id for r in selected),
    )


def write_manifest(records, path: str | Path) -> None:
    lines = [json.dumps(r.to_json_dict(), sort_keys=True, ensure_ascii=False) for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_manifest(path: str | Path) -> list[SampleRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(SampleRecord.from_json_dict(json.loads(line)))
    return records


def read_transcripts(path: str | Path) -> list[tuple[str, str]]:
    """Read (sample_id, text) pairs from any JSONL manifest, full or refs-only."""
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            row = json.loads(line)
            pairs.append((row["sample_id"], row["text"]))
    return pairs


def write_transcripts(pairs, path: str | Path) -> None:
    lines = [
        json.dumps({"sample_id": sid, "text": text}, sort_keys=True, ensure_ascii=False)
        for sid, text in pairs
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
