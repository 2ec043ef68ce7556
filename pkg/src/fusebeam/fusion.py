"""Weighted log-probability fusion of acoustic and language scores.

The fused per-token score is (log P_ac + lambda * log P_lm) / (1 + lambda):
logs are taken separately and then combined, which is not the same thing as
averaging probabilities and taking one log. The output is a score vector,
not a distribution -- it is deliberately not renormalized, since beam search
only compares scores within a step where the missing normalizer is shared.

The EOT gate makes transcript termination depend on audio alone: whenever
the acoustic model's most probable token is EOT (ties included), the weight
is treated as 0 for that entire step and the acoustic vector passes through
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FusionConfig:
    lambda_gpt: float = 0.3
    eot_gate_enabled: bool = True

    def __post_init__(self) -> None:
        if self.lambda_gpt < 0:
            raise ValueError("lambda_gpt must be >= 0")


def fuse_step(
    acoustic: tuple[float, ...],
    lm: tuple[float, ...],
    config: FusionConfig,
    eot_id: int,
) -> tuple[float, ...]:
    """Fuse one step's log vectors; returns the acoustic vector unchanged
    when lambda is 0 or the EOT gate fires."""
    if len(acoustic) != len(lm):
        raise ValueError(f"vector length mismatch: {len(acoustic)} vs {len(lm)}")
    if not 0 <= eot_id < len(acoustic):
        raise ValueError(f"eot_id {eot_id} out of range")
    if config.eot_gate_enabled and acoustic[eot_id] == max(acoustic):
        return acoustic
    lam = config.lambda_gpt
    if lam == 0.0:
        return acoustic
    denom = 1.0 + lam
    return tuple((a + lam * l) / denom for a, l in zip(acoustic, lm))
