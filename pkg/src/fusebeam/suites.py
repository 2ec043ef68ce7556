"""Seeded synthetic suites for end-to-end evaluation of the pipeline.

A suite is a self-contained directory: a vocabulary, a text corpus to train
the language model on, reference transcripts, one acoustic scenario file per
utterance, and a config naming the decode configurations to compare. All
randomness comes from one ``random.Random(seed)``, so a suite is a pure
function of its seed.

Four suite kinds are shipped:

* ``noisy-channel`` -- ground-truth sentences drawn from a bigram source
  chain; the acoustic tables mostly peak on the truth but some steps are
  corrupted. "Easy" corruptions promote five implausible distractors above
  the truth, so a language-model-fused decode recovers the truth while a
  pure acoustic decode is led astray. "Hard" corruptions put a single
  plausible distractor far on top, which no amount of fusion fixes; these
  leave residual errors that keep per-sample WER and ALP varied.
* ``early-stop`` -- the audio ends mid-sentence at a word that never ends
  sentences in the corpus, while the table keeps offering a plausible
  continuation for a few steps. With the EOT gate off, the language model
  drags the decode past the reference end; with the gate on, termination
  follows the acoustic evidence.
* ``hallucination`` -- scenarios offering two finishable candidates: a
  phrase spoken once, and the same phrase repeated twice with higher raw
  SLP. The repetition penalty decides which one wins final selection.
* ``selection-sweep`` -- a large noisy-channel variant with per-utterance
  noise tiers, for studying WER of ALP-selected subsets as the selection
  fraction grows.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .beam import BeamConfig
from .core import Vocabulary, encode
from .fusion import FusionConfig
from .scorers import AcousticScenario, NGramLM, save_scenario, train_ngram

CONTENT_WORDS = ("ash", "bor", "cil", "dun", "elk", "fir", "gam", "hul", "ink", "jor", "kel")

SUITE_KINDS = ("noisy-channel", "early-stop", "hallucination", "selection-sweep")

# per-utterance corruption rates: (p_easy, p_hard) per content step
NOISE_TIERS = (
    (0.40, (0.0, 0.0)),
    (0.30, (0.08, 0.03)),
    (0.20, (0.25, 0.10)),
    (0.10, (0.45, 0.25)),
)


def make_suite_vocab() -> Vocabulary:
    return Vocabulary(tokens=("<s>", "</s>") + CONTENT_WORDS, bos_id=0, eot_id=1, mode="word")


@dataclass(frozen=True)
class SyntheticSuite:
    name: str
    seed: int
    vocab: Vocabulary
    corpus_lines: tuple[str, ...]
    refs: tuple[tuple[str, str], ...]
    scenarios: tuple[AcousticScenario, ...]
    lm_order: int
    lm_k: float
    append_eot: bool
    decode_grid: tuple[dict, ...]
    fractions: tuple[float, ...]


def beam_config_from_grid(entry: dict) -> BeamConfig:
    return BeamConfig(
        beam_size=int(entry.get("beam_size", 5)),
        max_tokens=int(entry.get("max_tokens", 64)),
        fusion=FusionConfig(
            lambda_gpt=float(entry.get("lambda_gpt", 0.3)),
            eot_gate_enabled=bool(entry.get("eot_gate", True)),
        ),
        hallucination_penalty_enabled=bool(entry.get("hallucination_penalty", True)),
        truncation_penalty_enabled=bool(entry.get("truncation_penalty", True)),
    )


def train_suite_lm(suite: SyntheticSuite) -> NGramLM:
    return _train_lm_from_lines(
        suite.corpus_lines, suite.vocab, suite.lm_order, suite.lm_k, suite.append_eot
    )


def _train_lm_from_lines(lines, vocab, order, k, append_eot) -> NGramLM:
    seqs = []
    for line in lines:
        ids = encode(line, vocab)
        if append_eot:
            ids = ids + [vocab.eot_id]
        seqs.append(ids)
    return train_ngram(seqs, order=order, k=k, vocab=vocab)


# ----------------------------------------------------------------------
# source chain and probability-vector construction
# ----------------------------------------------------------------------


def _build_chain(rng: random.Random, vocab: Vocabulary) -> dict[int, list[tuple[int, float]]]:
    """Sparse bigram source: three successors per context, fixed weights."""
    weights = (0.55, 0.30, 0.15)
    content = list(vocab.content_ids)
    chain = {}
    for ctx in [vocab.bos_id] + content:
        succ = rng.sample(content, 3)
        chain[ctx] = list(zip(succ, weights))
    return chain


def _chain_step(chain, rng: random.Random, prev: int) -> int:
    r = rng.random()
    acc = 0.0
    for tok, w in chain[prev]:
        acc += w
        if r < acc:
            return tok
    return chain[prev][-1][0]


def _sample_sentence(
    chain,
    rng: random.Random,
    bos_id: int,
    min_len: int,
    max_len: int,
    stop_p: float,
    stoppable=None,
) -> list[int]:
    """Walk the chain; stopping is only allowed after tokens in ``stoppable``."""
    out = []
    prev = bos_id
    while True:
        tok = _chain_step(chain, rng, prev)
        out.append(tok)
        prev = tok
        if len(out) >= max_len:
            return out
        if len(out) >= min_len and (stoppable is None or tok in stoppable):
            if rng.random() < stop_p:
                return out


def _vector(vocab_size: int, weights: dict[int, float], rest: float) -> tuple[float, ...]:
    vals = [rest] * vocab_size
    for tid, w in weights.items():
        vals[tid] = w
    total = math.fsum(vals)
    return tuple(v / total for v in vals)


def _default_vector(vocab: Vocabulary) -> tuple[float, ...]:
    """Off-path acoustics: mildly peaked on content, EOT kept implausible."""
    content_weights = (0.17, 0.15, 0.13, 0.11, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03)
    weights = {vocab.bos_id: 0.005, vocab.eot_id: 0.015}
    for tid, w in zip(vocab.content_ids, content_weights):
        weights[tid] = w
    return _vector(vocab.size, weights, 0.0)


def _lm_context(lm: NGramLM, prefix: list[int]) -> tuple[int, ...]:
    padded = (lm.bos_id,) * (lm.order - 1) + tuple(prefix)
    return padded[len(padded) - (lm.order - 1):] if lm.order > 1 else ()


def _content_by_lm(lm: NGramLM, vocab: Vocabulary, context, exclude: int) -> list[int]:
    """Content ids ranked by ascending LM probability in this context."""
    return sorted(
        (t for t in vocab.content_ids if t != exclude),
        key=lambda t: (lm.probability(t, context), t),
    )


# ----------------------------------------------------------------------
# noisy-channel / selection-sweep
# ----------------------------------------------------------------------


def _noisy_scenario(
    sample_id: str,
    truth: list[int],
    lm: NGramLM,
    vocab: Vocabulary,
    rng: random.Random,
    p_easy: float,
    p_hard: float,
) -> AcousticScenario:
    eot, bos = vocab.eot_id, vocab.bos_id
    entries = []
    for t, y in enumerate(truth):
        context = _lm_context(lm, truth[:t])
        roll = rng.random()
        if roll < p_hard:
            # one plausible distractor dominates; the truth is buried
            ranked = _content_by_lm(lm, vocab, context, exclude=y)
            distractor = ranked[-1]
            weights = {distractor: 0.55, y: 0.005, eot: 0.002, bos: 0.001}
            rest = (1.0 - 0.558) / (vocab.size - 4)
        elif roll < p_hard + p_easy:
            # five implausible distractors outrank the truth acoustically
            low5 = _content_by_lm(lm, vocab, context, exclude=y)[:5]
            weights = {y: 0.06, eot: 0.002, bos: 0.001}
            for d in low5:
                weights[d] = 0.13
            rest = (1.0 - 0.06 - 0.65 - 0.003) / (vocab.size - 8)
        else:
            weights = {y: 0.60, eot: 0.002, bos: 0.001}
            rest = (1.0 - 0.603) / (vocab.size - 3)
        entries.append((tuple(truth[:t]), _vector(vocab.size, weights, rest)))
    end_weights = {eot: 0.60, bos: 0.001}
    entries.append(
        (tuple(truth), _vector(vocab.size, end_weights, (1.0 - 0.601) / (vocab.size - 2)))
    )
    return AcousticScenario(
        scenario_id=sample_id,
        vocab_ref="vocab.json",
        entries=tuple(entries),
        default_probs=_default_vector(vocab),
    )


def build_noisy_channel_suite(
    seed: int = 0,
    n_utterances: int = 100,
    heterogeneous: bool = False,
    n_corpus: int = 600,
) -> SyntheticSuite:
    rng = random.Random(seed)
    vocab = make_suite_vocab()
    chain = _build_chain(rng, vocab)
    corpus_tokens = [
        _sample_sentence(chain, rng, vocab.bos_id, min_len=3, max_len=9, stop_p=0.25)
        for _ in range(n_corpus)
    ]
    corpus_lines = tuple(" ".join(vocab.tokens[t] for t in seq) for seq in corpus_tokens)
    lm = _train_lm_from_lines(corpus_lines, vocab, order=2, k=0.1, append_eot=True)

    refs = []
    scenarios = []
    for i in range(n_utterances):
        truth = _sample_sentence(chain, rng, vocab.bos_id, min_len=3, max_len=9, stop_p=0.25)
        if heterogeneous:
            (p_easy, p_hard) = rng.choices(
                [tier for _, tier in NOISE_TIERS], weights=[w for w, _ in NOISE_TIERS]
            )[0]
        else:
            p_easy, p_hard = 0.20, 0.08
        sample_id = f"utt-{i:04d}"
        refs.append((sample_id, " ".join(vocab.tokens[t] for t in truth)))
        scenarios.append(_noisy_scenario(sample_id, truth, lm, vocab, rng, p_easy, p_hard))

    name = "selection-sweep" if heterogeneous else "noisy-channel"
    grid = (
        {
            "name": "lambda0",
            "lambda_gpt": 0.0,
            "eot_gate": True,
            "hallucination_penalty": True,
            "truncation_penalty": True,
            "beam_size": 5,
            "max_tokens": 16,
        },
        {
            "name": "lambda03",
            "lambda_gpt": 0.3,
            "eot_gate": True,
            "hallucination_penalty": True,
            "truncation_penalty": True,
            "beam_size": 5,
            "max_tokens": 16,
        },
    )
    fractions = (0.2, 0.4, 0.6, 0.8, 1.0) if heterogeneous else (0.2, 0.5, 1.0)
    return SyntheticSuite(
        name=name,
        seed=seed,
        vocab=vocab,
        corpus_lines=corpus_lines,
        refs=tuple(refs),
        scenarios=tuple(scenarios),
        lm_order=2,
        lm_k=0.1,
        append_eot=True,
        decode_grid=grid,
        fractions=fractions,
    )


# ----------------------------------------------------------------------
# early-stop
# ----------------------------------------------------------------------


def build_early_stop_suite(
    seed: int = 0, n_utterances: int = 60, n_corpus: int = 400
) -> SyntheticSuite:
    rng = random.Random(seed)
    vocab = make_suite_vocab()
    chain = _build_chain(rng, vocab)
    content = vocab.content_ids
    # sentences may only end after "final-able" words, so a cut placed after
    # a non-final word leaves the LM certain the sentence continues
    final_able = set(rng.sample(content, 5))
    non_final = [t for t in content if t not in final_able]

    corpus_tokens = [
        _sample_sentence(
            chain, rng, vocab.bos_id, min_len=6, max_len=10, stop_p=0.45, stoppable=final_able
        )
        for _ in range(n_corpus)
    ]
    corpus_lines = tuple(" ".join(vocab.tokens[t] for t in seq) for seq in corpus_tokens)
    lm = _train_lm_from_lines(corpus_lines, vocab, order=2, k=0.1, append_eot=True)

    eot, bos = vocab.eot_id, vocab.bos_id
    refs = []
    scenarios = []
    made = 0
    attempts = 0
    while made < n_utterances:
        attempts += 1
        if attempts > 200 * n_utterances:
            raise RuntimeError("early-stop suite generation failed to find valid samples")
        full = _sample_sentence(
            chain, rng, vocab.bos_id, min_len=6, max_len=10, stop_p=0.45, stoppable=final_able
        )
        n = rng.randint(3, 5)
        if len(full) < n + 2:
            continue
        m = min(rng.randint(2, 3), len(full) - n)
        if full[n - 1] not in non_final:
            continue
        boundary_ctx = _lm_context(lm, full[:n])
        cont = full[n]
        if lm.probability(cont, boundary_ctx) < 0.35:
            continue
        if any(
            lm.probability(full[i], _lm_context(lm, full[:i])) < 0.20 for i in range(n)
        ):
            continue

        truth = full[:n]
        sample_id = f"cut-{made:04d}"
        entries = []
        for t in range(n):
            weights = {full[t]: 0.60, eot: 0.002, bos: 0.001}
            entries.append(
                (tuple(full[:t]), _vector(vocab.size, weights, (1.0 - 0.603) / (vocab.size - 3)))
            )
        # reference end: acoustics favor EOT, table still offers the continuation
        weights = {eot: 0.50, cont: 0.25, bos: 0.001}
        entries.append(
            (tuple(truth), _vector(vocab.size, weights, (1.0 - 0.751) / (vocab.size - 3)))
        )
        for j in range(n + 1, n + m):
            weights = {full[j]: 0.45, eot: 0.005, bos: 0.001}
            entries.append(
                (tuple(full[:j]), _vector(vocab.size, weights, (1.0 - 0.456) / (vocab.size - 3)))
            )
        end_weights = {eot: 0.90, bos: 0.001}
        entries.append(
            (
                tuple(full[: n + m]),
                _vector(vocab.size, end_weights, (1.0 - 0.901) / (vocab.size - 2)),
            )
        )
        refs.append((sample_id, " ".join(vocab.tokens[t] for t in truth)))
        scenarios.append(
            AcousticScenario(
                scenario_id=sample_id,
                vocab_ref="vocab.json",
                entries=tuple(entries),
                default_probs=_default_vector(vocab),
            )
        )
        made += 1

    grid = (
        {
            "name": "gate_on",
            "lambda_gpt": 0.3,
            "eot_gate": True,
            "hallucination_penalty": True,
            "truncation_penalty": True,
            "beam_size": 5,
            "max_tokens": 14,
        },
        {
            "name": "gate_off",
            "lambda_gpt": 0.3,
            "eot_gate": False,
            "hallucination_penalty": True,
            "truncation_penalty": True,
            "beam_size": 5,
            "max_tokens": 14,
        },
    )
    return SyntheticSuite(
        name="early-stop",
        seed=seed,
        vocab=vocab,
        corpus_lines=corpus_lines,
        refs=tuple(refs),
        scenarios=tuple(scenarios),
        lm_order=2,
        lm_k=0.1,
        append_eot=True,
        decode_grid=grid,
        fractions=(0.2, 0.5, 1.0),
    )


# ----------------------------------------------------------------------
# hallucination
# ----------------------------------------------------------------------


def build_hallucination_suite(
    seed: int = 0, n_clean: int = 75, n_looped: int = 25, n_corpus: int = 200
) -> SyntheticSuite:
    rng = random.Random(seed)
    vocab = make_suite_vocab()
    chain = _build_chain(rng, vocab)
    corpus_tokens = [
        _sample_sentence(chain, rng, vocab.bos_id, min_len=3, max_len=9, stop_p=0.25)
        for _ in range(n_corpus)
    ]
    corpus_lines = tuple(" ".join(vocab.tokens[t] for t in seq) for seq in corpus_tokens)

    eot, bos = vocab.eot_id, vocab.bos_id
    content = list(vocab.content_ids)
    refs = []
    scenarios = []

    def phrase_step(prefix, tok, peak):
        weights = {tok: peak, eot: 0.002, bos: 0.001}
        return (tuple(prefix), _vector(vocab.size, weights, (1.0 - peak - 0.003) / (vocab.size - 3)))

    def end_step(prefix, peak=0.90):
        weights = {eot: peak, bos: 0.001}
        return (tuple(prefix), _vector(vocab.size, weights, (1.0 - peak - 0.001) / (vocab.size - 2)))

    kinds = ["loop"] * n_looped + ["clean"] * n_clean
    rng.shuffle(kinds)
    for i, kind in enumerate(kinds):
        sample_id = f"hal-{i:04d}"
        if kind == "loop":
            p = rng.randint(2, 4)
            phrase = rng.sample(content, p)
            entries = [phrase_step(phrase[:t], phrase[t], 0.80) for t in range(p)]
            # bifurcation: repeating the phrase is acoustically a bit more
            # likely than stopping, so raw SLP favors the repetition
            weights = {phrase[0]: 0.52, eot: 0.44, bos: 0.001}
            entries.append(
                (tuple(phrase), _vector(vocab.size, weights, (1.0 - 0.961) / (vocab.size - 3)))
            )
            for t in range(1, p):
                entries.append(phrase_step(phrase + phrase[:t], phrase[t], 0.80))
            entries.append(end_step(phrase + phrase, 0.95))
            truth = phrase
        else:
            q = rng.randint(3, 8)
            truth = rng.sample(content, q)
            peak = rng.uniform(0.40, 0.80)
            entries = [phrase_step(truth[:t], truth[t], peak) for t in range(q)]
            entries.append(end_step(truth, 0.90))
        refs.append((sample_id, " ".join(vocab.tokens[t] for t in truth)))
        scenarios.append(
            AcousticScenario(
                scenario_id=sample_id,
                vocab_ref="vocab.json",
                entries=tuple(entries),
                default_probs=_default_vector(vocab),
            )
        )

    grid = (
        {
            "name": "hp_on",
            "lambda_gpt": 0.0,
            "eot_gate": True,
            "hallucination_penalty": True,
            "truncation_penalty": True,
            "beam_size": 5,
            "max_tokens": 12,
        },
        {
            "name": "hp_off",
            "lambda_gpt": 0.0,
            "eot_gate": True,
            "hallucination_penalty": False,
            "truncation_penalty": False,
            "beam_size": 5,
            "max_tokens": 12,
        },
    )
    return SyntheticSuite(
        name="hallucination",
        seed=seed,
        vocab=vocab,
        corpus_lines=corpus_lines,
        refs=tuple(refs),
        scenarios=tuple(scenarios),
        lm_order=2,
        lm_k=0.1,
        append_eot=True,
        decode_grid=grid,
        fractions=(0.2, 0.5, 1.0),
    )


def build_suite(kind: str, seed: int = 0, n_utterances: int | None = None) -> SyntheticSuite:
    if kind == "noisy-channel":
        return build_noisy_channel_suite(seed=seed, n_utterances=n_utterances or 100)
    if kind == "selection-sweep":
        return build_noisy_channel_suite(
            seed=seed, n_utterances=n_utterances or 500, heterogeneous=True
        )
    if kind == "early-stop":
        return build_early_stop_suite(seed=seed, n_utterances=n_utterances or 60)
    if kind == "hallucination":
        suite = build_hallucination_suite(seed=seed)
        if n_utterances is not None:
            raise ValueError("hallucination suite size is fixed by its clean/looped split")
        return suite
    raise ValueError(f"unknown suite kind {kind!r}; expected one of {SUITE_KINDS}")


def write_suite(suite: SyntheticSuite, out_dir: str | Path) -> None:
    out = Path(out_dir)
    (out / "scenarios").mkdir(parents=True, exist_ok=True)
    from .core import save_vocabulary
    from .selection import write_transcripts

    save_vocabulary(suite.vocab, out / "vocab.json")
    (out / "corpus.txt").write_text("\n".join(suite.corpus_lines) + "\n", encoding="utf-8")
    write_transcripts(suite.refs, out / "refs.jsonl")
    for scenario in suite.scenarios:
        save_scenario(scenario, out / "scenarios" / f"{scenario.scenario_id}.json")
    config = {
        "name": suite.name,
        "seed": suite.seed,
        "vocab": "vocab.json",
        "corpus": "corpus.txt",
        "refs": "refs.jsonl",
        "scenarios_dir": "scenarios",
        "lm": {"order": suite.lm_order, "k": suite.lm_k, "append_eot": suite.append_eot},
        "decode_grid": list(suite.decode_grid),
        "fractions": list(suite.fractions),
    }
    (out / "suite.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
