"""Command-line surface for the decoding and data-selection pipeline.

Commands: train-lm, decode, eval-wer, select, ppl, make-suite, run-suite.
Every file-producing run writes a RunManifest (``<output>.run.json``) with
the resolved configuration, inputs, outputs, duration and tool version;
re-running with identical inputs reproduces outputs byte-exactly (the
manifest's timing fields excepted).

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .beam import BeamConfig
from .core import (
    InvalidTokenIdError,
    UnknownTokenError,
    Vocabulary,
    encode,
    load_vocabulary,
)
from .fusion import FusionConfig
from .metrics import aggregate_wer, perplexity, wer
from .scorers import (
    EmptyCorpusError,
    NGramScorer,
    UniformScorer,
    load_lm,
    load_scenario,
    save_lm,
    train_ngram,
)
from .selection import (
    batch_decode,
    read_manifest,
    read_transcripts,
    select_top_fraction,
    write_manifest,
    write_transcripts,
)
from .suites import SUITE_KINDS, beam_config_from_grid, build_suite, write_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; this surface reserves 2 for
    # input/parse failures, so route usage problems through UsageError
    def error(self, message):
        raise UsageError(message)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_run_manifest(anchor: Path, command: str, config: dict, inputs, outputs, started: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.monotonic() - started, 6),
        "created_utc": _utc_now(),
        "version": __version__,
    }
    Path(str(anchor) + ".run.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_json(path: str | Path, what: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise InputError(f"{what} not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot parse {what} {p}: {exc}") from exc


def _read_corpus_lines(path: str | Path) -> list[str]:
    p = Path(path)
    if not p.exists():
        raise InputError(f"corpus file not found: {p}")
    return [line for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]


def _load_vocab(path: str | Path) -> Vocabulary:
    try:
        return load_vocabulary(path)
    except FileNotFoundError:
        raise InputError(f"vocabulary file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot parse vocabulary {path}: {exc}") from exc


def _encode_corpus(lines, vocab: Vocabulary, append_eot: bool) -> list[list[int]]:
    seqs = []
    for i, line in enumerate(lines):
        try:
            ids = encode(line, vocab)
        except UnknownTokenError as exc:
            raise InputError(f"corpus line {i + 1}: {exc}") from exc
        if append_eot:
            ids.append(vocab.eot_id)
        seqs.append(ids)
    return seqs


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def cmd_train_lm(args) -> int:
    started = time.monotonic()
    if args.order < 1:
        raise UsageError("--order must be >= 1")
    if args.k <= 0:
        raise UsageError("--k must be > 0")
    vocab = _load_vocab(args.vocab)
    lines = _read_corpus_lines(args.corpus)
    seqs = _encode_corpus(lines, vocab, args.append_eot)
    try:
        lm = train_ngram(seqs, order=args.order, k=args.k, vocab=vocab)
    except EmptyCorpusError as exc:
        raise InputError(str(exc)) from exc
    save_lm(lm, args.out)
    ppl = perplexity(lm, _encode_corpus(lines, vocab, False), eot_id=vocab.eot_id if args.append_eot else None)
    print(f"trained order-{lm.order} model on {len(seqs)} sequences; training perplexity {ppl:.4f}")
    _write_run_manifest(
        Path(args.out),
        "train-lm",
        {"order": args.order, "k": args.k, "append_eot": args.append_eot},
        [args.corpus, args.vocab],
        [args.out],
        started,
    )
    return EXIT_OK


def _beam_config_from_args(args) -> BeamConfig:
    if args.beam_size < 1:
        raise UsageError("--beam-size must be >= 1")
    if args.max_tokens < 1:
        raise UsageError("--max-tokens must be >= 1")
    if args.lambda_gpt < 0:
        raise UsageError("--lambda-gpt must be >= 0")
    return BeamConfig(
        beam_size=args.beam_size,
        max_tokens=args.max_tokens,
        fusion=FusionConfig(lambda_gpt=args.lambda_gpt, eot_gate_enabled=args.eot_gate),
        hallucination_penalty_enabled=args.hallucination_penalty,
        truncation_penalty_enabled=args.truncation_penalty,
    )


def _config_snapshot(config: BeamConfig) -> dict:
    return {
        "beam_size": config.beam_size,
        "max_tokens": config.max_tokens,
        "lambda_gpt": config.fusion.lambda_gpt,
        "eot_gate": config.fusion.eot_gate_enabled,
        "hallucination_penalty": config.hallucination_penalty_enabled,
        "truncation_penalty": config.truncation_penalty_enabled,
    }


def cmd_decode(args) -> int:
    started = time.monotonic()
    config = _beam_config_from_args(args)
    vocab = _load_vocab(args.vocab)
    if args.lm:
        lm_scorer = NGramScorer(_load_lm_checked(args.lm))
    else:
        lm_scorer = UniformScorer(vocab.size)
    scenarios = []
    for path in args.scenarios:
        try:
            scenarios.append(load_scenario(path))
        except FileNotFoundError:
            raise InputError(f"scenario file not found: {path}") from None
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise InputError(f"cannot parse scenario {path}: {exc}") from exc
    ids = [s.scenario_id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate scenario ids; sample_id must be unique within a manifest")
    records = batch_decode(scenarios, lm_scorer, vocab, config, refs=args.scenarios)
    write_manifest(records, args.out)
    ok = [r for r in records if r.error is None]
    mean_alp = sum(r.alp for r in ok) / len(ok) if ok else float("nan")
    print(
        f"decoded {len(records)} samples: mean ALP {mean_alp:.6f}, "
        f"truncated {sum(r.truncated for r in ok)}, "
        f"cyclic {sum(r.cycle.period > 0 for r in ok)}, failures {len(records) - len(ok)}"
    )
    _write_run_manifest(
        Path(args.out),
        "decode",
        _config_snapshot(config) | {"lm": args.lm or "uniform"},
        [args.vocab] + ([args.lm] if args.lm else []) + list(args.scenarios),
        [args.out],
        started,
    )
    return EXIT_OK


def _load_lm_checked(path):
    try:
        return load_lm(path)
    except FileNotFoundError:
        raise InputError(f"model file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot parse model {path}: {exc}") from exc


def cmd_eval_wer(args) -> int:
    started = time.monotonic()
    try:
        refs = read_transcripts(args.refs)
        hyps = read_transcripts(args.hyps)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    except (json.JSONDecodeError, KeyError) as exc:
        raise InputError(f"cannot parse manifest: {exc}") from exc
    ref_map = dict(refs)
    hyp_map = dict(hyps)
    missing = sorted(set(ref_map) - set(hyp_map))
    extra = sorted(set(hyp_map) - set(ref_map))
    if missing or extra:
        raise InputError(f"sample id mismatch: missing from hypotheses {missing}, unexpected {extra}")
    samples = []
    breakdowns = []
    for sample_id, ref_text in refs:
        b = wer(ref_text, hyp_map[sample_id])
        breakdowns.append(b)
        samples.append({"sample_id": sample_id} | b.to_json_dict())
    corpus = aggregate_wer(breakdowns)
    payload = {"corpus": corpus.to_json_dict(), "samples": samples}
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"corpus WER {corpus.wer:.4f} over {corpus.ref_words} reference words ({len(samples)} samples)")
    _write_run_manifest(Path(args.out), "eval-wer", {}, [args.refs, args.hyps], [args.out], started)
    return EXIT_OK


def cmd_select(args) -> int:
    started = time.monotonic()
    if not 0 < args.fraction <= 1:
        raise UsageError(f"--fraction must be in (0, 1], got {args.fraction}")
    try:
        records = read_manifest(args.manifest)
    except FileNotFoundError:
        raise InputError(f"manifest not found: {args.manifest}") from None
    except (json.JSONDecodeError, KeyError) as exc:
        raise InputError(f"cannot parse manifest {args.manifest}: {exc}") from exc
    usable = [r for r in records if r.error is None and r.alp is not None]
    dropped = len(records) - len(usable)
    if dropped:
        print(f"warning: excluding {dropped} failed records from ranking", file=sys.stderr)
    if not usable:
        raise InputError("no decodable records to select from")
    report = select_top_fraction(usable, args.fraction)
    Path(args.out_report).write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    by_id = {r.sample_id: r for r in usable}
    write_manifest([by_id[i] for i in report.selected_ids], args.out_manifest)
    print(
        f"selected {report.selected_count}/{len(usable)} samples "
        f"(fraction {args.fraction}, ALP threshold {report.alp_threshold:.6f})"
    )
    _write_run_manifest(
        Path(args.out_report),
        "select",
        {"fraction": args.fraction},
        [args.manifest],
        [args.out_report, args.out_manifest],
        started,
    )
    return EXIT_OK


def cmd_ppl(args) -> int:
    started = time.monotonic()
    lm = _load_lm_checked(args.lm)
    vocab = _load_vocab(args.vocab)
    lines = _read_corpus_lines(args.corpus)
    if not lines:
        raise InputError(f"corpus {args.corpus} is empty")
    seqs = _encode_corpus(lines, vocab, False)
    ppl = perplexity(lm, seqs, eot_id=vocab.eot_id if args.append_eot else None)
    print(f"{ppl:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps({"perplexity": ppl}, sort_keys=True) + "\n", encoding="utf-8")
        _write_run_manifest(
            Path(args.out), "ppl", {"append_eot": args.append_eot}, [args.lm, args.corpus], [args.out], started
        )
    return EXIT_OK


def cmd_make_suite(args) -> int:
    started = time.monotonic()
    if args.kind not in SUITE_KINDS:
        raise UsageError(f"--kind must be one of {', '.join(SUITE_KINDS)}")
    suite = build_suite(args.kind, seed=args.seed, n_utterances=args.size)
    out = Path(args.out_dir)
    write_suite(suite, out)
    print(f"wrote suite {suite.name!r} ({len(suite.scenarios)} scenarios, seed {suite.seed}) to {out}")
    _write_run_manifest(
        out / "suite.json",
        "make-suite",
        {"kind": args.kind, "seed": args.seed, "size": args.size},
        [],
        [out],
        started,
    )
    return EXIT_OK


def cmd_run_suite(args) -> int:
    started = time.monotonic()
    suite_dir = Path(args.suite_dir)
    config_path = suite_dir / "suite.json"
    if not config_path.exists():
        raise InputError(f"suite config not found: {config_path}")
    cfg = _load_json(config_path, "suite config")
    try:
        vocab = _load_vocab(suite_dir / cfg["vocab"])
        corpus_lines = _read_corpus_lines(suite_dir / cfg["corpus"])
        refs = read_transcripts(suite_dir / cfg["refs"])
        scenario_dir = suite_dir / cfg["scenarios_dir"]
        lm_cfg = cfg["lm"]
        grid = cfg["decode_grid"]
        fractions = cfg["fractions"]
    except KeyError as exc:
        raise InputError(f"suite config is missing field {exc}") from exc
    scenario_paths = sorted(scenario_dir.glob("*.json"))
    if not scenario_paths:
        raise InputError(f"no scenario files under {scenario_dir}")
    scenarios = [load_scenario(p) for p in scenario_paths]

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seqs = _encode_corpus(corpus_lines, vocab, lm_cfg.get("append_eot", True))
    lm = train_ngram(seqs, order=int(lm_cfg["order"]), k=float(lm_cfg["k"]), vocab=vocab)
    save_lm(lm, out / "lm.json")

    ref_map = dict(refs)
    results = []
    sweeps = {}
    for entry in grid:
        name = entry["name"]
        config = beam_config_from_grid(entry)
        records = batch_decode(scenarios, NGramScorer(lm), vocab, config)
        write_manifest(records, out / f"decode_{name}.jsonl")
        breakdown_by_id = {
            r.sample_id: wer(ref_map[r.sample_id], r.text) for r in records if r.error is None
        }
        corpus = aggregate_wer(breakdown_by_id.values())
        wer_payload = {
            "corpus": corpus.to_json_dict(),
            "samples": [
                {"sample_id": sid} | b.to_json_dict() for sid, b in sorted(breakdown_by_id.items())
            ],
        }
        (out / f"wer_{name}.json").write_text(
            json.dumps(wer_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        results.append({"config": name, "corpus_wer": corpus.wer, "settings": entry})
        rows = []
        usable = [r for r in records if r.error is None]
        for fraction in fractions:
            report = select_top_fraction(usable, fraction)
            mean_wer = (
                sum(breakdown_by_id[i].wer for i in report.selected_ids) / report.selected_count
            )
            rows.append(
                {
                    "fraction": fraction,
                    "selected_count": report.selected_count,
                    "mean_sample_wer": mean_wer,
                    "alp_threshold": report.alp_threshold,
                }
            )
        sweeps[name] = rows
        print(f"{name}: corpus WER {corpus.wer:.4f}")

    comparison = {"suite": cfg["name"], "configs": results, "alp_fraction_sweep": sweeps}
    (out / "comparison.json").write_text(
        json.dumps(comparison, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (out / "comparison.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", "metric", "fraction", "value"])
        for row in results:
            writer.writerow([row["config"], "corpus_wer", "", f"{row['corpus_wer']:.6f}"])
        for name, rows in sweeps.items():
            for row in rows:
                writer.writerow(
                    [name, "selected_mean_wer", row["fraction"], f"{row['mean_sample_wer']:.6f}"]
                )
    _write_run_manifest(
        out / "comparison.json",
        "run-suite",
        {"suite_dir": str(suite_dir)},
        [config_path],
        [out / "comparison.json", out / "comparison.csv"],
        started,
    )
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fusebeam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-lm", help="train an n-gram model from a text corpus")
    p.add_argument("--corpus", required=True, help="UTF-8 text, one sequence per line")
    p.add_argument("--vocab", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--k", type=float, default=0.1, help="add-k smoothing constant")
    p.add_argument("--out", required=True)
    p.add_argument("--append-eot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("decode", help="beam-decode scenarios into a JSONL manifest")
    p.add_argument("scenarios", nargs="+", help="scenario JSON files")
    p.add_argument("--vocab", required=True)
    p.add_argument("--lm", help="n-gram model file; uniform scorer when omitted")
    p.add_argument("--out", required=True)
    p.add_argument("--beam-size", type=int, default=5)
    p.add_argument("--max-tokens", type=int, default=64)
    p.add_argument("--lambda-gpt", type=float, default=0.3, help="language-model weight (0 disables fusion)")
    p.add_argument("--eot-gate", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--hallucination-penalty", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--truncation-penalty", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval-wer", help="score a decoded manifest against references")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--out", required=True, help="JSON with corpus aggregate and per-sample rows")
    p.set_defaults(func=cmd_eval_wer)

    p = sub.add_parser("select", help="keep the top ALP fraction of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--out-manifest", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("ppl", help="print model perplexity on a corpus")
    p.add_argument("--lm", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--append-eot", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", help="optionally write the result as JSON")
    p.set_defaults(func=cmd_ppl)

    p = sub.add_parser("make-suite", help="generate a synthetic scenario suite")
    p.add_argument("--kind", required=True, help=f"one of {', '.join(SUITE_KINDS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, help="number of utterances (kind-specific default)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_make_suite)

    p = sub.add_parser("run-suite", help="train, decode, evaluate and select over a suite")
    p.add_argument("--suite-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_run_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UnknownTokenError, InvalidTokenIdError, EmptyCorpusError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
