"""Single entry point exposing every module as a batch subcommand.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
Machine-readable JSON goes to stdout; logs and warnings to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import PROTOCOL_VERSION, __version__
from .audio_io import read_wav, standardize, write_wav
from .config import load_kv_config
from .corpus import (
    CorpusManifest,
    UtteranceRecord,
    assign_splits,
    compute_stats,
    load_manifest,
    save_manifest,
    save_split,
)
from .denoise import GateParams, denoise
from .errors import (
    BackendError,
    DataError,
    DialectPipeError,
    MissingReference,
    TooShort,
)
from .metrics import cer, evaluate_corpus, sentence_bleu, wer
from .mocks import MockStageServer, load_asr_fixtures, load_mt_dictionary, mock_backends
from .pipeline import PipelineConfig, run
from .segmenter import align
from .textnorm import tokenize

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False, indent=2))


def _gate_from_args(args) -> GateParams:
    return GateParams(
        fft_size=args.fft_size,
        hop=args.fft_size // 4,
        n_std_thresh=args.n_std,
    )


def _cmd_preprocess(args) -> int:
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gate = _gate_from_args(args)
    wavs = sorted(in_dir.glob("*.wav"))
    if not wavs:
        log.warning("no .wav files under %s", in_dir)
    for path in wavs:
        sig = standardize(read_wav(path))
        if not args.no_denoise:
            try:
                sig = denoise(sig, gate)
            except TooShort:
                log.warning("%s shorter than one FFT frame; not denoised", path.name)
        write_wav(sig, out_dir / path.name)
        log.info("preprocessed %s (%.2fs)", path.name, sig.duration_seconds)
    return EXIT_OK


def _cmd_segment(args) -> int:
    manifest = load_manifest(args.manifest)
    audio_out = Path(args.audio_out) if args.audio_out else None
    if audio_out:
        audio_out.mkdir(parents=True, exist_ok=True)
    chunk_records = []
    skipped = 0
    for rec in manifest.records:
        sig = standardize(read_wav(rec.audio_path))
        for chunk in align(rec, window_s=args.window, sig=sig):
            chunk_id = f"{rec.id}:{chunk.segment.index_k}"
            dialect = " ".join(chunk.text.dialect_text)
            standard = " ".join(chunk.text.standard_text)
            if not dialect or not standard:
                # manifests require non-empty texts; an empty chunk means the
                # parent had fewer tokens than segments
                log.warning("chunk %s has an empty text side; skipped", chunk_id)
                skipped += 1
                continue
            if audio_out:
                wav_path = audio_out / f"{rec.id}.{chunk.segment.index_k}.wav"
                write_wav(chunk.segment.audio, wav_path)
                audio_ref = str(wav_path)
            else:
                audio_ref = rec.audio_path
            chunk_records.append(
                UtteranceRecord(
                    id=chunk_id,
                    audio_path=audio_ref,
                    dialect_text=dialect,
                    standard_text=standard,
                    speaker=rec.speaker,
                )
            )
    save_manifest(CorpusManifest(tuple(chunk_records)), args.out)
    log.info(
        "wrote %d chunk records to %s (%d skipped)", len(chunk_records), args.out, skipped
    )
    return EXIT_OK


def _cmd_corpus_stats(args) -> int:
    stats = compute_stats(load_manifest(args.manifest))
    for rec_id in stats.missing_audio:
        log.warning("audio missing or unreadable for record %r", rec_id)
    _emit(
        {
            "unique_characters": stats.unique_characters,
            "unique_words": stats.unique_words,
            "total_duration_seconds": stats.total_duration,
            "record_count": stats.record_count,
            "chunk_count": stats.chunk_count,
            "missing_audio": list(stats.missing_audio),
        }
    )
    return EXIT_OK


def _cmd_corpus_split(args) -> int:
    manifest = load_manifest(args.manifest)
    counts = {"train": args.train, "val": args.val, "test": args.test}
    assigned = assign_splits(manifest, counts, seed=args.seed)
    out = args.out or str(Path(args.manifest).with_suffix("")) + ".split.jsonl"
    save_split(assigned, out)
    sizes = {
        name: sum(1 for v in assigned.split.values() if v == name)
        for name in ("train", "val", "test")
    }
    log.info("split sizes: %s -> %s", sizes, out)
    _emit({"out": str(out), "sizes": sizes, "seed": args.seed})
    return EXIT_OK


def _read_lines(path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _load_eval_pairs(args) -> list[tuple[str, str, str]]:
    """(id, ref, hyp) triples from line files or manifest + hypothesis JSONL."""
    text_field = "dialect_text" if args.task == "asr" else "standard_text"
    if str(args.ref).endswith(".jsonl"):
        refs = load_manifest(args.ref).by_id()
        pairs = []
        missing = []
        for lineno, line in enumerate(_read_lines(args.hyp), start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj["id"] not in refs:
                missing.append(obj["id"])
                continue
            ref_text = getattr(refs[obj["id"]], text_field)
            pairs.append((obj["id"], ref_text, obj.get(text_field, obj.get("text", ""))))
        if missing:
            raise MissingReference(missing)
        return pairs
    ref_lines = [l for l in _read_lines(args.ref)]
    hyp_lines = [l for l in _read_lines(args.hyp)]
    if len(ref_lines) != len(hyp_lines):
        raise DataError(
            f"ref has {len(ref_lines)} lines but hyp has {len(hyp_lines)}"
        )
    return [(str(i + 1), r, h) for i, (r, h) in enumerate(zip(ref_lines, hyp_lines))]


def _print_report_table(report) -> None:
    # human-readable copy on stderr; stdout stays machine-parseable JSON
    rows = [("pairs", f"{report.pair_count}")]
    rows.append(("CER %", f"{report.cer_percent:.2f}"))
    rows.append(("WER %", f"{report.wer_percent:.2f}"))
    if report.bleu_percent is not None:
        rows.append(("BLEU %", f"{report.bleu_percent:.2f}"))
    width = max(len(k) for k, _ in rows)
    for key, value in rows:
        print(f"{key:<{width}}  {value:>10}", file=sys.stderr)


def _cmd_eval(args) -> int:
    triples = _load_eval_pairs(args)
    pairs = [(ref, hyp) for _, ref, hyp in triples]
    report = evaluate_corpus(pairs, task=args.task, grapheme=args.grapheme_cer)
    _print_report_table(report)
    obj = report.to_json_obj()
    if args.per_sentence:
        rows = []
        for pair_id, ref, hyp in triples:
            row = {
                "id": pair_id,
                "cer_percent": cer(ref, hyp, grapheme=args.grapheme_cer),
                "wer_percent": wer(ref, hyp),
            }
            if args.task == "mt":
                row["bleu_percent"] = sentence_bleu(tokenize(ref), tokenize(hyp))
            rows.append(row)
        obj["per_sentence"] = rows
    _emit(obj)
    return EXIT_OK


_RUN_CONFIG_KEYS = {
    "window_s": float,
    "denoise": bool,
    "fft_size": int,
    "hop": int,
    "n_std_thresh": float,
    "prop_decrease": float,
    "smoothing_bins": int,
    "smoothing_frames": int,
    "asr_url": str,
    "mt_url": str,
    "tts_url": str,
    "mock_dir": str,
    "jobs": int,
    "output_dir": str,
    "join_text_before_tts": bool,
    "timeout": float,
    "retries": int,
}


def _build_run_config(args) -> PipelineConfig:
    values: dict[str, object] = {}
    if args.config:
        for key, value in load_kv_config(args.config).items():
            if key not in _RUN_CONFIG_KEYS:
                raise DataError(f"unknown config key {key!r}")
            values[key] = _RUN_CONFIG_KEYS[key](value)
    # flags win over file values
    flag_map = {
        "window_s": args.window,
        "jobs": args.jobs,
        "output_dir": args.out,
        "asr_url": args.asr_url,
        "mt_url": args.mt_url,
        "tts_url": args.tts_url,
        "mock_dir": args.mock_dir,
    }
    for key, value in flag_map.items():
        if value is not None:
            values[key] = value
    if args.no_denoise:
        values["denoise"] = False
    if args.join_text_before_tts:
        values["join_text_before_tts"] = True

    gate = GateParams(
        fft_size=int(values.get("fft_size", 1024)),
        hop=int(values.get("hop", values.get("fft_size", 1024) // 4)),
        n_std_thresh=float(values.get("n_std_thresh", 1.5)),
        prop_decrease=float(values.get("prop_decrease", 1.0)),
        smoothing_bins=int(values.get("smoothing_bins", 4)),
        smoothing_frames=int(values.get("smoothing_frames", 4)),
    )
    urls = {k: values.get(f"{k}_url") for k in ("asr", "mt", "tts")}
    endpoints = None
    if any(urls.values()):
        endpoints = {k: str(v) for k, v in urls.items() if v}
    cfg = PipelineConfig(
        window_s=float(values.get("window_s", 5.0)),
        denoise_enabled=bool(values.get("denoise", True)),
        gate=gate,
        endpoints=endpoints,
        mock_dir=values.get("mock_dir"),
        output_dir=str(values.get("output_dir", "out")),
        join_text_before_tts=bool(values.get("join_text_before_tts", False)),
        timeout=float(values.get("timeout", 60.0)),
        retries=int(values.get("retries", 2)),
    )
    if "jobs" in values:
        cfg.parallelism = int(values["jobs"])
    return cfg


def _cmd_run(args) -> int:
    cfg = _build_run_config(args)
    result = run(args.input, cfg)
    _emit(
        {
            "chunks": result.chunk_count,
            "rows": len(result.rows),
            "failures": len(result.failures),
            "results": str(result.results_path),
            "failures_file": str(result.failures_path),
            "output_audio": {k: str(v) for k, v in sorted(result.output_audio.items())},
        }
    )
    return EXIT_OK


def _cmd_mock_server(args) -> int:
    fixtures = load_asr_fixtures(args.asr_fixtures) if args.asr_fixtures else {}
    dicts = [load_mt_dictionary(args.mt_dict)] if args.mt_dict else []
    server = MockStageServer(
        host=args.host,
        port=args.port,
        backends=mock_backends(fixtures, dicts),
    )
    log.info("serving mocks on %s (ctrl-c to stop)", server.url)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dialectpipe", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"dialectpipe {__version__} (protocol v{PROTOCOL_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="standardize and denoise a directory of WAVs")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--no-denoise", action="store_true")
    p.add_argument("--fft-size", type=int, default=1024)
    p.add_argument("--n-std", type=float, default=1.5)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("segment", help="chunk-level manifest from a recording manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float, default=5.0)
    p.add_argument("--audio-out", help="also write per-chunk WAVs to this directory")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("corpus", help="manifest statistics and split assignment")
    corpus_sub = p.add_subparsers(dest="corpus_command", required=True)
    ps = corpus_sub.add_parser("stats")
    ps.add_argument("--manifest", required=True)
    ps.set_defaults(func=_cmd_corpus_stats)
    ps = corpus_sub.add_parser("split")
    ps.add_argument("--manifest", required=True)
    ps.add_argument("--train", type=int, required=True)
    ps.add_argument("--val", type=int, required=True)
    ps.add_argument("--test", type=int, required=True)
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--out")
    ps.set_defaults(func=_cmd_corpus_split)

    p = sub.add_parser("eval", help="CER/WER/BLEU report for ref/hyp texts")
    p.add_argument("--task", choices=("asr", "mt"), required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--per-sentence", action="store_true")
    p.add_argument("--grapheme-cer", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("run", help="full ASR->MT->TTS pipeline over a file or manifest")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--asr-url")
    p.add_argument("--mt-url")
    p.add_argument("--tts-url")
    p.add_argument("--mock-dir")
    p.add_argument("--jobs", type=int)
    p.add_argument("--window", type=float)
    p.add_argument("--no-denoise", action="store_true")
    p.add_argument("--join-text-before-tts", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("mock-server", help="serve the deterministic mocks over HTTP")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--asr-fixtures")
    p.add_argument("--mt-dict")
    p.set_defaults(func=_cmd_mock_server)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BackendError as exc:
        log.error("%s", exc)
        return EXIT_BACKEND
    except (DataError, DialectPipeError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except json.JSONDecodeError as exc:
        log.error("invalid JSON input: %s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
