"""Command-line surface: loss simulation, concealment, evaluation, benchmarking.

Exit codes: 0 success, 2 usage error, 3 data error. Data errors print one
machine-parsable line to stderr: ``error: <Kind>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import lossgen, metrics, report
from .audio import AudioError, read_wav, write_wav
from .dsp import DEFAULT_SAMPLE_RATE
from .engine import Stream, benchmark_rtf
from .lossgen import TraceError
from .model import (TINY_CONFIG, FrnConfig, FrnModel, conceal_utterance,
                    random_archive)
from .weights import WeightArchiveError, load_weights, save_weights

DATA_EXIT = 3


def _wav_files(path_arg: str) -> list[Path]:
    path = Path(path_arg)
    if path.is_dir():
        files = sorted(path.glob("*.wav"))
        if not files:
            raise AudioError(f"{path}: directory contains no .wav files")
        return files
    if path.is_file():
        return [path]
    raise AudioError(f"{path}: no such file or directory")


def _parse_chain(text: str) -> lossgen.MarkovChain:
    try:
        stay_n, stay_l = (float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise TraceError(f"--chain expects 'pN,pL', got {text!r}") from exc
    return lossgen.MarkovChain(stay_n, stay_l)


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


# ---- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    if (args.chain is None) == (args.trace is None):
        raise TraceError("exactly one of --chain and --trace is required")
    files = _wav_files(args.in_path)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    master = np.random.default_rng(args.seed)
    chain = _parse_chain(args.chain) if args.chain else None
    base_trace = lossgen.parse_trace_file(args.trace) if args.trace else None
    rows = []
    for wav in files:
        samples, rate, subtype = read_wav(wav, expect_rate=DEFAULT_SAMPLE_RATE)
        if args.packet_size == "random":
            packet_size = lossgen.random_packet_size(master)
        else:
            packet_size = int(args.packet_size)
        if base_trace is not None:
            trace = lossgen.LossTrace(base_trace.packets, packet_size)
        else:
            n_packets = -(-len(samples) // packet_size)
            file_seed = int(master.integers(0, 2**31 - 1))
            trace = lossgen.generate_trace(chain, n_packets, file_seed, packet_size)
        lossy = lossgen.packetize_and_apply(samples, trace)
        write_wav(out_dir / wav.name, lossy, rate, subtype)
        used = trace.packets[: -(-len(samples) // packet_size)]
        lossgen.write_trace_file(lossgen.LossTrace(used, packet_size),
                                 out_dir / f"{wav.stem}.trace.txt")
        rows.append({
            "file": wav.name,
            "packet_size": packet_size,
            "n_packets": int(used.size),
            "loss_rate": float(used.mean()),
        })
    manifest = report.build_manifest(
        "simulate",
        {"chain": args.chain, "trace": args.trace, "packet_size": args.packet_size},
        rows, seed=args.seed)
    report.write_json(manifest, out_dir / "simulate_manifest.json")
    _print_json({"files": len(rows), "mean_loss_rate": manifest["aggregate"]["loss_rate"]})
    return 0


# ---- conceal -----------------------------------------------------------------


def _conceal_streaming(model: FrnModel, samples: np.ndarray, mode: str) -> np.ndarray:
    stream = Stream(model, mode=mode)
    hop = stream.hop_length
    chunks = [stream.push_chunk(samples[i : i + hop])
              for i in range(0, len(samples) - len(samples) % hop, hop)]
    chunks.append(stream.flush())
    # Drop the warmup hop so output aligns with the whole-utterance path.
    return np.concatenate(chunks)[hop:]


def cmd_conceal(args) -> int:
    archive = load_weights(args.weights)
    model = FrnModel(archive)
    mode = "encoder_only" if args.mode == "encoder-only" else "full"
    files = _wav_files(args.in_path)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for wav in files:
        samples, rate, subtype = read_wav(wav, expect_rate=DEFAULT_SAMPLE_RATE)
        if args.streaming:
            out = _conceal_streaming(model, samples, mode)
        else:
            out = conceal_utterance(model, samples, mode=mode)
        write_wav(out_dir / wav.name, out, rate, subtype)
        row = {"file": wav.name, "n_samples": int(out.size)}
        if args.measure:
            n = min(len(samples), len(out))
            row["lsd_vs_input_db"] = metrics.lsd(samples[:n], out[:n])
        rows.append(row)
    manifest = report.build_manifest(
        "conceal", {"mode": mode, "streaming": bool(args.streaming)},
        rows, weights_sha256=report.file_sha256(args.weights))
    report.write_json(manifest, out_dir / "conceal_manifest.json")
    _print_json({"files": len(rows), "mode": mode})
    return 0


# ---- evaluate ----------------------------------------------------------------

_METRIC_FNS = {
    "lsd": ("lsd_db", lambda ref, est: metrics.lsd(ref, est)),
    "mrstft": ("mr_stft", lambda ref, est: metrics.mr_stft_loss(est, ref)),
}


def cmd_evaluate(args) -> int:
    wanted = [tok.strip() for tok in args.metrics.split(",") if tok.strip()]
    unknown = [tok for tok in wanted if tok not in _METRIC_FNS]
    if unknown:
        raise ValueError(f"unknown metrics: {unknown}; available: {sorted(_METRIC_FNS)}")
    ref_files = {p.name: p for p in _wav_files(args.ref)}
    est_files = {p.name: p for p in _wav_files(args.est)}
    missing_est = sorted(set(ref_files) - set(est_files))
    missing_ref = sorted(set(est_files) - set(ref_files))
    if missing_est or missing_ref:
        raise AudioError("unpaired files: "
                         f"missing from --est: {missing_est}; missing from --ref: {missing_ref}")
    rows = []
    for name in sorted(ref_files):
        ref, _, _ = read_wav(ref_files[name], expect_rate=DEFAULT_SAMPLE_RATE)
        est, _, _ = read_wav(est_files[name], expect_rate=DEFAULT_SAMPLE_RATE)
        n = min(len(ref), len(est))
        row: dict = {"file": name}
        for tok in wanted:
            column, fn = _METRIC_FNS[tok]
            row[column] = fn(ref[:n], est[:n])
        rows.append(row)
    manifest = report.build_manifest(
        "evaluate", {"ref": args.ref, "est": args.est, "metrics": wanted}, rows)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_json(manifest, out_dir / "report.json")
    if args.report == "csv":
        report.write_csv(manifest, out_dir / "report.csv")
    if not args.no_figures:
        report.render_metric_figures(manifest, out_dir / "figures")
    _print_json({"files": len(rows), "aggregate": manifest["aggregate"]})
    return 0


# ---- bench / gen-weights / trace-stats ----------------------------------------


def cmd_bench(args) -> int:
    archive = load_weights(args.weights)
    model = FrnModel(archive)
    mode = "encoder_only" if args.mode == "encoder-only" else "full"
    result = benchmark_rtf(model, duration_s=args.seconds, mode=mode)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        report.write_json(result, out_dir / "rtf_report.json")
        report.render_bench_figure(result, out_dir)
    _print_json(result)
    return 0


def cmd_gen_weights(args) -> int:
    config = TINY_CONFIG if args.preset == "tiny" else FrnConfig()
    archive = random_archive(config, seed=args.seed)
    save_weights(archive, args.out)
    _print_json({
        "out": str(args.out),
        "preset": args.preset,
        "n_parameters": archive.n_parameters(),
        "sha256": report.file_sha256(args.out),
    })
    return 0


def cmd_trace_stats(args) -> int:
    path = Path(args.trace)
    files = sorted(path.glob("*.txt")) if path.is_dir() else [path]
    if not files:
        raise TraceError(f"{path}: no trace files found")
    rows = []
    for f in files:
        stats = lossgen.trace_stats(lossgen.parse_trace_file(f))
        rows.append({"file": f.name, **{k: v for k, v in stats.items()
                                        if isinstance(v, (int, float))}})
    manifest = report.build_manifest("trace-stats", {"trace": args.trace}, rows)
    _print_json({"files": len(rows), "aggregate": manifest["aggregate"]})
    return 0


# ---- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frnplc",
        description="Blind packet-loss concealment for 48 kHz speech.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="apply Markov or file-based packet loss to WAVs")
    p.add_argument("--in", dest="in_path", required=True, help="input WAV file or directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--chain", help="stay probabilities 'pN,pL' of the two-state chain")
    p.add_argument("--trace", help="trace file (one 0/1 per line) applied to every input")
    p.add_argument("--packet-size", default=str(lossgen.DEFAULT_PACKET_SIZE),
                   help="samples per packet, or 'random' for the canonical set")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("conceal", help="run the concealment model over WAVs")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--weights", required=True, help="weight archive path")
    p.add_argument("--mode", choices=("full", "encoder-only"), default="full")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--streaming", action="store_true",
                       help="hop-by-hop engine path (default: whole-utterance)")
    group.add_argument("--batch", action="store_true", help="whole-utterance path")
    p.add_argument("--measure", action="store_true",
                   help="report LSD between each input and its concealed output")
    p.set_defaults(func=cmd_conceal)

    p = sub.add_parser("evaluate", help="score estimate WAVs against references")
    p.add_argument("--ref", required=True, help="reference WAV directory")
    p.add_argument("--est", required=True, help="estimate WAV directory")
    p.add_argument("--metrics", default="lsd,mrstft")
    p.add_argument("--report", choices=("json", "csv"), default="json",
                   help="csv additionally writes report.csv (JSON is always written)")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="single-threaded real-time-factor benchmark")
    p.add_argument("--weights", required=True)
    p.add_argument("--seconds", type=float, default=10.0)
    p.add_argument("--mode", choices=("full", "encoder-only"), default="full")
    p.add_argument("--out", help="optional report directory (JSON + figure)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-weights", help="write a random-init weight archive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=("full", "tiny"), default="full",
                   help="'full' is the standard model size; 'tiny' is for fast tests")
    p.set_defaults(func=cmd_gen_weights)

    p = sub.add_parser("trace-stats", help="loss statistics of trace files")
    p.add_argument("--trace", required=True, help="trace file or directory of .txt traces")
    p.set_defaults(func=cmd_trace_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AudioError, TraceError, WeightArchiveError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
