"""Command-line interface: ``ulcnet <subcommand> ...``.

Exit codes: 0 success, 1 typed processing error, 2 usage error or missing file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import complexity, fileio, report
from .config import ModelConfig
from .dsp import compressed_features, stft
from .errors import UlcnetError
from .metrics import si_sdr
from .model import compressed_mse, enhance_signal, enhance_spectrogram, stage1_forward
from .nn import init_weights
from .stream import StreamState, benchmark, stream_signal


class UsageError(Exception):
    pass


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def _alpha(value: str) -> float:
    alpha = float(value)
    if not 0.0 < alpha <= 1.0:
        raise argparse.ArgumentTypeError("alpha must be in (0, 1]")
    return alpha


def _json_out(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_enhance(args) -> int:
    cfg = ModelConfig(alpha=args.alpha)
    weights = fileio.load_weights(_existing(args.weights), cfg)
    signal = fileio.read_wav(_existing(args.input))
    if args.stream:
        out = stream_signal(StreamState(weights, cfg), signal.samples)
        enhanced = type(signal)(out, signal.sample_rate)
    else:
        enhanced = enhance_signal(signal, weights, cfg)
    fileio.write_wav(args.output, enhanced)
    if args.figure:
        noisy = stft(signal, cfg.stft)
        magnitude, _ = compressed_features(noisy, cfg.alpha)
        report.enhance_figure(
            noisy, enhance_spectrogram(noisy, weights, cfg), stage1_forward(magnitude, weights, cfg), args.figure
        )
    print(f"wrote {args.output} ({len(enhanced)} samples, {enhanced.duration:.3f} s)")
    return 0


def cmd_bench(args) -> int:
    cfg = ModelConfig(alpha=args.alpha)
    weights = fileio.load_weights(_existing(args.weights), cfg)
    result = benchmark(weights, cfg, args.seconds, args.content)
    if args.figure:
        report.bench_figure(result, args.figure)
    times = result.pop("frame_times_ms")
    result.update(
        frame_ms_median=float(np.median(times)),
        frame_ms_p99=float(np.percentile(times, 99)),
        frame_ms_max=float(times.max()),
    )
    if args.json:
        _json_out(result)
    else:
        for key in ("rtf", "audio_seconds", "elapsed_seconds", "frames", "frame_ms_median", "frame_ms_p99"):
            print(f"{key}\t{result[key]}")
    return 0


def cmd_count(args) -> int:
    rep = complexity.report_dict(ModelConfig(alpha=args.alpha))
    if args.figure:
        report.complexity_figure(rep, args.figure)
    if args.json:
        _json_out(rep)
    else:
        print(report.layer_table(rep))
        print(f"conv_block_reduction_ratio\t{rep['conv_block_reduction_ratio']:.3f}")
        share = rep["stage2_share"]
        print(f"stage2_share\t{share['with_biases']:.4%}\t(without biases {share['without_biases']:.4%})")
    return 0


def cmd_metrics(args) -> int:
    est = fileio.read_wav(_existing(args.estimate))
    ref = fileio.read_wav(_existing(args.reference))
    if len(est) != len(ref):
        raise UlcnetError(f"estimate has {len(est)} samples, reference {len(ref)}")
    cfg = ModelConfig(alpha=args.alpha)
    result = {
        "si_sdr_db": si_sdr(est, ref),
        "compressed_mse": compressed_mse(stft(ref, cfg.stft), stft(est, cfg.stft), cfg.alpha),
        "alpha": cfg.alpha,
    }
    if args.json:
        _json_out(result)
    else:
        print(f"si_sdr_db\t{result['si_sdr_db']:.4f}")
        print(f"compressed_mse\t{result['compressed_mse']:.6g}")
    return 0


def cmd_init_weights(args) -> int:
    weights = init_weights(ModelConfig(), args.seed)
    fileio.save_weights(args.out, weights)
    print(f"wrote {args.out} ({len(weights)} tensors, seed {args.seed})")
    return 0


def cmd_inspect(args) -> int:
    weights = fileio.load_weights(_existing(args.weights))
    rows = [
        {"name": name, "shape": list(v.shape), "size": int(v.size),
         "min": float(v.min()) if v.size else 0.0, "max": float(v.max()) if v.size else 0.0}
        for name, v in weights.items()
    ]
    if args.json:
        _json_out({"tensors": rows, "total_params": sum(r["size"] for r in rows)})
    else:
        print("\t".join(["name", "shape", "size", "min", "max"]))
        for r in rows:
            shape = "x".join(map(str, r["shape"]))
            print(f"{r['name']}\t{shape}\t{r['size']}\t{r['min']:.5g}\t{r['max']:.5g}")
        print(f"total\t\t{sum(r['size'] for r in rows)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ulcnet", description="Two-stage low-complexity speech enhancement.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="enhance a 16 kHz mono PCM16 WAV file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--alpha", type=_alpha, default=0.3)
    p.add_argument("--stream", action="store_true", help="use the frame-by-frame engine")
    p.add_argument("--figure", help="write spectrogram/mask figure to this path")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("bench", help="measure the streaming real-time factor")
    p.add_argument("--weights", required=True)
    p.add_argument("--seconds", type=float, default=10.0)
    p.add_argument("--content", choices=("noise", "silence"), default="noise")
    p.add_argument("--alpha", type=_alpha, default=0.3)
    p.add_argument("--json", action="store_true")
    p.add_argument("--figure", help="write a frame-time histogram to this path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("count", help="parameter / MACS accounting")
    p.add_argument("--json", action="store_true")
    p.add_argument("--alpha", type=_alpha, default=0.3)
    p.add_argument("--figure", help="write a per-layer bar chart to this path")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("metrics", help="SI-SDR and compressed MSE of an estimate")
    p.add_argument("--estimate", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--alpha", type=_alpha, default=0.3)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("init-weights", help="write seeded random weights")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_weights)

    p = sub.add_parser("inspect", help="list tensors in a weight file")
    p.add_argument("--weights", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ulcnet: error: {exc}", file=sys.stderr)
        return 2
    except (UlcnetError, ValueError, OSError) as exc:
        print(f"ulcnet: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
