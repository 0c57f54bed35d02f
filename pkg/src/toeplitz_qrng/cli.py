"""Command line: ``toeplitz-qrng {plan,simulate,extract,analyze,bench}``.

Exit codes: 0 success, 1 usage, 2 configuration, 3 data format,
4 infeasible (not enough entropy for the requested security).
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import planner, source_sim, stats
from .bits import samples_to_bits
from .errors import ConfigurationError, ToeplitzQrngError, UsageError
from .gf2_toeplitz import ExtractorDims
from .orchestrator import (
    MANIFEST_SUFFIX,
    ChannelConfig,
    RunConfig,
    derive_seed,
    load_config,
    meter,
    read_extracted,
    run_extraction,
)

log = logging.getLogger("toeplitz_qrng")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def _write_kv(path, mapping):
    text = "".join(f"{k}: {v}\n" for k, v in mapping.items())
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def cmd_plan(args):
    security = planner.SecurityParameter(args.eps_log2)
    if args.raw:
        estimates = []
        for path in args.raw:
            stream = source_sim.read_raw_file(path, args.bits)
            estimates.append(planner.empirical_min_entropy(stream.samples, args.bits))
    elif args.hmin:
        estimates = [planner.EntropyEstimate.given(h, args.bits) for h in args.hmin]
    else:
        raise UsageError("plan needs --hmin or --raw")

    plans = [planner.plan_dims(e, args.n, args.k, security, args.clock_hz) for e in estimates]
    rate = planner.throughput([p.dims for p in plans], args.clock_hz)
    report = {"channels": len(plans)}
    print(f"security: eps = 2^{args.eps_log2} ({security.cost_bits} bits)")
    for i, (est, plan) in enumerate(zip(estimates, plans)):
        print(
            f"channel {i}: H_min {est.h_min_per_sample:.4f} bits/sample ({est.method}) "
            f"-> {plan.dims.m}x{plan.dims.n}, k={plan.dims.k}, ratio {plan.extraction_ratio:.4f}, "
            f"{plan.per_channel_output_bps / 1e9:.4f} Gbps at {args.clock_hz / 1e6:g} MHz"
            + ("" if plan.feasible else f"  [not real-time: {plan.reason}]")
        )
        report[f"channel.{i}.h_min"] = f"{est.h_min_per_sample:.6f}"
        report[f"channel.{i}.method"] = est.method
        for key, value in plan.report().items():
            report[f"channel.{i}.{key}"] = value
    print(f"aggregate: {rate.aggregate_output_bps / 1e9:.4f} Gbps extracted "
          f"from {rate.aggregate_raw_bps / 1e9:.4f} Gbps raw")
    report["aggregate_output_bps"] = f"{rate.aggregate_output_bps:.6g}"
    report["aggregate_raw_bps"] = f"{rate.aggregate_raw_bps:.6g}"
    if args.report:
        _write_kv(args.report, report)
    else:
        print()
        print(_write_kv(None, report), end="")
    return 0


def cmd_simulate(args):
    model = source_sim.default_model(args.prng_seed, args.snr_db, args.lag1_correlation)
    if args.channels > len(model.channels):
        raise UsageError(f"the default model has {len(model.channels)} channels")
    os.makedirs(args.out_dir, exist_ok=True)
    for ch in range(args.channels):
        gen = source_sim.ChannelGenerator(model, ch)
        path = os.path.join(args.out_dir, f"ch{ch}.raw")
        meta = gen.metadata()
        meta["snr_db"] = f"{source_sim.snr_db(model, ch):.3f}"
        meta["sigma_total"] = f"{gen.params.sigma_total:.4f}"
        meta["lag1_correlation"] = gen.params.lag1_correlation
        source_sim.write_raw_file(path, gen.read(args.samples), gen.params.adc_bits, meta)
        print(f"{path}: {args.samples} samples, {gen.params.label}, "
              f"SNR {meta['snr_db']} dB")
    return 0


def _quick_config(args):
    if not args.input:
        raise UsageError("extract needs --config or --input")
    ms = args.m or [519, 548, 581][: len(args.input)]
    if len(ms) != len(args.input):
        raise UsageError("give one --m per --input")
    channels = []
    for i, (path, m) in enumerate(zip(args.input, ms)):
        dims = ExtractorDims(m, args.n, args.k)
        if not os.path.exists(path):
            raise ConfigurationError(f"input {path} does not exist")
        seed = derive_seed(args.master_seed, i, dims)
        channels.append(ChannelConfig(dims, seed, f"ch{i}", input_path=path, sample_bits=args.k,
                                      seed_origin=f"master_seed:{args.master_seed}:channel={i}"))
    return RunConfig(channels, output=args.output, master_seed=args.master_seed)


def cmd_extract(args):
    config = load_config(args.config) if args.config else _quick_config(args)
    if args.output:
        config.output = args.output
    if not config.output:
        raise UsageError("no output path (use --output or [run] output)")
    result = run_extraction(config, workers=args.workers)
    for i, mt in enumerate(result.metrics):
        print(f"channel {i} ({mt.label}): {mt.samples_in} samples -> {mt.blocks} blocks "
              f"of {mt.dims.m} bits" + (f", {mt.samples_discarded} discarded" if mt.samples_discarded else ""))
    print(f"wrote {result.total_bits} bits to {config.output} (+{MANIFEST_SUFFIX})")
    report = meter(result.metrics, result.wall_seconds, args.clock_hz)
    print(f"measured {report.aggregate_raw_bps / 1e6:.1f} Mbps raw in, "
          f"{report.aggregate_out_bps / 1e6:.1f} Mbps out; "
          f"modeled at {args.clock_hz / 1e6:g} MHz: {report.modeled_out_bps / 1e9:.4f} Gbps out")
    if args.metrics:
        _write_kv(args.metrics, report.to_dict())
    return 0


def _load_stream(path, kind, bits):
    """Return ``(bitstream, decimal words)`` for a raw or extracted file."""
    if kind == "auto":
        kind = "extracted" if os.path.exists(path + MANIFEST_SUFFIX) else "raw"
    if kind == "raw":
        samples = source_sim.read_raw_file(path, bits).samples
        return samples_to_bits(samples, bits), samples.astype(np.int64)
    stream, _ = read_extracted(path)
    usable = stream.size - stream.size % bits
    return stream, stats.decimalize(stream[:usable], bits).astype(np.int64)


def cmd_analyze(args):
    stream, words = _load_stream(args.input, args.kind, args.bits)
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, os.path.basename(args.input))
    report = {"input": os.path.basename(args.input), "bits": stream.size, "words": words.size}
    did = False

    if args.acf is not None:
        series = stats.acf(words, args.acf)
        path = stem + ".acf.txt"
        with open(path, "w") as fh:
            fh.write(series.to_text())
        off = np.abs(series.off_peak())
        report.update({"acf.rho0": series.at(0), "acf.max_abs_off_peak": f"{off.max():.6g}",
                       "acf.mean_abs_off_peak": f"{off.mean():.6g}", "acf.file": path})
        print(f"ACF: rho(0)={series.at(0):.6f}, max |rho(tau!=0)| = {off.max():.3e} -> {path}")
        did = True

    if args.ccf:
        _, other = _load_stream(args.ccf, args.kind, args.bits)
        n = min(words.size, other.size)
        series = stats.ccf(words[:n], other[:n], args.ccf_lags)
        path = stem + ".ccf.txt"
        with open(path, "w") as fh:
            fh.write(series.to_text())
        peak = np.abs(series.values).max()
        report.update({"ccf.max_abs": f"{peak:.6g}", "ccf.file": path})
        print(f"CCF vs {args.ccf}: max |rho| = {peak:.3e} -> {path}")
        did = True

    if args.tests:
        reports = stats.run_tests(stream, args.sequence_length, alpha=args.alpha)
        for name, rep in reports.items():
            print(rep.summary())
            lo, hi = rep.confidence_interval
            report[f"test.{name}.pass_proportion"] = f"{rep.pass_proportion:.6f}"
            report[f"test.{name}.interval"] = f"{lo:.6f},{hi:.6f}"
            report[f"test.{name}.sequences"] = rep.count
        did = True

    if args.batches:
        per = stream.size // args.batches
        if per < 1:
            raise UsageError("stream too short for that many batches")
        batches = [stream[i * per : (i + 1) * per] for i in range(args.batches)]
        timeline = stats.batch_monitor(batches, sequence_length=args.sequence_length,
                                       alpha=args.alpha, word_bits=args.bits)
        path = stem + ".monitor.txt"
        with open(path, "w") as fh:
            fh.write(timeline.to_text())
        level = stats.kld_noise_level(timeline.kld_report.bin_count, per // args.bits)
        report.update({
            "monitor.batches": len(timeline),
            "monitor.bins": timeline.kld_report.bin_count,
            "monitor.kld_min": f"{timeline.kld_values[1:].min():.6g}",
            "monitor.kld_max": f"{timeline.kld_values[1:].max():.6g}",
            "monitor.kld_noise_level": f"{level:.6g}",
            "monitor.min_pass_rate": f"{timeline.min_pass_rates.min():.6f}",
            "monitor.file": path,
        })
        print(f"batch monitor: {len(timeline)} batches, KLD {report['monitor.kld_min']}.."
              f"{report['monitor.kld_max']} bits (noise level {level:.3g}) -> {path}")
        did = True

    if args.export_sts:
        stats.export_bitstream(stream, args.export_sts, "binary")
        print(f"exported {stream.size} bits (MSB-first) to {args.export_sts}")
        did = True

    if not did:
        raise UsageError("nothing to do: pass --acf, --ccf, --tests, --batches or --export-sts")
    _write_kv(args.report or stem + ".report.txt", report)
    return 0


def cmd_bench(args):
    from . import bench

    print(bench.TABLE_HEADER)
    singles = []
    for dims in bench.REFERENCE_DIMS:
        res = bench.bench_kernel(dims, args.samples, args.repeats)
        singles.append(res)
        print(res.row())
    multi = bench.bench_channels(bench.REFERENCE_DIMS, args.samples, repeats=args.repeats)
    print(multi.row())
    ratio = multi.raw_bps / singles[0].raw_bps
    rate = planner.throughput(list(bench.REFERENCE_DIMS), args.clock_hz)
    print(f"parallel / single raw throughput: {ratio:.2f}x on "
          f"{len(os.sched_getaffinity(0)) if hasattr(os, 'sched_getaffinity') else os.cpu_count()} CPU(s)")
    print(f"modeled hardware rate at {args.clock_hz / 1e6:g} MHz: "
          f"{rate.aggregate_output_bps / 1e9:.4f} Gbps extracted")
    return 0


def build_parser():
    p = _Parser(prog="toeplitz-qrng", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("plan", help="choose extractor dimensions")
    sp.add_argument("--hmin", type=float, nargs="+", help="min-entropy per sample, per channel")
    sp.add_argument("--raw", nargs="+", help="raw sample files to estimate min-entropy from")
    sp.add_argument("--bits", type=int, default=16, help="sample width")
    sp.add_argument("--n", type=int, default=768)
    sp.add_argument("--k", type=int, default=16)
    sp.add_argument("--eps-log2", type=int, default=-50)
    sp.add_argument("--clock-hz", type=float, default=240e6)
    sp.add_argument("--report", help="write key: value report here")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("simulate", help="write simulated raw sample files")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--channels", type=int, default=3)
    sp.add_argument("--prng-seed", type=int, default=0)
    sp.add_argument("--snr-db", type=float, default=source_sim.DEFAULT_SNR_DB)
    sp.add_argument("--lag1-correlation", type=float, default=source_sim.DEFAULT_LAG1_CORRELATION)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("extract", help="run multi-channel extraction")
    sp.add_argument("--config", help="INI run configuration")
    sp.add_argument("--input", nargs="+", help="raw sample files, one per channel")
    sp.add_argument("--m", type=int, nargs="+", help="output bits per block, per channel")
    sp.add_argument("--n", type=int, default=768)
    sp.add_argument("--k", type=int, default=16)
    sp.add_argument("--master-seed", type=int, default=0)
    sp.add_argument("--output", help="packed output bitstream")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--clock-hz", type=float, default=240e6)
    sp.add_argument("--metrics", help="write throughput key: value report here")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("analyze", help="statistics on raw or extracted streams")
    sp.add_argument("input")
    sp.add_argument("--kind", choices=("auto", "raw", "extracted"), default="auto")
    sp.add_argument("--bits", type=int, default=16, help="word width for decimalization")
    sp.add_argument("--acf", type=int, metavar="MAX_LAG")
    sp.add_argument("--ccf", metavar="OTHER_FILE")
    sp.add_argument("--ccf-lags", type=int, default=100)
    sp.add_argument("--tests", action="store_true", help="native randomness tests")
    sp.add_argument("--sequence-length", type=int, default=100_000)
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--batches", type=int, help="split into batches and monitor KLD/pass rate")
    sp.add_argument("--export-sts", metavar="FILE", help="write MSB-first bits for the reference suite")
    sp.add_argument("--out-dir")
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("bench", help="kernel and parallel throughput")
    sp.add_argument("--samples", type=int, default=48 * 200_000)
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--clock-hz", type=float, default=240e6)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ToeplitzQrngError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigurationError.exit_code


if __name__ == "__main__":
    sys.exit(main())
