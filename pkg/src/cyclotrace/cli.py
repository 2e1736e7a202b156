"""Experiment runner: every module behind one `cyclotrace` command.

Subcommands
    channel sample      draw a seeded trace batch (JSONL or CSV)
    distinguish         worst-case pair test on a trace batch (CSV verdict row)
    reconstruct avg     k-mer census pipeline end to end
    reconstruct worst   pairwise tournament over all candidates
    kmer census         dump the recovered census as pattern,count rows
    nt verify           exhaustive root-of-unity certificate scan for one n
    nt counterexample   the (a, b, c) construction plus its checks, as JSON
    lowerbound          exact three-ones distances and the sample bound

Configuration precedence is flags, then a JSON --config file whose keys match
flag names, then defaults. Trace-consuming subcommands read --in (a JSONL
batch) when given, otherwise they generate a seeded batch from --x; the
reconstruct experiments fall back to a seeded random ground truth so a bare
`reconstruct avg --n 16 --q 0.05 --traces 200000` is a self-contained run.

Exit codes: 0 on success (including negative verdicts such as
Indistinguishable or FailsWithWitness, which are answers, not failures),
1 when an algorithm gives up (NoCondorcetWinner, NotRegular, ...), 2 for
usage problems.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass, fields

import numpy as np

from .channel import (
    DEFAULT_SEED,
    ChannelParams,
    CircularString,
    TraceBatch,
    generate_traces,
)
from .cyclotomic import counterexample, counterexample_checks, verify_theorem_nt
from .errors import BadArgs, CyclotraceError, UsageError
from .estimator import DistinguishConfig, distinguish, worst_case_reconstruct
from .kmer import KmerConfig, average_case_reconstruct, recover_census
from .oracle import ThreeOnesFamily, hellinger_three_ones, sample_lower_bound

_FORMATS = ("csv", "json")


@dataclass
class ExperimentConfig:
    """Merged view of one invocation: subcommand plus every knob it may use."""

    command: str
    n: int | None = None
    q: float | None = None
    seed: int | None = None
    traces: int | None = None
    threads: int | None = None
    k: int | None = None
    alpha: float | None = None
    r: float | None = None
    L: int | None = None
    grid: int | None = None
    kk: int | None = None
    eps: float | None = None
    out: str | None = None
    format: str | None = None
    a: str | int | None = None
    b: str | int | None = None
    c: str | int | None = None
    x: str | None = None
    infile: str | None = None

    def __post_init__(self):
        if self.seed is None:
            self.seed = DEFAULT_SEED
        if not 0 <= self.seed < 2**64:
            raise BadArgs(f"--seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.format is not None and self.format not in _FORMATS:
            raise BadArgs(f"--format must be one of {'/'.join(_FORMATS)}, got {self.format!r}")

    def require(self, *names: str):
        vals = []
        for name in names:
            val = getattr(self, "infile" if name == "in" else name)
            if val is None:
                raise UsageError(f"missing required flag --{name}")
            vals.append(val)
        return vals[0] if len(vals) == 1 else vals


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    file_values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise UsageError(f"config file {args.config} must hold a JSON object")
        file_values = {("infile" if key == "in" else key): val for key, val in loaded.items()}
    merged = {}
    names = {f.name for f in fields(ExperimentConfig)}
    for name in names:
        if name == "command":
            continue
        val = getattr(args, name, None)
        if val is None:
            val = file_values.get(name)
        merged[name] = val
    unknown = set(file_values) - names
    if unknown:
        raise UsageError(f"unknown config file keys: {sorted(unknown)}")
    return ExperimentConfig(command=args.command, **merged)


@contextmanager
def _open_out(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _params(cfg: ExperimentConfig) -> ChannelParams:
    return ChannelParams(q=float(cfg.require("q")))


def _random_truth(n: int, seed: int) -> CircularString:
    # spawn-key namespace (2, 0): disjoint from generation blocks (b,) and
    # boost substreams (1, j) at the same seed
    g = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(2, 0))))
    val = int(g.integers(0, 1 << n)) if n < 64 else 0
    return CircularString(n, val)


def _trace_batch(cfg: ExperimentConfig, params: ChannelParams, source: CircularString | None) -> TraceBatch:
    if cfg.infile is not None:
        return TraceBatch.from_jsonl(cfg.infile)
    if source is None:
        raise UsageError("missing required flag --x (or supply --in)")
    count = int(cfg.require("traces"))
    return generate_traces(source, params, count, seed=cfg.seed, threads=cfg.threads)


def _truth_and_batch(cfg: ExperimentConfig, params: ChannelParams, n: int):
    """Ground truth (when known) plus the batch for a reconstruction run."""
    if cfg.x is not None:
        truth = CircularString.of(cfg.x)
        if len(truth) != n:
            raise UsageError(f"--x has length {len(truth)}, but --n is {n}")
    elif cfg.infile is not None:
        truth = None
    else:
        truth = _random_truth(n, cfg.seed)
    return truth, _trace_batch(cfg, params, truth)


def _emit_row(cfg: ExperimentConfig, header: list[str], row: list):
    fmt = cfg.format or "csv"
    with _open_out(cfg.out) as fh:
        if fmt == "csv":
            w = _csv_writer(fh)
            w.writerow(header)
            w.writerow(row)
        else:
            fh.write(json.dumps(dict(zip(header, row)), indent=2) + "\n")


def _run_channel_sample(cfg: ExperimentConfig) -> int:
    params = _params(cfg)
    x = CircularString.of(cfg.require("x"))
    count = int(cfg.require("traces"))
    batch = generate_traces(x, params, count, seed=cfg.seed, threads=cfg.threads)
    fmt = cfg.format or "json"
    with _open_out(cfg.out) as fh:
        if fmt == "json":
            for i, t in enumerate(batch):
                fh.write(json.dumps({"bits": str(t), "idx": i}) + "\n")
        else:
            w = _csv_writer(fh)
            w.writerow(["idx", "bits"])
            for i, t in enumerate(batch):
                w.writerow([i, str(t)])
    return 0


def _run_distinguish(cfg: ExperimentConfig) -> int:
    params = _params(cfg)
    a = CircularString.of(cfg.require("a"))
    b = CircularString.of(cfg.require("b"))
    source = CircularString.of(cfg.x) if cfg.x is not None else a
    batch = _trace_batch(cfg, params, source)
    res = distinguish(a, b, batch, params, DistinguishConfig(L=cfg.L, grid=cfg.grid))
    if res.verdict == "Indistinguishable":
        row = ["", "", "", res.delta, "", "", res.verdict]
    else:
        z = complex(res.z)
        row = [res.t, z.real, z.imag, res.delta, res.estimate.real, res.estimate.imag, res.verdict]
    _emit_row(cfg, ["t", "z_re", "z_im", "delta", "estimate_re", "estimate_im", "verdict"], row)
    return 0


def _report_reconstruction(cfg, n, params, truth, batch, recovered, k=None) -> int:
    header = ["n", "q", "seed", "traces", "truth", "recovered", "match"]
    row = [
        n,
        params.q,
        cfg.seed,
        len(batch),
        "" if truth is None else str(truth.canonical()),
        str(recovered),
        "" if truth is None else str(truth.canonical()) == str(recovered),
    ]
    if k is not None:
        header.insert(2, "k")
        row.insert(2, k)
    _emit_row(cfg, header, row)
    return 0


def _run_reconstruct_avg(cfg: ExperimentConfig) -> int:
    params = _params(cfg)
    n = int(cfg.require("n"))
    truth, batch = _truth_and_batch(cfg, params, n)
    kconf = KmerConfig(k=cfg.k, alpha=cfg.alpha, r=cfg.r, grid_size=cfg.grid)
    recovered = average_case_reconstruct(batch, n, params, kconf, seed=cfg.seed, threads=cfg.threads)
    k = kconf.resolve(params, n).k
    return _report_reconstruction(cfg, n, params, truth, batch, recovered, k=k)


def _run_reconstruct_worst(cfg: ExperimentConfig) -> int:
    params = _params(cfg)
    n = int(cfg.require("n"))
    truth, batch = _truth_and_batch(cfg, params, n)
    recovered = worst_case_reconstruct(n, batch, params, DistinguishConfig(L=cfg.L, grid=cfg.grid))
    return _report_reconstruction(cfg, n, params, truth, batch, recovered)


def _run_kmer_census(cfg: ExperimentConfig) -> int:
    params = _params(cfg)
    n = int(cfg.require("n"))
    _, batch = _truth_and_batch(cfg, params, n)
    kconf = KmerConfig(k=cfg.k, alpha=cfg.alpha, r=cfg.r, grid_size=cfg.grid)
    census = recover_census(batch, n, params, kconf, seed=cfg.seed, threads=cfg.threads)
    pairs = sorted((str(p), census.counts[p]) for p in census.counts)
    fmt = cfg.format or "csv"
    with _open_out(cfg.out) as fh:
        if fmt == "csv":
            w = _csv_writer(fh)
            w.writerow(["pattern", "count"])
            w.writerows(pairs)
        else:
            fh.write(json.dumps(dict(pairs), indent=2) + "\n")
    return 0


def _run_nt_verify(cfg: ExperimentConfig) -> int:
    n = int(cfg.require("n"))
    result = verify_theorem_nt(n, threads=cfg.threads)
    with _open_out(cfg.out) as fh:
        if result.holds:
            fh.write("Holds\n")
        else:
            wa, wb = result.witness
            fh.write(f"FailsWithWitness {wa} {wb}\n")
    return 0


def _run_nt_counterexample(cfg: ExperimentConfig) -> int:
    a, b, c = (int(v) for v in cfg.require("a", "b", "c"))
    x, y = counterexample(a, b, c)
    payload = {
        "a": a,
        "b": b,
        "c": c,
        "n": a * b * c,
        "x": str(x),
        "y": str(y),
        "checks": counterexample_checks(a, b, c, x, y),
    }
    with _open_out(cfg.out) as fh:
        fh.write(json.dumps(payload, indent=2) + "\n")
    return 0


def _run_lowerbound(cfg: ExperimentConfig) -> int:
    n = int(cfg.require("n"))
    kk = int(cfg.require("kk"))
    params = _params(cfg)
    eps = float(cfg.require("eps"))
    dist = hellinger_three_ones(ThreeOnesFamily(n=n, kk=kk, q=params.q))
    bound = sample_lower_bound(dist.dsq_hellinger, eps)
    _emit_row(
        cfg,
        ["n", "kk", "q", "dsq_paper", "dsq_hellinger", "sample_bound"],
        [n, kk, params.q, dist.dsq_paper, dist.dsq_hellinger, bound],
    )
    return 0


_RUNNERS = {
    "channel sample": _run_channel_sample,
    "distinguish": _run_distinguish,
    "reconstruct avg": _run_reconstruct_avg,
    "reconstruct worst": _run_reconstruct_worst,
    "kmer census": _run_kmer_census,
    "nt verify": _run_nt_verify,
    "nt counterexample": _run_nt_counterexample,
    "lowerbound": _run_lowerbound,
}


def run(config: ExperimentConfig) -> int:
    """Dispatch a validated configuration to its subcommand runner."""
    try:
        runner = _RUNNERS[config.command]
    except KeyError:
        raise UsageError(f"unknown subcommand {config.command!r}") from None
    return runner(config)


def _add(parser: argparse.ArgumentParser, *specs):
    parser.add_argument("--config", metavar="FILE", help="JSON file with keys matching flag names")
    for flag, typ, help_text in specs:
        dest = "infile" if flag == "in" else flag
        parser.add_argument(f"--{flag}", dest=dest, type=typ, default=None, help=help_text)


_COMMON_OUT = (("out", str, "output path (default: stdout)"), ("format", str, "csv or json"))
_SEEDED = (("seed", int, "64-bit RNG seed"), ("threads", int, "worker threads (or CYCLOTRACE_THREADS)"))
_SOURCE = (("x", str, "ground-truth circular string to sample from"), ("traces", int, "batch size"), ("in", str, "JSONL trace batch to read instead of sampling"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclotrace",
        description="circular deletion-channel reconstruction laboratory",
    )
    sub = parser.add_subparsers(dest="group", metavar="command")

    channel = sub.add_parser("channel", help="trace generation").add_subparsers(dest="action", metavar="action")
    p = channel.add_parser("sample", help="draw a seeded trace batch")
    p.set_defaults(command="channel sample")
    _add(p, ("q", float, "deletion probability"), *_SOURCE[:2], *_SEEDED, *_COMMON_OUT)

    p = sub.add_parser("distinguish", help="worst-case pair test")
    p.set_defaults(command="distinguish")
    _add(
        p,
        ("a", str, "first candidate"),
        ("b", str, "second candidate"),
        ("q", float, "deletion probability"),
        *_SOURCE,
        ("L", int, "arc parameter: grid covers |arg z| <= 1/L"),
        ("grid", int, "arc grid points per t"),
        *_SEEDED,
        *_COMMON_OUT,
    )

    rec = sub.add_parser("reconstruct", help="full reconstruction experiments").add_subparsers(
        dest="action", metavar="mode"
    )
    p = rec.add_parser("avg", help="k-mer census pipeline")
    p.set_defaults(command="reconstruct avg")
    _add(
        p,
        ("n", int, "source length"),
        ("q", float, "deletion probability"),
        ("k", int, "window length (default: smallest with 2^(k-1) >= 2n)"),
        ("alpha", float, "truncation multiplier for the fitted degree"),
        ("r", float, "boost ceiling, in [q, 1)"),
        ("grid", int, "boosted-rate grid size"),
        *_SOURCE,
        *_SEEDED,
        *_COMMON_OUT,
    )
    p = rec.add_parser("worst", help="pairwise tournament")
    p.set_defaults(command="reconstruct worst")
    _add(
        p,
        ("n", int, "source length (full tournament needs n <= 8)"),
        ("q", float, "deletion probability"),
        ("L", int, "arc parameter"),
        ("grid", int, "arc grid points per t"),
        *_SOURCE,
        *_SEEDED,
        *_COMMON_OUT,
    )

    kmer = sub.add_parser("kmer", help="census tools").add_subparsers(dest="action", metavar="action")
    p = kmer.add_parser("census", help="recover and dump the k-mer census")
    p.set_defaults(command="kmer census")
    _add(
        p,
        ("n", int, "source length"),
        ("q", float, "deletion probability"),
        ("k", int, "window length"),
        ("alpha", float, "truncation multiplier"),
        ("r", float, "boost ceiling, in [q, 1)"),
        ("grid", int, "boosted-rate grid size"),
        *_SOURCE,
        *_SEEDED,
        *_COMMON_OUT,
    )

    nt = sub.add_parser("nt", help="root-of-unity certificates").add_subparsers(dest="action", metavar="action")
    p = nt.add_parser("verify", help="scan all pairs of one length")
    p.set_defaults(command="nt verify")
    _add(p, ("n", int, "string length to scan"), ("threads", int, "worker threads"), ("out", str, "output path"))
    p = nt.add_parser("counterexample", help="the (a, b, c) construction")
    p.set_defaults(command="nt counterexample")
    _add(p, ("a", int, "first factor"), ("b", int, "second factor"), ("c", int, "third factor"), ("out", str, "output path"))

    p = sub.add_parser("lowerbound", help="three-ones distances and sample bound")
    p.set_defaults(command="lowerbound")
    _add(
        p,
        ("n", int, "zero-run base length"),
        ("kk", int, "run-length offset, 2..4"),
        ("q", float, "deletion probability"),
        ("eps", float, "allowed failure probability"),
        *_COMMON_OUT,
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "command"):
        parser.print_usage(sys.stderr)
        print("error: missing subcommand", file=sys.stderr)
        return 2
    try:
        return run(_merge_config(args))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CyclotraceError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
