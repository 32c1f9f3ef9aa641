"""Command line entry point: ``rhhh run | compare | bench``.

Exit codes: 0 success, 1 I/O or malformed trace, 2 configuration error.
The seed comes from ``--seed``, else the ``RHHH_SEED`` environment
variable, else 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from . import __version__
from .bench import measure_throughput, summarize
from .hierarchy import HIERARCHIES, HierarchySpec
from .ingest import Trace, TraceDimensionError, TraceFormatError, TraceSource
from .metrics import CSV_COLUMNS, EvalReport, aggregate, evaluate
from .oracle import count_exact
from .sketch import FullUpdateSketch, HhhCandidate, RhhhSketch
from .stats import ConfidenceParams, psi

RUN_SCHEMA = "rhhh-run/1"
COMPARE_SCHEMA = "rhhh-compare/1"
BENCH_SCHEMA = "rhhh-bench/1"
RUN_COLUMNS = ("prefix", "lower", "upper", "conditioned")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    hierarchy: str = "src-byte"
    algorithm: str = "rhhh"
    epsilon: float = 0.01
    delta: float = 0.05
    theta: float = 0.1
    v_ratio: int = 1
    r: int = 1
    seed: int = 0
    source: TraceSource = field(default_factory=lambda: TraceSource("zipf"))
    output: str = "text"
    confidence_mode: str = "analysis"
    split: Optional[tuple[float, float, float, float]] = None

    def validate(self) -> None:
        if self.hierarchy not in HIERARCHIES:
            raise ConfigError(f"unknown hierarchy {self.hierarchy!r}")
        if self.algorithm not in ("rhhh", "baseline"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if self.v_ratio < 1:
            raise ConfigError("v-ratio must be >= 1")
        if self.r < 1:
            raise ConfigError("r must be >= 1")
        if self.output not in ("json", "csv", "text"):
            raise ConfigError(f"unknown output format {self.output!r}")
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def params(self) -> ConfidenceParams:
        if self.split is not None:
            params = ConfidenceParams.from_split(*self.split)
            if abs(params.epsilon - self.epsilon) > 1e-12 or abs(params.delta - self.delta) > 1e-12:
                raise ValueError("--split does not add up to --epsilon/--delta")
            return params
        return ConfidenceParams.from_eps_delta(self.epsilon, self.delta)

    def spec(self) -> HierarchySpec:
        return HierarchySpec.build(self.hierarchy)

    def build(self, seed: Optional[int] = None):
        spec = self.spec()
        if self.algorithm == "baseline":
            return FullUpdateSketch(spec, self.params())
        return RhhhSketch(spec, self.params(), v=self.v_ratio * spec.h,
                          seed=self.seed if seed is None else seed, r=self.r,
                          confidence_mode=self.confidence_mode)

    def header(self) -> dict:
        spec = self.spec()
        v = self.v_ratio * spec.h if self.algorithm == "rhhh" else 1
        params = self.params()
        sketch = self.build()
        return {
            "version": __version__,
            "hierarchy": self.hierarchy,
            "H": spec.h,
            "algorithm": self.algorithm,
            **params.as_dict(),
            "theta": self.theta,
            "v_ratio": self.v_ratio,
            "V": v,
            "r": self.r,
            "seed": self.seed,
            "capacity": sketch.capacity,
            "confidence_mode": self.confidence_mode if self.algorithm == "rhhh" else "none",
            "psi": psi(params, v) / self.r if self.algorithm == "rhhh" else 0.0,
            "source": self.source.describe(),
        }


def _fmt(value: float) -> str:
    return repr(float(value))


def _flat_header(header: dict) -> list[tuple[str, str]]:
    rows = []
    for key, value in header.items():
        if isinstance(value, dict):
            rows.extend((f"{key}.{k}", str(v)) for k, v in value.items())
        else:
            rows.append((key, str(value)))
    return rows


def render_run(header: dict, n: int, candidates: Sequence[HhhCandidate], fmt: str) -> str:
    if fmt == "json":
        doc = {"schema": RUN_SCHEMA, "config": header, "n": n,
               "hhh": [c.as_dict() for c in candidates]}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(f"# schema={RUN_SCHEMA}\n")
        for key, value in _flat_header(header) + [("n", str(n))]:
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RUN_COLUMNS)
        for c in candidates:
            writer.writerow([str(c.prefix), _fmt(c.lower), _fmt(c.upper), _fmt(c.conditioned)])
        return buf.getvalue()
    for key, value in _flat_header(header) + [("n", str(n))]:
        buf.write(f"{key:>18}: {value}\n")
    guarantee = "active" if n >= header["psi"] else "not yet active (n < psi)"
    buf.write(f"{'guarantees':>18}: {guarantee}\n\n")
    buf.write(f"{'prefix':<40} {'lower':>14} {'upper':>14} {'conditioned':>14}\n")
    for c in candidates:
        buf.write(f"{str(c.prefix):<40} {c.lower:>14.1f} {c.upper:>14.1f} {c.conditioned:>14.1f}\n")
    return buf.getvalue()


def render_compare(header: dict, reports: Sequence[EvalReport], fmt: str) -> str:
    total = aggregate(reports)
    if fmt == "json":
        doc = {"schema": COMPARE_SCHEMA, "config": header,
               "runs": [asdict(r) for r in reports], "aggregate": asdict(total)}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(f"# schema={COMPARE_SCHEMA}\n")
        for key, value in _flat_header(header):
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("run",) + CSV_COLUMNS)
        for i, r in enumerate(reports):
            writer.writerow([i] + [getattr(r, c) for c in CSV_COLUMNS])
        writer.writerow(["mean"] + [getattr(total, c) for c in CSV_COLUMNS])
        return buf.getvalue()
    for key, value in _flat_header(header):
        buf.write(f"{key:>18}: {value}\n")
    buf.write("\n")
    for name in CSV_COLUMNS:
        buf.write(f"{name:>24}: {getattr(total, name)}\n")
    return buf.getvalue()


def _load(config: RunConfig) -> Trace:
    return config.source.load(config.spec().dims)


def cmd_run(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    trace = _load(config)
    if len(trace) == 0:
        raise ConfigError("the trace is empty")
    sketch = config.build()
    sketch.update_packed(trace.packed())
    candidates = sketch.output(config.theta)
    out.write(render_run(config.header(), sketch.n, candidates, config.output))
    return 0


def _one_run(args) -> EvalReport:
    config, packed, counts, seed = args
    sketch = config.build(seed=seed)
    sketch.update_packed(packed)
    return evaluate(sketch.output(config.theta), counts, config.params(), config.theta, sketch.n)


def cmd_compare(config: RunConfig, runs: int = 1, jobs: int = 1, out=None) -> int:
    out = out or sys.stdout
    if runs < 1:
        raise ConfigError("--runs must be >= 1")
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    trace = _load(config)
    if len(trace) == 0:
        raise ConfigError("the trace is empty")
    packed = trace.packed()
    counts = count_exact(packed, config.spec())
    tasks = [(config, packed, counts, config.seed + i) for i in range(runs)]
    if jobs == 1:
        reports = [_one_run(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_one_run, tasks))
    out.write(render_compare(config.header(), reports, config.output))
    return 0


def cmd_bench(config: RunConfig, packets: int, repeats: int = 5, out=None) -> int:
    out = out or sys.stdout
    if packets < 100_000:
        raise ConfigError("bench needs at least 100000 packets")
    source = config.source
    if source.kind != "csv":
        source = TraceSource(kind=source.kind, alpha=source.alpha, universe=source.universe,
                             packets=packets, seed=source.seed)
    trace = source.load(config.spec().dims)
    packed = trace.packed()[:packets]
    rates = measure_throughput(config.build, packed, repeats)
    mean, std = summarize(rates)
    header = config.header()
    if config.output == "json":
        doc = {"schema": BENCH_SCHEMA, "config": header, "packets": int(packed.shape[0]),
               "repeats": repeats, "pps": rates, "mean_pps": mean, "stddev_pps": std}
        out.write(json.dumps(doc, indent=2) + "\n")
    elif config.output == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("algorithm", "hierarchy", "V", "r", "packets", "repeats",
                         "mean_pps", "stddev_pps"))
        writer.writerow((config.algorithm, config.hierarchy, header["V"], config.r,
                         packed.shape[0], repeats, mean, std))
        out.write(buf.getvalue())
    else:
        out.write(f"{config.algorithm} {config.hierarchy} V={header['V']} r={config.r}: "
                  f"{mean:,.0f} ± {std:,.0f} packets/s over {repeats} runs "
                  f"of {packed.shape[0]} packets\n")
    return 0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--hierarchy", choices=HIERARCHIES, default="src-byte")
    common.add_argument("--algorithm", choices=("rhhh", "baseline"), default="rhhh")
    common.add_argument("--epsilon", type=float, default=0.01)
    common.add_argument("--delta", type=float, default=0.05)
    common.add_argument("--split", type=float, nargs=4,
                        metavar=("EPS_A", "EPS_S", "DELTA_A", "DELTA_S"),
                        help="explicit error budget split (must add up to epsilon/delta)")
    common.add_argument("--theta", type=float, default=0.1)
    common.add_argument("--v-ratio", type=int, default=1, help="V as a multiple of H")
    common.add_argument("--r", type=int, default=1, help="update draws per packet")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--confidence", choices=("analysis", "literal", "none"),
                        default="analysis", dest="confidence_mode")
    common.add_argument("--source", default="zipf",
                        help="csv:PATH, zipf or uniform")
    common.add_argument("--alpha", type=float, default=1.0, help="Zipf skew")
    common.add_argument("--universe", type=int, default=10_000, help="distinct keys")
    common.add_argument("--packets", type=int, default=100_000, help="synthetic stream length")
    common.add_argument("--output", choices=("json", "csv", "text"), default="text")

    parser = argparse.ArgumentParser(prog="rhhh", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="print the HHH set of a stream")
    compare = sub.add_parser("compare", parents=[common], help="score against the exact oracle")
    compare.add_argument("--runs", type=int, default=1)
    compare.add_argument("--jobs", type=int, default=1)
    bench = sub.add_parser("bench", parents=[common], help="measure update throughput")
    bench.add_argument("--n", type=int, default=1_000_000, dest="bench_packets")
    bench.add_argument("--repeats", type=int, default=5)
    return parser


def _seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("RHHH_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"RHHH_SEED must be an integer, got {env!r}") from None


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        seed = _seed(args.seed)
        source = TraceSource.parse(args.source, alpha=args.alpha, universe=args.universe,
                                   packets=args.packets, seed=seed)
        config = RunConfig(
            hierarchy=args.hierarchy, algorithm=args.algorithm, epsilon=args.epsilon,
            delta=args.delta, theta=args.theta, v_ratio=args.v_ratio, r=args.r, seed=seed,
            source=source, output=args.output, confidence_mode=args.confidence_mode,
            split=tuple(args.split) if args.split else None,
        )
        config.validate()
        if args.command == "run":
            return cmd_run(config)
        if args.command == "compare":
            return cmd_compare(config, runs=args.runs, jobs=args.jobs)
        if args.repeats < 1:
            raise ConfigError("--repeats must be >= 1")
        return cmd_bench(config, args.bench_packets, args.repeats)
    except TraceDimensionError as exc:
        print(f"rhhh: {exc}", file=sys.stderr)
        return 2
    except (OSError, TraceFormatError) as exc:
        print(f"rhhh: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"rhhh: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
