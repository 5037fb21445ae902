"""Command-line entry point: gen, run, sweep, bench, summary and ablate."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from fastlloyd import __version__
from fastlloyd.config.loader import load_config
from fastlloyd.config.models import (
    AlgorithmKind,
    ExecutionMode,
    FastLloydConfig,
    PostProcessing,
    RadiusPolicy,
    Role,
    SynthSpec,
)
from fastlloyd.core.dataset import normalize_dataset, partition_dataset
from fastlloyd.core.exceptions import (
    ConfigurationError,
    InvalidInputError,
    ProtocolError,
    RingOverflowError,
    TransportError,
)
from fastlloyd.core.logging import setup_logging
from fastlloyd.core.rng import SeededRng
from fastlloyd.core.types import Dataset
from fastlloyd.data.io import load_csv, write_csv
from fastlloyd.data.synth import generate_synth
from fastlloyd.eval.ablation import AblationRow, ablate
from fastlloyd.eval.bench import BENCH_GRID, BENCH_ITERATIONS, BenchRow, bench
from fastlloyd.eval.report import RunReport, write_report
from fastlloyd.eval.sweep import (
    SummaryRow,
    SweepRow,
    format_rows,
    read_sweep_csv,
    summarize,
    sweep,
    write_rows,
)
from fastlloyd.msa.central import run_central
from fastlloyd.msa.protocol import participate, run_protocol, serve
from fastlloyd.msa.transport import LoopbackTransport, TcpTransport, parse_endpoint

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROTOCOL = 3
EXIT_IO = 4

_SYNTH_KEYS = {
    "n": "n",
    "k": "k_true",
    "d": "d",
    "sep": "separation",
    "separation": "separation",
    "ratio": "size_ratio",
    "outliers": "outliers",
    "spread": "spread",
    "seed": "seed",
}


def parse_synth(text: str) -> dict[str, Any]:
    """``k=2,d=2,n=10000`` into SynthSpec fields."""
    spec: dict[str, Any] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep or key.strip() not in _SYNTH_KEYS:
            raise ConfigurationError(f"bad --synth entry {item!r}; keys: {sorted(_SYNTH_KEYS)}")
        spec[_SYNTH_KEYS[key.strip()]] = value.strip()
    return spec


def parse_assignment(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError(f"--set expects key=value, got {text!r}")
    return key.strip(), value.strip()


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Flags on top of the config file."""
    out: dict[str, Any] = {"params": {}, "transport": {}, "sweep": {}}
    params, transport, sweep_cfg = out["params"], out["transport"], out["sweep"]

    for flag, key in (
        ("eps", "epsilon"),
        ("delta", "delta"),
        ("k", "k"),
        ("d", "d"),
        ("clients", "clients"),
        ("seed", "seed"),
        ("alpha", "alpha"),
        ("iterations", "t_override"),
        ("width", "w"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            params[key] = value
    if getattr(args, "radius_policy", None):
        params["radius_policy"] = args.radius_policy
    if getattr(args, "post_processing", None):
        params["post_processing"] = args.post_processing

    if getattr(args, "algo", None):
        out["algo"] = args.algo
    if getattr(args, "local", False):
        transport["role"] = Role.LOCAL.value
    elif getattr(args, "role", None):
        transport["role"] = args.role
    for flag in ("listen", "connect"):
        endpoint = getattr(args, flag, None)
        if endpoint:
            transport["host"], transport["port"] = parse_endpoint(endpoint)
    for flag in ("latency_ms", "party_index", "n_total", "noise_seed"):
        value = getattr(args, flag, None)
        if value is not None:
            transport[flag] = value

    if getattr(args, "synth", None):
        out["synth"] = parse_synth(args.synth)
    if getattr(args, "data", None):
        out["dataset_path"] = args.data
    if getattr(args, "output", None):
        out["output"] = args.output
    if getattr(args, "trace", None):
        out["trace_path"] = args.trace

    if getattr(args, "algos", None):
        sweep_cfg["algos"] = args.algos.split(",")
    if getattr(args, "eps_grid", None):
        sweep_cfg["eps_grid"] = [float(e) for e in args.eps_grid.split(",")]
    for flag in ("runs", "workers"):
        value = getattr(args, flag, None)
        if value is not None:
            sweep_cfg[flag] = value
    if getattr(args, "mode", None) in (ExecutionMode.CENTRAL.value, ExecutionMode.LOOPBACK.value):
        sweep_cfg["mode"] = args.mode

    for assignment in getattr(args, "set", None) or ():
        key, value = parse_assignment(assignment)
        node = out
        parts = key.split(".")
        if len(parts) == 1:
            parts = ["params", parts[0]]
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return out


def resolve_config(args: argparse.Namespace) -> FastLloydConfig:
    return load_config(getattr(args, "config", None), _overrides(args))


def load_dataset(config: FastLloydConfig) -> tuple[Dataset, np.ndarray | None]:
    """Normalized dataset from a CSV file or a synthetic spec."""
    bound = config.params.bound
    if config.dataset_path:
        raw, labels = load_csv(config.dataset_path)
        data, _ = normalize_dataset(raw, bound)
        return data, labels
    if config.synth is not None:
        return generate_synth(config.synth, bound)
    raise ConfigurationError("no dataset: pass --data PATH or --synth k=..,d=..,n=..")


def align_params(
    config: FastLloydConfig, data: Dataset, explicit_k: bool, explicit_d: int | None = None
) -> FastLloydConfig:
    """Dimension always follows the data; k follows the generator settings unless given."""
    if explicit_d is not None and explicit_d != data.d:
        raise ConfigurationError(f"--d {explicit_d} does not match the data dimension {data.d}")
    update: dict[str, Any] = {"d": data.d}
    if not explicit_k and config.synth is not None and config.dataset_path is None:
        update["k"] = config.synth.k_true
    params = config.params.model_copy(update=update)
    return config.model_copy(update={"params": params})


def config_echo(config: FastLloydConfig) -> dict[str, Any]:
    """Resolved config for the report header; wiring and output paths go under ``transport``."""
    wiring = {"output", "trace_path", "transport"}
    return {
        "resolved": config.model_dump(mode="json", exclude=wiring),
        "transport": {
            **config.transport.model_dump(mode="json"),
            "output": config.output,
            "trace_path": config.trace_path,
        },
    }


def _emit(text: str, output: str | None) -> None:
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
        logger.info("Wrote %s", path)
    else:
        sys.stdout.write(text + "\n")


def _emit_report(report: RunReport, output: str | None) -> None:
    if output:
        write_report(report, output)
        logger.info("Report written to %s", output)
    else:
        sys.stdout.write(report.to_json() + "\n")


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        spec = SynthSpec(**parse_synth(args.synth or ""))
    except ValidationError as exc:
        raise ConfigurationError(f"invalid --synth: {exc}") from exc
    data, labels = generate_synth(spec, args.bound)
    write_csv(args.output, data, labels if args.labels else None)
    logger.info("Wrote %d points to %s", data.n, args.output)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    role = config.transport.role

    if role == Role.SERVER:
        n_total = config.transport.n_total
        if config.synth is not None or config.dataset_path:
            data, _ = load_dataset(config)
            config = align_params(config, data, args.k is not None, args.d)
            n_total = n_total or data.n
        elif args.k is None or args.d is None:
            # Noise scales with k and d, so neither may fall back to a default.
            raise ConfigurationError("a server sized by --n-total alone needs --k and --d")
        if n_total is None:
            raise ConfigurationError("server needs --n-total or a dataset to size the noise plan")
        stats = serve(
            config.params, config.transport, config.algo, n_total=n_total, noiseless=args.noiseless
        )
        logger.info("Server finished %d rounds", stats.rounds)
        return EXIT_OK

    data, _ = load_dataset(config)
    config = align_params(config, data, args.k is not None, args.d)
    params = config.params
    shards = partition_dataset(data, params.clients, SeededRng(params.seed))
    echo = config_echo(config)

    if role == Role.CLIENT:
        party = config.transport.party_index
        if party >= params.clients:
            raise ConfigurationError(f"party index {party} >= clients {params.clients}")
        result = participate(
            params,
            shards[party],
            config.transport,
            config.algo,
            n_total=data.n,
            noiseless=args.noiseless,
            evaluation=data,
            trace_path=config.trace_path,
            config=echo,
        )
    elif args.mode == "central":
        result = run_central(
            params,
            shards,
            config.algo,
            noise_seed=config.transport.noise_seed,
            noiseless=args.noiseless,
            evaluation=data,
            trace_path=config.trace_path,
            config=echo,
        )
    else:
        if args.mode == "tcp":
            transport = TcpTransport(
                config.transport.host,
                0,
                config.transport.latency_ms,
                config.transport.connect_timeout_s,
            )
        else:
            transport = LoopbackTransport(config.transport.latency_ms)
        result = run_protocol(
            params,
            shards,
            transport,
            config.algo,
            noise_seed=config.transport.noise_seed,
            noiseless=args.noiseless,
            round_timeout_s=config.transport.round_timeout_s,
            evaluation=data,
            trace_path=config.trace_path,
            config=echo,
        )
    _emit_report(result.report, config.output)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    data, _ = load_dataset(config)
    config = align_params(config, data, args.k is not None)
    rows = sweep(
        config.params,
        data,
        config.sweep.algos,
        config.sweep.eps_grid,
        config.sweep.runs,
        mode=config.sweep.mode,
        workers=config.sweep.workers,
    )
    if config.output:
        write_rows(config.output, rows, SweepRow)
        logger.info("Sweep rows written to %s", config.output)
    else:
        _emit(format_rows(rows, SweepRow), None)
    return EXIT_OK


def cmd_summary(args: argparse.Namespace) -> int:
    rows = summarize(read_sweep_csv(args.input))
    if args.output:
        write_rows(args.output, rows, SummaryRow)
    else:
        _emit(format_rows(rows, SummaryRow), None)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    grid = BENCH_GRID if args.grid == "full" else BENCH_GRID[:4]
    rows = bench(
        grid,
        iterations=args.iterations,
        latency_ms=args.latency_ms or 0.0,
        clients=args.clients or 2,
        transport=args.transport,
        algo=args.algo or AlgorithmKind.FAST,
        seed=args.seed or 0,
    )
    _emit(format_rows(rows, BenchRow), args.output)
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    data, _ = load_dataset(config)
    config = align_params(config, data, args.k is not None)
    rows = ablate(config.params, data, config.sweep.runs, workers=config.sweep.workers)
    _emit(format_rows(rows, AblationRow), config.output)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML or key = value config file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
    parser.add_argument("--synth", help="synthetic dataset, e.g. k=2,d=2,n=10000")
    parser.add_argument("--data", help="CSV dataset (optional 'label' column)")
    parser.add_argument("--eps", type=float, help="privacy budget epsilon")
    parser.add_argument("--delta", type=float, help="delta (default 1/(N ln N))")
    parser.add_argument("--k", type=int, help="number of clusters")
    parser.add_argument("--clients", type=int, help="number of clients M")
    parser.add_argument("--seed", type=int, help="shared seed")
    parser.add_argument("--alpha", type=float, help="radius multiplier in (0, 1]")
    parser.add_argument("--radius-policy", choices=[p.value for p in RadiusPolicy])
    parser.add_argument("--post-processing", choices=[p.value for p in PostProcessing])
    parser.add_argument("--iterations", type=int, help="force T (outside [2, 7] heuristic)")
    parser.add_argument("--width", type=int, choices=[32, 64], help="ring word width w")
    parser.add_argument("--output", "-o", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastlloyd", description="Federated differentially private k-means"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-json", action="store_true", default=None, help="JSON log lines")
    sub = parser.add_subparsers(dest="command", required=True)
    algos = [a.value for a in AlgorithmKind]

    gen = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    gen.add_argument("--synth", default="", help="k=..,d=..,n=..,sep=..,ratio=..,outliers=..")
    gen.add_argument("--bound", type=float, default=1.0)
    gen.add_argument("--labels", action="store_true", help="append the ground-truth label column")
    gen.add_argument("--output", "-o", required=True)
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run one algorithm")
    _add_common(run)
    run.add_argument("--algo", choices=algos)
    run.add_argument("--role", choices=[r.value for r in Role])
    run.add_argument("--local", action="store_true", help="server and clients in this process")
    run.add_argument("--mode", choices=["loopback", "tcp", "central"], default="loopback")
    run.add_argument("--listen", metavar="HOST:PORT", help="server endpoint")
    run.add_argument("--connect", metavar="HOST:PORT", help="server to connect to")
    run.add_argument("--latency-ms", type=float, help="fixed delay per send")
    run.add_argument("--party-index", type=int, help="this client's index")
    run.add_argument("--n-total", type=int, help="public dataset size (server role)")
    run.add_argument("--d", type=int, help="dimension; required with --n-total and no dataset")
    run.add_argument("--noise-seed", type=int, help="server-only noise seed")
    run.add_argument("--noiseless", action="store_true", help="force all noise to zero")
    run.add_argument("--trace", help="write the centroid trajectory CSV here")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="repeated runs over algorithms and an epsilon grid")
    _add_common(sw)
    sw.add_argument("--algos", help="comma-separated, e.g. lloyd,su,gauss,fast")
    sw.add_argument("--eps-grid", help="comma-separated epsilons")
    sw.add_argument("--runs", type=int)
    sw.add_argument("--workers", type=int)
    sw.add_argument("--mode", choices=[m.value for m in ExecutionMode])
    sw.set_defaults(func=cmd_sweep)

    summ = sub.add_parser("summary", help="fold sweep rows into mean/CI/AUC rows")
    summ.add_argument("input", help="sweep CSV")
    summ.add_argument("--output", "-o")
    summ.set_defaults(func=cmd_summary)

    be = sub.add_parser("bench", help="per-iteration runtime and bytes on balanced data")
    be.add_argument("--grid", choices=["small", "full"], default="full")
    be.add_argument("--iterations", type=int, default=BENCH_ITERATIONS)
    be.add_argument("--latency-ms", type=float)
    be.add_argument("--clients", type=int)
    be.add_argument("--transport", choices=["loopback", "tcp"], default="loopback")
    be.add_argument("--algo", choices=algos)
    be.add_argument("--seed", type=int)
    be.add_argument("--output", "-o")
    be.set_defaults(func=cmd_bench)

    ab = sub.add_parser("ablate", help="alpha / radius policy / post-processing grid")
    _add_common(ab)
    ab.add_argument("--runs", type=int)
    ab.add_argument("--workers", type=int)
    ab.set_defaults(func=cmd_ablate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, args.log_json)
    try:
        return args.func(args)
    except (ConfigurationError, InvalidInputError) as exc:
        logger.error("Invalid input: %s", exc)
        return EXIT_CONFIG
    except (ProtocolError, RingOverflowError) as exc:
        logger.error("Protocol failure: %s", exc)
        return EXIT_PROTOCOL
    except (TransportError, OSError) as exc:
        logger.error("I/O failure: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
