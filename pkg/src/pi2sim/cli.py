"""Command-line entry point: ``pi2sim <kind> --config FILE``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, RejectedInputError
from .harness.config import KINDS, parse_config
from .harness.experiments import OUT_ENV, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_GOLDEN = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pi2sim",
        description="pi/2-BPSK DFT-s-OFDM link simulator experiments.",
        epilog=f"The output directory may also be set with ${OUT_ENV}; --out takes precedence.",
    )
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", required=True, type=Path, help="flat key = value experiment file")
    ap.add_argument("--out", type=Path, default=None, help="output directory")
    ap.add_argument("--seed", type=_u64, default=None, help="override the config seed")
    ap.add_argument("--format", choices=("csv", "json"), default=None, dest="fmt")
    ap.add_argument("--workers", type=int, default=None, help="override the worker count")
    return ap


def load(kind: str, path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    has_kind = any(line.split("#", 1)[0].split("=", 1)[0].strip() == "kind" for line in text.splitlines())
    if not has_kind:
        text = f"kind = {kind}\n{text}"
    cfg = parse_config(text, source=str(path), base_dir=path.parent)
    if cfg.kind != kind:
        raise ConfigError(f"{path}: kind: file says '{cfg.kind}' but '{kind}' was requested")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.kind, args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.fmt is not None:
            overrides["fmt"] = args.fmt
        if args.workers is not None:
            overrides["workers"] = args.workers
        if overrides:
            cfg = replace(cfg, **overrides)
        result = run_experiment(cfg, out_dir=args.out)
    except (ConfigError, RejectedInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(result.path)
    if not result.passed:
        bad = [r for r in result.records if r["abs_err"] > 1e-3]
        print(f"golden mismatch: {len(bad)} entries exceed tolerance", file=sys.stderr)
        return EXIT_GOLDEN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
