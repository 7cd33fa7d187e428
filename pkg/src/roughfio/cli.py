"""Command-line runner: one experiment per invocation.

Usage::

    roughfio [COMMAND] [--config FILE] [--out DIR] [--seed N] [--threads N]

The command may be given on the command line or under ``command`` in the
YAML configuration.  Reports are written to ``DIR/<command>.csv`` and
``DIR/<command>.json``, where ``DIR`` defaults to ``out`` in the
configuration; the JSON summary echoes the fully resolved configuration.
Exit status is 0 when the check passes, 2 when it fails and 1 on any
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .experiments import COMMANDS, ConfigError, Outcome, resolve_config, run_command

__all__ = ["main", "load_config", "write_reports", "EXIT_PASS", "EXIT_FAIL", "EXIT_ERROR"]

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_ERROR = 1

log = logging.getLogger("roughfio")


def _node_line(root, path) -> int | None:
    """1-based line of the YAML node at ``path`` (or its deepest existing parent)."""
    node = root
    line = None if root is None else root.start_mark.line + 1
    for key in path:
        if not isinstance(node, yaml.MappingNode):
            break
        for k, v in node.value:
            if k.value == key:
                node = v
                line = k.start_mark.line + 1
                break
        else:
            break
    return line


def load_config(path: str | Path | None) -> tuple[dict, object]:
    """Read a YAML configuration; returns the mapping and its node tree."""
    if path is None:
        return {}, None
    text = Path(path).read_text(encoding="utf-8")
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError(f"{where}malformed YAML ({getattr(exc, 'problem', exc)})") from exc
    if data is None:
        return {}, root
    if not isinstance(data, dict):
        raise ConfigError("line 1: configuration must be a mapping")
    return data, root


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else str(v)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_reports(outcome: Outcome, cfg: dict, out_dir: str | Path) -> tuple[Path, Path]:
    """Write the CSV rows and the JSON summary of one run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = cfg["command"]
    csv_path = out / f"{name}.csv"
    json_path = out / f"{name}.json"
    rows = [_plain(r) for r in outcome.rows]
    columns: list[str] = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v
                             for k, v in r.items()})
    report = {"command": name, "passed": bool(outcome.passed), "summary": _plain(outcome.summary),
              "config": _plain(cfg)}
    json_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return csv_path, json_path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roughfio", description="Run one rough-phase FIO experiment.")
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="experiment to run")
    parser.add_argument("--config", help="YAML configuration file")
    parser.add_argument("--out", help="report directory (overrides the configuration)")
    parser.add_argument("--seed", type=int, help="64-bit seed overriding the configuration")
    parser.add_argument("--threads", type=int, help="number of compute threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    root = None
    try:
        raw, root = load_config(args.config)
        if args.seed is not None:
            raw = {**raw, "seed": args.seed}
        if args.out is not None:
            raw = {**raw, "out": args.out}
        if args.command is None and raw.get("command") is None:
            raise ConfigError("no command given", ("command",))
        cfg = resolve_config(raw, args.command)
    except ConfigError as exc:
        line = _node_line(root, exc.path) if exc.path and root is not None else None
        where = f"{args.config}:{line}: " if line else ""
        print(f"error: {where}{exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.threads:
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        log.info("running %s", cfg["command"])
        outcome = run_command(cfg)
        csv_path, json_path = write_reports(outcome, cfg, cfg["out"])
    except ConfigError as exc:
        line = _node_line(root, exc.path) if exc.path and root is not None else None
        where = f"{args.config}:{line}: " if line else ""
        print(f"error: {where}{exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # report, never traceback, at the process boundary
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    status = "PASS" if outcome.passed else "FAIL"
    print(f"{cfg['command']}: {status}  ({csv_path}, {json_path})")
    return EXIT_PASS if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
