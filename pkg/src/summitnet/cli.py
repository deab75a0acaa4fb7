"""Command-line entry point.

Exit status is 0 on success, 1 for analysis errors and 2 for input or
configuration errors.  Errors are printed to stderr as
``summitnet: error[<kind>]: <message>`` with kind ``input`` or ``analysis``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import pipeline as pl
from .records import DuplicateExpeditionError, SchemaError, dataset_to_dict
from .synth import InfeasibleConfigError, SynthConfig, generate

EXIT_OK, EXIT_ANALYSIS, EXIT_INPUT = 0, 1, 2

STAGES = ("ingest", "partners", "centrality", "multiplex", "correlate", "communities", "report")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--expeditions", help="expeditions CSV")
    p.add_argument("--members", help="members CSV")
    p.add_argument("--code-map", help="termination code map CSV")
    p.add_argument("--dataset", dest="dataset_cache", help="ingest cache JSON (instead of the CSVs)")
    p.add_argument("-o", "--output-dir")
    p.add_argument("--seed", type=int, help="Louvain seed")
    p.add_argument("--peak", dest="peak_id")
    p.add_argument("--min-size", type=int)
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override any configuration key"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="summitnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"summitnet {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("-o", "--output-dir", default="synth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-veterans", type=int)

    for name in STAGES:
        _common(sub.add_parser(name, help=f"run the {name} stage" if name != "report" else "run every stage"))

    p = sub.add_parser("compare", help="compare a report with the published values")
    p.add_argument("report", help="report.json produced by 'summitnet report'")
    p.add_argument("-o", "--output", help="also write the table as CSV")
    return parser


def _config(args) -> pl.RunConfig:
    cfg = pl.RunConfig.from_mapping(pl.load_config(args.config)) if args.config else pl.RunConfig()
    for key in ("expeditions", "members", "code_map", "dataset_cache", "output_dir", "seed", "peak_id", "min_size"):
        value = getattr(args, key, None)
        if value is not None:
            cfg.set(key, value)
    for item in args.set:
        if "=" not in item:
            raise pl.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        cfg.set(*item.split("=", 1))
    return cfg


def _synth(args) -> int:
    kwargs = {"seed": args.seed}
    if args.n_veterans is not None:
        kwargs["n_veterans"] = args.n_veterans
    out = generate(SynthConfig(**kwargs))
    paths = out.write(args.output_dir)
    cfg = pl.RunConfig(
        expeditions=str(paths["expeditions"]),
        members=str(paths["members"]),
        output_dir=str(Path(args.output_dir) / "report"),
    )
    (Path(args.output_dir) / "run.cfg").write_text(pl.dump_config(cfg), encoding="utf-8")
    print(f"wrote {', '.join(str(p) for p in paths.values())} and run.cfg")
    return EXIT_OK


def _stage(name: str, cfg: pl.RunConfig) -> int:
    out = Path(cfg.output_dir)
    full = pl.ingest(cfg)
    if name == "report":
        report = pl.run(cfg)
        sys.stdout.write(pl.summary_text(report))
        return EXIT_OK
    out.mkdir(parents=True, exist_ok=True)
    if name == "ingest":
        cache = {"schema_version": pl.SCHEMA_VERSION, "dataset": dataset_to_dict(full)}
        (out / "dataset.json").write_text(pl.dumps(cache), encoding="utf-8")
        print(f"{len(full.expeditions)} expeditions, {len(full.climbers)} participations, "
              f"{len(full.diagnostics)} diagnostics -> {out / 'dataset.json'}")
        for d in full.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_OK
    if name == "partners":
        pl.write_partner_artifacts(out, pl.stage_partners(full, cfg))
        return EXIT_OK
    prep = pl.prepare(full, cfg)
    if name == "centrality":
        pl.write_centrality_artifacts(out, *pl.stage_centrality(prep))
        return EXIT_OK
    E = pl.stage_multiplex(prep, cfg)
    if name == "multiplex":
        pl.write_multiplex_artifacts(out, prep, E)
    elif name == "correlate":
        pl.write_correlation_artifacts(out, *pl.stage_correlate(prep, E, cfg))
    elif name == "communities":
        _, partition, profiles = pl.stage_communities(prep, E, cfg)
        pl.write_community_artifacts(out, partition, profiles)
    return EXIT_OK


def _compare(args) -> int:
    path = Path(args.report)
    if not path.is_file():
        raise pl.InputError(f"report not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise pl.InputError(f"{path}: invalid JSON ({exc})") from None
    table = pl.compare_to_paper(data)
    sys.stdout.write(table.render())
    if args.output:
        pl._write_csv(Path(args.output), table.to_rows())
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return _synth(args)
        if args.command == "compare":
            return _compare(args)
        return _stage(args.command, _config(args))
    except (pl.ConfigError, SchemaError, DuplicateExpeditionError, InfeasibleConfigError, FileNotFoundError) as exc:
        print(f"summitnet: error[input]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, ArithmeticError) as exc:
        print(f"summitnet: error[analysis]: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
