"""Command line entry points.

``mine`` runs the whole pipeline on three CSV files and writes the same
canonical JSON the service would return. ``generate`` writes synthetic
fixtures with a manifest of what was planted. ``serve`` starts the HTTP
service. ``store-export`` / ``store-import`` back a service database up to
a directory of JSON files and restore it.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import errors
from .ingest import assemble_dataset
from .miner import MiningParams, mine, result_geojson
from .synth import SynthConfig, example1, generate

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE = 2


def _parse_threshold_spec(text: str, flag: str, parser: argparse.ArgumentParser):
    """`0.5`, `rel:0.05`, or `attr=val,...` (a bare term sets the default)."""
    relative = False
    default = 0.0
    per_attribute: dict[str, float] = {}
    if text.startswith("rel:"):
        relative = True
        text = text[len("rel:"):]
        if "=" in text:
            parser.error(f"{flag}: relative mode takes a single fraction")
    for term in text.split(","):
        term = term.strip()
        if not term:
            continue
        try:
            if "=" in term:
                attr, value = term.split("=", 1)
                per_attribute[attr.strip()] = float(value)
            else:
                default = float(term)
        except ValueError:
            parser.error(f"{flag}: cannot parse {term!r}")
    return default, per_attribute, relative


def cmd_mine(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    eps_default, eps_per, eps_relative = _parse_threshold_spec(args.epsilon, "--epsilon", parser)
    err_default, err_per, err_relative = _parse_threshold_spec(
        args.max_error, "--max-error", parser
    )
    if err_relative:
        parser.error("--max-error has no relative mode")
    params = MiningParams(
        eta_meters=args.eta,
        mu=args.mu,
        psi=args.psi,
        epsilon=eps_default,
        epsilon_by_attribute=eps_per,
        epsilon_relative=eps_relative,
        max_error=err_default,
        max_error_by_attribute=err_per,
        distinct_attributes=not args.repeated_attributes,
        direction_mode="unsigned" if args.unsigned else "signed",
        maximal=args.maximal,
    )
    try:
        params.validate()
    except errors.InvalidParams as exc:
        parser.error(str(exc))

    try:
        attribute_bytes = Path(args.attribute).read_bytes()
        location_bytes = Path(args.location).read_bytes()
        data_bytes = Path(args.data).read_bytes()
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR

    name = Path(args.data).stem
    started = time.perf_counter()
    try:
        dataset = assemble_dataset(name, attribute_bytes, location_bytes, [data_bytes])
        result = mine(dataset, params)
    except errors.CapmineError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA_ERROR
    elapsed = time.perf_counter() - started

    body = result.to_json_bytes()
    if args.out:
        Path(args.out).write_bytes(body)
    else:
        sys.stdout.buffer.write(body)
        sys.stdout.buffer.flush()
    if args.geojson:
        doc = result_geojson(result, dataset)
        Path(args.geojson).write_bytes(
            json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
        )
    print(f"{len(result.caps)} caps in {elapsed:.2f}s", file=sys.stderr)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out_dir = Path(args.out)
    try:
        if args.preset == "example1":
            output = example1(seed=args.seed, noise=args.noise)
        else:
            config = SynthConfig(
                sensors=args.sensors,
                attributes=args.attributes,
                timestamps=args.timestamps,
                planted_caps=args.planted_caps,
                noise=args.noise,
                seed=args.seed,
                cap_size=args.cap_size,
                support=args.support,
                name=args.name,
            )
            output = generate(config)
    except ValueError as exc:
        parser.error(str(exc))

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "data.csv").write_bytes(output.files["data"])
    (out_dir / "location.csv").write_bytes(output.files["location"])
    (out_dir / "attribute.csv").write_bytes(output.files["attribute"])
    (out_dir / "manifest.json").write_bytes(output.manifest_bytes())
    print(
        f"wrote {output.dataset.sensor_count} sensors x "
        f"{output.dataset.grid.count} timestamps to {out_dir}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceConfig, serve

    config = ServiceConfig(
        port=args.port,
        data_dir=args.data_dir,
        workers=args.workers,
        async_threshold_sensors=args.async_threshold,
        cors_origin=args.cors_origin or None,
        static_dir=args.static_dir,
    )
    serve(config, host=args.host)
    return EXIT_OK


def cmd_store_export(args: argparse.Namespace) -> int:
    from .service import ServiceConfig
    from .store import Store

    config = ServiceConfig(data_dir=args.data_dir)
    try:
        with Store(config.database_path()) as store:
            store.export_dir(args.out)
    except errors.CapmineError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA_ERROR
    return EXIT_OK


def cmd_store_import(args: argparse.Namespace) -> int:
    from .service import ServiceConfig
    from .store import Store

    config = ServiceConfig(data_dir=args.data_dir)
    try:
        with Store(config.database_path()) as store:
            store.import_dir(args.source)
    except errors.CapmineError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA_ERROR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capmine",
        description="Mine correlated attribute patterns from sensor CSV files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mine = sub.add_parser("mine", help="mine one dataset from CSV files")
    p_mine.add_argument("--data", required=True, help="data.csv path")
    p_mine.add_argument("--location", required=True, help="location.csv path")
    p_mine.add_argument("--attribute", required=True, help="attribute.csv path")
    p_mine.add_argument(
        "--epsilon",
        required=True,
        help="change threshold: a number, attr=val pairs, or rel:FRACTION",
    )
    p_mine.add_argument("--eta", required=True, type=float, help="distance threshold, meters")
    p_mine.add_argument("--mu", required=True, type=int, help="max distinct attributes per cap")
    p_mine.add_argument("--psi", required=True, type=int, help="minimum support")
    p_mine.add_argument(
        "--max-error", default="0", help="smoothing residual bound (number or attr=val pairs)"
    )
    p_mine.add_argument(
        "--unsigned", action="store_true", help="ignore change direction when intersecting"
    )
    p_mine.add_argument(
        "--maximal", action="store_true", help="drop caps contained in a larger cap"
    )
    p_mine.add_argument(
        "--repeated-attributes",
        action="store_true",
        help="allow two members to share an attribute",
    )
    p_mine.add_argument("--out", help="result JSON path (default: stdout)")
    p_mine.add_argument("--geojson", help="also write member positions as GeoJSON")

    p_gen = sub.add_parser("generate", help="write a synthetic CSV triple plus manifest")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--sensors", type=int, default=12)
    p_gen.add_argument("--attributes", type=int, default=3)
    p_gen.add_argument("--timestamps", type=int, default=168)
    p_gen.add_argument("--planted-caps", type=int, default=1)
    p_gen.add_argument("--noise", type=float, default=0.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--cap-size", type=int, default=3)
    p_gen.add_argument("--support", type=int, default=None)
    p_gen.add_argument("--name", default="synthetic")
    p_gen.add_argument(
        "--preset",
        choices=["example1"],
        default=None,
        help="fixed demo fixture; overrides the shape flags",
    )

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data-dir", default=None, help="sqlite directory (default: memory)")
    p_serve.add_argument("--workers", type=int, default=2)
    p_serve.add_argument("--async-threshold", type=int, default=None)
    p_serve.add_argument("--cors-origin", default="*")
    p_serve.add_argument("--static-dir", default=None, help="serve a built UI from this dir")

    p_export = sub.add_parser("store-export", help="dump the store to JSON files")
    p_export.add_argument("--data-dir", required=True)
    p_export.add_argument("--out", required=True)

    p_import = sub.add_parser("store-import", help="load a JSON dump into the store")
    p_import.add_argument("--data-dir", required=True)
    p_import.add_argument("source", help="directory written by store-export")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "mine":
        return cmd_mine(args, parser)
    if args.command == "generate":
        return cmd_generate(args, parser)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "store-export":
        return cmd_store_export(args)
    if args.command == "store-import":
        return cmd_store_import(args)
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
