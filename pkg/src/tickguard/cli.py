"""Command-line front end.

Thin client over the service handlers: each subcommand builds the
corresponding request model, runs the handler in-process and renders the
response.  Exit codes: 0 success, 1 a verified property failed, 2 bad
usage, unreadable files or invalid configuration.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from .controller import (
    DEFAULT_CLIMATE_TABLE,
    DEFAULT_CONFIG,
    MUTATIONS,
    Criticals,
    ThresholdConfig,
    Thresholds,
    validate_config,
)
from .schemas import (
    ConfigModel,
    CriticalsModel,
    FsmRequest,
    SimulateRequest,
    StatusRequest,
    ThresholdsModel,
    VerifyRequest,
)
from .service import handle_fsm, handle_simulate, handle_status, handle_verify

_CONFIG_SECTIONS = (
    "manufacturer",
    "climate.rain",
    "climate.mist",
    "climate.normal",
    "driver",
    "criticals",
)
_THRESHOLD_KEYS = {"distance_m", "speed_kmh"}


def load_config(path: str | None) -> ThresholdConfig:
    """Read the INI threshold configuration; omitted sections keep their
    factory defaults.  Validates the result."""
    if path is None:
        return DEFAULT_CONFIG
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as handle:
        parser.read_file(handle)

    unknown = set(parser.sections()) - set(_CONFIG_SECTIONS)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    for section in parser.sections():
        stray = set(parser.options(section)) - _THRESHOLD_KEYS
        if stray:
            raise ValueError(
                f"unknown keys in [{section}]: {sorted(stray)}"
            )

    def row(section: str, fallback: Thresholds) -> Thresholds:
        if not parser.has_section(section):
            return fallback
        return Thresholds(
            parser.getint(section, "distance_m"),
            parser.getint(section, "speed_kmh"),
        )

    config = ThresholdConfig(
        manufacturer=row("manufacturer", DEFAULT_CONFIG.manufacturer),
        climate_table={
            climate: row(f"climate.{climate.value}", table_row)
            for climate, table_row in DEFAULT_CLIMATE_TABLE.items()
        },
        driver=row("driver", None) if parser.has_section("driver") else None,
        criticals=Criticals(
            *(
                (
                    parser.getint("criticals", "distance_m"),
                    parser.getint("criticals", "speed_kmh"),
                )
                if parser.has_section("criticals")
                else (Criticals().distance_m, Criticals().speed_kmh)
            )
        ),
    )
    validate_config(config)
    return config


def _config_model(path: str | None) -> ConfigModel:
    config = load_config(path)
    return ConfigModel(
        manufacturer=ThresholdsModel.from_domain(config.manufacturer),
        climate_table={
            climate.value: ThresholdsModel.from_domain(t)
            for climate, t in config.climate_table.items()
        },
        driver=None
        if config.driver is None
        else ThresholdsModel.from_domain(config.driver),
        criticals=CriticalsModel(
            distance_m=config.criticals.distance_m,
            speed_kmh=config.criticals.speed_kmh,
        ),
    )


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        scenario_csv = Path(args.scenario).read_text(encoding="utf-8")
    except OSError:
        raise ValueError(f"scenario file not readable: {args.scenario}") from None
    response = handle_simulate(
        SimulateRequest(
            scenario_csv=scenario_csv,
            config=_config_model(args.config),
            format=args.format,
            mutate=args.mutate,
        )
    )
    _write_or_print(response.report, args.out)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    response = handle_verify(
        VerifyRequest(config=_config_model(args.config), mutate=args.mutate)
    )
    lines = []
    for prop in response.properties:
        verdict = "PASS" if prop.holds else "FAIL"
        lines.append(f"{prop.property_id} {verdict} [{prop.module}] {prop.description}")
        lines.append(f"    constraint: {prop.constraint}")
        if prop.statuses:
            for name, status in sorted(prop.statuses.items()):
                lines.append(f"    {name}: {status.upper()}")
        if prop.counterexample is not None:
            lines.append("    counterexample:")
            for i, tick in enumerate(prop.counterexample):
                ins = ",".join(tick.inputs) or "-"
                outs = ",".join(tick.outputs) or "-"
                lines.append(f"      tick {i}: inputs {ins} -> outputs {outs}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0 if response.all_hold else 1


def cmd_fsm(args: argparse.Namespace) -> int:
    response = handle_fsm(
        FsmRequest(
            module=args.module,
            minimize=args.minimize,
            config=_config_model(args.config),
            mutate=args.mutate,
        )
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for artifact in response.artifacts:
        dot_path = out_dir / f"{artifact.module}.dot"
        listing_path = out_dir / f"{artifact.module}.listing"
        dot_path.write_text(artifact.dot, encoding="utf-8")
        listing_path.write_text(artifact.listing, encoding="utf-8")
        print(f"{artifact.module}: {artifact.states} states -> {dot_path}, {listing_path}")
        for fresh, comparison in artifact.comparisons.items():
            print(f"    {fresh} stands for {comparison}")
    return 0


def cmd_status(args: argparse.Namespace) -> int:
    assignments = {}
    for raw in args.assignments:
        name, sep, mode = raw.partition("=")
        if not sep or mode not in ("present", "absent", "free") or not name:
            raise ValueError(
                f"bad constraint assignment {raw!r}; use SIGNAL=present|absent|free"
            )
        assignments[name] = mode
    response = handle_status(
        StatusRequest(
            module=args.module,
            assignments=assignments,
            config=_config_model(args.config),
            mutate=args.mutate,
        )
    )
    lines = []
    for table in response.tables:
        lines.append(f"module {table.module} ({table.constraint})")
        for output, status in table.statuses.items():
            lines.append(f"{output}\t{status.upper()}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tickguard",
        description="Safety controller simulation, FSM export and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="INI threshold configuration file")
        p.add_argument(
            "--mutate",
            choices=MUTATIONS,
            help="apply a named controller mutation (test hook)",
        )
        p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("simulate", help="replay a scenario CSV")
    p.add_argument("scenario", help="scenario CSV file")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check the four stock safety properties")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fsm", help="export module automata as DOT and listing")
    p.add_argument(
        "module",
        choices=("road_data", "driver_alarm", "host_vehicle", "cruise_control", "full"),
    )
    p.add_argument("--minimize", action="store_true")
    p.add_argument("--config", help="INI threshold configuration file")
    p.add_argument(
        "--mutate", choices=MUTATIONS, help="apply a named controller mutation"
    )
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.set_defaults(func=cmd_fsm)

    p = sub.add_parser("status", help="emission statuses under a constraint")
    p.add_argument(
        "module",
        choices=("road_data", "driver_alarm", "host_vehicle", "cruise_control", "full"),
    )
    p.add_argument(
        "assignments",
        nargs="*",
        metavar="SIGNAL=MODE",
        help="constraint assignment, MODE in present|absent|free",
    )
    common(p)
    p.set_defaults(func=cmd_status)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
