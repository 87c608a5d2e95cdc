"""Scenario replay: CSV ingestion, sensor gating and per-tick reports.

A scenario is a list of instants with an optional radar target, climate,
and the vehicle's run/stop/sample flags.  Each instant is gated through
the sensor envelope, fed to the built controller system, and the
emissions are recorded together with the thresholds that were in force.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

from .controller import (
    DEFAULT_CONFIG,
    Climate,
    SensorReading,
    ThreatLevel,
    ThresholdConfig,
    Thresholds,
    build_system,
    effective_thresholds,
    system_inputs,
    threat_from_alert,
    validate_config,
)
from .kernel import ExecState, run_tick

# Sensor envelope: 9 degree field of view, 3 m blind range, half-metre
# range resolution, +/- 160 km/h relative speed.
FOV_HALF_DEG = 4.5
MIN_RANGE_M = 3.0
RANGE_STEP_M = 0.5
MAX_REL_SPEED_KMH = 160

SCENARIO_HEADER = (
    "tick",
    "distance",
    "speed",
    "azimuth",
    "climate",
    "running",
    "stop",
    "sample",
    "driver_distance",
    "driver_speed",
)


class ScenarioError(ValueError):
    """Parse failure; carries the 1-based source line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MalformedRow(ScenarioError):
    pass


class NonMonotonicTick(ScenarioError):
    pass


class StopWhileRunning(ScenarioError):
    pass


@dataclass(frozen=True, slots=True)
class ScenarioTick:
    """One scripted instant.  target is the raw, ungated radar sample."""

    tick: int
    target: SensorReading | None = None
    climate: Climate = Climate.UNKNOWN
    running: bool = True
    stop: bool = False
    sample: bool = True
    driver_distance: int | None = None
    driver_speed: int | None = None

    def __post_init__(self):
        if self.stop and self.running:
            raise ValueError("a stop tick cannot also be running")


@dataclass(frozen=True, slots=True)
class TickReport:
    tick: int
    reading: SensorReading | None
    thresholds: Thresholds
    threat: ThreatLevel
    alert_value: int | None
    emitted: frozenset[str]
    mode: str  # "normal" | "cruise"


def sensor_gate(target: SensorReading | None) -> SensorReading | None:
    """Apply the sensor envelope to a raw target.

    Targets outside the field of view are dropped entirely; distance is
    clamped to the blind range and quantized to half metres rounding
    half up; relative speed saturates at the rated maximum.
    """
    if target is None:
        return None
    if abs(target.azimuth_deg) > FOV_HALF_DEG:
        return None
    distance = max(float(target.distance_m), MIN_RANGE_M)
    distance = math.floor(distance / RANGE_STEP_M + 0.5) * RANGE_STEP_M
    speed = int(target.relative_speed_kmh)
    speed = max(-MAX_REL_SPEED_KMH, min(MAX_REL_SPEED_KMH, speed))
    return SensorReading(distance, speed, target.azimuth_deg)


# ---------------------------------------------------------------------------
# CSV ingestion


def _int_cell(value: str, line: int, column: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise MalformedRow(line, f"bad integer in column {column!r}: {value!r}") from None


def _float_cell(value: str, line: int, column: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise MalformedRow(line, f"bad number in column {column!r}: {value!r}") from None


def _bool_cell(value: str, line: int, column: str) -> bool:
    if value == "0":
        return False
    if value == "1":
        return True
    raise MalformedRow(line, f"column {column!r} must be 0 or 1, got {value!r}")


def parse_scenario(text: str) -> list[ScenarioTick]:
    """Parse the scenario CSV format.

    Empty input is an empty scenario.  Otherwise the exact header line is
    required, tick indices must run 0, 1, 2, ... and a stop tick must not
    claim to be running.  All errors carry the offending line number.
    """
    if not text.strip():
        return []
    rows = list(csv.reader(io.StringIO(text)))
    header = [cell.strip() for cell in rows[0]]
    if header != list(SCENARIO_HEADER):
        raise MalformedRow(1, "header must be " + ",".join(SCENARIO_HEADER))

    ticks: list[ScenarioTick] = []
    for line, raw in enumerate(rows[1:], start=2):
        if not raw or all(not cell.strip() for cell in raw):
            continue
        if len(raw) != len(SCENARIO_HEADER):
            raise MalformedRow(
                line, f"expected {len(SCENARIO_HEADER)} cells, got {len(raw)}"
            )
        cells = dict(zip(SCENARIO_HEADER, (cell.strip() for cell in raw)))

        tick = _int_cell(cells["tick"], line, "tick")
        if tick != len(ticks):
            raise NonMonotonicTick(
                line, f"expected tick {len(ticks)}, got {tick}"
            )

        target_cells = (cells["distance"], cells["speed"], cells["azimuth"])
        if any(target_cells) and not all(target_cells):
            raise MalformedRow(
                line, "distance, speed and azimuth must be given together"
            )
        target = None
        if all(target_cells):
            target = SensorReading(
                _float_cell(cells["distance"], line, "distance"),
                _int_cell(cells["speed"], line, "speed"),
                _float_cell(cells["azimuth"], line, "azimuth"),
            )

        climate_cell = cells["climate"] or "unknown"
        try:
            climate = Climate(climate_cell)
        except ValueError:
            raise MalformedRow(
                line,
                "climate must be one of "
                + ",".join(c.value for c in Climate)
                + f", got {climate_cell!r}",
            ) from None

        running = _bool_cell(cells["running"], line, "running")
        stop = _bool_cell(cells["stop"], line, "stop")
        sample = _bool_cell(cells["sample"], line, "sample")
        if stop and running:
            raise StopWhileRunning(line, "stop=1 requires running=0")

        driver_distance = (
            _int_cell(cells["driver_distance"], line, "driver_distance")
            if cells["driver_distance"]
            else None
        )
        driver_speed = (
            _int_cell(cells["driver_speed"], line, "driver_speed")
            if cells["driver_speed"]
            else None
        )

        ticks.append(
            ScenarioTick(
                tick=tick,
                target=target,
                climate=climate,
                running=running,
                stop=stop,
                sample=sample,
                driver_distance=driver_distance,
                driver_speed=driver_speed,
            )
        )
    return ticks


# ---------------------------------------------------------------------------
# Replay


def run_scenario(
    config: ThresholdConfig = DEFAULT_CONFIG,
    scenario: Sequence[ScenarioTick] = (),
    mutate: str | None = None,
) -> list[TickReport]:
    """Replay a scenario through a freshly built system, one report per
    tick.  Deterministic: same config and scenario, same reports."""
    validate_config(config)
    state = ExecState.initial(build_system(config, mutate))
    reports: list[TickReport] = []
    for item in scenario:
        reading = sensor_gate(item.target)
        inputs = system_inputs(
            distance_m=None if reading is None else reading.distance_m,
            relative_speed_kmh=None
            if reading is None
            else reading.relative_speed_kmh,
            sample=item.sample,
            running=item.running,
            stop=item.stop,
            climate=item.climate,
            driver_distance_m=item.driver_distance,
            driver_speed_kmh=item.driver_speed,
        )
        result = run_tick(state, inputs)
        state = result.state
        emitted = frozenset(result.outputs)
        alert = result.outputs.get("Alert")
        reports.append(
            TickReport(
                tick=item.tick,
                reading=reading,
                thresholds=effective_thresholds(
                    config, item.climate, item.driver_distance, item.driver_speed
                ),
                threat=threat_from_alert(alert),
                alert_value=alert,
                emitted=emitted,
                mode="cruise" if "CruiseControlMode" in emitted else "normal",
            )
        )
    return reports


# ---------------------------------------------------------------------------
# Rendering


TEXT_HEADER = "tick\treading\tthresholds\tthreat\talert\tmode\temitted"


def _reading_cell(reading: SensorReading | None) -> str:
    if reading is None:
        return "-"
    return f"{reading.distance_m:g}m@{reading.relative_speed_kmh}km/h"


def _record(report: TickReport) -> dict:
    reading = report.reading
    return {
        "tick": report.tick,
        "reading": None
        if reading is None
        else {
            "distance_m": reading.distance_m,
            "relative_speed_kmh": reading.relative_speed_kmh,
            "azimuth_deg": reading.azimuth_deg,
        },
        "thresholds": {
            "distance_m": report.thresholds.distance_m,
            "speed_kmh": report.thresholds.speed_kmh,
        },
        "threat": report.threat.value,
        "alert_value": report.alert_value,
        "emitted": sorted(report.emitted),
        "mode": report.mode,
    }


def render_report(reports: Sequence[TickReport], format: str = "text") -> str:
    """Render tick reports as a text table or a machine-readable JSON
    array.  Both forms are deterministic for a given report list."""
    if format == "text":
        lines = [TEXT_HEADER]
        for r in reports:
            lines.append(
                "\t".join(
                    (
                        str(r.tick),
                        _reading_cell(r.reading),
                        f"{r.thresholds.distance_m}m/{r.thresholds.speed_kmh}km/h",
                        r.threat.value,
                        "-" if r.alert_value is None else str(r.alert_value),
                        r.mode,
                        ",".join(sorted(r.emitted)) or "-",
                    )
                )
            )
        return "\n".join(lines) + "\n"
    if format == "machine":
        return json.dumps([_record(r) for r in reports], indent=2) + "\n"
    raise ValueError(f"unknown report format: {format!r}")
