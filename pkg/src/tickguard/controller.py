"""Safety cruise controller.

Threshold resolution, threat classification and alarm dispatch, in two
equivalent forms: plain functions for direct calls and testing, and
synchronous kernel programs wired into one reactive system.

Conventions shared by both forms:

- A target is threatening when its distance or its relative speed falls
  to or below the effective thresholds; within the threatened region it
  is critical when either value falls to or below the critical limits.
- The alert channel carries 1 for a high level threat and 0 for a low
  level one; no emission means no threat.
- Distances cross the kernel boundary as half-metre counts (value =
  metres * 2) so that readings quantised to 0.5 m stay exact integers.
  Speeds are whole km/h and are never scaled.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .kernel import (
    Program,
    Stmt,
    abort,
    assign,
    bor,
    emit,
    eq,
    every_immediate,
    gt,
    if_,
    input_sig,
    le,
    let,
    local_sig,
    loop,
    lt,
    mul,
    output_sig,
    par,
    pause,
    present,
    present_cases,
    ref,
    sand,
    seq,
    sigval,
    weak_abort,
)


class Climate(enum.Enum):
    NORMAL = "normal"
    RAIN = "rain"
    MIST = "mist"
    UNKNOWN = "unknown"


# Wire encoding of the climate input signal.  UNKNOWN is encoded by not
# emitting the signal at all, so it has no code.
CLIMATE_CODE: Mapping[Climate, int] = MappingProxyType(
    {Climate.NORMAL: 0, Climate.RAIN: 1, Climate.MIST: 2}
)


class ThreatLevel(enum.Enum):
    NONE = "none"
    LOW = "low"
    HIGH = "high"


ALERT_HIGH = 1
ALERT_LOW = 0


@dataclass(frozen=True, slots=True)
class Thresholds:
    distance_m: int
    speed_kmh: int


@dataclass(frozen=True, slots=True)
class Criticals:
    distance_m: int = 4
    speed_kmh: int = 10


@dataclass(frozen=True, slots=True)
class SensorReading:
    """One gated radar sample.

    distance_m may carry halves (0.5 m granularity); azimuth never enters
    the threat computation, it only matters for field-of-view gating.
    """

    distance_m: float
    relative_speed_kmh: int
    azimuth_deg: float = 0.0


DEFAULT_CLIMATE_TABLE: Mapping[Climate, Thresholds] = MappingProxyType(
    {
        Climate.RAIN: Thresholds(10, 18),
        Climate.MIST: Thresholds(8, 17),
        Climate.NORMAL: Thresholds(5, 20),
    }
)


@dataclass(frozen=True)
class ThresholdConfig:
    manufacturer: Thresholds = Thresholds(12, 20)
    climate_table: Mapping[Climate, Thresholds] = field(
        default_factory=lambda: DEFAULT_CLIMATE_TABLE
    )
    driver: Thresholds | None = None
    criticals: Criticals = Criticals()


DEFAULT_CONFIG = ThresholdConfig()


class ConfigValidationError(ValueError):
    pass


class UnknownMutation(ValueError):
    pass


# Test-only hooks: named defects that can be injected into the built
# programs so that verification failure paths are demonstrable.
MUTATIONS = ("drop-notify", "drop-cruise", "invert-critical")


def _check_mutation(mutate: str | None) -> None:
    if mutate is not None and mutate not in MUTATIONS:
        raise UnknownMutation(
            f"unknown mutation {mutate!r}; choose one of {', '.join(MUTATIONS)}"
        )


def validate_config(config: ThresholdConfig) -> None:
    """Reject configs that could silence alerts.

    Any threshold pair sitting below the critical limits would create a
    dead band: a reading below the critical values but above the
    thresholds would raise no alert at all.  Such configs are refused
    outright rather than patched.
    """
    crit = config.criticals
    if crit.distance_m <= 0 or crit.speed_kmh <= 0:
        raise ConfigValidationError("critical limits must be positive")

    for climate in (Climate.NORMAL, Climate.RAIN, Climate.MIST):
        if climate not in config.climate_table:
            raise ConfigValidationError(
                f"climate table is missing an entry for {climate.value}"
            )

    named = [("manufacturer", config.manufacturer)]
    named += [
        (f"climate {c.value}", t)
        for c, t in sorted(config.climate_table.items(), key=lambda kv: kv[0].value)
    ]
    if config.driver is not None:
        named.append(("driver", config.driver))
    for label, t in named:
        if t.distance_m <= 0 or t.speed_kmh <= 0:
            raise ConfigValidationError(f"{label} thresholds must be positive")
        if t.distance_m < crit.distance_m or t.speed_kmh < crit.speed_kmh:
            raise ConfigValidationError(
                f"{label} thresholds {t.distance_m} m / {t.speed_kmh} km/h fall "
                f"below the critical limits {crit.distance_m} m / "
                f"{crit.speed_kmh} km/h"
            )


def resolve_thresholds(config: ThresholdConfig, climate: Climate) -> Thresholds:
    """Pick the climate base values, then keep the safest of base/driver."""
    if climate is Climate.UNKNOWN:
        base = config.manufacturer
    else:
        base = config.climate_table[climate]
    if config.driver is None:
        return base
    return Thresholds(
        max(base.distance_m, config.driver.distance_m),
        max(base.speed_kmh, config.driver.speed_kmh),
    )


def effective_thresholds(
    config: ThresholdConfig,
    climate: Climate,
    driver_distance_m: int | None = None,
    driver_speed_kmh: int | None = None,
) -> Thresholds:
    """resolve_thresholds plus per-instant driver input, max-merged."""
    base = resolve_thresholds(config, climate)
    d = base.distance_m
    s = base.speed_kmh
    if driver_distance_m is not None:
        d = max(d, driver_distance_m)
    if driver_speed_kmh is not None:
        s = max(s, driver_speed_kmh)
    return Thresholds(d, s)


def classify_threat(
    reading: SensorReading, thresholds: Thresholds, criticals: Criticals
) -> ThreatLevel:
    """Threat level of one reading.  Azimuth is deliberately ignored."""
    if (
        reading.distance_m > thresholds.distance_m
        and reading.relative_speed_kmh > thresholds.speed_kmh
    ):
        return ThreatLevel.NONE
    if (
        reading.distance_m <= criticals.distance_m
        or reading.relative_speed_kmh <= criticals.speed_kmh
    ):
        return ThreatLevel.HIGH
    return ThreatLevel.LOW


def classify_threat_oracle(
    reading: SensorReading, thresholds: Thresholds, criticals: Criticals
) -> ThreatLevel:
    """Same contract as classify_threat, written as the nested two-gate
    decision.  Kept deliberately independent so the two implementations
    can check each other and the kernel-built system.
    """
    endangered = (
        reading.distance_m <= thresholds.distance_m
        or reading.relative_speed_kmh <= thresholds.speed_kmh
    )
    if not endangered:
        return ThreatLevel.NONE
    critical = (
        reading.distance_m <= criticals.distance_m
        or reading.relative_speed_kmh <= criticals.speed_kmh
    )
    return ThreatLevel.HIGH if critical else ThreatLevel.LOW


def threat_from_alert(alert_value: int | None) -> ThreatLevel:
    if alert_value is None:
        return ThreatLevel.NONE
    return ThreatLevel.HIGH if alert_value == ALERT_HIGH else ThreatLevel.LOW


def half_metres(distance_m: float) -> int:
    """Distance as the integer half-metre count used on kernel signals."""
    return int(round(distance_m * 2))


# ---------------------------------------------------------------------------
# Kernel programs, module by module.


def road_data_program() -> Program:
    """Sensor sampling front end as a standalone pure-signal module.

    Broadcasts the data signals on every sampled instant while the
    vehicle runs; a weak abort stops it for good once STOP_VEHICLE
    arrives (from the second instant onward).
    """
    signals = (
        input_sig("distance"),
        input_sig("speed"),
        input_sig("SAMPLE_FREQ"),
        input_sig("STOP_VEHICLE"),
        input_sig("RUNNING"),
        output_sig("DistanceSignal"),
        output_sig("SpeedSignal"),
    )
    body = weak_abort(
        every_immediate(
            "SAMPLE_FREQ",
            present(
                "RUNNING",
                loop(
                    present(
                        sand("distance", "speed"),
                        par(emit("DistanceSignal"), emit("SpeedSignal")),
                    ),
                    pause(),
                ),
            ),
        ),
        when="STOP_VEHICLE",
    )
    return Program("road_data", signals, body)


def _alarm_decision(mutate: str | None) -> Stmt:
    """The two-gate classification over the broadcast data signals.

    Compares against the critical_* variables of the enclosing scope, so
    the caller chooses the unit scale through their init values.  The
    invert-critical mutation flips the inner gate, swapping high and low
    alerts.
    """
    inner_cmp = gt if mutate == "invert-critical" else le
    return if_(
        # endangered: at or below the predefined values
        bor(
            le(sigval("DistanceSignal"), sigval("PreDefinedDistance")),
            le(sigval("SpeedSignal"), sigval("PreDefinedSpeed")),
        ),
        if_(
            bor(
                inner_cmp(sigval("DistanceSignal"), ref("critical_distance")),
                inner_cmp(sigval("SpeedSignal"), ref("critical_speed")),
            ),
            emit("Alert", ALERT_HIGH),
            emit("Alert", ALERT_LOW),
        ),
    )


def driver_alarm_program(
    criticals: Criticals = Criticals(), mutate: str | None = None
) -> Program:
    """Threat classification as a standalone valued module.

    Classifies on every instant where both data signals arrive; the
    predefined values are read from their latest broadcast.
    """
    _check_mutation(mutate)
    signals = (
        input_sig("DistanceSignal", valued=True),
        input_sig("PreDefinedDistance", valued=True),
        input_sig("SpeedSignal", valued=True),
        input_sig("PreDefinedSpeed", valued=True),
        output_sig("Alert", valued=True),
    )
    body = let(
        "critical_distance",
        criticals.distance_m,
        let(
            "critical_speed",
            criticals.speed_kmh,
            loop(
                present(
                    sand("DistanceSignal", "SpeedSignal"),
                    _alarm_decision(mutate),
                ),
                pause(),
            ),
        ),
    )
    return Program("driver_alarm", signals, body)


def host_vehicle_program(mutate: str | None = None) -> Program:
    """Alert dispatch: low alerts notify, high alerts engage cruise mode.

    The first matching case wins, so a (malformed) instant carrying both
    alerts only notifies.  Re-armed every instant.
    """
    _check_mutation(mutate)
    signals = (
        input_sig("LowAlert"),
        input_sig("CruiseControlAlert"),
        output_sig("LowNotification"),
        output_sig("CruiseControlMode"),
    )
    arms: list[tuple[str, Stmt]] = [("LowAlert", emit("LowNotification"))]
    if mutate != "drop-cruise":
        arms.append(("CruiseControlAlert", emit("CruiseControlMode")))
    body = loop(present_cases(arms), pause())
    return Program("host_vehicle", signals, body)


def cruise_control_program(mutate: str | None = None) -> Program:
    """Actuation: on every sampled cruise-mode instant drive engine,
    brake and the driver notification together."""
    _check_mutation(mutate)
    signals = (
        input_sig("SAMPLE_FREQ"),
        input_sig("CruiseControlMode"),
        output_sig("ControlEngine"),
        output_sig("ControlBrake"),
        output_sig("NotifyDriver"),
    )
    actions = [emit("ControlEngine"), emit("ControlBrake")]
    if mutate != "drop-notify":
        actions.append(emit("NotifyDriver"))
    body = every_immediate(
        "SAMPLE_FREQ", present("CruiseControlMode", par(*actions))
    )
    return Program("cruise_control", signals, body)


@dataclass(frozen=True, slots=True)
class ControllerModules:
    """The standalone per-stage programs, as fed to extraction and the
    verification suite."""

    road_data: Program
    driver_alarm: Program
    host_vehicle: Program
    cruise_control: Program


def controller_modules(
    config: ThresholdConfig = DEFAULT_CONFIG, mutate: str | None = None
) -> ControllerModules:
    """Build all standalone modules.

    Deliberately skips config validation: the analysis layers must be
    able to study degenerate configs that build_system would refuse.
    """
    _check_mutation(mutate)
    return ControllerModules(
        road_data=road_data_program(),
        driver_alarm=driver_alarm_program(config.criticals, mutate),
        host_vehicle=host_vehicle_program(mutate),
        cruise_control=cruise_control_program(mutate),
    )


# ---------------------------------------------------------------------------
# The wired system.


def _threshold_stage(config: ThresholdConfig) -> Stmt:
    """Broadcast the effective thresholds every instant.

    Base values come from the climate signal (manufacturer values when it
    is absent); the configured driver preferences and the per-instant
    driver input signals are max-merged on top.  Distances are held as
    half-metre counts.
    """
    climate_chain = if_(
        eq(sigval("climate"), CLIMATE_CODE[Climate.RAIN]),
        seq(
            assign("base_distance", 2 * config.climate_table[Climate.RAIN].distance_m),
            assign("base_speed", config.climate_table[Climate.RAIN].speed_kmh),
        ),
        if_(
            eq(sigval("climate"), CLIMATE_CODE[Climate.MIST]),
            seq(
                assign(
                    "base_distance", 2 * config.climate_table[Climate.MIST].distance_m
                ),
                assign("base_speed", config.climate_table[Climate.MIST].speed_kmh),
            ),
            seq(
                assign(
                    "base_distance",
                    2 * config.climate_table[Climate.NORMAL].distance_m,
                ),
                assign("base_speed", config.climate_table[Climate.NORMAL].speed_kmh),
            ),
        ),
    )

    steps: list[Stmt] = [present("climate", climate_chain)]
    if config.driver is not None:
        steps.append(
            if_(
                lt(ref("base_distance"), 2 * config.driver.distance_m),
                assign("base_distance", 2 * config.driver.distance_m),
            )
        )
        steps.append(
            if_(
                lt(ref("base_speed"), config.driver.speed_kmh),
                assign("base_speed", config.driver.speed_kmh),
            )
        )
    steps.append(
        present(
            "InputDistance",
            if_(
                lt(ref("base_distance"), mul(2, sigval("InputDistance"))),
                assign("base_distance", mul(2, sigval("InputDistance"))),
            ),
        )
    )
    steps.append(
        present(
            "InputSpeed",
            if_(
                lt(ref("base_speed"), sigval("InputSpeed")),
                assign("base_speed", sigval("InputSpeed")),
            ),
        )
    )
    steps.append(emit("PreDefinedDistance", ref("base_distance")))
    steps.append(emit("PreDefinedSpeed", ref("base_speed")))
    steps.append(pause())

    return loop(
        let(
            "base_distance",
            2 * config.manufacturer.distance_m,
            let("base_speed", config.manufacturer.speed_kmh, seq(*steps)),
        )
    )


def _road_data_stage() -> Stmt:
    # Same shape as road_data_program but broadcasting valued copies so
    # the alarm stage can read the numbers.
    return every_immediate(
        "SAMPLE_FREQ",
        present(
            "RUNNING",
            loop(
                present(
                    sand("distance", "speed"),
                    par(
                        emit("DistanceSignal", sigval("distance")),
                        emit("SpeedSignal", sigval("speed")),
                    ),
                ),
                pause(),
            ),
        ),
    )


def _alarm_stage(config: ThresholdConfig, mutate: str | None) -> Stmt:
    return let(
        "critical_distance",
        2 * config.criticals.distance_m,
        let(
            "critical_speed",
            config.criticals.speed_kmh,
            loop(
                present(
                    sand("DistanceSignal", "SpeedSignal"),
                    _alarm_decision(mutate),
                ),
                pause(),
            ),
        ),
    )


def _dispatch_stage() -> Stmt:
    # Alert value 1 means cruise takeover, 0 means a driver notification.
    return loop(
        present(
            "Alert",
            if_(
                eq(sigval("Alert"), ALERT_HIGH),
                emit("CruiseControlAlert"),
                emit("LowAlert"),
            ),
        ),
        pause(),
    )


def _host_vehicle_stage(mutate: str | None) -> Stmt:
    arms: list[tuple[str, Stmt]] = [("LowAlert", emit("LowNotification"))]
    if mutate != "drop-cruise":
        arms.append(("CruiseControlAlert", emit("CruiseControlMode")))
    return loop(present_cases(arms), pause())


def _cruise_control_stage(mutate: str | None) -> Stmt:
    actions = [emit("ControlEngine"), emit("ControlBrake")]
    if mutate != "drop-notify":
        actions.append(emit("NotifyDriver"))
    return every_immediate(
        "SAMPLE_FREQ", present("CruiseControlMode", par(*actions))
    )


def build_system(
    config: ThresholdConfig = DEFAULT_CONFIG, mutate: str | None = None
) -> Program:
    """Wire every stage into one synchronous program.

    Signal units at the boundary: distance carries half-metre counts
    (see half_metres), InputDistance whole metres, both speed inputs
    km/h, climate a CLIMATE_CODE value (absent = unknown).  All alert
    and actuation outputs happen in the same instant as the reading
    that caused them.  STOP_VEHICLE preempts the whole system: nothing
    is emitted from the stop instant on.
    """
    validate_config(config)
    _check_mutation(mutate)
    signals = (
        input_sig("distance", valued=True),
        input_sig("speed", valued=True),
        input_sig("SAMPLE_FREQ"),
        input_sig("RUNNING"),
        input_sig("STOP_VEHICLE"),
        input_sig("climate", valued=True),
        input_sig("InputDistance", valued=True),
        input_sig("InputSpeed", valued=True),
        output_sig("Alert", valued=True),
        output_sig("LowNotification"),
        output_sig("CruiseControlMode"),
        output_sig("ControlEngine"),
        output_sig("ControlBrake"),
        output_sig("NotifyDriver"),
        local_sig("PreDefinedDistance", valued=True),
        local_sig("PreDefinedSpeed", valued=True),
        local_sig("DistanceSignal", valued=True),
        local_sig("SpeedSignal", valued=True),
        local_sig("LowAlert"),
        local_sig("CruiseControlAlert"),
    )
    body = abort(
        par(
            _threshold_stage(config),
            _road_data_stage(),
            _alarm_stage(config, mutate),
            _dispatch_stage(),
            _host_vehicle_stage(mutate),
            _cruise_control_stage(mutate),
        ),
        when="STOP_VEHICLE",
        immediate=True,
    )
    return Program("safety_system", signals, body)


def system_inputs(
    *,
    distance_m: float | None = None,
    relative_speed_kmh: int | None = None,
    sample: bool = True,
    running: bool = True,
    stop: bool = False,
    climate: Climate = Climate.UNKNOWN,
    driver_distance_m: int | None = None,
    driver_speed_kmh: int | None = None,
) -> dict[str, int | None]:
    """Input map for one build_system instant, in natural units."""
    inputs: dict[str, int | None] = {}
    if sample:
        inputs["SAMPLE_FREQ"] = None
    if running:
        inputs["RUNNING"] = None
    if stop:
        inputs["STOP_VEHICLE"] = None
    if distance_m is not None:
        inputs["distance"] = half_metres(distance_m)
    if relative_speed_kmh is not None:
        inputs["speed"] = int(relative_speed_kmh)
    if climate is not Climate.UNKNOWN:
        inputs["climate"] = CLIMATE_CODE[climate]
    if driver_distance_m is not None:
        inputs["InputDistance"] = int(driver_distance_m)
    if driver_speed_kmh is not None:
        inputs["InputSpeed"] = int(driver_speed_kmh)
    return inputs
