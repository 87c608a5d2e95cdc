"""Sensor gating, scenario parsing, replay and report rendering."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tickguard.controller import (
    Climate,
    Criticals,
    SensorReading,
    ThreatLevel,
    ThresholdConfig,
    Thresholds,
    classify_threat_oracle,
    effective_thresholds,
    resolve_thresholds,
)
from tickguard.sim import (
    MalformedRow,
    NonMonotonicTick,
    ScenarioTick,
    StopWhileRunning,
    parse_scenario,
    render_report,
    run_scenario,
    sensor_gate,
)

HERE = Path(__file__).parent
APPROACH = (HERE.parent / "scenarios" / "approach.csv").read_text()


def approach_reports():
    return run_scenario(scenario=parse_scenario(APPROACH))


# ---------------------------------------------------------------------------
# sensor_gate


def test_gate_quantizes_distance_to_half_metres():
    gated = sensor_gate(SensorReading(7.3, 40, 2.0))
    assert gated == SensorReading(7.5, 40, 2.0)


def test_gate_drops_targets_outside_field_of_view():
    assert sensor_gate(SensorReading(8, 40, 6.0)) is None
    assert sensor_gate(SensorReading(8, 40, -6.0)) is None
    assert sensor_gate(SensorReading(8, 40, 4.5)) is not None


def test_gate_saturates_relative_speed():
    assert sensor_gate(SensorReading(8, 200, 0.0)).relative_speed_kmh == 160
    assert sensor_gate(SensorReading(8, -200, 0.0)).relative_speed_kmh == -160


def test_gate_clamps_blind_range():
    assert sensor_gate(SensorReading(1.2, 10, 0.0)).distance_m == 3.0


def test_gate_rounds_half_up():
    assert sensor_gate(SensorReading(7.25, 0, 0.0)).distance_m == 7.5
    assert sensor_gate(SensorReading(7.2, 0, 0.0)).distance_m == 7.0
    assert sensor_gate(SensorReading(7.74, 0, 0.0)).distance_m == 7.5
    assert sensor_gate(SensorReading(7.75, 0, 0.0)).distance_m == 8.0


def test_gate_passes_none_through():
    assert sensor_gate(None) is None


@settings(max_examples=150, deadline=None)
@given(
    st.floats(min_value=0.0, max_value=500.0, allow_nan=False),
    st.integers(min_value=-400, max_value=400),
    st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
)
def test_gate_is_idempotent(distance, speed, azimuth):
    once = sensor_gate(SensorReading(distance, speed, azimuth))
    if once is not None:
        assert sensor_gate(once) == once


# ---------------------------------------------------------------------------
# parse_scenario


def test_approach_scenario_parses():
    ticks = parse_scenario(APPROACH)
    assert len(ticks) == 6
    assert ticks[0].target == SensorReading(15.0, 30, 0.0)
    assert ticks[0].climate is Climate.UNKNOWN
    assert ticks[0].running and not ticks[0].stop and ticks[0].sample
    assert ticks[0].driver_distance is None and ticks[0].driver_speed is None


def test_empty_text_is_an_empty_scenario():
    assert parse_scenario("") == []
    assert parse_scenario("   \n  ") == []


def test_header_only_is_an_empty_scenario():
    header = "tick,distance,speed,azimuth,climate,running,stop,sample,driver_distance,driver_speed\n"
    assert parse_scenario(header) == []


def test_wrong_header_is_rejected():
    with pytest.raises(MalformedRow) as err:
        parse_scenario("tick,distance\n0,5\n")
    assert err.value.line == 1


def test_wrong_cell_count_is_rejected_with_line():
    text = APPROACH + "6,3,30\n"
    with pytest.raises(MalformedRow) as err:
        parse_scenario(text)
    assert err.value.line == 8


def test_stop_while_running_is_rejected():
    text = APPROACH.replace("5,3,30,0,,1,0,1,,", "5,3,30,0,,1,1,1,,")
    with pytest.raises(StopWhileRunning) as err:
        parse_scenario(text)
    assert err.value.line == 7


def test_gapped_tick_numbering_is_rejected():
    text = APPROACH.replace("5,3,30,0,,1,0,1,,", "7,3,30,0,,1,0,1,,")
    with pytest.raises(NonMonotonicTick) as err:
        parse_scenario(text)
    assert err.value.line == 7 and "expected tick 5" in str(err.value)


def test_scenario_must_start_at_tick_zero():
    text = APPROACH.replace("0,15,30,0,,1,0,1,,", "1,15,30,0,,1,0,1,,")
    with pytest.raises(NonMonotonicTick) as err:
        parse_scenario(text)
    assert err.value.line == 2


def test_partial_target_is_rejected():
    text = APPROACH.replace("2,10,30,0,,1,0,1,,", "2,10,,0,,1,0,1,,")
    with pytest.raises(MalformedRow) as err:
        parse_scenario(text)
    assert err.value.line == 4 and "together" in str(err.value)


def test_bad_climate_is_rejected():
    text = APPROACH.replace("3,6,30,0,,1,0,1,,", "3,6,30,0,foggy,1,0,1,,")
    with pytest.raises(MalformedRow) as err:
        parse_scenario(text)
    assert "climate" in str(err.value)


def test_bad_boolean_is_rejected():
    text = APPROACH.replace("4,4,30,0,,1,0,1,,", "4,4,30,0,,yes,0,1,,")
    with pytest.raises(MalformedRow):
        parse_scenario(text)


def test_bad_number_is_rejected():
    text = APPROACH.replace("1,12,30,0,,1,0,1,,", "1,twelve,30,0,,1,0,1,,")
    with pytest.raises(MalformedRow) as err:
        parse_scenario(text)
    assert "distance" in str(err.value)


def test_driver_and_climate_cells_parse():
    text = (
        "tick,distance,speed,azimuth,climate,running,stop,sample,driver_distance,driver_speed\n"
        "0,9,25,0,rain,1,0,1,14,22\n"
        "1,,,,mist,1,0,0,,\n"
    )
    first, second = parse_scenario(text)
    assert first.climate is Climate.RAIN
    assert first.driver_distance == 14 and first.driver_speed == 22
    assert second.target is None and second.climate is Climate.MIST
    assert not second.sample


def test_blank_lines_are_skipped():
    assert len(parse_scenario(APPROACH + "\n\n")) == 6


def test_direct_construction_enforces_stop_not_running():
    with pytest.raises(ValueError):
        ScenarioTick(tick=0, running=True, stop=True)


# ---------------------------------------------------------------------------
# run_scenario


def test_approach_threat_sequence():
    threats = [r.threat.value for r in approach_reports()]
    assert threats == ["none", "low", "low", "low", "high", "high"]


def test_approach_alert_values_and_modes():
    reports = approach_reports()
    assert [r.alert_value for r in reports] == [None, 0, 0, 0, 1, 1]
    assert [r.mode for r in reports] == ["normal"] * 4 + ["cruise"] * 2
    assert reports[0].emitted == frozenset()
    assert reports[1].emitted == {"Alert", "LowNotification"}


def test_cruise_ticks_carry_all_three_actuations():
    for r in approach_reports():
        if r.mode == "cruise":
            assert {"ControlEngine", "ControlBrake", "NotifyDriver"} <= r.emitted


def test_unknown_climate_reports_manufacturer_thresholds():
    for r in approach_reports():
        assert r.thresholds == Thresholds(12, 20)


def test_replay_is_deterministic():
    scenario = parse_scenario(APPROACH)
    first = run_scenario(scenario=scenario)
    second = run_scenario(scenario=scenario)
    assert first == second
    assert render_report(first, "machine") == render_report(second, "machine")


def test_no_emissions_at_or_after_a_stop_tick():
    scenario = [
        ScenarioTick(0, SensorReading(4, 30, 0.0)),
        ScenarioTick(1, SensorReading(4, 30, 0.0)),
        ScenarioTick(2, SensorReading(4, 30, 0.0), running=False, stop=True),
        ScenarioTick(3, SensorReading(3, 40, 0.0), running=False, stop=True),
        ScenarioTick(4, SensorReading(3, 40, 0.0), running=False),
    ]
    reports = run_scenario(scenario=scenario)
    assert reports[1].emitted  # alive before the stop
    for r in reports[2:]:
        assert r.emitted == frozenset()
        assert r.mode == "normal" and r.threat is ThreatLevel.NONE


def test_targetless_scenario_stays_silent():
    scenario = [ScenarioTick(i) for i in range(5)]
    for r in run_scenario(scenario=scenario):
        assert r.threat is ThreatLevel.NONE
        assert r.alert_value is None and r.emitted == frozenset()


def test_rain_row_changes_thresholds_and_classification():
    scenario = [
        ScenarioTick(0, SensorReading(11, 30, 0.0)),
        ScenarioTick(1, SensorReading(11, 30, 0.0), climate=Climate.RAIN),
    ]
    reports = run_scenario(scenario=scenario)
    assert reports[0].thresholds == Thresholds(12, 20)
    assert reports[0].threat is ThreatLevel.LOW  # 11 <= 12
    assert reports[1].thresholds == Thresholds(10, 18)
    assert reports[1].threat is ThreatLevel.NONE  # 11 > 10 and 30 > 18


def test_driver_setting_applies_only_on_its_tick():
    scenario = [
        ScenarioTick(0, SensorReading(13, 30, 0.0), driver_distance=14),
        ScenarioTick(1, SensorReading(13, 30, 0.0)),
    ]
    reports = run_scenario(scenario=scenario)
    assert reports[0].thresholds == Thresholds(14, 20)
    assert reports[0].threat is ThreatLevel.LOW  # 13 <= 14
    assert reports[1].thresholds == Thresholds(12, 20)
    assert reports[1].threat is ThreatLevel.NONE  # 13 > 12


def test_unsampled_ticks_keep_broadcasting_once_started():
    # The sampler restarts on sampled instants; between samples the data
    # path free-runs, so an already started system still classifies.
    scenario = [
        ScenarioTick(0, SensorReading(11, 30, 0.0)),
        ScenarioTick(1, SensorReading(4, 30, 0.0), sample=False),
    ]
    reports = run_scenario(scenario=scenario)
    assert reports[1].threat is ThreatLevel.HIGH


def test_mutation_hook_reaches_the_replay():
    scenario = [ScenarioTick(0, SensorReading(4, 30, 0.0))]
    faithful = run_scenario(scenario=scenario)[0]
    mutated = run_scenario(scenario=scenario, mutate="drop-notify")[0]
    assert "NotifyDriver" in faithful.emitted
    assert "NotifyDriver" not in mutated.emitted


CLIMATES = st.sampled_from(list(Climate))
TARGETS = st.one_of(
    st.none(),
    st.builds(
        SensorReading,
        st.floats(min_value=0.0, max_value=40.0, allow_nan=False),
        st.integers(min_value=-50, max_value=200),
        st.floats(min_value=-6.0, max_value=6.0, allow_nan=False),
    ),
)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(TARGETS, CLIMATES, st.booleans()), min_size=1, max_size=8
    )
)
def test_threat_column_agrees_with_classifier_oracle(rows):
    # Continuously running, fully sampled scenario: on each tick with a
    # surviving target the threat column must match the classifier run
    # on that tick's thresholds.
    config = ThresholdConfig()
    scenario = [
        ScenarioTick(i, target=target, climate=climate, sample=True)
        for i, (target, climate, _) in enumerate(rows)
    ]
    for tick, report in zip(scenario, run_scenario(config, scenario)):
        reading = sensor_gate(tick.target)
        if reading is None:
            assert report.threat is ThreatLevel.NONE
        else:
            expected = classify_threat_oracle(
                reading, resolve_thresholds(config, tick.climate), Criticals()
            )
            assert report.threat is expected


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            TARGETS,
            st.one_of(st.none(), st.integers(min_value=0, max_value=30)),
            st.one_of(st.none(), st.integers(min_value=0, max_value=40)),
        ),
        min_size=1,
        max_size=6,
    )
)
def test_threat_agreement_with_driver_inputs(rows):
    config = ThresholdConfig()
    scenario = [
        ScenarioTick(i, target=t, driver_distance=dd, driver_speed=ds)
        for i, (t, dd, ds) in enumerate(rows)
    ]
    for tick, report in zip(scenario, run_scenario(config, scenario)):
        reading = sensor_gate(tick.target)
        if reading is not None:
            expected = classify_threat_oracle(
                reading,
                effective_thresholds(
                    config,
                    tick.climate,
                    tick.driver_distance,
                    tick.driver_speed,
                ),
                Criticals(),
            )
            assert report.threat is expected


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(TARGETS, st.booleans()), min_size=2, max_size=8),
    st.integers(min_value=0, max_value=7),
)
def test_nothing_is_emitted_after_the_first_stop(rows, stop_at):
    stop_at = min(stop_at, len(rows) - 1)
    scenario = []
    for i, (target, sample) in enumerate(rows):
        stopped = i >= stop_at
        scenario.append(
            ScenarioTick(
                i,
                target=target,
                sample=sample,
                running=not stopped,
                stop=i == stop_at,
            )
        )
    reports = run_scenario(scenario=scenario)
    for r in reports[stop_at:]:
        assert r.emitted == frozenset()


# ---------------------------------------------------------------------------
# render_report


def test_empty_report_is_header_only():
    assert render_report([]) == "tick\treading\tthresholds\tthreat\talert\tmode\temitted\n"
    assert render_report([], "machine") == "[]\n"


def test_text_report_matches_golden():
    text = render_report(approach_reports())
    assert text == (HERE / "golden" / "approach_report.txt").read_text()


def test_cruise_line_shape():
    lines = render_report(approach_reports()).splitlines()
    assert lines[5].startswith("4\t4m@30km/h\t12m/20km/h\thigh\t1\tcruise\t")
    for signal in ("ControlEngine", "ControlBrake", "NotifyDriver"):
        assert signal in lines[5]


def test_machine_report_carries_exact_field_names():
    records = json.loads(render_report(approach_reports(), "machine"))
    assert len(records) == 6
    assert set(records[0]) == {
        "tick",
        "reading",
        "thresholds",
        "threat",
        "alert_value",
        "emitted",
        "mode",
    }
    assert records[0]["reading"] == {
        "distance_m": 15.0,
        "relative_speed_kmh": 30,
        "azimuth_deg": 0.0,
    }
    assert records[4]["threat"] == "high" and records[4]["mode"] == "cruise"
    targetless = run_scenario(scenario=[ScenarioTick(0)])
    assert json.loads(render_report(targetless, "machine"))[0]["reading"] is None


def test_unknown_format_is_rejected():
    with pytest.raises(ValueError):
        render_report([], "yaml")
