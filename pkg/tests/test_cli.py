"""Command-line behavior: outputs, exit codes, config loading."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from tickguard.cli import load_config, main
from tickguard.controller import DEFAULT_CONFIG, Thresholds
from tickguard.sim import TEXT_HEADER

ROOT = Path(__file__).parent.parent
APPROACH = str(ROOT / "scenarios" / "approach.csv")
DEFAULT_INI = str(ROOT / "configs" / "default.ini")
GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    streams = capsys.readouterr()
    return code, streams.out, streams.err


# ---------------------------------------------------------------------------
# simulate


def test_simulate_prints_the_report(capsys):
    code, out, err = run(capsys, "simulate", APPROACH)
    assert code == 0 and err == ""
    assert out.startswith(TEXT_HEADER)
    assert out == (GOLDEN / "approach_report.txt").read_text()


def test_simulate_is_byte_deterministic(capsys):
    _, first, _ = run(capsys, "simulate", APPROACH, "--format", "machine")
    _, second, _ = run(capsys, "simulate", APPROACH, "--format", "machine")
    assert first == second
    threats = [r["threat"] for r in json.loads(first)]
    assert threats == ["none", "low", "low", "low", "high", "high"]


def test_simulate_writes_output_file(tmp_path, capsys):
    target = tmp_path / "report.txt"
    code, out, _ = run(capsys, "simulate", APPROACH, "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text() == (GOLDEN / "approach_report.txt").read_text()


def test_simulate_missing_scenario_names_the_path(capsys):
    code, _, err = run(capsys, "simulate", "/nowhere/gone.csv")
    assert code == 2
    assert "/nowhere/gone.csv" in err


def test_simulate_reports_scenario_parse_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(Path(APPROACH).read_text() + "6,1,2\n")
    code, _, err = run(capsys, "simulate", str(bad))
    assert code == 2
    assert "line 8" in err


def test_simulate_rejects_dead_band_config(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[manufacturer]\ndistance_m = 3\nspeed_kmh = 20\n")
    code, _, err = run(capsys, "simulate", APPROACH, "--config", str(ini))
    assert code == 2
    assert "critical" in err


def test_simulate_with_explicit_default_config(capsys):
    code, out, _ = run(capsys, "simulate", APPROACH, "--config", DEFAULT_INI)
    assert code == 0
    assert out == (GOLDEN / "approach_report.txt").read_text()


def test_simulate_mutation_hook(capsys):
    code, out, _ = run(capsys, "simulate", APPROACH, "--mutate", "drop-notify")
    assert code == 0
    assert "NotifyDriver" not in out


# ---------------------------------------------------------------------------
# verify


def test_verify_passes_on_defaults(capsys):
    code, out, err = run(capsys, "verify")
    assert code == 0 and err == ""
    lines = out.splitlines()
    verdicts = [l for l in lines if l.startswith("p")]
    assert [v.split()[0:2] for v in verdicts] == [
        ["p1", "PASS"],
        ["p2", "PASS"],
        ["p3", "PASS"],
        ["p4", "PASS"],
    ]


def test_verify_mutation_fails_and_dumps_counterexample(capsys):
    code, out, _ = run(capsys, "verify", "--mutate", "drop-notify")
    assert code == 1
    assert "p4 FAIL" in out
    assert "counterexample:" in out
    assert "SAMPLE_FREQ,CruiseControlMode" in out


def test_verify_bad_config_exits_two(tmp_path, capsys):
    ini = tmp_path / "weird.ini"
    ini.write_text("[weird]\ndistance_m = 1\nspeed_kmh = 1\n")
    code, _, err = run(capsys, "verify", "--config", str(ini))
    assert code == 2
    assert "unknown config sections" in err


# ---------------------------------------------------------------------------
# fsm


def test_fsm_minimized_matches_golden(tmp_path, capsys):
    code, out, _ = run(
        capsys, "fsm", "road_data", "--minimize", "--out", str(tmp_path)
    )
    assert code == 0
    assert (tmp_path / "road_data.dot").read_text() == (
        GOLDEN / "road_data_min.dot"
    ).read_text()
    assert (tmp_path / "road_data.listing").read_text() == (
        GOLDEN / "road_data_min.listing"
    ).read_text()
    assert "road_data: 4 states" in out


def test_fsm_unminimized_listing_covers_all_states(tmp_path, capsys):
    code, _, _ = run(capsys, "fsm", "host_vehicle", "--out", str(tmp_path))
    assert code == 0
    listing = (tmp_path / "host_vehicle.listing").read_text()
    states = {line.split("\t")[0] for line in listing.splitlines()}
    assert states == {"0", "1"}


def test_fsm_full_writes_all_modules_and_comparison_notes(tmp_path, capsys):
    code, out, _ = run(capsys, "fsm", "full", "--out", str(tmp_path))
    assert code == 0
    for name in ("road_data", "driver_alarm", "host_vehicle", "cruise_control"):
        assert (tmp_path / f"{name}.dot").exists()
        assert (tmp_path / f"{name}.listing").exists()
    assert "stands for ?DistanceSignal <= ?PreDefinedDistance" in out


def test_fsm_rejects_unknown_module(capsys):
    with pytest.raises(SystemExit) as err:
        main(["fsm", "gearbox"])
    assert err.value.code == 2


# ---------------------------------------------------------------------------
# status


def test_status_broadcast_table(capsys):
    code, out, _ = run(
        capsys,
        "status",
        "road_data",
        "RUNNING=present",
        "SAMPLE_FREQ=present",
        "distance=present",
        "speed=present",
        "STOP_VEHICLE=absent",
    )
    assert code == 0
    assert "DistanceSignal\tALWAYS_EMITTED" in out
    assert "SpeedSignal\tALWAYS_EMITTED" in out


def test_status_halt_table(capsys):
    code, out, _ = run(
        capsys, "status", "road_data", "STOP_VEHICLE=present", "RUNNING=absent"
    )
    assert code == 0
    assert "DistanceSignal\tNEVER_EMITTED" in out
    assert "SpeedSignal\tNEVER_EMITTED" in out


def test_status_full_prints_one_table_per_module(capsys):
    code, out, _ = run(capsys, "status", "full")
    assert code == 0
    for name in ("road_data", "driver_alarm", "host_vehicle", "cruise_control"):
        assert f"module {name}" in out


def test_status_unknown_signal_exits_two(capsys):
    code, _, err = run(capsys, "status", "road_data", "NOPE=present")
    assert code == 2
    assert "NOPE" in err


def test_status_malformed_assignment_exits_two(capsys):
    code, _, err = run(capsys, "status", "road_data", "RUNNING~present")
    assert code == 2
    assert "SIGNAL=present|absent|free" in err


# ---------------------------------------------------------------------------
# config loading


def test_default_ini_equals_factory_defaults():
    assert load_config(DEFAULT_INI) == DEFAULT_CONFIG


def test_missing_config_path_uses_defaults():
    assert load_config(None) is DEFAULT_CONFIG


def test_partial_config_keeps_other_defaults(tmp_path):
    ini = tmp_path / "partial.ini"
    ini.write_text("[manufacturer]\ndistance_m = 15\nspeed_kmh = 25\n")
    config = load_config(str(ini))
    assert config.manufacturer == Thresholds(15, 25)
    assert config.climate_table == dict(DEFAULT_CONFIG.climate_table)
    assert config.criticals == DEFAULT_CONFIG.criticals
    assert config.driver is None


def test_driver_section_is_optional_but_honored(tmp_path):
    ini = tmp_path / "driver.ini"
    ini.write_text("[driver]\ndistance_m = 14\nspeed_kmh = 25\n")
    assert load_config(str(ini)).driver == Thresholds(14, 25)


def test_unknown_key_is_rejected(tmp_path):
    ini = tmp_path / "typo.ini"
    ini.write_text("[manufacturer]\ndistance = 12\nspeed_kmh = 20\n")
    with pytest.raises(ValueError, match="unknown keys"):
        load_config(str(ini))


def test_non_integer_value_exits_two(tmp_path, capsys):
    ini = tmp_path / "nan.ini"
    ini.write_text("[manufacturer]\ndistance_m = twelve\nspeed_kmh = 20\n")
    code, _, err = run(capsys, "verify", "--config", str(ini))
    assert code == 2 and "twelve" in err


def test_config_file_not_found_exits_two(capsys):
    code, _, err = run(capsys, "verify", "--config", "/nowhere/x.ini")
    assert code == 2
    assert "/nowhere/x.ini" in err
