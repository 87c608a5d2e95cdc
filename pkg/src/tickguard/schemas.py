"""Request and response models for the service layer.

These mirror the controller/verifier/sim domain types closely enough
that handlers are thin translations; all validation beyond shape checks
stays in the core modules.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from .controller import (
    Climate,
    Criticals,
    DEFAULT_CLIMATE_TABLE,
    ThresholdConfig,
    Thresholds,
)

ModuleName = Literal[
    "road_data", "driver_alarm", "host_vehicle", "cruise_control", "full"
]
MutationName = Optional[Literal["drop-notify", "drop-cruise", "invert-critical"]]


class ThresholdsModel(BaseModel):
    distance_m: int
    speed_kmh: int

    def to_domain(self) -> Thresholds:
        return Thresholds(self.distance_m, self.speed_kmh)

    @classmethod
    def from_domain(cls, t: Thresholds) -> "ThresholdsModel":
        return cls(distance_m=t.distance_m, speed_kmh=t.speed_kmh)


class CriticalsModel(BaseModel):
    distance_m: int = 4
    speed_kmh: int = 10


def _default_climate_table() -> dict[str, ThresholdsModel]:
    return {
        climate.value: ThresholdsModel.from_domain(t)
        for climate, t in DEFAULT_CLIMATE_TABLE.items()
    }


class ConfigModel(BaseModel):
    """Threshold configuration in wire form."""

    manufacturer: ThresholdsModel = Field(
        default_factory=lambda: ThresholdsModel(distance_m=12, speed_kmh=20)
    )
    climate_table: dict[Literal["rain", "mist", "normal"], ThresholdsModel] = Field(
        default_factory=_default_climate_table
    )
    driver: ThresholdsModel | None = None
    criticals: CriticalsModel = Field(default_factory=CriticalsModel)

    def to_domain(self) -> ThresholdConfig:
        return ThresholdConfig(
            manufacturer=self.manufacturer.to_domain(),
            climate_table={
                Climate(name): model.to_domain()
                for name, model in self.climate_table.items()
            },
            driver=None if self.driver is None else self.driver.to_domain(),
            criticals=Criticals(
                self.criticals.distance_m, self.criticals.speed_kmh
            ),
        )


class SimulateRequest(BaseModel):
    scenario_csv: str
    config: ConfigModel = Field(default_factory=ConfigModel)
    format: Literal["text", "machine"] = "text"
    mutate: MutationName = None


class SimulateResponse(BaseModel):
    format: Literal["text", "machine"]
    report: str
    threats: list[str]


class TickIOModel(BaseModel):
    inputs: list[str]
    outputs: list[str]


class PropertyModel(BaseModel):
    property_id: str
    module: str
    holds: bool
    description: str
    constraint: str
    statuses: dict[str, str] | None = None
    counterexample: list[TickIOModel] | None = None


class VerifyRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    mutate: MutationName = None


class VerifyResponse(BaseModel):
    all_hold: bool
    properties: list[PropertyModel]


class FsmRequest(BaseModel):
    module: ModuleName
    minimize: bool = False
    config: ConfigModel = Field(default_factory=ConfigModel)
    mutate: MutationName = None


class FsmArtifact(BaseModel):
    module: str
    states: int
    dot: str
    listing: str
    comparisons: dict[str, str] = Field(default_factory=dict)


class FsmResponse(BaseModel):
    artifacts: list[FsmArtifact]


class StatusRequest(BaseModel):
    module: ModuleName
    assignments: dict[str, Literal["present", "absent", "free"]] = Field(
        default_factory=dict
    )
    config: ConfigModel = Field(default_factory=ConfigModel)
    mutate: MutationName = None


class StatusTable(BaseModel):
    module: str
    constraint: str
    statuses: dict[str, str]


class StatusResponse(BaseModel):
    tables: list[StatusTable]
