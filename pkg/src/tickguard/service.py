"""HTTP service wrapping the core analyses.

The handler functions are plain request-model-in, response-model-out
translations around the controller, fsm, verifier and sim modules; the
FastAPI app maps them onto endpoints and turns domain ValueErrors into
400 responses.  The CLI calls the same handlers in-process.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .controller import ThresholdConfig, controller_modules
from .fsm import (
    MealyAutomaton,
    abstract_valued_tests,
    export_dot,
    export_listing,
    extract_automaton,
    minimize,
)
from .kernel import Program, SignalKind
from .schemas import (
    FsmArtifact,
    FsmRequest,
    FsmResponse,
    PropertyModel,
    SimulateRequest,
    SimulateResponse,
    StatusRequest,
    StatusResponse,
    StatusTable,
    TickIOModel,
    VerifyRequest,
    VerifyResponse,
)
from .sim import parse_scenario, render_report, run_scenario
from .verifier import (
    ConstraintError,
    InputConstraint,
    check_output_status,
    module_program,
    verify_safety_properties,
)

MODULE_NAMES = ("road_data", "driver_alarm", "host_vehicle", "cruise_control")


def module_automata(
    config: ThresholdConfig,
    mutate: str | None = None,
    selector: str = "full",
) -> list[tuple[str, Program, MealyAutomaton, dict[str, str]]]:
    """The (name, pure program, automaton, comparison map) rows a
    selector stands for; "full" fans out to all four modules."""
    if selector != "full" and selector not in MODULE_NAMES:
        raise ValueError(
            f"unknown module selector: {selector!r} "
            f"(choose from {', '.join(MODULE_NAMES + ('full',))})"
        )
    modules = controller_modules(config, mutate)
    rows = []
    for name in MODULE_NAMES if selector == "full" else (selector,):
        program: Program = getattr(modules, name)
        comparisons: dict[str, str] = {}
        if any(s.kind is SignalKind.VALUED for s in program.signals):
            program, table = abstract_valued_tests(program)
            comparisons = dict(table.comparisons)
        rows.append((name, program, extract_automaton(program), comparisons))
    return rows


# ---------------------------------------------------------------------------
# Handlers


def handle_simulate(request: SimulateRequest) -> SimulateResponse:
    scenario = parse_scenario(request.scenario_csv)
    reports = run_scenario(request.config.to_domain(), scenario, request.mutate)
    return SimulateResponse(
        format=request.format,
        report=render_report(reports, request.format),
        threats=[r.threat.value for r in reports],
    )


def handle_verify(request: VerifyRequest) -> VerifyResponse:
    modules = controller_modules(request.config.to_domain(), request.mutate)
    results = verify_safety_properties(modules)
    properties = []
    for result in results:
        inputs = module_program(modules, result.property_id).input_names()
        properties.append(
            PropertyModel(
                property_id=result.property_id,
                module=result.module,
                holds=result.holds,
                description=result.description,
                constraint=result.constraint.describe(inputs),
                statuses=None
                if result.statuses is None
                else {name: s.value for name, s in result.statuses.items()},
                counterexample=None
                if result.counterexample is None
                else [
                    TickIOModel(inputs=list(t.inputs), outputs=list(t.outputs))
                    for t in result.counterexample
                ],
            )
        )
    return VerifyResponse(
        all_hold=all(r.holds for r in results), properties=properties
    )


def handle_fsm(request: FsmRequest) -> FsmResponse:
    artifacts = []
    for name, _, automaton, comparisons in module_automata(
        request.config.to_domain(), request.mutate, request.module
    ):
        if request.minimize:
            automaton = minimize(automaton)
        artifacts.append(
            FsmArtifact(
                module=name,
                states=automaton.n_states,
                dot=export_dot(automaton),
                listing=export_listing(automaton),
                comparisons=comparisons,
            )
        )
    return FsmResponse(artifacts=artifacts)


def handle_status(request: StatusRequest) -> StatusResponse:
    rows = module_automata(
        request.config.to_domain(), request.mutate, request.module
    )
    known = set()
    for _, _, automaton, _ in rows:
        known.update(automaton.inputs)
    unknown = set(request.assignments) - known
    if unknown:
        raise ConstraintError(
            f"constraint names unknown signals: {sorted(unknown)}"
        )
    tables = []
    for name, _, automaton, _ in rows:
        local = {
            signal: mode
            for signal, mode in request.assignments.items()
            if signal in automaton.inputs
        }
        constraint = InputConstraint.of(
            present=[s for s, m in local.items() if m == "present"],
            absent=[s for s, m in local.items() if m == "absent"],
        )
        statuses = check_output_status(automaton, constraint)
        tables.append(
            StatusTable(
                module=name,
                constraint=constraint.describe(automaton.inputs),
                statuses={out: s.value for out, s in statuses.items()},
            )
        )
    return StatusResponse(tables=tables)


# ---------------------------------------------------------------------------
# FastAPI wiring


app = FastAPI(title="tickguard", version="1.0.0")


def _guarded(handler, request):
    try:
        return handler(request)
    except ValueError as err:
        raise HTTPException(status_code=400, detail=str(err)) from err


@app.get("/health")
def health() -> dict[str, str]:
    return {"status": "ok"}


@app.post("/simulate")
def simulate(request: SimulateRequest) -> SimulateResponse:
    return _guarded(handle_simulate, request)


@app.post("/verify")
def verify(request: VerifyRequest) -> VerifyResponse:
    return _guarded(handle_verify, request)


@app.post("/fsm")
def fsm(request: FsmRequest) -> FsmResponse:
    return _guarded(handle_fsm, request)


@app.post("/status")
def status(request: StatusRequest) -> StatusResponse:
    return _guarded(handle_status, request)
