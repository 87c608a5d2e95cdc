"""Output-status and invariant analysis over Mealy automata.

Under a per-input constraint (always present, always absent or free),
each output of a machine is classified as always, possibly or never
emitted across the reachable constrained transitions.  Safety invariants
are boolean formulas over single transitions; violations come back as
shortest input traces that replay through the kernel.  The four stock
controller properties (p1..p4) bundle these checks over the standalone
module automata.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Union

from .controller import ControllerModules
from .fsm import MealyAutomaton, extract_automaton
from .kernel import Program, run_trace


class ConstraintError(ValueError):
    """Constraint names a signal the automaton does not have as input."""


class FormulaError(ValueError):
    """Formula refers to a signal the automaton does not declare."""


class EmptyBehavior(ValueError):
    """The constraint admits no input letters at all."""


class EmissionStatus(Enum):
    ALWAYS_EMITTED = "always_emitted"
    POSSIBLY_EMITTED = "possibly_emitted"
    NEVER_EMITTED = "never_emitted"


# ---------------------------------------------------------------------------
# Input constraints


@dataclass(frozen=True)
class InputConstraint:
    """Mode assignment for an automaton's inputs.

    Signals listed in neither set are free.  A signal listed in both sets
    is contradictory; such a constraint is representable but admits no
    letters, which the checks report as EmptyBehavior.
    """

    present: frozenset[str]
    absent: frozenset[str]

    @classmethod
    def of(
        cls, present: Iterable[str] = (), absent: Iterable[str] = ()
    ) -> "InputConstraint":
        return cls(frozenset(present), frozenset(absent))

    def mode(self, signal: str) -> str:
        if signal in self.present and signal in self.absent:
            return "contradictory"
        if signal in self.present:
            return "present"
        if signal in self.absent:
            return "absent"
        return "free"

    def describe(self, inputs: Iterable[str]) -> str:
        return " ".join(f"{name}={self.mode(name)}" for name in inputs)


def _admitted_masks(a: MealyAutomaton, c: InputConstraint) -> list[int]:
    unknown = (c.present | c.absent) - set(a.inputs)
    if unknown:
        raise ConstraintError(
            f"constraint names non-inputs of {len(a.inputs)}-input automaton: "
            f"{sorted(unknown)}"
        )
    need = a.input_mask(c.present)
    forbid = a.input_mask(c.absent)
    masks = [
        m for m in range(a.n_letters) if m & need == need and not m & forbid
    ]
    if not masks:
        raise EmptyBehavior(
            "constraint admits no input letters: "
            + ", ".join(sorted(c.present & c.absent))
        )
    return masks


def reachable_transitions(
    a: MealyAutomaton, c: InputConstraint
) -> frozenset[tuple[int, int]]:
    """All (state, input mask) pairs reachable from the initial state
    when inputs are restricted by c."""
    masks = _admitted_masks(a, c)
    seen = {a.initial}
    frontier = [a.initial]
    pairs = set()
    while frontier:
        state = frontier.pop()
        for mask in masks:
            pairs.add((state, mask))
            nxt = a.transitions[state][mask][1]
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return frozenset(pairs)


# ---------------------------------------------------------------------------
# Invariant formulas


@dataclass(frozen=True)
class InputPresent:
    signal: str


@dataclass(frozen=True)
class OutputEmitted:
    signal: str


@dataclass(frozen=True)
class FNot:
    item: "Formula"


@dataclass(frozen=True)
class FAnd:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class FOr:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class FConst:
    value: bool


Formula = Union[InputPresent, OutputEmitted, FNot, FAnd, FOr, FConst]

F_TRUE = FConst(True)
F_FALSE = FConst(False)


def input_present(signal: str) -> InputPresent:
    return InputPresent(signal)


def output_emitted(signal: str) -> OutputEmitted:
    return OutputEmitted(signal)


def f_not(item: Formula) -> FNot:
    return FNot(item)


def f_and(*items: Formula) -> Formula:
    return items[0] if len(items) == 1 else FAnd(tuple(items))


def f_or(*items: Formula) -> Formula:
    return items[0] if len(items) == 1 else FOr(tuple(items))


def render_formula(f: Formula) -> str:
    if isinstance(f, InputPresent):
        return f"present({f.signal})"
    if isinstance(f, OutputEmitted):
        return f"emitted({f.signal})"
    if isinstance(f, FNot):
        return f"not {render_formula(f.item)}"
    if isinstance(f, FAnd):
        return "(" + " and ".join(render_formula(i) for i in f.items) + ")"
    if isinstance(f, FOr):
        return "(" + " or ".join(render_formula(i) for i in f.items) + ")"
    return "true" if f.value else "false"


def _check_formula(f: Formula, a: MealyAutomaton) -> None:
    if isinstance(f, InputPresent):
        if f.signal not in a.inputs:
            raise FormulaError(f"not an input: {f.signal!r}")
    elif isinstance(f, OutputEmitted):
        if f.signal not in a.outputs:
            raise FormulaError(f"not an output: {f.signal!r}")
    elif isinstance(f, FNot):
        _check_formula(f.item, a)
    elif isinstance(f, (FAnd, FOr)):
        for item in f.items:
            _check_formula(item, a)


def _eval_formula(f: Formula, a: MealyAutomaton, in_mask: int, out_mask: int) -> bool:
    if isinstance(f, InputPresent):
        return bool(in_mask >> a.inputs.index(f.signal) & 1)
    if isinstance(f, OutputEmitted):
        return bool(out_mask >> a.outputs.index(f.signal) & 1)
    if isinstance(f, FNot):
        return not _eval_formula(f.item, a, in_mask, out_mask)
    if isinstance(f, FAnd):
        return all(_eval_formula(i, a, in_mask, out_mask) for i in f.items)
    if isinstance(f, FOr):
        return any(_eval_formula(i, a, in_mask, out_mask) for i in f.items)
    return f.value


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class TickIO:
    """One instant of a trace: the inputs fed in, the outputs observed."""

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]


@dataclass(frozen=True)
class PropertyResult:
    property_id: str
    module: str
    holds: bool
    description: str
    constraint: InputConstraint
    statuses: Mapping[str, EmissionStatus] | None = None
    counterexample: tuple[TickIO, ...] | None = None

    def __post_init__(self):
        if not self.holds and self.counterexample is None:
            raise ValueError("failed property must carry a counterexample")
        if self.statuses is not None:
            object.__setattr__(
                self, "statuses", MappingProxyType(dict(self.statuses))
            )


def trace_from_masks(a: MealyAutomaton, masks: Iterable[int]) -> tuple[TickIO, ...]:
    state = a.initial
    ticks = []
    for mask in masks:
        outs, state = a.step(state, mask)
        ticks.append(TickIO(a.input_names(mask), tuple(sorted(outs))))
    return tuple(ticks)


def replay_outputs(program: Program, trace: Iterable[TickIO]) -> list[frozenset[str]]:
    """Feed a counterexample's inputs to the kernel program and return
    the per-tick output sets actually observed."""
    inputs = [dict.fromkeys(t.inputs) for t in trace]
    result = run_trace(program, inputs)
    outs = [frozenset(step) for step in result.outputs]
    outs += [frozenset()] * (len(inputs) - len(outs))  # terminated tail
    return outs


# ---------------------------------------------------------------------------
# Checks


def check_output_status(
    a: MealyAutomaton, c: InputConstraint
) -> Mapping[str, EmissionStatus]:
    """Classify every output over the reachable constrained transitions."""
    pairs = reachable_transitions(a, c)
    total = len(pairs)
    counts = [0] * len(a.outputs)
    for state, mask in pairs:
        out_mask = a.transitions[state][mask][0]
        for i in range(len(a.outputs)):
            if out_mask >> i & 1:
                counts[i] += 1
    statuses = {}
    for i, name in enumerate(a.outputs):
        if counts[i] == 0:
            statuses[name] = EmissionStatus.NEVER_EMITTED
        elif counts[i] == total:
            statuses[name] = EmissionStatus.ALWAYS_EMITTED
        else:
            statuses[name] = EmissionStatus.POSSIBLY_EMITTED
    return MappingProxyType(statuses)


def _shortest_violation(
    a: MealyAutomaton, masks: list[int], predicate
) -> list[int] | None:
    """BFS for the shortest mask sequence whose final transition fails
    the predicate. Deterministic: states in discovery order, letters in
    mask order."""
    parent: dict[int, tuple[int, int] | None] = {a.initial: None}
    order = [a.initial]
    i = 0
    while i < len(order):
        state = order[i]
        i += 1
        for mask in masks:
            out_mask, nxt = a.transitions[state][mask]
            if not predicate(state, mask, out_mask):
                path = [mask]
                cur = state
                while parent[cur] is not None:
                    prev, via = parent[cur]
                    path.append(via)
                    cur = prev
                return path[::-1]
            if nxt not in parent:
                parent[nxt] = (state, mask)
                order.append(nxt)
    return None


def check_invariant(
    a: MealyAutomaton,
    c: InputConstraint,
    f: Formula,
    property_id: str = "invariant",
    module: str = "",
    description: str | None = None,
    statuses: Mapping[str, EmissionStatus] | None = None,
) -> PropertyResult:
    """Require f on every reachable constrained transition.

    On failure the counterexample is a shortest (BFS) input trace whose
    final tick violates f; it replays through the kernel to the same
    per-tick outputs.
    """
    _check_formula(f, a)
    masks = _admitted_masks(a, c)
    bad = _shortest_violation(
        a, masks, lambda s, m, om: _eval_formula(f, a, m, om)
    )
    text = description or f"invariant {render_formula(f)}"
    if bad is None:
        return PropertyResult(property_id, module, True, text, c, statuses)
    return PropertyResult(
        property_id, module, False, text, c, statuses, trace_from_masks(a, bad)
    )


def halts_silently(a: MealyAutomaton, c: InputConstraint) -> bool:
    """True when every constrained run ends up stuck in states that only
    self-loop without emitting."""
    masks = _admitted_masks(a, c)
    seen = {a.initial}
    frontier = [a.initial]
    while frontier:
        s = frontier.pop()
        for mask in masks:
            nxt = a.transitions[s][mask][1]
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    halted = {
        s
        for s in seen
        if all(a.transitions[s][m] == (0, s) for m in masks)
    }
    # The machine halts iff the non-halted region is cycle-free.
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {s: WHITE for s in seen if s not in halted}

    def has_cycle(root: int) -> bool:
        stack = [(root, iter(masks))]
        color[root] = GRAY
        while stack:
            node, letters = stack[-1]
            advanced = False
            for mask in letters:
                nxt = a.transitions[node][mask][1]
                if nxt in halted:
                    continue
                if color[nxt] == GRAY:
                    return True
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, iter(masks)))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
        return False

    return not any(
        color[s] == WHITE and has_cycle(s) for s in list(color)
    )


def _divergence_trace(
    a: MealyAutomaton, c: InputConstraint
) -> tuple[TickIO, ...]:
    """Shortest trace whose final state can still move or emit; evidence
    that the machine has not halted silently."""
    masks = _admitted_masks(a, c)
    bad = _shortest_violation(
        a,
        masks,
        lambda s, m, om: a.transitions[s][m] == (0, s),
    )
    assert bad is not None  # caller established the machine does not halt
    return trace_from_masks(a, bad)


# ---------------------------------------------------------------------------
# The stock property suite


def verify_safety_properties(modules: ControllerModules) -> tuple[PropertyResult, ...]:
    """Check p1..p4 over the standalone module automata.

    p1's original shape is an eventuality (running implies the data
    values are eventually broadcast); under its all-present sampling
    constraint it collapses to per-instant emission and is checked as
    such, which each report states.
    """
    road = extract_automaton(modules.road_data)
    host = extract_automaton(modules.host_vehicle)
    cruise = extract_automaton(modules.cruise_control)
    results = []

    c1 = InputConstraint.of(
        present=("distance", "speed", "SAMPLE_FREQ", "RUNNING"),
        absent=("STOP_VEHICLE",),
    )
    results.append(
        check_invariant(
            road,
            c1,
            f_and(output_emitted("DistanceSignal"), output_emitted("SpeedSignal")),
            property_id="p1",
            module=modules.road_data.name,
            description=(
                "while running and sampled every instant, both data signals "
                "are broadcast every instant (the eventuality collapses to "
                "per-instant emission under this constraint)"
            ),
            statuses=check_output_status(road, c1),
        )
    )

    c2 = InputConstraint.of(present=("STOP_VEHICLE",), absent=("RUNNING",))
    silent = check_invariant(
        road,
        c2,
        f_and(
            f_not(output_emitted("DistanceSignal")),
            f_not(output_emitted("SpeedSignal")),
        ),
        property_id="p2",
        module=modules.road_data.name,
        description=(
            "once stopped and not running, no data signal is ever emitted "
            "and the machine settles in a silent halt state"
        ),
        statuses=check_output_status(road, c2),
    )
    if silent.holds and not halts_silently(road, c2):
        silent = PropertyResult(
            silent.property_id,
            silent.module,
            False,
            silent.description + " (violated: the machine keeps moving)",
            c2,
            silent.statuses,
            _divergence_trace(road, c2),
        )
    results.append(silent)

    c3 = InputConstraint.of(
        present=("CruiseControlAlert",), absent=("LowAlert",)
    )
    results.append(
        check_invariant(
            host,
            c3,
            f_and(
                output_emitted("CruiseControlMode"),
                f_not(output_emitted("LowNotification")),
            ),
            property_id="p3",
            module=modules.host_vehicle.name,
            description=(
                "a standing high alert engages cruise mode every instant and "
                "never raises the low notification"
            ),
            statuses=check_output_status(host, c3),
        )
    )

    c4 = InputConstraint.of(present=("SAMPLE_FREQ", "CruiseControlMode"))
    results.append(
        check_invariant(
            cruise,
            c4,
            f_and(
                output_emitted("ControlEngine"),
                output_emitted("ControlBrake"),
                output_emitted("NotifyDriver"),
            ),
            property_id="p4",
            module=modules.cruise_control.name,
            description=(
                "in sampled cruise mode the engine and brake circuitry are "
                "driven and the driver is notified, every instant"
            ),
            statuses=check_output_status(cruise, c4),
        )
    )

    return tuple(results)


def module_program(modules: ControllerModules, property_id: str) -> Program:
    """The kernel program a property's counterexample replays against."""
    return {
        "p1": modules.road_data,
        "p2": modules.road_data,
        "p3": modules.host_vehicle,
        "p4": modules.cruise_control,
    }[property_id]
