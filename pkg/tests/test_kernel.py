from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tickguard.kernel import (
    CausalityError,
    Completion,
    ExecState,
    InstantaneousLoopError,
    KernelError,
    MultipleEmitConflict,
    Program,
    TickError,
    UndeclaredSignal,
    UndefinedSignalValue,
    abort,
    assign,
    await_,
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
    must_pause,
    nothing,
    output_sig,
    par,
    pause,
    present,
    present_cases,
    ref,
    run_tick,
    run_trace,
    sand,
    seq,
    sig,
    sigval,
    snot,
    validate_program,
    weak_abort,
)


def _tick(program: Program, inputs=None, state=None):
    st_ = state if state is not None else ExecState.initial(program)
    return run_tick(st_, inputs or {})


def _outputs(program: Program, *ticks):
    return run_trace(program, ticks).outputs


# ---------------------------------------------------------------------------
# Broadcast and the synchrony hypothesis


def test_emission_is_visible_in_the_same_instant():
    prog = Program(
        "chain",
        (input_sig("I"), output_sig("A"), output_sig("B"), output_sig("C")),
        par(
            present("I", emit("A")),
            present("A", emit("B")),
            present("B", emit("C")),
        ),
    )
    assert _tick(prog, {"I": None}).outputs == {"A": None, "B": None, "C": None}
    assert _tick(prog, {}).outputs == {}


def test_valued_broadcast_same_instant():
    prog = Program(
        "copy",
        (input_sig("I", valued=True), output_sig("O", valued=True)),
        loop(present("I", emit("O", sigval("I"))), pause()),
    )
    res = _outputs(prog, {"I": 7}, {}, {"I": -3})
    assert res == [{"O": 7}, {}, {"O": -3}]


def test_signal_values_persist_across_instants():
    prog = Program(
        "persist",
        (
            input_sig("I", valued=True),
            input_sig("ASK"),
            output_sig("O", valued=True),
            local_sig("S", valued=True),
        ),
        par(
            loop(present("I", emit("S", sigval("I"))), pause()),
            loop(present("ASK", emit("O", sigval("S"))), pause()),
        ),
    )
    res = _outputs(prog, {"I": 42}, {}, {"ASK": None}, {"I": 5, "ASK": None})
    assert res == [{}, {}, {"O": 42}, {"O": 5}]


def test_reading_a_never_emitted_value_fails():
    prog = Program(
        "undef",
        (input_sig("ASK"), output_sig("O", valued=True), local_sig("S", valued=True)),
        loop(present("ASK", emit("O", sigval("S"))), pause()),
    )
    with pytest.raises(TickError) as err:
        run_trace(prog, [{}, {"ASK": None}])
    assert err.value.tick == 1
    assert isinstance(err.value.cause, UndefinedSignalValue)


def test_conflicting_values_in_one_instant_rejected():
    prog = Program(
        "conflict",
        (output_sig("O", valued=True),),
        par(emit("O", 1), emit("O", 2)),
    )
    with pytest.raises(MultipleEmitConflict):
        _tick(prog)


def test_reemitting_the_same_value_is_fine():
    prog = Program(
        "agree",
        (output_sig("O", valued=True),),
        par(emit("O", 1), emit("O", 1)),
    )
    assert _tick(prog).outputs == {"O": 1}


def test_local_signals_stay_internal():
    prog = Program(
        "hidden",
        (output_sig("O"), local_sig("L")),
        par(emit("L"), present("L", emit("O"))),
    )
    assert _tick(prog).outputs == {"O": None}


# ---------------------------------------------------------------------------
# Constructive causality


def test_paradox_present_else_emit_rejected():
    prog = Program(
        "paradox",
        (output_sig("A"),),
        present("A", nothing(), emit("A")),
    )
    with pytest.raises(CausalityError) as err:
        _tick(prog)
    assert "A" in err.value.unknown_signals


def test_self_justifying_emission_rejected():
    # present A then emit A: both A-present and A-absent are consistent,
    # so no constructive schedule exists either.
    prog = Program(
        "selfjust",
        (output_sig("A"),),
        present("A", emit("A")),
    )
    with pytest.raises(CausalityError):
        _tick(prog)


def test_absence_is_decided_constructively():
    # The reader of B may only proceed once the writer provably cannot
    # emit it; here the writer is gated on an absent input.
    prog = Program(
        "canset",
        (input_sig("I"), output_sig("O"), local_sig("B")),
        par(
            present("I", emit("B")),
            present("B", nothing(), emit("O")),
        ),
    )
    assert _tick(prog, {}).outputs == {"O": None}
    assert _tick(prog, {"I": None}).outputs == {}


def test_can_analysis_tracks_variable_values():
    # The emitting branch is dead by the time the variable is known, so
    # the presence test must not deadlock on it.
    prog = Program(
        "varcan",
        (output_sig("O"), local_sig("B")),
        let(
            "x",
            0,
            par(
                if_(gt(ref("x"), 5), emit("B")),
                present("B", nothing(), emit("O")),
            ),
        ),
    )
    assert _tick(prog).outputs == {"O": None}


def test_strong_abort_guarded_by_local_signal():
    prog = Program(
        "strglocal",
        (input_sig("B"), output_sig("A"), local_sig("S")),
        par(
            abort(emit("A"), "S", immediate=True),
            present("B", emit("S")),
        ),
    )
    assert _tick(prog, {}).outputs == {"A": None}
    assert _tick(prog, {"B": None}).outputs == {}


# ---------------------------------------------------------------------------
# Control structures across instants


def test_await_skips_its_first_instant():
    prog = Program(
        "aw",
        (input_sig("S"), output_sig("O")),
        seq(await_("S"), emit("O")),
    )
    res = run_trace(prog, [{"S": None}, {}, {"S": None}])
    assert res.outputs == [{}, {}, {"O": None}]
    assert res.terminated


def test_await_immediate_fires_in_the_first_instant():
    prog = Program(
        "awi",
        (input_sig("S"), output_sig("O")),
        seq(await_("S", immediate=True), emit("O")),
    )
    res = run_trace(prog, [{"S": None}])
    assert res.outputs == [{"O": None}]
    assert res.terminated


def test_weak_abort_lets_the_last_instant_run():
    prog = Program(
        "wab",
        (input_sig("STOP"), output_sig("A")),
        weak_abort(loop(emit("A"), pause()), when="STOP"),
    )
    res = run_trace(prog, [{}, {"STOP": None}, {}])
    assert res.outputs == [{"A": None}, {"A": None}]
    assert res.terminated


def test_weak_abort_guard_arms_on_the_second_instant():
    prog = Program(
        "wab0",
        (input_sig("STOP"), output_sig("A")),
        weak_abort(loop(emit("A"), pause()), when="STOP"),
    )
    res = run_trace(prog, [{"STOP": None}, {"STOP": None}])
    assert res.outputs == [{"A": None}, {"A": None}]
    assert res.terminated


def test_weak_abort_immediate_can_cut_the_first_instant_short():
    prog = Program(
        "wabi",
        (input_sig("STOP"), output_sig("A")),
        weak_abort(loop(emit("A"), pause()), when="STOP", immediate=True),
    )
    res = run_trace(prog, [{"STOP": None}])
    # weak: the body still runs in the aborting instant
    assert res.outputs == [{"A": None}]
    assert res.terminated


def test_strong_abort_preempts_the_triggering_instant():
    prog = Program(
        "sab",
        (input_sig("STOP"), output_sig("A")),
        abort(loop(emit("A"), pause()), when="STOP"),
    )
    res = run_trace(prog, [{}, {"STOP": None}])
    assert res.outputs == [{"A": None}, {}]
    assert res.terminated


def test_strong_abort_immediate_preempts_at_startup():
    prog = Program(
        "sabi",
        (input_sig("STOP"), output_sig("A")),
        abort(loop(emit("A"), pause()), when="STOP", immediate=True),
    )
    res = run_trace(prog, [{"STOP": None}])
    assert res.outputs == [{}]
    assert res.terminated


def test_every_immediate_restarts_on_each_occurrence():
    # Body emits A only in its first instant; restarts make it fire again.
    prog = Program(
        "ev",
        (input_sig("S"), output_sig("A")),
        every_immediate("S", seq(emit("A"), loop(pause()))),
    )
    res = run_trace(prog, [{"S": None}, {}, {"S": None}, {}])
    assert res.outputs == [{"A": None}, {}, {"A": None}, {}]
    assert not res.terminated


def test_every_immediate_waits_for_the_first_occurrence():
    prog = Program(
        "evw",
        (input_sig("S"), output_sig("A")),
        every_immediate("S", loop(emit("A"), pause())),
    )
    res = run_trace(prog, [{}, {}, {"S": None}, {}])
    assert res.outputs == [{}, {}, {"A": None}, {"A": None}]


def test_sequence_resumes_mid_body():
    prog = Program(
        "seqres",
        (output_sig("A"), output_sig("B"), output_sig("C")),
        seq(emit("A"), pause(), emit("B"), pause(), emit("C")),
    )
    res = run_trace(prog, [{}, {}, {}])
    assert res.outputs == [{"A": None}, {"B": None}, {"C": None}]
    assert res.terminated


def test_parallel_joins_on_the_slowest_branch():
    prog = Program(
        "join",
        (output_sig("A"), output_sig("B")),
        seq(
            par(seq(emit("A")), seq(pause(), pause(), emit("B"))),
            emit("A"),
        ),
    )
    res = run_trace(prog, [{}, {}, {}])
    assert res.outputs == [{"A": None}, {}, {"A": None, "B": None}]
    assert res.terminated


def test_present_case_first_match_wins():
    prog = Program(
        "cases",
        (input_sig("X"), input_sig("Y"), output_sig("OX"), output_sig("OY")),
        loop(
            present_cases([("X", emit("OX")), ("Y", emit("OY"))]),
            pause(),
        ),
    )
    res = _outputs(prog, {"X": None, "Y": None}, {"Y": None}, {})
    assert res == [{"OX": None}, {"OY": None}, {}]


def test_presence_expressions_compose():
    prog = Program(
        "expr",
        (input_sig("X"), input_sig("Y"), output_sig("O")),
        loop(present(sand("X", snot(sig("Y"))), emit("O")), pause()),
    )
    res = _outputs(prog, {"X": None}, {"X": None, "Y": None}, {"Y": None})
    assert res == [{"O": None}, {}, {}]


def test_instantaneous_loop_raises_at_runtime():
    prog = Program("iloop", (output_sig("A"),), loop(emit("A")))
    with pytest.raises(InstantaneousLoopError):
        _tick(prog)


def test_terminated_program_stays_terminated():
    prog = Program("done", (input_sig("I"), output_sig("O")), emit("O"))
    first = _tick(prog, {})
    assert first.completion is Completion.TERMINATED
    again = run_tick(first.state, {"I": None})
    assert again.outputs == {}
    assert again.completion is Completion.TERMINATED


def test_run_trace_stops_after_termination():
    prog = Program("two", (output_sig("O"),), seq(emit("O"), pause(), emit("O")))
    res = run_trace(prog, [{}, {}, {}, {}])
    assert res.outputs == [{"O": None}, {"O": None}]
    assert res.terminated


# ---------------------------------------------------------------------------
# Input handling and validation


def test_unknown_input_signal_rejected():
    prog = Program("p", (input_sig("I"), output_sig("O")), emit("O"))
    with pytest.raises(UndeclaredSignal):
        _tick(prog, {"NOPE": None})


def test_output_cannot_be_fed_as_input():
    prog = Program("p", (input_sig("I"), output_sig("O")), emit("O"))
    with pytest.raises(UndeclaredSignal):
        _tick(prog, {"O": None})


def test_valued_input_requires_a_value():
    prog = Program("p", (input_sig("I", valued=True), output_sig("O")), emit("O"))
    with pytest.raises(KernelError):
        _tick(prog, {"I": None})


def test_pure_input_refuses_a_value():
    prog = Program("p", (input_sig("I"), output_sig("O")), emit("O"))
    with pytest.raises(KernelError):
        _tick(prog, {"I": 3})


def test_validate_flags_undeclared_and_misused_signals():
    prog = Program(
        "bad",
        (input_sig("I"), output_sig("O", valued=True)),
        par(
            emit("MISSING"),
            emit("I"),
            emit("O"),
            present("I", emit("O", sigval("I"))),
        ),
    )
    codes = {d.code for d in validate_program(prog)}
    assert "undeclared-signal" in codes
    assert "emit-input" in codes
    assert "missing-value" in codes
    assert "pure-value-read" in codes


def test_validate_flags_instantaneous_loop():
    prog = Program("bad", (output_sig("A"),), loop(emit("A")))
    assert "instantaneous-loop" in {d.code for d in validate_program(prog)}


def test_validate_flags_parallel_variable_writes():
    prog = Program(
        "race",
        (output_sig("O"),),
        let("x", 0, par(assign("x", 1), assign("x", 2))),
    )
    assert "parallel-var-write" in {d.code for d in validate_program(prog)}


def test_validate_flags_value_on_pure_emit():
    prog = Program("bad", (output_sig("O"),), emit("O", 3))
    assert "unexpected-value" in {d.code for d in validate_program(prog)}


def test_must_pause_recognises_pausing_shapes():
    assert must_pause(pause())
    assert must_pause(seq(emit("A"), pause()))
    assert must_pause(loop(pause()))
    assert not must_pause(emit("A"))
    assert not must_pause(present("S", pause()))  # no else branch
    assert must_pause(present("S", pause(), pause()))
    assert not must_pause(weak_abort(pause(), "S", immediate=True))
    assert must_pause(weak_abort(pause(), "S"))
    assert not must_pause(abort(pause(), "S", immediate=True))


# ---------------------------------------------------------------------------
# Variables and arithmetic


def test_variables_drive_emissions():
    prog = Program(
        "vars",
        (output_sig("O", valued=True),),
        let(
            "x",
            3,
            seq(
                assign("x", ref("x")),
                if_(le(ref("x"), 3), emit("O", ref("x")), emit("O", 99)),
            ),
        ),
    )
    assert _tick(prog).outputs == {"O": 3}


def test_variable_reset_on_loop_reentry():
    prog = Program(
        "reinit",
        (output_sig("O", valued=True),),
        loop(let("x", 1, seq(emit("O", ref("x")), assign("x", 5), pause()))),
    )
    res = _outputs(prog, {}, {}, {})
    assert res == [{"O": 1}, {"O": 1}, {"O": 1}]


def test_if_conditions_read_signal_values():
    prog = Program(
        "cmp",
        (input_sig("I", valued=True), output_sig("HI"), output_sig("LO")),
        loop(
            present("I", if_(eq(sigval("I"), 1), emit("HI"), emit("LO"))),
            pause(),
        ),
    )
    res = _outputs(prog, {"I": 1}, {"I": 0}, {})
    assert res == [{"HI": None}, {"LO": None}, {}]


# ---------------------------------------------------------------------------
# Determinism and order independence


_SIGS = ("A", "B", "C")


def _leaf(draw_idx: int):
    table = [nothing(), pause(), emit("A"), emit("B"), emit("C")]
    return table[draw_idx % len(table)]


_stmt = st.deferred(
    lambda: st.one_of(
        st.integers(min_value=0, max_value=4).map(_leaf),
        st.tuples(_stmt, _stmt).map(lambda t: seq(*t)),
        st.tuples(_stmt, _stmt).map(lambda t: par(*t)),
        _stmt.map(lambda s: loop(seq(s, pause()))),
        st.tuples(_stmt, _stmt).map(lambda t: present("I", t[0], t[1])),
        _stmt.map(lambda s: weak_abort(seq(s, pause()), "I")),
        _stmt.map(lambda s: every_immediate("I", s)),
    )
)

_trace = st.lists(
    st.booleans().map(lambda b: {"I": None} if b else {}), min_size=1, max_size=6
)


def _program_for(body) -> Program:
    return Program(
        "gen",
        (input_sig("I"),) + tuple(output_sig(s) for s in _SIGS),
        body,
    )


@settings(max_examples=60, deadline=None)
@given(left=_stmt, right=_stmt, trace=_trace)
def test_parallel_composition_is_order_independent(left, right, trace):
    a = _program_for(par(left, right))
    b = _program_for(par(right, left))
    ra = run_trace(a, trace)
    rb = run_trace(b, trace)
    assert ra.outputs == rb.outputs
    assert ra.terminated == rb.terminated


@settings(max_examples=60, deadline=None)
@given(body=_stmt, trace=_trace)
def test_execution_is_deterministic(body, trace):
    prog = _program_for(body)
    first = run_trace(prog, trace)
    second = run_trace(prog, trace)
    assert first.outputs == second.outputs
    assert first.terminated == second.terminated


@settings(max_examples=40, deadline=None)
@given(trace=_trace)
def test_state_is_movable(trace):
    # Re-running from a stored mid-trace state matches the straight run.
    prog = _program_for(
        par(
            loop(present("I", emit("A"), emit("B")), pause()),
            weak_abort(loop(emit("C"), pause()), "I"),
        )
    )
    straight = run_trace(prog, trace).outputs
    state = ExecState.initial(prog)
    replayed = []
    for inputs in trace:
        out, state, completion = run_tick(state, inputs)
        replayed.append(out)
        if completion is Completion.TERMINATED:
            break
    assert replayed == straight
