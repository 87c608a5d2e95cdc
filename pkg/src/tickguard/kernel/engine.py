"""Single-instant execution engine for synchronous-reactive programs.

Execution follows the perfect synchrony hypothesis: a reaction (tick)
is conceptually instantaneous, every parallel branch sees the same signal
statuses, and emissions are visible to all branches within the same tick.

Signal statuses are three-valued while a tick is being computed: present,
absent or unknown.  The engine runs every branch that can make progress
under the statuses known so far.  When all remaining branches are stuck on
unknown signals it computes the set of signals the pending continuations
could still emit this tick; any unknown signal outside that set is declared
absent and execution resumes.  If no signal can be decided this way the
instant has no constructive schedule and a CausalityError is raised.  The
classic paradox ``present A else emit A end`` is rejected by exactly this
rule.

Because statuses only ever move from unknown to known, re-running the
program from the start of the tick replays the already executed prefix
identically and then makes strictly more progress.  The engine exploits
this: each scheduling round is a full replay from the tick's resume points
against a fresh copy of the variable store, which keeps the interpreter
free of incremental continuation bookkeeping.

Program state between ticks is an ExecState: the set of active pause
locations (paths into the statement tree), the variable store and the
persistent values of valued signals.  ExecState is immutable and hashable,
which is what allows reachable configurations to be enumerated when a
program is compiled to an automaton.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, NamedTuple

from .ast import (
    Assign,
    Await,
    BinOp,
    BoolAnd,
    BoolNot,
    BoolOr,
    Cmp,
    Const,
    Direction,
    Emit,
    EveryImmediate,
    If,
    Loop,
    Nothing,
    Par,
    Pause,
    Present,
    Program,
    Seq,
    SigAnd,
    SigNot,
    SigOr,
    SigRef,
    SigVal,
    SignalKind,
    Stmt,
    Abort,
    VarDecl,
    VarRef,
    WeakAbort,
)

_UNKNOWN = 0
_PRESENT = 1
_ABSENT = 2

# Sentinel resume set marking a program that has not started yet.  The
# empty path can never address a real statement, so it cannot collide
# with a genuine pause location.
_START: frozenset[tuple[int, ...]] = frozenset({()})


class KernelError(Exception):
    """Base class for everything the engine can reject."""


class CausalityError(KernelError):
    """No constructive schedule exists for the instant."""

    def __init__(self, unknown_signals: Iterable[str]):
        self.unknown_signals = tuple(unknown_signals)
        super().__init__(
            "instant has no constructive schedule; undecidable signals: "
            + ", ".join(self.unknown_signals)
        )


class MultipleEmitConflict(KernelError):
    """Two different values emitted on one valued signal in one instant."""


class UndeclaredSignal(KernelError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"signal {name!r} is not declared")


class UndefinedSignalValue(KernelError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"value of signal {name!r} read before any emission")


class InstantaneousLoopError(KernelError):
    """A loop body terminated in the same instant it started."""


class TickError(KernelError):
    """Wraps an error raised while replaying a trace, with the tick index."""

    def __init__(self, tick: int, cause: KernelError):
        self.tick = tick
        self.cause = cause
        super().__init__(f"tick {tick}: {cause}")


class Completion(Enum):
    RUNNING = "running"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class ExecState:
    """Execution state of a program between two instants.

    points holds the tree paths of active pause/await/listener locations;
    an empty set means the program has terminated.  Variable and signal
    value stores are kept as sorted item tuples so states hash and compare
    structurally.
    """

    program: Program
    points: frozenset[tuple[int, ...]]
    var_items: tuple[tuple[str, int], ...] = ()
    value_items: tuple[tuple[str, int], ...] = ()

    @classmethod
    def initial(cls, program: Program) -> "ExecState":
        return cls(program, _START)

    @property
    def terminated(self) -> bool:
        return not self.points

    @property
    def vars(self) -> dict[str, int]:
        return dict(self.var_items)

    @property
    def values(self) -> dict[str, int]:
        return dict(self.value_items)

    def key(self) -> tuple:
        """Identity of the state without the (constant) program tree."""
        return (self.points, self.var_items, self.value_items)


class TickResult(NamedTuple):
    outputs: dict[str, int | None]
    state: ExecState
    completion: Completion


@dataclass
class TraceResult:
    outputs: list[dict[str, int | None]]
    terminated: bool


class _Blocked(Exception):
    def __init__(self, signal: str | None = None):
        self.signal = signal


class _Ctx:
    __slots__ = ("decls", "statuses", "tick_values", "persist", "vars", "points")

    def __init__(self, decls, statuses, tick_values, persist, vars, points):
        self.decls = decls
        self.statuses = statuses
        self.tick_values = tick_values
        self.persist = persist
        self.vars = vars
        self.points = points


def _status(ctx, name: str) -> int:
    try:
        return ctx.statuses[name]
    except KeyError:
        raise UndeclaredSignal(name) from None


def _points_under(points: frozenset, path: tuple[int, ...]) -> bool:
    n = len(path)
    return any(p[:n] == path for p in points)


def _sig_truth(expr, statuses) -> bool | None:
    """Three-valued presence of a signal expression (None = undecided)."""
    if isinstance(expr, SigRef):
        st = statuses.get(expr.name)
        if st is None:
            raise UndeclaredSignal(expr.name)
        if st == _UNKNOWN:
            return None
        return st == _PRESENT
    if isinstance(expr, SigAnd):
        saw_unknown = False
        for item in expr.items:
            t = _sig_truth(item, statuses)
            if t is False:
                return False
            if t is None:
                saw_unknown = True
        return None if saw_unknown else True
    if isinstance(expr, SigOr):
        saw_unknown = False
        for item in expr.items:
            t = _sig_truth(item, statuses)
            if t is True:
                return True
            if t is None:
                saw_unknown = True
        return None if saw_unknown else False
    if isinstance(expr, SigNot):
        t = _sig_truth(expr.item, statuses)
        return None if t is None else not t
    raise TypeError(f"not a signal expression: {expr!r}")


def _first_unknown(expr, statuses) -> str | None:
    if isinstance(expr, SigRef):
        return expr.name if statuses.get(expr.name) == _UNKNOWN else None
    if isinstance(expr, SigNot):
        return _first_unknown(expr.item, statuses)
    for item in expr.items:
        name = _first_unknown(item, statuses)
        if name is not None:
            return name
    return None


def _eval_int(expr, ctx) -> int:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, VarRef):
        try:
            return ctx.vars[expr.name]
        except KeyError:
            raise KernelError(f"read of unbound variable {expr.name!r}") from None
    if isinstance(expr, SigVal):
        decl = ctx.decls.get(expr.signal)
        if decl is None:
            raise UndeclaredSignal(expr.signal)
        if decl.kind is not SignalKind.VALUED:
            raise KernelError(f"value read of pure signal {expr.signal!r}")
        st = ctx.statuses[expr.signal]
        if st == _UNKNOWN:
            raise _Blocked(expr.signal)
        if st == _PRESENT:
            # A present valued signal always has its value recorded: inputs
            # are recorded up front, emissions record before setting status.
            return ctx.tick_values[expr.signal]
        try:
            return ctx.persist[expr.signal]
        except KeyError:
            raise UndefinedSignalValue(expr.signal) from None
    if isinstance(expr, BinOp):
        left = _eval_int(expr.left, ctx)
        right = _eval_int(expr.right, ctx)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        raise KernelError(f"unknown arithmetic operator {expr.op!r}")
    raise TypeError(f"not an integer expression: {expr!r}")


_CMP_OPS = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _eval_bool(expr, ctx) -> bool:
    if isinstance(expr, Cmp):
        op = _CMP_OPS.get(expr.op)
        if op is None:
            raise KernelError(f"unknown comparison operator {expr.op!r}")
        return op(_eval_int(expr.left, ctx), _eval_int(expr.right, ctx))
    if isinstance(expr, BoolAnd):
        return all(_eval_bool(item, ctx) for item in expr.items)
    if isinstance(expr, BoolOr):
        return any(_eval_bool(item, ctx) for item in expr.items)
    if isinstance(expr, BoolNot):
        return not _eval_bool(expr.item, ctx)
    raise TypeError(f"not a boolean expression: {expr!r}")


def _exec(stmt: Stmt, path: tuple[int, ...], fresh: bool, ctx: _Ctx):
    """Run one statement for the current instant.

    Returns None when control passed through the statement, or the
    non-empty set of pause locations where it is waiting for the next
    instant.  Raises _Blocked when progress requires a signal status that
    is still unknown.
    """
    if isinstance(stmt, Emit):
        decl = ctx.decls.get(stmt.signal)
        if decl is None:
            raise UndeclaredSignal(stmt.signal)
        if decl.direction is Direction.INPUT:
            raise KernelError(f"cannot emit input signal {stmt.signal!r}")
        if decl.kind is SignalKind.VALUED:
            if stmt.value is None:
                raise KernelError(f"valued signal {stmt.signal!r} emitted without a value")
            value = _eval_int(stmt.value, ctx)
            prev = ctx.tick_values.get(stmt.signal)
            if prev is not None and prev != value:
                raise MultipleEmitConflict(
                    f"signal {stmt.signal!r} emitted with values {prev} and {value} "
                    "in one instant"
                )
            ctx.tick_values[stmt.signal] = value
        elif stmt.value is not None:
            raise KernelError(f"pure signal {stmt.signal!r} cannot carry a value")
        # Monotone statuses: a signal declared absent can never be emitted
        # afterwards, otherwise the absence analysis was unsound.
        assert ctx.statuses[stmt.signal] != _ABSENT, (
            f"emit of {stmt.signal!r} after it was declared absent"
        )
        ctx.statuses[stmt.signal] = _PRESENT
        return None

    if isinstance(stmt, Pause):
        if fresh:
            return frozenset((path,))
        return None

    if isinstance(stmt, Present):
        if fresh:
            for i, (cond, body) in enumerate(stmt.arms):
                t = _sig_truth(cond, ctx.statuses)
                if t is None:
                    raise _Blocked(_first_unknown(cond, ctx.statuses))
                if t:
                    return _exec(body, path + (i,), True, ctx)
            if stmt.orelse is not None:
                return _exec(stmt.orelse, path + (len(stmt.arms),), True, ctx)
            return None
        kids = [body for _, body in stmt.arms]
        if stmt.orelse is not None:
            kids.append(stmt.orelse)
        for i, child in enumerate(kids):
            if _points_under(ctx.points, path + (i,)):
                return _exec(child, path + (i,), False, ctx)
        raise AssertionError("present resumed without an active branch")

    if isinstance(stmt, Seq):
        start = 0
        if not fresh:
            for k, child in enumerate(stmt.children):
                if _points_under(ctx.points, path + (k,)):
                    r = _exec(child, path + (k,), False, ctx)
                    if r is not None:
                        return r
                    start = k + 1
                    break
            else:
                raise AssertionError("seq resumed without an active child")
        for i in range(start, len(stmt.children)):
            r = _exec(stmt.children[i], path + (i,), True, ctx)
            if r is not None:
                return r
        return None

    if isinstance(stmt, Par):
        if fresh:
            plan = [(i, True) for i in range(len(stmt.children))]
        else:
            plan = [
                (i, False)
                for i in range(len(stmt.children))
                if _points_under(ctx.points, path + (i,))
            ]
        blocked = False
        paused: list[frozenset] = []
        for i, child_fresh in plan:
            try:
                r = _exec(stmt.children[i], path + (i,), child_fresh, ctx)
            except _Blocked:
                # Keep driving the siblings: their emissions may be exactly
                # what unblocks this branch on the next replay.
                blocked = True
                continue
            if r is not None:
                paused.append(r)
        if blocked:
            raise _Blocked()
        if paused:
            return frozenset().union(*paused)
        return None

    if isinstance(stmt, Loop):
        if not fresh:
            r = _exec(stmt.body, path + (0,), False, ctx)
            if r is not None:
                return r
        r = _exec(stmt.body, path + (0,), True, ctx)
        if r is None:
            raise InstantaneousLoopError(
                "loop body terminated in the instant it started"
            )
        return r

    if isinstance(stmt, If):
        if fresh:
            branch_taken = _eval_bool(stmt.cond, ctx)
            if branch_taken:
                return _exec(stmt.then, path + (0,), True, ctx)
            if stmt.orelse is None:
                return None
            return _exec(stmt.orelse, path + (1,), True, ctx)
        for i, child in enumerate((stmt.then, stmt.orelse)):
            if child is not None and _points_under(ctx.points, path + (i,)):
                return _exec(child, path + (i,), False, ctx)
        raise AssertionError("if resumed without an active branch")

    if isinstance(stmt, Assign):
        if stmt.name not in ctx.vars:
            raise KernelError(f"assignment to unbound variable {stmt.name!r}")
        ctx.vars[stmt.name] = _eval_int(stmt.expr, ctx)
        return None

    if isinstance(stmt, Await):
        if fresh and not stmt.immediate:
            return frozenset((path,))
        st = _status(ctx, stmt.signal)
        if st == _UNKNOWN:
            raise _Blocked(stmt.signal)
        if st == _PRESENT:
            return None
        return frozenset((path,))

    if isinstance(stmt, VarDecl):
        if fresh:
            ctx.vars[stmt.name] = _eval_int(stmt.init, ctx)
        r = _exec(stmt.body, path + (0,), fresh, ctx)
        if r is None:
            ctx.vars.pop(stmt.name, None)
        return r

    if isinstance(stmt, EveryImmediate):
        st = _status(ctx, stmt.signal)
        if st == _UNKNOWN:
            raise _Blocked(stmt.signal)
        if fresh:
            if st == _ABSENT:
                return frozenset((path,))
            r = _exec(stmt.body, path + (0,), True, ctx)
        elif st == _PRESENT:
            # A new occurrence kills whatever was left of the body and
            # starts it over within this very instant.
            r = _exec(stmt.body, path + (0,), True, ctx)
        elif _points_under(ctx.points, path + (0,)):
            r = _exec(stmt.body, path + (0,), False, ctx)
        else:
            return frozenset((path,))
        if r is None:
            return frozenset((path,))
        return r | frozenset((path,))

    if isinstance(stmt, WeakAbort):
        r = _exec(stmt.body, path + (0,), fresh, ctx)
        if r is None:
            return None
        armed = stmt.immediate or not fresh
        if not armed:
            return r
        st = _status(ctx, stmt.signal)
        if st == _UNKNOWN:
            raise _Blocked(stmt.signal)
        if st == _PRESENT:
            # Weak abortion: the body already ran this instant, only its
            # future is discarded.
            return None
        return r

    if isinstance(stmt, Abort):
        armed = stmt.immediate or not fresh
        if armed:
            st = _status(ctx, stmt.signal)
            if st == _UNKNOWN:
                raise _Blocked(stmt.signal)
            if st == _PRESENT:
                # Strong abortion: the body is preempted before it gets a
                # chance to run in this instant.
                return None
        return _exec(stmt.body, path + (0,), fresh, ctx)

    if isinstance(stmt, Nothing):
        return None

    raise TypeError(f"not a statement: {stmt!r}")


# ---------------------------------------------------------------------------
# Can analysis: which signals could the rest of the instant still emit.


_AMB = object()  # variable value not statically determined


class _CanCtx:
    __slots__ = ("decls", "statuses", "tick_values", "persist", "vars", "points")

    def __init__(self, decls, statuses, tick_values, persist, vars, points):
        self.decls = decls
        self.statuses = statuses
        self.tick_values = tick_values
        self.persist = persist
        self.vars = vars
        self.points = points


class _CanRes(NamedTuple):
    emits: frozenset[str]
    may_term: bool
    may_pause: bool


_CAN_NOTHING = _CanRes(frozenset(), True, False)


def _can_eval_int(expr, cctx) -> int | None:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, VarRef):
        v = cctx.vars.get(expr.name, _AMB)
        return None if v is _AMB else v
    if isinstance(expr, SigVal):
        st = cctx.statuses.get(expr.signal)
        if st == _PRESENT:
            return cctx.tick_values.get(expr.signal)
        if st == _ABSENT:
            return cctx.persist.get(expr.signal)
        return None
    if isinstance(expr, BinOp):
        left = _can_eval_int(expr.left, cctx)
        right = _can_eval_int(expr.right, cctx)
        if left is None or right is None:
            return None
        return {"+": left + right, "-": left - right, "*": left * right}[expr.op]
    return None


def _can_eval_bool(expr, cctx) -> bool | None:
    if isinstance(expr, Cmp):
        left = _can_eval_int(expr.left, cctx)
        right = _can_eval_int(expr.right, cctx)
        if left is None or right is None:
            return None
        return _CMP_OPS[expr.op](left, right)
    if isinstance(expr, BoolAnd):
        saw_unknown = False
        for item in expr.items:
            t = _can_eval_bool(item, cctx)
            if t is False:
                return False
            if t is None:
                saw_unknown = True
        return None if saw_unknown else True
    if isinstance(expr, BoolOr):
        saw_unknown = False
        for item in expr.items:
            t = _can_eval_bool(item, cctx)
            if t is True:
                return True
            if t is None:
                saw_unknown = True
        return None if saw_unknown else False
    if isinstance(expr, BoolNot):
        t = _can_eval_bool(expr.item, cctx)
        return None if t is None else not t
    return None


def _can_fork(branches, cctx) -> _CanRes:
    """Union of several possible continuations with variable merging.

    Each branch runs against its own copy of the variable store; variables
    that end up with different values in different branches become
    ambiguous, so later condition evaluation stays sound.
    """
    base = dict(cctx.vars)
    emits: frozenset[str] = frozenset()
    may_term = False
    may_pause = False
    merged: dict | None = None
    for walk in branches:
        cctx.vars = dict(base)
        r = walk()
        emits = emits | r.emits
        may_term = may_term or r.may_term
        may_pause = may_pause or r.may_pause
        if merged is None:
            merged = dict(cctx.vars)
        else:
            for k in set(merged) | set(cctx.vars):
                if k not in merged or k not in cctx.vars or merged[k] != cctx.vars[k]:
                    merged[k] = _AMB
    cctx.vars = merged if merged is not None else base
    return _CanRes(emits, may_term, may_pause)


def _can(stmt: Stmt, path: tuple[int, ...], fresh: bool, cctx: _CanCtx) -> _CanRes:
    if isinstance(stmt, Emit):
        return _CanRes(frozenset((stmt.signal,)), True, False)

    if isinstance(stmt, Pause):
        if fresh:
            return _CanRes(frozenset(), False, True)
        return _CAN_NOTHING

    if isinstance(stmt, Present):
        if not fresh:
            kids = [body for _, body in stmt.arms]
            if stmt.orelse is not None:
                kids.append(stmt.orelse)
            for i, child in enumerate(kids):
                if _points_under(cctx.points, path + (i,)):
                    return _can(child, path + (i,), False, cctx)
            raise AssertionError("present resumed without an active branch")
        included: list = []
        decided = False
        for i, (cond, body) in enumerate(stmt.arms):
            t = _sig_truth(cond, cctx.statuses)
            if t is True:
                included.append((path + (i,), body))
                decided = True
                break
            if t is None:
                included.append((path + (i,), body))
        if not decided:
            if stmt.orelse is not None:
                included.append((path + (len(stmt.arms),), stmt.orelse))
            else:
                included.append(None)
        if len(included) == 1:
            entry = included[0]
            if entry is None:
                return _CAN_NOTHING
            p, body = entry
            return _can(body, p, True, cctx)
        branches = []
        for entry in included:
            if entry is None:
                branches.append(lambda: _CAN_NOTHING)
            else:
                p, body = entry
                branches.append(lambda p=p, body=body: _can(body, p, True, cctx))
        return _can_fork(branches, cctx)

    if isinstance(stmt, Seq):
        emits: frozenset[str] = frozenset()
        may_pause = False
        start = 0
        if not fresh:
            for k in range(len(stmt.children)):
                if _points_under(cctx.points, path + (k,)):
                    r = _can(stmt.children[k], path + (k,), False, cctx)
                    emits = emits | r.emits
                    may_pause = may_pause or r.may_pause
                    if not r.may_term:
                        return _CanRes(emits, False, may_pause)
                    start = k + 1
                    break
            else:
                raise AssertionError("seq resumed without an active child")
        for i in range(start, len(stmt.children)):
            r = _can(stmt.children[i], path + (i,), True, cctx)
            emits = emits | r.emits
            may_pause = may_pause or r.may_pause
            if not r.may_term:
                return _CanRes(emits, False, may_pause)
        return _CanRes(emits, True, may_pause)

    if isinstance(stmt, Par):
        if fresh:
            plan = [(i, True) for i in range(len(stmt.children))]
        else:
            plan = [
                (i, False)
                for i in range(len(stmt.children))
                if _points_under(cctx.points, path + (i,))
            ]
        emits = frozenset()
        may_term = True
        may_pause = False
        for i, child_fresh in plan:
            r = _can(stmt.children[i], path + (i,), child_fresh, cctx)
            emits = emits | r.emits
            may_term = may_term and r.may_term
            may_pause = may_pause or r.may_pause
        return _CanRes(emits, may_term, may_pause)

    if isinstance(stmt, Loop):
        if fresh:
            r = _can(stmt.body, path + (0,), True, cctx)
            emits, may_pause = r.emits, r.may_pause
            if r.may_term:
                r2 = _can(stmt.body, path + (0,), True, cctx)
                emits, may_pause = emits | r2.emits, may_pause or r2.may_pause
            return _CanRes(emits, False, may_pause)
        r = _can(stmt.body, path + (0,), False, cctx)
        emits, may_pause = r.emits, r.may_pause
        if r.may_term:
            r2 = _can(stmt.body, path + (0,), True, cctx)
            emits, may_pause = emits | r2.emits, may_pause or r2.may_pause
        return _CanRes(emits, False, may_pause)

    if isinstance(stmt, If):
        if not fresh:
            for i, child in enumerate((stmt.then, stmt.orelse)):
                if child is not None and _points_under(cctx.points, path + (i,)):
                    return _can(child, path + (i,), False, cctx)
            raise AssertionError("if resumed without an active branch")
        t = _can_eval_bool(stmt.cond, cctx)
        if t is True:
            return _can(stmt.then, path + (0,), True, cctx)
        if t is False:
            if stmt.orelse is None:
                return _CAN_NOTHING
            return _can(stmt.orelse, path + (1,), True, cctx)
        branches = [lambda: _can(stmt.then, path + (0,), True, cctx)]
        if stmt.orelse is None:
            branches.append(lambda: _CAN_NOTHING)
        else:
            branches.append(lambda: _can(stmt.orelse, path + (1,), True, cctx))
        return _can_fork(branches, cctx)

    if isinstance(stmt, Assign):
        v = _can_eval_int(stmt.expr, cctx)
        cctx.vars[stmt.name] = _AMB if v is None else v
        return _CAN_NOTHING

    if isinstance(stmt, Await):
        if fresh and not stmt.immediate:
            return _CanRes(frozenset(), False, True)
        st = cctx.statuses.get(stmt.signal)
        if st == _PRESENT:
            return _CAN_NOTHING
        if st == _ABSENT:
            return _CanRes(frozenset(), False, True)
        return _CanRes(frozenset(), True, True)

    if isinstance(stmt, VarDecl):
        if fresh:
            v = _can_eval_int(stmt.init, cctx)
            cctx.vars[stmt.name] = _AMB if v is None else v
        return _can(stmt.body, path + (0,), fresh, cctx)

    if isinstance(stmt, EveryImmediate):
        st = cctx.statuses.get(stmt.signal)
        if fresh:
            if st == _ABSENT:
                return _CanRes(frozenset(), False, True)
            if st == _PRESENT:
                r = _can(stmt.body, path + (0,), True, cctx)
                return _CanRes(r.emits, False, True)
            r = _can_fork(
                [lambda: _can(stmt.body, path + (0,), True, cctx), lambda: _CAN_NOTHING],
                cctx,
            )
            return _CanRes(r.emits, False, True)
        has_body = _points_under(cctx.points, path + (0,))
        if st == _PRESENT:
            r = _can(stmt.body, path + (0,), True, cctx)
            return _CanRes(r.emits, False, True)
        if st == _ABSENT:
            if not has_body:
                return _CanRes(frozenset(), False, True)
            r = _can(stmt.body, path + (0,), False, cctx)
            return _CanRes(r.emits, False, True)
        branches = [lambda: _can(stmt.body, path + (0,), True, cctx)]
        if has_body:
            branches.append(lambda: _can(stmt.body, path + (0,), False, cctx))
        r = _can_fork(branches, cctx)
        return _CanRes(r.emits, False, True)

    if isinstance(stmt, WeakAbort):
        r = _can(stmt.body, path + (0,), fresh, cctx)
        armed = stmt.immediate or not fresh
        if not armed:
            return r
        st = cctx.statuses.get(stmt.signal)
        may_term = r.may_term or (r.may_pause and st != _ABSENT)
        may_pause = r.may_pause and st != _PRESENT
        return _CanRes(r.emits, may_term, may_pause)

    if isinstance(stmt, Abort):
        armed = stmt.immediate or not fresh
        if not armed:
            return _can(stmt.body, path + (0,), fresh, cctx)
        st = cctx.statuses.get(stmt.signal)
        if st == _PRESENT:
            return _CanRes(frozenset(), True, False)
        if st == _ABSENT:
            return _can(stmt.body, path + (0,), fresh, cctx)
        # Guard undecided: the instant may preempt silently or run the body.
        return _can_fork(
            [
                lambda: _CanRes(frozenset(), True, False),
                lambda: _can(stmt.body, path + (0,), fresh, cctx),
            ],
            cctx,
        )

    if isinstance(stmt, Nothing):
        return _CAN_NOTHING

    raise TypeError(f"not a statement: {stmt!r}")


def _can_emits(program, points, statuses, tick_values, persist, start_vars, fresh):
    cctx = _CanCtx(
        {s.name: s for s in program.signals},
        statuses,
        tick_values,
        persist,
        dict(start_vars),
        points,
    )
    return _can(program.body, (0,), fresh, cctx).emits


# ---------------------------------------------------------------------------
# Public entry points.


def run_tick(state: ExecState, inputs: Mapping[str, int | None]) -> TickResult:
    """Execute one instant.

    inputs maps present input signals to their value (None for pure
    signals).  Input signals not mentioned are absent.  Returns the emitted
    output signals (locals stay internal), the successor state and whether
    the program is still running.  Pure function: the same state and inputs
    always produce the same result.
    """
    program = state.program
    decls = {s.name: s for s in program.signals}

    for name, value in inputs.items():
        decl = decls.get(name)
        if decl is None or decl.direction is not Direction.INPUT:
            raise UndeclaredSignal(name)
        if decl.kind is SignalKind.VALUED:
            if not isinstance(value, int):
                raise KernelError(f"valued input {name!r} needs an integer value")
        elif value is not None:
            raise KernelError(f"pure input {name!r} cannot carry a value")

    if state.terminated:
        return TickResult({}, state, Completion.TERMINATED)

    statuses: dict[str, int] = {}
    tick_values: dict[str, int] = {}
    for s in program.signals:
        if s.direction is Direction.INPUT:
            if s.name in inputs:
                statuses[s.name] = _PRESENT
                if s.kind is SignalKind.VALUED:
                    tick_values[s.name] = inputs[s.name]  # type: ignore[assignment]
            else:
                statuses[s.name] = _ABSENT
        else:
            statuses[s.name] = _UNKNOWN

    fresh = state.points == _START
    persist = state.values
    start_vars = state.vars

    while True:
        ctx = _Ctx(decls, statuses, tick_values, persist, dict(start_vars), state.points)
        try:
            residue = _exec(program.body, (0,), fresh, ctx)
        except _Blocked:
            can = _can_emits(
                program, state.points, statuses, tick_values, persist, start_vars, fresh
            )
            progressed = False
            for name, st in statuses.items():
                if st == _UNKNOWN and name not in can:
                    statuses[name] = _ABSENT
                    progressed = True
            if not progressed:
                raise CausalityError(
                    sorted(n for n, st in statuses.items() if st == _UNKNOWN)
                ) from None
            continue
        break

    for name, st in statuses.items():
        if st == _UNKNOWN:
            statuses[name] = _ABSENT

    outputs: dict[str, int | None] = {}
    for s in program.signals:
        if s.direction is not Direction.OUTPUT:
            continue
        if statuses[s.name] == _PRESENT:
            outputs[s.name] = tick_values.get(s.name)

    new_values = dict(state.values)
    for s in program.signals:
        if s.kind is SignalKind.VALUED and statuses[s.name] == _PRESENT:
            new_values[s.name] = tick_values[s.name]

    points = residue if residue is not None else frozenset()
    new_state = ExecState(
        program,
        points,
        tuple(sorted(ctx.vars.items())),
        tuple(sorted(new_values.items())),
    )
    completion = Completion.RUNNING if points else Completion.TERMINATED
    return TickResult(outputs, new_state, completion)


def run_trace(
    program: Program, trace: Iterable[Mapping[str, int | None]]
) -> TraceResult:
    """Replay a sequence of input instants from the initial state.

    Stops early only when the program terminates; the tick that caused
    termination is still included in the outputs.
    """
    state = ExecState.initial(program)
    outputs: list[dict[str, int | None]] = []
    terminated = False
    for i, inputs in enumerate(trace):
        try:
            out, state, completion = run_tick(state, inputs)
        except KernelError as exc:
            raise TickError(i, exc) from exc
        outputs.append(out)
        if completion is Completion.TERMINATED:
            terminated = True
            break
    return TraceResult(outputs, terminated)
