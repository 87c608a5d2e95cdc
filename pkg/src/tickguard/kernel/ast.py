"""Abstract syntax for synchronous-reactive programs.

A program is a tree of frozen statement nodes executed one logical instant
(a "tick") at a time.  All communication happens over broadcast signals:
within a tick every parallel branch sees the same signal statuses, and a
signal is present exactly when some branch emits it or the environment
provides it.  Valued signals additionally carry an integer that persists
across ticks until the next emission.

Nodes are plain frozen dataclasses so that programs are immutable, hashable
and structurally comparable.  The lower-case helpers at the bottom of the
module are the intended construction API; they coerce strings to signal
references and integers to constants where the meaning is unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union


class SignalKind(Enum):
    PURE = "pure"
    VALUED = "valued"


class Direction(Enum):
    INPUT = "input"
    OUTPUT = "output"
    LOCAL = "local"


@dataclass(frozen=True, slots=True)
class SignalDecl:
    name: str
    kind: SignalKind = SignalKind.PURE
    direction: Direction = Direction.LOCAL


# ---------------------------------------------------------------------------
# Integer expressions (signal values, variables, arithmetic).


@dataclass(frozen=True, slots=True)
class Const:
    value: int


@dataclass(frozen=True, slots=True)
class VarRef:
    name: str


@dataclass(frozen=True, slots=True)
class SigVal:
    """Read the current value of a valued signal.

    Reading blocks until the signal's presence for the instant is known:
    a present signal yields the value carried this instant, an absent one
    yields the value it carried the last time it was emitted.
    """

    signal: str


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str  # one of + - *
    left: "IntExpr"
    right: "IntExpr"


IntExpr = Union[Const, VarRef, SigVal, BinOp]


# ---------------------------------------------------------------------------
# Boolean expressions over integers, used by If conditions.


@dataclass(frozen=True, slots=True)
class Cmp:
    op: str  # one of <= < >= > == !=
    left: IntExpr
    right: IntExpr


@dataclass(frozen=True, slots=True)
class BoolAnd:
    items: tuple["BoolExpr", ...]


@dataclass(frozen=True, slots=True)
class BoolOr:
    items: tuple["BoolExpr", ...]


@dataclass(frozen=True, slots=True)
class BoolNot:
    item: "BoolExpr"


BoolExpr = Union[Cmp, BoolAnd, BoolOr, BoolNot]


# ---------------------------------------------------------------------------
# Presence expressions, used by Present tests.


@dataclass(frozen=True, slots=True)
class SigRef:
    name: str


@dataclass(frozen=True, slots=True)
class SigAnd:
    items: tuple["SigExpr", ...]


@dataclass(frozen=True, slots=True)
class SigOr:
    items: tuple["SigExpr", ...]


@dataclass(frozen=True, slots=True)
class SigNot:
    item: "SigExpr"


SigExpr = Union[SigRef, SigAnd, SigOr, SigNot]


# ---------------------------------------------------------------------------
# Statements.


@dataclass(frozen=True, slots=True)
class Nothing:
    pass


@dataclass(frozen=True, slots=True)
class Emit:
    signal: str
    value: IntExpr | None = None


@dataclass(frozen=True, slots=True)
class Pause:
    pass


@dataclass(frozen=True, slots=True)
class Await:
    """Wait for a signal to be present.

    Non-immediate by default: the signal is only checked from the instant
    after the await starts.  With immediate=True the starting instant
    counts as well.
    """

    signal: str
    immediate: bool = False


@dataclass(frozen=True, slots=True)
class Present:
    """Branch on signal presence.

    Arms are tested in order within the current instant; the first arm
    whose presence expression holds runs.  If none holds the else branch
    runs (when given).  The chosen branch may span several instants; the
    test itself is never repeated.
    """

    arms: tuple[tuple[SigExpr, "Stmt"], ...]
    orelse: "Stmt | None" = None


@dataclass(frozen=True, slots=True)
class Seq:
    children: tuple["Stmt", ...]


@dataclass(frozen=True, slots=True)
class Par:
    children: tuple["Stmt", ...]


@dataclass(frozen=True, slots=True)
class Loop:
    """Restart the body as soon as it terminates.

    The body must not be able to terminate in the same instant it starts,
    otherwise the loop would spin forever inside one tick.  validate_program
    rejects such bodies; the engine also guards against them at runtime.
    """

    body: "Stmt"


@dataclass(frozen=True, slots=True)
class WeakAbort:
    """Run the body until the guard signal occurs.

    Weak abortion: in the instant the guard is present the body still runs
    (its emissions happen), then the whole statement terminates at the end
    of that instant.  The guard is armed from the second instant onward
    unless immediate=True.
    """

    body: "Stmt"
    signal: str
    immediate: bool = False


@dataclass(frozen=True, slots=True)
class Abort:
    """Run the body until the guard signal occurs, preempting it.

    Strong abortion: in the instant the guard is present (and armed) the
    body does not run at all; the statement terminates with no emissions
    from the body.  The guard is armed from the second instant onward
    unless immediate=True.
    """

    body: "Stmt"
    signal: str
    immediate: bool = False


@dataclass(frozen=True, slots=True)
class EveryImmediate:
    """Restart the body on every occurrence of a signal.

    The body starts in the first instant the signal is present, including
    the very first one.  Each later occurrence kills whatever is left of
    the body and starts it afresh in the same instant.  Never terminates
    on its own.
    """

    signal: str
    body: "Stmt"


@dataclass(frozen=True, slots=True)
class VarDecl:
    """Declare a module-local integer variable scoped to the body."""

    name: str
    init: IntExpr
    body: "Stmt"


@dataclass(frozen=True, slots=True)
class Assign:
    name: str
    expr: IntExpr


@dataclass(frozen=True, slots=True)
class If:
    cond: BoolExpr
    then: "Stmt"
    orelse: "Stmt | None" = None


Stmt = Union[
    Nothing,
    Emit,
    Pause,
    Await,
    Present,
    Seq,
    Par,
    Loop,
    WeakAbort,
    Abort,
    EveryImmediate,
    VarDecl,
    Assign,
    If,
]


@dataclass(frozen=True, slots=True)
class Program:
    name: str
    signals: tuple[SignalDecl, ...]
    body: Stmt

    def input_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.signals if s.direction is Direction.INPUT)

    def output_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.signals if s.direction is Direction.OUTPUT)

    def local_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.signals if s.direction is Direction.LOCAL)

    def decl(self, name: str) -> SignalDecl | None:
        for s in self.signals:
            if s.name == name:
                return s
        return None


def child_stmts(stmt: Stmt) -> tuple["Stmt", ...]:
    """Children of a statement in canonical order.

    The index of a child in this tuple is the path component the engine
    uses to address resume points, so the order here is load-bearing.
    For Present the arm bodies come first and the else branch (when
    given) is the last child.
    """
    if isinstance(stmt, Seq) or isinstance(stmt, Par):
        return stmt.children
    if isinstance(stmt, Present):
        kids = tuple(body for _, body in stmt.arms)
        if stmt.orelse is not None:
            kids = kids + (stmt.orelse,)
        return kids
    if isinstance(stmt, (Loop, WeakAbort, Abort, EveryImmediate, VarDecl)):
        return (stmt.body,)
    if isinstance(stmt, If):
        kids: tuple[Stmt, ...] = (stmt.then,)
        if stmt.orelse is not None:
            kids = kids + (stmt.orelse,)
        return kids
    return ()


def sig_expr_names(expr: SigExpr) -> tuple[str, ...]:
    if isinstance(expr, SigRef):
        return (expr.name,)
    if isinstance(expr, SigNot):
        return sig_expr_names(expr.item)
    names: tuple[str, ...] = ()
    for item in expr.items:
        names = names + sig_expr_names(item)
    return names


# ---------------------------------------------------------------------------
# Construction helpers.


def _sig_expr(x: "SigExpr | str") -> SigExpr:
    if isinstance(x, str):
        return SigRef(x)
    return x


def _int_expr(x: "IntExpr | int") -> IntExpr:
    if isinstance(x, int):
        return Const(x)
    return x


def sig(name: str) -> SigRef:
    return SigRef(name)


def sand(*items: "SigExpr | str") -> SigAnd:
    return SigAnd(tuple(_sig_expr(i) for i in items))


def sor(*items: "SigExpr | str") -> SigOr:
    return SigOr(tuple(_sig_expr(i) for i in items))


def snot(item: "SigExpr | str") -> SigNot:
    return SigNot(_sig_expr(item))


def ref(name: str) -> VarRef:
    return VarRef(name)


def sigval(name: str) -> SigVal:
    return SigVal(name)


def add(left, right) -> BinOp:
    return BinOp("+", _int_expr(left), _int_expr(right))


def sub(left, right) -> BinOp:
    return BinOp("-", _int_expr(left), _int_expr(right))


def mul(left, right) -> BinOp:
    return BinOp("*", _int_expr(left), _int_expr(right))


def le(left, right) -> Cmp:
    return Cmp("<=", _int_expr(left), _int_expr(right))


def lt(left, right) -> Cmp:
    return Cmp("<", _int_expr(left), _int_expr(right))


def ge(left, right) -> Cmp:
    return Cmp(">=", _int_expr(left), _int_expr(right))


def gt(left, right) -> Cmp:
    return Cmp(">", _int_expr(left), _int_expr(right))


def eq(left, right) -> Cmp:
    return Cmp("==", _int_expr(left), _int_expr(right))


def ne(left, right) -> Cmp:
    return Cmp("!=", _int_expr(left), _int_expr(right))


def band(*items: BoolExpr) -> BoolAnd:
    return BoolAnd(tuple(items))


def bor(*items: BoolExpr) -> BoolOr:
    return BoolOr(tuple(items))


def bnot(item: BoolExpr) -> BoolNot:
    return BoolNot(item)


def nothing() -> Nothing:
    return Nothing()


def emit(signal: str, value: "IntExpr | int | None" = None) -> Emit:
    return Emit(signal, None if value is None else _int_expr(value))


def pause() -> Pause:
    return Pause()


def await_(signal: str, immediate: bool = False) -> Await:
    return Await(signal, immediate)


def present(cond: "SigExpr | str", then: Stmt, orelse: Stmt | None = None) -> Present:
    return Present(((_sig_expr(cond), then),), orelse)


def present_cases(
    arms: "list[tuple[SigExpr | str, Stmt]]", orelse: Stmt | None = None
) -> Present:
    return Present(tuple((_sig_expr(c), body) for c, body in arms), orelse)


def seq(*stmts: Stmt) -> Stmt:
    if len(stmts) == 1:
        return stmts[0]
    return Seq(tuple(stmts))


def par(*stmts: Stmt) -> Stmt:
    if len(stmts) == 1:
        return stmts[0]
    return Par(tuple(stmts))


def loop(*stmts: Stmt) -> Loop:
    return Loop(seq(*stmts))


def weak_abort(body: Stmt, when: str, immediate: bool = False) -> WeakAbort:
    return WeakAbort(body, when, immediate)


def abort(body: Stmt, when: str, immediate: bool = False) -> Abort:
    return Abort(body, when, immediate)


def every_immediate(signal: str, body: Stmt) -> EveryImmediate:
    return EveryImmediate(signal, body)


def let(name: str, init: "IntExpr | int", body: Stmt) -> VarDecl:
    return VarDecl(name, _int_expr(init), body)


def assign(name: str, expr: "IntExpr | int") -> Assign:
    return Assign(name, _int_expr(expr))


def if_(cond: BoolExpr, then: Stmt, orelse: Stmt | None = None) -> If:
    return If(cond, then, orelse)


def input_sig(name: str, valued: bool = False) -> SignalDecl:
    kind = SignalKind.VALUED if valued else SignalKind.PURE
    return SignalDecl(name, kind, Direction.INPUT)


def output_sig(name: str, valued: bool = False) -> SignalDecl:
    kind = SignalKind.VALUED if valued else SignalKind.PURE
    return SignalDecl(name, kind, Direction.OUTPUT)


def local_sig(name: str, valued: bool = False) -> SignalDecl:
    kind = SignalKind.VALUED if valued else SignalKind.PURE
    return SignalDecl(name, kind, Direction.LOCAL)
