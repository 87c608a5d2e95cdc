"""Synchronous-reactive execution kernel.

Programs are immutable statement trees over broadcast signals, executed
one logical instant at a time with constructive absence reasoning.  See
tickguard.kernel.engine for the semantics and tickguard.kernel.ast for
the construction helpers.
"""

from .ast import (
    Abort,
    Assign,
    Await,
    BinOp,
    BoolAnd,
    BoolExpr,
    BoolNot,
    BoolOr,
    Cmp,
    Const,
    Direction,
    Emit,
    EveryImmediate,
    If,
    IntExpr,
    Loop,
    Nothing,
    Par,
    Pause,
    Present,
    Program,
    Seq,
    SigAnd,
    SigExpr,
    SigNot,
    SigOr,
    SigRef,
    SigVal,
    SignalDecl,
    SignalKind,
    Stmt,
    VarDecl,
    VarRef,
    WeakAbort,
    abort,
    add,
    assign,
    await_,
    band,
    bnot,
    bor,
    child_stmts,
    emit,
    eq,
    every_immediate,
    ge,
    gt,
    if_,
    input_sig,
    le,
    let,
    local_sig,
    loop,
    lt,
    mul,
    ne,
    nothing,
    output_sig,
    par,
    pause,
    present,
    present_cases,
    ref,
    seq,
    sig,
    sig_expr_names,
    sigval,
    sand,
    snot,
    sor,
    sub,
    weak_abort,
)
from .engine import (
    CausalityError,
    Completion,
    ExecState,
    InstantaneousLoopError,
    KernelError,
    MultipleEmitConflict,
    TickError,
    TickResult,
    TraceResult,
    UndeclaredSignal,
    UndefinedSignalValue,
    run_tick,
    run_trace,
)
from .validate import Diagnostic, must_pause, validate_program

__all__ = [name for name in dir() if not name.startswith("_")]
