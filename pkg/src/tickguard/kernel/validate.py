"""Static checks run before a program is executed or compiled.

The engine assumes programs are well formed; validate_program is the
gate that makes that assumption safe.  It rejects references to
undeclared signals and variables, value traffic on pure signals, loops
whose body can terminate in the instant it starts, and variables written
from more than one parallel branch.
"""

from __future__ import annotations

from dataclasses import dataclass

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
    SigVal,
    SignalKind,
    Stmt,
    Abort,
    VarDecl,
    VarRef,
    WeakAbort,
    sig_expr_names,
)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    path: tuple[int, ...] = ()

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def must_pause(stmt: Stmt) -> bool:
    """True when control can never pass through stmt in a single instant."""
    if isinstance(stmt, Pause):
        return True
    if isinstance(stmt, Await):
        return not stmt.immediate
    if isinstance(stmt, (Loop, EveryImmediate)):
        return True
    if isinstance(stmt, Seq):
        return any(must_pause(c) for c in stmt.children)
    if isinstance(stmt, Par):
        return any(must_pause(c) for c in stmt.children)
    if isinstance(stmt, Present):
        if stmt.orelse is None or not stmt.arms:
            return False
        return all(must_pause(b) for _, b in stmt.arms) and must_pause(stmt.orelse)
    if isinstance(stmt, If):
        if stmt.orelse is None:
            return False
        return must_pause(stmt.then) and must_pause(stmt.orelse)
    if isinstance(stmt, VarDecl):
        return must_pause(stmt.body)
    if isinstance(stmt, (WeakAbort, Abort)):
        # With an immediate guard the construct can be cut short in its very
        # first instant, so only the non-immediate form inherits the body's
        # guarantee.
        if stmt.immediate:
            return False
        return must_pause(stmt.body)
    return False  # Nothing, Emit, Assign


def _expr_signal_reads(expr) -> list[str]:
    if isinstance(expr, SigVal):
        return [expr.signal]
    if isinstance(expr, BinOp):
        return _expr_signal_reads(expr.left) + _expr_signal_reads(expr.right)
    if isinstance(expr, Cmp):
        return _expr_signal_reads(expr.left) + _expr_signal_reads(expr.right)
    if isinstance(expr, (BoolAnd, BoolOr)):
        out: list[str] = []
        for item in expr.items:
            out.extend(_expr_signal_reads(item))
        return out
    if isinstance(expr, BoolNot):
        return _expr_signal_reads(expr.item)
    return []


def _expr_var_reads(expr) -> list[str]:
    if isinstance(expr, VarRef):
        return [expr.name]
    if isinstance(expr, BinOp):
        return _expr_var_reads(expr.left) + _expr_var_reads(expr.right)
    if isinstance(expr, Cmp):
        return _expr_var_reads(expr.left) + _expr_var_reads(expr.right)
    if isinstance(expr, (BoolAnd, BoolOr)):
        out: list[str] = []
        for item in expr.items:
            out.extend(_expr_var_reads(item))
        return out
    if isinstance(expr, BoolNot):
        return _expr_var_reads(expr.item)
    return []


def _assigned_vars(stmt: Stmt, local: set[str]) -> set[str]:
    """Assignment targets in stmt that are declared outside of it."""
    if isinstance(stmt, Assign):
        return set() if stmt.name in local else {stmt.name}
    if isinstance(stmt, VarDecl):
        return _assigned_vars(stmt.body, local | {stmt.name})
    if isinstance(stmt, (Seq, Par)):
        out: set[str] = set()
        for c in stmt.children:
            out |= _assigned_vars(c, local)
        return out
    if isinstance(stmt, Present):
        out = set()
        for _, b in stmt.arms:
            out |= _assigned_vars(b, local)
        if stmt.orelse is not None:
            out |= _assigned_vars(stmt.orelse, local)
        return out
    if isinstance(stmt, If):
        out = _assigned_vars(stmt.then, local)
        if stmt.orelse is not None:
            out |= _assigned_vars(stmt.orelse, local)
        return out
    if isinstance(stmt, (Loop, WeakAbort, Abort, EveryImmediate)):
        return _assigned_vars(stmt.body, local)
    return set()


def validate_program(program: Program) -> list[Diagnostic]:
    """Collect everything wrong with a program.  Empty list means valid."""
    diags: list[Diagnostic] = []
    decls = {}
    for s in program.signals:
        if s.name in decls:
            diags.append(
                Diagnostic("duplicate-signal", f"signal {s.name!r} declared twice")
            )
        decls[s.name] = s

    var_names: set[str] = set()

    def check_signal_use(name: str, path, purpose: str) -> None:
        if name not in decls:
            diags.append(
                Diagnostic(
                    "undeclared-signal",
                    f"{purpose} of undeclared signal {name!r}",
                    path,
                )
            )

    def check_expr(expr, path, scope: set[str]) -> None:
        for name in _expr_signal_reads(expr):
            if name not in decls:
                diags.append(
                    Diagnostic(
                        "undeclared-signal",
                        f"value read of undeclared signal {name!r}",
                        path,
                    )
                )
            elif decls[name].kind is not SignalKind.VALUED:
                diags.append(
                    Diagnostic(
                        "pure-value-read",
                        f"value read of pure signal {name!r}",
                        path,
                    )
                )
        for name in _expr_var_reads(expr):
            if name not in scope:
                diags.append(
                    Diagnostic(
                        "undeclared-var",
                        f"read of undeclared variable {name!r}",
                        path,
                    )
                )

    def walk(stmt: Stmt, path: tuple[int, ...], scope: set[str]) -> None:
        if isinstance(stmt, Emit):
            decl = decls.get(stmt.signal)
            if decl is None:
                check_signal_use(stmt.signal, path, "emit")
            else:
                if decl.direction is Direction.INPUT:
                    diags.append(
                        Diagnostic(
                            "emit-input",
                            f"emit of input signal {stmt.signal!r}",
                            path,
                        )
                    )
                if decl.kind is SignalKind.VALUED and stmt.value is None:
                    diags.append(
                        Diagnostic(
                            "missing-value",
                            f"valued signal {stmt.signal!r} emitted without a value",
                            path,
                        )
                    )
                if decl.kind is SignalKind.PURE and stmt.value is not None:
                    diags.append(
                        Diagnostic(
                            "unexpected-value",
                            f"pure signal {stmt.signal!r} emitted with a value",
                            path,
                        )
                    )
            if stmt.value is not None:
                check_expr(stmt.value, path, scope)
            return
        if isinstance(stmt, (Pause, Nothing)):
            return
        if isinstance(stmt, Await):
            check_signal_use(stmt.signal, path, "await")
            return
        if isinstance(stmt, Present):
            if not stmt.arms:
                diags.append(Diagnostic("empty-present", "present with no arms", path))
            for i, (cond, body) in enumerate(stmt.arms):
                for name in sig_expr_names(cond):
                    check_signal_use(name, path, "presence test")
                walk(body, path + (i,), scope)
            if stmt.orelse is not None:
                walk(stmt.orelse, path + (len(stmt.arms),), scope)
            return
        if isinstance(stmt, (Seq, Par)):
            if isinstance(stmt, Par):
                seen: dict[str, int] = {}
                for i, child in enumerate(stmt.children):
                    for name in _assigned_vars(child, set()):
                        if name in seen:
                            diags.append(
                                Diagnostic(
                                    "parallel-var-write",
                                    f"variable {name!r} written by parallel "
                                    f"branches {seen[name]} and {i}",
                                    path,
                                )
                            )
                        else:
                            seen[name] = i
            for i, child in enumerate(stmt.children):
                walk(child, path + (i,), scope)
            return
        if isinstance(stmt, Loop):
            if not must_pause(stmt.body):
                diags.append(
                    Diagnostic(
                        "instantaneous-loop",
                        "loop body can terminate in the instant it starts",
                        path,
                    )
                )
            walk(stmt.body, path + (0,), scope)
            return
        if isinstance(stmt, (WeakAbort, Abort)):
            check_signal_use(stmt.signal, path, "abort guard")
            walk(stmt.body, path + (0,), scope)
            return
        if isinstance(stmt, EveryImmediate):
            check_signal_use(stmt.signal, path, "restart guard")
            walk(stmt.body, path + (0,), scope)
            return
        if isinstance(stmt, VarDecl):
            if stmt.name in var_names:
                diags.append(
                    Diagnostic(
                        "duplicate-var",
                        f"variable name {stmt.name!r} reused; variable names "
                        "must be unique within a program",
                        path,
                    )
                )
            var_names.add(stmt.name)
            check_expr(stmt.init, path, scope)
            walk(stmt.body, path + (0,), scope | {stmt.name})
            return
        if isinstance(stmt, Assign):
            if stmt.name not in scope:
                diags.append(
                    Diagnostic(
                        "undeclared-var",
                        f"assignment to undeclared variable {stmt.name!r}",
                        path,
                    )
                )
            check_expr(stmt.expr, path, scope)
            return
        if isinstance(stmt, If):
            check_expr(stmt.cond, path, scope)
            walk(stmt.then, path + (0,), scope)
            if stmt.orelse is not None:
                walk(stmt.orelse, path + (1,), scope)
            return
        raise TypeError(f"not a statement: {stmt!r}")

    walk(program.body, (0,), set())
    return diags
