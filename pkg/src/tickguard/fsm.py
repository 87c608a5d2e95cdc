"""Mealy automata from pure-signal programs.

Pipeline: abstract away valued comparisons (abstract_valued_tests), walk
the reachable tick-state graph into an explicit machine
(extract_automaton), quotient it by bisimulation (minimize), and render
it as DOT or a plain-text listing.  Input letters are subsets of the
declared input signals, encoded as bit masks in declaration order;
output letters likewise.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

from .kernel import (
    Abort,
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
    ExecState,
    If,
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
    run_tick,
    validate_program,
)


class NotPureProgram(ValueError):
    """The program still carries values or variables, so its tick states
    do not form a finite signal-level machine."""


class UnabstractableValueUse(ValueError):
    """A signal value is used somewhere other than a simple comparison
    in a branch condition or a constant-valued emission."""


class StateExplosion(RuntimeError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"state exploration exceeded the cap of {cap} states")


# ---------------------------------------------------------------------------
# Mealy automaton


@dataclass(frozen=True)
class MealyAutomaton:
    """Complete deterministic Mealy machine over signal subsets.

    transitions[state][input_mask] == (output_mask, next_state); bit i of
    a mask stands for inputs[i] / outputs[i].  Every state has exactly
    one transition per input letter, so rows always hold 2**len(inputs)
    entries.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    transitions: tuple[tuple[tuple[int, int], ...], ...]
    initial: int = 0

    @property
    def n_states(self) -> int:
        return len(self.transitions)

    @property
    def n_letters(self) -> int:
        return 1 << len(self.inputs)

    def input_mask(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            try:
                mask |= 1 << self.inputs.index(name)
            except ValueError:
                raise ValueError(f"not an input of this automaton: {name!r}") from None
        return mask

    def input_names(self, mask: int) -> tuple[str, ...]:
        return tuple(n for i, n in enumerate(self.inputs) if mask >> i & 1)

    def output_names(self, mask: int) -> tuple[str, ...]:
        return tuple(n for i, n in enumerate(self.outputs) if mask >> i & 1)

    def step(self, state: int, letter: Iterable[str] | int) -> tuple[frozenset[str], int]:
        mask = letter if isinstance(letter, int) else self.input_mask(letter)
        out_mask, nxt = self.transitions[state][mask]
        return frozenset(self.output_names(out_mask)), nxt

    def simulate(self, trace: Iterable[Iterable[str] | int]) -> list[frozenset[str]]:
        state = self.initial
        outs: list[frozenset[str]] = []
        for letter in trace:
            emitted, state = self.step(state, letter)
            outs.append(emitted)
        return outs


def validate_automaton(a: MealyAutomaton) -> None:
    """Raise ValueError unless a is complete, deterministic, in-range
    and fully reachable."""
    if a.n_states == 0:
        raise ValueError("automaton has no states")
    if not 0 <= a.initial < a.n_states:
        raise ValueError("initial state out of range")
    for s, row in enumerate(a.transitions):
        if len(row) != a.n_letters:
            raise ValueError(f"state {s} has {len(row)} letters, wants {a.n_letters}")
        for out_mask, nxt in row:
            if not 0 <= nxt < a.n_states:
                raise ValueError(f"state {s} jumps out of range to {nxt}")
            if out_mask >> len(a.outputs):
                raise ValueError(f"state {s} emits undeclared output bits")
    seen = {a.initial}
    frontier = [a.initial]
    while frontier:
        s = frontier.pop()
        for _, nxt in a.transitions[s]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    if len(seen) != a.n_states:
        missing = sorted(set(range(a.n_states)) - seen)
        raise ValueError(f"unreachable states: {missing}")


# ---------------------------------------------------------------------------
# Valued-test abstraction


_OP_WORD = {"<=": "le", "<": "lt", ">=": "ge", ">": "gt", "==": "eq", "!=": "ne"}


@dataclass(frozen=True)
class TestSignalMap:
    """Bookkeeping of the abstraction step.

    comparisons: fresh pure input name -> the comparison it stands for,
    bijectively.  const_outputs: fresh pure output name -> (original
    valued signal, the constant it was emitted with).
    """

    comparisons: Mapping[str, str]
    const_outputs: Mapping[str, tuple[str, int]]

    def __post_init__(self):
        object.__setattr__(self, "comparisons", MappingProxyType(dict(self.comparisons)))
        object.__setattr__(
            self, "const_outputs", MappingProxyType(dict(self.const_outputs))
        )


def _operand_key(expr) -> tuple:
    if isinstance(expr, SigVal):
        return ("sig", expr.signal)
    if isinstance(expr, VarRef):
        return ("var", expr.name)
    if isinstance(expr, Const):
        return ("const", expr.value)
    raise UnabstractableValueUse(
        "only plain signal values, variables and constants can appear in an "
        f"abstracted comparison, got {type(expr).__name__}"
    )


def _operand_name(expr) -> str:
    if isinstance(expr, SigVal):
        return expr.signal
    if isinstance(expr, VarRef):
        return expr.name
    value = expr.value
    return str(value) if value >= 0 else f"m{-value}"


def _operand_desc(expr) -> str:
    if isinstance(expr, SigVal):
        return f"?{expr.signal}"
    if isinstance(expr, VarRef):
        return expr.name
    return str(expr.value)


def _contains_sigval(expr) -> bool:
    if isinstance(expr, SigVal):
        return True
    if isinstance(expr, (Cmp, BinOp)):
        return _contains_sigval(expr.left) or _contains_sigval(expr.right)
    if isinstance(expr, (BoolAnd, BoolOr)):
        return any(_contains_sigval(item) for item in expr.items)
    if isinstance(expr, BoolNot):
        return _contains_sigval(expr.item)
    return False


class _Abstraction:
    def __init__(self, program: Program):
        self.program = program
        self.decls = {s.name: s for s in program.signals}
        self.taken = set(self.decls)
        self.comp_names: dict[tuple, str] = {}
        self.comparisons: dict[str, str] = {}
        self.const_names: dict[tuple[str, int], str] = {}
        self.const_outputs: dict[str, tuple[str, int]] = {}

    def _claim(self, base: str) -> str:
        name = base
        while name in self.taken:
            name = name + "_"
        self.taken.add(name)
        return name

    def _fresh_comparison(self, cmp: Cmp) -> str:
        key = (cmp.op, _operand_key(cmp.left), _operand_key(cmp.right))
        name = self.comp_names.get(key)
        if name is None:
            base = (
                f"{_operand_name(cmp.left)}_{_OP_WORD[cmp.op]}_"
                f"{_operand_name(cmp.right)}"
            )
            name = self._claim(base)
            self.comp_names[key] = name
            self.comparisons[name] = (
                f"{_operand_desc(cmp.left)} {cmp.op} {_operand_desc(cmp.right)}"
            )
        return name

    def _fresh_const_output(self, signal: str, value: int) -> str:
        key = (signal, value)
        name = self.const_names.get(key)
        if name is None:
            suffix = str(value) if value >= 0 else f"m{-value}"
            name = self._claim(f"{signal}_eq_{suffix}")
            self.const_names[key] = name
            self.const_outputs[name] = (signal, value)
        return name

    def _cond_to_sig_expr(self, cond) -> SigExpr:
        if isinstance(cond, Cmp):
            if not _contains_sigval(cond):
                raise UnabstractableValueUse(
                    "a condition mixes signal-value comparisons with plain "
                    "variable tests; that cannot be mapped to signal presence"
                )
            return SigRef(self._fresh_comparison(cond))
        if isinstance(cond, BoolAnd):
            return SigAnd(tuple(self._cond_to_sig_expr(i) for i in cond.items))
        if isinstance(cond, BoolOr):
            return SigOr(tuple(self._cond_to_sig_expr(i) for i in cond.items))
        if isinstance(cond, BoolNot):
            return SigNot(self._cond_to_sig_expr(cond.item))
        raise UnabstractableValueUse(f"cannot abstract condition {cond!r}")

    def _check_value_free(self, expr, where: str) -> None:
        if _contains_sigval(expr):
            raise UnabstractableValueUse(
                f"signal value read outside a branch comparison, in {where}"
            )

    def walk(self, stmt: Stmt) -> Stmt:
        if isinstance(stmt, Emit):
            decl = self.decls.get(stmt.signal)
            if decl is None or decl.kind is SignalKind.PURE:
                return stmt
            if stmt.value is None:
                return Emit(stmt.signal, None)
            if isinstance(stmt.value, Const):
                fresh = self._fresh_const_output(stmt.signal, stmt.value.value)
                return Seq((Emit(stmt.signal, None), Emit(fresh, None)))
            raise UnabstractableValueUse(
                f"signal {stmt.signal!r} is emitted with a computed value"
            )
        if isinstance(stmt, If):
            if _contains_sigval(stmt.cond):
                arms = ((self._cond_to_sig_expr(stmt.cond), self.walk(stmt.then)),)
                orelse = None if stmt.orelse is None else self.walk(stmt.orelse)
                return Present(arms, orelse)
            orelse = None if stmt.orelse is None else self.walk(stmt.orelse)
            return If(stmt.cond, self.walk(stmt.then), orelse)
        if isinstance(stmt, Present):
            arms = tuple((cond, self.walk(body)) for cond, body in stmt.arms)
            orelse = None if stmt.orelse is None else self.walk(stmt.orelse)
            return Present(arms, orelse)
        if isinstance(stmt, Seq):
            return Seq(tuple(self.walk(c) for c in stmt.children))
        if isinstance(stmt, Par):
            return Par(tuple(self.walk(c) for c in stmt.children))
        if isinstance(stmt, Loop):
            return Loop(self.walk(stmt.body))
        if isinstance(stmt, WeakAbort):
            return WeakAbort(self.walk(stmt.body), stmt.signal, stmt.immediate)
        if isinstance(stmt, Abort):
            return Abort(self.walk(stmt.body), stmt.signal, stmt.immediate)
        if isinstance(stmt, EveryImmediate):
            return EveryImmediate(stmt.signal, self.walk(stmt.body))
        if isinstance(stmt, VarDecl):
            self._check_value_free(stmt.init, f"the init of variable {stmt.name!r}")
            return VarDecl(stmt.name, stmt.init, self.walk(stmt.body))
        if isinstance(stmt, Assign):
            self._check_value_free(stmt.expr, f"an assignment to {stmt.name!r}")
            return stmt
        return stmt  # Nothing, Pause, Await


def _vars_alive(stmt: Stmt) -> set[str]:
    """Variables that are read or written anywhere below stmt."""

    def expr_vars(expr) -> set[str]:
        if isinstance(expr, VarRef):
            return {expr.name}
        if isinstance(expr, (BinOp, Cmp)):
            return expr_vars(expr.left) | expr_vars(expr.right)
        if isinstance(expr, (BoolAnd, BoolOr)):
            out: set[str] = set()
            for item in expr.items:
                out |= expr_vars(item)
            return out
        if isinstance(expr, BoolNot):
            return expr_vars(expr.item)
        return set()

    alive: set[str] = set()
    if isinstance(stmt, Assign):
        alive |= {stmt.name} | expr_vars(stmt.expr)
    if isinstance(stmt, VarDecl):
        alive |= expr_vars(stmt.init)
    if isinstance(stmt, If):
        alive |= expr_vars(stmt.cond)
    if isinstance(stmt, Emit) and stmt.value is not None:
        alive |= expr_vars(stmt.value)
    if isinstance(stmt, Seq) or isinstance(stmt, Par):
        for child in stmt.children:
            alive |= _vars_alive(child)
        return alive
    if isinstance(stmt, Present):
        for _, body in stmt.arms:
            alive |= _vars_alive(body)
        if stmt.orelse is not None:
            alive |= _vars_alive(stmt.orelse)
        return alive
    if isinstance(stmt, (Loop, WeakAbort, Abort, EveryImmediate, VarDecl)):
        return alive | _vars_alive(stmt.body)
    if isinstance(stmt, If):
        alive |= _vars_alive(stmt.then)
        if stmt.orelse is not None:
            alive |= _vars_alive(stmt.orelse)
        return alive
    return alive


def _strip_dead_lets(stmt: Stmt) -> Stmt:
    if isinstance(stmt, VarDecl):
        body = _strip_dead_lets(stmt.body)
        if stmt.name not in _vars_alive(body):
            return body
        return VarDecl(stmt.name, stmt.init, body)
    if isinstance(stmt, Seq):
        return Seq(tuple(_strip_dead_lets(c) for c in stmt.children))
    if isinstance(stmt, Par):
        return Par(tuple(_strip_dead_lets(c) for c in stmt.children))
    if isinstance(stmt, Present):
        arms = tuple((cond, _strip_dead_lets(body)) for cond, body in stmt.arms)
        orelse = None if stmt.orelse is None else _strip_dead_lets(stmt.orelse)
        return Present(arms, orelse)
    if isinstance(stmt, Loop):
        return Loop(_strip_dead_lets(stmt.body))
    if isinstance(stmt, WeakAbort):
        return WeakAbort(_strip_dead_lets(stmt.body), stmt.signal, stmt.immediate)
    if isinstance(stmt, Abort):
        return Abort(_strip_dead_lets(stmt.body), stmt.signal, stmt.immediate)
    if isinstance(stmt, EveryImmediate):
        return EveryImmediate(stmt.signal, _strip_dead_lets(stmt.body))
    if isinstance(stmt, If):
        orelse = None if stmt.orelse is None else _strip_dead_lets(stmt.orelse)
        return If(stmt.cond, _strip_dead_lets(stmt.then), orelse)
    return stmt


def abstract_valued_tests(program: Program) -> tuple[Program, TestSignalMap]:
    """Rewrite a valued program into a pure-signal one.

    Each distinct comparison over signal values becomes one fresh pure
    input whose presence stands for the comparison being true; each
    constant-valued emission keeps its presence and additionally raises
    a fresh output naming the constant.  Programs that are already pure
    come back unchanged with an empty map.
    """
    if all(s.kind is SignalKind.PURE for s in program.signals):
        return program, TestSignalMap({}, {})

    ab = _Abstraction(program)
    body = _strip_dead_lets(ab.walk(program.body))

    signals = [
        SignalDecl(s.name, SignalKind.PURE, s.direction) for s in program.signals
    ]
    signals += [
        SignalDecl(name, SignalKind.PURE, Direction.INPUT)
        for name in ab.comparisons
    ]
    signals += [
        SignalDecl(name, SignalKind.PURE, Direction.OUTPUT)
        for name in ab.const_outputs
    ]
    pure = Program(program.name, tuple(signals), body)
    return pure, TestSignalMap(ab.comparisons, ab.const_outputs)


# ---------------------------------------------------------------------------
# Extraction


def _reject_impure(program: Program) -> None:
    for s in program.signals:
        if s.kind is not SignalKind.PURE:
            raise NotPureProgram(
                f"signal {s.name!r} is valued; abstract it away before extraction"
            )

    def scan(stmt: Stmt) -> None:
        if isinstance(stmt, (VarDecl, Assign, If)):
            raise NotPureProgram(
                "the program still contains variables or value-dependent "
                "branches; its states are not a pure signal machine"
            )
        if isinstance(stmt, (Seq, Par)):
            for child in stmt.children:
                scan(child)
        elif isinstance(stmt, Present):
            for _, body in stmt.arms:
                scan(body)
            if stmt.orelse is not None:
                scan(stmt.orelse)
        elif isinstance(stmt, (Loop, WeakAbort, Abort, EveryImmediate)):
            scan(stmt.body)

    scan(program.body)


def extract_automaton(program: Program, max_states: int = 10**6) -> MealyAutomaton:
    """Breadth-first exploration of the reachable tick states.

    Every subset of the declared inputs is tried from every reachable
    state, so the result is complete and deterministic by construction.
    State ids follow discovery order, which makes the numbering canonical
    for a given program.
    """
    _reject_impure(program)
    diagnostics = validate_program(program)
    if diagnostics:
        raise ValueError(
            "program fails static checks: "
            + "; ".join(str(d) for d in diagnostics)
        )

    inputs = program.input_names()
    outputs = program.output_names()
    out_bit = {name: 1 << i for i, name in enumerate(outputs)}
    n_letters = 1 << len(inputs)

    start = ExecState.initial(program)
    ids: dict = {start.key(): 0}
    pool = [start]
    rows: list[tuple[tuple[int, int], ...]] = []

    cursor = 0
    while cursor < len(pool):
        state = pool[cursor]
        cursor += 1
        row = []
        for mask in range(n_letters):
            letter = {
                inputs[i]: None for i in range(len(inputs)) if mask >> i & 1
            }
            result = run_tick(state, letter)
            out_mask = 0
            for name in result.outputs:
                out_mask |= out_bit[name]
            key = result.state.key()
            nxt = ids.get(key)
            if nxt is None:
                nxt = len(pool)
                if nxt >= max_states:
                    raise StateExplosion(max_states)
                ids[key] = nxt
                pool.append(result.state)
            row.append((out_mask, nxt))
        rows.append(tuple(row))

    return MealyAutomaton(tuple(inputs), tuple(outputs), tuple(rows), 0)


# ---------------------------------------------------------------------------
# Bisimulation minimization


def minimize(a: MealyAutomaton) -> MealyAutomaton:
    """Quotient by the coarsest bisimulation and renumber canonically.

    For deterministic complete Mealy machines bisimilarity coincides with
    equality of the input/output behavior, so the partition starts from
    the per-state output function and refines on successor blocks until
    stable.  The result is renumbered breadth-first from the initial
    state, visiting letters in mask order, which makes the output unique
    for a given behavior.
    """
    n = a.n_states
    out_rows = [tuple(om for om, _ in row) for row in a.transitions]

    block = [0] * n
    seen: dict = {}
    for s in range(n):
        block[s] = seen.setdefault(out_rows[s], len(seen))

    while True:
        refined: dict = {}
        new_block = [0] * n
        for s in range(n):
            key = (block[s], tuple(block[nxt] for _, nxt in a.transitions[s]))
            new_block[s] = refined.setdefault(key, len(refined))
        if len(refined) == len(set(block)):
            break
        block = new_block

    rep: dict[int, int] = {}
    for s in range(n - 1, -1, -1):
        rep[block[s]] = s  # smallest state index represents the block

    start_block = block[a.initial]
    renum = {start_block: 0}
    order = [start_block]
    i = 0
    while i < len(order):
        b = order[i]
        i += 1
        for _, nxt in a.transitions[rep[b]]:
            nb = block[nxt]
            if nb not in renum:
                renum[nb] = len(order)
                order.append(nb)

    rows = []
    for b in order:
        row = tuple(
            (om, renum[block[nxt]]) for om, nxt in a.transitions[rep[b]]
        )
        rows.append(row)

    return MealyAutomaton(a.inputs, a.outputs, tuple(rows), 0)


# ---------------------------------------------------------------------------
# Rendering


def _edge_label(a: MealyAutomaton, in_mask: int, out_mask: int) -> str:
    left = " ".join("?" + n for n in a.input_names(in_mask))
    right = " ".join("!" + n for n in a.output_names(out_mask))
    return f"{left} / {right}".strip()


def export_dot(a: MealyAutomaton) -> str:
    """Graphviz rendering, one edge per (state, input letter).

    Byte-stable for a given automaton: states and letters are walked in
    numeric order and nothing depends on hashing.
    """
    lines = [
        "digraph mealy {",
        "  rankdir=LR;",
        "  node [shape=circle];",
        "  init [shape=point];",
        f"  init -> s{a.initial};",
    ]
    for s, row in enumerate(a.transitions):
        for mask, (out_mask, nxt) in enumerate(row):
            lines.append(
                f'  s{s} -> s{nxt} [label="{_edge_label(a, mask, out_mask)}"];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_listing(a: MealyAutomaton) -> str:
    """Plain-text transition table: state TAB inputs TAB outputs TAB next."""
    lines = []
    for s, row in enumerate(a.transitions):
        for mask, (out_mask, nxt) in enumerate(row):
            ins = ",".join(a.input_names(mask)) or "-"
            outs = ",".join(a.output_names(out_mask)) or "-"
            lines.append(f"{s}\t{ins}\t{outs}\t{nxt}")
    return "\n".join(lines) + "\n"
