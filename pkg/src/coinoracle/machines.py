"""Oracle Turing machines: description format, executor, catalog.

Description format, one directive per line, ``#`` starts a comment::

    states: <id> <id> ...
    start: <id>
    halt: <id>
    query: <id> yes=<id> no=<id>      # optional, at most one
    blank: _                          # optional, default _
    symbols: <sym> ...                # optional extra tape symbols
    delta: <state> <sym> -> <state> <sym> <L|R>

The tape alphabet always holds the blank, ``0``, ``1`` and the query marker
``μ`` (``mu`` is accepted as a spelling). In a ``delta`` row, ``*`` as the
read symbol covers every symbol the state has no explicit row for, and
``*`` as the written symbol writes back what was read.

Input ``m`` is written as ``m`` consecutive 1s starting under the head. The
output is the number of 1s on the tape at halt. To query the oracle the
machine writes exactly two ``μ`` and enters the query state; the number of
squares strictly between the marks is the query. The answer moves the
machine to its yes or no state without a step and without touching the tape.
"""

from __future__ import annotations

import importlib.resources
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import MachineSemanticError, MachineSyntaxError, MalformedQuery
from .oracle import OracleSet, SetOracle

MU = "μ"
DEFAULT_STEP_BUDGET = 10**6
_MOVES = {"L": -1, "R": 1}
_IDENT = re.compile(r"^[A-Za-z0-9_.\-]+$")


@dataclass(frozen=True)
class OMachine:
    states: tuple
    start: str
    halt: str
    blank: str
    alphabet: tuple
    transitions: dict = field(compare=False, hash=False)
    query: Optional[str] = None
    yes: Optional[str] = None
    no: Optional[str] = None
    name: str = ""

    def canonical_text(self) -> str:
        lines = [
            "states: " + " ".join(sorted(self.states)),
            f"start: {self.start}",
            f"halt: {self.halt}",
        ]
        if self.query is not None:
            lines.append(f"query: {self.query} yes={self.yes} no={self.no}")
        lines.append(f"blank: {self.blank}")
        extra = sorted(set(self.alphabet) - {self.blank, "0", "1", MU})
        if extra:
            lines.append("symbols: " + " ".join(extra))
        for (s, a), (t, b, mv) in sorted(self.transitions.items()):
            lines.append(f"delta: {s} {a} -> {t} {b} {'L' if mv < 0 else 'R'}")
        return "\n".join(lines) + "\n"


def _symbol(tok: str) -> str:
    return MU if tok in ("mu", MU) else tok


def parse_machine(text: str, name: str = "") -> OMachine:
    states: Optional[list[str]] = None
    start = halt = None
    query = yes = no = None
    blank = "_"
    extra: list[str] = []
    rows: list[tuple[int, str, str, str, str, int]] = []
    seen: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise MachineSyntaxError(lineno, f"expected '<directive>: ...', got {raw.strip()!r}")
        key, _, rest = line.partition(":")
        key = key.strip()
        toks = rest.split()
        if key in ("states", "start", "halt", "blank") and key in seen:
            raise MachineSemanticError(f"line {lineno}: duplicate '{key}' directive")
        if key == "states":
            if not toks:
                raise MachineSyntaxError(lineno, "empty state list")
            for t in toks:
                if not _IDENT.match(t):
                    raise MachineSyntaxError(lineno, f"bad state name {t!r}")
            states = toks
        elif key in ("start", "halt", "blank"):
            if len(toks) != 1:
                raise MachineSyntaxError(lineno, f"'{key}' takes exactly one value")
            if key == "start":
                start = toks[0]
            elif key == "halt":
                halt = toks[0]
            else:
                blank = toks[0]
        elif key == "query":
            if query is not None:
                raise MachineSemanticError(f"line {lineno}: more than one query state")
            if not toks:
                raise MachineSyntaxError(lineno, "query needs a state name")
            query = toks[0]
            for t in toks[1:]:
                k, eq, v = t.partition("=")
                if not eq or k not in ("yes", "no") or not v:
                    raise MachineSyntaxError(lineno, f"bad query option {t!r}")
                if k == "yes":
                    yes = v
                else:
                    no = v
        elif key == "symbols":
            extra.extend(_symbol(t) for t in toks)
        elif key == "delta":
            parts = rest.split()
            if len(parts) != 6 or parts[2] != "->":
                raise MachineSyntaxError(lineno, "delta rows read '<state> <sym> -> <state> <sym> <L|R>'")
            s, a, _, t, b, mv = parts
            if mv not in _MOVES:
                raise MachineSyntaxError(lineno, f"move must be L or R, got {mv!r}")
            rows.append((lineno, s, _symbol(a), t, _symbol(b), _MOVES[mv]))
        else:
            raise MachineSyntaxError(lineno, f"unknown directive {key!r}")
        seen.add(key)

    if states is None:
        raise MachineSemanticError("missing 'states' directive")
    if start is None or halt is None:
        raise MachineSemanticError("machine needs both 'start' and 'halt'")
    state_set = set(states)
    if len(state_set) != len(states):
        raise MachineSemanticError("duplicate state names")

    def known(s: str, what: str) -> None:
        if s not in state_set:
            raise MachineSemanticError(f"{what} {s!r} is not a declared state")

    known(start, "start state")
    known(halt, "halt state")
    if query is not None:
        if yes is None or no is None:
            missing = "yes" if yes is None else "no"
            raise MachineSemanticError(f"query state {query!r} has no {missing}-answer state")
        known(query, "query state")
        known(yes, "yes-answer state")
        known(no, "no-answer state")
        if query in (yes, no, halt):
            raise MachineSemanticError("query state must differ from its answer states and the halt state")

    alphabet = [blank, "0", "1", MU]
    for sym in extra:
        if sym not in alphabet:
            alphabet.append(sym)
    if "*" in alphabet:
        raise MachineSemanticError("'*' is reserved for wildcard rows")

    explicit: dict[tuple[str, str], tuple[str, str, int]] = {}
    wild: dict[str, tuple[str, str, int]] = {}
    for lineno, s, a, t, b, mv in rows:
        known(s, f"line {lineno}: state")
        known(t, f"line {lineno}: state")
        if s in (halt, query):
            raise MachineSemanticError(f"line {lineno}: no transitions may leave {s!r}")
        for sym in (a, b):
            if sym != "*" and sym not in alphabet:
                raise MachineSemanticError(f"line {lineno}: symbol {sym!r} is not in the tape alphabet")
        if a == "*":
            if s in wild:
                raise MachineSemanticError(f"line {lineno}: second wildcard row for {s!r}")
            wild[s] = (t, b, mv)
        else:
            if b == "*":
                b = a
            if (s, a) in explicit:
                raise MachineSemanticError(f"line {lineno}: duplicate row for ({s}, {a})")
            explicit[(s, a)] = (t, b, mv)

    transitions = dict(explicit)
    for s, (t, b, mv) in wild.items():
        for sym in alphabet:
            if (s, sym) not in transitions:
                transitions[(s, sym)] = (t, sym if b == "*" else b, mv)

    # Every reachable (state, symbol) pair must have a row.
    reach = {start}
    frontier = [start]
    while frontier:
        s = frontier.pop()
        succ = [yes, no] if s == query else [t for (q, _), (t, _, _) in transitions.items() if q == s]
        for t in succ:
            if t not in reach:
                reach.add(t)
                frontier.append(t)
    for s in sorted(reach):
        if s in (halt, query):
            continue
        missing = [sym for sym in alphabet if (s, sym) not in transitions]
        if missing:
            raise MachineSemanticError(f"state {s!r} has no row for symbol(s) {', '.join(missing)}")

    return OMachine(
        states=tuple(states),
        start=start,
        halt=halt,
        blank=blank,
        alphabet=tuple(alphabet),
        transitions=transitions,
        query=query,
        yes=yes,
        no=no,
        name=name,
    )


def load_machine(path) -> OMachine:
    p = Path(path)
    return parse_machine(p.read_text(encoding="utf-8"), name=p.stem)


def load_fixture(name: str) -> OMachine:
    """Bundled machine: ``member`` or ``halt``."""
    res = importlib.resources.files("coinoracle") / "fixtures" / f"{name}.om"
    return parse_machine(res.read_text(encoding="utf-8"), name=name)


@dataclass(frozen=True)
class MachineRun:
    output: Optional[int]
    steps: int
    queries: tuple
    mode: str
    halted: bool
    tosses: int = 0

    @property
    def diverged(self) -> bool:
        return not self.halted

    def same_execution(self, other: "MachineRun") -> bool:
        """Equal apart from the mode label and coin usage."""
        return (self.output, self.steps, self.queries, self.halted) == (
            other.output,
            other.steps,
            other.queries,
            other.halted,
        )

    def as_dict(self) -> dict:
        return {
            "output": self.output,
            "steps": self.steps,
            "queries": [[n, a] for n, a in self.queries],
            "mode": self.mode,
            "halted": self.halted,
            "tosses": self.tosses,
        }


def _execute(m: OMachine, oracle, input_: int, step_budget: int, mode: str) -> MachineRun:
    if input_ < 0:
        raise ValueError("input must be a natural number")
    blank = m.blank
    tape: dict[int, str] = {i: "1" for i in range(input_)}
    head = 0
    state = m.start
    steps = 0
    queries: list[tuple[int, bool]] = []
    trans = m.transitions
    halted = False
    while True:
        if state == m.halt:
            halted = True
            break
        if state == m.query:
            marks = sorted(pos for pos, sym in tape.items() if sym == MU)
            if len(marks) != 2:
                raise MalformedQuery(f"query with {len(marks)} marker(s) on the tape, expected 2")
            n = marks[1] - marks[0] - 1
            if n < 1:
                raise MalformedQuery("adjacent markers: queries are positive integers")
            ans = bool(oracle.query(n))
            queries.append((n, ans))
            state = m.yes if ans else m.no
            continue
        if steps >= step_budget:
            break
        state, write, move = trans[(state, tape.get(head, blank))]
        if write == blank:
            tape.pop(head, None)
        else:
            tape[head] = write
        head += move
        steps += 1
    output = sum(1 for sym in tape.values() if sym == "1") if halted else None
    tosses = getattr(oracle, "tosses_total", 0)
    return MachineRun(output, steps, tuple(queries), mode, halted, tosses)


def run_ground_truth(m: OMachine, X: OracleSet, input_: int, step_budget: int = DEFAULT_STEP_BUDGET) -> MachineRun:
    return _execute(m, SetOracle(X), input_, step_budget, "ground-truth")


def run_with_coin(
    m: OMachine,
    oracle,
    input_: int,
    j: Optional[int] = None,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> MachineRun:
    """Execute with query answers from ``oracle`` (normally a :class:`CoinOracle`)."""
    oj = getattr(oracle, "j", None)
    if j is not None and oj is not None and oj != j:
        raise ValueError(f"oracle was built at j={oj}, run asked for j={j}")
    return _execute(m, oracle, input_, step_budget, "coin-backed")


class MachineCatalog:
    """Machines indexed in shortlex order of their canonical text."""

    def __init__(self, machines: Sequence[OMachine]):
        keyed = sorted(machines, key=lambda mm: (len(mm.canonical_text()), mm.canonical_text()))
        self.machines = tuple(keyed)

    @classmethod
    def from_directory(cls, path) -> "MachineCatalog":
        files = sorted(Path(path).glob("*.om"))
        if not files:
            raise FileNotFoundError(f"no .om files in {path}")
        return cls([load_machine(f) for f in files])

    def __len__(self) -> int:
        return len(self.machines)

    def __getitem__(self, n: int) -> OMachine:
        if not 0 <= n < len(self.machines):
            raise IndexError(f"machine index {n} out of range for catalog of {len(self.machines)}")
        return self.machines[n]


def universal_run(
    catalog: MachineCatalog,
    j: int,
    n: int,
    m: int,
    oracle,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> MachineRun:
    """Run catalog machine ``n`` on input ``m`` against ``oracle``."""
    return run_with_coin(catalog[n], oracle, m, j, step_budget)
