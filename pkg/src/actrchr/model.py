"""Model syntax tree, abstract machine states and static validation.

A model declares chunk types, an initial chunk store, the declarative
memory subset, the buffer set with its initial contents, and production
rules.  :func:`validate` returns diagnostics instead of raising so a
front end can report every problem at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .core import Chunk, ChunkStore, NIL, Symbol, TypeTable, Value, Variable

#: A single slot test or slot update, e.g. ``current: X``.
Pair = tuple[Symbol, Value]

MODIFY = "modify"
REQUEST = "request"


@dataclass(frozen=True, slots=True)
class Span:
    """Line/column position of a syntax element (1-based)."""

    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True, slots=True)
class Atom:
    """Ground fact carried alongside the machine state, e.g. ``dm(b)``."""

    pred: str
    args: tuple[Symbol, ...]

    def __repr__(self) -> str:
        return f"{self.pred}({', '.join(a.name for a in self.args)})"


def dm_atom(id: Symbol) -> Atom:
    return Atom("dm", (id,))


def sort_atoms(atoms: Iterable[Atom]) -> tuple[Atom, ...]:
    return tuple(sorted(atoms, key=lambda a: (a.pred, [s.name for s in a.args])))


@dataclass(frozen=True)
class BufferTest:
    """LHS test: the buffer must hold a visible chunk of ``type`` whose
    slots agree with ``pairs``."""

    buffer: Symbol
    type: Symbol
    pairs: tuple[Pair, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Action:
    """RHS action; ``kind`` is ``modify`` (type stays anonymous) or
    ``request`` (typed)."""

    kind: str
    buffer: Symbol
    type: Optional[Symbol]
    pairs: tuple[Pair, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in (MODIFY, REQUEST):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind == MODIFY and self.type is not None:
            raise ValueError("modifications carry no type")


def pair_vars(pairs: Iterable[Pair]) -> set[Variable]:
    return {v for _, v in pairs if isinstance(v, Variable)}


@dataclass(frozen=True)
class Rule:
    name: str
    tests: tuple[BufferTest, ...]
    actions: tuple[Action, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    def lhs_vars(self) -> set[Variable]:
        out: set[Variable] = set()
        for t in self.tests:
            out |= pair_vars(t.pairs)
        return out

    def rhs_vars(self) -> set[Variable]:
        out: set[Variable] = set()
        for a in self.actions:
            out |= pair_vars(a.pairs)
        return out


@dataclass(frozen=True, slots=True)
class AbstractState:
    """A machine state: chunk store, buffer contents, ground facts.

    ``gamma`` is total on the model's buffers and maps each to a chunk
    identifier of ``store`` plus a delay flag (0 visible, 1 pending).
    Stored sorted by buffer name so equal states compare equal.
    """

    store: ChunkStore
    gamma: tuple[tuple[Symbol, Symbol, int], ...]
    upsilon: tuple[Atom, ...]

    @staticmethod
    def make(
        store: ChunkStore,
        gamma: Mapping[Symbol, tuple[Symbol, int]] | Iterable[tuple[Symbol, Symbol, int]],
        upsilon: Iterable[Atom] = (),
    ) -> "AbstractState":
        if isinstance(gamma, Mapping):
            rows = [(b, c, d) for b, (c, d) in gamma.items()]
        else:
            rows = list(gamma)
        store = store.with_nil()
        for b, c, d in rows:
            if c not in store:
                raise ValueError(f"buffer {b} holds unknown chunk id {c}")
            if d not in (0, 1):
                raise ValueError(f"buffer {b} has non-binary delay {d}")
        return AbstractState(
            store=store,
            gamma=tuple(sorted(rows, key=lambda r: r[0].name)),
            upsilon=sort_atoms(upsilon),
        )

    def buffers(self) -> tuple[Symbol, ...]:
        return tuple(b for b, _, _ in self.gamma)

    def buffer(self, b: Symbol) -> tuple[Symbol, int]:
        for name, c, d in self.gamma:
            if name == b:
                return (c, d)
        raise KeyError(f"no buffer {b}")

    def gamma_map(self) -> dict[Symbol, tuple[Symbol, int]]:
        return {b: (c, d) for b, c, d in self.gamma}

    def pending_buffers(self) -> tuple[Symbol, ...]:
        return tuple(b for b, _, d in self.gamma if d > 0)


@dataclass(frozen=True)
class Model:
    """A parsed model; use :func:`validate` before running it."""

    types: TypeTable
    chunks: tuple[Chunk, ...]
    dm: tuple[Symbol, ...]
    buffers: tuple[Symbol, ...]
    init: tuple[tuple[Symbol, Symbol, int], ...]
    rules: tuple[Rule, ...]

    def store(self) -> ChunkStore:
        return ChunkStore(self.chunks).with_nil()

    def initial_state(self) -> AbstractState:
        return AbstractState.make(
            self.store(),
            self.init,
            (dm_atom(i) for i in self.dm),
        )

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(f"no rule {name}")


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[Span] = field(default=None, compare=False)

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.code}: {self.message}"


def _complete_pairs(
    types: TypeTable, type: Symbol, given: Mapping[Symbol, Symbol]
) -> tuple[Pair, ...]:
    return tuple((s, given.get(s, NIL)) for s in types.slots(type))


def make_chunk(
    types: TypeTable, id: Symbol, type: Symbol, val: Mapping[Symbol, Symbol]
) -> Chunk:
    """Build a chunk whose value domain is exactly the type's slot list;
    unspecified slots default to nil."""
    return Chunk(id, type, _complete_pairs(types, type, val))


def validate(model: Model) -> list[Diagnostic]:
    """Static checks; an empty result means the model is runnable."""
    out: list[Diagnostic] = []
    ids = set()
    for c in model.chunks:
        if c.id in ids or c.id == NIL:
            out.append(
                Diagnostic("duplicate-chunk-id", f"chunk id {c.id} declared twice")
            )
        ids.add(c.id)
        if not model.types.has(c.type):
            out.append(Diagnostic("unknown-type", f"chunk {c.id} has type {c.type}"))
            continue
        slots = model.types.slots(c.type)
        extra = [s for s, _ in c.pairs if s not in slots]
        for s in extra:
            out.append(
                Diagnostic("unknown-slot", f"chunk {c.id}: slot {s} not in {c.type}")
            )
    ids.add(NIL)

    for i in model.dm:
        if i not in ids:
            out.append(Diagnostic("unknown-chunk", f"dm lists unknown chunk {i}"))

    declared = set()
    for b, c, _ in model.init:
        declared.add(b)
        if c not in ids:
            out.append(
                Diagnostic("unknown-chunk", f"buffer {b} starts with unknown chunk {c}")
            )

    for r in model.rules:
        for t in r.tests:
            if t.buffer not in declared:
                out.append(
                    Diagnostic(
                        "unknown-buffer",
                        f"rule {r.name} tests undeclared buffer {t.buffer}",
                        t.span,
                    )
                )
            if not model.types.has(t.type):
                out.append(
                    Diagnostic(
                        "unknown-type",
                        f"rule {r.name} tests type {t.type}",
                        t.span,
                    )
                )
            else:
                slots = model.types.slots(t.type)
                for s, _ in t.pairs:
                    if s not in slots:
                        out.append(
                            Diagnostic(
                                "unknown-slot",
                                f"rule {r.name}: slot {s} not in type {t.type}",
                                t.span,
                            )
                        )
        seen_action_buffers = set()
        for a in r.actions:
            if a.buffer in seen_action_buffers:
                out.append(
                    Diagnostic(
                        "duplicate-action-buffer",
                        f"rule {r.name} acts twice on buffer {a.buffer}",
                        a.span,
                    )
                )
            seen_action_buffers.add(a.buffer)
            if a.buffer not in declared:
                out.append(
                    Diagnostic(
                        "unknown-buffer",
                        f"rule {r.name} acts on undeclared buffer {a.buffer}",
                        a.span,
                    )
                )
            if a.kind == REQUEST:
                if not model.types.has(a.type):
                    out.append(
                        Diagnostic(
                            "unknown-type",
                            f"rule {r.name} requests type {a.type}",
                            a.span,
                        )
                    )
                else:
                    slots = model.types.slots(a.type)
                    for s, _ in a.pairs:
                        if s not in slots:
                            out.append(
                                Diagnostic(
                                    "unknown-slot",
                                    f"rule {r.name}: slot {s} not in type {a.type}",
                                    a.span,
                                )
                            )
        fresh_rhs = r.rhs_vars() - r.lhs_vars()
        for v in sorted(fresh_rhs, key=lambda v: v.name):
            out.append(
                Diagnostic(
                    "rhs-new-variable",
                    f"rule {r.name} uses {v.name} on the RHS only",
                    r.span,
                )
            )
    return out
