"""Chunks, chunk stores and the store merge operation.

A chunk is an immutable typed record whose slots hold identifiers of other
chunks.  A chunk store keeps finitely many chunks under pairwise distinct
identifiers; identifier lookup is total, falling back to the distinguished
empty chunk ``nil``.  Stores combine with :func:`merge`, an
id-deduplicating union: shared identifiers must carry equal chunks, and the
accompanying identifier map is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union


class CoreError(Exception):
    """Structural violation in a type table, chunk or store."""


class IdClash(CoreError):
    """Two stores disagree about the chunk behind a shared identifier."""


@dataclass(frozen=True, slots=True)
class Symbol:
    """An interned constant: chunk id, type, slot or buffer name."""

    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Variable:
    """A rule variable; never equal to a Symbol, whatever the name."""

    name: str

    def __repr__(self) -> str:
        return f"?{self.name}"


Value = Union[Symbol, Variable]

NIL = Symbol("nil")
CHUNK = Symbol("chunk")

#: Identifiers drawn from :class:`IdGen` start with this prefix.  The model
#: grammar cannot declare such identifiers, so fresh ones never collide
#: with parsed ones.
FRESH_PREFIX = "c#"


def is_fresh_id(sym: Symbol) -> bool:
    return sym.name.startswith(FRESH_PREFIX)


class IdGen:
    """Counter handing out fresh chunk identifiers c#0, c#1, ..."""

    __slots__ = ("count",)

    def __init__(self, count: int = 0) -> None:
        self.count = count

    def fresh(self) -> Symbol:
        sym = Symbol(f"{FRESH_PREFIX}{self.count}")
        self.count += 1
        return sym

    def __repr__(self) -> str:
        return f"IdGen({self.count})"


class TypeTable:
    """Declared chunk types with their ordered slot lists.

    Slot order is declaration order; it is the canonical order for every
    printed or encoded slot list.  The slotless built-in type ``chunk`` is
    always present and may be redeclared only identically.
    """

    __slots__ = ("_slots",)

    def __init__(self) -> None:
        self._slots: dict[Symbol, tuple[Symbol, ...]] = {CHUNK: ()}

    def declare(self, name: Symbol, slots: Iterable[Symbol]) -> None:
        slots = tuple(slots)
        if len(set(slots)) != len(slots):
            raise CoreError(f"duplicate slot in type {name}")
        known = self._slots.get(name)
        if known is not None and known != slots:
            raise CoreError(f"conflicting redeclaration of type {name}")
        self._slots[name] = slots

    def has(self, name: Symbol) -> bool:
        return name in self._slots

    def slots(self, name: Symbol) -> tuple[Symbol, ...]:
        try:
            return self._slots[name]
        except KeyError:
            raise CoreError(f"unknown type {name}") from None

    def names(self) -> tuple[Symbol, ...]:
        return tuple(self._slots)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TypeTable) and self._slots == other._slots

    def __repr__(self) -> str:
        return f"TypeTable({self._slots!r})"


class Chunk:
    """Immutable typed record; every slot value is a chunk identifier."""

    __slots__ = ("id", "type", "pairs")

    def __init__(
        self,
        id: Symbol,
        type: Symbol,
        val: Mapping[Symbol, Symbol] | Iterable[tuple[Symbol, Symbol]] = (),
    ) -> None:
        items = val.items() if isinstance(val, Mapping) else val
        self.id = id
        self.type = type
        self.pairs = tuple(sorted(items, key=lambda p: p[0].name))

    def value(self, slot: Symbol) -> Symbol | None:
        for s, v in self.pairs:
            if s == slot:
                return v
        return None

    def val(self) -> dict[Symbol, Symbol]:
        return dict(self.pairs)

    def content(self) -> tuple[Symbol, tuple[tuple[Symbol, Symbol], ...]]:
        """Type and slot values, identifier stripped."""
        return (self.type, self.pairs)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Chunk)
            and self.id == other.id
            and self.type == other.type
            and self.pairs == other.pairs
        )

    def __hash__(self) -> int:
        return hash((self.id, self.type, self.pairs))

    def __repr__(self) -> str:
        inner = ", ".join(f"{s}: {v}" for s, v in self.pairs)
        return f"{self.id}:{self.type}{{{inner}}}"


NIL_CHUNK = Chunk(NIL, CHUNK)


class ChunkStore:
    """Finite set of chunks with pairwise distinct identifiers.

    :meth:`id_inverse` is total: unknown identifiers resolve to the nil
    chunk.  State stores always contain ``nil`` itself (see
    :meth:`with_nil`); partial stores produced by actions need not.
    """

    __slots__ = ("_by_id",)

    def __init__(self, chunks: Iterable[Chunk] = ()) -> None:
        by_id: dict[Symbol, Chunk] = {}
        for c in chunks:
            old = by_id.get(c.id)
            if old is not None and old != c:
                raise CoreError(f"store: id {c.id} bound to {old!r} and {c!r}")
            by_id[c.id] = c
        self._by_id = by_id

    def ids(self) -> tuple[Symbol, ...]:
        return tuple(self._by_id)

    def chunks(self) -> tuple[Chunk, ...]:
        return tuple(self._by_id.values())

    def sorted_chunks(self) -> tuple[Chunk, ...]:
        return tuple(sorted(self._by_id.values(), key=lambda c: c.id.name))

    def get(self, id: Symbol) -> Chunk | None:
        return self._by_id.get(id)

    def id_inverse(self, id: Symbol) -> Chunk:
        return self._by_id.get(id, NIL_CHUNK)

    def with_nil(self) -> ChunkStore:
        if NIL in self._by_id:
            return self
        return ChunkStore([NIL_CHUNK, *self._by_id.values()])

    def __contains__(self, id: Symbol) -> bool:
        return id in self._by_id

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[Chunk]:
        return iter(self._by_id.values())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ChunkStore) and self._by_id == other._by_id

    def __hash__(self) -> int:
        return hash(frozenset(self._by_id.values()))

    def __repr__(self) -> str:
        return f"ChunkStore({list(self._by_id.values())!r})"


@dataclass(frozen=True, slots=True)
class IdMap:
    """Identifier map returned by a merge.

    Total on the identifiers of the merged store; for the union merge it is
    the identity everywhere, and in particular on the left operand.
    """

    pairs: tuple[tuple[Symbol, Symbol], ...] = ()

    def apply(self, id: Symbol) -> Symbol:
        for old, new in self.pairs:
            if old == id:
                return new
        return id


def merge(left: ChunkStore, right: ChunkStore) -> tuple[ChunkStore, IdMap]:
    """Union of two stores; a shared identifier must carry equal chunks.

    Raises :class:`IdClash` when the operands disagree about an identifier.
    The result keeps every chunk of ``left`` unchanged and adds the chunks
    of ``right`` under new identifiers only.
    """
    combined = dict(left._by_id)
    for c in right:
        mine = combined.get(c.id)
        if mine is None:
            combined[c.id] = c
        elif mine != c:
            raise IdClash(f"merge: id {c.id} bound to {mine!r} and {c!r}")
    return ChunkStore(combined.values()), IdMap()


def merge_all(stores: Iterable[ChunkStore]) -> tuple[ChunkStore, IdMap]:
    """Left fold of :func:`merge` starting from the empty store."""
    acc = ChunkStore()
    for s in stores:
        acc, _ = merge(acc, s)
    return acc, IdMap()
