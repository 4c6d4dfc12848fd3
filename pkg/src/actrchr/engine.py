"""Abstract operational semantics of production-rule models.

States carry a chunk store, buffer contents with a binary delay flag and a
multiset of ground facts.  Two transition kinds exist: applying a matched
rule (modifications and requests, combined per effect) and the no-rule
step that reveals one pending buffer.  :func:`explore` builds the reachable
labelled transition graph breadth-first, deduplicating states either
exactly or up to canonical renaming of fresh chunk identifiers.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .core import (
    FRESH_PREFIX,
    IdGen,
    NIL,
    Chunk,
    ChunkStore,
    Symbol,
    TypeTable,
    Value,
    Variable,
    is_fresh_id,
    merge,
)
from .model import (
    AbstractState,
    Action,
    Atom,
    BufferTest,
    MODIFY,
    Model,
    Pair,
    Rule,
)


class EngineError(Exception):
    """Semantic precondition violated while running a model."""


class MissingIncumbent(EngineError):
    """An action addressed a buffer the state does not carry."""


class NoHandler(EngineError):
    """A request addressed a buffer without a configured handler."""


class DomainOverlap(EngineError):
    """Two combined effects set the same buffer."""


NO_LABEL = "no"


def apply_label(rule_name: str) -> str:
    return f"apply({rule_name})"


# ---------------------------------------------------------------------------
# substitutions and matching


@dataclass(frozen=True, slots=True)
class Substitution:
    """Finite map from rule variables to chunk identifiers."""

    pairs: tuple[tuple[Variable, Symbol], ...]

    @staticmethod
    def make(mapping: Mapping[Variable, Symbol]) -> "Substitution":
        return Substitution(tuple(sorted(mapping.items(), key=lambda p: p[0].name)))

    def get(self, v: Variable) -> Symbol | None:
        for var, val in self.pairs:
            if var == v:
                return val
        return None

    def apply(self, value: Value) -> Value:
        if isinstance(value, Variable):
            bound = self.get(value)
            return value if bound is None else bound
        return value

    def apply_pairs(self, pairs: Iterable[Pair]) -> tuple[Pair, ...]:
        return tuple((s, self.apply(v)) for s, v in pairs)

    def as_dict(self) -> dict[Variable, Symbol]:
        return dict(self.pairs)


def match_rule(rule: Rule, state: AbstractState) -> Substitution | None:
    """The unique binding of the rule's variables in the state, or None.

    Every tested buffer must hold a visible (delay 0) chunk of the tested
    type whose slot values agree with the test pairs.
    """
    bindings: dict[Variable, Symbol] = {}
    for t in rule.tests:
        try:
            cid, delay = state.buffer(t.buffer)
        except KeyError:
            return None
        if delay != 0:
            return None
        chunk = state.store.get(cid)
        if chunk is None or chunk.type != t.type:
            return None
        for s, v in t.pairs:
            actual = chunk.value(s)
            if actual is None:
                return None
            if isinstance(v, Variable):
                bound = bindings.get(v)
                if bound is None:
                    bindings[v] = actual
                elif bound != actual:
                    return None
            elif v != actual:
                return None
    return Substitution.make(bindings)


def select(state: AbstractState, rules: Iterable[Rule]) -> list[tuple[Rule, Substitution]]:
    """All rules applicable in the state, with their bindings."""
    out = []
    for r in rules:
        theta = match_rule(r, state)
        if theta is not None:
            out.append((r, theta))
    return out


# ---------------------------------------------------------------------------
# set normal form


class _Dropped:
    """Marker for rules that cannot match any state."""

    def __repr__(self) -> str:
        return "Dropped"


DROPPED = _Dropped()

_NORMAL_VAR_PREFIX = "V#"


def _dedup(pairs: Iterable[Pair]) -> list[Pair]:
    return list(dict.fromkeys(pairs))


def _merge_tests(rule: Rule) -> list[BufferTest] | _Dropped:
    """Union same-buffer tests; two types on one buffer can never match."""
    order: list[Symbol] = []
    merged: dict[Symbol, tuple[Symbol, list[Pair]]] = {}
    for t in rule.tests:
        entry = merged.get(t.buffer)
        if entry is None:
            order.append(t.buffer)
            merged[t.buffer] = (t.type, _dedup(t.pairs))
        elif entry[0] != t.type:
            return DROPPED
        else:
            entry[1].extend(p for p in t.pairs if p not in entry[1])
    return [
        BufferTest(b, merged[b][0], tuple(merged[b][1]), None) for b in order
    ]


def _subst_rule(tests: list[BufferTest], actions: tuple[Action, ...], theta: dict[Variable, Value]):
    def sub(v: Value) -> Value:
        return theta.get(v, v) if isinstance(v, Variable) else v

    new_tests = [
        BufferTest(t.buffer, t.type, tuple(_dedup((s, sub(v)) for s, v in t.pairs)), t.span)
        for t in tests
    ]
    new_actions = tuple(
        Action(a.kind, a.buffer, a.type, tuple((s, sub(v)) for s, v in a.pairs), a.span)
        for a in actions
    )
    return new_tests, new_actions


def set_normal_form(rule: Rule, types: TypeTable):
    """Rewrite a rule so every test carries exactly one pair per slot.

    Missing slots gain fresh variables, duplicated slots collapse by
    substituting the shared value through the whole rule, and rules that
    pin one slot to two distinct constants are returned as :data:`DROPPED`
    because no state can satisfy them.  The rewritten rule matches exactly
    the states the original matches.
    """
    merged = _merge_tests(rule)
    if merged is DROPPED:
        return DROPPED
    tests = merged
    actions = rule.actions
    fresh = 0

    while True:
        collapse: tuple[Symbol, Symbol, list[Value]] | None = None
        for t in tests:
            for s in types.slots(t.type):
                vs = [v for slot, v in t.pairs if slot == s]
                if len(vs) > 1:
                    collapse = (t.buffer, s, vs)
                    break
            if collapse:
                break
        if collapse is None:
            break
        _, _, vs = collapse
        consts = [v for v in vs if isinstance(v, Symbol)]
        if len(set(consts)) > 1:
            return DROPPED
        if consts:
            target: Value = consts[0]
        else:
            target = Variable(f"{_NORMAL_VAR_PREFIX}{fresh}")
            fresh += 1
        theta = {v: target for v in vs if isinstance(v, Variable) and v != target}
        tests, actions = _subst_rule(tests, actions, theta)

    filled = []
    for t in tests:
        pairs = list(t.pairs)
        present = {s for s, _ in pairs}
        for s in types.slots(t.type):
            if s not in present:
                pairs.append((s, Variable(f"{_NORMAL_VAR_PREFIX}{fresh}")))
                fresh += 1
        index = {s: k for k, s in enumerate(types.slots(t.type))}
        pairs.sort(key=lambda p: index.get(p[0], len(index)))
        filled.append(BufferTest(t.buffer, t.type, tuple(pairs), t.span))
    return Rule(rule.name, tuple(filled), actions, rule.span)


def is_normal_form(rule: Rule, types: TypeTable) -> bool:
    seen_buffers = set()
    for t in rule.tests:
        if t.buffer in seen_buffers:
            return False
        seen_buffers.add(t.buffer)
        slots = types.slots(t.type)
        counts = {s: 0 for s in slots}
        for s, _ in t.pairs:
            if s not in counts:
                return False
            counts[s] += 1
        if any(c != 1 for c in counts.values()):
            return False
    return True


def normalize_model(model: Model) -> Model:
    """Normalize every rule; rules that can never match are removed."""
    rules = []
    for r in model.rules:
        n = set_normal_form(r, model.types)
        if n is not DROPPED:
            rules.append(n)
    return Model(
        types=model.types,
        chunks=model.chunks,
        dm=model.dm,
        buffers=model.buffers,
        init=model.init,
        rules=tuple(rules),
    )


# ---------------------------------------------------------------------------
# actions and effects


@dataclass(frozen=True, slots=True)
class Effect:
    """Partial successor description: new chunks, buffer updates, facts."""

    store: ChunkStore
    gamma: tuple[tuple[Symbol, Symbol, int], ...]
    atoms: tuple[Atom, ...]

    @staticmethod
    def make(
        store: ChunkStore,
        gamma: Mapping[Symbol, tuple[Symbol, int]],
        atoms: Iterable[Atom] = (),
    ) -> "Effect":
        rows = tuple(sorted(((b, c, d) for b, (c, d) in gamma.items()), key=lambda r: r[0].name))
        return Effect(store, rows, tuple(atoms))

    def buffers(self) -> set[Symbol]:
        return {b for b, _, _ in self.gamma}


EMPTY_EFFECT = Effect(ChunkStore(), (), ())


@dataclass(frozen=True, slots=True)
class Answer:
    """One request result: chunk content, delay and extra facts."""

    type: Symbol
    val: tuple[tuple[Symbol, Symbol], ...]
    delay: int = 1
    atoms: tuple[Atom, ...] = ()


Handler = Callable[[Symbol, tuple[Pair, ...], AbstractState], list[Answer]]


def declarative_retrieval(
    type: Symbol, pairs: tuple[Pair, ...], state: AbstractState
) -> list[Answer]:
    """Default handler: every declarative-memory chunk of the requested
    type whose slots agree with the request, delivered pending."""
    out = []
    for atom in state.upsilon:
        if atom.pred != "dm" or len(atom.args) != 1:
            continue
        chunk = state.store.get(atom.args[0])
        if chunk is None or chunk.type != type:
            continue
        if all(chunk.value(s) == v for s, v in pairs):
            out.append(Answer(chunk.type, chunk.pairs, 1, ()))
    return out


FAIL_NIL = "nil"
FAIL_STUCK = "stuck"


@dataclass
class ArchitectureConfig:
    """Pluggable pieces of the machine: request handlers and the policy
    for requests that produce no answer."""

    handlers: dict[Symbol, Handler] = field(default_factory=dict)
    default_handler: Optional[Handler] = declarative_retrieval
    fail_request: str = FAIL_NIL

    def handler_for(self, buffer: Symbol) -> Optional[Handler]:
        return self.handlers.get(buffer, self.default_handler)


def _ground_pairs(action: Action) -> tuple[tuple[Symbol, Symbol], ...]:
    for s, v in action.pairs:
        if not isinstance(v, Symbol):
            raise EngineError(f"unbound variable {v!r} in action on {action.buffer}")
    return action.pairs  # type: ignore[return-value]


def interpret_modification(
    action: Action, state: AbstractState, ids: IdGen
) -> list[Effect]:
    """Replace the buffer's chunk by a fresh-id copy with updated slots.

    Update values that do not name a chunk of the store fall back to nil;
    update slots outside the incumbent's type are ignored.
    """
    updates = dict(_ground_pairs(action))
    try:
        cid, _ = state.buffer(action.buffer)
    except KeyError:
        raise MissingIncumbent(f"no buffer {action.buffer}") from None
    incumbent = state.store.get(cid)
    if incumbent is None:
        raise MissingIncumbent(f"buffer {action.buffer} holds unknown chunk {cid}")
    new_pairs = []
    for s, old in incumbent.pairs:
        if s in updates:
            v = updates[s]
            new_pairs.append((s, v if v in state.store else NIL))
        else:
            new_pairs.append((s, old))
    fresh = ids.fresh()
    copy = Chunk(fresh, incumbent.type, new_pairs)
    return [Effect.make(ChunkStore([copy]), {action.buffer: (fresh, 0)})]


def interpret_request(
    action: Action, state: AbstractState, config: ArchitectureConfig, ids: IdGen
) -> list[Effect]:
    """One effect per handler answer, each under a fresh identifier.

    An empty answer set either parks the nil chunk pending in the buffer
    (fail_request="nil", the default) or yields no effect at all
    (fail_request="stuck"), in which case the rule produces no transition.
    """
    handler = config.handler_for(action.buffer)
    if handler is None:
        raise NoHandler(f"no request handler for buffer {action.buffer}")
    pairs = _ground_pairs(action)
    effects = []
    for ans in handler(action.type, pairs, state):
        fresh = ids.fresh()
        chunk = Chunk(fresh, ans.type, ans.val)
        delay = 1 if ans.delay > 0 else 0
        effects.append(
            Effect.make(ChunkStore([chunk]), {action.buffer: (fresh, delay)}, ans.atoms)
        )
    if effects:
        return effects
    if config.fail_request == FAIL_NIL:
        return [Effect.make(ChunkStore(), {action.buffer: (NIL, 1)})]
    return []


def interpret_action(
    action: Action, state: AbstractState, config: ArchitectureConfig, ids: IdGen
) -> list[Effect]:
    if action.kind == MODIFY:
        return interpret_modification(action, state, ids)
    return interpret_request(action, state, config, ids)


def combine_effects(left: Effect, right: Effect) -> Effect:
    """Glue two effects: merged stores, disjoint buffer updates, joined
    facts.  The merge id map carries identifier updates into gamma."""
    overlap = left.buffers() & right.buffers()
    if overlap:
        raise DomainOverlap(f"effects overlap on buffers {sorted(overlap, key=str)}")
    store, idmap = merge(left.store, right.store)
    gamma = {b: (idmap.apply(c), d) for b, c, d in left.gamma}
    gamma.update({b: (idmap.apply(c), d) for b, c, d in right.gamma})
    return Effect.make(store, gamma, left.atoms + right.atoms)


def interpret_rule(
    rule: Rule,
    theta: Substitution,
    state: AbstractState,
    config: ArchitectureConfig,
    ids: IdGen,
) -> list[Effect]:
    """All combined effects of the rule's actions under the binding.

    Actions are interpreted independently in the given state and their
    effect sets combined pairwise; sequential fresh identifiers keep the
    partial stores disjoint.  The result is non-empty unless a request
    comes back empty under fail_request="stuck".
    """
    combos = [EMPTY_EFFECT]
    for action in rule.actions:
        ground = Action(action.kind, action.buffer, action.type, theta.apply_pairs(action.pairs))
        parts = interpret_action(ground, state, config, ids)
        combos = [combine_effects(acc, part) for acc in combos for part in parts]
        if not combos:
            return []
    return combos


# ---------------------------------------------------------------------------
# transitions


def apply_transition(state: AbstractState, effect: Effect) -> AbstractState:
    """Successor state: merged store, updated buffers, grown fact set."""
    store, idmap = merge(state.store, effect.store)
    gamma = state.gamma_map()
    for b, c, d in effect.gamma:
        gamma[b] = (idmap.apply(c), d)
    return AbstractState.make(store, gamma, state.upsilon + effect.atoms)


def no_rule_successors(state: AbstractState) -> list[tuple[str, AbstractState]]:
    """One successor per pending buffer, revealing exactly that buffer."""
    out = []
    for b, c, d in state.gamma:
        if d > 0:
            gamma = state.gamma_map()
            gamma[b] = (c, 0)
            out.append((NO_LABEL, AbstractState.make(state.store, gamma, state.upsilon)))
    return out


def fresh_gen_for(state: AbstractState) -> IdGen:
    """Generator whose identifiers avoid every fresh id in the state."""
    high = 0

    def bump(s: Symbol) -> None:
        nonlocal high
        if is_fresh_id(s):
            tail = s.name[len(FRESH_PREFIX):]
            if tail.isdigit():
                high = max(high, int(tail) + 1)

    for chunk in state.store:
        bump(chunk.id)
        for _, v in chunk.pairs:
            bump(v)
    for _, c, _ in state.gamma:
        bump(c)
    for atom in state.upsilon:
        for a in atom.args:
            bump(a)
    return IdGen(high)


def successors(
    state: AbstractState,
    model: Model,
    config: ArchitectureConfig | None = None,
    ids: IdGen | None = None,
) -> list[tuple[str, AbstractState]]:
    """Labelled successor set: apply(<rule>) edges, then no edges."""
    config = config or ArchitectureConfig()
    ids = ids or fresh_gen_for(state)
    out = []
    for rule, theta in select(state, model.rules):
        for effect in interpret_rule(rule, theta, state, config, ids):
            out.append((apply_label(rule.name), apply_transition(state, effect)))
    out.extend(no_rule_successors(state))
    return out


def is_final(
    state: AbstractState, model: Model, config: ArchitectureConfig | None = None
) -> bool:
    return not successors(state, model, config)


# ---------------------------------------------------------------------------
# canonical renaming and exploration


def canonical_renaming(
    state: AbstractState, buffer_order: Iterable[Symbol], types: TypeTable
) -> dict[Symbol, Symbol]:
    """Injective renaming of fresh identifiers, stable across runs.

    Chunks reachable from the buffers are traversed in buffer declaration
    order following slots in type order; leftover fresh chunks are ordered
    by content.  Parsed identifiers are never renamed, and parsed chunks
    never point at fresh ones, so the map is total on fresh identifiers.
    """
    seen: set[Symbol] = set()
    ren: dict[Symbol, Symbol] = {}

    def visit(cid: Symbol) -> None:
        if cid in seen:
            return
        seen.add(cid)
        if is_fresh_id(cid):
            ren[cid] = Symbol(f"{FRESH_PREFIX}{len(ren)}")
        chunk = state.store.get(cid)
        if chunk is None:
            return
        if types.has(chunk.type):
            for s in types.slots(chunk.type):
                v = chunk.value(s)
                if v is not None:
                    visit(v)
        else:
            for _, v in chunk.pairs:
                visit(v)

    order = list(buffer_order)
    gamma = state.gamma_map()
    for b in order:
        if b in gamma:
            visit(gamma[b][0])
    for b, (c, _) in gamma.items():
        if b not in order:
            visit(c)

    def stale_key(chunk: Chunk):
        vals = []
        for s, v in chunk.pairs:
            if v in ren:
                vals.append((s.name, ren[v].name))
            elif is_fresh_id(v):
                vals.append((s.name, "￿" + v.name))
            else:
                vals.append((s.name, v.name))
        return (chunk.type.name, tuple(vals), chunk.id.name)

    stale = [c for c in state.store if c.id not in seen and is_fresh_id(c.id)]
    for chunk in sorted(stale, key=stale_key):
        ren[chunk.id] = Symbol(f"{FRESH_PREFIX}{len(ren)}")
    return ren


def canonical_key(
    state: AbstractState, buffer_order: Iterable[Symbol], types: TypeTable
):
    """Hashable form of a state, equal for states that differ only in the
    choice of fresh identifiers."""
    ren = canonical_renaming(state, buffer_order, types)

    def rid(s: Symbol) -> str:
        return ren.get(s, s).name

    chunks = tuple(
        sorted(
            (rid(c.id), c.type.name, tuple((s.name, rid(v)) for s, v in c.pairs))
            for c in state.store
        )
    )
    gamma = tuple((b.name, rid(c), d) for b, c, d in state.gamma)
    atoms = tuple(sorted((a.pred, tuple(rid(x) for x in a.args)) for a in state.upsilon))
    return (chunks, gamma, atoms)


def state_fingerprint(state: AbstractState, model: Model) -> str:
    """Short stable hash of the canonical state form."""
    key = canonical_key(state, model.buffers, model.types)
    return hashlib.sha256(repr(key).encode()).hexdigest()[:12]


DEDUP_EXACT = "exact"
DEDUP_CANONICAL = "canonical"


@dataclass
class Graph:
    """Reachable labelled transition graph; node 0 is the initial state."""

    states: list[AbstractState]
    edges: list[tuple[int, str, int]]
    truncated: bool = False

    def edge_labels(self, src: int) -> list[str]:
        return [l for s, l, _ in self.edges if s == src]


def explore(
    model: Model,
    config: ArchitectureConfig | None = None,
    depth: int = 16,
    dedup: str = DEDUP_CANONICAL,
    ids: IdGen | None = None,
    initial: AbstractState | None = None,
) -> Graph:
    """Breadth-first reachable graph up to the depth bound.

    ``dedup="canonical"`` identifies states up to fresh-identifier
    renaming; ``"exact"`` requires literal equality.  ``truncated`` is set
    when the frontier was still growing at the bound.
    """
    config = config or ArchitectureConfig()
    ids = ids or IdGen()
    start = initial if initial is not None else model.initial_state()

    if dedup == DEDUP_CANONICAL:
        def key(s: AbstractState):
            return canonical_key(s, model.buffers, model.types)
    elif dedup == DEDUP_EXACT:
        def key(s: AbstractState):
            return s
    else:
        raise ValueError(f"unknown dedup mode {dedup!r}")

    states = [start]
    index = {key(start): 0}
    edges: list[tuple[int, str, int]] = []
    edge_seen: set[tuple[int, str, int]] = set()
    frontier = [0]
    for _ in range(depth):
        if not frontier:
            break
        nxt: list[int] = []
        for si in frontier:
            for label, s2 in successors(states[si], model, config, ids):
                k = key(s2)
                j = index.get(k)
                if j is None:
                    j = len(states)
                    index[k] = j
                    states.append(s2)
                    nxt.append(j)
                e = (si, label, j)
                if e not in edge_seen:
                    edge_seen.add(e)
                    edges.append(e)
        frontier = nxt
    return Graph(states=states, edges=edges, truncated=bool(frontier))


def random_walk(
    model: Model,
    config: ArchitectureConfig | None = None,
    depth: int = 16,
    rng: random.Random | None = None,
    ids: IdGen | None = None,
) -> list[tuple[str, AbstractState]]:
    """Seeded derivation: pick uniformly among successors until no
    transition is possible or the depth bound is hit."""
    config = config or ArchitectureConfig()
    rng = rng or random.Random(0)
    ids = ids or IdGen()
    state = model.initial_state()
    steps = []
    for _ in range(depth):
        succ = successors(state, model, config, ids)
        if not succ:
            break
        label, state = rng.choice(succ)
        steps.append((label, state))
    return steps


def to_dot(graph: Graph, model: Model) -> str:
    """Graphviz text for an explored graph; deterministic for equal input."""
    lines = ["digraph model {", "  rankdir=LR;"]
    for i, s in enumerate(graph.states):
        shape = "doublecircle" if i == 0 else "circle"
        lines.append(
            f'  n{i} [shape={shape} label="{i}:{state_fingerprint(s, model)}"];'
        )
    for a, label, b in graph.edges:
        lines.append(f'  n{a} -> n{b} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
