"""Embedded constraint-handling-rules engine.

Just enough CHR for translated production models: ground user-constraint
stores (``delta/1``, ``gamma/3``), simplification rules with guards, and a
fixed built-in theory (syntactic ``=``, numeric ``>``, list membership
``in``, plus ``action``, ``merge`` and ``map`` over encoded chunk stores).
States produced by a step are normalised representatives of their
equivalence class: solved guard and body built-ins are eliminated, only
uninterpreted ground facts stay in the built-in store.

:func:`state_equiv` decides state equivalence for toolchain states:
substitution closure, elimination of decided built-ins, chunk lists
compared as multisets, fresh chunk identifiers compared up to renaming,
all failed states equivalent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .core import (
    FRESH_PREFIX,
    IdGen,
    NIL,
    Chunk,
    ChunkStore,
    Symbol,
    TypeTable,
    Variable,
    is_fresh_id,
    merge_all,
)
from .engine import ArchitectureConfig, interpret_action
from .model import AbstractState, Action, Atom, MODIFY, REQUEST


class ChrError(Exception):
    """Malformed constraint or misuse of the built-in theory."""


class Undecided(ChrError):
    """A built-in left the decidable fragment (unbound inputs)."""


# ---------------------------------------------------------------------------
# terms

Term = Union[Symbol, Variable, int, "Compound", "TList"]


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class TList:
    items: tuple[Term, ...]


def tuple_term(*args: Term) -> Compound:
    """Tuples are compounds under the reserved functor ','."""
    return Compound(",", tuple(args))


Env = dict[Variable, Term]


def walk(t: Term, env: Env) -> Term:
    while isinstance(t, Variable) and t in env:
        t = env[t]
    return t


def subst(t: Term, env: Env) -> Term:
    t = walk(t, env)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(subst(a, env) for a in t.args))
    if isinstance(t, TList):
        return TList(tuple(subst(a, env) for a in t.items))
    return t


def unify(a: Term, b: Term, env: Env) -> Optional[Env]:
    a = walk(a, env)
    b = walk(b, env)
    if a == b:
        return env
    if isinstance(a, Variable):
        out = dict(env)
        out[a] = b
        return out
    if isinstance(b, Variable):
        out = dict(env)
        out[b] = a
        return out
    if (
        isinstance(a, Compound)
        and isinstance(b, Compound)
        and a.functor == b.functor
        and len(a.args) == len(b.args)
    ):
        for x, y in zip(a.args, b.args):
            nxt = unify(x, y, env)
            if nxt is None:
                return None
            env = nxt
        return env
    if isinstance(a, TList) and isinstance(b, TList) and len(a.items) == len(b.items):
        for x, y in zip(a.items, b.items):
            nxt = unify(x, y, env)
            if nxt is None:
                return None
            env = nxt
        return env
    return None


def is_ground(t: Term) -> bool:
    if isinstance(t, Variable):
        return False
    if isinstance(t, Compound):
        return all(is_ground(a) for a in t.args)
    if isinstance(t, TList):
        return all(is_ground(a) for a in t.items)
    return True


def term_vars(t: Term) -> set[Variable]:
    if isinstance(t, Variable):
        return {t}
    if isinstance(t, Compound):
        return set().union(*[term_vars(a) for a in t.args]) if t.args else set()
    if isinstance(t, TList):
        return set().union(*[term_vars(a) for a in t.items]) if t.items else set()
    return set()


# ---------------------------------------------------------------------------
# constraints, rules, states

USER = "user"
BUILTIN = "builtin"

#: Built-in predicates with a fixed interpretation; everything else in a
#: built-in store is an uninterpreted ground fact (e.g. ``dm/1``).
INTERPRETED = frozenset(["=", ">", "in", "action", "merge", "map", "true", "false"])


@dataclass(frozen=True, slots=True)
class Constraint:
    name: str
    args: tuple[Term, ...]
    kind: str = USER


def user(name: str, *args: Term) -> Constraint:
    return Constraint(name, tuple(args), USER)


def builtin(name: str, *args: Term) -> Constraint:
    return Constraint(name, tuple(args), BUILTIN)


def delta_c(store_term: Term) -> Constraint:
    return user("delta", store_term)


def gamma_c(buffer: Term, chunk: Term, delay: Term) -> Constraint:
    return user("gamma", buffer, chunk, delay)


def fact_constraint(atom: Atom) -> Constraint:
    return builtin(atom.pred, *atom.args)


def subst_constraint(c: Constraint, env: Env) -> Constraint:
    return Constraint(c.name, tuple(subst(a, env) for a in c.args), c.kind)


@dataclass(frozen=True)
class ChrState:
    """Goal multiset, built-in conjunction, global variables."""

    goal: tuple[Constraint, ...]
    builtins: tuple[Constraint, ...]
    globals: frozenset[Variable] = frozenset()


@dataclass(frozen=True)
class ChrRule:
    """``name @ kept \\ removed <=> guard | body``; translated rules keep
    nothing (pure simplification)."""

    name: str
    kept: tuple[Constraint, ...]
    removed: tuple[Constraint, ...]
    guard: tuple[Constraint, ...]
    body_user: tuple[Constraint, ...]
    body_builtin: tuple[Constraint, ...]

    def heads(self) -> tuple[Constraint, ...]:
        return self.kept + self.removed

    def variables(self) -> set[Variable]:
        out: set[Variable] = set()
        for c in (*self.heads(), *self.guard, *self.body_user, *self.body_builtin):
            for a in c.args:
                out |= term_vars(a)
        return out


_variant_ids = itertools.count()


def rule_variant(rule: ChrRule) -> ChrRule:
    """Fresh copy of the rule: every variable renamed apart."""
    n = next(_variant_ids)
    ren = {v: Variable(f"{v.name}~{n}") for v in rule.variables()}

    def conv(cs: tuple[Constraint, ...]) -> tuple[Constraint, ...]:
        return tuple(subst_constraint(c, ren) for c in cs)

    return ChrRule(
        rule.name,
        conv(rule.kept),
        conv(rule.removed),
        conv(rule.guard),
        conv(rule.body_user),
        conv(rule.body_builtin),
    )


# ---------------------------------------------------------------------------
# chunk-store encoding shared by the built-in theory and the translator


def encode_pairs(chunk: Chunk, types: TypeTable) -> TList:
    if types.has(chunk.type):
        order = [s for s in types.slots(chunk.type) if chunk.value(s) is not None]
        extra = [s for s, _ in chunk.pairs if s not in order]
        order.extend(sorted(extra, key=lambda s: s.name))
    else:
        order = [s for s, _ in chunk.pairs]
    return TList(tuple(tuple_term(s, chunk.value(s)) for s in order))


def encode_chunk(chunk: Chunk, types: TypeTable) -> Compound:
    return Compound("chunk", (chunk.id, chunk.type, encode_pairs(chunk, types)))


def encode_store(store: ChunkStore, types: TypeTable) -> TList:
    """Chunk list sorted by identifier name; the canonical encoding."""
    return TList(tuple(encode_chunk(c, types) for c in store.sorted_chunks()))


def decode_chunk(t: Term) -> Chunk:
    if not (isinstance(t, Compound) and t.functor == "chunk" and len(t.args) == 3):
        raise ChrError(f"not a chunk term: {render_term(t)}")
    id, type, pairs = t.args
    if not (isinstance(id, Symbol) and isinstance(type, Symbol) and isinstance(pairs, TList)):
        raise ChrError(f"malformed chunk term: {render_term(t)}")
    out = []
    for p in pairs.items:
        if not (
            isinstance(p, Compound)
            and p.functor == ","
            and len(p.args) == 2
            and isinstance(p.args[0], Symbol)
            and isinstance(p.args[1], Symbol)
        ):
            raise ChrError(f"malformed slot pair: {render_term(p)}")
        out.append((p.args[0], p.args[1]))
    return Chunk(id, type, out)


def decode_store(t: Term) -> ChunkStore:
    if not isinstance(t, TList):
        raise ChrError(f"not a chunk list: {render_term(t)}")
    return ChunkStore(decode_chunk(c) for c in t.items)


def _decode_action(t: Term) -> Action:
    if not (isinstance(t, Compound) and t.functor in ("=", "+") and len(t.args) == 3):
        raise ChrError(f"not an action term: {render_term(t)}")
    buffer, type, pairs = t.args
    if not (isinstance(buffer, Symbol) and isinstance(pairs, TList)):
        raise ChrError(f"malformed action term: {render_term(t)}")
    decoded = []
    for p in pairs.items:
        if not (
            isinstance(p, Compound)
            and p.functor == ","
            and len(p.args) == 2
            and isinstance(p.args[0], Symbol)
            and isinstance(p.args[1], Symbol)
        ):
            raise Undecided(f"action pair not ground: {render_term(p)}")
        decoded.append((p.args[0], p.args[1]))
    if t.functor == "=":
        return Action(MODIFY, buffer, None, tuple(decoded))
    if not isinstance(type, Symbol):
        raise ChrError(f"request without a type: {render_term(t)}")
    return Action(REQUEST, buffer, type, tuple(decoded))


def _decode_cogstate(t: Term) -> dict[Symbol, tuple[Symbol, int]]:
    if not isinstance(t, TList):
        raise Undecided(f"cognitive state not a list: {render_term(t)}")
    out: dict[Symbol, tuple[Symbol, int]] = {}
    for item in t.items:
        ok = (
            isinstance(item, Compound)
            and item.functor == ","
            and len(item.args) == 2
            and isinstance(item.args[0], Symbol)
            and isinstance(item.args[1], Compound)
            and item.args[1].functor == ","
            and len(item.args[1].args) == 2
            and isinstance(item.args[1].args[0], Symbol)
            and isinstance(item.args[1].args[1], int)
        )
        if not ok:
            raise Undecided(f"cognitive state entry not ground: {render_term(item)}")
        b = item.args[0]
        out[b] = (item.args[1].args[0], item.args[1].args[1])
    return out


def encode_cogstate(gamma: Iterable[tuple[Symbol, Term, Term]]) -> TList:
    """Buffer-sorted list of (buffer, (chunk, delay)) entries."""
    rows = sorted(gamma, key=lambda r: r[0].name)
    return TList(tuple(tuple_term(b, tuple_term(c, d)) for b, c, d in rows))


# ---------------------------------------------------------------------------
# built-in solving

Facts = tuple[Atom, ...]
Solution = tuple[Env, tuple[Atom, ...]]


def solve_builtins(
    constraints: Iterable[Constraint],
    env: Env,
    facts: Facts,
    types: TypeTable,
    config: ArchitectureConfig | None = None,
    ids: IdGen | None = None,
) -> list[Solution]:
    """Solve a conjunction left to right, branching where the theory does.

    Every solution is a binding environment plus the facts contributed by
    ``action`` constraints.  An empty result means the conjunction has no
    solution.  Inputs a constraint needs must be ground when it is reached
    (the translation emits constraints in such an order); otherwise
    :class:`Undecided` is raised.
    """
    config = config or ArchitectureConfig()
    ids = ids or IdGen()
    solutions: list[Solution] = [(env, ())]
    for c in constraints:
        nxt: list[Solution] = []
        for e, atoms in solutions:
            for e2, extra in _solve_one(c, e, facts, types, config, ids):
                nxt.append((e2, atoms + extra))
        solutions = nxt
        if not solutions:
            break
    return solutions


def _solve_one(
    c: Constraint,
    env: Env,
    facts: Facts,
    types: TypeTable,
    config: ArchitectureConfig,
    ids: IdGen,
) -> list[Solution]:
    name = c.name
    if name == "true":
        return [(env, ())]
    if name == "false":
        return []
    if name == "=":
        a, b = (subst(x, env) for x in c.args)
        out = unify(a, b, env)
        return [] if out is None else [(out, ())]
    if name == ">":
        a, b = (subst(x, env) for x in c.args)
        if not (isinstance(a, int) and isinstance(b, int)):
            raise Undecided(f"non-numeric comparison: {render_constraint(c)}")
        return [(env, ())] if a > b else []
    if name == "in":
        pattern, lst = c.args
        lst = subst(lst, env)
        if not (isinstance(lst, TList) and is_ground(lst)):
            raise Undecided(f"membership over unbound list: {render_constraint(c)}")
        out = []
        for item in lst.items:
            e = unify(subst(pattern, env), item, env)
            if e is not None:
                out.append((e, ()))
        return out
    if name == "action":
        return _solve_action(c, env, facts, types, config, ids)
    if name == "merge":
        return _solve_merge(c, env, types)
    if name == "map":
        return _solve_map(c, env)
    raise Undecided(f"uninterpreted constraint used as a goal: {render_constraint(c)}")


def _solve_action(
    c: Constraint,
    env: Env,
    facts: Facts,
    types: TypeTable,
    config: ArchitectureConfig,
    ids: IdGen,
) -> list[Solution]:
    """action(A, D, G, Dres, Cres, Eres): interpret action A in the state
    encoded by chunk list D, cognitive state G and the ambient facts; one
    solution per effect, binding the result store encoding, the result
    chunk id and its delay, and contributing the effect's facts."""
    if len(c.args) != 6:
        raise ChrError("action/6 expected")
    a_t, d_t, g_t, dres, cres, eres = (subst(x, env) for x in c.args)
    action = _decode_action(a_t)
    store = decode_store(d_t)
    gamma = _decode_cogstate(g_t)
    state = AbstractState.make(store, gamma, facts)
    out: list[Solution] = []
    for eff in interpret_action(action, state, config, ids):
        buffer_update = {b: (cc, dd) for b, cc, dd in eff.gamma}[action.buffer]
        e: Optional[Env] = env
        for pat, val in (
            (dres, encode_store(eff.store, types)),
            (cres, buffer_update[0]),
            (eres, buffer_update[1]),
        ):
            e = unify(pat, val, e)
            if e is None:
                break
        if e is not None:
            out.append((e, eff.atoms))
    return out


def _solve_merge(c: Constraint, env: Env, types: TypeTable) -> list[Solution]:
    """merge(L, D): D is the encoding of the merge of the stores in L."""
    if len(c.args) != 2:
        raise ChrError("merge/2 expected")
    lst, out_pat = (subst(x, env) for x in c.args)
    if not (isinstance(lst, TList) and is_ground(lst)):
        raise Undecided(f"merge over unbound list: {render_constraint(c)}")
    merged, _ = merge_all(decode_store(t) for t in lst.items)
    e = unify(out_pat, encode_store(merged, types), env)
    return [] if e is None else [(e, ())]


def _solve_map(c: Constraint, env: Env) -> list[Solution]:
    """map(D, D2, C, M): M is C's identifier after merging D with D2 —
    identity when either store knows C, nil otherwise."""
    if len(c.args) != 4:
        raise ChrError("map/4 expected")
    d_t, d2_t, c_in, m_pat = (subst(x, env) for x in c.args)
    if not isinstance(c_in, Symbol):
        raise Undecided(f"map over unbound id: {render_constraint(c)}")
    known = set(decode_store(d_t).ids()) | set(decode_store(d2_t).ids())
    target = c_in if c_in in known else NIL
    e = unify(m_pat, target, env)
    return [] if e is None else [(e, ())]


# ---------------------------------------------------------------------------
# the step relation


def facts_of(state: ChrState) -> Facts:
    out = []
    for c in state.builtins:
        if c.name == "true":
            continue
        if c.name in INTERPRETED:
            raise Undecided(f"unevaluated built-in in store: {render_constraint(c)}")
        args = []
        for a in c.args:
            if not isinstance(a, Symbol):
                raise Undecided(f"non-ground fact: {render_constraint(c)}")
            args.append(a)
        out.append(Atom(c.name, tuple(args)))
    return tuple(out)


def fresh_gen_for(state: ChrState) -> IdGen:
    """Generator whose identifiers avoid every fresh id in the state."""
    high = 0
    def scan(t: Term) -> None:
        nonlocal high
        if isinstance(t, Symbol) and is_fresh_id(t):
            tail = t.name[len(FRESH_PREFIX):]
            if tail.isdigit():
                high = max(high, int(tail) + 1)
        elif isinstance(t, Compound):
            for a in t.args:
                scan(a)
        elif isinstance(t, TList):
            for a in t.items:
                scan(a)
    for c in (*state.goal, *state.builtins):
        for a in c.args:
            scan(a)
    return IdGen(high)


def _head_matchings(
    heads: tuple[Constraint, ...], goal: tuple[Constraint, ...]
) -> list[tuple[Env, tuple[int, ...]]]:
    """Injective matchings of head patterns against goal constraints."""
    out: list[tuple[Env, tuple[int, ...]]] = []

    def rec(hi: int, env: Env, used: tuple[int, ...]) -> None:
        if hi == len(heads):
            out.append((env, used))
            return
        h = heads[hi]
        for gi, g in enumerate(goal):
            if gi in used or g.kind != USER or g.name != h.name:
                continue
            if len(g.args) != len(h.args):
                continue
            e: Optional[Env] = env
            for pa, ga in zip(h.args, g.args):
                e = unify(pa, ga, e)
                if e is None:
                    break
            if e is not None:
                rec(hi + 1, e, used + (gi,))

    rec(0, {}, ())
    return out


def chr_step(
    state: ChrState,
    program: Iterable[ChrRule],
    types: TypeTable,
    config: ArchitectureConfig | None = None,
    ids: IdGen | None = None,
) -> list[tuple[str, ChrState]]:
    """All successor states, labelled by the rule that produced them.

    Rules are tried in program order with a fresh variant per attempt;
    every injective head matching and every guard/body solution yields one
    successor.  Successors are normalised representatives: the body's user
    constraints are added ground, and the built-in store grows only by the
    facts contributed by ``action``.
    """
    config = config or ArchitectureConfig()
    ids = ids or fresh_gen_for(state)
    facts = facts_of(state)
    out: list[tuple[str, ChrState]] = []
    for rule in program:
        variant = rule_variant(rule)
        kept_n = len(variant.kept)
        for env, used in _head_matchings(variant.heads(), state.goal):
            removed = set(used[kept_n:])
            for genv, _ in solve_builtins(variant.guard, env, facts, types, config, ids):
                for benv, atoms in solve_builtins(
                    variant.body_builtin, genv, facts, types, config, ids
                ):
                    added = []
                    for u in variant.body_user:
                        g = subst_constraint(u, benv)
                        if any(not is_ground(a) for a in g.args):
                            raise Undecided(
                                f"body constraint not ground: {render_constraint(g)}"
                            )
                        added.append(g)
                    goal = tuple(
                        g for gi, g in enumerate(state.goal) if gi not in removed
                    ) + tuple(added)
                    builtins = state.builtins + tuple(fact_constraint(a) for a in atoms)
                    out.append((rule.name, ChrState(goal, builtins, state.globals)))
    return out


# ---------------------------------------------------------------------------
# state equivalence

_FAILED = object()


def _normalize(state: ChrState):
    """Apply equality-as-substitution and decide ground built-ins.

    Returns (goal, residual facts, globals) or the failure marker when the
    store is unsatisfiable.  Interpreted constraints other than ``=``,
    ``>`` and ``true``/``false`` are not expected in stored form and raise
    :class:`Undecided`.
    """
    env: Env = {}
    residual: list[Constraint] = []
    for c in state.builtins:
        if c.name == "true":
            continue
        if c.name == "false":
            return _FAILED
        if c.name == "=":
            a, b = (subst(x, env) for x in c.args)
            nxt = unify(a, b, env)
            if nxt is None:
                return _FAILED
            env = nxt
        elif c.name == ">":
            a, b = (subst(x, env) for x in c.args)
            if not (isinstance(a, int) and isinstance(b, int)):
                raise Undecided(f"undecided comparison: {render_constraint(c)}")
            if not a > b:
                return _FAILED
        elif c.name in INTERPRETED:
            raise Undecided(f"unevaluated built-in in store: {render_constraint(c)}")
        else:
            residual.append(c)
    goal = tuple(subst_constraint(c, env) for c in state.goal)
    facts = tuple(subst_constraint(c, env) for c in residual)
    occurring = set()
    for c in (*goal, *facts):
        for a in c.args:
            occurring |= term_vars(a)
    return goal, facts, frozenset(v for v in state.globals if v in occurring)


def is_failed(state: ChrState) -> bool:
    return _normalize(state) is _FAILED


def _canonical_fresh_renaming(
    chunks: dict[Symbol, Compound], gammas: list[Constraint]
) -> dict[Symbol, Symbol]:
    seen: set[Symbol] = set()
    ren: dict[Symbol, Symbol] = {}

    def visit(cid: Symbol) -> None:
        if cid in seen:
            return
        seen.add(cid)
        if is_fresh_id(cid):
            ren[cid] = Symbol(f"{FRESH_PREFIX}{len(ren)}")
        term = chunks.get(cid)
        if term is None:
            return
        pairs = term.args[2]
        if isinstance(pairs, TList):
            for p in pairs.items:
                if isinstance(p, Compound) and len(p.args) == 2 and isinstance(p.args[1], Symbol):
                    visit(p.args[1])

    for g in sorted(gammas, key=lambda g: render_term(g.args[0])):
        if isinstance(g.args[1], Symbol):
            visit(g.args[1])

    def stale_key(item: tuple[Symbol, Compound]):
        cid, term = item
        type = term.args[1]
        vals = []
        pairs = term.args[2]
        if isinstance(pairs, TList):
            for p in pairs.items:
                v = p.args[1] if isinstance(p, Compound) and len(p.args) == 2 else p
                if isinstance(v, Symbol) and v in ren:
                    vals.append(ren[v].name)
                elif isinstance(v, Symbol) and is_fresh_id(v):
                    vals.append("￿" + v.name)
                else:
                    vals.append(render_term(v))
        return (render_term(type), tuple(vals), cid.name)

    stale = [(cid, t) for cid, t in chunks.items() if cid not in seen and is_fresh_id(cid)]
    for cid, _ in sorted(stale, key=stale_key):
        ren[cid] = Symbol(f"{FRESH_PREFIX}{len(ren)}")
    return ren


def canonical_form(state: ChrState):
    """Hashable canonical form; two states are equivalent iff their forms
    are equal.  Chunk lists compare as multisets and fresh identifiers up
    to renaming; all failed states share one form."""
    norm = _normalize(state)
    if norm is _FAILED:
        return ("failed",)
    goal, facts, globs = norm

    deltas = [c for c in goal if c.kind == USER and c.name == "delta" and len(c.args) == 1]
    gammas = [c for c in goal if c.kind == USER and c.name == "gamma" and len(c.args) == 3]
    rest = [c for c in goal if not (c in deltas or c in gammas)]

    if len(deltas) == 1 and isinstance(deltas[0].args[0], TList) and not rest:
        chunk_terms = deltas[0].args[0].items
        chunks: dict[Symbol, Compound] = {}
        shaped = all(
            isinstance(t, Compound)
            and t.functor == "chunk"
            and len(t.args) == 3
            and isinstance(t.args[0], Symbol)
            for t in chunk_terms
        )
        if shaped:
            for t in chunk_terms:
                chunks[t.args[0]] = t  # type: ignore[index]
            ren = _canonical_fresh_renaming(chunks, gammas)

            def rterm(t: Term) -> Term:
                if isinstance(t, Symbol):
                    return ren.get(t, t)
                if isinstance(t, Compound):
                    return Compound(t.functor, tuple(rterm(a) for a in t.args))
                if isinstance(t, TList):
                    return TList(tuple(rterm(a) for a in t.items))
                return t

            def rcon(c: Constraint) -> str:
                return render_constraint(
                    Constraint(c.name, tuple(rterm(a) for a in c.args), c.kind)
                )

            chunk_key = tuple(sorted(render_term(rterm(t)) for t in chunk_terms))
            gamma_key = tuple(sorted(rcon(g) for g in gammas))
            fact_key = tuple(sorted(rcon(c) for c in facts))
            return ("state", chunk_key, gamma_key, fact_key, tuple(sorted(v.name for v in globs)))

    # Fallback for states outside the translated shape: literal multisets.
    goal_key = tuple(sorted(render_constraint(c) for c in goal))
    fact_key = tuple(sorted(render_constraint(c) for c in facts))
    return ("raw", goal_key, fact_key, tuple(sorted(v.name for v in globs)))


def state_equiv(a: ChrState, b: ChrState) -> bool:
    return canonical_form(a) == canonical_form(b)


# ---------------------------------------------------------------------------
# rendering

_INFIX = {"=", ">", "in"}


def render_term(t: Term) -> str:
    if isinstance(t, Symbol):
        return t.name
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, int):
        return str(t)
    if isinstance(t, TList):
        return "[" + ",".join(render_term(a) for a in t.items) + "]"
    if isinstance(t, Compound):
        if t.functor == ",":
            return "(" + ",".join(render_term(a) for a in t.args) + ")"
        return f"{t.functor}(" + ",".join(render_term(a) for a in t.args) + ")"
    raise ChrError(f"cannot render {t!r}")


def render_constraint(c: Constraint) -> str:
    if c.name in _INFIX and len(c.args) == 2:
        return f"{render_term(c.args[0])} {c.name} {render_term(c.args[1])}"
    if not c.args:
        return c.name
    return f"{c.name}(" + ",".join(render_term(a) for a in c.args) + ")"


def render_rule(r: ChrRule) -> str:
    removed = ", ".join(render_constraint(c) for c in r.removed)
    if r.kept:
        kept = ", ".join(render_constraint(c) for c in r.kept)
        head = f"{kept} \\ {removed}"
    else:
        head = removed
    guard = ", ".join(render_constraint(c) for c in r.guard) or "true"
    body_parts = [render_constraint(c) for c in (*r.body_user, *r.body_builtin)]
    body = ", ".join(body_parts) or "true"
    return f"{r.name} @ {head} <=> {guard} | {body}."


def render_program(rules: Iterable[ChrRule]) -> str:
    return "\n".join(render_rule(r) for r in rules) + "\n"


def render_state(s: ChrState) -> str:
    goal = ", ".join(render_constraint(c) for c in s.goal) or "true"
    builtins = ", ".join(render_constraint(c) for c in s.builtins) or "true"
    globs = "{" + ",".join(sorted(v.name for v in s.globals)) + "}"
    return f"<{goal} ; {builtins} ; {globs}>"
