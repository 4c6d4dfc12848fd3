"""Constraint-store machinery: terms, built-in theory, step relation,
state equivalence."""

import pytest

from actrchr.core import Chunk, ChunkStore, IdClash, NIL, Symbol, TypeTable, Variable
from actrchr.chr import (
    ChrRule,
    ChrState,
    Compound,
    TList,
    Undecided,
    builtin,
    canonical_form,
    chr_step,
    decode_chunk,
    decode_store,
    delta_c,
    encode_chunk,
    encode_pairs,
    encode_store,
    facts_of,
    fresh_gen_for,
    gamma_c,
    is_failed,
    is_ground,
    render_constraint,
    render_rule,
    render_state,
    rule_variant,
    solve_builtins,
    state_equiv,
    subst,
    term_vars,
    tuple_term,
    unify,
    user,
    walk,
)
from actrchr.chr import encode_cogstate
from actrchr.model import Action, Atom, MODIFY, REQUEST
from actrchr.translate import encode_action


def sym(name: str) -> Symbol:
    return Symbol(name)


def var(name: str) -> Variable:
    return Variable(name)


def table(**types) -> TypeTable:
    tt = TypeTable()
    for name, slots in types.items():
        tt.declare(sym(name), tuple(sym(s) for s in slots))
    return tt


class TestUnification:
    def test_variable_binds_to_symbol(self):
        env = unify(var("X"), sym("a"), {})
        assert env == {var("X"): sym("a")}

    def test_walk_follows_chains(self):
        env = {var("X"): var("Y"), var("Y"): sym("a")}
        assert walk(var("X"), env) == sym("a")

    def test_compounds_unify_argumentwise(self):
        a = Compound("f", (var("X"), sym("b")))
        b = Compound("f", (sym("a"), var("Y")))
        env = unify(a, b, {})
        assert env[var("X")] == sym("a") and env[var("Y")] == sym("b")

    def test_functor_mismatch_fails(self):
        assert unify(Compound("f", ()), Compound("g", ()), {}) is None

    def test_list_length_mismatch_fails(self):
        assert unify(TList((sym("a"),)), TList(()), {}) is None

    def test_subst_is_deep(self):
        t = Compound("f", (TList((var("X"),)),))
        assert subst(t, {var("X"): sym("a")}) == Compound("f", (TList((sym("a"),)),))

    def test_groundness_and_variables(self):
        t = tuple_term(sym("a"), var("X"))
        assert not is_ground(t)
        assert term_vars(t) == {var("X")}
        assert is_ground(subst(t, {var("X"): sym("b")}))


TYPES = table(t=("a", "b"))
CHUNK = Chunk(sym("k"), sym("t"), {sym("a"): sym("k"), sym("b"): NIL})


class TestEncoding:
    def test_chunk_encoding_orders_slots_by_type(self):
        scrambled = Chunk(sym("k"), sym("t"), [(sym("b"), NIL), (sym("a"), sym("k"))])
        enc = encode_chunk(scrambled, TYPES)
        assert enc == Compound(
            "chunk",
            (
                sym("k"),
                sym("t"),
                TList((tuple_term(sym("a"), sym("k")), tuple_term(sym("b"), NIL))),
            ),
        )

    def test_chunk_round_trip(self):
        assert decode_chunk(encode_chunk(CHUNK, TYPES)) == CHUNK

    def test_store_round_trip_sorted(self):
        other = Chunk(sym("j"), sym("t"), {sym("a"): sym("j")})
        store = ChunkStore([CHUNK, other])
        enc = encode_store(store, TYPES)
        ids = [t.args[0] for t in enc.items]
        assert ids == [sym("j"), sym("k")]  # identifier order is canonical
        assert decode_store(enc).sorted_chunks() == store.sorted_chunks()

    def test_partial_chunk_encodes_only_present_slots(self):
        partial = Chunk(sym("k"), sym("t"), {sym("b"): sym("k")})
        enc = encode_pairs(partial, TYPES)
        assert enc == TList((tuple_term(sym("b"), sym("k")),))


def solve(constraints, env=None, facts=(), types=TYPES):
    return solve_builtins(constraints, env or {}, facts, types)


class TestBuiltinTheory:
    def test_equality_unifies(self):
        sols = solve([builtin("=", var("X"), sym("a"))])
        assert len(sols) == 1
        assert sols[0][0][var("X")] == sym("a")

    def test_failed_equality_kills_the_branch(self):
        assert solve([builtin("=", sym("a"), sym("b"))]) == []

    def test_comparison_on_integers(self):
        assert len(solve([builtin(">", 1, 0)])) == 1
        assert solve([builtin(">", 0, 1)]) == []

    def test_comparison_on_symbols_is_undecided(self):
        with pytest.raises(Undecided):
            solve([builtin(">", sym("a"), sym("b"))])

    def test_membership_branches(self):
        lst = TList((sym("a"), sym("b"), sym("c")))
        sols = solve([builtin("in", var("X"), lst)])
        assert [s[0][var("X")] for s in sols] == [sym("a"), sym("b"), sym("c")]

    def test_membership_filters_by_pattern(self):
        lst = TList((tuple_term(sym("a"), sym("u")), tuple_term(sym("b"), sym("v"))))
        pat = tuple_term(sym("a"), var("X"))
        sols = solve([builtin("in", pat, lst)])
        assert len(sols) == 1 and sols[0][0][var("X")] == sym("u")

    def test_membership_over_unbound_list_is_undecided(self):
        with pytest.raises(Undecided):
            solve([builtin("in", var("X"), var("L"))])

    def test_uninterpreted_goal_is_undecided(self):
        with pytest.raises(Undecided):
            solve([builtin("frob", sym("a"))])

    def test_true_and_false(self):
        assert len(solve([builtin("true")])) == 1
        assert solve([builtin("false")]) == []

    def test_conjunction_threads_bindings(self):
        sols = solve(
            [
                builtin("=", var("X"), sym("a")),
                builtin("in", var("X"), TList((sym("a"), sym("b")))),
            ]
        )
        assert len(sols) == 1

    def test_merge_builtin_merges_encodings(self):
        a = ChunkStore([Chunk(sym("x"), sym("t"), {sym("a"): sym("x")})])
        b = ChunkStore([Chunk(sym("y"), sym("t"), {sym("a"): sym("y")})])
        goal = builtin(
            "merge",
            TList((encode_store(a, TYPES), encode_store(b, TYPES))),
            var("D"),
        )
        ((env, _),) = solve([goal])
        merged = decode_store(env[var("D")])
        assert set(merged.ids()) == {sym("x"), sym("y")}

    def test_merge_builtin_propagates_id_clashes(self):
        a = ChunkStore([Chunk(sym("x"), sym("t"), {sym("a"): sym("x")})])
        b = ChunkStore([Chunk(sym("x"), sym("t"), {sym("a"): NIL})])
        goal = builtin(
            "merge",
            TList((encode_store(a, TYPES), encode_store(b, TYPES))),
            var("D"),
        )
        with pytest.raises(IdClash):
            solve([goal])

    def test_map_builtin_keeps_known_ids(self):
        store = ChunkStore([Chunk(sym("x"), sym("t"), {})])
        enc = encode_store(store, TYPES)
        empty = encode_store(ChunkStore(), TYPES)
        ((env, _),) = solve([builtin("map", enc, empty, sym("x"), var("M"))])
        assert env[var("M")] == sym("x")

    def test_map_builtin_sends_unknown_ids_to_nil(self):
        empty = encode_store(ChunkStore(), TYPES)
        ((env, _),) = solve([builtin("map", empty, empty, sym("zz"), var("M"))])
        assert env[var("M")] == NIL

    def test_action_builtin_answers_requests_from_the_facts(self):
        hit = Chunk(sym("d1"), sym("t"), {sym("a"): sym("g0"), sym("b"): NIL})
        miss = Chunk(sym("d2"), sym("t"), {sym("a"): NIL, sym("b"): NIL})
        goal = Chunk(sym("g0"), sym("t"), {sym("a"): sym("g0"), sym("b"): NIL})
        store = ChunkStore([hit, miss, goal]).with_nil()
        request = Action(REQUEST, sym("goal"), sym("t"), ((sym("a"), sym("g0")),))
        c = builtin(
            "action",
            encode_action(request, TYPES),
            encode_store(store, TYPES),
            encode_cogstate([(sym("goal"), sym("g0"), 0)]),
            var("Dres"),
            var("Cres"),
            var("Eres"),
        )
        facts = (Atom("dm", (sym("d1"),)), Atom("dm", (sym("d2"),)))
        ((env, atoms),) = solve_builtins([c], {}, facts, TYPES)
        assert atoms == ()
        assert env[var("Eres")] == 1  # the answer lands pending
        (answer,) = decode_store(env[var("Dres")]).chunks()
        assert answer.id == env[var("Cres")]
        assert answer.id.name.startswith("c#")
        assert answer.val() == hit.val()

    def test_action_builtin_modifies_the_incumbent(self):
        goal = Chunk(sym("g0"), sym("t"), {sym("a"): sym("g0"), sym("b"): NIL})
        store = ChunkStore([goal]).with_nil()
        modify = Action(MODIFY, sym("goal"), None, ((sym("b"), sym("g0")),))
        c = builtin(
            "action",
            encode_action(modify, TYPES),
            encode_store(store, TYPES),
            encode_cogstate([(sym("goal"), sym("g0"), 0)]),
            var("Dres"),
            var("Cres"),
            var("Eres"),
        )
        ((env, _),) = solve_builtins([c], {}, (), TYPES)
        assert env[var("Eres")] == 0
        (copy,) = decode_store(env[var("Dres")]).chunks()
        assert copy.val() == {sym("a"): sym("g0"), sym("b"): sym("g0")}


REVEAL = ChrRule(
    name="no",
    kept=(),
    removed=(gamma_c(var("B"), var("C"), var("D")),),
    guard=(builtin(">", var("D"), 0),),
    body_user=(gamma_c(var("B"), var("C"), 0),),
    body_builtin=(),
)


def pair_rule():
    return ChrRule(
        name="pair",
        kept=(),
        removed=(user("p", var("X")), user("p", var("Y"))),
        guard=(),
        body_user=(user("q", var("X"), var("Y")),),
        body_builtin=(),
    )


class TestStepRelation:
    def test_reveal_rule_flips_one_pending_flag(self):
        state = ChrState((gamma_c(sym("goal"), sym("k"), 1),), ())
        ((label, nxt),) = chr_step(state, [REVEAL], TYPES)
        assert label == "no"
        assert nxt.goal == (gamma_c(sym("goal"), sym("k"), 0),)

    def test_visible_buffer_does_not_fire(self):
        state = ChrState((gamma_c(sym("goal"), sym("k"), 0),), ())
        assert chr_step(state, [REVEAL], TYPES) == []

    def test_two_pending_buffers_give_two_successors(self):
        state = ChrState(
            (
                gamma_c(sym("a"), sym("k"), 1),
                gamma_c(sym("b"), sym("k"), 1),
            ),
            (),
        )
        succ = chr_step(state, [REVEAL], TYPES)
        assert len(succ) == 2
        stills = [
            [c for c in s.goal if c.args[2] == 1][0].args[0] for _, s in succ
        ]
        assert set(stills) == {sym("a"), sym("b")}

    def test_head_matching_is_injective(self):
        # a two-headed rule cannot consume one constraint twice
        single = ChrState((user("p", sym("a")),), ())
        assert chr_step(single, [pair_rule()], TYPES) == []
        double = ChrState((user("p", sym("a")), user("p", sym("b"))), ())
        succ = chr_step(double, [pair_rule()], TYPES)
        assert len(succ) == 2  # both orders of the two constraints
        results = {s.goal[0].args for _, s in succ}
        assert results == {(sym("a"), sym("b")), (sym("b"), sym("a"))}

    def test_body_must_come_out_ground(self):
        leaky = ChrRule(
            name="leak",
            kept=(),
            removed=(user("p", var("X")),),
            guard=(),
            body_user=(user("q", var("Z")),),  # Z never bound
            body_builtin=(),
        )
        state = ChrState((user("p", sym("a")),), ())
        with pytest.raises(Undecided):
            chr_step(state, [leaky], TYPES)

    def test_program_order_gives_label_order(self):
        state = ChrState((gamma_c(sym("goal"), sym("k"), 1),), ())
        other = ChrRule(
            name="alt",
            kept=(),
            removed=(gamma_c(var("B"), var("C"), var("D")),),
            guard=(builtin(">", var("D"), 0),),
            body_user=(gamma_c(var("B"), var("C"), 0),),
            body_builtin=(),
        )
        labels = [l for l, _ in chr_step(state, [other, REVEAL], TYPES)]
        assert labels == ["alt", "no"]

    def test_uninterpreted_guard_atom_is_undecided(self):
        # stored facts reach a rule only through the action built-in
        fires_on_fact = ChrRule(
            name="f",
            kept=(),
            removed=(user("p", var("X")),),
            guard=(builtin("dm", var("X")),),
            body_user=(user("q", var("X")),),
            body_builtin=(),
        )
        state = ChrState(
            (user("p", sym("a")),),
            (builtin("dm", sym("a")),),
        )
        with pytest.raises(Undecided):
            chr_step(state, [fires_on_fact], TYPES)

    def test_variant_renames_apart(self):
        v1, v2 = rule_variant(REVEAL), rule_variant(REVEAL)
        assert v1.variables().isdisjoint(v2.variables())
        assert all("~" in v.name for v in v1.variables())
        assert v1.name == REVEAL.name


class TestFacts:
    def test_facts_of_reads_ground_atoms(self):
        state = ChrState((), (builtin("dm", sym("a")), builtin("true")))
        assert facts_of(state) == (Atom("dm", (sym("a"),)),)

    def test_facts_of_rejects_pending_equations(self):
        state = ChrState((), (builtin("=", var("X"), sym("a")),))
        with pytest.raises(Undecided):
            facts_of(state)

    def test_fresh_gen_skips_ids_inside_terms(self):
        state = ChrState(
            (delta_c(TList((Compound("chunk", (sym("c#3"), sym("t"), TList(()))),))),),
            (),
        )
        assert fresh_gen_for(state).fresh() == sym("c#4")


class TestStateEquivalence:
    def test_renamed_fresh_ids_are_equivalent(self):
        def st(name):
            c = Chunk(sym(name), sym("t"), {sym("a"): NIL, sym("b"): NIL})
            store = encode_store(ChunkStore([c]), TYPES)
            return ChrState((delta_c(store), gamma_c(sym("goal"), sym(name), 0)), ())

        assert state_equiv(st("c#0"), st("c#9"))
        assert canonical_form(st("c#0")) == canonical_form(st("c#9"))

    def test_parsed_ids_are_not_renamed(self):
        def st(name):
            c = Chunk(sym(name), sym("t"), {})
            store = encode_store(ChunkStore([c]), TYPES)
            return ChrState((delta_c(store), gamma_c(sym("goal"), sym(name), 0)), ())

        assert not state_equiv(st("x"), st("y"))

    def test_equality_substitution_congruence(self):
        direct = ChrState((user("p", sym("a")),), ())
        viaeq = ChrState((user("p", var("X")),), (builtin("=", var("X"), sym("a")),))
        assert state_equiv(direct, viaeq)

    def test_failed_states_collapse(self):
        f1 = ChrState((user("p", sym("a")),), (builtin("false"),))
        f2 = ChrState((), (builtin("=", sym("a"), sym("b")),))
        assert is_failed(f1) and is_failed(f2)
        assert state_equiv(f1, f2)
        assert not state_equiv(f1, ChrState((), ()))

    def test_goal_is_a_multiset(self):
        one = ChrState((user("p", sym("a")),), ())
        two = ChrState((user("p", sym("a")), user("p", sym("a"))), ())
        assert not state_equiv(one, two)
        swapped = ChrState(
            (user("q", sym("b")), user("p", sym("a"))), ()
        )
        ordered = ChrState(
            (user("p", sym("a")), user("q", sym("b"))), ()
        )
        assert state_equiv(swapped, ordered)


class TestRendering:
    def test_constraint_rendering(self):
        c = gamma_c(sym("goal"), var("C"), 0)
        assert render_constraint(c) == "gamma(goal,C,0)"

    def test_rule_rendering_shape(self):
        text = render_rule(REVEAL)
        assert text == "no @ gamma(B,C,D) <=> D > 0 | gamma(B,C,0)."

    def test_state_rendering_mentions_goal_and_builtins(self):
        state = ChrState((user("p", sym("a")),), (builtin("dm", sym("a")),))
        text = render_state(state)
        assert "p(a)" in text and "dm(a)" in text
