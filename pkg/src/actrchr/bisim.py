"""Depth-bounded bisimulation between a model and its translation.

Starting from a model state and its translation, every related pair must
agree on its labelled transitions: each abstract step needs a translated
step with the same label landing in an equivalent state, and vice versa.
Abstract successors are compared through their translation, so both sides
meet in one notion of equivalence, canonical-form equality of translated
states.  Per label the successor classes must also correspond one to one,
which checks the per-rule effect correspondence at every visited pair.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field

from .chr import (
    ChrRule,
    ChrState,
    Env,
    Undecided,
    canonical_form,
    chr_step,
    encode_store,
    fact_constraint,
    is_ground,
    render_state,
    solve_builtins,
    subst_constraint,
)
from .core import TypeTable
from .engine import (
    DROPPED,
    ArchitectureConfig,
    NO_LABEL,
    apply_label,
    apply_transition,
    canonical_key,
    fresh_gen_for,
    interpret_rule,
    match_rule,
    normalize_model,
    set_normal_form,
    successors,
)
from .model import AbstractState, Model, Rule
from .translate import build_var_plan, chr_of_model, chr_of_rule, chr_of_state

FORWARD = "forward"
BACKWARD = "backward"
BIJECTION = "bijection"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class Counterexample:
    """One failed transition match at a related pair.

    ``missing`` renders the transition that found no counterpart and
    ``nearest`` the closest same-label candidate on the other side, empty
    when that side has no transition with the label at all.
    """

    direction: str
    depth: int
    label: str
    state: AbstractState
    chr_state: ChrState
    missing: str
    nearest: str = ""

    def __str__(self) -> str:
        msg = f"{self.direction} mismatch at depth {self.depth}"
        if self.label:
            msg += f" on label {self.label}"
        msg += f": {self.missing}"
        if self.nearest:
            msg += f" (nearest candidate: {self.nearest})"
        return msg


@dataclass
class BisimReport:
    """Outcome of a bounded check; passes iff no counterexamples."""

    depth: int
    nodes: int = 0
    transitions: int = 0
    counterexamples: list[Counterexample] = field(default_factory=list)
    states: list[AbstractState] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    @property
    def verdict(self) -> str:
        return "pass" if self.ok else "fail"

    def text(self) -> str:
        lines = [
            f"verdict: {self.verdict}",
            f"depth: {self.depth}",
            f"pairs: {self.nodes}",
            f"transitions: {self.transitions}",
        ]
        lines.extend(f"  {c}" for c in self.counterexamples)
        return "\n".join(lines)

    def records(self) -> list[str]:
        head = {
            "record": "summary",
            "verdict": self.verdict,
            "depth": self.depth,
            "pairs": self.nodes,
            "transitions": self.transitions,
        }
        out = [json.dumps(head, sort_keys=True)]
        for c in self.counterexamples:
            out.append(
                json.dumps(
                    {
                        "record": "counterexample",
                        "direction": c.direction,
                        "depth": c.depth,
                        "label": c.label,
                        "missing": c.missing,
                        "nearest": c.nearest,
                    },
                    sort_keys=True,
                )
            )
        return out


def _engine_label(chr_rule_name: str) -> str:
    return NO_LABEL if chr_rule_name == NO_LABEL else apply_label(chr_rule_name)


def bisim_check(
    model: Model,
    initial: AbstractState | None = None,
    depth: int = 3,
    config: ArchitectureConfig | None = None,
    program: tuple[ChrRule, ...] | None = None,
    max_counterexamples: int = 10,
) -> BisimReport:
    """Check mutual transition matching to the given depth.

    The model runs normalized on both sides; ``program`` overrides the
    translation, which is how fault-injection tests feed a broken one.
    An Undecided equivalence judgement is reported as a failure rather
    than raised.
    """
    config = config or ArchitectureConfig()
    norm = normalize_model(model)
    types = model.types
    prog = tuple(program) if program is not None else chr_of_model(model)
    s0 = initial if initial is not None else norm.initial_state()
    c0 = chr_of_state(s0, types)
    ids = fresh_gen_for(s0)
    report = BisimReport(depth=depth)
    seen = {(canonical_key(s0, model.buffers, types), canonical_form(c0))}
    queue = deque([(s0, c0, 0)])
    while queue:
        s, c, d = queue.popleft()
        report.nodes += 1
        report.states.append(s)
        if d >= depth:
            continue
        try:
            eng = [
                (label, canonical_form(chr_of_state(s2, types)), s2)
                for label, s2 in successors(s, norm, config, ids)
            ]
            chrs = [
                (_engine_label(name), canonical_form(c2), c2)
                for name, c2 in chr_step(c, prog, types, config)
            ]
        except Undecided as e:
            report.counterexamples.append(
                Counterexample(UNDECIDED, d, "", s, c, str(e))
            )
            continue
        report.transitions += len(eng) + len(chrs)

        for label, form, s2 in eng:
            mates = [c2 for l2, f2, c2 in chrs if l2 == label and f2 == form]
            if mates:
                key = (canonical_key(s2, model.buffers, types), form)
                if key not in seen:
                    seen.add(key)
                    queue.append((s2, mates[0], d + 1))
            else:
                nearest = next(
                    (render_state(c2) for l2, _, c2 in chrs if l2 == label), ""
                )
                report.counterexamples.append(
                    Counterexample(
                        FORWARD, d, label, s, c,
                        render_state(chr_of_state(s2, types)), nearest,
                    )
                )
        for label, form, c2 in chrs:
            if not any(l2 == label and f2 == form for l2, f2, _ in eng):
                nearest = next(
                    (
                        render_state(chr_of_state(s2, types))
                        for l2, _, s2 in eng
                        if l2 == label
                    ),
                    "",
                )
                report.counterexamples.append(
                    Counterexample(
                        BACKWARD, d, label, s, c, render_state(c2), nearest
                    )
                )

        eng_count = Counter((label, form) for label, form, _ in eng)
        chr_count = Counter((label, form) for label, form, _ in chrs)
        for label, form in eng_count | chr_count:
            n, m = eng_count[(label, form)], chr_count[(label, form)]
            if n != m and n > 0 and m > 0:
                report.counterexamples.append(
                    Counterexample(
                        BIJECTION, d, label, s, c,
                        f"{n} abstract vs {m} translated successors in one class",
                    )
                )
        if len(report.counterexamples) >= max_counterexamples:
            break
    return report


def drop_passthrough_gammas(program: tuple[ChrRule, ...]) -> tuple[ChrRule, ...]:
    """Broken variant of a translated program for fault-injection tests:
    body constraints that restate a head constraint verbatim (the buffer
    pass-throughs) are removed."""
    out = []
    for r in program:
        body = tuple(c for c in r.body_user if c not in r.removed and c not in r.kept)
        out.append(
            ChrRule(r.name, r.kept, r.removed, r.guard, body, r.body_builtin)
        )
    return tuple(out)


def effect_lemma_check(
    rule: Rule,
    state: AbstractState,
    types: TypeTable,
    config: ArchitectureConfig | None = None,
) -> bool:
    """Solutions of the translated rule's built-in chain correspond one to
    one with the rule's interpreted effects in the state.

    Both sides are read as successor descriptions (new store, updated
    buffers, contributed facts) and compared as multisets of canonical
    forms.  Holds vacuously when the rule matches nowhere in the state on
    both sides; disagreement on matching itself also fails the check.
    """
    config = config or ArchitectureConfig()
    buffers = tuple(b for b, _, _ in state.gamma)
    nf = set_normal_form(rule, types)
    theta = match_rule(nf, state) if nf is not DROPPED else None
    effects = (
        interpret_rule(nf, theta, state, config, fresh_gen_for(state))
        if theta is not None
        else []
    )
    eng_records = Counter(
        canonical_form(chr_of_state(apply_transition(state, e), types))
        for e in effects
    )

    chr_records: Counter = Counter()
    if nf is not DROPPED:
        crule = chr_of_rule(nf, buffers, types)
        plan = build_var_plan(nf, buffers)
        env: Env = {plan.store: encode_store(state.store, types)}
        for b, cid, delay in state.gamma:
            env[plan.cvar[b]] = cid
            env[plan.dvar[b]] = delay
        facts = state.upsilon
        base = tuple(fact_constraint(a) for a in facts)
        for genv, _ in solve_builtins(crule.guard, env, facts, types, config):
            for benv, atoms in solve_builtins(
                crule.body_builtin, genv, facts, types, config, fresh_gen_for(state)
            ):
                goal = tuple(subst_constraint(u, benv) for u in crule.body_user)
                if any(not is_ground(a) for c in goal for a in c.args):
                    raise Undecided("translated body left unbound variables")
                succ = ChrState(
                    goal, base + tuple(fact_constraint(a) for a in atoms)
                )
                chr_records[canonical_form(succ)] += 1
    return eng_records == chr_records
