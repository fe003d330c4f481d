"""One-step unfolding, the canonical solution of a layered chart, and checks.

A solution assigns an expression to every state so that each state's
expression is equivalent to the sum of its outputs and of action-prefixed
successor expressions.  Equivalence is decided semantically: bisimilarity is
an exact oracle for provable equivalence on this fragment.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Mapping

from .bisim import bisimilar
from .layering import BODY, ENTRY, LabelledPrechart, analysis_of_verified
from .semantics import Prechart, StateId, expr_step
from .syntax import Atom, Expr, Seq, Star, Sum, Zero, gsum

# canonical solutions of deep charts nest expressions proportionally
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class MeasureError(RuntimeError):
    """The solution recursion failed to descend; the witness must be broken."""


@dataclass
class Solution:
    """An expression assignment for every chart state, plus the companion memo."""

    chart: Prechart
    assign: dict[StateId, Expr]
    companion: dict[tuple[StateId, StateId], Expr] = field(default_factory=dict)
    verified: bool | None = None


def unfold(e: Expr) -> Expr:
    """One-step unfolding: outputs plus action-prefixed successors.

    Both halves are kept even when empty, so ``0`` unfolds to ``0 + 0``.
    """
    outs, succ = expr_step(e)
    outputs = [Atom(a) for a in sorted(outs)]
    steps = [Seq(Atom(a), f) for a in sorted(succ) for f in succ[a]]
    return Sum(gsum(outputs), gsum(steps))


def _component(first: list[Expr], second: list[Expr]) -> Expr:
    # a star component is the sum of its two halves; entirely empty ones
    # collapse to 0 rather than 0 + 0
    if not first and not second:
        return Zero()
    return Sum(gsum(first), gsum(second))


def canonical_solution(L: LabelledPrechart) -> Solution:
    """The explicit solution of a chart carried by a layering witness.

    Each state is assigned (entry self-loops + entries into the loop)*
    (outputs + body continuations); the companion expression of a loop state
    relative to an anchor follows the same shape but routes body steps back
    to the anchor.  Well-foundedness is enforced at run time: entry
    recursion must descend in loop level and body recursion in body depth,
    and companions are only ever taken inside the anchor's loop.
    """
    a = analysis_of_verified(L)
    X = L.base
    en = a.longest_paths(a.diredge_adj)
    bd = a.longest_paths(a.body_adj)
    diredge = a.diredge

    outputs = {x: [act for act in X.alphabet if act in X.out(x)] for x in X.states}
    entry_self = {
        x: [act for act in X.alphabet if (x, act, x) in L.tags and L.tags[(x, act, x)] == ENTRY]
        for x in X.states
    }
    entry_steps = {
        x: [
            (act, y)
            for act in X.alphabet
            for y in X.succ(x, act)
            if y != x and L.tags[(x, act, y)] == ENTRY
        ]
        for x in X.states
    }
    body_steps = {
        x: [(act, y) for act in X.alphabet for y in X.succ(x, act) if L.tags[(x, act, y)] == BODY]
        for x in X.states
    }

    s_memo: dict[StateId, Expr] = {}
    t_memo: dict[tuple[StateId, StateId], Expr] = {}

    def check(cond: bool, what: str) -> None:
        if not cond:
            raise MeasureError(f"solution recursion failed to decrease: {what}")

    def companion(x: StateId, z: StateId) -> Expr:
        if (x, z) in t_memo:
            return t_memo[(x, z)]
        first_terms = []
        for act, y in entry_steps[x]:
            check((x, y) in diredge and en[y] < en[x], f"entry {x!r}->{y!r}")
            first_terms.append(Seq(Atom(act), companion(y, x)))
        second_terms: list[Expr] = []
        for act, y in body_steps[x]:
            if y == z:
                second_terms.append(Atom(act))
            else:
                check((z, y) in diredge and bd[y] < bd[x], f"body {x!r}->{y!r} under {z!r}")
                second_terms.append(Seq(Atom(act), companion(y, z)))
        result = Star(
            _component([Atom(act) for act in entry_self[x]], first_terms),
            _component([Atom(act) for act in outputs[x]], second_terms),
        )
        t_memo[(x, z)] = result
        return result

    def solve(x: StateId) -> Expr:
        if x in s_memo:
            return s_memo[x]
        first_terms = []
        for act, y in entry_steps[x]:
            check((x, y) in diredge and en[y] < en[x], f"entry {x!r}->{y!r}")
            first_terms.append(Seq(Atom(act), companion(y, x)))
        second_terms = []
        for act, y in body_steps[x]:
            check(bd[y] < bd[x], f"body {x!r}->{y!r}")
            second_terms.append(Seq(Atom(act), solve(y)))
        result = Star(
            _component([Atom(act) for act in entry_self[x]], first_terms),
            _component([Atom(act) for act in outputs[x]], second_terms),
        )
        s_memo[x] = result
        return result

    assign = {x: solve(x) for x in X.states}
    return Solution(X, assign, t_memo)


def verify_solution(
    X: Prechart, solution: Solution | Mapping[StateId, Expr]
) -> tuple[bool, StateId | None]:
    """Semantically check the per-state equations, reporting a failing state.

    Each assigned expression must be bisimilar to the sum of the state's
    outputs and of action-prefixed assignments of its successors.
    """
    assign = solution.assign if isinstance(solution, Solution) else dict(solution)
    for x in X.states:
        if x not in assign:
            raise ValueError(f"partial assignment: no expression for state {x!r}")
    for x in X.states:
        outputs = [Atom(a) for a in X.alphabet if a in X.out(x)]
        steps = [Seq(Atom(a), assign[y]) for a in X.alphabet for y in X.succ(x, a)]
        rhs = Sum(gsum(outputs), gsum(steps))
        if not bisimilar(assign[x], rhs):
            if isinstance(solution, Solution):
                solution.verified = False
            return False, x
    if isinstance(solution, Solution):
        solution.verified = True
    return True, None


def simplify(e: Expr) -> Expr:
    """Cosmetic unit cleanup only: drop 0 summands and left-0 sequences."""
    if isinstance(e, Sum):
        left, right = simplify(e.left), simplify(e.right)
        if left == Zero():
            return right
        if right == Zero():
            return left
        return Sum(left, right)
    if isinstance(e, Seq):
        left, right = simplify(e.left), simplify(e.right)
        if left == Zero():
            return Zero()
        return Seq(left, right)
    if isinstance(e, Star):
        return Star(simplify(e.left), simplify(e.right))
    return e
