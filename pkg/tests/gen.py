"""Shared test machinery: seeded generators, axiom rewriting, small oracles."""

from __future__ import annotations

import random
from itertools import product

from starchart import (
    Atom,
    Expr,
    LabelledPrechart,
    Prechart,
    Seq,
    Star,
    Sum,
    Zero,
    size_bound,
)

DEFAULT_ALPHABET = ("a", "b", "c")


# --- expressions ----------------------------------------------------------------


def random_expr(rng: random.Random, alphabet=DEFAULT_ALPHABET, depth: int = 4) -> Expr:
    """A random expression of bounded depth, biased toward small leaves."""
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.2:
            return Zero()
        return Atom(rng.choice(alphabet))
    op = rng.choice((Sum, Seq, Star))
    return op(random_expr(rng, alphabet, depth - 1), random_expr(rng, alphabet, depth - 1))


def node_count(e: Expr) -> int:
    if isinstance(e, (Zero, Atom)):
        return 1
    return 1 + node_count(e.left) + node_count(e.right)


def all_exprs(alphabet, max_nodes: int) -> list[Expr]:
    """Every expression with at most ``max_nodes`` AST nodes."""
    by_size: dict[int, list[Expr]] = {1: [Zero()] + [Atom(a) for a in alphabet]}
    for n in range(2, max_nodes + 1):
        out: list[Expr] = []
        for left_size in range(1, n - 1):
            right_size = n - 1 - left_size
            if right_size < 1:
                continue
            for left in by_size.get(left_size, ()):
                for right in by_size.get(right_size, ()):
                    out.extend((Sum(left, right), Seq(left, right), Star(left, right)))
        by_size[n] = out
    return [e for size in sorted(by_size) for e in by_size[size]]


# --- axiom schemes -----------------------------------------------------------------


def axiom_instances(name: str, e1: Expr, e2: Expr, e3: Expr) -> tuple[Expr, Expr]:
    """Left- and right-hand side of one axiom scheme, instantiated."""
    table = {
        "B1": (Sum(e1, e2), Sum(e2, e1)),
        "B2": (Sum(e1, Sum(e2, e3)), Sum(Sum(e1, e2), e3)),
        "B3": (Sum(e1, e1), e1),
        "B4": (Seq(Sum(e1, e2), e3), Sum(Seq(e1, e3), Seq(e2, e3))),
        "B5": (Seq(e1, Seq(e2, e3)), Seq(Seq(e1, e2), e3)),
        "B6": (Sum(e1, Zero()), e1),
        "B7": (Seq(Zero(), e1), Zero()),
        "BKS1": (Star(e1, e2), Sum(Seq(e1, Star(e1, e2)), e2)),
        "BKS2": (Seq(Star(e1, e2), e3), Star(e1, Seq(e2, e3))),
    }
    return table[name]


AXIOM_NAMES = ("B1", "B2", "B3", "B4", "B5", "B6", "B7", "BKS1", "BKS2")


def _root_rewrites(e: Expr) -> list[Expr]:
    """All single axiom applications at the root, both directions."""
    out: list[Expr] = [Sum(e, e), Sum(e, Zero())]  # B3, B6 right to left
    if isinstance(e, Sum):
        left, right = e.left, e.right
        out.append(Sum(right, left))  # B1
        if isinstance(right, Sum):
            out.append(Sum(Sum(left, right.left), right.right))  # B2 ->
        if isinstance(left, Sum):
            out.append(Sum(left.left, Sum(left.right, right)))  # B2 <-
        if left == right:
            out.append(left)  # B3
        if right == Zero():
            out.append(left)  # B6
        if (
            isinstance(left, Seq)
            and isinstance(left.right, Star)
            and left.left == left.right.left
            and right == left.right.right
        ):
            out.append(left.right)  # BKS1 <-
        if (
            isinstance(left, Seq)
            and isinstance(right, Seq)
            and left.right == right.right
        ):
            out.append(Seq(Sum(left.left, right.left), left.right))  # B4 <-
    if isinstance(e, Seq):
        left, right = e.left, e.right
        if isinstance(left, Sum):
            out.append(Sum(Seq(left.left, right), Seq(left.right, right)))  # B4 ->
        if isinstance(right, Seq):
            out.append(Seq(Seq(left, right.left), right.right))  # B5 <-
        if isinstance(left, Seq):
            out.append(Seq(left.left, Seq(left.right, right)))  # B5 ->
        if left == Zero():
            out.append(Zero())  # B7
        if isinstance(left, Star):
            out.append(Star(left.left, Seq(left.right, right)))  # BKS2 ->
    if isinstance(e, Star):
        left, right = e.left, e.right
        out.append(Sum(Seq(left, e), right))  # BKS1 ->
        if isinstance(right, Seq):
            out.append(Seq(Star(left, right.left), right.right))  # BKS2 <-
    return out


def _rewrite_sites(e: Expr, path=()) -> list[tuple[tuple, Expr]]:
    sites = [(path, alt) for alt in _root_rewrites(e)]
    if isinstance(e, (Sum, Seq, Star)):
        sites += _rewrite_sites(e.left, path + ("left",))
        sites += _rewrite_sites(e.right, path + ("right",))
    return sites


def _replace_at(e: Expr, path: tuple, replacement: Expr) -> Expr:
    if not path:
        return replacement
    head, rest = path[0], path[1:]
    cls = type(e)
    if head == "left":
        return cls(_replace_at(e.left, rest, replacement), e.right)
    return cls(e.left, _replace_at(e.right, rest, replacement))


def rewrite_steps(rng: random.Random, e: Expr, steps: int, size_cap: int = 400) -> Expr:
    """Apply up to ``steps`` random axiom rewrites anywhere in the term."""
    current = e
    for _ in range(steps):
        sites = [
            (path, alt)
            for path, alt in _rewrite_sites(current)
            if size_bound(_replace_at(current, path, alt)) <= size_cap
        ]
        if not sites:
            break
        path, alt = rng.choice(sites)
        current = _replace_at(current, path, alt)
    return current


# --- charts -------------------------------------------------------------------------


def random_chart(
    rng: random.Random,
    n_states: int = 5,
    alphabet=("a", "b"),
    edge_prob: float = 0.35,
    out_prob: float = 0.25,
    rooted: bool = False,
) -> Prechart:
    states = [f"s{i}" for i in range(n_states)]
    outputs = {
        x: {a for a in alphabet if rng.random() < out_prob} for x in states
    }
    transitions: dict[str, dict[str, list[str]]] = {}
    for x in states:
        row: dict[str, list[str]] = {}
        for a in alphabet:
            targets = [y for y in states if rng.random() < edge_prob]
            if targets:
                row[a] = targets
        if row:
            transitions[x] = row
    return Prechart.make(alphabet, states, outputs, transitions, states[0] if rooted else None)


def fig3_left() -> tuple[Prechart, LabelledPrechart]:
    """The four-state well-layered chart whose naive rerouting loses layering."""
    states = ("x2", "v", "v'", "x1")
    edges = [
        ("x2", "v", "e"),
        ("x2", "v'", "e"),
        ("v", "x2", "b"),
        ("v", "v'", "e"),
        ("v'", "v", "b"),
        ("v'", "x1", "b"),
        ("x1", "v", "b"),
    ]
    transitions: dict[str, dict[str, list[str]]] = {}
    for x, y, _ in edges:
        transitions.setdefault(x, {}).setdefault("a", []).append(y)
    X = Prechart.make(("a",), states, {}, transitions)
    tags = {(x, "a", y): t for x, y, t in edges}
    return X, LabelledPrechart(X, tags)


def fig3_right() -> Prechart:
    """The rerouted three-state chart, which admits no layering witness."""
    states = ("x2", "v", "v'")
    edges = [("x2", "v"), ("x2", "v'"), ("v", "x2"), ("v", "v'"), ("v'", "v"), ("v'", "x2")]
    transitions: dict[str, dict[str, list[str]]] = {}
    for x, y in edges:
        transitions.setdefault(x, {}).setdefault("a", []).append(y)
    return Prechart.make(("a",), states, {}, transitions)


def all_labellings(X: Prechart) -> list[LabelledPrechart]:
    """Every entry/body labelling of ``X`` (flat ones and non-flat ones alike),
    labelling each transition independently."""
    edges = list(X.edges())
    out = []
    for combo in product("eb", repeat=len(edges)):
        out.append(LabelledPrechart(X, dict(zip(edges, combo))))
    return out


# --- small graph oracles ----------------------------------------------------------


def isomorphic(X: Prechart, Y: Prechart) -> bool:
    """Structure-preserving bijection search (roots must correspond)."""
    if len(X.states) != len(Y.states) or X.alphabet != Y.alphabet:
        return False
    if (X.root is None) != (Y.root is None):
        return False

    def signature(Z: Prechart, x) -> tuple:
        return (
            tuple(sorted(Z.out(x))),
            tuple(len(Z.succ(x, a)) for a in Z.alphabet),
            Z.root == x,
        )

    y_by_sig: dict[tuple, list] = {}
    for y in Y.states:
        y_by_sig.setdefault(signature(Y, y), []).append(y)

    mapping: dict = {}
    used: set = set()

    def consistent(x, y) -> bool:
        for a in X.alphabet:
            image = {mapping[t] for t in X.succ(x, a) if t in mapping}
            if not image <= set(Y.succ(y, a)):
                return False
            for src, dst in mapping.items():
                if (x in X.succ(src, a)) != (y in Y.succ(dst, a)):
                    return False
        return True

    order = list(X.states)

    def assign(i: int) -> bool:
        if i == len(order):
            gr = [(x, mapping[x]) for x in X.states]
            from starchart import is_homomorphism

            ok, _ = is_homomorphism(dict(gr), X, Y)
            return ok
        x = order[i]
        for y in y_by_sig.get(signature(X, x), ()):
            if y in used:
                continue
            if X.root == x and Y.root != y:
                continue
            mapping[x] = y
            used.add(y)
            if consistent(x, y) and assign(i + 1):
                return True
            del mapping[x]
            used.discard(y)
        return False

    return assign(0)


def simple_cycles(adj: dict) -> list[tuple]:
    """All simple cycles of a small digraph, as node tuples without repeats."""
    nodes = sorted(adj, key=str)
    cycles: set[tuple] = set()

    def walk(start, node, path: list, seen: set):
        for nxt in adj.get(node, ()):
            if nxt == start:
                rotation = tuple(path)
                least = min(range(len(rotation)), key=lambda i: str(rotation[i]))
                cycles.add(rotation[least:] + rotation[:least])
            elif nxt not in seen and str(nxt) >= str(start):
                seen.add(nxt)
                path.append(nxt)
                walk(start, nxt, path, seen)
                path.pop()
                seen.discard(nxt)

    for start in nodes:
        walk(start, start, [start], {start})
    return sorted(cycles, key=str)
