"""Bisimilarity on finite precharts: checking relations, partition refinement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .semantics import Prechart, StateId, chart_of, coproduct
from .syntax import Expr, atoms


@dataclass(frozen=True)
class PartitionRelation:
    """An equivalence relation on a finite state set, stored as a partition.

    Blocks are ordered by their least member in discovery order, and each
    block lists its members in discovery order, so block numbering is stable.
    """

    universe: tuple[StateId, ...]
    blocks: tuple[tuple[StateId, ...], ...]

    def __post_init__(self) -> None:
        index = {x: i for i, x in enumerate(self.universe)}
        block_of: dict[StateId, int] = {}
        for b, block in enumerate(self.blocks):
            for x in block:
                if x not in index:
                    raise ValueError(f"block member {x!r} outside the universe")
                if x in block_of:
                    raise ValueError(f"{x!r} occurs in two blocks")
                block_of[x] = b
        if len(block_of) != len(self.universe):
            raise ValueError("blocks do not cover the universe")
        object.__setattr__(self, "_block_of", block_of)

    @classmethod
    def from_blocks(
        cls, universe: Iterable[StateId], blocks: Iterable[Iterable[StateId]]
    ) -> "PartitionRelation":
        universe = tuple(universe)
        index = {x: i for i, x in enumerate(universe)}
        ordered = [tuple(sorted(set(b), key=index.__getitem__)) for b in blocks]
        ordered = [b for b in ordered if b]
        ordered.sort(key=lambda b: index[b[0]])
        return cls(universe, tuple(ordered))

    @classmethod
    def identity(cls, universe: Iterable[StateId]) -> "PartitionRelation":
        universe = tuple(universe)
        return cls.from_blocks(universe, [(x,) for x in universe])

    @classmethod
    def total(cls, universe: Iterable[StateId]) -> "PartitionRelation":
        universe = tuple(universe)
        return cls.from_blocks(universe, [universe] if universe else [])

    @classmethod
    def from_pairs(
        cls, universe: Iterable[StateId], pairs: Iterable[tuple[StateId, StateId]]
    ) -> "PartitionRelation":
        """Finest partition relating every given pair (transitive closure)."""
        universe = tuple(universe)
        parent = {x: x for x in universe}

        def find(x: StateId) -> StateId:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for x, y in pairs:
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry
        groups: dict[StateId, list[StateId]] = {}
        for x in universe:
            groups.setdefault(find(x), []).append(x)
        return cls.from_blocks(universe, groups.values())

    def block_index(self, x: StateId) -> int:
        return self._block_of[x]  # type: ignore[attr-defined]

    def block_containing(self, x: StateId) -> tuple[StateId, ...]:
        return self.blocks[self.block_index(x)]

    def related(self, x: StateId, y: StateId) -> bool:
        return self.block_index(x) == self.block_index(y)

    def pairs(self) -> Iterator[tuple[StateId, StateId]]:
        """All related ordered pairs, diagonal included."""
        for block in self.blocks:
            for x in block:
                for y in block:
                    yield (x, y)

    def nontrivial_pairs(self) -> Iterator[tuple[StateId, StateId]]:
        for block in self.blocks:
            for x in block:
                for y in block:
                    if x != y:
                        yield (x, y)

    @property
    def is_identity(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def merge(self, x: StateId, y: StateId) -> "PartitionRelation":
        """Coarsen by joining the blocks of ``x`` and ``y``."""
        bx, by = self.block_index(x), self.block_index(y)
        if bx == by:
            return self
        blocks = [
            b for i, b in enumerate(self.blocks) if i not in (bx, by)
        ] + [self.blocks[bx] + self.blocks[by]]
        return PartitionRelation.from_blocks(self.universe, blocks)

    def same_partition(self, other: "PartitionRelation") -> bool:
        return set(map(frozenset, self.blocks)) == set(map(frozenset, other.blocks))


@dataclass(frozen=True)
class BisimViolation:
    """A failed clause: mismatched outputs, or an unmatched transition."""

    clause: str  # "output" | "forth" | "back"
    left: StateId
    right: StateId
    action: str
    successor: StateId | None = None


def check_bisimulation(
    X: Prechart,
    Y: Prechart,
    relation: Iterable[tuple[StateId, StateId]],
) -> tuple[bool, BisimViolation | None]:
    """Check the three bisimulation clauses for every related pair.

    Outputs must agree; every left transition must be matched on the right
    within the relation, and symmetrically.  The first failing pair is
    reported with its clause.
    """
    pairs = list(relation)
    for x, y in pairs:
        if not X.has_state(x) or not Y.has_state(y):
            raise ValueError(f"relation references unknown states ({x!r}, {y!r})")
    related = set(pairs)
    for x, y in pairs:
        if X.out(x) != Y.out(y):
            action = sorted(X.out(x) ^ Y.out(y))[0]
            return False, BisimViolation("output", x, y, action)
        for a in X.alphabet:
            for x2 in X.succ(x, a):
                if not any((x2, y2) in related for y2 in Y.succ(y, a)):
                    return False, BisimViolation("forth", x, y, a, x2)
            for y2 in Y.succ(y, a):
                if not any((x2, y2) in related for x2 in X.succ(x, a)):
                    return False, BisimViolation("back", x, y, a, y2)
    return True, None


def refine_once(X: Prechart, partition: PartitionRelation) -> PartitionRelation:
    """Split blocks by per-action sets of successor blocks."""
    block_of = {x: partition.block_index(x) for x in X.states}
    groups: dict[tuple, list[StateId]] = {}
    for x in X.states:
        sig = (
            block_of[x],
            tuple(frozenset(block_of[y] for y in X.succ(x, a)) for a in X.alphabet),
        )
        groups.setdefault(sig, []).append(x)
    return PartitionRelation.from_blocks(X.states, groups.values())


def bisimilarity(X: Prechart) -> PartitionRelation:
    """Largest bisimulation equivalence on ``X`` by partition refinement.

    Starts from the per-action output signature and iterates successor-block
    splitting to the greatest fixpoint.
    """
    groups: dict[frozenset[str], list[StateId]] = {}
    for x in X.states:
        groups.setdefault(X.out(x), []).append(x)
    partition = PartitionRelation.from_blocks(X.states, groups.values())
    while True:
        refined = refine_once(X, partition)
        if len(refined.blocks) == len(partition.blocks):
            return refined
        partition = refined


def bisimilar(e: Expr, f: Expr, alphabet: Iterable[str] | None = None) -> bool:
    """Decide whether two expressions have bisimilar charts."""
    alpha = tuple(alphabet) if alphabet is not None else tuple(sorted(atoms(e) | atoms(f)))
    X = chart_of(e, alpha)
    Y = chart_of(f, alpha)
    Z, inl, inr = coproduct(X, Y)
    return bisimilarity(Z).related(inl[e], inr[f])
