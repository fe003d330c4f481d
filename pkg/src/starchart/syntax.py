"""Syntax of 1-free star expressions: trees, concrete syntax, size measures.

Expressions are built from deadlock ``0``, atomic actions, alternative
composition ``e + f``, sequential composition ``ef``, and the binary star
``e*f`` (iterate ``e``, then proceed as ``f``).  There is no constant 1 and
no unary Kleene star.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

ACTION_TOKEN = re.compile(r"[a-z][a-z0-9_]*")


class ParseError(ValueError):
    """Malformed expression text; carries the offending position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class UnknownActionError(ParseError):
    """An atom that is not in (and cannot be split over) the alphabet."""


def declare_alphabet(actions: Iterable[str]) -> tuple[str, ...]:
    """Validate an alphabet declaration, preserving declaration order."""
    seen: list[str] = []
    for a in actions:
        if not ACTION_TOKEN.fullmatch(a):
            raise ValueError(f"invalid action name: {a!r}")
        if a not in seen:
            seen.append(a)
    return tuple(seen)


@dataclass(frozen=True)
class Expr:
    """Base class of expression nodes; immutable, compared structurally."""

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Zero(Expr):
    """Deadlock: no outputs and no transitions."""


@dataclass(frozen=True)
class Atom(Expr):
    action: str


@dataclass(frozen=True)
class Sum(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Seq(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Star(Expr):
    """Binary star: iterate ``left``, then continue as ``right``."""

    left: Expr
    right: Expr


def atoms(e: Expr) -> frozenset[str]:
    """Action names occurring in ``e``."""
    if isinstance(e, Atom):
        return frozenset((e.action,))
    if isinstance(e, (Sum, Seq, Star)):
        return atoms(e.left) | atoms(e.right)
    return frozenset()


def subterms(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, (Sum, Seq, Star)):
        yield from subterms(e.left)
        yield from subterms(e.right)


# --- parsing ---------------------------------------------------------------
#
# Grammar (precedence low to high): sum, sequencing (juxtaposition or "."),
# binary star.  Star operands are atoms: an action, "0", or a parenthesised
# expression.  "+" parses right-nested, juxtaposition left-nested.


def _split_actions(word: str, alphabet: set[str], pos: int) -> list[str]:
    # Greedy longest-prefix split of an alphanumeric run into declared
    # actions, so "aa" means a.a under alphabet {a} while a declared
    # multi-character action still lexes as itself.
    if word in alphabet:
        return [word]
    parts: list[str] = []
    rest = word
    while rest:
        for k in range(len(rest), 0, -1):
            if rest[:k] in alphabet:
                parts.append(rest[:k])
                rest = rest[k:]
                break
        else:
            raise UnknownActionError(f"unknown action {word!r}", pos)
    return parts


def _tokens(text: str, alphabet: set[str]) -> list[tuple[str, str, int]]:
    out: list[tuple[str, str, int]] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "+*().":
            out.append((c, c, i))
            i += 1
        elif c == "0":
            out.append(("zero", "0", i))
            i += 1
        else:
            m = ACTION_TOKEN.match(text, i)
            if not m:
                raise ParseError(f"unexpected character {c!r}", i)
            for name in _split_actions(m.group(), alphabet, i):
                out.append(("act", name, i))
            i = m.end()
    return out


def parse(text: str, alphabet: Iterable[str]) -> Expr:
    """Parse expression source over the declared alphabet."""
    alpha = set(declare_alphabet(alphabet))
    toks = _tokens(text, alpha)
    pos = 0

    def peek() -> str | None:
        return toks[pos][0] if pos < len(toks) else None

    def here() -> int:
        return toks[pos][2] if pos < len(toks) else len(text)

    def parse_sum() -> Expr:
        left = parse_seq()
        if peek() == "+":
            nonlocal pos
            pos += 1
            return Sum(left, parse_sum())
        return left

    def parse_seq() -> Expr:
        nonlocal pos
        e = parse_star()
        while True:
            k = peek()
            if k == ".":
                pos += 1
                k = peek()
                if k not in ("act", "zero", "("):
                    raise ParseError("expected expression after '.'", here())
            if k in ("act", "zero", "("):
                e = Seq(e, parse_star())
            else:
                return e

    def parse_star() -> Expr:
        nonlocal pos
        e = parse_atom()
        if peek() == "*":
            pos += 1
            return Star(e, parse_atom())
        return e

    def parse_atom() -> Expr:
        nonlocal pos
        k = peek()
        if k == "act":
            name = toks[pos][1]
            pos += 1
            return Atom(name)
        if k == "zero":
            pos += 1
            return Zero()
        if k == "(":
            pos += 1
            e = parse_sum()
            if peek() != ")":
                raise ParseError("expected ')'", here())
            pos += 1
            return e
        raise ParseError("expected an expression", here())

    e = parse_sum()
    if pos != len(toks):
        raise ParseError(f"unexpected {toks[pos][1]!r}", here())
    return e


# --- printing --------------------------------------------------------------


def _juxta(a: str, b: str) -> str:
    # A separating space is only needed where two alphanumeric tokens would
    # otherwise merge into one.
    if a[-1] in "abcdefghijklmnopqrstuvwxyz0123456789_" and b[0] in "abcdefghijklmnopqrstuvwxyz0123456789":
        return a + " " + b
    return a + b


def render(e: Expr) -> str:
    """Print with minimal parentheses; ``parse(render(e))`` equals ``e``."""
    if isinstance(e, Zero):
        return "0"
    if isinstance(e, Atom):
        return e.action
    if isinstance(e, Sum):
        left = render(e.left)
        if isinstance(e.left, Sum):
            left = f"({left})"
        return f"{left} + {render(e.right)}"
    if isinstance(e, Seq):
        left = render(e.left)
        if isinstance(e.left, Sum):
            left = f"({left})"
        right = render(e.right)
        if isinstance(e.right, (Sum, Seq)):
            right = f"({right})"
        return _juxta(left, right)
    if isinstance(e, Star):
        left = render(e.left)
        if not isinstance(e.left, (Atom, Zero)):
            left = f"({left})"
        right = render(e.right)
        if not isinstance(e.right, (Atom, Zero)):
            right = f"({right})"
        return f"{left}*{right}"
    raise TypeError(f"not an expression: {e!r}")


# --- generalised sums and measures ------------------------------------------


def gsum(terms: Iterable[Expr]) -> Expr:
    """Right-nested sum of ``terms``; empty is 0, a singleton is itself."""
    items = list(terms)
    if not items:
        return Zero()
    out = items[-1]
    for t in reversed(items[:-1]):
        out = Sum(t, out)
    return out


def star_height(e: Expr) -> int:
    if isinstance(e, (Zero, Atom)):
        return 0
    if isinstance(e, (Sum, Seq)):
        return max(star_height(e.left), star_height(e.right))
    if isinstance(e, Star):
        return 1 + max(star_height(e.left), star_height(e.right))
    raise TypeError(f"not an expression: {e!r}")


def size_bound(e: Expr) -> int:
    """Upper bound on the number of states of the chart of ``e``."""
    if isinstance(e, (Zero, Atom)):
        return 1
    if isinstance(e, (Sum, Star)):
        return size_bound(e.left) + size_bound(e.right)
    if isinstance(e, Seq):
        return size_bound(e.left) * (1 + size_bound(e.right))
    raise TypeError(f"not an expression: {e!r}")
