"""Words over generators, identity patterns over variables, substitution.

Words are finite nonempty sequences of 0-based generator indices; patterns
are nonempty sequences of 0-based variable indices.  A substitution maps
variables to words and instantiates a pattern by concatenation.  Everything
here is an immutable value type.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator


@dataclass(frozen=True, order=True)
class Word:
    """A concrete product of generators, stored as a tuple of indices."""

    letters: tuple[int, ...]

    def __post_init__(self):
        if not self.letters:
            raise ValueError("a word must be nonempty")
        if any(x < 0 for x in self.letters):
            raise ValueError("generator indices must be >= 0")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def max_letter(self) -> int:
        return max(self.letters)

    def shortlex_key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.letters), self.letters)


def word(*letters: int) -> Word:
    return Word(tuple(letters))


@dataclass(frozen=True)
class Pattern:
    """A product of variables; the two sides of an identity are patterns."""

    symbols: tuple[int, ...]

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("a pattern must be nonempty")
        if any(v < 0 for v in self.symbols):
            raise ValueError("variable indices must be >= 0")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def __mul__(self, other: "Pattern") -> "Pattern":
        return Pattern(self.symbols + other.symbols)

    def variables(self) -> frozenset[int]:
        return frozenset(self.symbols)


def pattern(*symbols: int) -> Pattern:
    return Pattern(tuple(symbols))


@dataclass(frozen=True)
class Identity:
    """A two-sided identity between patterns with identical variable sets."""

    lhs: Pattern
    rhs: Pattern

    def __post_init__(self):
        if self.lhs.variables() != self.rhs.variables():
            raise ValueError(
                "identity sides must use the same variables: "
                f"{sorted(self.lhs.variables())} vs {sorted(self.rhs.variables())}"
            )

    def variables(self) -> frozenset[int]:
        return self.lhs.variables()

    def sides(self) -> tuple[Pattern, Pattern]:
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class Substitution:
    """Maps variable indices to nonempty words (semigroup substitution)."""

    assignment: dict[int, Word] = field(default_factory=dict)

    def __post_init__(self):
        for v, w in self.assignment.items():
            if not isinstance(w, Word):
                raise TypeError(f"variable {v} must be assigned a Word")

    def __getitem__(self, v: int) -> Word:
        return self.assignment[v]

    def __contains__(self, v: int) -> bool:
        return v in self.assignment


def substitute(p: Pattern, s: Substitution) -> Word:
    """Instantiate pattern p under s: the concatenation of s(v) per symbol.

    Raises ValueError if some variable of p is unassigned.
    """
    parts: list[int] = []
    for v in p.symbols:
        if v not in s:
            raise ValueError(f"substitution does not assign variable {v}")
        parts.extend(s[v].letters)
    return Word(tuple(parts))


def occurrences(w: Word, f: Word) -> list[int]:
    """All start positions where f occurs as a contiguous factor of w.

    Overlapping occurrences are included; positions ascend.
    """
    wl, fl = w.letters, f.letters
    n, m = len(wl), len(fl)
    return [i for i in range(n - m + 1) if wl[i : i + m] == fl]


def shortlex_min(words: Iterable[Word]) -> Word:
    return min(words, key=Word.shortlex_key)


def _match_symbols(letters: tuple[int, ...], symbols: tuple[int, ...], start: int):
    """Yield assignments {var: segment} matching the pattern against the
    factor of `letters` beginning at `start` (all segment splits, nonempty,
    consistent on repeated variables), each with the factor's end position."""
    n = len(letters)

    def rec(pos: int, si: int, env: dict):
        if si == len(symbols):
            yield dict(env), pos
            return
        v = symbols[si]
        bound = env.get(v)
        if bound is not None:
            end = pos + len(bound)
            if end <= n and letters[pos:end] == bound:
                yield from rec(end, si + 1, env)
            return
        remaining = len(symbols) - si - 1  # later symbols need >= 1 letter each
        for end in range(pos + 1, n - remaining + 1):
            env[v] = letters[pos:end]
            yield from rec(end, si + 1, env)
            del env[v]

    yield from rec(start, 0, {})


def pattern_matches(w: Word, p: Pattern, start: int) -> list[tuple[Substitution, int]]:
    """All matches of pattern p as a factor of w starting at position start;
    each result is (substitution, end position of the matched factor)."""
    out = []
    for env, end in _match_symbols(w.letters, p.symbols, start):
        out.append((Substitution({v: Word(seg) for v, seg in env.items()}), end))
    return out
