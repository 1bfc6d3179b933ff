"""Finite security lattices.

Levels are plain strings.  A lattice is built from a set of levels and a
covering relation; the order is its reflexive-transitive closure.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Sequence

from .errors import LatticeError


class Lattice:
    def __init__(self, levels: Iterable[str], order: Iterable[tuple[str, str]] = ()):
        self.levels: tuple[str, ...] = tuple(dict.fromkeys(levels))
        if not self.levels:
            raise LatticeError("a lattice needs at least one level")
        index = {name: i for i, name in enumerate(self.levels)}
        n = len(self.levels)
        leq = [[i == j for j in range(n)] for i in range(n)]
        for lo, hi in order:
            for name in (lo, hi):
                if name not in index:
                    raise LatticeError(f"unknown level {name!r}")
            leq[index[lo]][index[hi]] = True
        for k, i, j in product(range(n), repeat=3):
            if leq[i][k] and leq[k][j]:
                leq[i][j] = True
        for i, j in product(range(n), repeat=2):
            if i != j and leq[i][j] and leq[j][i]:
                raise LatticeError(
                    f"order is cyclic between {self.levels[i]!r} and {self.levels[j]!r}"
                )
        self._index = index
        self._leq = leq
        self._join = {}
        for a, b in product(self.levels, repeat=2):
            self._join[a, b] = self._least_upper_bound(a, b)
        bottoms = [a for a in self.levels if all(self.leq(a, b) for b in self.levels)]
        tops = [a for a in self.levels if all(self.leq(b, a) for b in self.levels)]
        if len(bottoms) != 1 or len(tops) != 1:
            raise LatticeError("lattice needs a unique bottom and a unique top")
        self.bottom: str = bottoms[0]
        self.top: str = tops[0]

    def _least_upper_bound(self, a: str, b: str) -> str:
        uppers = [c for c in self.levels if self.leq(a, c) and self.leq(b, c)]
        least = [c for c in uppers if all(self.leq(c, d) for d in uppers)]
        if not least:
            raise LatticeError(f"levels {a!r} and {b!r} have no least upper bound")
        return least[0]

    @classmethod
    def two_point(cls) -> Lattice:
        return cls(["L", "H"], [("L", "H")])

    @classmethod
    def from_chains(cls, chains: Sequence[Sequence[str]]) -> Lattice:
        """Build from chains such as ``[["L", "M", "H"]]`` meaning L < M < H."""
        levels = [name for chain in chains for name in chain]
        order = [(lo, hi) for chain in chains for lo, hi in zip(chain, chain[1:])]
        return cls(levels, order)

    def check(self, level: str) -> str:
        if level not in self._index:
            raise LatticeError(f"unknown level {level!r}")
        return level

    def __contains__(self, level: object) -> bool:
        return level in self._index

    def leq(self, a: str, b: str) -> bool:
        try:
            return self._leq[self._index[a]][self._index[b]]
        except KeyError as exc:
            raise LatticeError(f"unknown level {exc.args[0]!r}") from None

    def join(self, a: str, b: str) -> str:
        try:
            return self._join[a, b]
        except KeyError:
            self.check(a)
            self.check(b)
            raise

    def join_all(self, *levels: str) -> str:
        result = self.bottom
        for level in levels:
            result = self.join(result, level)
        return result

    def between(self, lo: str, hi: str) -> list[str]:
        """All levels ``x`` with ``lo ⊑ x ⊑ hi``, in declaration order."""
        return [x for x in self.levels if self.leq(lo, x) and self.leq(x, hi)]

    def covers(self) -> list[tuple[str, str]]:
        """The Hasse diagram: pairs (a, b) with a < b and nothing strictly between."""
        strict = [(a, b) for a, b in product(self.levels, repeat=2) if a != b and self.leq(a, b)]
        return [
            (a, b) for a, b in strict
            if not any(c not in (a, b) and self.leq(a, c) and self.leq(c, b) for c in self.levels)
        ]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lattice):
            return NotImplemented
        return set(self.levels) == set(other.levels) and all(
            self.leq(a, b) == other.leq(a, b) for a, b in product(self.levels, repeat=2)
        )

    def __hash__(self) -> int:
        return hash(frozenset(self.levels))

    def __repr__(self) -> str:
        return f"Lattice({list(self.levels)!r}, {self.covers()!r})"


def lattice_leq(lattice: Lattice, a: str, b: str) -> bool:
    return lattice.leq(a, b)


def lattice_join(lattice: Lattice, a: str, b: str) -> str:
    return lattice.join(a, b)
