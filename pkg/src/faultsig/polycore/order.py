"""Lex and block-lex monomial orders over an explicit variable precedence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .universe import VarUniverse


@dataclass(frozen=True)
class MonomialOrder:
    """Lexicographic order over ``precedence`` (first name is largest).

    ``blocks`` is informational for block-lex orders: the precedence is the
    concatenation of the blocks, and inside a block the order is still lex.
    """

    precedence: tuple[str, ...]
    kind: str = "lex"
    blocks: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in ("lex", "block-lex"):
            raise ValueError(f"unsupported order kind {self.kind!r}")
        if len(set(self.precedence)) != len(self.precedence):
            raise ValueError("precedence contains duplicates")

    @classmethod
    def lex(cls, names: str | Sequence[str]) -> "MonomialOrder":
        if isinstance(names, str):
            names = names.replace(",", " ").split()
        return cls(tuple(names))

    @classmethod
    def block_lex(cls, blocks: Iterable[Sequence[str]]) -> "MonomialOrder":
        blocks = tuple(tuple(b) for b in blocks)
        return cls(tuple(n for b in blocks for n in b), "block-lex", blocks)

    @classmethod
    def for_universe(cls, universe: VarUniverse) -> "MonomialOrder":
        return cls(universe.names)

    def permutation(self, universe: VarUniverse) -> tuple[int, ...]:
        """Universe indices listed from most to least significant."""
        if len(self.precedence) != len(universe) or set(self.precedence) != set(universe.names):
            missing = set(universe.names) ^ set(self.precedence)
            raise ValueError(f"order does not cover the universe exactly: {sorted(missing)}")
        return tuple(universe.index(n) for n in self.precedence)

    def key(self, universe: VarUniverse):
        perm = self.permutation(universe)
        return lambda mon: tuple(mon[i] for i in perm)

    def rank(self, name: str) -> int:
        return self.precedence.index(name)

    def is_elimination_order(self, drop: Iterable[str], keep: Iterable[str]) -> bool:
        """True when every dropped variable precedes every kept one."""
        drop, keep = list(drop), list(keep)
        if not drop or not keep:
            return True
        return max(self.rank(n) for n in drop) < min(self.rank(n) for n in keep)
