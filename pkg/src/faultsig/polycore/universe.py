"""Variable universes shared by polynomials."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class VarClass(str, Enum):
    PARAMETER = "parameter"
    FAULT = "fault"
    AUXILIARY = "auxiliary"
    SLOT = "slot"


@dataclass(frozen=True)
class VarUniverse:
    """Ordered, class-tagged variable names.

    Declaration order doubles as the default precedence (first variable is
    the largest under lex).
    """

    names: tuple[str, ...]
    classes: tuple[VarClass, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(self.names) != len(self.classes):
            raise ValueError("names and classes differ in length")
        if len(set(self.names)) != len(self.names):
            dup = sorted({n for n in self.names if self.names.count(n) > 1})
            raise ValueError(f"duplicate variable names: {dup}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @classmethod
    def build(cls, pairs: Iterable[tuple[str, VarClass | str]]) -> "VarUniverse":
        pairs = list(pairs)
        return cls(tuple(n for n, _ in pairs), tuple(VarClass(c) for _, c in pairs))

    @classmethod
    def of(cls, names: str | Sequence[str], klass: VarClass | str = VarClass.PARAMETER) -> "VarUniverse":
        """Convenience constructor: ``VarUniverse.of("x y z")``."""
        if isinstance(names, str):
            names = names.replace(",", " ").split()
        return cls.build((n, klass) for n in names)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def class_of(self, name: str) -> VarClass:
        return self.classes[self.index(name)]

    def of_class(self, klass: VarClass | str) -> tuple[str, ...]:
        klass = VarClass(klass)
        return tuple(n for n, c in zip(self.names, self.classes) if c is klass)

    def precedence(self) -> tuple[str, ...]:
        return self.names

    def extend(self, pairs: Iterable[tuple[str, VarClass | str]]) -> "VarUniverse":
        """Universe with extra variables appended (existing names are kept)."""
        extra = [(n, VarClass(c)) for n, c in pairs if n not in self._index]
        return VarUniverse(self.names + tuple(n for n, _ in extra),
                           self.classes + tuple(c for _, c in extra))

    def restrict(self, names: Iterable[str]) -> "VarUniverse":
        keep = set(names)
        return VarUniverse.build((n, c) for n, c in zip(self.names, self.classes) if n in keep)

    def reordered(self, names: Sequence[str]) -> "VarUniverse":
        """Same variables, new declaration order."""
        if sorted(names) != sorted(self.names):
            raise ValueError("reordering must be a permutation of the universe")
        return VarUniverse.build((n, self.class_of(n)) for n in names)
