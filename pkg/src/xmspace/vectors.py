"""Finitely supported rational vectors indexed by positive integers."""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Tuple

from .errors import ParseError
from .rational import as_fraction, parse_fraction


class SparseVector:
    """Immutable map ``index -> nonzero Fraction`` with sorted support.

    Used both for vectors of c00 and for functionals (coefficients of e_i*).
    """

    __slots__ = ("_items", "_map", "_hash")

    def __init__(self, entries: Mapping[int, object] | Iterable[Tuple[int, object]] = ()):
        if isinstance(entries, Mapping):
            entries = entries.items()
        data: Dict[int, Fraction] = {}
        for idx, val in entries:
            if not isinstance(idx, int) or isinstance(idx, bool) or idx < 1:
                raise ValueError(f"coordinate index must be a positive integer, got {idx!r}")
            val = as_fraction(val)
            if idx in data:
                raise ValueError(f"duplicate coordinate {idx}")
            if val != 0:
                data[idx] = val
        self._items = tuple(sorted(data.items()))
        self._map = dict(self._items)
        self._hash = None

    @classmethod
    def unit(cls, idx: int, value=1) -> "SparseVector":
        return cls({idx: value})

    @classmethod
    def indicator(cls, coords: Iterable[int], value=1) -> "SparseVector":
        return cls({c: value for c in coords})

    def items(self) -> Tuple[Tuple[int, Fraction], ...]:
        return self._items

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(i for i, _ in self._items)

    def __getitem__(self, idx: int) -> Fraction:
        return self._map.get(idx, Fraction(0))

    def __len__(self):
        return len(self._items)

    def __iter__(self) -> Iterator[Tuple[int, Fraction]]:
        return iter(self._items)

    def __bool__(self):
        return bool(self._items)

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self._items == other._items

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __repr__(self):
        return f"SparseVector({format_vector(self)!r})"

    def __add__(self, other: "SparseVector") -> "SparseVector":
        out = dict(self._map)
        for i, v in other:
            out[i] = out.get(i, Fraction(0)) + v
        return SparseVector(out)

    def __neg__(self):
        return SparseVector({i: -v for i, v in self._items})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SparseVector":
        c = as_fraction(c)
        return SparseVector({i: c * v for i, v in self._items})

    def abs(self) -> "SparseVector":
        return SparseVector({i: abs(v) for i, v in self._items})

    def positive_part(self) -> "SparseVector":
        return SparseVector({i: v for i, v in self._items if v > 0})

    def negative_part(self) -> "SparseVector":
        """Absolute values of the negative coordinates."""
        return SparseVector({i: -v for i, v in self._items if v < 0})

    def restrict(self, coords: Iterable[int]) -> "SparseVector":
        keep = set(coords)
        return SparseVector({i: v for i, v in self._items if i in keep})

    def dot(self, other: "SparseVector") -> Fraction:
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        return sum((v * big[i] for i, v in small._items), Fraction(0))

    def sup_norm(self) -> Fraction:
        return max((abs(v) for _, v in self._items), default=Fraction(0))

    def l1_norm(self) -> Fraction:
        return sum((abs(v) for _, v in self._items), Fraction(0))

    def is_nonnegative(self) -> bool:
        return all(v > 0 for _, v in self._items)


def parse_vector(text: str) -> SparseVector:
    """Parse ``"idx:num/den,idx:num/den"`` with strictly increasing indices."""
    text = text.strip()
    if not text:
        return SparseVector()
    entries = []
    last = 0
    for chunk in text.split(","):
        if ":" not in chunk:
            raise ParseError(f"expected idx:value, got {chunk!r}")
        idx_s, val_s = chunk.split(":", 1)
        try:
            idx = int(idx_s.strip())
        except ValueError:
            raise ParseError(f"bad index {idx_s!r}") from None
        if idx <= last:
            raise ParseError("indices must be positive and strictly increasing")
        last = idx
        entries.append((idx, parse_fraction(val_s)))
    return SparseVector(entries)


def format_vector(x: SparseVector) -> str:
    return ",".join(f"{i}:{v}" for i, v in x)
