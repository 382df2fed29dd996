"""Injective codings of outer positions into axiom tracks (>= 2).

The default coding writes every letter of the position in Elias-delta code
(shifted by one so that letter 0 is codable), prefixes a 1 bit, and reads
the result as a binary number g(a).  The track is 1 + g(a), so the empty
position gets track 2.  Decoding is a single left-to-right parse, and any
integer that is not a well-formed code decodes to None.

Delta codes matter here: tracks are codes of positions that themselves
contain tracks, and a code that doubles the length of every letter would
make the bit length of tracks grow exponentially with that nesting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .terms import Abs, Position, Residuation, Var, collapse_word, try_subterm


def _gamma(n: int) -> str:
    b = bin(n)[2:]
    return "0" * (len(b) - 1) + b


def _delta(n: int) -> str:
    b = bin(n)[2:]
    return _gamma(len(b)) + b[1:]


@lru_cache(maxsize=1 << 16)
def position_code(a: Position) -> int:
    """g(a): the integer whose binary form is 1 followed by the delta codes of letter+1."""
    return int("1" + "".join(_delta(k + 1) for k in a), 2)


@lru_cache(maxsize=1 << 16)
def position_decode(g: int) -> Optional[Position]:
    if g < 1:
        return None
    bits = bin(g)[3:]
    n = len(bits)
    out = []
    i = 0
    while i < n:
        one = bits.find("1", i)
        if one < 0:
            return None
        z = one - i
        if one + z + 1 > n:
            return None
        length = int(bits[one : one + z + 1], 2)
        i = one + z + 1
        if i + length - 1 > n:
            return None
        out.append(int("1" + bits[i : i + length - 1], 2) - 1)
        i += length - 1
    return tuple(out)


class Coding:
    """Interface: `encode(a)` is a track >= 2, `decode(k)` the position or None."""

    def encode(self, a: Position) -> int:
        raise NotImplementedError

    def decode(self, k: int) -> Optional[Position]:
        raise NotImplementedError


class DefaultCoding(Coding):
    def encode(self, a: Position) -> int:
        return 1 + position_code(tuple(a))

    def decode(self, k: int) -> Optional[Position]:
        return position_decode(k - 1) if k >= 2 else None

    def __repr__(self) -> str:
        return "DefaultCoding()"


def default_coding() -> DefaultCoding:
    return DefaultCoding()


@dataclass
class TableCoding(Coding):
    """Explicit tracks for some positions; the rest is shifted past the table.

    Useful to replay hand-drawn examples that fix a few axiom tracks.
    """

    table: dict[Position, int]
    base: Coding = field(default_factory=DefaultCoding)

    def __post_init__(self):
        values = list(self.table.values())
        if len(set(values)) != len(values) or min(values, default=2) < 2:
            raise ValueError("table tracks must be distinct and >= 2")
        self._inverse = {k: a for a, k in self.table.items()}
        self._shift = max(values, default=1) - 1

    def encode(self, a: Position) -> int:
        a = tuple(a)
        if a in self.table:
            return self.table[a]
        return self.base.encode(a) + self._shift

    def decode(self, k: int) -> Optional[Position]:
        if k in self._inverse:
            return self._inverse[k]
        if k - self._shift < 2:
            return None
        a = self.base.decode(k - self._shift)
        return None if a is None or a in self.table else a


class ResidualCoding(Coding):
    """The coding seen on the reduct after firing one redex.

    A reduct position is encoded by the track of its unique antecedent;
    decoding follows the residual map, so destroyed positions decode to None.
    """

    def __init__(self, base: Coding, residuation: Residuation):
        self.base = base
        self.residuation = residuation

    def encode(self, a: Position) -> int:
        return self.base.encode(self.residuation.res_inverse(tuple(a)))

    def decode(self, k: int) -> Optional[Position]:
        a = self.base.decode(k)
        return None if a is None else self.residuation.res(a)


def binds(t, lam_pos: Position, a0: Position) -> bool:
    """Whether a0 is an occurrence, above lam_pos·0, of the variable bound at lam_pos.

    Both are outer positions: a0 must literally extend lam_pos·0, collapse
    into the support of t, carry the bound name, and not be captured by an
    inner binder of the same name.
    """
    lam = try_subterm(t, lam_pos)
    if not isinstance(lam, Abs):
        return False
    n = len(lam_pos)
    if len(a0) <= n or tuple(a0[: n + 1]) != tuple(lam_pos) + (0,):
        return False
    u = lam.body
    for k in collapse_word(a0[n + 1 :]):
        if isinstance(u, Abs):
            if u.var == lam.var or k != 0:
                return False
            u = u.body
        elif isinstance(u, Var):
            return False
        else:
            if k not in (1, 2):
                return False
            u = u.fun if k == 1 else u.arg
    return isinstance(u, Var) and u.name == lam.var


class CodingTracks:
    """Axiom tracks dictated by a coding, in the interface `Residuation` expects."""

    def __init__(self, coding: Coding):
        self.coding = coding

    def track(self, t, var_pos: Position) -> int:
        return self.coding.encode(tuple(var_pos))

    def slot(self, t, lam_pos: Position, k: int) -> Optional[Position]:
        a0 = self.coding.decode(k)
        if a0 is None or not binds(t, tuple(lam_pos), a0):
            return None
        return a0
