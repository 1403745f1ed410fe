"""Infinite streams as simple transition systems.

A :class:`Stream` is a state plus an observation function and a
continuation function; the infinite sequence it denotes is only ever
inspected through finite :func:`unfold` windows.  :func:`merge` and
:func:`split` are built directly from their one-step defining equations

    merge(x::s, t)    = x :: merge(t, s)
    split(x::y::s)    = (x :: split(s)[0], y :: split(s)[1])

so both are productive: producing k output symbols never forces more than
k steps of any input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Hashable, Sequence

from .errors import ValidationError

Symbol = Hashable


@dataclass(frozen=True)
class Stream:
    state: Any
    observe: Callable[[Any], Symbol]
    cont: Callable[[Any], Any]

    def head(self) -> Symbol:
        return self.observe(self.state)

    def tail(self) -> Stream:
        return Stream(self.cont(self.state), self.observe, self.cont)

    def __repr__(self) -> str:
        return f"Stream({''.join(map(str, unfold(self, 8).symbols))}...)"


@dataclass(frozen=True)
class Prefix:
    """The first ``length`` observations of a stream."""

    symbols: tuple

    @property
    def length(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return "".join(map(str, self.symbols))


def unfold(s: Stream, k: int) -> Prefix:
    if k < 0:
        raise ValidationError(f"prefix length must be >= 0, got {k}")
    out = []
    st = s.state
    for i in range(k):
        out.append(s.observe(st))
        if i + 1 < k:
            st = s.cont(st)
    return Prefix(tuple(out))


# --- builders ---------------------------------------------------------------

def constant(symbol: Symbol) -> Stream:
    return Stream(None, lambda _: symbol, lambda st: st)


def cyclic(symbols: Sequence[Symbol], prefix: Sequence[Symbol] = ()) -> Stream:
    """Eventually periodic stream ``prefix`` followed by ``symbols`` repeated forever."""
    cyc = tuple(symbols)
    pre = tuple(prefix)
    if not cyc:
        raise ValidationError("cycle must contain at least one symbol")
    word = pre + cyc
    p = len(pre)

    def cont(i):
        i += 1
        return i if i < len(word) else p

    return Stream(0, word.__getitem__, cont)


def from_function(f: Callable[[int], Symbol], start: int = 0) -> Stream:
    """The stream ``f(start), f(start + 1), ...``."""
    return Stream(start, f, lambda i: i + 1)


def cons(x: Symbol, s: Stream) -> Stream:
    """``x :: s``."""

    def observe(st):
        fresh, inner = st
        return x if fresh else s.observe(inner)

    def cont(st):
        fresh, inner = st
        return (False, inner) if fresh else (False, s.cont(inner))

    return Stream((True, s.state), observe, cont)


# --- merge / split ----------------------------------------------------------

def merge(s: Stream, t: Stream) -> Stream:
    """Interleave ``s`` and ``t``, starting with ``s``.

    The state is a pair of cursors ``(current, other)``; each cursor names
    its source stream and a state in it.  One step emits from ``current``
    and swaps, advancing only the stream that was observed.
    """
    src = (s, t)

    def observe(st):
        (which, inner), _ = st
        return src[which].observe(inner)

    def cont(st):
        (which, inner), other = st
        return other, (which, src[which].cont(inner))

    return Stream(((0, s.state), (1, t.state)), observe, cont)


def split(s: Stream) -> tuple[Stream, Stream]:
    """Even- and odd-position substreams of ``s``.

    Both components share the state layout ``(state of s, phase)``: the phase
    bit picks the first or second symbol of each two-symbol block, and a
    step skips two symbols of ``s``.
    """

    def observe(st):
        inner, phase = st
        return s.observe(inner if phase == 0 else s.cont(inner))

    def cont(st):
        inner, phase = st
        return s.cont(s.cont(inner)), phase

    return Stream((s.state, 0), observe, cont), Stream((s.state, 1), observe, cont)


# --- metric -----------------------------------------------------------------

@dataclass(frozen=True)
class StreamDistance:
    """Either the exact distance ``2**-exponent`` or the bound ``<= 2**-exponent``."""

    exponent: int
    exact: bool

    @property
    def value(self) -> float:
        return 2.0 ** -self.exponent

    def halved(self) -> StreamDistance:
        return StreamDistance(self.exponent + 1, self.exact)

    def __str__(self) -> str:
        if self.exact:
            return "1" if self.exponent == 0 else f"2^-{self.exponent}"
        return f"<= 2^-{self.exponent}"


def stream_distance(s: Stream, t: Stream, depth: int) -> StreamDistance:
    """``2**-n`` for the first differing position ``n < depth``, else the bound ``2**-depth``."""
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    a, b = s.state, t.state
    for n in range(depth):
        if s.observe(a) != t.observe(b):
            return StreamDistance(n, exact=True)
        if n + 1 < depth:
            a, b = s.cont(a), t.cont(b)
    return StreamDistance(depth, exact=False)


def inverse_laws_hold(s: Stream, t: Stream, depth: int) -> bool:
    """``merge(split(s)) = s`` and ``split(merge(s, t)) = (s, t)`` up to ``depth`` symbols."""
    if unfold(merge(*split(s)), depth) != unfold(s, depth):
        return False
    left, right = split(merge(s, t))
    return unfold(left, depth) == unfold(s, depth) and unfold(right, depth) == unfold(t, depth)
