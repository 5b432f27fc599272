"""Shared numeric plumbing: exact rationals, config scalars, parallel map."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

Number = Union[int, float, Fraction]


def is_exact(x: Number) -> bool:
    """True for numbers that support exact arithmetic (int, Fraction)."""
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(xs: Iterable[Number]) -> bool:
    return all(is_exact(x) for x in xs)


def parse_number(x, mode: str = "float") -> Number:
    """Parse a config scalar.

    In rational mode, strings like "3/7" and integers stay exact; floats are
    rejected (they would silently break exactness guarantees).  In float mode
    everything is coerced to float.
    """
    if mode == "rational":
        if isinstance(x, str):
            return Fraction(x)
        if isinstance(x, int) and not isinstance(x, bool):
            return Fraction(x)
        if isinstance(x, Fraction):
            return x
        raise ValueError(f"cannot use {x!r} in rational mode (pass 'p/q' strings)")
    if isinstance(x, str):
        num = Fraction(x)
        return float(num)
    return float(x)


def format_number(x: Number) -> str:
    """Stable textual form for CSV output: 'p/q' for rationals, repr for floats."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def common_denominator(fracs: Sequence[Fraction]) -> int:
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    return den


def scale_to_int(fracs: Sequence[Fraction], den: int) -> list[int]:
    return [int(f * den) for f in fracs]


def pmap(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Order-preserving parallel map; falls back to plain map for threads <= 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
