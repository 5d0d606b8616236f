"""Builtin worksheet functions.

Each implementation receives already-evaluated arguments with errors
filtered out by the engine (an error argument propagates before the
function runs) and returns a CellValue. Functions never raise: every
failure is an error value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .values import (
    Blank,
    CellError,
    NA_ERROR,
    NUM_ERROR,
    RangeValue,
    REF_ERROR,
    VALUE_ERROR,
    parse_number,
    to_boolean,
    to_number,
    to_text,
    values_equal,
)

__all__ = ["FunctionSignature", "REGISTRY", "lookup", "arabic", "roman"]

SCALAR = "scalar"
RANGE = "range"  # scalars also accepted and treated as 1x1 blocks
RANGE_ONLY = "range-only"


@dataclass(frozen=True)
class FunctionSignature:
    name: str
    min_args: int
    max_args: int | None  # None = unbounded
    arg_kinds: tuple  # per-position; last kind repeats for variadics
    impl: Callable


REGISTRY: dict[str, FunctionSignature] = {}


def _register(name, min_args, max_args, arg_kinds):
    def wrap(fn):
        REGISTRY[name] = FunctionSignature(name, min_args, max_args, arg_kinds, fn)
        return fn

    return wrap


def lookup(name: str) -> FunctionSignature | None:
    return REGISTRY.get(name.upper())


# --- Roman numerals ---------------------------------------------------------

_ROMAN_TABLE = (
    (1000, "M"),
    (900, "CM"),
    (500, "D"),
    (400, "CD"),
    (100, "C"),
    (90, "XC"),
    (50, "L"),
    (40, "XL"),
    (10, "X"),
    (9, "IX"),
    (5, "V"),
    (4, "IV"),
    (1, "I"),
)

_SYMBOL_VALUES = {"M": 1000, "D": 500, "C": 100, "L": 50, "X": 10, "V": 5, "I": 1}
_SUBTRACTIVE_PAIRS = {"CM": 900, "CD": 400, "XC": 90, "XL": 40, "IX": 9, "IV": 4}


def arabic_value(text: str) -> float | CellError:
    """Value of a roman numeral.

    The six standard subtractive pairs are recognised in a single
    left-to-right pass; everything else is summed additively, so dirty
    forms like IIII are accepted. Empty or non-roman input is #VALUE!,
    a total outside [1, 3999] is #NUM!.
    """
    s = text.strip().upper()
    if not s:
        return VALUE_ERROR
    total = 0
    i = 0
    n = len(s)
    while i < n:
        pair = _SUBTRACTIVE_PAIRS.get(s[i : i + 2])
        if pair is not None:
            total += pair
            i += 2
            continue
        value = _SYMBOL_VALUES.get(s[i])
        if value is None:
            return VALUE_ERROR
        total += value
        i += 1
    if not 1 <= total <= 3999:
        return NUM_ERROR
    return float(total)


def roman_text(n: int) -> str:
    """Classic-form numeral for n in [1, 3999]."""
    out = []
    for value, symbol in _ROMAN_TABLE:
        while n >= value:
            out.append(symbol)
            n -= value
    return "".join(out)


@_register("ARABIC", 1, 1, (SCALAR,))
def arabic(args):
    text = to_text(args[0])
    if text.__class__ is CellError:
        return text
    return arabic_value(text)


@_register("ROMAN", 1, 1, (SCALAR,))
def roman(args):
    n = to_number(args[0])
    if n.__class__ is CellError:
        return n
    if not n.is_integer() or not 1 <= n <= 3999:
        return NUM_ERROR
    return roman_text(int(n))


# --- Logic ------------------------------------------------------------------


@_register("IF", 2, 3, (SCALAR, SCALAR, SCALAR))
def if_(args):
    cond = to_boolean(args[0])
    if cond.__class__ is CellError:
        return cond
    if cond:
        return args[1]
    return args[2] if len(args) == 3 else False


@_register("AND", 1, None, (SCALAR,))
def and_(args):
    for arg in args:
        b = to_boolean(arg)
        if b.__class__ is CellError:
            return b
        if not b:
            return False
    return True


@_register("OR", 1, None, (SCALAR,))
def or_(args):
    for arg in args:
        b = to_boolean(arg)
        if b.__class__ is CellError:
            return b
        if b:
            return True
    return False


@_register("NOT", 1, 1, (SCALAR,))
def not_(args):
    b = to_boolean(args[0])
    if b.__class__ is CellError:
        return b
    return not b


@_register("ISBLANK", 1, 1, (SCALAR,))
def isblank(args):
    return args[0].__class__ is Blank


@_register("EXACT", 2, 2, (SCALAR, SCALAR))
def exact(args):
    a = to_text(args[0])
    if a.__class__ is CellError:
        return a
    b = to_text(args[1])
    if b.__class__ is CellError:
        return b
    return a == b


# --- Aggregation ------------------------------------------------------------


def _numeric_stream(args):
    """Numbers contributed by mixed scalar/range arguments.

    Direct scalars coerce (text "3" counts as 3); inside ranges only
    genuine numbers participate, as a spreadsheet would have it.
    """
    for arg in args:
        if arg.__class__ is RangeValue:
            for v in arg:
                if v.__class__ is float:
                    yield v
        else:
            n = to_number(arg)
            yield n  # may be a CellError; caller handles


@_register("SUM", 1, None, (RANGE,))
def sum_(args):
    total = 0.0
    for n in _numeric_stream(args):
        if n.__class__ is CellError:
            return n
        total += n
    return total if math.isfinite(total) else NUM_ERROR


@_register("COUNT", 1, None, (RANGE,))
def count(args):
    total = 0
    for arg in args:
        if arg.__class__ is RangeValue:
            for v in arg:
                if v.__class__ is float:
                    total += 1
        elif arg.__class__ is float:
            total += 1
        elif arg.__class__ is str and parse_number(arg) is not None:
            total += 1
    return float(total)


def _extreme(args, better):
    best = None
    for n in _numeric_stream(args):
        if n.__class__ is CellError:
            return n
        if best is None or better(n, best):
            best = n
    return 0.0 if best is None else best


@_register("MIN", 1, None, (RANGE,))
def min_(args):
    return _extreme(args, lambda a, b: a < b)


@_register("MAX", 1, None, (RANGE,))
def max_(args):
    return _extreme(args, lambda a, b: a > b)


# --- Text -------------------------------------------------------------------


@_register("CONCATENATE", 1, None, (SCALAR,))
def concatenate(args):
    parts = []
    for arg in args:
        t = to_text(arg)
        if t.__class__ is CellError:
            return t
        parts.append(t)
    return "".join(parts)


@_register("LEN", 1, 1, (SCALAR,))
def len_(args):
    t = to_text(args[0])
    if t.__class__ is CellError:
        return t
    return float(len(t))


def _text_and_count(args, default_count=1.0):
    t = to_text(args[0])
    if t.__class__ is CellError:
        return t, None
    n = to_number(args[1]) if len(args) > 1 else default_count
    if n.__class__ is CellError:
        return t, n
    return t, n


@_register("LEFT", 1, 2, (SCALAR, SCALAR))
def left(args):
    t, n = _text_and_count(args)
    if n is None:
        return t
    if n.__class__ is CellError:
        return n
    if n < 0 or not n.is_integer():
        return VALUE_ERROR
    return t[: int(n)]


@_register("RIGHT", 1, 2, (SCALAR, SCALAR))
def right(args):
    t, n = _text_and_count(args)
    if n is None:
        return t
    if n.__class__ is CellError:
        return n
    if n < 0 or not n.is_integer():
        return VALUE_ERROR
    k = int(n)
    return t[-k:] if k else ""


@_register("MID", 3, 3, (SCALAR, SCALAR, SCALAR))
def mid(args):
    t = to_text(args[0])
    if t.__class__ is CellError:
        return t
    start = to_number(args[1])
    if start.__class__ is CellError:
        return start
    length = to_number(args[2])
    if length.__class__ is CellError:
        return length
    if start < 1 or length < 0 or not start.is_integer() or not length.is_integer():
        return VALUE_ERROR
    begin = int(start) - 1
    return t[begin : begin + int(length)]


@_register("SUBSTITUTE", 3, 4, (SCALAR, SCALAR, SCALAR, SCALAR))
def substitute(args):
    t = to_text(args[0])
    if t.__class__ is CellError:
        return t
    old = to_text(args[1])
    if old.__class__ is CellError:
        return old
    new = to_text(args[2])
    if new.__class__ is CellError:
        return new
    if len(args) == 3:
        return t.replace(old, new) if old else t
    instance = to_number(args[3])
    if instance.__class__ is CellError:
        return instance
    if instance < 1 or not instance.is_integer():
        return VALUE_ERROR
    if not old:
        return t
    index = -1
    for _ in range(int(instance)):
        index = t.find(old, index + 1)
        if index < 0:
            return t
    return t[:index] + new + t[index + len(old) :]


@_register("TRIM", 1, 1, (SCALAR,))
def trim(args):
    t = to_text(args[0])
    if t.__class__ is CellError:
        return t
    # Spreadsheet TRIM: strip and collapse runs of 0x20 spaces only.
    return " ".join(part for part in t.split(" ") if part)


@_register("UPPER", 1, 1, (SCALAR,))
def upper(args):
    t = to_text(args[0])
    if t.__class__ is CellError:
        return t
    return t.upper()


@_register("LOWER", 1, 1, (SCALAR,))
def lower(args):
    t = to_text(args[0])
    if t.__class__ is CellError:
        return t
    return t.lower()


@_register("VALUE", 1, 1, (SCALAR,))
def value(args):
    v = args[0]
    if v.__class__ is float:
        return v
    if v.__class__ is bool:
        return VALUE_ERROR
    t = to_text(v)
    if t.__class__ is CellError:
        return t
    parsed = parse_number(t)
    return VALUE_ERROR if parsed is None else parsed


# --- Lookup -----------------------------------------------------------------


@_register("VLOOKUP", 3, 3, (SCALAR, RANGE_ONLY, SCALAR))
def vlookup(args):
    key, table, col = args
    if table.__class__ is not RangeValue:
        return VALUE_ERROR
    index = to_number(col)
    if index.__class__ is CellError:
        return index
    index = int(index)  # spreadsheet truncation
    if index < 1:
        return VALUE_ERROR
    if not table.rows or index > len(table.rows[0]):
        return REF_ERROR
    for row in table.rows:
        if values_equal(row[0], key):
            return row[index - 1]
    return NA_ERROR
