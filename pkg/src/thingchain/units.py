"""Fixed-point measurement values at scale 10^-3.

All on-chain arithmetic is integer-only; floats never touch the ledger.
"""

from __future__ import annotations

MILLI = 1000


def parse_milli(text: str) -> int:
    """Parse a decimal string like "21.5" or "-0.75" into milli units."""
    text = text.strip()
    neg = text.startswith("-")
    if neg or text.startswith("+"):
        text = text[1:]
    if not text or text == ".":
        raise ValueError("empty number")
    whole, _, frac = text.partition(".")
    if len(frac) > 3:
        raise ValueError(f"more than 3 fractional digits: {text!r}")
    frac = frac.ljust(3, "0")
    if not (whole or frac) or not (whole + frac).isdigit():
        raise ValueError(f"not a fixed-point number: {text!r}")
    value = int(whole or "0") * MILLI + int(frac)
    return -value if neg else value


def format_milli(value: int) -> str:
    sign = "-" if value < 0 else ""
    whole, frac = divmod(abs(value), MILLI)
    if frac == 0:
        return f"{sign}{whole}.0"
    return f"{sign}{whole}.{frac:03d}".rstrip("0")


def div_half_up(numerator: int, denominator: int) -> int:
    """Integer division rounding halves away from zero (decimal ROUND_HALF_UP)."""
    if denominator <= 0:
        raise ValueError("denominator must be positive")
    q, r = divmod(abs(numerator), denominator)
    if 2 * r >= denominator:
        q += 1
    return -q if numerator < 0 else q
