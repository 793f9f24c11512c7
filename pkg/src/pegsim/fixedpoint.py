"""Fixed-point money arithmetic.

Token amounts are integers counting 1e-8 tokens; AR$ amounts are integer
cents. Prices (AR$ per token) and dimensionless rates use an 8-decimal
integer scale. Every division rounds half to even so repeated bookkeeping
cannot leak value in a biased direction, and so results are reproducible
across platforms.
"""
from __future__ import annotations

from decimal import Decimal, InvalidOperation

TOKEN_SCALE = 10**8  # 1 token = 10**8 units
FIAT_SCALE = 10**2  # 1 AR$  = 100 cents
RATE_SCALE = 10**8  # rates and ratios, 8 decimals
PRICE_SCALE = 10**8  # AR$ per token, 8 decimals

# token units * price_e8 / VALUE_DIV == cents
VALUE_DIV = TOKEN_SCALE * PRICE_SCALE // FIAT_SCALE  # 10**14


def div_half_even(num: int, den: int) -> int:
    """Divide num by den (den > 0), rounding half to even.

    Works for negative numerators: Python's divmod keeps the remainder in
    [0, den), so q + r/den is the exact quotient being rounded.
    """
    if den <= 0:
        raise ValueError("denominator must be positive")
    q, r = divmod(num, den)
    twice = 2 * r
    if twice > den or (twice == den and q & 1):
        q += 1
    return q


def div_ceil(num: int, den: int) -> int:
    if den <= 0:
        raise ValueError("denominator must be positive")
    return -(-num // den)


def mul_rate(amount: int, rate_e8: int) -> int:
    """amount * rate, half-even, preserving amount's scale."""
    return div_half_even(amount * rate_e8, RATE_SCALE)


def token_value(units: int, price_e8: int) -> int:
    """AR$ cents worth of `units` token units at `price_e8`."""
    return div_half_even(units * price_e8, VALUE_DIV)


def tokens_for_value(cents: int, price_e8: int) -> int:
    """Token units that `cents` buys at `price_e8`."""
    if price_e8 <= 0:
        raise ValueError("price must be positive")
    return div_half_even(cents * VALUE_DIV, price_e8)


def parse_scaled(text: str, scale: int) -> int:
    """Parse a decimal string into an integer at `scale`.

    Rejects values that do not fit the scale exactly; silent quantization
    of config inputs would undermine the exactness guarantees downstream.
    """
    try:
        value = Decimal(str(text).strip())
    except InvalidOperation as exc:
        raise ValueError(f"not a decimal number: {text!r}") from exc
    scaled = value * scale
    if scaled != scaled.to_integral_value():
        raise ValueError(f"{text!r} has more precision than 1/{scale}")
    return int(scaled)


def parse_tokens(text: str) -> int:
    return parse_scaled(text, TOKEN_SCALE)


def parse_fiat(text: str) -> int:
    return parse_scaled(text, FIAT_SCALE)


def parse_rate(text: str) -> int:
    return parse_scaled(text, RATE_SCALE)


def parse_price(text: str) -> int:
    return parse_scaled(text, PRICE_SCALE)


def format_scaled(value: int, scale: int) -> str:
    digits = len(str(scale)) - 1
    sign = "-" if value < 0 else ""
    whole, frac = divmod(abs(value), scale)
    return f"{sign}{whole}.{frac:0{digits}d}"


def format_tokens(units: int) -> str:
    return format_scaled(units, TOKEN_SCALE)


def format_fiat(cents: int) -> str:
    return format_scaled(cents, FIAT_SCALE)


def format_price(price_e8: int) -> str:
    return format_scaled(price_e8, PRICE_SCALE)
