"""Treasury bookkeeping: the CPI peg, backing value and token pools.

The treasury tracks the AR$ value of the backing portfolio (V), the
anti-cyclic fund carved out of it (F), and the split of token supply into
the public, offered and withheld pools. Once per day the withheld pool is
resized in closed form so that the backed price (V - F over active
supply) equals the CPI target exactly; the daily report records what was
minted or burned and whether backing fell short.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import MissingCpi, SeriesUndefined
from .fixedpoint import VALUE_DIV, div_ceil, div_half_even, mul_rate
from .series import Series


class Phase(str, Enum):
    EXPANSION = "expansion"
    CONTRACTION = "contraction"


@dataclass(frozen=True)
class PegReport:
    """Daily dashboard row for the peg rebalance."""

    day: int
    target_e8: int
    backed_e8: int
    minted_units: int
    burned_units: int
    deviation: float
    stress: bool


class Treasury:
    def __init__(
        self,
        base_price_e8: int,
        cpi: Series,
        phi_e8: int = 0,
        phase_window: int = 30,
        v_cents: int = 0,
        f_cents: int = 0,
    ):
        if base_price_e8 <= 0:
            raise ValueError("base price must be positive")
        if not 0 <= phi_e8 <= 10**8:
            raise ValueError("phi must be in [0, 1]")
        if phase_window < 1:
            raise ValueError("phase window must be >= 1")
        if not 0 <= f_cents <= v_cents:
            raise ValueError("fund must satisfy 0 <= F <= V")
        self.base_price_e8 = base_price_e8
        self.cpi = cpi
        self.phi_e8 = phi_e8
        self.phase_window = phase_window
        self.v_cents = v_cents
        self.f_cents = f_cents
        self.s_public = 0
        self.s_offered = 0
        self.s_withheld = 0
        self._earnings: list[int] = []  # booked E by day
        # Returns are applied against an anchor (value, index) so that a
        # flow-free stretch scales V in a single rounding step instead of
        # compounding daily rounding error.
        self._anchor_value = v_cents
        self._anchor_index: int | None = None
        self._flows_since_anchor = False

    # -- peg ----------------------------------------------------------------

    def cpi_at(self, day: int) -> int:
        try:
            return self.cpi.value_at(day)
        except SeriesUndefined as exc:
            raise MissingCpi(str(exc)) from exc

    def target_price(self, day: int) -> int:
        """Base price scaled by CPI(day) / CPI(base day), half-even to 8 dp."""
        base = self.cpi_at(self.cpi.first_day)
        return div_half_even(self.base_price_e8 * self.cpi_at(day), base)

    @property
    def s_active(self) -> int:
        return self.s_public + self.s_offered + self.s_withheld

    def backed_price(self) -> int:
        s_act = self.s_active
        if s_act == 0:
            return 0
        return div_half_even((self.v_cents - self.f_cents) * VALUE_DIV, s_act)

    def rebalance_peg(self, day: int) -> PegReport:
        """Resize the withheld pool so the backed price meets the target.

        If even an empty withheld pool leaves backing short, the fund is
        drawn down (to zero at worst) to restore it; stress is reported
        when the deviation is still negative after that.
        """
        target = self.target_price(day)
        s_act = self.s_active
        if s_act == 0:
            # empty supply: nothing to rebalance, report the target only
            return PegReport(day, target, 0, 0, 0, 0.0, False)
        backing = self.v_cents - self.f_cents
        needed = div_half_even(backing * VALUE_DIV, target)
        new_withheld = needed - self.s_public - self.s_offered
        minted = burned = 0
        if new_withheld >= 0:
            delta = new_withheld - self.s_withheld
            if delta > 0:
                minted = delta
            else:
                burned = -delta
            self.s_withheld = new_withheld
        else:
            burned = self.s_withheld
            self.s_withheld = 0
            s_rest = self.s_public + self.s_offered
            # ceil so a successful rescue never rounds below the target
            need_cents = div_ceil(target * s_rest, VALUE_DIV)
            fund_after = self.v_cents - need_cents
            if fund_after < self.f_cents:
                self.f_cents = max(fund_after, 0)
        backed = self.backed_price()
        deviation = (backed - target) / target
        return PegReport(day, target, backed, minted, burned, deviation, deviation < 0)

    # -- earnings and phases --------------------------------------------------

    def apply_returns(self, day: int, index_e8: int) -> int:
        """Scale V by the portfolio index and return the day's earnings E."""
        if index_e8 <= 0:
            raise ValueError("portfolio index must be positive")
        if self._anchor_index is None:
            self._anchor_value = self.v_cents
            self._anchor_index = index_e8
            return 0
        new_value = div_half_even(self._anchor_value * index_e8, self._anchor_index)
        earnings = new_value - self.v_cents
        self.v_cents = new_value
        return earnings

    def end_of_day(self, index_e8: int) -> None:
        """Re-anchor the returns scaling after a day that moved V via flows."""
        if self._flows_since_anchor:
            self._anchor_value = self.v_cents
            self._anchor_index = index_e8
            self._flows_since_anchor = False

    def book_earnings(self, day: int, earnings_cents: int) -> None:
        """Record E for phase tracking; skim phi of positive E into the fund."""
        if day != len(self._earnings):
            raise ValueError(f"earnings for day {day} booked out of order")
        self._earnings.append(earnings_cents)
        if earnings_cents > 0 and self.phi_e8:
            self.f_cents = min(self.v_cents, self.f_cents + mul_rate(earnings_cents, self.phi_e8))

    def earnings_on(self, day: int) -> int:
        return self._earnings[day]

    def phase(self, day: int) -> Phase:
        """Expansion iff trailing booked earnings are non-negative.

        Day 0 and an exactly balanced window both default to Expansion.
        """
        if day == 0 or not self._earnings:
            return Phase.EXPANSION
        upto = min(day, len(self._earnings) - 1)
        start = max(0, upto - self.phase_window + 1)
        total = sum(self._earnings[start : upto + 1])
        return Phase.EXPANSION if total >= 0 else Phase.CONTRACTION

    # -- flow mutations -------------------------------------------------------

    def add_backing(self, cents: int) -> None:
        self.v_cents += cents
        self._flows_since_anchor = True

    def remove_backing(self, cents: int) -> None:
        if cents > self.v_cents - self.f_cents:
            raise ValueError("backing draw exceeds V - F")
        self.v_cents -= cents
        self._flows_since_anchor = True

    def pay_from_fund(self, cents: int) -> None:
        """Spend fund money: both F and V shrink (F is a sub-claim on V)."""
        if cents > self.f_cents:
            raise ValueError("payment exceeds fund")
        self.f_cents -= cents
        self.v_cents -= cents
        self._flows_since_anchor = True

    def withheld_to_offered(self, units: int) -> None:
        if units > self.s_withheld:
            raise ValueError("move exceeds withheld pool")
        self.s_withheld -= units
        self.s_offered += units

    def offered_to_public(self, units: int) -> None:
        if units > self.s_offered:
            raise ValueError("move exceeds offered pool")
        self.s_offered -= units
        self.s_public += units

    def mint_offered(self, units: int) -> None:
        self.s_offered += units

    def withheld_to_public(self, units: int) -> None:
        if units > self.s_withheld:
            raise ValueError("move exceeds withheld pool")
        self.s_withheld -= units
        self.s_public += units

    def public_to_withheld(self, units: int) -> None:
        if units > self.s_public:
            raise ValueError("move exceeds public pool")
        self.s_public -= units
        self.s_withheld += units

    def burn_public(self, units: int) -> None:
        if units > self.s_public:
            raise ValueError("burn exceeds public pool")
        self.s_public -= units
