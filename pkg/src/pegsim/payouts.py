"""Interest accrual and the cohort permanence premium.

Interest is a simple per-period rate on held tokens. In an expansion
phase it is paid in tokens moved out of the withheld pool (supply is not
expanded; the next rebalance absorbs the shift); in a contraction phase,
or when the withheld pool runs dry, it is paid in AR$ out of the
anti-cyclic fund, clamped at the fund with any shortfall recorded.

Auction cohorts additionally earn a one-shot premium a fixed number of
semesters after formation: a share of the cohort's real (above-inflation)
attributable earnings, paid only to members who never let their balance
drop below their cohort allocation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AlreadyMatured
from .fixedpoint import div_half_even, mul_rate, token_value, tokens_for_value
from .ledger import SYSTEM, Ledger, TxKind
from .treasury import Phase, Treasury


@dataclass(frozen=True)
class InterestPolicy:
    rate_e8: int = 2_000_000  # 0.02 per period
    period_days: int = 30

    def __post_init__(self):
        if not 0 <= self.rate_e8 < 10**8:
            raise ValueError("interest rate must be in [0, 1)")
        if self.period_days < 1:
            raise ValueError("interest period must be >= 1 day")


@dataclass(frozen=True)
class PremiumPolicy:
    rate_e8: int = 70_000_000  # 0.70 of cohort gain
    semesters: int = 10
    semester_days: int = 180  # scalable for short desk runs

    def __post_init__(self):
        if not 0 <= self.rate_e8 <= 10**8:
            raise ValueError("premium rate must be in [0, 1]")
        if self.semesters < 1 or self.semester_days < 1:
            raise ValueError("premium maturity must be positive")


@dataclass
class Cohort:
    cohort_id: str
    formation_day: int
    members: dict[str, int]  # account -> token units, fixed at formation
    total_units: int
    v_share_cents: int  # AR$ charged into backing at formation
    cpi_at_formation_e8: int
    earnings_accum_cents: int = 0  # pro-rata attributed E, signed
    matured: bool = False
    continuous: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        if not self.continuous:
            self.continuous = {account: True for account in self.members}

    def maturity_day(self, policy: PremiumPolicy) -> int:
        return self.formation_day + policy.semesters * policy.semester_days


@dataclass(frozen=True)
class PayoutRecord:
    day: int
    account: str
    kind: str
    token_units: int
    fiat_cents: int


class Payouts:
    def __init__(
        self,
        ledger: Ledger,
        treasury: Treasury,
        holds,
        interest: InterestPolicy,
        premium: PremiumPolicy,
    ):
        self.ledger = ledger
        self.treasury = treasury
        self.holds = holds
        self.interest = interest
        self.premium = premium
        self.cohorts: list[Cohort] = []
        self.records: list[PayoutRecord] = []
        self.missed_cents = 0  # fund shortfalls on fiat payouts
        self._next_cohort = 0

    # -- cohorts ---------------------------------------------------------------

    def register_cohort(self, day: int, members: dict[str, int], v_share_cents: int) -> Cohort:
        cohort = Cohort(
            cohort_id=f"c{self._next_cohort:03d}",
            formation_day=day,
            members=dict(members),
            total_units=sum(members.values()),
            v_share_cents=v_share_cents,
            cpi_at_formation_e8=self.treasury.cpi_at(day),
        )
        self._next_cohort += 1
        self.cohorts.append(cohort)
        return cohort

    def attribute_earnings(self, day: int, earnings_cents: int) -> None:
        """Credit each live cohort its supply share of the day's earnings."""
        if earnings_cents == 0:
            return
        s_act = self.treasury.s_active
        if s_act <= 0:
            return
        for cohort in self.cohorts:
            if cohort.matured:
                continue
            cohort.earnings_accum_cents += div_half_even(
                earnings_cents * cohort.total_units, s_act
            )

    def on_token_debit(self, account: str, new_balance_units: int) -> None:
        """Permanence gate: a dip below the cohort allocation is permanent."""
        for cohort in self.cohorts:
            if cohort.matured:
                continue
            required = cohort.members.get(account)
            if required is not None and cohort.continuous.get(account) and new_balance_units < required:
                cohort.continuous[account] = False

    def cohort_gain(self, cohort: Cohort, day: int) -> int:
        """Cohort earnings above the inflation-matched principal, floored at 0.

        The principal plus attributed earnings is compared with the
        principal grown by CPI since formation; only the real excess funds
        premiums.
        """
        adjusted_principal = div_half_even(
            cohort.v_share_cents * self.treasury.cpi_at(day), cohort.cpi_at_formation_e8
        )
        gain = cohort.v_share_cents + cohort.earnings_accum_cents - adjusted_principal
        return max(0, gain)

    def due_cohorts(self, day: int) -> list[Cohort]:
        return [
            c
            for c in self.cohorts
            if not c.matured and day - c.formation_day >= self.premium.semesters * self.premium.semester_days
        ]

    def mature_premium(self, cohort: Cohort, day: int) -> list[PayoutRecord]:
        if cohort.matured:
            raise AlreadyMatured(cohort.cohort_id)
        gain = self.cohort_gain(cohort, day)
        phase = self.treasury.phase(day)
        target = self.treasury.target_price(day)
        made: list[PayoutRecord] = []
        for account, units in cohort.members.items():
            if not cohort.continuous.get(account):
                continue
            share_cents = div_half_even(gain * units, cohort.total_units)
            premium_cents = mul_rate(share_cents, self.premium.rate_e8)
            if premium_cents <= 0:
                continue
            made.append(
                self._pay(account, premium_cents, phase, target, day, TxKind.PREMIUM_PAYOUT, "premium")
            )
        cohort.matured = True
        self.records.extend(made)
        return made

    def mature_due(self, day: int) -> list[PayoutRecord]:
        made: list[PayoutRecord] = []
        for cohort in self.due_cohorts(day):
            made.extend(self.mature_premium(cohort, day))
        return made

    # -- interest ----------------------------------------------------------------

    def interest_due(self, day: int) -> bool:
        return day > 0 and day % self.interest.period_days == 0

    def accrue_interest(self, day: int) -> list[PayoutRecord]:
        """Pay the per-period rate on every user's unescrowed balance."""
        if self.interest.rate_e8 == 0:
            return []
        phase = self.treasury.phase(day)
        target = self.treasury.target_price(day)
        made: list[PayoutRecord] = []
        for account_id, acct in self.ledger.accounts.items():
            if account_id == SYSTEM:
                continue
            eligible = acct.token_units - self.holds.tokens_held(account_id)
            if eligible <= 0:
                continue
            units = mul_rate(eligible, self.interest.rate_e8)
            if units <= 0:
                continue
            value_cents = token_value(units, target)
            made.append(
                self._pay_interest(account_id, units, value_cents, phase, target, day)
            )
        made = [r for r in made if r is not None]
        self.records.extend(made)
        return made

    def _pay_interest(self, account, units, value_cents, phase, target, day):
        if phase is Phase.EXPANSION and self.treasury.s_withheld >= units:
            self.ledger.emit(
                TxKind.INTEREST_PAYOUT, SYSTEM, account, units, 0, day, memo="interest"
            )
            self.treasury.withheld_to_public(units)
            return PayoutRecord(day, account, "interest", units, 0)
        paid = min(value_cents, self.treasury.f_cents)
        self.missed_cents += value_cents - paid
        if paid <= 0:
            return None
        self.ledger.emit(TxKind.INTEREST_PAYOUT, SYSTEM, account, 0, paid, day, memo="interest")
        self.treasury.pay_from_fund(paid)
        return PayoutRecord(day, account, "interest", 0, paid)

    def _pay(self, account, value_cents, phase, target, day, kind, label) -> PayoutRecord:
        """Pay an AR$-denominated amount in tokens (expansion) or AR$."""
        if phase is Phase.EXPANSION:
            units = tokens_for_value(value_cents, target)
            if 0 < units <= self.treasury.s_withheld:
                self.ledger.emit(kind, SYSTEM, account, units, 0, day, memo=label)
                self.treasury.withheld_to_public(units)
                return PayoutRecord(day, account, label, units, 0)
        paid = min(value_cents, self.treasury.f_cents)
        self.missed_cents += value_cents - paid
        if paid > 0:
            self.ledger.emit(kind, SYSTEM, account, 0, paid, day, memo=label)
            self.treasury.pay_from_fund(paid)
        return PayoutRecord(day, account, label, 0, paid)
