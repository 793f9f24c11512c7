"""Token creation and redemption gates.

Purchase orders escrow the buyer's AR$ until opportunity capacity absorbs
them (fill) or a hold period lapses (refund). Redemptions burn tokens for
AR$ but are throttled per period by a reserve-requirement cap on liquid
backing; over-cap exits either wait in the queue or pay an escalated fee
immediately.

Escrowed amounts never leave the owner's ledger account; they are holds
tracked here, subtracted from the spendable balance the rest of the
system sees. The active-supply arithmetic of the peg therefore keeps
counting escrowed tokens in the public pool until they are burned.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import InsufficientFiat, InsufficientTokens, NonPositiveAmount
from .fixedpoint import div_half_even, mul_rate, token_value, tokens_for_value
from .ledger import SYSTEM, Ledger, TxKind
from .series import Series
from .treasury import Treasury


class Holds:
    """Escrow sub-balances per account (fiat cents / token units)."""

    def __init__(self):
        self.fiat: dict[str, int] = {}
        self.tokens: dict[str, int] = {}

    def fiat_held(self, account: str) -> int:
        return self.fiat.get(account, 0)

    def tokens_held(self, account: str) -> int:
        return self.tokens.get(account, 0)

    def hold_fiat(self, account: str, cents: int) -> None:
        self.fiat[account] = self.fiat.get(account, 0) + cents

    def release_fiat(self, account: str, cents: int) -> None:
        remaining = self.fiat.get(account, 0) - cents
        if remaining < 0:
            raise ValueError(f"fiat hold underflow on {account}")
        self.fiat[account] = remaining

    def hold_tokens(self, account: str, units: int) -> None:
        self.tokens[account] = self.tokens.get(account, 0) + units

    def release_tokens(self, account: str, units: int) -> None:
        remaining = self.tokens.get(account, 0) - units
        if remaining < 0:
            raise ValueError(f"token hold underflow on {account}")
        self.tokens[account] = remaining


ORDER_PENDING = "pending"
ORDER_FILLED = "filled"
ORDER_REFUNDED = "refunded"

REDEEM_QUEUED = "queued"
REDEEM_PAID = "paid"
REDEEM_CANCELLED = "cancelled"


@dataclass
class PurchaseOrder:
    order_id: int
    account: str
    fiat_cents: int
    day_placed: int
    status: str = ORDER_PENDING
    filled_day: int | None = None
    filled_units: int | None = None
    refunded_day: int | None = None


@dataclass
class RedemptionRequest:
    request_id: int
    account: str
    token_units: int
    day: int
    immediate: bool
    status: str = REDEEM_QUEUED
    paid_day: int | None = None
    paid_cents: int | None = None
    escalated: bool = False


@dataclass(frozen=True)
class RedemptionPolicy:
    rho_e8: int = 10_000_000  # 0.10 of liquid backing per period
    period_days: int = 30
    exit_fee_e8: int = 1_000_000  # 0.01
    escalated_fee_e8: int = 5_000_000  # 0.05
    hold_days: int = 30

    def __post_init__(self):
        if not 0 < self.rho_e8 <= 10**8:
            raise ValueError("rho must be in (0, 1]")
        if self.period_days < 1:
            raise ValueError("period must be >= 1 day")
        if not 0 <= self.exit_fee_e8 < self.escalated_fee_e8 < 10**8:
            raise ValueError("fees must satisfy 0 <= f_out < f_esc < 1")


@dataclass
class RedemptionPayout:
    day: int
    account: str
    token_units: int
    gross_cents: int
    net_cents: int
    escalated: bool


class Issuance:
    """Order book and redemption queue bound to one ledger and treasury."""

    def __init__(
        self,
        ledger: Ledger,
        treasury: Treasury,
        holds: Holds,
        policy: RedemptionPolicy,
        opportunities: Series,
        max_share_e8: int | None = None,
    ):
        self.ledger = ledger
        self.treasury = treasury
        self.holds = holds
        self.policy = policy
        self.opportunities = opportunities
        self.max_share_e8 = max_share_e8
        self.orders: list[PurchaseOrder] = []
        self.queue: list[RedemptionRequest] = []
        self._next_order = 0
        self._next_request = 0
        # per-period redemption accounting
        self.period_cap_cents = 0
        self.period_start_day = 0
        self.paid_in_period = 0
        self.liquidity_exhausted_count = 0

    # -- purchase orders -----------------------------------------------------

    def spendable_fiat(self, account: str) -> int:
        return self.ledger.account(account).fiat_cents - self.holds.fiat_held(account)

    def spendable_tokens(self, account: str) -> int:
        return self.ledger.account(account).token_units - self.holds.tokens_held(account)

    def place_purchase_order(self, account: str, fiat_cents: int, day: int) -> PurchaseOrder:
        if fiat_cents <= 0:
            raise NonPositiveAmount("order amount must be positive")
        if self.spendable_fiat(account) < fiat_cents:
            raise InsufficientFiat(
                f"{account} has {self.spendable_fiat(account)} spendable cents, "
                f"order needs {fiat_cents}"
            )
        self.holds.hold_fiat(account, fiat_cents)
        order = PurchaseOrder(self._next_order, account, fiat_cents, day)
        self._next_order += 1
        self.orders.append(order)
        return order

    def pending_orders(self) -> list[PurchaseOrder]:
        return [o for o in self.orders if o.status == ORDER_PENDING]

    def match_orders(self, day: int) -> tuple[list[PurchaseOrder], list[PurchaseOrder]]:
        """Expire stale orders, then fill FIFO against today's capacity.

        Fills are all-or-nothing: an order that does not fit under the
        remaining capacity stays pending, and the scan continues so a
        later order that does fit is not starved. Returns
        (filled, refunded).
        """
        refunded: list[PurchaseOrder] = []
        for order in self.orders:
            if order.status != ORDER_PENDING:
                continue
            if day - order.day_placed >= self.policy.hold_days:
                order.status = ORDER_REFUNDED
                order.refunded_day = day
                self.holds.release_fiat(order.account, order.fiat_cents)
                self.ledger.emit(
                    TxKind.ORDER_REFUND,
                    order.account,
                    order.account,
                    0,
                    order.fiat_cents,
                    day,
                    memo=f"order {order.order_id} expired",
                )
                refunded.append(order)

        filled: list[PurchaseOrder] = []
        # series values are 8-decimal AR$; the book works in cents
        capacity = div_half_even(self.opportunities.capacity_at(day), 10**6)
        if capacity <= 0:
            return filled, refunded
        target = self.treasury.target_price(day)
        used = 0
        for order in self.orders:
            if order.status != ORDER_PENDING:
                continue
            if used + order.fiat_cents > capacity:
                continue  # does not fit today; stays pending (all-or-nothing)
            units = tokens_for_value(order.fiat_cents, target)
            if units <= 0:
                continue
            if self.max_share_e8 is not None and self._breaks_safety_margin(order.account, units):
                continue
            self._fill(order, units, day)
            used += order.fiat_cents
            filled.append(order)
        return filled, refunded

    def _breaks_safety_margin(self, account: str, incoming_units: int) -> bool:
        # optional per-account cap on share of active supply
        would_hold = self.ledger.account(account).token_units + incoming_units
        allowed = mul_rate(self.treasury.s_active + incoming_units, self.max_share_e8)
        return would_hold > allowed

    def _fill(self, order: PurchaseOrder, units: int, day: int) -> None:
        self.holds.release_fiat(order.account, order.fiat_cents)
        self.ledger.emit(
            TxKind.PURCHASE_SETTLE,
            order.account,
            SYSTEM,
            0,
            order.fiat_cents,
            day,
            memo=f"order {order.order_id} fill",
        )
        self.treasury.add_backing(order.fiat_cents)
        shortfall = units - self.treasury.s_offered
        if shortfall > 0:
            self.ledger.emit(
                TxKind.MINT, SYSTEM, SYSTEM, shortfall, 0, day, memo="provision offered pool"
            )
            self.treasury.mint_offered(shortfall)
        self.ledger.emit(
            TxKind.TOKEN_TRANSFER,
            SYSTEM,
            order.account,
            units,
            0,
            day,
            memo=f"order {order.order_id} delivery",
        )
        self.treasury.offered_to_public(units)
        order.status = ORDER_FILLED
        order.filled_day = day
        order.filled_units = units

    # -- redemptions -----------------------------------------------------------

    def request_redemption(
        self, account: str, token_units: int, day: int, immediate: bool = False
    ) -> RedemptionRequest:
        if token_units <= 0:
            raise NonPositiveAmount("redemption amount must be positive")
        if self.spendable_tokens(account) < token_units:
            raise InsufficientTokens(
                f"{account} has {self.spendable_tokens(account)} spendable units, "
                f"redemption needs {token_units}"
            )
        self.holds.hold_tokens(account, token_units)
        request = RedemptionRequest(self._next_request, account, token_units, day, immediate)
        self._next_request += 1
        self.queue.append(request)
        return request

    def queued_requests(self) -> list[RedemptionRequest]:
        return [r for r in self.queue if r.status == REDEEM_QUEUED]

    def begin_period(self, day: int) -> None:
        """Snapshot the liquid backing that caps this period's redemptions."""
        self.period_start_day = day
        self.period_cap_cents = mul_rate(
            self.treasury.v_cents - self.treasury.f_cents, self.policy.rho_e8
        )
        self.paid_in_period = 0

    def cap_remaining_today(self, day: int) -> int:
        day_in_period = day - self.period_start_day
        accrued = div_half_even(
            self.period_cap_cents * (day_in_period + 1), self.policy.period_days
        )
        return accrued - self.paid_in_period

    def disposable(self) -> int:
        """Remaining full-period redemption capacity, floored at zero."""
        return max(0, self.period_cap_cents - self.paid_in_period)

    def process_redemptions(self, day: int, on_token_debit=None) -> list[RedemptionPayout]:
        """Serve the queue FIFO under the prorated period cap.

        Requests are evaluated in order; one that does not fit under the
        remaining cap stays queued (penalized in time) without blocking
        later, smaller requests. Immediate requests that miss the cap are
        served the same day at the escalated fee, as long as V - F stays
        non-negative; otherwise they remain queued and a liquidity
        shortfall is counted.
        """
        target = self.treasury.target_price(day)
        remaining = self.cap_remaining_today(day)
        payouts: list[RedemptionPayout] = []
        for request in self.queue:
            if request.status != REDEEM_QUEUED:
                continue
            gross = token_value(request.token_units, target)
            if gross <= 0:
                continue
            liquidity = self.treasury.v_cents - self.treasury.f_cents
            if gross <= remaining and gross <= liquidity:
                fee_rate = self.policy.exit_fee_e8
                remaining -= gross
                self.paid_in_period += gross
                escalated = False
            elif request.immediate:
                if gross > liquidity:
                    self.liquidity_exhausted_count += 1
                    continue
                fee_rate = self.policy.escalated_fee_e8
                escalated = True
            else:
                continue
            payouts.append(self._pay(request, gross, fee_rate, escalated, target, day, on_token_debit))
        return payouts

    def _pay(
        self,
        request: RedemptionRequest,
        gross: int,
        fee_rate_e8: int,
        escalated: bool,
        target_e8: int,
        day: int,
        on_token_debit,
    ) -> RedemptionPayout:
        fee = mul_rate(gross, fee_rate_e8)
        net = gross - fee
        self.holds.release_tokens(request.account, request.token_units)
        self.ledger.emit(
            TxKind.BURN,
            request.account,
            SYSTEM,
            request.token_units,
            0,
            day,
            memo=f"redemption {request.request_id}",
        )
        self.treasury.burn_public(request.token_units)
        if on_token_debit is not None:
            on_token_debit(request.account, self.ledger.account(request.account).token_units)
        self.ledger.emit(
            TxKind.REDEMPTION_PAYOUT,
            SYSTEM,
            request.account,
            0,
            gross,
            day,
            memo=f"redemption {request.request_id}",
        )
        if fee:
            self.ledger.emit(
                TxKind.FEE,
                request.account,
                SYSTEM,
                0,
                fee,
                day,
                memo=f"exit fee {'escalated ' if escalated else ''}redemption {request.request_id}",
            )
        self.treasury.remove_backing(gross)
        request.status = REDEEM_PAID
        request.paid_day = day
        request.paid_cents = net
        request.escalated = escalated
        return RedemptionPayout(day, request.account, request.token_units, gross, net, escalated)
