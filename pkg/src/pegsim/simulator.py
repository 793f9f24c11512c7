"""Daily scenario engine.

Each simulated day runs a fixed pipeline; the ordering is the reference
semantics and is pinned by golden-metrics tests:

    1.  ingest CPI and portfolio index, update V, compute earnings E
    2.  book earnings (fund skim, phase history, cohort attribution)
    3.  collect agent intents
    4.  apply deposits, transfers, order/bid/redemption placements
    5.  match purchase orders (expiries first, then FIFO fills)
    6.  run and settle the monthly auction, if scheduled today
    7.  process the redemption queue under the period cap
    8.  accrue interest and mature premiums, if due
    9.  rebalance the peg (mint or burn withheld tokens)
    10. record the daily metrics row
    11. seal the day's block

Everything is deterministic given the scenario config: agent randomness
comes from per-agent seeded streams, and all arithmetic is fixed point.
"""
from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass

from .agents import AgentProfile, AgentView, Intent, agent_rng, step_agent
from .auction import AuctionConfig, Bid, run_auction, settle
from .config import ScenarioConfig
from .errors import PegSimError
from .fixedpoint import format_fiat, format_price, format_tokens, mul_rate, token_value
from .issuance import Holds, Issuance
from .ledger import SYSTEM, Ledger, TxKind
from .payouts import PayoutRecord, Payouts
from .series import Series, load_series
from .treasury import Treasury

METRICS_COLUMNS = (
    "day",
    "target_price",
    "backed_price",
    "deviation",
    "S_public",
    "S_offered",
    "S_withheld",
    "V",
    "F",
    "queued_redemptions",
    "disposable",
    "payouts_today",
    "stress",
)


@dataclass(frozen=True)
class DailyMetrics:
    day: int
    target_e8: int
    backed_e8: int
    deviation: float
    s_public: int
    s_offered: int
    s_withheld: int
    v_cents: int
    f_cents: int
    queued_redemptions: int
    disposable_cents: int
    payouts_today: int
    stress: bool

    def csv_row(self) -> str:
        return ",".join(
            (
                str(self.day),
                format_price(self.target_e8),
                format_price(self.backed_e8),
                f"{self.deviation:.12g}",
                format_tokens(self.s_public),
                format_tokens(self.s_offered),
                format_tokens(self.s_withheld),
                format_fiat(self.v_cents),
                format_fiat(self.f_cents),
                str(self.queued_redemptions),
                format_fiat(self.disposable_cents),
                str(self.payouts_today),
                "true" if self.stress else "false",
            )
        )


def metrics_csv(rows: list[DailyMetrics]) -> str:
    out = io.StringIO()
    out.write(",".join(METRICS_COLUMNS) + "\n")
    for row in rows:
        out.write(row.csv_row() + "\n")
    return out.getvalue()


def payouts_csv(records: list[PayoutRecord]) -> str:
    out = io.StringIO()
    out.write("day,account,kind,token_amount,fiat_amount\n")
    for r in records:
        out.write(
            f"{r.day},{r.account},{r.kind},{format_tokens(r.token_units)},"
            f"{format_fiat(r.fiat_cents)}\n"
        )
    return out.getvalue()


@dataclass
class SimulationResult:
    config: ScenarioConfig
    metrics: list[DailyMetrics]
    ledger: Ledger
    treasury: Treasury
    issuance: Issuance
    payouts: Payouts
    auctions_held: int
    dropped_intents: int

    def metrics_csv(self) -> str:
        return metrics_csv(self.metrics)

    def payout_report_csv(self) -> str:
        return payouts_csv(self.all_payout_records())

    def _refund_records(self) -> list[PayoutRecord]:
        refunds = [
            PayoutRecord(o.refunded_day, o.account, "order_refund", 0, o.fiat_cents)
            for o in self.issuance.orders
            if o.status == "refunded"
        ]
        redemptions = [
            PayoutRecord(
                r.paid_day,
                r.account,
                "redemption_escalated" if r.escalated else "redemption",
                r.token_units,
                r.paid_cents,
            )
            for r in self.issuance.queue
            if r.status == "paid"
        ]
        return sorted(refunds + redemptions, key=lambda r: r.day)

    def all_payout_records(self) -> list[PayoutRecord]:
        return sorted(self.payouts.records + self._refund_records(), key=lambda r: r.day)


class Engine:
    """One deterministic scenario run over one ledger."""

    def __init__(
        self,
        config: ScenarioConfig,
        *,
        cpi: Series | None = None,
        returns: Series | None = None,
        opportunities: Series | None = None,
    ):
        self.config = config
        self.cpi = cpi if cpi is not None else load_series(config.cpi_file, min_value=1)
        self.returns = returns if returns is not None else load_series(config.returns_file, min_value=1)
        self.opportunities = (
            opportunities
            if opportunities is not None
            else load_series(config.opportunities_file, min_value=0)
        )
        if self.cpi.first_day != 0:
            raise PegSimError("cpi series must start at day 0")
        if self.returns.first_day != 0:
            raise PegSimError("returns series must start at day 0")

        self.ledger = Ledger()
        self.treasury = Treasury(
            base_price_e8=config.base_price_e8,
            cpi=self.cpi,
            phi_e8=config.phi_e8,
            phase_window=config.phase_window,
        )
        self.holds = Holds()
        self.issuance = Issuance(
            self.ledger,
            self.treasury,
            self.holds,
            config.redemption,
            self.opportunities,
            max_share_e8=config.max_share_e8,
        )
        self.payouts = Payouts(
            self.ledger, self.treasury, self.holds, config.interest, config.premium
        )
        self.accounts: dict[str, AgentProfile] = {}
        self._rngs = [agent_rng(config.seed, i) for i in range(len(config.roster))]
        self.auctions_held = 0
        self.dropped_intents = 0
        self._pending_bids: list[Bid] = []
        self._bid_deposits: dict[str, int] = {}
        self._next_bid_stamp = 0
        self.metrics: list[DailyMetrics] = []
        self._bootstrap()

    # -- construction ------------------------------------------------------

    def _bootstrap(self) -> None:
        """Genesis block: accounts, initial balances, initial backing."""
        for profile in self.config.roster:
            commitment = hashlib.sha256(f"identity:{profile.name}".encode()).digest()
            self.ledger.open_account(commitment, day=0, account_id=profile.name)
            self.accounts[profile.name] = profile
            if profile.initial_fiat_cents > 0:
                self.ledger.emit(
                    TxKind.FIAT_DEPOSIT,
                    SYSTEM,
                    profile.name,
                    0,
                    profile.initial_fiat_cents,
                    0,
                    memo="genesis fiat",
                )
            if profile.initial_tokens_units > 0:
                self.ledger.emit(
                    TxKind.MINT,
                    SYSTEM,
                    SYSTEM,
                    profile.initial_tokens_units,
                    0,
                    0,
                    memo="genesis supply",
                )
                self.ledger.emit(
                    TxKind.TOKEN_TRANSFER,
                    SYSTEM,
                    profile.name,
                    profile.initial_tokens_units,
                    0,
                    0,
                    memo="genesis supply",
                )
                self.treasury.s_public += profile.initial_tokens_units
        if self.config.init_backing_cents > 0:
            self.ledger.emit(
                TxKind.FIAT_DEPOSIT,
                SYSTEM,
                SYSTEM,
                0,
                self.config.init_backing_cents,
                0,
                memo="initial backing",
            )
            self.treasury.v_cents = self.config.init_backing_cents
            self.treasury.f_cents = self.config.init_fund_cents
        self.ledger.seal_block(0)

    # -- the pipeline ---------------------------------------------------------

    def run(self) -> SimulationResult:
        for day in range(self.config.horizon_days):
            self.step_day(day)
        return SimulationResult(
            config=self.config,
            metrics=self.metrics,
            ledger=self.ledger,
            treasury=self.treasury,
            issuance=self.issuance,
            payouts=self.payouts,
            auctions_held=self.auctions_held,
            dropped_intents=self.dropped_intents,
        )

    def step_day(self, day: int) -> DailyMetrics:
        config = self.config
        if day % config.redemption.period_days == 0:
            self.issuance.begin_period(day)

        # 1. returns move V; 2. book E
        index_e8 = self.returns.value_at(day)
        earnings = self.treasury.apply_returns(day, index_e8)
        if earnings > 0:
            self.ledger.emit(
                TxKind.FIAT_DEPOSIT, SYSTEM, SYSTEM, 0, earnings, day, memo="portfolio returns"
            )
        elif earnings < 0:
            self.ledger.emit(
                TxKind.FIAT_WITHDRAW, SYSTEM, SYSTEM, 0, -earnings, day, memo="portfolio returns"
            )
        self.treasury.book_earnings(day, earnings)
        self.payouts.attribute_earnings(day, earnings)

        # 3. collect intents; 4. apply them in roster order
        auction_today = self._auction_scheduled(day)
        for index, profile in enumerate(config.roster):
            view = self._view_for(profile, day, auction_today)
            for intent in step_agent(profile, view, day, self._rngs[index]):
                self._apply_intent(profile.name, intent, day)
        if config.mass_redeem_day == day:
            self._scripted_mass_redemption(day)

        # 5. purchase orders
        self.issuance.match_orders(day)

        # 6. monthly auction
        if auction_today and self._pending_bids:
            self._run_auction(day)

        # 7. redemption queue
        payout_count = len(
            self.issuance.process_redemptions(day, on_token_debit=self.payouts.on_token_debit)
        )

        # 8. interest and premiums
        if self.payouts.interest_due(day):
            payout_count += len(self.payouts.accrue_interest(day))
        payout_count += len(self.payouts.mature_due(day))

        # 9. peg rebalance
        report = self.treasury.rebalance_peg(day)
        if report.minted_units:
            self.ledger.emit(
                TxKind.MINT, SYSTEM, SYSTEM, report.minted_units, 0, day, memo="peg rebalance"
            )
        if report.burned_units:
            self.ledger.emit(
                TxKind.BURN, SYSTEM, SYSTEM, report.burned_units, 0, day, memo="peg rebalance"
            )

        # 10. metrics; 11. seal
        self._reconcile()
        row = DailyMetrics(
            day=day,
            target_e8=report.target_e8,
            backed_e8=report.backed_e8,
            deviation=report.deviation,
            s_public=self.treasury.s_public,
            s_offered=self.treasury.s_offered,
            s_withheld=self.treasury.s_withheld,
            v_cents=self.treasury.v_cents,
            f_cents=self.treasury.f_cents,
            queued_redemptions=len(self.issuance.queued_requests()),
            disposable_cents=self.issuance.disposable(),
            payouts_today=payout_count,
            stress=report.stress,
        )
        self.metrics.append(row)
        self.treasury.end_of_day(index_e8)
        self.ledger.seal_block(day)
        return row

    # -- intent handling ---------------------------------------------------------

    def _view_for(self, profile: AgentProfile, day: int, auction_today: bool) -> AgentView:
        peers = tuple(name for name in self.accounts if name != profile.name)
        matured = any(
            c.matured and profile.name in c.members for c in self.payouts.cohorts
        )
        return AgentView(
            day=day,
            spendable_fiat_cents=self.issuance.spendable_fiat(profile.name),
            spendable_token_units=self.issuance.spendable_tokens(profile.name),
            auction_today=auction_today,
            auctions_held=self.auctions_held,
            matured_cohort_member=matured,
            peers=peers,
        )

    def _apply_intent(self, account: str, intent: Intent, day: int) -> None:
        """Apply one intent; infeasible intents are dropped and counted."""
        try:
            if intent.kind == "deposit":
                if intent.fiat_cents <= 0:
                    raise PegSimError("non-positive deposit")
                self.ledger.emit(
                    TxKind.FIAT_DEPOSIT, SYSTEM, account, 0, intent.fiat_cents, day, memo="deposit"
                )
            elif intent.kind == "place_order":
                self.issuance.place_purchase_order(account, intent.fiat_cents, day)
            elif intent.kind == "bid":
                self._place_bid(account, intent, day)
            elif intent.kind == "transfer":
                self._apply_transfer(account, intent, day)
            elif intent.kind == "redeem":
                self.issuance.request_redemption(
                    account, intent.token_units, day, immediate=intent.immediate
                )
            else:
                raise PegSimError(f"unknown intent kind {intent.kind}")
        except PegSimError:
            self.dropped_intents += 1

    def _apply_transfer(self, account: str, intent: Intent, day: int) -> None:
        fee_rate = self.config.transfer_fee_e8
        units = intent.token_units
        fee = mul_rate(units, fee_rate) if fee_rate else 0
        if self.issuance.spendable_tokens(account) < units + fee:
            raise PegSimError("transfer exceeds spendable balance")
        self.ledger.transfer_tokens(account, intent.peer, units, day, fee_rate_e8=fee_rate)
        if fee:
            # fee tokens land on SYSTEM and join the withheld pool
            self.treasury.public_to_withheld(fee)
        self.payouts.on_token_debit(account, self.ledger.account(account).token_units)

    def _place_bid(self, account: str, intent: Intent, day: int) -> None:
        if intent.fiat_cents <= 0 or intent.price_cap_e8 <= 0:
            raise PegSimError("bad bid")
        if self.issuance.spendable_fiat(account) < intent.fiat_cents:
            raise PegSimError("bid exceeds spendable fiat")
        if account in self._bid_deposits:
            raise PegSimError("one bid per account per auction")
        self.holds.hold_fiat(account, intent.fiat_cents)
        self._bid_deposits[account] = intent.fiat_cents
        self._pending_bids.append(
            Bid(
                account=account,
                deposit_cents=intent.fiat_cents,
                price_cap_e8=intent.price_cap_e8,
                timestamp=self._next_bid_stamp,
            )
        )
        self._next_bid_stamp += 1

    def _scripted_mass_redemption(self, day: int) -> None:
        for name in self.accounts:
            units = self.issuance.spendable_tokens(name)
            if units > 0:
                self.issuance.request_redemption(name, units, day, immediate=False)

    # -- auction ---------------------------------------------------------------

    def _auction_scheduled(self, day: int) -> bool:
        return (
            self.config.auction_lots > 0
            and day % 30 == self.config.auction_day_of_month
        )

    def _run_auction(self, day: int) -> None:
        target = self.treasury.target_price(day)
        base_cents = token_value(self.config.auction_lot_units, target)
        if base_cents <= 0:
            return
        auction_config = AuctionConfig(
            lots=self.config.auction_lots,
            lot_units=self.config.auction_lot_units,
            base_price_cents=base_cents,
            gamma_e8=self.config.auction_gamma_e8,
        )
        result = run_auction(self._pending_bids, auction_config)
        members = {a.account: a.token_units for a in result.awards if a.lots > 0}
        if members:
            cohort = self.payouts.register_cohort(
                day, members, sum(a.charged_cents for a in result.awards)
            )
            result.cohort_id = cohort.cohort_id
        settle(result, day, self.ledger, self.treasury, self.holds)
        self._pending_bids = []
        self._bid_deposits = {}
        self.auctions_held += 1

    # -- invariants ---------------------------------------------------------------

    def _reconcile(self) -> None:
        """Treasury pools must mirror the ledger exactly, every day."""
        system = self.ledger.account(SYSTEM)
        if system.token_units != self.treasury.s_offered + self.treasury.s_withheld:
            raise PegSimError(
                "reconciliation failure: SYSTEM tokens "
                f"{system.token_units} != offered+withheld "
                f"{self.treasury.s_offered + self.treasury.s_withheld}"
            )
        if system.fiat_cents != self.treasury.v_cents:
            raise PegSimError(
                f"reconciliation failure: SYSTEM fiat {system.fiat_cents} "
                f"!= V {self.treasury.v_cents}"
            )
        if self.ledger.user_token_total() != self.treasury.s_public:
            raise PegSimError(
                f"reconciliation failure: user tokens {self.ledger.user_token_total()} "
                f"!= S_public {self.treasury.s_public}"
            )
        if not 0 <= self.treasury.f_cents <= self.treasury.v_cents:
            raise PegSimError(
                f"reconciliation failure: fund {self.treasury.f_cents} outside "
                f"[0, V={self.treasury.v_cents}]"
            )


def run_scenario(config: ScenarioConfig) -> SimulationResult:
    return Engine(config).run()
