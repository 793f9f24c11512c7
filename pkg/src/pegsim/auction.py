"""Deconcentrative lot auction.

Lots are awarded one at a time to the eligible bidder with the highest
D'Hondt quotient deposit / (lots_won + 1), so large deposits cannot sweep
the sale. Concentration is further penalized by an escalating price
ladder: a bidder's k-th lot costs base * (1 + gamma * (k - 1)), and a
bidder is eligible for another lot only while the ladder stays inside
both their remaining deposit and their per-token price cap.

run_auction is a pure function of (bids, config); settlement routes the
resulting charges, refunds and token deliveries through the ledger.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .errors import OfferedPoolShort
from .fixedpoint import (
    RATE_SCALE,
    VALUE_DIV,
    div_half_even,
    format_fiat,
    format_tokens,
    parse_fiat,
    parse_price,
)
from .ledger import SYSTEM, Ledger, TxKind
from .treasury import Treasury


@dataclass(frozen=True)
class Bid:
    account: str
    deposit_cents: int  # escrowed strictly before the auction runs
    price_cap_e8: int  # max AR$ per token the bidder accepts
    timestamp: int  # total order, breaks quotient ties

    def __post_init__(self):
        if self.deposit_cents <= 0:
            raise ValueError("bid deposit must be positive")
        if self.price_cap_e8 <= 0:
            raise ValueError("bid price cap must be positive")


@dataclass(frozen=True)
class AuctionConfig:
    lots: int  # Q
    lot_units: int  # tokens per lot, in 1e-8 units
    base_price_cents: int  # B, price of a bidder's first lot
    gamma_e8: int = 5_000_000  # ladder slope, default 0.05

    def __post_init__(self):
        if self.lots < 0:
            raise ValueError("lot count must be >= 0")
        if self.lot_units <= 0:
            raise ValueError("lot size must be positive")
        if self.base_price_cents <= 0:
            raise ValueError("base lot price must be positive")
        if self.gamma_e8 < 0:
            raise ValueError("gamma must be >= 0")


def lot_price(k: int, config: AuctionConfig) -> int:
    """AR$ cents for a bidder's k-th lot (k >= 1), half-even to 2 dp."""
    if k < 1:
        raise ValueError("lot index starts at 1")
    return div_half_even(
        config.base_price_cents * (RATE_SCALE + config.gamma_e8 * (k - 1)), RATE_SCALE
    )


@dataclass
class Award:
    account: str
    lots: int
    prices_cents: tuple[int, ...]
    charged_cents: int
    refund_cents: int
    token_units: int
    deposit_cents: int


@dataclass
class AuctionResult:
    awards: list[Award]
    lots_allocated: int
    config: AuctionConfig
    cohort_id: str = ""


class _BidderState:
    __slots__ = ("bid", "lots", "spent", "prices")

    def __init__(self, bid: Bid):
        self.bid = bid
        self.lots = 0
        self.spent = 0
        self.prices: list[int] = []


def run_auction(bids: list[Bid], config: AuctionConfig) -> AuctionResult:
    """Allocate lots by repeated highest D'Hondt quotient.

    Quotients a_i / (s_i + 1) are compared exactly by cross multiplication;
    ties go to the earlier timestamp, then the lexicographically smaller
    account id. The result is independent of input order and lists one
    award per bidder, including bidders who won nothing.
    """
    seen = set()
    for bid in bids:
        if bid.timestamp in seen:
            raise ValueError(f"duplicate bid timestamp {bid.timestamp}")
        seen.add(bid.timestamp)
    states = [_BidderState(b) for b in sorted(bids, key=lambda b: (b.timestamp, b.account))]
    allocated = 0
    while allocated < config.lots:
        best: _BidderState | None = None
        best_price = 0
        for state in states:
            price = lot_price(state.lots + 1, config)
            if state.bid.deposit_cents - state.spent < price:
                continue
            # per-token cap: price/lot_size <= cap, cross-multiplied exactly
            if price * VALUE_DIV > state.bid.price_cap_e8 * config.lot_units:
                continue
            if best is None or state.bid.deposit_cents * (best.lots + 1) > best.bid.deposit_cents * (
                state.lots + 1
            ):
                best = state
                best_price = price
        if best is None:
            break
        best.lots += 1
        best.spent += best_price
        best.prices.append(best_price)
        allocated += 1
    awards = [
        Award(
            account=s.bid.account,
            lots=s.lots,
            prices_cents=tuple(s.prices),
            charged_cents=s.spent,
            refund_cents=s.bid.deposit_cents - s.spent,
            token_units=s.lots * config.lot_units,
            deposit_cents=s.bid.deposit_cents,
        )
        for s in states
    ]
    return AuctionResult(awards=awards, lots_allocated=allocated, config=config)


def settle(
    result: AuctionResult,
    day: int,
    ledger: Ledger,
    treasury: Treasury,
    holds,
) -> list:
    """Apply an auction result to the books.

    Each winning award charges the escrowed deposit into the backing
    portfolio, refunds the unspent remainder, and delivers the tokens out
    of the offered pool (topped up from withheld, then minted; every lot
    sells at or above target value, so provisioning is always backed).
    Losing bidders just get their escrow released, with no transactions,
    so an auction with zero awards leaves no trace beyond the bid holds
    coming off.
    """
    need = result.lots_allocated * result.config.lot_units
    if need > treasury.s_offered:
        shortfall = need - treasury.s_offered
        from_withheld = min(shortfall, treasury.s_withheld)
        if from_withheld:
            ledger.emit(
                TxKind.FUND_TRANSFER,
                SYSTEM,
                SYSTEM,
                from_withheld,
                0,
                day,
                memo="withheld to offered",
            )
            treasury.withheld_to_offered(from_withheld)
        to_mint = shortfall - from_withheld
        if to_mint:
            ledger.emit(TxKind.MINT, SYSTEM, SYSTEM, to_mint, 0, day, memo="provision offered pool")
            treasury.mint_offered(to_mint)
    if need > treasury.s_offered:
        raise OfferedPoolShort(f"need {need} offered units, have {treasury.s_offered}")

    txs = []
    for award in result.awards:
        holds.release_fiat(award.account, award.deposit_cents)
        if award.lots == 0:
            continue
        txs.append(
            ledger.emit(
                TxKind.AUCTION_SETTLE,
                award.account,
                SYSTEM,
                0,
                award.charged_cents,
                day,
                memo=f"auction {result.cohort_id}: {award.lots} lots",
            )
        )
        treasury.add_backing(award.charged_cents)
        if award.refund_cents > 0:
            txs.append(
                ledger.emit(
                    TxKind.ORDER_REFUND,
                    award.account,
                    award.account,
                    0,
                    award.refund_cents,
                    day,
                    memo=f"auction {result.cohort_id}: bid refund",
                )
            )
        txs.append(
            ledger.emit(
                TxKind.TOKEN_TRANSFER,
                SYSTEM,
                award.account,
                award.token_units,
                0,
                day,
                memo=f"auction {result.cohort_id}: delivery",
            )
        )
        treasury.offered_to_public(award.token_units)
    return txs


# -- CSV interfaces ------------------------------------------------------------

BIDS_HEADER = ["account", "deposit", "price_cap", "timestamp"]
RESULT_HEADER = ["account", "lots", "charged", "refund", "tokens"]


def read_bids_csv(path) -> list[Bid]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != BIDS_HEADER:
        raise ValueError("bids file must start with header 'account,deposit,price_cap,timestamp'")
    bids = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ValueError(f"line {line_no}: expected 4 fields")
        try:
            bids.append(
                Bid(
                    account=row[0].strip(),
                    deposit_cents=parse_fiat(row[1]),
                    price_cap_e8=parse_price(row[2]),
                    timestamp=int(row[3]),
                )
            )
        except ValueError as exc:
            raise ValueError(f"line {line_no}: {exc}") from exc
    return bids


def result_csv(result: AuctionResult) -> str:
    out = io.StringIO()
    out.write(",".join(RESULT_HEADER) + "\n")
    for award in result.awards:
        out.write(
            f"{award.account},{award.lots},{format_fiat(award.charged_cents)},"
            f"{format_fiat(award.refund_cents)},{format_tokens(award.token_units)}\n"
        )
    return out.getvalue()
