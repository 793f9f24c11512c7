"""Append-only, hash-chained transaction ledger with named accounts.

Every balance change in the system is a Transaction applied to a single
Ledger instance (single writer) and later sealed into a Block. Blocks are
chained by SHA-256 over a canonical serialization, so any mutation of
sealed history is detectable and the full account state can be replayed
from the chain alone.

Movement semantics by transaction kind (who is debited / credited):

    OpenAccount       creates `to` with the identity commitment in the memo
    FiatDeposit       credit `to` fiat            (external money in)
    FiatWithdraw      debit `from` fiat           (external money out)
    TokenTransfer     debit `from`, credit `to` tokens
    Mint              credit `to` tokens          (supply created)
    Burn              debit `from` tokens         (supply destroyed)
    PurchaseSettle    debit `from`, credit `to` fiat
    AuctionSettle     debit `from`, credit `to` fiat
    OrderRefund       no balance move (escrow-release record, from == to)
    RedemptionPayout  debit `from`, credit `to` fiat
    InterestPayout    moves whichever of token/fiat amount is set, from -> to
    PremiumPayout     moves whichever of token/fiat amount is set, from -> to
    Fee               token amount: debit `from`, credit `to` (routed to SYSTEM)
                      fiat amount: debit `from` only (operator revenue leaves
                      the modeled system)
    FundTransfer      no balance move (treasury pool reclassification record)

Per-block conservation therefore reads: token supply changes only through
Mint/Burn, and total fiat changes only through FiatDeposit, FiatWithdraw
and fiat Fees.
"""
from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .errors import (
    BrokenChain,
    DuplicateAccountId,
    DuplicateIdentity,
    InsufficientBalance,
    InvalidMemo,
    InvalidTransaction,
    LedgerFormatError,
    NonPositiveAmount,
    SelfTransfer,
    UnknownAccount,
    ZeroCommitment,
)
from .fixedpoint import format_fiat, format_tokens, mul_rate, parse_fiat, parse_tokens

SYSTEM = "SYSTEM"
GENESIS_PREV_HASH = bytes(32)
SYSTEM_COMMITMENT = hashlib.sha256(b"pegsim:system").digest()


class TxKind(str, Enum):
    OPEN_ACCOUNT = "OpenAccount"
    FIAT_DEPOSIT = "FiatDeposit"
    FIAT_WITHDRAW = "FiatWithdraw"
    TOKEN_TRANSFER = "TokenTransfer"
    MINT = "Mint"
    BURN = "Burn"
    PURCHASE_SETTLE = "PurchaseSettle"
    AUCTION_SETTLE = "AuctionSettle"
    ORDER_REFUND = "OrderRefund"
    REDEMPTION_PAYOUT = "RedemptionPayout"
    INTEREST_PAYOUT = "InterestPayout"
    PREMIUM_PAYOUT = "PremiumPayout"
    FEE = "Fee"
    FUND_TRANSFER = "FundTransfer"


_KIND_BY_NAME = {k.value: k for k in TxKind}

# kinds that are pure records: no balance movement when applied
_RECORD_KINDS = frozenset({TxKind.ORDER_REFUND, TxKind.FUND_TRANSFER})

# kinds where both sides of the set amount move from -> to
_PAIRED_KINDS = frozenset(
    {
        TxKind.TOKEN_TRANSFER,
        TxKind.PURCHASE_SETTLE,
        TxKind.AUCTION_SETTLE,
        TxKind.REDEMPTION_PAYOUT,
        TxKind.INTEREST_PAYOUT,
        TxKind.PREMIUM_PAYOUT,
    }
)


@dataclass(frozen=True)
class Transaction:
    seq: int
    day: int
    kind: TxKind
    frm: str
    to: str
    token_units: int
    fiat_cents: int

    memo: str = ""

    def serialize(self) -> str:
        return "|".join(
            (
                str(self.seq),
                str(self.day),
                self.kind.value,
                self.frm,
                self.to,
                format_tokens(self.token_units),
                format_fiat(self.fiat_cents),
                self.memo,
            )
        )

    @staticmethod
    def parse(line: str) -> "Transaction":
        parts = line.split("|")
        if len(parts) != 8:
            raise LedgerFormatError(f"bad transaction line: {line!r}")
        try:
            kind = _KIND_BY_NAME[parts[2]]
            return Transaction(
                seq=int(parts[0]),
                day=int(parts[1]),
                kind=kind,
                frm=parts[3],
                to=parts[4],
                token_units=parse_tokens(parts[5]),
                fiat_cents=parse_fiat(parts[6]),
                memo=parts[7],
            )
        except (KeyError, ValueError) as exc:
            raise LedgerFormatError(f"bad transaction line: {line!r}") from exc


@dataclass(frozen=True)
class Block:
    height: int
    day: int
    prev_hash: bytes
    txs: tuple[Transaction, ...]
    hash: bytes


def block_body(height: int, day: int, prev_hash: bytes, txs: Iterable[Transaction]) -> bytes:
    """Canonical serialization the block hash commits to."""
    lines = [f"{height}|{day}|{prev_hash.hex()}"]
    lines.extend(tx.serialize() for tx in txs)
    return ("\n".join(lines) + "\n").encode("utf-8")


def compute_block_hash(height: int, day: int, prev_hash: bytes, txs: Iterable[Transaction]) -> bytes:
    return hashlib.sha256(block_body(height, day, prev_hash, txs)).digest()


@dataclass
class Account:
    account_id: str
    commitment: bytes
    token_units: int = 0
    fiat_cents: int = 0


class Ledger:
    """Single-writer ledger: live balances, a sealed chain, a pending buffer.

    Transactions are validated and applied to balances the moment they are
    emitted; seal_block() then freezes the day's transactions into the
    chain. Snapshots handed out (state_hash, account dumps) are plain
    values safe to share.
    """

    def __init__(self, create_system: bool = True):
        self.accounts: dict[str, Account] = {}
        self.chain: list[Block] = []
        self.pending: list[Transaction] = []
        self._next_seq = 0
        self._next_account = 0
        self._identities: set[bytes] = set()
        if create_system:
            self.accounts[SYSTEM] = Account(SYSTEM, SYSTEM_COMMITMENT)
            self._identities.add(SYSTEM_COMMITMENT)

    # -- account management ------------------------------------------------

    def open_account(self, commitment: bytes, day: int = 0, account_id: Optional[str] = None) -> str:
        """Create an account bound to a 256-bit identity commitment.

        One account per identity: the commitment must be new. A creation
        record enters the pending block so replay can rebuild the account
        map from the chain alone.
        """
        if len(commitment) != 32 or commitment == bytes(32):
            raise ZeroCommitment("identity commitment must be a nonzero 256-bit value")
        if commitment in self._identities:
            raise DuplicateIdentity("identity already bound to an account")
        if account_id is None:
            account_id = f"acct{self._next_account:05d}"
            self._next_account += 1
        if not (1 <= len(account_id) <= 64) or "|" in account_id or "\n" in account_id:
            raise DuplicateAccountId(f"bad account id: {account_id!r}")
        if account_id in self.accounts:
            raise DuplicateAccountId(f"account id already in use: {account_id}")
        self.emit(TxKind.OPEN_ACCOUNT, SYSTEM, account_id, 0, 0, day, memo=commitment.hex())
        return account_id

    def account(self, account_id: str) -> Account:
        try:
            return self.accounts[account_id]
        except KeyError:
            raise UnknownAccount(account_id) from None

    def user_token_total(self) -> int:
        return sum(a.token_units for i, a in self.accounts.items() if i != SYSTEM)

    # -- transaction emission ----------------------------------------------

    def emit(
        self,
        kind: TxKind,
        frm: str,
        to: str,
        token_units: int,
        fiat_cents: int,
        day: int,
        memo: str = "",
    ) -> Transaction:
        """Build, validate, apply and buffer one transaction."""
        if "|" in memo or "\n" in memo:
            raise InvalidMemo("memo must not contain '|' or newlines")
        if token_units < 0 or fiat_cents < 0:
            raise NonPositiveAmount("amounts must be non-negative")
        if kind is not TxKind.OPEN_ACCOUNT and token_units == 0 and fiat_cents == 0:
            raise NonPositiveAmount("transaction must move a positive amount")
        tx = Transaction(self._next_seq, day, kind, frm, to, token_units, fiat_cents, memo)
        self._apply(tx, replaying=False)
        self._next_seq += 1
        self.pending.append(tx)
        return tx

    def transfer_tokens(
        self, frm: str, to: str, units: int, day: int, fee_rate_e8: int = 0
    ) -> list[Transaction]:
        """User-to-user transfer with an optional fee routed to SYSTEM.

        fee = fee_rate * amount, rounded half-even to 8 decimals, charged
        to the sender on top of the transferred amount.
        """
        if units <= 0:
            raise NonPositiveAmount("transfer amount must be positive")
        if frm == to:
            raise SelfTransfer("cannot transfer to the same account")
        sender = self.account(frm)
        self.account(to)
        fee = mul_rate(units, fee_rate_e8) if fee_rate_e8 else 0
        if sender.token_units < units + fee:
            raise InsufficientBalance(
                f"{frm} holds {format_tokens(sender.token_units)}, "
                f"needs {format_tokens(units + fee)}"
            )
        txs = [self.emit(TxKind.TOKEN_TRANSFER, frm, to, units, 0, day)]
        if fee:
            txs.append(self.emit(TxKind.FEE, frm, SYSTEM, fee, 0, day, memo="transfer fee"))
        return txs

    # -- application -------------------------------------------------------

    def _apply(self, tx: Transaction, replaying: bool) -> None:
        def fail(reason: str):
            if replaying:
                return InvalidTransaction(tx.seq, reason)
            return InsufficientBalance(reason)

        kind = tx.kind
        if kind is TxKind.OPEN_ACCOUNT:
            try:
                commitment = bytes.fromhex(tx.memo)
            except ValueError:
                raise InvalidTransaction(tx.seq, "bad commitment memo")
            if len(commitment) != 32 or commitment == bytes(32):
                raise InvalidTransaction(tx.seq, "zero commitment")
            if tx.to in self.accounts:
                raise InvalidTransaction(tx.seq, f"account exists: {tx.to}")
            if commitment in self._identities:
                raise InvalidTransaction(tx.seq, "duplicate identity")
            self.accounts[tx.to] = Account(tx.to, commitment)
            self._identities.add(commitment)
            return
        if kind in _RECORD_KINDS:
            # lifecycle / reclassification records move no balances
            self._require(tx.frm, tx.seq, replaying)
            self._require(tx.to, tx.seq, replaying)
            return

        src = self._require(tx.frm, tx.seq, replaying)
        dst = self._require(tx.to, tx.seq, replaying)

        if kind is TxKind.FIAT_DEPOSIT:
            dst.fiat_cents += tx.fiat_cents
        elif kind is TxKind.FIAT_WITHDRAW:
            if src.fiat_cents < tx.fiat_cents:
                raise fail(f"fiat overdraw on {tx.frm}")
            src.fiat_cents -= tx.fiat_cents
        elif kind is TxKind.MINT:
            dst.token_units += tx.token_units
        elif kind is TxKind.BURN:
            if src.token_units < tx.token_units:
                raise fail(f"token overdraw on {tx.frm}")
            src.token_units -= tx.token_units
        elif kind is TxKind.FEE:
            if tx.token_units:
                if src.token_units < tx.token_units:
                    raise fail(f"token overdraw on {tx.frm}")
                src.token_units -= tx.token_units
                dst.token_units += tx.token_units
            if tx.fiat_cents:
                if src.fiat_cents < tx.fiat_cents:
                    raise fail(f"fiat overdraw on {tx.frm}")
                src.fiat_cents -= tx.fiat_cents
        elif kind in _PAIRED_KINDS:
            if tx.token_units:
                if src.token_units < tx.token_units:
                    raise fail(f"token overdraw on {tx.frm}")
                src.token_units -= tx.token_units
                dst.token_units += tx.token_units
            if tx.fiat_cents:
                if src.fiat_cents < tx.fiat_cents:
                    raise fail(f"fiat overdraw on {tx.frm}")
                src.fiat_cents -= tx.fiat_cents
                dst.fiat_cents += tx.fiat_cents
        else:  # pragma: no cover - every kind is handled above
            raise InvalidTransaction(tx.seq, f"unhandled kind {kind}")

    def _require(self, account_id: str, seq: int, replaying: bool) -> Account:
        acct = self.accounts.get(account_id)
        if acct is None:
            if replaying:
                raise InvalidTransaction(seq, f"unknown account {account_id}")
            raise UnknownAccount(account_id)
        return acct

    # -- blocks ------------------------------------------------------------

    def seal_block(self, day: int) -> Block:
        """Freeze pending transactions into the next block (may be empty)."""
        txs = tuple(self.pending)
        for a, b in zip(txs, txs[1:]):
            if b.seq <= a.seq:
                raise InvalidTransaction(b.seq, "pending transactions out of order")
        height = len(self.chain)
        prev_hash = self.chain[-1].hash if self.chain else GENESIS_PREV_HASH
        block = Block(height, day, prev_hash, txs, compute_block_hash(height, day, prev_hash, txs))
        self.chain.append(block)
        self.pending = []
        return block

    @staticmethod
    def verify_chain(chain: list[Block]) -> None:
        """Raise BrokenChain at the first bad link or recomputed-hash mismatch."""
        prev_hash = GENESIS_PREV_HASH
        for height, block in enumerate(chain):
            if block.height != height:
                raise BrokenChain(height, "height gap")
            if block.prev_hash != prev_hash:
                raise BrokenChain(height, "previous hash mismatch")
            if compute_block_hash(block.height, block.day, block.prev_hash, block.txs) != block.hash:
                raise BrokenChain(height, "hash mismatch")
            prev_hash = block.hash

    @classmethod
    def replay(cls, chain: list[Block], genesis_accounts: Optional[dict[str, Account]] = None) -> "Ledger":
        """Rebuild a ledger by verifying and re-applying a chain.

        The result's account map equals the live ledger's exactly when the
        chain is intact; the first broken link raises BrokenChain and a
        balance-violating transaction raises InvalidTransaction.
        """
        cls.verify_chain(chain)
        ledger = cls(create_system=genesis_accounts is None)
        if genesis_accounts is not None:
            for account_id, acct in genesis_accounts.items():
                ledger.accounts[account_id] = Account(
                    acct.account_id, acct.commitment, acct.token_units, acct.fiat_cents
                )
                ledger._identities.add(acct.commitment)
        for block in chain:
            for tx in block.txs:
                ledger._apply(tx, replaying=True)
                ledger._next_seq = tx.seq + 1
            ledger.chain.append(block)
        return ledger

    # -- state digest --------------------------------------------------------

    def state_hash(self) -> str:
        """SHA-256 over the canonical account dump (sorted by id)."""
        h = hashlib.sha256()
        for account_id in sorted(self.accounts):
            acct = self.accounts[account_id]
            line = (
                f"{account_id}|{acct.commitment.hex()}|"
                f"{format_tokens(acct.token_units)}|{format_fiat(acct.fiat_cents)}\n"
            )
            h.update(line.encode("utf-8"))
        return h.hexdigest()

    def accounts_equal(self, other: "Ledger") -> bool:
        if set(self.accounts) != set(other.accounts):
            return False
        for account_id, acct in self.accounts.items():
            o = other.accounts[account_id]
            if (acct.commitment, acct.token_units, acct.fiat_cents) != (
                o.commitment,
                o.token_units,
                o.fiat_cents,
            ):
                return False
        return True

    # -- export / import -----------------------------------------------------

    def export_chain(self) -> str:
        """One line `B|height|day|prev_hash|hash` per block, then its txs."""
        out = io.StringIO()
        for block in self.chain:
            out.write(
                f"B|{block.height}|{block.day}|{block.prev_hash.hex()}|{block.hash.hex()}\n"
            )
            for tx in block.txs:
                out.write(tx.serialize() + "\n")
        return out.getvalue()

    def write_chain(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.export_chain())


def import_chain(text: str) -> list[Block]:
    """Parse an exported ledger back into blocks (inverse of export_chain)."""
    blocks: list[Block] = []
    header: Optional[tuple[int, int, bytes, bytes]] = None
    txs: list[Transaction] = []

    def close():
        if header is None:
            return
        height, day, prev_hash, digest = header
        blocks.append(Block(height, day, prev_hash, tuple(txs), digest))

    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        if line.startswith("B|"):
            close()
            parts = line.split("|")
            if len(parts) != 5:
                raise LedgerFormatError(f"line {line_no}: bad block header")
            try:
                header = (
                    int(parts[1]),
                    int(parts[2]),
                    bytes.fromhex(parts[3]),
                    bytes.fromhex(parts[4]),
                )
            except ValueError as exc:
                raise LedgerFormatError(f"line {line_no}: bad block header") from exc
            txs = []
        else:
            if header is None:
                raise LedgerFormatError(f"line {line_no}: transaction before any block header")
            txs.append(Transaction.parse(line))
    close()
    return blocks


def read_chain(path) -> list[Block]:
    with open(path, "r", encoding="utf-8") as fh:
        return import_chain(fh.read())
