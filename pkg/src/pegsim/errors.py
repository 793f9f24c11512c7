"""Exception types shared across the package."""
from __future__ import annotations


class PegSimError(Exception):
    """Base class for all domain errors."""


class ConfigError(PegSimError):
    pass


class ParseError(PegSimError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NonAscendingDays(PegSimError):
    pass


class SeriesUndefined(PegSimError):
    pass


class MissingCpi(SeriesUndefined):
    pass


# ledger
class ZeroCommitment(PegSimError):
    pass


class DuplicateIdentity(PegSimError):
    pass


class DuplicateAccountId(PegSimError):
    pass


class UnknownAccount(PegSimError):
    pass


class InsufficientBalance(PegSimError):
    pass


class SelfTransfer(PegSimError):
    pass


class NonPositiveAmount(PegSimError):
    pass


class InvalidMemo(PegSimError):
    pass


class BrokenChain(PegSimError):
    def __init__(self, height: int, reason: str = ""):
        detail = f" ({reason})" if reason else ""
        super().__init__(f"chain broken at height {height}{detail}")
        self.height = height


class InvalidTransaction(PegSimError):
    def __init__(self, seq: int, reason: str = ""):
        detail = f" ({reason})" if reason else ""
        super().__init__(f"invalid transaction seq {seq}{detail}")
        self.seq = seq


class LedgerFormatError(PegSimError):
    pass


# issuance
class InsufficientFiat(PegSimError):
    pass


class InsufficientTokens(PegSimError):
    pass


class LiquidityExhausted(PegSimError):
    pass


# auction
class OfferedPoolShort(PegSimError):
    pass


# payouts
class AlreadyMatured(PegSimError):
    pass
