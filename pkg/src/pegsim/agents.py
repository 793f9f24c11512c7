"""Stochastic behavior models for the four user roles.

Each agent owns a deterministic RNG stream seeded from the scenario seed
and its roster position, and emits intents against a read-only snapshot
of what it can observe. Intents that turn out to be infeasible when the
pipeline applies them are dropped and counted, never errors.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from random import Random

from .fixedpoint import mul_rate


class Role(str, Enum):
    SAVER = "saver"
    RECURRENT = "recurrent"
    CONSERVATIVE_INVESTOR = "investor"
    CORPORATE = "corporate"


@dataclass(frozen=True)
class AgentProfile:
    name: str
    role: Role
    monthly_deposit_cents: int = 0
    spend_fraction_e8: int = 0  # daily transfer / redemption slice
    lump_sum_cents: int = 0
    price_cap_e8: int = 0
    lock_days: int = 0
    withdraw_prob: float = 0.0
    initial_tokens_units: int = 0
    initial_fiat_cents: int = 0


@dataclass(frozen=True)
class AgentView:
    """What one agent may observe when deciding its intents."""

    day: int
    spendable_fiat_cents: int
    spendable_token_units: int
    auction_today: bool
    auctions_held: int
    matured_cohort_member: bool
    peers: tuple[str, ...]


@dataclass(frozen=True)
class Intent:
    kind: str  # deposit | place_order | bid | transfer | redeem
    fiat_cents: int = 0
    token_units: int = 0
    peer: str = ""
    price_cap_e8: int = 0
    immediate: bool = False


def _monthly_due(day: int) -> bool:
    return day > 0 and day % 30 == 0


def step_agent(profile: AgentProfile, view: AgentView, day: int, rng: Random) -> list[Intent]:
    """Emit the agent's intents for one day, in application order."""
    out: list[Intent] = []
    role = profile.role

    if role is Role.SAVER:
        if _monthly_due(day) and profile.monthly_deposit_cents > 0:
            out.append(Intent("deposit", fiat_cents=profile.monthly_deposit_cents))
            out.append(Intent("place_order", fiat_cents=profile.monthly_deposit_cents))
        if profile.withdraw_prob > 0 and rng.random() < profile.withdraw_prob:
            units = _slice(view.spendable_token_units, profile.spend_fraction_e8)
            if units > 0:
                out.append(Intent("redeem", token_units=units))

    elif role is Role.RECURRENT:
        if _monthly_due(day) and profile.monthly_deposit_cents > 0:
            out.append(Intent("deposit", fiat_cents=profile.monthly_deposit_cents))
            out.append(Intent("place_order", fiat_cents=profile.monthly_deposit_cents))
        if view.peers and profile.spend_fraction_e8 > 0:
            peer = rng.choice(view.peers)
            units = mul_rate(view.spendable_token_units, profile.spend_fraction_e8)
            if units > 0:
                out.append(Intent("transfer", token_units=units, peer=peer))
        if profile.withdraw_prob > 0 and rng.random() < profile.withdraw_prob:
            units = _slice(view.spendable_token_units, profile.spend_fraction_e8)
            if units > 0:
                out.append(Intent("redeem", token_units=units))

    elif role is Role.CONSERVATIVE_INVESTOR:
        if day == 0 and profile.lump_sum_cents > 0:
            out.append(Intent("deposit", fiat_cents=profile.lump_sum_cents))
        if view.auction_today and view.auctions_held == 0:
            # on day 0 the deposit above lands before the bid is applied
            deposit = (
                profile.lump_sum_cents
                if day == 0
                else min(profile.lump_sum_cents, view.spendable_fiat_cents)
            )
            if deposit > 0 and profile.price_cap_e8 > 0:
                out.append(Intent("bid", fiat_cents=deposit, price_cap_e8=profile.price_cap_e8))
        if view.matured_cohort_member and view.spendable_token_units > 0:
            out.append(Intent("redeem", token_units=view.spendable_token_units))

    elif role is Role.CORPORATE:
        if day == 0 and profile.lump_sum_cents > 0:
            out.append(Intent("deposit", fiat_cents=profile.lump_sum_cents))
            out.append(Intent("place_order", fiat_cents=profile.lump_sum_cents))
        if day == profile.lock_days and view.spendable_token_units > 0:
            out.append(Intent("redeem", token_units=view.spendable_token_units, immediate=True))

    return out


def _slice(units: int, fraction_e8: int) -> int:
    if fraction_e8 <= 0:
        return units
    return mul_rate(units, fraction_e8)


def agent_rng(seed: int, index: int) -> Random:
    # string seeds hash via SHA-512 inside Random, stable across platforms
    return Random(f"pegsim:{seed}:agent:{index}")
