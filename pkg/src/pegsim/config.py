"""Scenario configuration: a flat `key = value` file with dotted keys.

Example:

    horizon_days = 120
    seed = 42
    cpi_file = cpi.csv
    returns_file = returns.csv
    opportunities_file = opportunities.csv
    policy.interest.rate = 0.02
    agent.0.role = saver
    agent.0.monthly_deposit = 100.00

Paths are resolved relative to the config file. Unknown keys are errors,
so typos fail loudly instead of silently running defaults.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

from .agents import AgentProfile, Role
from .errors import ConfigError
from .fixedpoint import parse_fiat, parse_price, parse_rate, parse_tokens
from .issuance import RedemptionPolicy
from .payouts import InterestPolicy, PremiumPolicy

_ROLES = {r.value: r for r in Role}

_SCALAR_KEYS = {
    "horizon_days",
    "seed",
    "base_price",
    "phi",
    "phase_window",
    "cpi_file",
    "returns_file",
    "opportunities_file",
    "fee.transfer_rate",
    "policy.max_share",
    "policy.interest.rate",
    "policy.interest.period_days",
    "policy.premium.rate",
    "policy.premium.semesters",
    "policy.premium.semester_days",
    "policy.redemption.rho",
    "policy.redemption.period_days",
    "policy.redemption.exit_fee",
    "policy.redemption.escalated_fee",
    "policy.redemption.hold_days",
    "auction.lots",
    "auction.lot_size",
    "auction.gamma",
    "auction.day_of_month",
    "init.backing",
    "init.fund",
    "script.mass_redeem_day",
}

_AGENT_KEYS = {
    "role",
    "monthly_deposit",
    "spend_fraction",
    "lump_sum",
    "price_cap",
    "lock_days",
    "withdraw_prob",
    "initial_tokens",
    "initial_fiat",
}

_ROLE_SPEND_DEFAULT = {
    Role.SAVER: "0.25",
    Role.RECURRENT: "0.05",
    Role.CONSERVATIVE_INVESTOR: "0",
    Role.CORPORATE: "0",
}


@dataclass
class ScenarioConfig:
    horizon_days: int
    seed: int
    cpi_file: str
    returns_file: str
    opportunities_file: str
    base_price_e8: int = 10**8
    phi_e8: int = 10_000_000  # 0.10 of positive earnings into the fund
    phase_window: int = 30
    transfer_fee_e8: int = 0
    max_share_e8: int | None = None  # safety margin knob, off by default
    interest: InterestPolicy = field(default_factory=InterestPolicy)
    premium: PremiumPolicy = field(default_factory=PremiumPolicy)
    redemption: RedemptionPolicy = field(default_factory=RedemptionPolicy)
    auction_lots: int = 100
    auction_lot_units: int = 10**8  # 1 token per lot
    auction_gamma_e8: int = 5_000_000
    auction_day_of_month: int = 8
    init_backing_cents: int = 0
    init_fund_cents: int = 0
    mass_redeem_day: int = -1
    roster: list[AgentProfile] = field(default_factory=list)


def read_kv_file(path) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    values: dict[str, str] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if not key or not value:
            raise ConfigError(f"line {line_no}: empty key or value")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key}")
        values[key] = value
    return values


def _want_int(values, key, default, minimum=None):
    raw = values.get(key)
    if raw is None:
        return default
    try:
        out = int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if minimum is not None and out < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}")
    return out


def _want_scaled(values, key, default, parser):
    raw = values.get(key)
    if raw is None:
        return default
    try:
        return parser(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _want_float(values, key, default):
    raw = values.get(key)
    if raw is None:
        return default
    try:
        out = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if not 0.0 <= out <= 1.0:
        raise ConfigError(f"{key}: probability must be in [0, 1]")
    return out


def _resolve(base_dir: str, path: str, key: str) -> str:
    resolved = path if os.path.isabs(path) else os.path.join(base_dir, path)
    if not os.path.exists(resolved):
        raise ConfigError(f"{key}: no such file: {resolved}")
    return resolved


def load_config(path) -> ScenarioConfig:
    values = read_kv_file(path)
    base_dir = os.path.dirname(os.path.abspath(path))

    agent_raws: dict[int, dict[str, str]] = {}
    for key in values:
        if key.startswith("agent."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1].isdigit() or parts[2] not in _AGENT_KEYS:
                raise ConfigError(f"unknown agent key: {key}")
            agent_raws.setdefault(int(parts[1]), {})[parts[2]] = values[key]
        elif key not in _SCALAR_KEYS:
            raise ConfigError(f"unknown key: {key}")

    for key in ("horizon_days", "cpi_file", "returns_file", "opportunities_file"):
        if key not in values:
            raise ConfigError(f"missing required key: {key}")

    try:
        interest = InterestPolicy(
            rate_e8=_want_scaled(values, "policy.interest.rate", 2_000_000, parse_rate),
            period_days=_want_int(values, "policy.interest.period_days", 30, 1),
        )
        premium = PremiumPolicy(
            rate_e8=_want_scaled(values, "policy.premium.rate", 70_000_000, parse_rate),
            semesters=_want_int(values, "policy.premium.semesters", 10, 1),
            semester_days=_want_int(values, "policy.premium.semester_days", 180, 1),
        )
        redemption = RedemptionPolicy(
            rho_e8=_want_scaled(values, "policy.redemption.rho", 10_000_000, parse_rate),
            period_days=_want_int(values, "policy.redemption.period_days", 30, 1),
            exit_fee_e8=_want_scaled(values, "policy.redemption.exit_fee", 1_000_000, parse_rate),
            escalated_fee_e8=_want_scaled(
                values, "policy.redemption.escalated_fee", 5_000_000, parse_rate
            ),
            hold_days=_want_int(values, "policy.redemption.hold_days", 30, 1),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    roster = []
    for index in sorted(agent_raws):
        raw = agent_raws[index]
        role_name = raw.get("role")
        if role_name not in _ROLES:
            raise ConfigError(
                f"agent.{index}.role: expected one of {sorted(_ROLES)}, got {role_name!r}"
            )
        role = _ROLES[role_name]
        try:
            roster.append(
                AgentProfile(
                    name=f"agent{index:02d}",
                    role=role,
                    monthly_deposit_cents=parse_fiat(raw.get("monthly_deposit", "0")),
                    spend_fraction_e8=parse_rate(
                        raw.get("spend_fraction", _ROLE_SPEND_DEFAULT[role])
                    ),
                    lump_sum_cents=parse_fiat(raw.get("lump_sum", "0")),
                    price_cap_e8=parse_price(raw.get("price_cap", "0")) or 0,
                    lock_days=int(raw.get("lock_days", "0")),
                    withdraw_prob=_want_float(raw, "withdraw_prob", 0.0),
                    initial_tokens_units=parse_tokens(raw.get("initial_tokens", "0")),
                    initial_fiat_cents=parse_fiat(raw.get("initial_fiat", "0")),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"agent.{index}: {exc}") from None

    config = ScenarioConfig(
        horizon_days=_want_int(values, "horizon_days", None, 1),
        seed=_want_int(values, "seed", 0),
        cpi_file=_resolve(base_dir, values["cpi_file"], "cpi_file"),
        returns_file=_resolve(base_dir, values["returns_file"], "returns_file"),
        opportunities_file=_resolve(base_dir, values["opportunities_file"], "opportunities_file"),
        base_price_e8=_want_scaled(values, "base_price", 10**8, parse_price),
        phi_e8=_want_scaled(values, "phi", 10_000_000, parse_rate),
        phase_window=_want_int(values, "phase_window", 30, 1),
        transfer_fee_e8=_want_scaled(values, "fee.transfer_rate", 0, parse_rate),
        max_share_e8=_want_scaled(values, "policy.max_share", None, parse_rate),
        interest=interest,
        premium=premium,
        redemption=redemption,
        auction_lots=_want_int(values, "auction.lots", 100, 0),
        auction_lot_units=_want_scaled(values, "auction.lot_size", 10**8, parse_tokens),
        auction_gamma_e8=_want_scaled(values, "auction.gamma", 5_000_000, parse_rate),
        auction_day_of_month=_want_int(values, "auction.day_of_month", 8, 0),
        init_backing_cents=_want_scaled(values, "init.backing", 0, parse_fiat),
        init_fund_cents=_want_scaled(values, "init.fund", 0, parse_fiat),
        mass_redeem_day=_want_int(values, "script.mass_redeem_day", -1),
        roster=roster,
    )
    if config.base_price_e8 <= 0:
        raise ConfigError("base_price: must be positive")
    if config.auction_lot_units <= 0:
        raise ConfigError("auction.lot_size: must be positive")
    if not 0 <= config.auction_day_of_month < 30:
        raise ConfigError("auction.day_of_month: must be in [0, 30)")
    if config.init_fund_cents > config.init_backing_cents:
        raise ConfigError("init.fund: cannot exceed init.backing")
    return config
