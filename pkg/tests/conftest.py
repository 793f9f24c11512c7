import hashlib

import pytest

from pegsim.issuance import Holds
from pegsim.ledger import SYSTEM, Ledger, TxKind
from pegsim.series import Series
from pegsim.treasury import Treasury

E8 = 10**8


def series(pairs) -> Series:
    """Build a series from (day, value) pairs, values in plain units."""
    return Series(
        tuple(day for day, _ in pairs),
        tuple(int(round(value * E8)) for _, value in pairs),
    )


def commitment_for(name: str) -> bytes:
    return hashlib.sha256(f"identity:{name}".encode()).digest()


def make_stack(
    cpi_pairs=((0, 100),),
    base_price=1.0,
    phi=0.0,
    phase_window=30,
    v=0.0,
    f=0.0,
    accounts=(),
):
    """Ledger + treasury + holds with funded accounts, mirroring SYSTEM.

    accounts: iterable of (name, tokens, fiat) in plain units.
    """
    ledger = Ledger()
    treasury = Treasury(
        base_price_e8=int(round(base_price * E8)),
        cpi=series(cpi_pairs),
        phi_e8=int(round(phi * E8)),
        phase_window=phase_window,
    )
    holds = Holds()
    for name, tokens, fiat in accounts:
        ledger.open_account(commitment_for(name), day=0, account_id=name)
        units = int(round(tokens * E8))
        cents = int(round(fiat * 100))
        if cents:
            ledger.emit(TxKind.FIAT_DEPOSIT, SYSTEM, name, 0, cents, 0, memo="genesis")
        if units:
            ledger.emit(TxKind.MINT, SYSTEM, SYSTEM, units, 0, 0, memo="genesis")
            ledger.emit(TxKind.TOKEN_TRANSFER, SYSTEM, name, units, 0, 0, memo="genesis")
            treasury.s_public += units
    v_cents = int(round(v * 100))
    if v_cents:
        ledger.emit(TxKind.FIAT_DEPOSIT, SYSTEM, SYSTEM, 0, v_cents, 0, memo="backing")
        treasury.v_cents = v_cents
        treasury.f_cents = int(round(f * 100))
    return ledger, treasury, holds


@pytest.fixture
def stack():
    return make_stack


def write_scenario(tmp_path, config_text, cpi="day,value\n0,100\n", returns="day,value\n0,100\n",
                   opps="day,value\n0,0\n"):
    """Materialize scenario files; returns the config path."""
    (tmp_path / "cpi.csv").write_text(cpi)
    (tmp_path / "returns.csv").write_text(returns)
    (tmp_path / "opps.csv").write_text(opps)
    base = (
        "cpi_file = cpi.csv\n"
        "returns_file = returns.csv\n"
        "opportunities_file = opps.csv\n"
    )
    path = tmp_path / "scenario.txt"
    path.write_text(base + config_text)
    return path
