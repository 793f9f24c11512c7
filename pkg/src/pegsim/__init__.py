"""pegsim: deterministic simulator for a CPI-pegged token economy."""

from .agents import AgentProfile, AgentView, Intent, Role, step_agent
from .auction import AuctionConfig, AuctionResult, Award, Bid, lot_price, run_auction
from .config import ScenarioConfig, load_config
from .issuance import Issuance, PurchaseOrder, RedemptionPolicy, RedemptionRequest
from .ledger import Account, Block, Ledger, Transaction, TxKind, SYSTEM
from .payouts import Cohort, InterestPolicy, Payouts, PremiumPolicy
from .series import Series, load_series
from .simulator import DailyMetrics, Engine, SimulationResult, run_scenario
from .treasury import PegReport, Phase, Treasury

__version__ = "0.1.0"

__all__ = [
    "Account",
    "AgentProfile",
    "AgentView",
    "AuctionConfig",
    "AuctionResult",
    "Award",
    "Bid",
    "Block",
    "Cohort",
    "DailyMetrics",
    "Engine",
    "Intent",
    "InterestPolicy",
    "Issuance",
    "Ledger",
    "PegReport",
    "Payouts",
    "Phase",
    "PremiumPolicy",
    "PurchaseOrder",
    "RedemptionPolicy",
    "RedemptionRequest",
    "Role",
    "SYSTEM",
    "ScenarioConfig",
    "Series",
    "SimulationResult",
    "Transaction",
    "Treasury",
    "TxKind",
    "lot_price",
    "load_config",
    "load_series",
    "run_auction",
    "run_scenario",
    "step_agent",
    "__version__",
]
