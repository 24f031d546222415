"""Game-theoretic analysis of full-duplex slotted Aloha on a two-pair grid."""

from .core import (STRATEGIES, DerivedConstants, NetworkParams, Receiver, Strategy,
                   derive_constants, success_probability)
from .errors import (InfeasibleBetaError, InvalidParameterError, InvalidRoleError, ModelError,
                     NoEquilibriumError, OutOfBandError)
from .game import (CostInterval, CostPolicy, DominanceReport, EquilibriumFamily, MixedStrategy,
                   action_throughput, design_costs, dominance_report, mne_family, mne_strategy,
                   solve_equilibria, utility, verify_mne)
from .montecarlo import SimConfig, SimEstimate, estimate_success_probability, simulate
from .poa import PoaPoint, min_mne_throughput, price_of_anarchy, poa_sweep
from .throughput import (SymmetricAccessProfile, ThroughputOptimum, aggregate_from_profiles,
                         aggregate_throughput, maximize_throughput, optimal_mne,
                         profile_throughput, regime_map)

__version__ = "0.1.0"
