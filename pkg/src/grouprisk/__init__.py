"""Fair systemic-risk allocation for bank groups and the induced formation game.

Layers, bottom up:

* :mod:`grouprisk.market` -- validated Gaussian market data and the exact
  tilted-moment identities every closed form is built from.
* :mod:`grouprisk.disjoint` -- allocation on a disjoint partition.
* :mod:`grouprisk.overlap` -- allocation for weight-matrix (overlapping)
  strategies, sensitivities, and the group-splitting inequality.
* :mod:`grouprisk.bestresponse` -- a bank's optimal two-group weight split.
* :mod:`grouprisk.equilibrium` -- Nash checks, exhaustive search, and
  randomized best-response dynamics.
* :mod:`grouprisk.montecarlo` -- the independent sampling oracle used to
  validate every closed form.
* :mod:`grouprisk.cli` -- command-line front end (JSON in, JSON out).
"""

from .market import GaussianMarket, GroupVector, TiltedMoments, group_stats, tilted_moments, validate_market
from .disjoint import (
    AllocationReport,
    Partition,
    ScreenVerdict,
    allocation_disjoint,
    betas_disjoint,
    block_allocation,
    group_constant,
    not_nash_screen,
    sample_optimal_Y,
    variance_share,
)
from .overlap import (
    OverlapReport,
    ShockVector,
    SplitComparison,
    WeightMatrix,
    allocation_overlap,
    bank_total_risk,
    betas_overlap,
    local_causal_responsibility,
    marginal_group_risk,
    marginal_risk_allocation,
    monotonicity_check,
    row_risk,
    weight_sensitivity,
)
from .bestresponse import (
    SplitCoefficients,
    best_response_two_groups,
    coefficients,
    decision_margins,
    interior_condition,
    interior_optimum,
    sufficient_interior_condition,
)
from .equilibrium import (
    EquilibriumResult,
    brute_force_nash_disjoint,
    fictitious_play_disjoint,
    fictitious_play_overlap,
    is_nash_disjoint,
    is_nash_overlap,
    iter_partitions,
)
from .montecarlo import (
    TrivialNashBound,
    budget_check,
    sample_X,
    tilted_estimate,
    trivial_nash_B_bound,
)

__version__ = "0.1.0"
