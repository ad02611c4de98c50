"""Survival of Galton-Watson chains and of a cooperative two-species chain.

Exact distribution recursions, Monte Carlo survival estimates, block
(renormalization) survival certificates, and (p, q) phase diagrams.
"""

from gwcoop.coop import (
    CoopParams,
    CoopState,
    JointLaw,
    coop_certificate_search,
    coop_step,
    coop_survival_mc,
    critical_q,
    domination_check,
    exact_joint_law,
    expected_renormalized_Z,
    grandpas_check,
    h_exact,
    h_polynomial,
)
from gwcoop.dist import IntegerDistribution, binomial, convolve, convolve_power, sample, tail
from gwcoop.errors import BudgetExceeded, NoCrossing, PreconditionError
from gwcoop.estimate import SurvivalEstimate
from gwcoop.galton_watson import (
    Certificate,
    GWOutcome,
    OffspringLaw,
    Status,
    certificate_search,
    exact_law_at,
    extinction_probability,
    gw_step,
    renormalized_fertility,
    simulate,
    survival_lower_bound,
    tau_tail_exact,
    thin,
)
from gwcoop.phase import PhaseGrid, export_csv, sweep

__version__ = "0.1.0"
