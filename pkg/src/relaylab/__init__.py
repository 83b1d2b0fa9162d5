"""relaylab: uplink relay throughput and energy analysis under inter-cell interference.

Two engines over one model: a semi-analytic engine built from interference
Laplace functionals (closed forms plus deterministic quadrature) and an
independent Monte Carlo engine that executes the protocol state machines.
Every quantity the analytic engine produces can be re-estimated by simulation,
and the validation suite holds the two to agreement within Monte Carlo error.
"""

from .model import (
    AntennaPattern,
    CdfCurve,
    CurvePoint,
    DegenerateGeometryError,
    Estimate,
    LinkGeometry,
    NetworkParams,
    Protocol,
    Receiver,
    SchemeSpec,
    ScPolicy,
    UePolar,
    antenna_gain,
    beamwidth3db_to_k,
    derive_link_geometry,
    k_to_beamwidth3db,
    reference_params,
    ue_position_density,
)
from .quad import IntegralResult, QuadratureError, Tolerance, hyp2f1, integrate_polar_annulus, integrate_semi_infinite
from .interference import (
    laplace_batch,
    laplace_joint2,
    laplace_joint2_antenna,
    laplace_joint3,
    laplace_single,
    laplace_single_quadrature,
)
from .analytic import (
    ChiExpectations,
    ScExpectations,
    average_energy_per_packet,
    average_throughput,
    chi_expectations,
    energy_per_packet,
    p_direct,
    sc_betas,
    sc_probs,
    sic_pair_prob,
    throughput_cdf,
    throughput_scheme,
    throughput_sc,
)
from .simulator import (
    Deployment,
    DeploymentModel,
    RngPolicy,
    SlotPairOutcome,
    empirical_cdf,
    estimate,
    estimate_basic_voronoi,
    estimate_laplace_mc,
    run_slot_pair,
    sample_deployment,
)

__version__ = "0.1.0"
