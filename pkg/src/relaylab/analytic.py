"""Closed-form / quadrature engine for decode probabilities, throughput and energy.

Every expectation below follows the same pattern: exponential fading on the
served links is integrated out in closed form, leaving a product of constants
times a joint Laplace functional of the interference field evaluated at
link-dependent arguments (:mod:`relaylab.interference`).

Throughput is counted in packets delivered per two consecutive slots.  The
four protocols with a cancellation-capable BS:

* basic: two independent direct transmissions,
* baseline: slot 1 UE->relay, slot 2 relay forwards (if it decoded) while the
  UE sends a new packet; the BS separates the two signals,
* selection: baseline plus the BS also listening during slot 1,
* feedback: selection plus the relay staying silent when the BS already holds
  the packet.

The two-signal separation at the BS decodes the stronger signal first; with a
threshold >= 1 the ordering constraint is implied by the SINR conditions, so
each joint probability is a two-term sum (either signal decoded first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interference import laplace_batch, laplace_single
from .model import (
    CdfCurve,
    LinkGeometry,
    NetworkParams,
    Protocol,
    Receiver,
    SchemeSpec,
    ScPolicy,
    UePolar,
    derive_link_geometry,
)

__all__ = [
    "ChiExpectations",
    "ScExpectations",
    "PositionMetrics",
    "p_direct",
    "sic_pair_prob",
    "chi_expectations",
    "sc_betas",
    "sc_beta_relay_stationary",
    "sc_split_objective",
    "sc_probs",
    "throughput_scheme",
    "throughput_sc",
    "scheme_position_metrics",
    "energy_per_packet",
    "average_throughput",
    "average_energy_per_packet",
    "average_relay_duty",
    "throughput_cdf",
    "position_grid",
]


def _require_supported(params: NetworkParams):
    if not params.rx_pattern_bs.is_omni:
        raise NotImplementedError(
            "directional BS reception is a configuration hook only; "
            "the engines currently require an omnidirectional BS pattern"
        )


# ---------------------------------------------------------------------------
# elementary probabilities


def p_direct(params: NetworkParams, d_ub: float) -> float:
    """Probability that a lone direct transmission at distance ``d_ub`` decodes.

    ``exp(-theta/gamma_ub) * L(theta * d_ub**alpha / (Pt A), d_ub)``; the basic
    scheme's throughput is twice this.
    """
    _require_supported(params)
    if d_ub < 0:
        raise ValueError(f"d_ub must be >= 0, got {d_ub}")
    th = params.theta_thresh
    if d_ub == 0.0:
        return 1.0
    s = th * d_ub**params.alpha / (params.Pt * params.A)
    gamma_ub = params.A * params.Pt / (params.N0 * d_ub**params.alpha)
    return math.exp(-th / gamma_ub) * laplace_single(params, s, d_ub)


def sic_pair_prob(gamma1: float, gamma2: float, theta_thresh: float, i_hat: float) -> float:
    """P(both of two superposed exponential-fading signals decode), given
    normalized interference ``i_hat = I / N0``.

    Sum over the two decode orders of
    ``exp(-theta c (1/g_first + 1/g_second)) * exp(-theta^2 c / g_first) /
    (1 + theta g_second / g_first)`` with ``c = i_hat + 1``.
    """
    if gamma1 <= 0 or gamma2 <= 0:
        raise ValueError("mean SNRs must be positive")
    if theta_thresh < 1:
        raise ValueError(f"the two-term order-free sum requires theta >= 1, got {theta_thresh}")
    if i_hat < 0:
        raise ValueError(f"normalized interference must be >= 0, got {i_hat}")
    th = theta_thresh
    c = i_hat + 1.0

    def one_order(g_first, g_second):
        return (math.exp(-th * c * (1.0 / g_first + 1.0 / g_second))
                * math.exp(-th * th * c / g_first)
                / (1.0 + th * g_second / g_first))

    return one_order(gamma1, gamma2) + one_order(gamma2, gamma1)


def _pair_terms(th: float, g_target: float, g_other: float):
    """Two (constant, interference-coefficient) terms for "target decodes while
    the other signal is also on air", with the coefficient multiplying I/N0.

    Term 1: target strongest, decoded first (the other is treated as noise).
    Term 2: the other decoded and cancelled first, then the target.
    """
    k1 = math.exp(-th / g_target) / (1.0 + th * g_other / g_target)
    c1 = th / g_target
    k2 = (math.exp(-th * (1.0 / g_target + 1.0 / g_other)) * math.exp(-th * th / g_other)
          / (1.0 + th * g_target / g_other))
    c2 = th * ((th + 1.0) / g_other + 1.0 / g_target)
    return (k1, c1), (k2, c2)


# ---------------------------------------------------------------------------
# joint decode expectations (no superposition coding)


@dataclass(frozen=True)
class ChiExpectations:
    """Joint decode probabilities entering the relaying throughput formulas.

    ``e_ub`` is a single direct slot; ``e_ur`` the access link; the ``_i``
    suffix marks a direct decode with the relay transmitting concurrently;
    ``ub1``/``ub2`` distinguish the slot-1 and slot-2 direct transmissions.
    """

    e_ub: float
    e_ur: float
    e_ur_rb: float
    e_ur_ub: float
    e_ur_ubi: float
    e_ub1_ur_rb: float
    e_ub1_ur_ub2i: float
    e_ub1_ur_ub2: float


def chi_expectations(params: NetworkParams, geom: LinkGeometry,
                     upto: str = Protocol.FEEDBACK) -> ChiExpectations:
    """Evaluate the joint decode expectations for one UE position.

    Each expectation is a sum of constants times joint Laplace functionals with
    the off-center branch at the relay (separation ``d_rb``) and the exclusion
    disk of radius ``d_ub`` around the BS; all of them are evaluated in one
    vectorized quadrature batch.  ``upto`` trims the batch to what the given
    protocol needs (the slot-1 triples exist only for selection/feedback);
    trimmed fields come back as ``nan``.
    """
    _require_supported(params)
    th = params.theta_thresh
    N0 = params.N0
    g_ub, g_rb, g_ur = geom.gamma_ub, geom.gamma_rb, geom.gamma_ur
    if not (g_ub > 0 and g_rb > 0 and g_ur > 0):
        raise ValueError("mean SNRs must be positive and finite")

    su = th / (N0 * g_ur)         # access-link argument, measured at the relay
    cub = th / (N0 * g_ub)        # plain direct-link argument at the BS
    (ka_rb, ca_rb), (kb_rb, cb_rb) = _pair_terms(th, g_rb, g_ub)   # relay packet target
    (ka_ub, ca_ub), (kb_ub, cb_ub) = _pair_terms(th, g_ub, g_rb)   # UE packet target

    tuples = [
        (su, 0.0, 0.0),          # 0: access link alone
        (su, ca_rb / N0, 0.0),   # 1
        (su, cb_rb / N0, 0.0),   # 2
        (su, cub, 0.0),          # 3: also term 1 of the UE-target pair (ca_ub == th/g_ub)
        (su, cb_ub / N0, 0.0),   # 4
    ]
    if upto in (Protocol.SELECTION, Protocol.FEEDBACK):
        tuples += [
            (su, cub, ca_rb / N0),   # 5
            (su, cub, cb_rb / N0),   # 6
        ]
    if upto == Protocol.FEEDBACK:
        tuples += [
            (su, cub, cub),          # 7: also term 1 of the slot-2 UE-target triple
            (su, cub, cb_ub / N0),   # 8
        ]
    pattern = params.rx_pattern_relay if not params.rx_pattern_relay.is_omni else None
    L = laplace_batch(params, tuples, params.d_rb, geom.ue.d_ub, pattern=pattern)

    e_acc = math.exp(-th / g_ur)
    e_dir = math.exp(-th / g_ub)
    nan = math.nan
    e_ub1_ur_rb = e_ub1_ur_ub2i = e_ub1_ur_ub2 = nan
    if upto in (Protocol.SELECTION, Protocol.FEEDBACK):
        e_ub1_ur_rb = e_dir * e_acc * (ka_rb * L[5] + kb_rb * L[6])
    if upto == Protocol.FEEDBACK:
        e_ub1_ur_ub2i = e_dir * e_acc * (ka_ub * L[7] + kb_ub * L[8])
        e_ub1_ur_ub2 = e_dir * e_acc * e_dir * L[7]

    return ChiExpectations(
        e_ub=p_direct(params, geom.ue.d_ub),
        e_ur=e_acc * L[0],
        e_ur_rb=e_acc * (ka_rb * L[1] + kb_rb * L[2]),
        e_ur_ub=e_acc * e_dir * L[3],
        e_ur_ubi=e_acc * (ka_ub * L[3] + kb_ub * L[4]),
        e_ub1_ur_rb=e_ub1_ur_rb,
        e_ub1_ur_ub2i=e_ub1_ur_ub2i,
        e_ub1_ur_ub2=e_ub1_ur_ub2,
    )


# ---------------------------------------------------------------------------
# superposition coding


def _split_gain(th: float, beta: float) -> float:
    """Fading margin factor of the strong stream, ``1 / (beta (th+1) - th)``.

    Infinite when the split leaves the strong stream below threshold even
    without noise.
    """
    denom = beta * (th + 1.0) - th
    return 1.0 / denom if denom > 0 else math.inf


def _split_margin(th: float, beta: float) -> float:
    """Fading margin for decoding both streams: ``max`` of the strong-stream
    and weak-stream requirements."""
    return max(_split_gain(th, beta), 1.0 / (1.0 - beta))


def sc_betas(params: NetworkParams, geom: LinkGeometry) -> tuple[float, float]:
    """(direct split, relayed split) power fractions for the strong stream.

    The direct split ``(th+1)/(th+2)`` balances the two stream requirements.
    The relayed split maximizes the interference-free probability that the BS
    decodes the strong stream while the relay decodes both; its stationary
    point is clamped from below by the direct split.
    """
    th = params.theta_thresh
    if geom.d_ur <= 0:
        raise ValueError("relayed split undefined for zero access distance")
    beta_direct = (th + 1.0) / (th + 2.0)
    ratio = (geom.ue.d_ub / geom.d_ur) ** params.alpha
    beta_relay = max(_beta_stationary_from_ratio(th, ratio), beta_direct)
    return beta_direct, beta_relay


def _beta_stationary_from_ratio(th: float, ratio: float) -> float:
    # 1 - (1 - sqrt(ratio/(th+1))) / (th+1-ratio) in a form that is smooth
    # through the removable singularity at ratio = th+1
    q = math.sqrt((th + 1.0) * ratio)
    return 1.0 - 1.0 / (th + 1.0 + q)


def sc_beta_relay_stationary(params: NetworkParams, geom: LinkGeometry) -> float:
    """Unclamped stationary point of :func:`sc_split_objective` (uses the SNR ratio)."""
    th = params.theta_thresh
    return _beta_stationary_from_ratio(th, geom.gamma_ur / geom.gamma_ub)


def sc_split_objective(params: NetworkParams, geom: LinkGeometry, beta) -> np.ndarray:
    """Interference-free exponent sum ``1/(g_ub (beta(th+1)-th)) + 1/(g_ur (1-beta))``.

    Minimizing this over the split maximizes the interference-free probability
    that the strong stream decodes at the BS while both streams decode at the
    relay.  Vectorized over ``beta``.
    """
    th = params.theta_thresh
    beta = np.asarray(beta, dtype=float)
    strong = beta * (th + 1.0) - th
    with np.errstate(divide="ignore"):
        out = np.where(strong > 0, 1.0 / (geom.gamma_ub * strong), np.inf)
        out = out + 1.0 / (geom.gamma_ur * (1.0 - beta))
    return out


@dataclass(frozen=True)
class ScExpectations:
    """Stream decode probabilities and joint terms under superposition coding.

    ``x`` flags exactly one stream decoded, ``y`` both; ``p12_r`` is the
    probability that the strong stream decodes at the BS while the relay
    decodes both.
    """

    beta: float
    e_ub_x: float
    e_ub_y: float
    e_ur_y: float
    p12_r: float
    e_ury_rb: float
    e_ury_ub: float
    e_ury_ubi: float
    e_ury_uby: float
    e_uby_ury_rb: float
    e_uby_ury_ub2i: float
    e_uby_ury_ub2: float


def sc_probs(params: NetworkParams, geom: LinkGeometry, beta: float) -> ScExpectations:
    """All superposition-coding expectations for one UE position and split ``beta``.

    Slot-1 transmissions carry two superposed streams over a single fading
    channel, so stream events are threshold crossings of one exponential
    variable; slot 2 reverts to full-power single-packet operation.
    """
    _require_supported(params)
    if not 0.5 <= beta < 1.0:
        raise ValueError(f"SC split must lie in [0.5, 1), got {beta}")
    th = params.theta_thresh
    N0 = params.N0
    g_ub, g_rb, g_ur = geom.gamma_ub, geom.gamma_rb, geom.gamma_ur
    x = geom.ue.d_ub
    m = _split_margin(th, beta)
    q1 = _split_gain(th, beta)

    if math.isinf(m):
        # strong stream below threshold even noise-free: slot 1 delivers nothing
        return ScExpectations(beta, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    su_m = th * m / (N0 * g_ur)
    cub = th / (N0 * g_ub)
    cub_m = th * m / (N0 * g_ub)
    (ka_rb, ca_rb), (kb_rb, cb_rb) = _pair_terms(th, g_rb, g_ub)
    (ka_ub, ca_ub), (kb_ub, cb_ub) = _pair_terms(th, g_ub, g_rb)

    tuples = [
        (su_m, 0.0, 0.0),            # 0: both streams at the relay
        (su_m, ca_rb / N0, 0.0),     # 1
        (su_m, cb_rb / N0, 0.0),     # 2
        (su_m, cub, 0.0),            # 3 (= UE-target term 1)
        (su_m, cb_ub / N0, 0.0),     # 4
        (su_m, cub_m, ca_rb / N0),   # 5
        (su_m, cub_m, cb_rb / N0),   # 6
        (su_m, cub_m, cub),          # 7 (= slot-2 UE-target term 1)
        (su_m, cub_m, cb_ub / N0),   # 8
        (th / (N0 * g_ur * (1.0 - beta)), th * q1 / (N0 * g_ub), 0.0),  # 9: p12_r
        (su_m, cub_m, 0.0),          # 10: both-streams at relay and at BS, slot 1
    ]
    pattern = params.rx_pattern_relay if not params.rx_pattern_relay.is_omni else None
    L = laplace_batch(params, tuples, params.d_rb, x, pattern=pattern)

    e_ub_y = math.exp(-th * m / g_ub) * laplace_single(params, th * m / (N0 * g_ub), x)
    p_first = math.exp(-th * q1 / g_ub) * laplace_single(params, th * q1 / (N0 * g_ub), x)
    e_ub_x = max(p_first - e_ub_y, 0.0)

    e_acc = math.exp(-th * m / g_ur)
    e_dir = math.exp(-th / g_ub)
    e_both_dir = math.exp(-th * m / g_ub)
    e_ur_y = e_acc * L[0]
    e_ury_rb = e_acc * (ka_rb * L[1] + kb_rb * L[2])
    e_ury_ubi = e_acc * (ka_ub * L[3] + kb_ub * L[4])
    e_ury_ub = e_acc * e_dir * L[3]
    e_uby_ury_rb = e_both_dir * e_acc * (ka_rb * L[5] + kb_rb * L[6])
    e_uby_ury_ub2i = e_both_dir * e_acc * (ka_ub * L[7] + kb_ub * L[8])
    e_uby_ury_ub2 = e_both_dir * e_acc * e_dir * L[7]
    p12_r = math.exp(-th * q1 / g_ub) * math.exp(-th / (g_ur * (1.0 - beta))) * L[9]
    e_ury_uby = e_acc * e_both_dir * L[10]

    return ScExpectations(
        beta=beta,
        e_ub_x=e_ub_x,
        e_ub_y=e_ub_y,
        e_ur_y=e_ur_y,
        p12_r=p12_r,
        e_ury_rb=e_ury_rb,
        e_ury_ub=e_ury_ub,
        e_ury_ubi=e_ury_ubi,
        e_ury_uby=e_ury_uby,
        e_uby_ury_rb=e_uby_ury_rb,
        e_uby_ury_ub2i=e_uby_ury_ub2i,
        e_uby_ury_ub2=e_uby_ury_ub2,
    )


# ---------------------------------------------------------------------------
# per-position throughput, relay duty and energy


@dataclass(frozen=True)
class PositionMetrics:
    """Throughput (packets per two slots) and relay transmit probability at one position."""

    throughput: float
    relay_tx_prob: float


def _metrics_no_sc(params, geom, protocol) -> PositionMetrics:
    if protocol == Protocol.BASIC:
        return PositionMetrics(2.0 * p_direct(params, geom.ue.d_ub), 0.0)
    e = chi_expectations(params, geom, upto=protocol)
    t_base = e.e_ur_rb + e.e_ub - e.e_ur_ub + e.e_ur_ubi
    if protocol == Protocol.BASELINE:
        return PositionMetrics(t_base, e.e_ur)
    t_sel = t_base + e.e_ub - e.e_ub1_ur_rb
    if protocol == Protocol.SELECTION:
        return PositionMetrics(t_sel, e.e_ur)
    t_fb = t_sel - e.e_ub1_ur_ub2i + e.e_ub1_ur_ub2
    # feedback silences the relay when the slot-1 direct decode succeeded;
    # the two slot-1 events share interferer positions, so the joint term
    # (identical in law to e_ur_ub) replaces the product of marginals
    return PositionMetrics(t_fb, e.e_ur - e.e_ur_ub)


def _metrics_sc(params, geom, protocol, beta) -> PositionMetrics:
    sc = sc_probs(params, geom, beta)
    if protocol == Protocol.BASIC:
        return PositionMetrics(4.0 * sc.e_ub_y, 0.0)
    e_ub = p_direct(params, geom.ue.d_ub)
    t_base = sc.e_ub_x + e_ub + sc.e_ury_rb - sc.e_ury_ub + sc.e_ury_ubi
    if protocol == Protocol.BASELINE:
        return PositionMetrics(t_base, sc.e_ur_y)
    t_sel = t_base + sc.e_ub_y - sc.e_uby_ury_rb
    if protocol == Protocol.SELECTION:
        return PositionMetrics(t_sel, sc.e_ur_y)
    t_fb = t_sel - sc.e_uby_ury_ub2i + sc.e_uby_ury_ub2
    return PositionMetrics(t_fb, sc.e_ur_y - sc.e_ury_uby)


def scheme_position_metrics(params: NetworkParams, geom: LinkGeometry,
                            scheme: SchemeSpec) -> PositionMetrics:
    """Throughput and relay duty for one UE position under the given scheme.

    The closed-form engine covers the cancellation receiver only; the no-SIC
    interference bounds are Monte Carlo territory.
    """
    if scheme.receiver != Receiver.SIC:
        raise ValueError("the analytic engine covers the SIC receiver only; "
                         "use the Monte Carlo engine for the no-SIC bounds")
    if scheme.sc.off:
        return _metrics_no_sc(params, geom, scheme.protocol)
    if scheme.sc.kind == ScPolicy.FIXED:
        return _metrics_sc(params, geom, scheme.protocol, scheme.sc.beta)
    beta_direct, beta_relay = sc_betas(params, geom)
    if scheme.sc.kind == ScPolicy.OPT_RELAY:
        beta = beta_direct if scheme.protocol == Protocol.BASIC else beta_relay
        return _metrics_sc(params, geom, scheme.protocol, beta)
    # opt_select: per position the UE commits to the better of direct SC at its
    # own split and feedback relaying SC at the relayed split
    direct = _metrics_sc(params, geom, Protocol.BASIC, beta_direct)
    relayed = _metrics_sc(params, geom, Protocol.FEEDBACK, beta_relay)
    return direct if direct.throughput >= relayed.throughput else relayed


def throughput_scheme(params: NetworkParams, geom: LinkGeometry, scheme: SchemeSpec) -> float:
    """Packets per two slots for a plain (no SC) scheme with the SIC receiver."""
    if not scheme.sc.off:
        raise ValueError("scheme has superposition coding enabled; use throughput_sc")
    return scheme_position_metrics(params, geom, scheme).throughput


def throughput_sc(params: NetworkParams, geom: LinkGeometry, scheme: SchemeSpec) -> float:
    """Packets per two slots for a superposition-coding scheme."""
    if scheme.sc.off:
        raise ValueError("scheme has no superposition coding; use throughput_scheme")
    return scheme_position_metrics(params, geom, scheme).throughput


def energy_per_packet(params: NetworkParams, geom: LinkGeometry, scheme: SchemeSpec) -> float:
    """Average supply energy per delivered packet at a fixed position (renewal ratio).

    The UE spends ``2 Pt T`` per cycle; the relay adds ``(Pr/eta) T`` whenever
    it forwards.  Infinite when the scheme delivers nothing.
    """
    m = scheme_position_metrics(params, geom, scheme)
    num = params.slot_T * (2.0 * params.Pt + params.Pr_radiated * m.relay_tx_prob)
    if m.throughput <= 0.0:
        return math.inf
    return num / m.throughput


# ---------------------------------------------------------------------------
# averages over the user position distribution


def position_grid(params: NetworkParams, n_radial: int = 24, n_angular: int = 6):
    """Gauss-Legendre nodes and weights for averaging over the UE position law.

    The radial direction substitutes the nearest-point CDF
    ``v = 1 - exp(-lam pi r^2)``, which absorbs the position density exactly;
    the angle covers half the wedge (everything is even in the angle).
    Returns ``(d_ub, theta_u, weights)`` flattened, with weights summing to 1.
    """
    vx, vw = np.polynomial.legendre.leggauss(n_radial)
    v = 0.5 * (vx + 1.0)
    wv = 0.5 * vw
    r = np.sqrt(-np.log1p(-v) / (params.lam * math.pi))
    tx, tw = np.polynomial.legendre.leggauss(n_angular)
    half = math.pi / params.kr
    theta = 0.5 * half * (tx + 1.0)
    wt = 0.5 * tw  # weight on the half wedge; doubling and normalizing cancel
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    ww = np.outer(wv, wt)
    return rr.ravel(), tt.ravel(), ww.ravel()


def _metrics_on_positions(params, scheme, d_ub, theta_u):
    tp = np.empty(d_ub.shape[0])
    duty = np.empty(d_ub.shape[0])
    for i in range(d_ub.shape[0]):
        geom = derive_link_geometry(params, UePolar(float(d_ub[i]), float(theta_u[i])))
        m = scheme_position_metrics(params, geom, scheme)
        tp[i] = m.throughput
        duty[i] = m.relay_tx_prob
    return tp, duty


def average_throughput(params: NetworkParams, scheme: SchemeSpec,
                       n_radial: int = 24, n_angular: int = 6) -> float:
    """Cell-average throughput: the position-law integral of the per-position value."""
    d_ub, theta_u, w = position_grid(params, n_radial, n_angular)
    tp, _ = _metrics_on_positions(params, scheme, d_ub, theta_u)
    return float(tp @ w)


def average_relay_duty(params: NetworkParams, scheme: SchemeSpec,
                       n_radial: int = 24, n_angular: int = 6) -> float:
    """Cell-average probability that the relay transmits in a cycle."""
    d_ub, theta_u, w = position_grid(params, n_radial, n_angular)
    _, duty = _metrics_on_positions(params, scheme, d_ub, theta_u)
    return float(duty @ w)


def average_energy_per_packet(params: NetworkParams, scheme: SchemeSpec,
                              n_radial: int = 24, n_angular: int = 6) -> float:
    """Cell-level energy per delivered packet: mean cycle energy over mean cycle packets."""
    d_ub, theta_u, w = position_grid(params, n_radial, n_angular)
    tp, duty = _metrics_on_positions(params, scheme, d_ub, theta_u)
    mean_tp = float(tp @ w)
    num = params.slot_T * (2.0 * params.Pt + params.Pr_radiated * float(duty @ w))
    if mean_tp <= 0.0:
        return math.inf
    return num / mean_tp


def throughput_cdf(params: NetworkParams, scheme: SchemeSpec, thresholds,
                   n_radial: int = 160, n_angular: int = 15) -> CdfCurve:
    """CDF of the per-position throughput over the UE position law.

    Midpoint cells in the position-CDF coordinates give equal-mass strata, so
    the CDF value at ``t`` is simply the covered fraction of cells.
    """
    thresholds = np.sort(np.asarray(thresholds, dtype=float))
    v = (np.arange(n_radial) + 0.5) / n_radial
    r = np.sqrt(-np.log1p(-v) / (params.lam * math.pi))
    half = math.pi / params.kr
    th_nodes = (np.arange(n_angular) + 0.5) / n_angular * half
    rr, tt = np.meshgrid(r, th_nodes, indexing="ij")
    tp, _ = _metrics_on_positions(params, scheme, rr.ravel(), tt.ravel())
    probs = tuple(float(np.mean(tp <= t)) for t in thresholds)
    return CdfCurve(tuple(thresholds.tolist()), probs)
