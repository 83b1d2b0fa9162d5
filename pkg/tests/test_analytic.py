import math

import numpy as np
import pytest

import relaylab as rl
from relaylab import analytic, simulator
from relaylab.analytic import (
    chi_expectations,
    energy_per_packet,
    p_direct,
    sc_beta_relay_stationary,
    sc_betas,
    sc_probs,
    sc_split_objective,
    scheme_position_metrics,
    sic_pair_prob,
    throughput_cdf,
    throughput_scheme,
    throughput_sc,
)
from relaylab.interference import laplace_batch
from relaylab.model import (
    LinkGeometry,
    Protocol,
    SchemeSpec,
    ScPolicy,
    UePolar,
    derive_link_geometry,
    reference_params,
)
from relaylab.simulator import RngPolicy

P2 = reference_params(theta_thresh=2.0)
GEOM = derive_link_geometry(P2, UePolar(250.0, 0.2))


# ---------------------------------------------------------------------------
# direct link


def test_p_direct_limits():
    assert p_direct(P2, 1e-9) == pytest.approx(1.0, abs=1e-6)
    assert p_direct(P2, 0.0) == 1.0
    huge = reference_params(theta_thresh=1e9)
    assert p_direct(huge, 250.0) < 1e-12
    assert 0.0 < p_direct(P2, 250.0) < 1.0


def test_p_direct_mc():
    geom = derive_link_geometry(P2, UePolar(250.0, 0.0))
    res = simulator.estimate(P2, SchemeSpec(Protocol.BASIC), 200_000, RngPolicy(101), geom=geom)
    mc = res["e_ub"]
    assert abs(p_direct(P2, 250.0) - mc.value) <= 3.0 * mc.stderr


# ---------------------------------------------------------------------------
# two-signal cancellation


def test_sic_pair_symmetry_and_limits():
    a = sic_pair_prob(10.0, 5.0, 1.5, 0.5)
    b = sic_pair_prob(5.0, 10.0, 1.5, 0.5)
    assert a == pytest.approx(b, rel=1e-14)
    assert sic_pair_prob(10.0, 5.0, 1.5, 1e9) < 1e-12
    with pytest.raises(ValueError):
        sic_pair_prob(10.0, 5.0, 0.5, 0.1)


def test_sic_pair_brute_force():
    g1, g2, th, ih = 10.0, 5.0, 1.5, 0.5
    rng = np.random.default_rng(17)
    n = 1_000_000
    x1 = g1 * rng.standard_exponential(n)
    x2 = g2 * rng.standard_exponential(n)
    c = ih + 1.0
    both = ((x1 >= th * (x2 + c)) & (x2 >= th * c)) | ((x2 >= th * (x1 + c)) & (x1 >= th * c))
    phat = both.mean()
    se = math.sqrt(phat * (1 - phat) / n)
    assert abs(sic_pair_prob(g1, g2, th, ih) - phat) <= 3.0 * se


# ---------------------------------------------------------------------------
# joint decode expectations


def test_chi_expectations_no_interference_closed_form():
    p = reference_params(lam=0.0, theta_thresh=2.0)
    geom = derive_link_geometry(p, UePolar(250.0, 0.2))
    e = chi_expectations(p, geom)
    th = 2.0
    gub, grb, gur = geom.gamma_ub, geom.gamma_rb, geom.gamma_ur
    # every Laplace factor is one; hand-evaluate the two-term sums
    acc = math.exp(-th / gur)
    pair_rb = (math.exp(-th / grb) / (1 + th * gub / grb)
               + math.exp(-th * (1 / grb + 1 / gub) - th * th / gub) / (1 + th * grb / gub))
    pair_ub = (math.exp(-th / gub) / (1 + th * grb / gub)
               + math.exp(-th * (1 / gub + 1 / grb) - th * th / grb) / (1 + th * gub / grb))
    assert e.e_ub == pytest.approx(math.exp(-th / gub), rel=1e-12)
    assert e.e_ur == pytest.approx(acc, rel=1e-12)
    assert e.e_ur_rb == pytest.approx(acc * pair_rb, rel=1e-12)
    assert e.e_ur_ubi == pytest.approx(acc * pair_ub, rel=1e-12)
    assert e.e_ur_ub == pytest.approx(acc * math.exp(-th / gub), rel=1e-12)
    assert e.e_ub1_ur_rb == pytest.approx(math.exp(-th / gub) * acc * pair_rb, rel=1e-12)
    assert e.e_ub1_ur_ub2 == pytest.approx(math.exp(-2 * th / gub) * acc, rel=1e-12)


def test_chi_expectations_invariants_random_geometries():
    rng = np.random.default_rng(23)
    for _ in range(40):
        d_ub = float(rng.uniform(30.0, 700.0))
        theta = float(rng.uniform(-math.pi / 3, math.pi / 3))
        geom = derive_link_geometry(P2, UePolar(d_ub, theta))
        e = chi_expectations(P2, geom)
        vals = [e.e_ub, e.e_ur, e.e_ur_rb, e.e_ur_ub, e.e_ur_ubi,
                e.e_ub1_ur_rb, e.e_ub1_ur_ub2i, e.e_ub1_ur_ub2]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert e.e_ur_rb <= e.e_ur + 1e-12
        assert e.e_ur_ub <= min(e.e_ur, e.e_ub) + 1e-12
        assert e.e_ub1_ur_rb <= min(e.e_ub, e.e_ur_rb) + 1e-12
        assert e.e_ub1_ur_ub2 <= e.e_ur_ub + 1e-12


def test_chi_expectations_mc():
    # the spec-example point: d_ub=300, theta=0.2, d_rb=150, Pr=2Pt, threshold 2
    p = reference_params(theta_thresh=2.0)
    geom = derive_link_geometry(p, UePolar(300.0, 0.2))
    e = chi_expectations(p, geom)
    res = simulator.estimate(p, SchemeSpec(Protocol.FEEDBACK), 200_000, RngPolicy(102), geom=geom)
    for name in ("e_ub", "e_ur", "e_ur_rb", "e_ur_ub", "e_ur_ubi",
                 "e_ub1_ur_rb", "e_ub1_ur_ub2i", "e_ub1_ur_ub2"):
        mc = res[name]
        assert abs(getattr(e, name) - mc.value) <= 3.0 * max(mc.stderr, 1e-5), name


# ---------------------------------------------------------------------------
# throughput formulas


def test_throughput_perfect_access_limit():
    # flawless access link: relaying throughput collapses to relay-decode plus
    # direct-under-interference
    geom = LinkGeometry(ue=GEOM.ue, d_ur=GEOM.d_ur, theta_ur=GEOM.theta_ur,
                        gamma_ub=GEOM.gamma_ub, gamma_rb=GEOM.gamma_rb, gamma_ur=1e15)
    e = chi_expectations(P2, geom)
    t = throughput_scheme(P2, geom, SchemeSpec(Protocol.BASELINE))
    assert e.e_ur == pytest.approx(1.0, abs=1e-9)
    assert t == pytest.approx(e.e_ur_rb + e.e_ur_ubi, rel=1e-9)


def test_throughput_dead_access_limit():
    geom = LinkGeometry(ue=GEOM.ue, d_ur=GEOM.d_ur, theta_ur=GEOM.theta_ur,
                        gamma_ub=GEOM.gamma_ub, gamma_rb=GEOM.gamma_rb, gamma_ur=1e-12)
    t = throughput_scheme(P2, geom, SchemeSpec(Protocol.BASELINE))
    assert t == pytest.approx(p_direct(P2, GEOM.ue.d_ub), rel=1e-9)
    basic = throughput_scheme(P2, geom, SchemeSpec(Protocol.BASIC))
    assert t == pytest.approx(basic / 2.0, rel=1e-9)


def test_throughput_ordering_and_range():
    rng = np.random.default_rng(31)
    for _ in range(30):
        geom = derive_link_geometry(P2, UePolar(float(rng.uniform(30, 600)),
                                                float(rng.uniform(-1.0, 1.0))))
        tb = throughput_scheme(P2, geom, SchemeSpec(Protocol.BASELINE))
        ts = throughput_scheme(P2, geom, SchemeSpec(Protocol.SELECTION))
        tf = throughput_scheme(P2, geom, SchemeSpec(Protocol.FEEDBACK))
        assert 0.0 <= tb <= 2.0 and 0.0 <= ts <= 2.0 and 0.0 <= tf <= 2.0
        assert tf >= ts - 1e-9 >= tb - 2e-9


def test_throughput_scheme_guards():
    with pytest.raises(ValueError):
        throughput_scheme(P2, GEOM, SchemeSpec(Protocol.BASIC, sc=ScPolicy(ScPolicy.FIXED, beta=0.8)))
    with pytest.raises(ValueError):
        throughput_scheme(P2, GEOM, SchemeSpec(Protocol.SELECTION, "nosic_lower"))
    with pytest.raises(ValueError):
        throughput_sc(P2, GEOM, SchemeSpec(Protocol.BASIC))


def test_bs_pattern_hook_rejected():
    from relaylab.model import AntennaPattern

    p = reference_params(rx_pattern_bs=AntennaPattern(2.0))
    with pytest.raises(NotImplementedError):
        p_direct(p, 250.0)


# ---------------------------------------------------------------------------
# averages and distribution


def test_average_basic_equals_radial_integral():
    from scipy import integrate as si

    p = reference_params()
    avg = analytic.average_throughput(p, SchemeSpec(Protocol.BASIC), 32, 8)
    ref, _ = si.quad(lambda r: 2.0 * p_direct(p, r) * 2 * math.pi * p.lam * r
                     * math.exp(-p.lam * math.pi * r * r), 0, 6000.0,
                     epsabs=1e-10, epsrel=1e-9, limit=200)
    assert avg == pytest.approx(ref, abs=1e-6)


def test_average_grid_convergence():
    p = reference_params()
    coarse = analytic.average_throughput(p, SchemeSpec(Protocol.SELECTION), 16, 4)
    fine = analytic.average_throughput(p, SchemeSpec(Protocol.SELECTION), 28, 8)
    assert coarse == pytest.approx(fine, rel=2e-3)


def test_cdf_shape():
    p = reference_params()
    thresholds = np.linspace(0.0, 2.0, 21)
    curve = throughput_cdf(p, SchemeSpec(Protocol.SELECTION), thresholds, 48, 7)
    probs = np.array(curve.probs)
    assert np.all(np.diff(probs) >= -1e-12)
    assert probs[-1] == pytest.approx(1.0)
    assert curve.prob_at(-0.01) == 0.0


def test_cdf_baseline_crosses_basic():
    # relaying without selection hurts the cell center and helps the edge
    p = reference_params()
    thresholds = np.linspace(0.01, 1.99, 40)
    basic = np.array(throughput_cdf(p, SchemeSpec(Protocol.BASIC), thresholds, 64, 1).probs)
    base = np.array(throughput_cdf(p, SchemeSpec(Protocol.BASELINE), thresholds, 64, 9).probs)
    diff = base - basic
    assert diff.max() > 0.01 and diff.min() < -0.01  # sign change


# ---------------------------------------------------------------------------
# energy


def test_energy_free_backhaul_limit():
    p = reference_params(theta_thresh=2.0, eta=1e9)
    geom = derive_link_geometry(p, UePolar(250.0, 0.2))
    t = throughput_scheme(p, geom, SchemeSpec(Protocol.BASELINE))
    e = energy_per_packet(p, geom, SchemeSpec(Protocol.BASELINE))
    assert e == pytest.approx(2.0 * p.Pt * p.slot_T / t, rel=1e-6)


def test_energy_relay_never_transmits():
    geom = LinkGeometry(ue=GEOM.ue, d_ur=GEOM.d_ur, theta_ur=GEOM.theta_ur,
                        gamma_ub=GEOM.gamma_ub, gamma_rb=GEOM.gamma_rb, gamma_ur=1e-12)
    t = throughput_scheme(P2, geom, SchemeSpec(Protocol.BASELINE))
    e = energy_per_packet(P2, geom, SchemeSpec(Protocol.BASELINE))
    assert e == pytest.approx(2.0 * P2.Pt * P2.slot_T / t, rel=1e-9)


def test_energy_zero_throughput_is_infinite():
    huge = reference_params(theta_thresh=1e8)
    geom = derive_link_geometry(huge, UePolar(400.0, 0.2))
    assert energy_per_packet(huge, geom, SchemeSpec(Protocol.BASIC)) == math.inf


def test_energy_mc():
    res = simulator.estimate(P2, SchemeSpec(Protocol.SELECTION), 200_000, RngPolicy(103), geom=GEOM)
    en = energy_per_packet(P2, GEOM, SchemeSpec(Protocol.SELECTION))
    mc = res["energy"]
    assert abs(en - mc.value) <= 3.0 * mc.stderr


# ---------------------------------------------------------------------------
# superposition coding


def test_sc_betas_closed_forms():
    p1 = reference_params(theta_thresh=1.0)
    geom = derive_link_geometry(p1, UePolar(250.0, 0.2))
    bd, br = sc_betas(p1, geom)
    assert bd == pytest.approx(2.0 / 3.0, rel=1e-14)
    # equal direct and access distances at threshold one: relayed split 1/sqrt(2)
    ue = UePolar(geom.d_ur, geom.ue.theta_u)
    g2 = LinkGeometry(ue=ue, d_ur=geom.d_ur, theta_ur=0.0, gamma_ub=1.0, gamma_rb=1.0, gamma_ur=1.0)
    _, br2 = sc_betas(p1, g2)
    assert br2 == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-12)
    # far relay: the relayed split collapses to the direct one
    g3 = LinkGeometry(ue=UePolar(100.0, 0.0), d_ur=1e9, theta_ur=0.0,
                      gamma_ub=1.0, gamma_rb=1.0, gamma_ur=1e-30)
    _, br3 = sc_betas(p1, g3)
    assert br3 == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_sc_relay_split_is_objective_argmin():
    grid = np.arange(0.5 + 1e-3, 0.999, 1e-3)
    rng = np.random.default_rng(41)
    for _ in range(10):
        geom = derive_link_geometry(P2, UePolar(float(rng.uniform(50, 500)),
                                                float(rng.uniform(-1.0, 1.0))))
        obj = sc_split_objective(P2, geom, grid)
        best = grid[int(np.argmin(obj))]
        assert abs(best - sc_beta_relay_stationary(P2, geom)) <= 1.1e-3


def test_sc_probs_beta_limits():
    # a split of nearly one starves the weak stream; the strong stream tends to
    # the plain direct decode probability
    sc = sc_probs(P2, GEOM, 0.999)
    assert sc.e_ub_y < 1e-8
    p_first = sc.e_ub_x + sc.e_ub_y
    assert p_first == pytest.approx(p_direct(P2, GEOM.ue.d_ub), rel=5e-3)


def test_sc_probs_dead_split():
    # threshold 2 needs beta > 2/3 for the strong stream to clear it
    sc = sc_probs(P2, GEOM, 0.6)
    assert sc.e_ub_y == 0.0 and sc.e_ub_x == 0.0 and sc.e_ur_y == 0.0


def test_sc_beta_opt_maximizes_no_interference():
    p = reference_params(lam=0.0, theta_thresh=2.0)
    geom = derive_link_geometry(p, UePolar(250.0, 0.2))
    grid = np.arange(0.67, 0.999, 1e-3)
    vals = [sc_probs(p, geom, float(b)).e_ub_y for b in grid]
    best = grid[int(np.argmax(vals))]
    assert abs(best - (p.theta_thresh + 1.0) / (p.theta_thresh + 2.0)) <= 1.1e-3


def test_sc_joint_terms_bounded_by_marginals():
    sc = sc_probs(P2, GEOM, 0.8)
    assert sc.e_ury_rb <= sc.e_ur_y + 1e-12
    assert sc.e_uby_ury_rb <= min(sc.e_ub_y, sc.e_ury_rb) + 1e-12
    assert sc.e_uby_ury_ub2 <= sc.e_ury_uby + 1e-12
    assert sc.e_ury_uby <= min(sc.e_ur_y, sc.e_ub_y) + 1e-12


def test_sc_formula_limit_beta_to_one():
    geom = GEOM
    t = throughput_sc(P2, geom, SchemeSpec(Protocol.BASIC, sc=ScPolicy(ScPolicy.FIXED, beta=0.999)))
    assert t < 1e-6  # the printed direct-SC count awards only double decodes


def test_sc_probs_mc():
    p = reference_params(theta_thresh=2.0)
    geom = derive_link_geometry(p, UePolar(300.0, 0.2))
    sc = sc_probs(p, geom, 0.75)
    scheme = SchemeSpec(Protocol.FEEDBACK, sc=ScPolicy(ScPolicy.FIXED, beta=0.75))
    res = simulator.estimate(p, scheme, 200_000, RngPolicy(104), geom=geom)
    for name in ("e_ub_x", "e_ub_y", "e_ur_y", "e_ury_rb", "e_ury_ub", "e_ury_ubi",
                 "e_uby_ury_rb", "e_uby_ury_ub2i", "e_uby_ury_ub2"):
        mc = res[name]
        assert abs(getattr(sc, name) - mc.value) <= 3.0 * max(mc.stderr, 1e-5), name


def test_sc_throughput_mc():
    p = reference_params(theta_thresh=2.0)
    geom = derive_link_geometry(p, UePolar(300.0, 0.2))
    for proto in (Protocol.BASIC, Protocol.BASELINE, Protocol.SELECTION, Protocol.FEEDBACK):
        scheme = SchemeSpec(proto, sc=ScPolicy(ScPolicy.FIXED, beta=0.75))
        t = throughput_sc(p, geom, scheme)
        res = simulator.estimate(p, scheme, 150_000, RngPolicy(105), geom=geom)
        mc = res["throughput"]
        assert abs(t - mc.value) <= 3.0 * max(mc.stderr, 1e-5), proto
        assert 0.0 <= t <= 4.0


def test_opt_select_takes_pointwise_max():
    p = reference_params(theta_thresh=2.0)
    for d_ub in (80.0, 400.0):
        geom = derive_link_geometry(p, UePolar(d_ub, 0.2))
        bd, br = sc_betas(p, geom)
        t_dir = throughput_sc(p, geom, SchemeSpec(Protocol.BASIC, sc=ScPolicy(ScPolicy.FIXED, beta=bd)))
        t_fb = throughput_sc(p, geom, SchemeSpec(Protocol.FEEDBACK, sc=ScPolicy(ScPolicy.FIXED, beta=br)))
        t_sel = throughput_sc(p, geom, SchemeSpec(Protocol.FEEDBACK, sc=ScPolicy(ScPolicy.OPT_SELECT)))
        assert t_sel == pytest.approx(max(t_dir, t_fb), rel=1e-9)
