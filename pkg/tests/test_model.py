import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

import relaylab as rl
from relaylab.model import (
    AntennaPattern,
    Protocol,
    Receiver,
    SchemeSpec,
    ScPolicy,
    UePolar,
    antenna_gain,
    beamwidth3db_to_k,
    derive_link_geometry,
    k_to_beamwidth3db,
    link_gammas,
    reference_params,
    ue_position_density,
)


# ---------------------------------------------------------------------------
# antenna pattern


def test_antenna_gain_omni():
    pat = AntennaPattern(0.0)
    for theta in (-math.pi, -1.0, 0.0, 0.3, math.pi):
        assert antenna_gain(pat, theta) == 1.0


def test_antenna_gain_values():
    assert antenna_gain(AntennaPattern(2.0, normalized=True), 0.0) == pytest.approx(3.0)
    assert antenna_gain(AntennaPattern(2.0), math.pi / 2) == pytest.approx(0.25)


@given(st.floats(0.0, 20.0), st.floats(0.0, math.pi))
@settings(max_examples=200, deadline=None)
def test_antenna_gain_even_and_monotone(k, theta):
    pat = AntennaPattern(k)
    assert antenna_gain(pat, theta) == pytest.approx(antenna_gain(pat, -theta), rel=1e-12)
    # non-increasing in |theta|
    assert antenna_gain(pat, theta) <= antenna_gain(pat, theta * 0.5) + 1e-12


@pytest.mark.parametrize("k", [0, 1, 2, 5, 10])
def test_normalization_factor_is_solid_angle_ratio(k):
    # (k+1) equals 4*pi over the pattern's solid-angle integral
    pat = AntennaPattern(float(k))
    val, _ = integrate.quad(lambda th: antenna_gain(pat, th) * math.sin(th), 0.0, math.pi,
                            epsabs=1e-12, epsrel=1e-11)
    assert (k + 1) == pytest.approx(4.0 * math.pi / (2.0 * math.pi * val), abs=1e-8)


def test_beamwidth_closed_forms():
    assert k_to_beamwidth3db(1.0) == pytest.approx(math.pi, rel=1e-14)
    # monotone decreasing toward zero
    widths = [k_to_beamwidth3db(k) for k in (0.5, 1.0, 2.0, 5.0, 20.0, 200.0)]
    assert all(b > a for a, b in zip(widths[1:], widths))
    assert widths[-1] < 0.3
    with pytest.raises(ValueError):
        k_to_beamwidth3db(0.0)


def test_beamwidth_roundtrip():
    for k in (0.3, 1.0, 2.7, 8.0, 42.0):
        assert beamwidth3db_to_k(k_to_beamwidth3db(k)) == pytest.approx(k, abs=1e-12)
    # inverse against a bisection oracle at width pi/3
    target = math.pi / 3
    lo, hi = 1e-6, 1e6
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if k_to_beamwidth3db(mid) > target:
            lo = mid
        else:
            hi = mid
    assert beamwidth3db_to_k(target) == pytest.approx(lo, rel=1e-9)
    assert k_to_beamwidth3db(beamwidth3db_to_k(target)) == pytest.approx(target, abs=1e-9)


# ---------------------------------------------------------------------------
# geometry


def test_link_geometry_right_triangle():
    p = reference_params(d_rb=150.0, kr=2)  # wedge must admit a right angle
    geom = derive_link_geometry(p, UePolar(150.0, math.pi / 2))
    assert geom.d_ur == pytest.approx(150.0 * math.sqrt(2.0), rel=1e-14)


def test_link_geometry_colocated_relay():
    p = reference_params(d_rb=0.0)
    geom = derive_link_geometry(p, UePolar(200.0, 0.3))
    assert geom.d_ur == pytest.approx(200.0, rel=1e-14)


def test_link_geometry_coordinate_oracle():
    # place the points in the plane and take the Euclidean distance
    p = reference_params(d_rb=150.0)
    d_ub, theta_u = 200.0, math.pi / 6
    geom = derive_link_geometry(p, UePolar(d_ub, theta_u))
    ue = np.array([d_ub * math.cos(theta_u), d_ub * math.sin(theta_u)])
    relay = np.array([150.0, 0.0])
    assert geom.d_ur == pytest.approx(float(np.linalg.norm(ue - relay)), rel=1e-12)
    # arrival angle at the relay, boresight pointing outward
    vec = ue - relay
    assert geom.theta_ur == pytest.approx(math.atan2(vec[1], vec[0]), rel=1e-12)


def test_link_geometry_degenerate():
    p = reference_params(d_rb=150.0)
    with pytest.raises(rl.DegenerateGeometryError):
        derive_link_geometry(p, UePolar(150.0, 0.0))


def test_link_geometry_gamma_formulas():
    p = reference_params()
    geom = derive_link_geometry(p, UePolar(250.0, 0.2))
    assert geom.gamma_ub == pytest.approx(p.A * p.Pt / (p.N0 * 250.0**p.alpha), rel=1e-12)
    assert geom.gamma_rb == pytest.approx(p.A * p.Pr / (p.N0 * p.d_rb**p.alpha), rel=1e-12)
    assert geom.gamma_ur == pytest.approx(p.A * p.Pt / (p.N0 * geom.d_ur**p.alpha), rel=1e-12)


def test_triangle_inequality_bulk():
    # vectorized sweep over a million random positions
    p = reference_params()
    rng = np.random.default_rng(7)
    d_ub = rng.uniform(0.0, 2000.0, 1_000_000)
    theta = rng.uniform(-math.pi / p.kr, math.pi / p.kr, 1_000_000)
    d_ur, _, _, _, _ = link_gammas(p, d_ub, theta)
    assert np.all(d_ur <= d_ub + p.d_rb + 1e-9)
    assert np.all(d_ur >= np.abs(d_ub - p.d_rb) - 1e-9)


@given(st.floats(0.0, 5000.0), st.floats(-math.pi / 3, math.pi / 3), st.floats(1.0, 500.0))
@settings(max_examples=300, deadline=None)
def test_triangle_inequality_property(d_ub, theta_u, d_rb):
    p = reference_params(d_rb=d_rb)
    d_ur, _, _, _, _ = link_gammas(p, d_ub, theta_u)
    assert abs(d_ub - d_rb) - 1e-9 <= float(d_ur) <= d_ub + d_rb + 1e-9


# ---------------------------------------------------------------------------
# position law


@pytest.mark.parametrize("kr", [1, 2, 3, 4, 5, 6])
def test_position_density_normalizes(kr):
    p = reference_params(kr=kr)
    val, _ = integrate.dblquad(
        lambda r, th: float(ue_position_density(p, r, th)),
        -math.pi / kr, math.pi / kr, 0.0, 5000.0, epsabs=1e-11, epsrel=1e-10)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_position_density_radial_mode_shrinks_with_density():
    p1 = reference_params()
    p2 = reference_params(lam=4 * p1.lam)
    r = np.linspace(1.0, 800.0, 4000)
    mode1 = r[np.argmax(ue_position_density(p1, r, 0.0))]
    mode2 = r[np.argmax(ue_position_density(p2, r, 0.0))]
    assert mode2 < mode1
    assert mode1 == pytest.approx(1.0 / math.sqrt(2 * math.pi * p1.lam), rel=1e-3)


def test_mean_ue_distance():
    # numerical integration oracle for the mean of the radial law
    p = reference_params()
    mean, _ = integrate.quad(lambda r: r * 2 * math.pi * p.lam * r * math.exp(-p.lam * math.pi * r * r),
                             0, 10000.0, epsabs=1e-12)
    assert mean == pytest.approx(1.0 / (2.0 * math.sqrt(p.lam)), rel=1e-9)
    assert mean == pytest.approx(233.1, abs=0.1)


# ---------------------------------------------------------------------------
# parameters and schemes


def test_params_validation():
    with pytest.raises(ValueError):
        reference_params(alpha=2.0)
    with pytest.raises(ValueError):
        reference_params(theta_thresh=0.9)
    with pytest.raises(ValueError):
        reference_params(lam=-1.0)
    with pytest.raises(ValueError):
        reference_params(kr=0)
    with pytest.raises(ValueError):
        reference_params(Pt=0.0)
    p = reference_params(eta=10.0)
    assert p.Pr_radiated == pytest.approx(p.Pr / 10.0)


def test_scheme_parsing():
    s = SchemeSpec.parse("feedback+sc=0.75")
    assert s.protocol == Protocol.FEEDBACK
    assert s.sc.kind == ScPolicy.FIXED and s.sc.beta == 0.75
    s = SchemeSpec.parse("selection+nosic_upper")
    assert s.receiver == Receiver.NOSIC_UPPER
    assert SchemeSpec.parse("basic").label == "basic"
    assert SchemeSpec.parse("feedback+sc=opt_select").sc.kind == ScPolicy.OPT_SELECT


def test_scheme_validation():
    with pytest.raises(ValueError):
        SchemeSpec(Protocol.BASIC, Receiver.NOSIC_LOWER)   # bounds concern relay-slot interference
    with pytest.raises(ValueError):
        SchemeSpec(Protocol.FEEDBACK, sc=ScPolicy(ScPolicy.FIXED, beta=0.4))
    with pytest.raises(ValueError):
        SchemeSpec(Protocol.SELECTION, sc=ScPolicy(ScPolicy.OPT_SELECT))
    with pytest.raises(ValueError):
        SchemeSpec(Protocol.BASELINE, Receiver.NOSIC_LOWER, ScPolicy(ScPolicy.FIXED, beta=0.8))


def test_estimate_agreement_helper():
    a = rl.Estimate(1.0, 0.01)
    b = rl.Estimate(1.02, 0.005, engine="montecarlo", n_trials=1000)
    assert a.agrees_with(b, n_sigma=3.0)
    assert not a.agrees_with(rl.Estimate(1.2, 0.005), n_sigma=3.0)
