import math

import numpy as np
import pytest
from scipy import integrate

import relaylab as rl
from relaylab.interference import (
    laplace_batch,
    laplace_exponent_batch,
    laplace_joint2,
    laplace_joint2_antenna,
    laplace_joint3,
    laplace_single,
    laplace_single_quadrature,
)
from relaylab.model import AntennaPattern, reference_params
from relaylab.simulator import RngPolicy, estimate_laplace_mc

P = reference_params()
TH, N0 = P.theta_thresh, P.N0
S0 = TH / (N0 * 122.5)
T0 = TH / (N0 * 70.7)


def test_single_trivial():
    assert laplace_single(P, 0.0, 200.0) == 1.0
    p0 = reference_params(lam=0.0)
    assert laplace_single(p0, 1e9, 200.0) == 1.0


def test_single_closed_form_vs_quadrature_grid():
    worst = 0.0
    for x in (50.0, 200.0, 500.0):
        base = x**P.alpha / (P.Pt * P.A)
        for mult in np.logspace(-3, 3, 7):
            a = laplace_single(P, mult * base, x)
            b = laplace_single_quadrature(P, mult * base, x)
            worst = max(worst, abs(a - b) / b)
    assert worst < 1e-8


def test_single_zero_exclusion_radius():
    # converges for alpha > 2 even without an exclusion disk; closed form via
    # substitution: integral = (s Pt A)^(2/alpha) * (pi/alpha) / sin(2 pi/alpha)
    s = 1e10
    got = laplace_single(P, s, 0.0)
    c = s * P.Pt * P.A
    integral = c ** (2.0 / P.alpha) * (math.pi / P.alpha) / math.sin(2.0 * math.pi / P.alpha)
    assert got == pytest.approx(math.exp(-2.0 * math.pi * P.lam * integral), rel=1e-8)


def test_single_mc_oracle():
    # threshold 2, exclusion at the serving distance 200 m
    p = reference_params(theta_thresh=2.0)
    s = 2.0 * 200.0**p.alpha / (p.Pt * p.A)
    val, se = estimate_laplace_mc(p, [[0.0, s, 0.0]], 0.0, 200.0, 150_000, RngPolicy(42))
    ours = laplace_single(p, s, 200.0)
    assert abs(ours - val[0]) <= 3.0 * se[0]


def test_joint2_reductions():
    v = laplace_joint2(P, S0, T0, 150.0, 250.0)
    assert 0.0 < v <= 1.0
    assert laplace_joint3(P, S0, T0, 0.0, 150.0, 250.0) == pytest.approx(v, rel=1e-12)
    assert laplace_joint3(P, 0.0, 0.0, 0.0, 150.0, 250.0) == 1.0


def test_joint2_zero_separation_factorizes():
    # at d = 0 the integrand factorizes per fading draw; cross-check against the
    # radial quadrature of the factored form
    got = laplace_joint2(P, S0, T0, 0.0, 250.0)
    PtA = P.Pt * P.A

    def factored(r):
        g = PtA * r ** (-P.alpha)
        q = S0 * g + T0 * g + S0 * g * T0 * g
        return q / (1.0 + q) * r

    ref, _ = integrate.quad(factored, 250.0, np.inf, epsabs=1e-16, epsrel=1e-13, limit=400)
    assert got == pytest.approx(math.exp(-2.0 * math.pi * P.lam * ref), rel=1e-8)


def test_joint2_t_zero_is_offset_marginal_mc():
    # s-branch alone: interference at a point 150 m from the exclusion center
    val, se = estimate_laplace_mc(P, [[S0, 0.0, 0.0]], 150.0, 250.0, 120_000, RngPolicy(43))
    ours = laplace_joint2(P, S0, 0.0, 150.0, 250.0)
    assert abs(ours - val[0]) <= 3.0 * se[0]


def test_joint_functionals_mc_consistency():
    # randomized argument tuples for the two- and three-point forms
    rng = np.random.default_rng(5)
    tuples = []
    for _ in range(5):
        tuples.append([S0 * rng.uniform(0.2, 2.0), T0 * rng.uniform(0.0, 2.0),
                       T0 * rng.uniform(0.0, 1.0)])
    tuples = np.array(tuples)
    vals, ses = estimate_laplace_mc(P, tuples, 150.0, 250.0, 120_000, RngPolicy(44))
    ours = laplace_batch(P, tuples, 150.0, 250.0)
    for k in range(5):
        assert abs(ours[k] - vals[k]) <= 3.0 * max(ses[k], 1e-6), k


def test_joint2_antenna_reductions():
    pat0 = AntennaPattern(0.0)
    v = laplace_joint2(P, S0, T0, 150.0, 250.0)
    assert laplace_joint2_antenna(P, S0, T0, 150.0, 250.0, pat0) == pytest.approx(v, rel=1e-12)
    pat = AntennaPattern(2.0, normalized=True)
    # the pattern only touches the off-center branch
    assert laplace_joint2_antenna(P, 0.0, T0, 150.0, 250.0, pat) == pytest.approx(
        laplace_joint2(P, 0.0, T0, 150.0, 250.0), rel=1e-12)


def test_joint2_antenna_mc():
    pat = AntennaPattern(2.0, normalized=True)
    vals, ses = estimate_laplace_mc(P, [[S0, T0, 0.0]], 150.0, 250.0, 120_000,
                                    RngPolicy(45), pattern=pat)
    ours = laplace_joint2_antenna(P, S0, T0, 150.0, 250.0, pat)
    assert abs(ours - vals[0]) <= 3.0 * ses[0]


def test_joint3_mc():
    vals, ses = estimate_laplace_mc(P, [[S0, T0, 0.7 * T0]], 150.0, 250.0, 120_000,
                                    RngPolicy(46))
    ours = laplace_joint3(P, S0, T0, 0.7 * T0, 150.0, 250.0)
    assert abs(ours - vals[0]) <= 3.0 * ses[0]


def test_monotone_in_each_argument_and_limits():
    base = np.array([S0, T0, 0.4 * T0])
    for axis in range(3):
        prev = None
        for g in (0.0, 0.4, 1.0, 2.5):
            stu = base.copy()
            stu[axis] = g * base[axis] if base[axis] > 0 else g * S0
            v = float(laplace_batch(P, [stu], 150.0, 250.0)[0])
            assert 0.0 < v <= 1.0
            if prev is not None:
                assert v <= prev + 1e-12
            prev = v
    tiny = laplace_batch(P, [[1e-25, 1e-25, 1e-25]], 150.0, 250.0)[0]
    assert abs(tiny - 1.0) <= 1e-10


def test_exponent_batch_validation():
    with pytest.raises(ValueError):
        laplace_exponent_batch(P, [[1.0, -1.0, 0.0]], 150.0, 250.0)
    with pytest.raises(ValueError):
        laplace_exponent_batch(P, [[1.0, 0.0]], 150.0, 250.0)
    with pytest.raises(ValueError):
        laplace_exponent_batch(P, [[1.0, 0.0, 0.0]], -1.0, 250.0)


def test_deterministic_bits():
    a = laplace_joint2(P, S0, T0, 150.0, 250.0)
    b = laplace_joint2(P, S0, T0, 150.0, 250.0)
    assert a == b


def test_small_exclusion_inside_relay_ring():
    # the off-center gain peak lies inside the domain; compare to brute dblquad
    s, t = S0, T0
    got = laplace_joint2(P, s, t, 150.0, 60.0)
    PtA = P.Pt * P.A

    def integrand(r, theta):
        a = s * PtA * (r * r + 150.0**2 - 2 * r * 150.0 * np.cos(theta)) ** (-P.alpha / 2)
        b = t * PtA * r ** (-P.alpha)
        q = a + b + a * b
        return q / (1.0 + q) * r

    val, _ = integrate.dblquad(integrand, 0, 2 * np.pi, 60.0, 60000.0,
                               epsabs=1e-11, epsrel=1e-10)
    tail = 2 * np.pi * (s + t) * PtA * 60000.0 ** (2 - P.alpha) / (P.alpha - 2)
    assert got == pytest.approx(math.exp(-P.lam * (val + tail)), rel=1e-7)
