"""Acceptance gate: every validation criterion at its stated tolerance.

Each test prints its one-line pass/fail report.  Set RELAYLAB_FAST_ACCEPT=1 to
run the reduced-trial smoke variant during development; the default (full)
counts are the gate.
"""

import os

import pytest

from relaylab import acceptance

FAST = os.environ.get("RELAYLAB_FAST_ACCEPT", "") not in ("", "0")


def _run(check):
    res = check(fast=FAST)
    status = "PASS" if res.passed else "FAIL"
    print(f"\n[{status}] {res.name}: {res.details} ({res.seconds:.1f}s)")
    assert res.passed, res.details


def test_criterion_01_special_function_identity():
    _run(acceptance.check_01_hypergeometric_identity)


def test_criterion_02_laplace_reductions():
    _run(acceptance.check_02_laplace_reductions)


def test_criterion_03_cross_engine_master_grid():
    _run(acceptance.check_03_cross_engine_master)


def test_criterion_04_sic_micro_oracle():
    _run(acceptance.check_04_sic_micro_oracle)


def test_criterion_05_split_optimality():
    _run(acceptance.check_05_beta_optimality)


def test_criterion_06_scheme_ordering():
    _run(acceptance.check_06_scheme_ordering)


def test_criterion_07_relay_placement_gain():
    _run(acceptance.check_07_relay_placement_gain)


def test_criterion_08_relay_count_power_monotonicity():
    _run(acceptance.check_08_relay_count_power_monotonicity)


def test_criterion_09_energy_ordering():
    _run(acceptance.check_09_energy_ordering)


def test_criterion_10_deployment_models():
    _run(acceptance.check_10_deployment_models)


def test_criterion_11_sc_headline():
    _run(acceptance.check_11_sc_headline)


def test_criterion_12_determinism():
    _run(acceptance.check_12_determinism)
