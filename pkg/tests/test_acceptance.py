"""Acceptance gate: one test per verification criterion.

Each test re-derives the pass condition from the measured values at the
stated tolerances, rather than trusting the battery's own verdict, and
prints a single PASS/FAIL line to the terminal.
"""

import math

import pytest

from entropica.config import RunConfig
from entropica.suite import CRITERIA, ROBUSTNESS_SNRS

CFG = RunConfig()
HALF_LOG2 = 0.5 * math.log(2)
GOLDEN = 0.5 * math.log(2 / ((1 + math.sqrt(5)) / 2))


@pytest.fixture
def report(capsys):
    def emit(result, ok):
        with capsys.disabled():
            print(f"\n  criterion {result.number} [{'PASS' if ok else 'FAIL'}] {result.title}")

    return emit


def _run(n):
    return CRITERIA[n](CFG)


def test_criterion_1_closed_form_oracles(report):
    r = _run(1)
    m = r.measured
    ok = (
        abs(m["gaussian_entropy"] - 0.5 * math.log(2 * math.pi * math.e)) < 1e-4
        and abs(m["uniform_sigma"] - math.e / 2) < 1e-3
        and abs(m["triangular_entropy"] - 0.5) < 1e-3
        and r.seconds < 5
    )
    report(r, ok)
    assert ok, m


def test_criterion_2_large_doubling_equality(report):
    r = _run(2)
    m = r.measured
    ok = all(abs(m[f"slack_a={a:g}"]) < 1e-3 for a in (0.25, 1, 4))
    ok &= abs(m["lhs_a=1"] - HALF_LOG2) < 1e-3 and abs(m["rhs_a=1"] - HALF_LOG2) < 1e-3
    report(r, ok)
    assert ok, m


def test_criterion_3_golden_offset(report):
    r = _run(3)
    m = r.measured
    ok = abs(m["slack"] - GOLDEN) < 1e-3 and abs(m["g_inverse"] + GOLDEN) < 1e-12
    report(r, ok)
    assert ok, m


def test_criterion_4_awgn_capacity(report):
    r = _run(4)
    ok = True
    for snr in (0.5, 1.0, 4.0):
        e = r.measured[f"snr={snr:g}"]
        ok &= abs(e["capacity"] - 0.5 * math.log1p(snr)) < 2e-3 and e["seconds"] < 30
    report(r, ok)
    assert ok, r.measured


@pytest.mark.slow
def test_criterion_5_robustness_battery(report):
    r = _run(5)
    ok = r.seconds < 600 and len(r.measured) == 9 and not r.failures
    for key, e in r.measured.items():
        ok &= all(s >= -(1e-3 + e["ba_gap"]) for s in e["slacks"])
        if key.endswith(f"snr={min(ROBUSTNESS_SNRS):g}"):
            ok &= e["multiplicative_rhs"] > 0 and e["capacity"] < HALF_LOG2
    report(r, ok)
    assert ok, (r.seconds, r.measured)


def test_criterion_6_property_battery(report):
    r = _run(6)
    names = {"epi_doubling", "combined_doubling", "submodularity", "gaussianization_half_log2", "fractional_superadditivity"}
    ok = set(r.measured) == names
    ok &= all(c["instances"] >= 100 and c["violations"] == 0 for c in r.measured.values())
    report(r, ok)
    assert ok, (r.measured, r.failures[:5])


def test_criterion_7_mac(report):
    r = _run(7)
    m = r.measured
    ok = (
        abs(m["Isum"] - 0.5 * math.log(3)) < 2e-3
        and abs(m["R1_slack"] - 0.8 * HALF_LOG2) < 2e-3
        and m["random_triplets"] >= 20
        and m["random_satisfied"] == m["random_triplets"]
    )
    report(r, ok)
    assert ok, m


def test_criterion_8_mimo(report):
    r = _run(8)
    m = r.measured
    ok = (
        abs(m["scalar"] - 0.2) < 1e-12
        and abs(m["identity_2x2"] - 1 / 7) < 1e-12
        and set(m["dim_snr"]) == {"1", "2", "3", "5"}
        and all(abs(v - 0.2) < 1e-12 for v in m["dim_snr"].values())
        and abs(m["additive_loss_bits"] - 0.5) < 1e-12
    )
    report(r, ok)
    assert ok, m


def test_criterion_9_stability_sweep(report):
    r = _run(9)
    m = r.measured
    gaps, levy = m["doubling_gap"], m["levy_distance"]
    ok = (
        m["separation"] == [2.0, 1.0, 0.5, 0.25]
        and all(a > b for a, b in zip(gaps, gaps[1:]))
        and all(a > b for a, b in zip(levy, levy[1:]))
        and levy[-1] < 0.05
    )
    report(r, ok)
    assert ok, m
