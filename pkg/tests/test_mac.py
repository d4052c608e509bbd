"""Two-user MAC rates, matched-Gaussian triplets and the fractional bounds."""

import math

import numpy as np
import pytest

from entropica.density import GaussianSpec, entropy, from_family, scale
from entropica.families import Gaussian, Laplace, Uniform
from entropica.mac import (
    MacRatesReport,
    MacTriplet,
    check_mac_fractional_bound,
    in_region,
    mac_inner_corners,
    mac_mutual_informations,
    matched_gaussian_triplet,
    random_triplet,
)

from conftest import HALF_LOG2

HALF_LOG3 = 0.5 * math.log(3)


def gaussian_triplet(p1=1.0, p2=1.0, grids=False):
    mk = (lambda v: from_family(Gaussian(0.0, v))) if grids else (lambda v: GaussianSpec(0.0, v))
    return MacTriplet((1.0,), (mk(p1),), (mk(p2),), p1, p2)


@pytest.fixture(scope="module")
def noise():
    return from_family(Gaussian(0.0, 1.0))


class TestRates:
    @pytest.mark.parametrize("grids", [False, True])
    def test_gaussian_closed_forms(self, noise, grids):
        rates = mac_mutual_informations(gaussian_triplet(grids=grids), noise)
        r = rates.per_v_rates[0]
        assert r.Isum == pytest.approx(HALF_LOG3, abs=2e-3)
        assert r.I1 == pytest.approx(HALF_LOG2, abs=2e-3)
        assert r.I2 == pytest.approx(HALF_LOG2, abs=2e-3)
        assert (r.snr1v, r.snr2v, r.snrv) == pytest.approx((1.0, 1.0, 2.0), abs=1e-6)

    def test_time_sharing_is_weighted_average(self, noise):
        lo, hi = GaussianSpec(0.0, 0.5), GaussianSpec(0.0, 2.0)
        t = MacTriplet((0.25, 0.75), (lo, hi), (hi, lo), 1.625, 0.875)
        rates = mac_mutual_informations(t, noise)
        atom = [mac_mutual_informations(MacTriplet((1.0,), (a,), (b,), 2.0, 2.0), noise).per_v_rates[0] for a, b in ((lo, hi), (hi, lo))]
        for key in ("I1", "I2", "Isum"):
            expected = 0.25 * getattr(atom[0], key) + 0.75 * getattr(atom[1], key)
            assert rates.expected(key) == pytest.approx(expected, abs=1e-12)
        assert rates.expected("I1") == pytest.approx(0.25 * 0.5 * math.log(1.5) + 0.75 * 0.5 * math.log(3), abs=2e-3)

    def test_snr_fields_and_signs(self):
        rng = np.random.default_rng(4)
        z = from_family(Laplace(0.0, 0.7))
        t = random_triplet(rng, 1.5, 0.5, atoms=2)
        for r, v1, v2 in zip(mac_mutual_informations(t, z).per_v_rates, t.variances(1), t.variances(2)):
            assert min(r.I1, r.I2, r.Isum) >= -1e-6
            assert r.snr1v == pytest.approx(v1 / z.variance, rel=1e-12)
            assert r.snrv == pytest.approx((v1 + v2) / z.variance, rel=1e-12)

    def test_degenerate_variance(self, noise):
        t = MacTriplet((1.0,), (GaussianSpec(0.0, 1e-30),), (GaussianSpec(0.0, 1.0),), 1.0, 1.0)
        with pytest.raises(ValueError):
            mac_mutual_informations(t, noise)


class TestTripletValidation:
    def test_three_atoms_rejected(self):
        g = GaussianSpec(0.0, 1.0)
        with pytest.raises(ValueError):
            MacTriplet((0.2, 0.3, 0.5), (g,) * 3, (g,) * 3, 1.0, 1.0)

    def test_power_budget(self):
        with pytest.raises(ValueError):
            MacTriplet((1.0,), (GaussianSpec(0.0, 1.1),), (GaussianSpec(0.0, 1.0),), 1.0, 1.0)

    def test_probabilities_sum(self):
        g = GaussianSpec(0.0, 1.0)
        with pytest.raises(ValueError):
            MacTriplet((0.5, 0.4), (g, g), (g, g), 1.0, 1.0)

    def test_conditionals_centred(self):
        t = MacTriplet((1.0,), (from_family(Uniform(2.0, 3.0)),), (GaussianSpec(5.0, 0.5),), 1.0, 1.0)
        assert abs(t.x1_given_v[0].mean) < 1e-12
        assert t.x2_given_v[0].mean == 0.0


class TestMatchedTriplet:
    def test_idempotent(self, noise):
        t = random_triplet(np.random.default_rng(1), atoms=2)
        once = matched_gaussian_triplet(t)
        twice = matched_gaussian_triplet(once)
        a = mac_mutual_informations(once, noise).to_dict()
        b = mac_mutual_informations(twice, noise).to_dict()
        for ra, rb in zip(a["per_v_rates"], b["per_v_rates"]):
            for key in ("I1", "I2", "Isum"):
                assert ra[key] == pytest.approx(rb[key], abs=1e-9)

    def test_gaussian_fixed_point(self, noise):
        t = gaussian_triplet(grids=True)
        before = mac_mutual_informations(t, noise).per_v_rates[0]
        after = mac_mutual_informations(matched_gaussian_triplet(t), noise).per_v_rates[0]
        assert after.Isum == pytest.approx(before.Isum, abs=1e-6)
        assert after.I1 == pytest.approx(before.I1, abs=1e-6)

    def test_uniform_moment_matching(self):
        width = 2.0
        u = from_family(Uniform(-1.0, 1.0))
        t = matched_gaussian_triplet(MacTriplet((1.0,), (u,), (u,), 1.0, 1.0))
        assert t.x1_given_v[0].variance == pytest.approx(width**2 / 12, abs=1e-6)

    def test_power_preserved(self):
        t = random_triplet(np.random.default_rng(8), 2.0, 0.7, atoms=2)
        m = matched_gaussian_triplet(t)
        assert m.power(1) == pytest.approx(t.power(1), abs=1e-12)
        assert m.power(2) == pytest.approx(t.power(2), abs=1e-12)
        assert t.power(1) == pytest.approx(2.0, rel=1e-9)


class TestFractionalBound:
    def test_gaussian_r1_slack(self, noise):
        rep = check_mac_fractional_bound(gaussian_triplet(), noise)
        r1 = rep.bound_reports[0]
        assert r1.name == "mac_R1"
        assert r1.lhs == pytest.approx(HALF_LOG2, abs=2e-3)
        assert r1.rhs == pytest.approx(0.2 * HALF_LOG2, abs=2e-3)
        assert r1.slack == pytest.approx(0.8 * HALF_LOG2, abs=2e-3)
        assert rep.satisfied

    def test_uniform_conditionals(self, noise):
        u = scale(from_family(Uniform(-0.5, 0.5)), math.sqrt(12))
        rep = check_mac_fractional_bound(MacTriplet((1.0,), (u,), (u,), 1.0, 1.0), noise)
        assert rep.satisfied and len(rep.bound_reports) == 3

    def test_asymmetric_two_atom_factors(self, noise):
        t = random_triplet(np.random.default_rng(12), 3.0, 0.3, atoms=2)
        rep = check_mac_fractional_bound(t, noise)
        assert rep.satisfied
        f1 = rep.bound_reports[0].details["factors"]
        assert f1[0] != pytest.approx(f1[1])
        for r in rep.bound_reports:
            assert all(0 < f < 1 / 3 for f in r.details["factors"])

    @pytest.mark.parametrize("seed", range(6))
    def test_random_triplets(self, seed):
        rng = np.random.default_rng(seed)
        z = [from_family(Gaussian(0, 1)), from_family(Uniform(-1, 1)), from_family(Laplace(0, 1))][seed % 3]
        t = random_triplet(rng, float(rng.uniform(0.2, 5)), float(rng.uniform(0.2, 5)))
        assert check_mac_fractional_bound(t, z).satisfied

    def test_report_round_trip(self, noise):
        rep = check_mac_fractional_bound(gaussian_triplet(), noise)
        assert MacRatesReport.from_dict(rep.to_dict()) == rep


class TestCorners:
    def test_symmetric_pentagon(self, noise):
        corners = mac_inner_corners(gaussian_triplet(), noise)
        a, s = 0.5 * math.log(2), HALF_LOG3
        expected = [(0, 0), (a, 0), (a, s - a), (s - a, a), (0, a)]
        assert len(corners) == 5
        for c, e in zip(corners, expected):
            assert c == pytest.approx(e, abs=2e-3)
        assert all(min(c) >= 0 for c in corners)

    def test_weak_user_collapses(self, noise):
        corners = mac_inner_corners(gaussian_triplet(p2=1e-8), noise)
        assert max(c[1] for c in corners) < 1e-6
        assert max(c[0] for c in corners) == pytest.approx(HALF_LOG2, abs=2e-3)

    def test_time_sharing_contains_mixtures(self, noise):
        lo, hi = GaussianSpec(0.0, 0.3), GaussianSpec(0.0, 3.0)
        atoms = [MacTriplet((1.0,), (a,), (b,), 3.0, 3.0) for a, b in ((lo, hi), (hi, lo))]
        shared = MacTriplet((0.5, 0.5), (lo, hi), (hi, lo), 1.65, 1.65)
        region = mac_inner_corners(shared, noise)
        for c0 in mac_inner_corners(atoms[0], noise):
            for c1 in mac_inner_corners(atoms[1], noise):
                mid = (0.5 * (c0[0] + c1[0]), 0.5 * (c0[1] + c1[1]))
                assert in_region(mid, region, tol=1e-9)

    def test_in_region(self, noise):
        corners = mac_inner_corners(gaussian_triplet(), noise)
        assert in_region((0.1, 0.1), corners)
        assert not in_region((0.34, 0.34), corners)
        assert not in_region((-0.01, 0.0), corners)
