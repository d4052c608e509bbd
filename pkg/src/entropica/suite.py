"""The verification battery behind ``entropica suite``.

Each criterion function returns a :class:`CriterionResult` holding the
measured quantities, the pass/fail verdict and any failing reports.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .capacity import ChannelSpec, SolverOptions, capacity_power_constrained, check_multiplicative, robustness_factor
from .config import RunConfig
from .density import GaussianSpec, convolve, entropy, from_family, gaussian_entropy
from .families import Gaussian, Laplace, Uniform, gauss_mixture
from .inequalities import (
    GOLDEN_OFFSET,
    check_combined_doubling,
    check_epi_doubling,
    check_fractional_superadditivity,
    check_golden_ratio_bound,
    check_large_doubling,
    check_submodularity,
    doubling_constant,
    g_inverse,
    random_mixture_grids,
    small_doubling_sweep,
    ze_gap_check,
)
from .mac import MacTriplet, check_mac_fractional_bound, mac_mutual_informations, random_triplet
from .mimo import MimoChannel, dim_snr_factor, mimo_robustness_factor, philosof_zamir_additive_loss

__all__ = ["CriterionResult", "CRITERIA", "run_suite", "robustness_noises", "ROBUSTNESS_SNRS"]

HALF_LOG2 = 0.5 * math.log(2)
ROBUSTNESS_SNRS = (0.1, 1.0, 10.0)
PROPERTY_INSTANCES = 100
MAC_TRIPLETS = 20


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float = 0.0
    measured: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": "criterion",
            "criterion": self.number,
            "title": self.title,
            "passed": self.passed,
            "seconds": self.seconds,
            "measured": self.measured,
            "failures": self.failures,
        }

    def line(self) -> str:
        return f"criterion {self.number} [{'PASS' if self.passed else 'FAIL'}] {self.title} ({self.seconds:.1f}s)"


def robustness_noises() -> dict:
    """Unit-variance noise families used by the robustness battery."""
    return {
        "uniform": Uniform(-math.sqrt(3.0), math.sqrt(3.0)),
        "laplace": Laplace(0.0, math.sqrt(0.5)),
        "gauss_mixture": gauss_mixture([(0.5, -0.9, 0.19), (0.5, 0.9, 0.19)]),
    }


def _grid(cfg: RunConfig, family):
    return from_family(family, grid_points=cfg.grid_points, truncation_sigmas=cfg.truncation_sigmas)


def _solver(cfg: RunConfig) -> SolverOptions:
    return SolverOptions(gap_threshold=cfg.ba_gap_threshold, max_iterations=cfg.ba_max_iterations)


def closed_form_oracles(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    h_gauss = entropy(_grid(cfg, Gaussian(0.0, 1.0)))
    u = _grid(cfg, Uniform(0.0, 1.0))
    sigma_u = doubling_constant(u)
    h_tri = entropy(convolve(u, u))
    seconds = time.perf_counter() - t0
    errs = {
        "gaussian_entropy_err": abs(h_gauss - 0.5 * math.log(2 * math.pi * math.e)),
        "uniform_sigma_err": abs(sigma_u - math.e / 2),
        "triangular_entropy_err": abs(h_tri - 0.5),
    }
    ok = errs["gaussian_entropy_err"] < 1e-4 and errs["uniform_sigma_err"] < 1e-3 and errs["triangular_entropy_err"] < 1e-3
    measured = {"gaussian_entropy": h_gauss, "uniform_sigma": sigma_u, "triangular_entropy": h_tri, **errs}
    return CriterionResult(1, "closed-form entropy and doubling oracles", ok and seconds < 5, seconds, measured)


def large_doubling_equality(cfg: RunConfig) -> CriterionResult:
    measured, ok = {}, True
    for a in (0.25, 1.0, 4.0):
        r = check_large_doubling(_grid(cfg, Gaussian(0.0, a)), GaussianSpec(0.0, 1.0), cfg.tolerance_nats)
        measured[f"slack_a={a:g}"] = r.slack
        ok &= abs(r.slack) < 1e-3
        if a == 1.0:
            measured["lhs_a=1"], measured["rhs_a=1"] = r.lhs, r.rhs
            ok &= abs(r.lhs - HALF_LOG2) < 1e-3 and abs(r.rhs - HALF_LOG2) < 1e-3
    return CriterionResult(2, "large-doubling bound is tight for Gaussian inputs", ok, measured=measured)


def golden_constant(cfg: RunConfig) -> CriterionResult:
    r = check_golden_ratio_bound(_grid(cfg, Gaussian(0.0, 1.0)), cfg.tolerance_nats)
    g = g_inverse(-HALF_LOG2)
    g_err = abs(g + GOLDEN_OFFSET)
    ok = abs(r.slack - GOLDEN_OFFSET) < 1e-3 and g_err < 1e-12
    return CriterionResult(
        3, "golden-ratio offset", ok, measured={"slack": r.slack, "offset": GOLDEN_OFFSET, "g_inverse": g, "g_inverse_err": g_err}
    )


def awgn_capacity(cfg: RunConfig) -> CriterionResult:
    z = _grid(cfg, Gaussian(0.0, 1.0))
    measured, ok = {}, True
    for snr in (0.5, 1.0, 4.0):
        t0 = time.perf_counter()
        res = capacity_power_constrained(ChannelSpec(z, snr * z.variance), _solver(cfg))
        dt = time.perf_counter() - t0
        err = abs(res.capacity - 0.5 * math.log1p(snr))
        measured[f"snr={snr:g}"] = {"capacity": res.capacity, "error": err, "ba_gap": res.ba_gap, "seconds": dt}
        ok &= err < 2e-3 and dt < 30 and res.converged
    return CriterionResult(4, "capacity solver matches the AWGN closed form", ok, measured=measured)


def robustness_battery(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    measured, failures, ok = {}, [], True
    for name, fam in robustness_noises().items():
        z = _grid(cfg, fam)
        for snr in ROBUSTNESS_SNRS:
            ch = ChannelSpec(z, snr * z.variance)
            res = capacity_power_constrained(ch, _solver(cfg))
            rep = check_multiplicative(ch, res, cfg.tolerance_nats)
            key = f"{name}@snr={snr:g}"
            entry = {
                "capacity": rep.capacity_estimate,
                "gaussian_mi": rep.gaussian_mi,
                "ba_gap": rep.ba_gap,
                "converged": rep.converged,
                "slacks": [r.slack for r in rep.bound_reports],
            }
            ok &= rep.satisfied
            failures += [r.to_dict() for r in rep.bound_reports if not r.satisfied]
            if snr == min(ROBUSTNESS_SNRS):
                mult_rhs = rep.bound_reports[2].rhs
                entry["multiplicative_rhs"] = mult_rhs
                entry["additive_rhs"] = rep.bound_reports[1].rhs
                low_snr_ok = mult_rhs > 0 and rep.capacity_estimate < HALF_LOG2
                entry["low_snr_contrast"] = low_snr_ok
                ok &= low_snr_ok
            measured[key] = entry
    seconds = time.perf_counter() - t0
    return CriterionResult(5, "Gaussian-input robustness bounds", ok and seconds < 600, seconds, measured, failures)


def property_battery(cfg: RunConfig, instances: int = PROPERTY_INSTANCES) -> CriterionResult:
    seed, tol = cfg.seed, cfg.tolerance_nats
    counts, failures = {}, []

    def run(name, reports):
        bad = [r for r in reports if not r.satisfied]
        counts[name] = {"instances": len(reports), "violations": len(bad), "refined": sum(bool(r.details.get("refined")) for r in reports)}
        failures.extend(r.to_dict() for r in bad)

    grids = random_mixture_grids(seed, instances, offset=0)
    run("epi_doubling", [check_epi_doubling(f, tol) for f in grids])
    run("combined_doubling", [check_combined_doubling(f, tol) for f in grids])
    triples = random_mixture_grids(seed, 3 * instances, offset=10_000)
    run("submodularity", [check_submodularity(*triples[3 * i : 3 * i + 3], tol) for i in range(instances)])
    pairs = random_mixture_grids(seed, 2 * instances, offset=20_000)
    run("gaussianization_half_log2", [ze_gap_check(pairs[2 * i], pairs[2 * i + 1], tol) for i in range(instances)])
    frac = []
    for i in range(instances):
        n = 2 + i % 3
        fs = random_mixture_grids(seed, n, offset=30_000 + 4 * i)
        for k in sorted({1, n - 1}):
            frac.append(check_fractional_superadditivity(fs, k, tol))
    run("fractional_superadditivity", frac)
    ok = all(c["violations"] == 0 and c["instances"] >= instances for c in counts.values())
    return CriterionResult(6, "entropy inequality property battery", ok, measured=counts, failures=failures)


def mac_checks(cfg: RunConfig, triplets: int = MAC_TRIPLETS) -> CriterionResult:
    g = _grid(cfg, Gaussian(0.0, 1.0))
    t = MacTriplet((1.0,), (g,), (g,), 1.0, 1.0)
    rep = check_mac_fractional_bound(t, g, cfg.tolerance_nats)
    isum = rep.per_v_rates[0].Isum
    r1 = rep.bound_reports[0].slack
    ok = abs(isum - 0.5 * math.log(3)) < 2e-3 and abs(r1 - 0.8 * HALF_LOG2) < 2e-3
    rng = np.random.default_rng([cfg.seed, 7])
    noises = [Gaussian(0.0, 1.0), Uniform(-math.sqrt(3.0), math.sqrt(3.0)), Laplace(0.0, math.sqrt(0.5))]
    failures, n_ok = [], 0
    for i in range(triplets):
        tr = random_triplet(rng, P1=float(rng.uniform(0.2, 5)), P2=float(rng.uniform(0.2, 5)))
        r = check_mac_fractional_bound(tr, _grid(cfg, noises[i % 3]), 1e-3)
        n_ok += r.satisfied
        failures += [b.to_dict() for b in r.bound_reports if not b.satisfied]
    ok &= n_ok == triplets
    measured = {"Isum": isum, "R1_slack": r1, "random_triplets": triplets, "random_satisfied": n_ok}
    return CriterionResult(7, "MAC fractional bounds", ok, measured=measured, failures=failures)


def mimo_arithmetic(cfg: RunConfig) -> CriterionResult:
    scalar = mimo_robustness_factor(MimoChannel([[1.0]], [[1.0]], 1.0))
    ident = mimo_robustness_factor(MimoChannel(np.eye(2), np.eye(2), 2.0))
    dims = {d: dim_snr_factor(np.eye(d), np.eye(d), np.eye(d), d) for d in (1, 2, 3, 5)}
    pz = philosof_zamir_additive_loss(1, 1)
    ok = (
        abs(scalar - 0.2) < 1e-12
        and abs(ident - 1 / 7) < 1e-12
        and all(abs(v - 0.2) < 1e-12 for v in dims.values())
        and abs(pz - 0.5) < 1e-12
        and abs(pz * math.log(2) - HALF_LOG2) < 1e-12
    )
    measured = {"scalar": scalar, "identity_2x2": ident, "dim_snr": {str(k): v for k, v in dims.items()}, "additive_loss_bits": pz}
    return CriterionResult(8, "MIMO factor arithmetic", ok, measured=measured)


def stability_sweep(cfg: RunConfig) -> CriterionResult:
    seps = (2.0, 1.0, 0.5, 0.25)
    rows = sorted(small_doubling_sweep("mix_separation", seps), key=lambda r: -r.parameter)
    gaps = [r.doubling_gap for r in rows]
    levy = [r.levy_distance for r in rows]
    ok = all(a > b for a, b in zip(gaps, gaps[1:])) and all(a > b for a, b in zip(levy, levy[1:])) and levy[-1] < 0.05
    measured = {"separation": list(seps), "doubling_gap": gaps, "levy_distance": levy}
    return CriterionResult(9, "small doubling forces near-Gaussianity", ok, measured=measured)


CRITERIA: dict[int, Callable[[RunConfig], CriterionResult]] = {
    1: closed_form_oracles,
    2: large_doubling_equality,
    3: golden_constant,
    4: awgn_capacity,
    5: robustness_battery,
    6: property_battery,
    7: mac_checks,
    8: mimo_arithmetic,
    9: stability_sweep,
}


def run_suite(cfg: RunConfig, only=None, progress: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for number, fn in CRITERIA.items():
        if only and number not in only:
            continue
        t0 = time.perf_counter()
        res = fn(cfg)
        if not res.seconds:
            res.seconds = time.perf_counter() - t0
        results.append(res)
        if progress:
            progress(res.line())
    return results
