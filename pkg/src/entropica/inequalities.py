"""Doubling constant and the entropy-comparison inequalities for sums.

Every ``check_*`` function returns a :class:`~entropica.reports.GapReport`
for an inequality ``lhs >= rhs``. A failing check is recomputed once on grids
of twice the resolution before the violation is reported, so discretization
error is not mistaken for a counterexample.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .density import (
    DensityError,
    DensityGrid,
    GaussianSpec,
    convolve,
    convolve_gaussian,
    entropy,
    entropy_power,
    from_family,
    levy_distance_to_gaussian,
    matched_gaussian,
    refine,
    relative_entropy_to_gaussianity,
)
from .families import Gaussian, Mixture, Uniform
from .reports import DEFAULT_TOLERANCE, GapReport, digest_of, make_report

__all__ = [
    "PHI",
    "GOLDEN_OFFSET",
    "StabilitySweepRow",
    "doubling_constant",
    "check_epi_doubling",
    "check_submodularity",
    "check_fractional_superadditivity",
    "check_golden_ratio_bound",
    "check_large_doubling",
    "check_combined_doubling",
    "gaussianization_gap",
    "ze_gap_check",
    "g_forward",
    "g_inverse",
    "small_doubling_sweep",
    "sweep_family",
    "random_mixture",
    "random_mixture_grids",
    "MAX_SUMMANDS",
]

PHI = (1 + math.sqrt(5)) / 2
# half log(2/phi): entropy deficit allowed in the golden-ratio bound
GOLDEN_OFFSET = 0.5 * math.log(2 / PHI)
HALF_LOG2 = 0.5 * math.log(2)
MAX_SUMMANDS = 6
G_RANGE = 50.0
BRANCH_TIE = 1e-12


def _refined(arg):
    if isinstance(arg, DensityGrid):
        return refine(arg)
    if isinstance(arg, (list, tuple)) and arg and all(isinstance(a, DensityGrid) for a in arg):
        return type(arg)(refine(a) for a in arg)
    return arg


def _refine_on_failure(check):
    @functools.wraps(check)
    def wrapper(*args, refine_on_failure: bool = True, **kwargs) -> GapReport:
        report = check(*args, **kwargs)
        if report.satisfied or not refine_on_failure:
            return report
        retry = check(*(_refined(a) for a in args), **kwargs)
        return replace(retry, details={**retry.details, "refined": True, "coarse_slack": report.slack})

    return wrapper


def doubling_constant(f: DensityGrid) -> float:
    """``sigma[X] = N(X + X') / (2 N(X))`` for an i.i.d. copy ``X'``."""
    return 0.5 * math.exp(2.0 * (entropy(convolve(f, f)) - entropy(f)))


@_refine_on_failure
def check_epi_doubling(f: DensityGrid, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    return make_report("epi_doubling", doubling_constant(f), 1.0, tolerance, digest_of(f))


@_refine_on_failure
def check_submodularity(f1: DensityGrid, f2: DensityGrid, f3: DensityGrid, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    """``h(X1+X2) + h(X1+X3) >= h(X1+X2+X3) + h(X1)``."""
    s12 = convolve(f1, f2)
    lhs = entropy(s12) + entropy(convolve(f1, f3))
    rhs = entropy(convolve(s12, f3)) + entropy(f1)
    return make_report("submodularity", lhs, rhs, tolerance, digest_of(f1, f2, f3))


def _sum_all(grids: Sequence[DensityGrid]) -> DensityGrid:
    return functools.reduce(convolve, grids)


@_refine_on_failure
def check_fractional_superadditivity(fs: Sequence[DensityGrid], k: int, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    """Entropy power of the full sum against the normalized sum over ``k``-subsets.

    ``N(X1+...+Xn) >= C(n-1, k-1)^{-1} * sum_{|S|=k} N(sum_{j in S} Xj)``;
    ``k = 1`` is the classical entropy power inequality.
    """
    n = len(fs)
    if n > MAX_SUMMANDS:
        raise ValueError(f"at most {MAX_SUMMANDS} summands supported, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    lhs = entropy_power(_sum_all(fs))
    total = sum(entropy_power(_sum_all([fs[j] for j in S])) for S in itertools.combinations(range(n), k))
    rhs = total / math.comb(n - 1, k - 1)
    return make_report(f"fractional_superadditivity(n={n},k={k})", lhs, rhs, tolerance, digest_of(*fs), n=n, k=k)


@_refine_on_failure
def check_golden_ratio_bound(f: DensityGrid, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    """``h(X + Z) >= h(X + X') - (1/2) log(2/phi)`` with ``Z`` the matched Gaussian."""
    z = matched_gaussian(f)
    lhs = entropy(convolve_gaussian(f, z))
    rhs = entropy(convolve(f, f)) - GOLDEN_OFFSET
    return make_report("golden_ratio_bound", lhs, rhs, tolerance, digest_of(f))


@_refine_on_failure
def check_large_doubling(f: DensityGrid, z: GaussianSpec, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    """``h(X + Z) - h(X) >= (1/2) log(1 + a sigma[X])`` with ``a = Var Z / Var X``."""
    var_x = matched_gaussian(f).variance
    a = z.variance / var_x
    sigma = doubling_constant(f)
    lhs = entropy(convolve_gaussian(f, z)) - entropy(f)
    rhs = 0.5 * math.log1p(a * sigma)
    return make_report("large_doubling", lhs, rhs, tolerance, digest_of(f, z), a=a, sigma=sigma)


def combined_branch(sigma: float) -> str:
    diff = PHI * sigma - (1 + sigma)
    if abs(diff) < BRANCH_TIE:
        return "boundary"
    return "golden" if diff > 0 else "doubling"


@_refine_on_failure
def check_combined_doubling(f: DensityGrid, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    """``h(X + Z) - h(X) >= (1/2) log max{phi sigma, 1 + sigma}``, ``Z`` matched Gaussian.

    ``details["branch"]`` is ``"golden"`` when ``phi * sigma`` is the larger
    term, ``"doubling"`` when ``1 + sigma`` is, and ``"boundary"`` at a tie
    (which happens at ``sigma = phi``).
    """
    z = matched_gaussian(f)
    sigma = doubling_constant(f)
    lhs = entropy(convolve_gaussian(f, z)) - entropy(f)
    rhs = 0.5 * math.log(max(PHI * sigma, 1 + sigma))
    return make_report("combined_doubling", lhs, rhs, tolerance, digest_of(f), sigma=sigma, branch=combined_branch(sigma))


def gaussianization_gap(fX: DensityGrid, fY: DensityGrid) -> float:
    """``h(X + Z) - h(X + Y)`` where ``Z`` is Gaussian with the moments of ``Y``.

    Negative values mean that replacing ``Y`` by a Gaussian lowered the
    entropy of the sum, which can happen for non-identical pairs.
    """
    z = matched_gaussian(fY)
    return entropy(convolve_gaussian(fX, z)) - entropy(convolve(fX, fY))


@_refine_on_failure
def ze_gap_check(fX: DensityGrid, fY: DensityGrid, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    """``h(X + Z) >= h(X + Y) - (1/2) log 2`` with ``Z`` matched to ``Y``."""
    z = matched_gaussian(fY)
    lhs = entropy(convolve_gaussian(fX, z))
    rhs = entropy(convolve(fX, fY)) - HALF_LOG2
    return make_report("gaussianization_half_log2", lhs, rhs, tolerance, digest_of(fX, fY))


def g_forward(a: float) -> float:
    """The increasing map ``g(a) = a - (1/4) log(1 + 2 e^{2a})`` on the line."""
    # log(1 + 2e^{2a}) = logaddexp(0, log 2 + 2a)
    return a - 0.25 * float(np.logaddexp(0.0, math.log(2) + 2 * a))


def g_inverse(y: float) -> float:
    """Inverse of :func:`g_forward`.

    ``(1/2) log[e^{4y} + e^{2y} sqrt(e^{4y} + 1)]``, evaluated as
    ``y + (1/2) asinh(e^{2y})`` which is the same expression without the
    cancellation.
    """
    if not abs(y) <= G_RANGE:
        raise OverflowError(f"g_inverse argument {y} outside [-{G_RANGE}, {G_RANGE}]")
    return y + 0.5 * math.asinh(math.exp(2 * y))


@dataclass(frozen=True)
class StabilitySweepRow:
    parameter: float
    doubling_gap: float
    levy_distance: float
    relative_entropy: float


def sweep_family(name: str, *, step: float | None = None) -> Callable[[float], DensityGrid]:
    """Named one-parameter families for :func:`small_doubling_sweep`.

    ``mix_separation``: equal mixture of unit-variance Gaussians whose means
    are ``param`` apart. ``gaussian``: centred Gaussian of variance ``param``.
    ``uniform_width``: uniform on ``[0, param]``.
    """
    def build(family):
        if step is None:
            return from_family(family)
        return from_family(family, step=step)

    if name in ("mix_separation", "mixture"):
        return lambda s: build(Mixture(((0.5, Gaussian(-s / 2, 1.0)), (0.5, Gaussian(s / 2, 1.0)))))
    if name == "gaussian":
        return lambda v: build(Gaussian(0.0, v))
    if name == "uniform_width":
        return lambda w: build(Uniform(0.0, w))
    raise ValueError(f"unknown sweep family {name!r}")


def small_doubling_sweep(family, params: Sequence[float]) -> list[StabilitySweepRow]:
    """Doubling gap, Lévy distance and relative entropy along a parameter sweep.

    ``family`` is a callable ``param -> DensityGrid`` or a name understood by
    :func:`sweep_family`. Rows come back sorted by parameter.
    """
    if isinstance(family, str):
        family = sweep_family(family)
    rows = []
    for t in sorted(params):
        try:
            f = family(t)
        except (ValueError, DensityError) as exc:
            raise ValueError(f"family evaluation failed at parameter {t}: {exc}") from exc
        levy, _ = levy_distance_to_gaussian(f)
        rows.append(StabilitySweepRow(float(t), doubling_constant(f) - 1.0, levy, relative_entropy_to_gaussianity(f)))
    return rows


def random_mixture(rng: np.random.Generator) -> Mixture:
    """Mixture of 1-4 Gaussians, means in [-3, 3], variances in [0.25, 2]."""
    m = int(rng.integers(1, 5))
    weights = rng.dirichlet(np.ones(m))
    weights /= weights.sum()
    means = rng.uniform(-3, 3, m)
    variances = rng.uniform(0.25, 2.0, m)
    return Mixture(tuple((float(w), Gaussian(float(mu), float(v))) for w, mu, v in zip(weights, means, variances)))


SUITE_STEP = 0.01


def random_mixture_grids(seed: int, count: int, *, offset: int = 0, step: float = SUITE_STEP) -> list[DensityGrid]:
    """``count`` random mixtures on a shared lattice.

    Instance ``i`` draws from its own generator seeded with ``(seed, offset + i)``
    so results do not depend on evaluation order.
    """
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, offset + i])
        out.append(from_family(random_mixture(rng), step=step))
    return out
