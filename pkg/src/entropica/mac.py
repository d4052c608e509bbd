"""Two-user additive-noise multiple-access channel with time sharing.

A triplet ``(V, X1, X2)`` has ``V`` on at most two atoms and, given ``V = v``,
independent inputs ``X1|v`` and ``X2|v``. Because the inputs are independent
of each other given ``v``, every conditional mutual information reduces to a
one-dimensional entropy difference: knowing ``X2`` removes it from the sum,
so ``I(X1; Y | X2, V=v) = h(X1 + Z | v) - h(Z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import (
    DensityGrid,
    GaussianSpec,
    VARIANCE_FLOOR,
    center,
    convolve,
    convolve_gaussian,
    entropy,
    from_family,
    scale,
)
from .inequalities import random_mixture
from .reports import DEFAULT_TOLERANCE, GapReport, digest_of, make_report

__all__ = [
    "MacTriplet",
    "MacRates",
    "MacRatesReport",
    "mac_mutual_informations",
    "matched_gaussian_triplet",
    "check_mac_fractional_bound",
    "mac_inner_corners",
    "in_region",
    "random_triplet",
    "MAX_ATOMS",
]

MAX_ATOMS = 2
POWER_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class MacTriplet:
    """Time-sharing input pair.

    Conditionals may be :class:`DensityGrid` (centred on construction) or
    :class:`GaussianSpec` (stored with mean zero); Gaussian conditionals are
    convolved exactly with the noise.
    """

    v_probabilities: tuple
    x1_given_v: tuple
    x2_given_v: tuple
    P1: float
    P2: float

    def __post_init__(self):
        probs = tuple(float(p) for p in self.v_probabilities)
        if not 1 <= len(probs) <= MAX_ATOMS:
            raise ValueError(f"V must take between 1 and {MAX_ATOMS} values, got {len(probs)}")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1) > 1e-9:
            raise ValueError("v_probabilities must be non-negative and sum to 1")
        if len(self.x1_given_v) != len(probs) or len(self.x2_given_v) != len(probs):
            raise ValueError("need one conditional per user and per atom of V")
        if not (self.P1 > 0 and self.P2 > 0):
            raise ValueError("powers must be positive")
        object.__setattr__(self, "v_probabilities", probs)
        object.__setattr__(self, "x1_given_v", tuple(_centred(x) for x in self.x1_given_v))
        object.__setattr__(self, "x2_given_v", tuple(_centred(x) for x in self.x2_given_v))
        for user, budget in ((1, self.P1), (2, self.P2)):
            used = self.power(user)
            if used > budget + POWER_SLACK:
                raise ValueError(f"user {user} power {used:.12g} exceeds budget {budget:.12g}")

    @property
    def atoms(self) -> int:
        return len(self.v_probabilities)

    def variances(self, user: int) -> np.ndarray:
        xs = self.x1_given_v if user == 1 else self.x2_given_v
        return np.array([x.variance for x in xs])

    def power(self, user: int) -> float:
        return float(np.dot(self.v_probabilities, self.variances(user)))

    def digest(self) -> str:
        return digest_of(*self.x1_given_v, *self.x2_given_v, repr((self.v_probabilities, self.P1, self.P2)))


def _centred(x):
    if isinstance(x, GaussianSpec):
        return GaussianSpec(0.0, x.variance)
    if isinstance(x, DensityGrid):
        return center(x)
    raise TypeError(f"conditional must be a DensityGrid or GaussianSpec, got {type(x).__name__}")


@dataclass(frozen=True)
class MacRates:
    v: int
    I1: float
    I2: float
    Isum: float
    snr1v: float
    snr2v: float
    snrv: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class MacRatesReport:
    per_v_rates: tuple
    bound_reports: tuple = ()
    v_probabilities: tuple = ()

    def expected(self, key: str) -> float:
        """``sum_v p(v) * rate_v`` for ``key`` in ``I1``, ``I2``, ``Isum``."""
        return float(sum(p * getattr(r, key) for p, r in zip(self.v_probabilities, self.per_v_rates)))

    @property
    def satisfied(self) -> bool:
        return all(r.satisfied for r in self.bound_reports)

    def to_dict(self) -> dict:
        return {
            "v_probabilities": list(self.v_probabilities),
            "per_v_rates": [r.to_dict() for r in self.per_v_rates],
            "bound_reports": [r.to_dict() for r in self.bound_reports],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MacRatesReport":
        return cls(
            per_v_rates=tuple(MacRates(**r) for r in d["per_v_rates"]),
            bound_reports=tuple(GapReport.from_dict(r) for r in d.get("bound_reports", [])),
            v_probabilities=tuple(d.get("v_probabilities", ())),
        )


def _plus_noise(x, noise: DensityGrid) -> DensityGrid:
    if isinstance(x, GaussianSpec):
        return convolve_gaussian(noise, x.variance)
    return convolve(x, noise)


def _sum_plus_noise(x1, x2, noise: DensityGrid) -> DensityGrid:
    g1, g2 = isinstance(x1, GaussianSpec), isinstance(x2, GaussianSpec)
    if g1 and g2:
        return convolve_gaussian(noise, x1.variance + x2.variance)
    if g1 or g2:
        gauss, other = (x1, x2) if g1 else (x2, x1)
        return convolve_gaussian(convolve(other, noise), gauss.variance)
    return convolve(convolve(x1, x2), noise)


def mac_mutual_informations(triplet: MacTriplet, noise: DensityGrid) -> MacRatesReport:
    """Per-atom rates ``I1``, ``I2`` and ``Isum`` for the given noise."""
    noise = center(noise)
    n = noise.variance
    hz = entropy(noise)
    rows = []
    for v, (x1, x2) in enumerate(zip(triplet.x1_given_v, triplet.x2_given_v)):
        v1, v2 = x1.variance, x2.variance
        if min(v1, v2) < VARIANCE_FLOOR:
            raise ValueError(f"conditional variance below {VARIANCE_FLOOR:g} at v={v}")
        rows.append(
            MacRates(
                v=v,
                I1=entropy(_plus_noise(x1, noise)) - hz,
                I2=entropy(_plus_noise(x2, noise)) - hz,
                Isum=entropy(_sum_plus_noise(x1, x2, noise)) - hz,
                snr1v=v1 / n,
                snr2v=v2 / n,
                snrv=(v1 + v2) / n,
            )
        )
    return MacRatesReport(tuple(rows), (), triplet.v_probabilities)


def matched_gaussian_triplet(triplet: MacTriplet) -> MacTriplet:
    """Replace every conditional by the centred Gaussian of equal variance."""
    def gauss(xs):
        return tuple(GaussianSpec(0.0, x.variance) for x in xs)

    return MacTriplet(triplet.v_probabilities, gauss(triplet.x1_given_v), gauss(triplet.x2_given_v), triplet.P1, triplet.P2)


def _factor(snr: float) -> float:
    return snr / (3.0 * snr + 2.0)


def check_mac_fractional_bound(
    triplet: MacTriplet, noise: DensityGrid, tolerance: float = DEFAULT_TOLERANCE
) -> MacRatesReport:
    """Matched-Gaussian rates against snr-weighted fractions of the original rates.

    One report each for ``R1``, ``R2`` and ``R1 + R2``; the returned per-atom
    rates are those of the original triplet.
    """
    original = mac_mutual_informations(triplet, noise)
    gaussian = mac_mutual_informations(matched_gaussian_triplet(triplet), noise)
    probs = triplet.v_probabilities
    digest = digest_of(triplet, noise)
    reports = []
    for name, rate, snr in (("mac_R1", "I1", "snr1v"), ("mac_R2", "I2", "snr2v"), ("mac_sum", "Isum", "snrv")):
        factors = [_factor(getattr(r, snr)) for r in original.per_v_rates]
        rhs = sum(p * f * getattr(r, rate) for p, f, r in zip(probs, factors, original.per_v_rates))
        reports.append(make_report(name, gaussian.expected(rate), rhs, tolerance, digest, factors=factors))
    return MacRatesReport(original.per_v_rates, tuple(reports), probs)


def mac_inner_corners(triplet: MacTriplet, noise: DensityGrid) -> list[tuple[float, float]]:
    """Vertices of the pentagon cut out by the matched-Gaussian rate constraints.

    Listed counter-clockwise from the origin; coincident vertices are merged.
    """
    rates = mac_mutual_informations(matched_gaussian_triplet(triplet), noise)
    a1 = max(rates.expected("I1"), 0.0)
    a2 = max(rates.expected("I2"), 0.0)
    s = max(rates.expected("Isum"), 0.0)
    r1 = min(a1, s)
    r2 = min(a2, s)
    pts = [(0.0, 0.0), (r1, 0.0), (r1, max(0.0, min(s - r1, r2))), (max(0.0, min(s - r2, r1)), r2), (0.0, r2)]
    out = []
    for p in pts:
        if not out or not (math.isclose(p[0], out[-1][0], abs_tol=1e-15) and math.isclose(p[1], out[-1][1], abs_tol=1e-15)):
            out.append(p)
    if len(out) > 1 and out[-1] == out[0]:
        out.pop()
    return out


def in_region(point: tuple[float, float], corners: list[tuple[float, float]], tol: float = 1e-12) -> bool:
    """Membership of ``(R1, R2)`` in a pentagon returned by :func:`mac_inner_corners`."""
    r1, r2 = point
    if r1 < -tol or r2 < -tol:
        return False
    a1 = max(c[0] for c in corners)
    a2 = max(c[1] for c in corners)
    s = max(c[0] + c[1] for c in corners)
    return r1 <= a1 + tol and r2 <= a2 + tol and r1 + r2 <= s + tol


def random_triplet(
    rng: np.random.Generator, P1: float = 1.0, P2: float = 1.0, atoms: int | None = None, step: float | None = None
) -> MacTriplet:
    """Random mixture conditionals rescaled so both users spend their full power."""
    m = int(rng.integers(1, MAX_ATOMS + 1)) if atoms is None else atoms
    probs = rng.dirichlet(np.ones(m)) if m > 1 else np.ones(1)
    probs = probs / probs.sum()

    def user(budget):
        grids = []
        for _ in range(m):
            fam = random_mixture(rng)
            grids.append(center(from_family(fam) if step is None else from_family(fam, step=step)))
        used = float(np.dot(probs, [g.variance for g in grids]))
        c = math.sqrt(budget / used)
        return tuple(scale(g, c) for g in grids)

    return MacTriplet(tuple(probs), user(P1), user(P2), P1, P2)
