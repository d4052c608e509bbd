"""Power-constrained capacity of additive-noise channels and Gaussian-input robustness.

The capacity ``C(Z; P) = sup_{E X^2 <= P} I(X; X + Z)`` is computed with a
Lagrangian Blahut-Arimoto iteration on a discrete input lattice. For a fixed
multiplier ``s`` the iteration maximizes ``I(p) - s E_p[X^2]``; ``s`` is then
searched until the optimizing input uses the available power.

The channel matrix is never formed. The input lattice spacing is an integer
multiple ``k`` of the output spacing, so row ``i`` of the channel is the noise
pmf shifted by ``i * k`` cells and both matrix products reduce to ``k``
direct (exact, positive-term) convolutions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft

from .density import (
    DensityGrid,
    center,
    convolve,
    convolve_gaussian,
    entropy,
    rebin,
)
from .inequalities import doubling_constant
from .reports import DEFAULT_TOLERANCE, GapReport, digest_of, make_report

__all__ = [
    "ChannelSpec",
    "SolverOptions",
    "CapacityResult",
    "RobustnessReport",
    "SolverError",
    "gaussian_input_mi",
    "capacity_power_constrained",
    "blahut_arimoto",
    "check_minimax",
    "check_half_bit",
    "check_multiplicative",
    "mi_ratio_check",
    "robustness_factor",
]

log = logging.getLogger(__name__)

HALF_LOG2 = 0.5 * math.log(2)
# log-mass floor: keeps every output reachable and the convolutions clear of
# subnormal floats, which are orders of magnitude slower
LOG_MASS_FLOOR = -40.0


class SolverError(RuntimeError):
    """Raised when no multiplier brings the input within the power budget."""


def robustness_factor(snr: float) -> float:
    """``snr / (3 snr + 2)``: the guaranteed fraction of capacity for Gaussian inputs."""
    return snr / (3.0 * snr + 2.0)


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Additive-noise channel ``Y = X + Z`` with input power budget ``power``.

    The noise grid is shifted to zero mean on construction.
    """

    noise: DensityGrid
    power: float

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError(f"input power must be positive, got {self.power}")
        object.__setattr__(self, "noise", center(self.noise).with_label(self.noise.label))
        if not self.noise_power > 0:
            raise ValueError("noise must have positive variance")

    @property
    def noise_power(self) -> float:
        return self.noise.variance

    @property
    def snr(self) -> float:
        return self.power / self.noise_power

    def digest(self) -> str:
        return digest_of(self.noise, repr(self.power))


@dataclass(frozen=True)
class SolverOptions:
    input_radius: float = 6.0  # input support is +-input_radius * sqrt(P)
    input_points: int = 513
    output_resolution: float = 64.0  # at least this many output cells per noise sd
    gap_threshold: float = 1e-6
    max_iterations: int = 100_000


@dataclass(frozen=True, eq=False)
class CapacityResult:
    capacity: float
    input_support: np.ndarray
    input_pmf: np.ndarray
    multiplier: float
    power_used: float
    ba_gap: float
    iterations: int
    upper_bound: float = math.inf
    converged: bool = True
    lower_history: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def to_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "multiplier": self.multiplier,
            "power_used": self.power_used,
            "ba_gap": self.ba_gap,
            "upper_bound": self.upper_bound,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class RobustnessReport:
    gaussian_mi: float
    capacity_estimate: float
    additive_gap: float
    multiplicative_factor: float
    bound_reports: tuple[GapReport, ...]
    snr: float = float("nan")
    ba_gap: float = 0.0
    converged: bool = True

    @property
    def satisfied(self) -> bool:
        return all(r.satisfied for r in self.bound_reports)

    def to_dict(self) -> dict:
        return {
            "snr": self.snr,
            "gaussian_mi": self.gaussian_mi,
            "capacity_estimate": self.capacity_estimate,
            "additive_gap": self.additive_gap,
            "multiplicative_factor": self.multiplicative_factor,
            "ba_gap": self.ba_gap,
            "converged": self.converged,
            "bound_reports": [r.to_dict() for r in self.bound_reports],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RobustnessReport":
        return cls(
            gaussian_mi=d["gaussian_mi"],
            capacity_estimate=d["capacity_estimate"],
            additive_gap=d["additive_gap"],
            multiplicative_factor=d["multiplicative_factor"],
            bound_reports=tuple(GapReport.from_dict(r) for r in d["bound_reports"]),
            snr=d.get("snr", float("nan")),
            ba_gap=d.get("ba_gap", 0.0),
            converged=d.get("converged", True),
        )


def gaussian_input_mi(channel: ChannelSpec) -> float:
    """``I(X*; X* + Z) = h(X* + Z) - h(Z)`` for ``X* ~ N(0, P)``."""
    z = channel.noise
    return entropy(convolve_gaussian(z, channel.power)) - entropy(z)


# -- discrete channel ---------------------------------------------------------


class _ShiftChannel:
    """Channel whose row ``i`` is the noise pmf ``w`` shifted by ``i * k`` cells."""

    # kernels longer than this are correlated by FFT
    FFT_TAPS = 64

    def __init__(self, x: np.ndarray, k: int, w: np.ndarray):
        self.x = x
        self.x2 = x * x
        self.k = k
        self.w = w
        self.n = x.size
        self.m = (self.n - 1) * k + w.size
        nz = w[w > 0]
        self.neg_hz = float(nz @ np.log(nz))
        self._w_res = [w[r::k] for r in range(k)]
        self._fft = []
        for r, wr in enumerate(self._w_res):
            if wr.size <= self.FFT_TAPS:
                self._fft.append(None)
                continue
            length = len(range(r, self.m, k))
            size = sp_fft.next_fast_len(length + wr.size - 1, real=True)
            self._fft.append((size, sp_fft.rfft(wr[::-1], size)))

    def output(self, p: np.ndarray) -> np.ndarray:
        # direct sums: tail outputs far below machine epsilon must stay exact
        q = np.empty(self.m)
        for r, wr in enumerate(self._w_res):
            q[r :: self.k] = np.convolve(p, wr)
        return q

    def divergences(self, p: np.ndarray) -> np.ndarray:
        """``D(W_i || q)`` for every input ``i`` where ``q`` is the output pmf of ``p``."""
        # far-tail outputs can underflow; their weights are negligible anyway
        lq = np.log(np.maximum(self.output(p), 1e-300))
        acc = np.zeros(self.n)
        for r, wr in enumerate(self._w_res):
            seg = lq[r :: self.k]
            plan = self._fft[r]
            if plan is None:
                acc += np.correlate(seg, wr, "valid")[: self.n]
            else:
                size, wf = plan
                full = sp_fft.irfft(sp_fft.rfft(seg, size) * wf, size)
                acc += full[wr.size - 1 : wr.size - 1 + self.n]
        return self.neg_hz - acc


def _discretize(channel: ChannelSpec, opts: SolverOptions) -> tuple[_ShiftChannel, float]:
    noise = channel.noise
    sd = math.sqrt(channel.noise_power)
    half = (opts.input_points - 1) // 2
    dx_target = opts.input_radius * math.sqrt(channel.power) / half
    h_max = min(sd / opts.output_resolution, dx_target)
    m = 1
    while 2 * m * noise.step <= h_max:
        m *= 2
    out = rebin(noise, m)
    k = max(1, round(dx_target / out.step))
    dx = k * out.step
    x = dx * np.arange(-half, opts.input_points - half)
    w = out.probabilities
    nz = np.flatnonzero(w)
    w = w[nz[0] : nz[-1] + 1]
    return _ShiftChannel(x, k, w), out.step


def _log_normalize(u: np.ndarray) -> np.ndarray:
    m = u.max()
    return u - (m + math.log(np.exp(u - m).sum()))


def _tilt(t: np.ndarray, x2: np.ndarray, power: float | None, s_hint: float = 0.0):
    """Normalize ``t - s x^2`` in log space.

    With ``power`` given, ``s >= 0`` is the smallest multiplier for which the
    tilted pmf has second moment at most ``power`` (the exponential-family
    projection onto the power constraint). Returns ``(theta, s)``.
    """
    if power is None:
        return np.maximum(_log_normalize(t - s_hint * x2), LOG_MASS_FLOOR), s_hint

    def moments(s):
        lp = _log_normalize(t - s * x2)
        p = np.exp(lp)
        m1 = float(p @ x2)
        return lp, m1 - power, float(p @ (x2 * x2)) - m1 * m1

    lp, f, _ = moments(0.0)
    if f <= 0:
        return np.maximum(lp, LOG_MASS_FLOOR), 0.0
    # bracket [lo, hi] with excess(lo) > 0 >= excess(hi); the moment is
    # decreasing in s, so safeguarded Newton converges from the warm start
    # Newton aims inside the acceptance band so rounding cannot pin it outside
    band = 1e-13 * power
    lo, hi = 0.0, math.inf
    s = s_hint if s_hint > 0 else 1.0 / power
    best = None
    for _ in range(200):
        lp, f, var = moments(s)
        if f > 0:
            lo = s
        else:
            hi = s
            best = (lp, s)
            if f >= -band:
                break
        if hi < math.inf and hi - lo <= 1e-15 * hi:
            break
        step = s + (f + 0.5 * band) / var if var > 0 else math.nan
        if math.isinf(hi):
            s = step if lo < step < 1e300 else 2.0 * max(s, 1e-300)
            if s > 1e300:
                raise SolverError("no multiplier meets the power constraint")
        else:
            s = step if lo < step < hi else 0.5 * (lo + hi)
    if best is None:
        raise SolverError("no multiplier meets the power constraint")
    return np.maximum(best[0], LOG_MASS_FLOOR), float(best[1])


class _DualEnvelope:
    """``min_{s >= 0} max_i (d_i - s x_i^2) + s P``: an upper bound on capacity.

    By LP duality this equals the upper concave envelope of the points
    ``(x_i^2, d_i)`` at abscissa ``P``: the best single point inside the power
    budget or the best chord between one point inside and one outside. The
    chord weights depend only on the lattice, so they are computed once.
    Calling the envelope returns ``(bound, s)`` with ``s`` the slope
    certificate.
    """

    def __init__(self, x2: np.ndarray, power: float):
        self.order = np.argsort(x2, kind="stable")
        b = x2[self.order]
        self.starts = np.flatnonzero(np.r_[True, np.diff(b) > 0])
        b = b[self.starts]
        self.n_in = int(np.searchsorted(b, power, side="right"))
        self.b_in, self.b_out = b[: self.n_in], b[self.n_in :]
        t = (power - self.b_in[:, None]) / (self.b_out[None, :] - self.b_in[:, None])
        self.alpha, self.beta = 1.0 - t, t

    def __call__(self, d: np.ndarray) -> tuple[float, float]:
        db = np.maximum.reduceat(d[self.order], self.starts)
        d_in, d_out = db[: self.n_in], db[self.n_in :]
        best, s = float(d_in.max()), 0.0
        if d_out.size and d_out.max() > best:
            chord = d_in[:, None] * self.alpha + d_out[None, :] * self.beta
            j = int(np.argmax(chord))
            if chord.flat[j] > best:
                a, c = divmod(j, d_out.size)
                best = float(chord.flat[j])
                s = float((d_out[c] - d_in[a]) / (self.b_out[c] - self.b_in[a]))
        return best, max(s, 0.0)


def _dual_bound(d: np.ndarray, x2: np.ndarray, power: float) -> tuple[float, float]:
    return _DualEnvelope(x2, power)(d)


@dataclass
class _BAState:
    theta: np.ndarray  # log input pmf
    multiplier: float
    lower: float  # best certified lower bound
    upper: float  # best certified upper bound
    iterations: int
    history: list  # objective after each accepted step, non-decreasing

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def _squarem_ba(ch: _ShiftChannel, power, s, theta0, tol, max_iter) -> _BAState:
    """Blahut-Arimoto with squared extrapolation in log-mass space.

    ``power=None`` runs the Lagrangian iteration at the fixed multiplier
    ``s`` and maximizes ``I(p) - s E[X^2]``. Otherwise every step tilts onto
    ``E[X^2] <= power`` and the iteration maximizes ``I(p)`` over feasible
    inputs; the dual bound ``max_i (D_i - s x_i^2) + s P`` holds for every
    ``s >= 0`` so the bracket stays certified while ``s`` adapts.

    Each round takes two plain steps, extrapolates along them, and keeps the
    extrapolated point only if the objective did not fall below the first
    plain step. The objective sequence is therefore non-decreasing.
    """
    x2 = ch.x2
    fixed = power is None
    envelope = None if fixed else _DualEnvelope(x2, power)

    def objective(theta, mult):
        p = np.exp(theta)
        d = ch.divergences(p)
        if fixed:
            c = d - s * x2
            return c, float(p @ c), float(c.max())
        return d, float(p @ d), envelope(d)[0]

    def step(theta, d, mult):
        # in fixed mode d already carries the -s x^2 penalty
        return _tilt(theta + d, x2, power, 0.0 if fixed else mult)

    theta = np.full(ch.n, -math.log(ch.n)) if theta0 is None else np.asarray(theta0, dtype=float)
    theta, mult = _tilt(theta, x2, power, 0.0)
    d, F, _ = objective(theta, mult)
    lower, upper = -math.inf, math.inf
    history = [F]
    it = 0
    for it in range(1, max_iter + 1):
        th1, m1 = step(theta, d, mult)
        d1, F1, U = objective(th1, m1)
        # the plain step certifies a bracket at the multiplier it selected
        lower = max(lower, F1)
        upper = min(upper, U)
        if upper - lower < tol:
            theta, mult, F = th1, m1, F1
            history.append(F)
            break
        th2, m2 = step(th1, d1, m1)
        r = th1 - theta
        v = th2 - 2 * th1 + theta
        vv = float(v @ v)
        alpha = min(-math.sqrt(float(r @ r) / vv), -1.0) if vv > 0 else -1.0
        tn = theta - 2 * alpha * r + alpha * alpha * v
        tn, mn = _tilt(tn, x2, power, 0.0 if fixed else m2)
        dn, Fn, Un = objective(tn, mn)
        if not Fn >= F1:
            tn, mn = th2, m2
            dn, Fn, Un = objective(th2, m2)
        upper = min(upper, Un)
        theta, mult, d, F = tn, mn, dn, Fn
        lower = max(lower, F)
        history.append(F)
    return _BAState(theta, s if fixed else mult, lower, upper, it, history)


def blahut_arimoto(ch: _ShiftChannel, s: float, theta0=None, tol: float = 1e-6, max_iter: int = 100_000) -> _BAState:
    """Lagrangian Blahut-Arimoto: maximize ``I(p) - s E_p[X^2]`` at fixed ``s >= 0``."""
    if s < 0:
        raise ValueError("multiplier must be non-negative")
    return _squarem_ba(ch, None, s, theta0, tol, max_iter)


def capacity_power_constrained(channel: ChannelSpec, opts: SolverOptions | None = None) -> CapacityResult:
    """Capacity of ``channel`` under ``E X^2 <= P`` by constrained Blahut-Arimoto.

    The capacity estimate is the mutual information of the final input,
    which is feasible, so it is a lower bound for the discretized channel.
    ``upper_bound`` is the matching dual bound and ``ba_gap`` their
    difference. ``multiplier`` is the Lagrange multiplier of the power
    constraint at termination (0 when the constraint is slack). When the
    iteration cap is hit first the best iterate is still returned, with
    ``converged`` False.
    """
    opts = opts or SolverOptions()
    ch, _ = _discretize(channel, opts)
    P = channel.power
    st = _squarem_ba(ch, P, 0.0, None, opts.gap_threshold, opts.max_iterations)
    p = np.exp(st.theta)
    p /= p.sum()
    capacity = float(p @ ch.divergences(p))
    converged = st.gap < opts.gap_threshold
    if not converged:
        log.warning("Blahut-Arimoto stopped at gap %.3g after %d iterations", st.gap, st.iterations)
    return CapacityResult(
        capacity=capacity,
        input_support=ch.x,
        input_pmf=p,
        multiplier=st.multiplier,
        power_used=float(p @ ch.x2),
        ba_gap=st.gap,
        iterations=st.iterations,
        upper_bound=st.upper,
        converged=converged,
        lower_history=np.asarray(st.history),
    )


# -- robustness checks --------------------------------------------------------


def check_minimax(channel: ChannelSpec, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    """Gaussian-input rate against ``(1/2) log(1 + snr sigma[Z])``."""
    sigma = doubling_constant(channel.noise)
    lhs = gaussian_input_mi(channel)
    rhs = 0.5 * math.log1p(channel.snr * sigma)
    return make_report("minimax_noise", lhs, rhs, tolerance, channel.digest(), sigma=sigma, snr=channel.snr)


def _capacity(channel, result, opts):
    return result if result is not None else capacity_power_constrained(channel, opts)


def check_half_bit(
    channel: ChannelSpec,
    result: CapacityResult | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    opts: SolverOptions | None = None,
) -> GapReport:
    """Gaussian-input rate against ``C - (1/2) log 2``; tolerance widened by the solver gap."""
    result = _capacity(channel, result, opts)
    lhs = gaussian_input_mi(channel)
    rhs = result.capacity - HALF_LOG2
    return make_report("half_bit", lhs, rhs, tolerance + result.ba_gap, channel.digest(), capacity=result.capacity)


def check_multiplicative(
    channel: ChannelSpec,
    result: CapacityResult | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    opts: SolverOptions | None = None,
) -> RobustnessReport:
    """All three lower bounds on the Gaussian-input rate for one channel.

    The reports cover the noise-doubling bound, the additive half-log-2 bound
    and the multiplicative ``snr/(3 snr + 2)`` bound, in that order.
    """
    result = _capacity(channel, result, opts)
    mi = gaussian_input_mi(channel)
    factor = robustness_factor(channel.snr)
    tol = tolerance + result.ba_gap
    mult = make_report(
        "multiplicative", mi, factor * result.capacity, tol, channel.digest(), factor=factor, capacity=result.capacity
    )
    reports = (
        check_minimax(channel, tolerance),
        check_half_bit(channel, result, tolerance),
        mult,
    )
    return RobustnessReport(
        gaussian_mi=mi,
        capacity_estimate=result.capacity,
        additive_gap=result.capacity - mi,
        multiplicative_factor=factor,
        bound_reports=reports,
        snr=channel.snr,
        ba_gap=result.ba_gap,
        converged=result.converged,
    )


def mi_ratio_check(input_density: DensityGrid, channel: ChannelSpec, tolerance: float = DEFAULT_TOLERANCE) -> GapReport:
    """Gaussian-input rate against ``snr/(3 snr + 2)`` times the rate of a given input.

    The input is centred first and must satisfy ``Var X <= P``.
    """
    x = center(input_density)
    if x.variance > channel.power + 1e-9:
        raise ValueError(f"input variance {x.variance:.6g} exceeds the power budget {channel.power:.6g}")
    rate = entropy(convolve(x, channel.noise)) - entropy(channel.noise)
    factor = robustness_factor(channel.snr)
    lhs = gaussian_input_mi(channel)
    return make_report("mi_ratio", lhs, factor * rate, tolerance, digest_of(x, channel), input_rate=rate, factor=factor)
