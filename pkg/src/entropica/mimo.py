"""Matrix-level robustness bounds for Gaussian inputs on MIMO and vector channels.

Nothing here touches density grids: every quantity is a determinant, trace or
closed-form loss. Determinants of positive semi-definite matrices go through
a symmetric eigendecomposition, with eigenvalues below ``1e-14`` times the
largest treated as zero, and ``det^{1/d}`` is formed in the log domain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MimoChannel",
    "BoundComparison",
    "SingularMatrixError",
    "psd_det_root",
    "dim_snr_factor",
    "mimo_robustness_factor",
    "philosof_zamir_additive_loss",
    "compare_bounds",
    "EIG_RTOL",
]

EIG_RTOL = 1e-14
SYM_TOL = 1e-12
LN2 = math.log(2.0)


class SingularMatrixError(ValueError):
    """A determinant that must be positive is zero at working precision."""


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    return m


def _check_psd(m: np.ndarray, name: str) -> np.ndarray:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, atol=SYM_TOL, rtol=0):
        raise ValueError(f"{name} is not symmetric")
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    if eig.min() < -SYM_TOL:
        raise ValueError(f"{name} has a negative eigenvalue {eig.min():.3g}")
    return 0.5 * (m + m.T)


def psd_det_root(m) -> float:
    """``det(m)^{1/d}`` for a symmetric PSD ``d x d`` matrix; 0 when singular."""
    m = _as_matrix(m, "matrix")
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    top = eig.max()
    if top <= 0 or eig.min() <= EIG_RTOL * top:
        return 0.0
    return float(math.exp(np.mean(np.log(eig))))


@dataclass(frozen=True, eq=False)
class MimoChannel:
    """``Y = H X + Z`` with ``Cov(Z) = noise_cov`` and ``E|X|^2 <= power``."""

    H: np.ndarray
    noise_cov: np.ndarray
    power: float

    def __post_init__(self):
        H = _as_matrix(self.H, "H")
        N = _check_psd(_as_matrix(self.noise_cov, "N"), "N")
        if N.shape[0] != H.shape[0]:
            raise ValueError(f"N is {N.shape[0]}x{N.shape[0]} but H has {H.shape[0]} rows")
        if not self.power > 0:
            raise ValueError("power must be positive")
        if not np.trace(N) > 0:
            raise ValueError("noise covariance must have positive trace")
        H.setflags(write=False)
        N.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "noise_cov", N)
        object.__setattr__(self, "power", float(self.power))

    @property
    def d_r(self) -> int:
        return self.H.shape[0]

    @property
    def d_t(self) -> int:
        return self.H.shape[1]

    @property
    def snr_m(self) -> float:
        return self.power / float(np.trace(self.noise_cov))

    def to_dict(self) -> dict:
        return {"H": self.H.tolist(), "N": self.noise_cov.tolist(), "P": self.power}

    @classmethod
    def from_dict(cls, d: dict) -> "MimoChannel":
        missing = {"H", "N", "P"} - set(d)
        if missing:
            raise ValueError(f"channel spec missing {sorted(missing)}")
        return cls(np.asarray(d["H"], dtype=float), np.asarray(d["N"], dtype=float), float(d["P"]))

    @classmethod
    def from_json(cls, text: str) -> "MimoChannel":
        return cls.from_dict(json.loads(text))


def dim_snr_factor(K_xstar, K_x, N, d: int | None = None) -> float:
    """``det(K*)^{1/d} / (2 det(K_x + N)^{1/d} + det(K*)^{1/d})``."""
    mats = [_check_psd(_as_matrix(m, name), name) for m, name in ((K_xstar, "K_xstar"), (K_x, "K_x"), (N, "N"))]
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")
    dim = dims.pop()
    if d is not None and d != dim:
        raise ValueError(f"d={d} does not match matrix dimension {dim}")
    a = psd_det_root(mats[0])
    b = psd_det_root(mats[1] + mats[2])
    if b == 0.0:
        raise SingularMatrixError("K_x + N is singular")
    return a / (2.0 * b + a)


@dataclass(frozen=True)
class FactorResult:
    value: float
    singular: bool
    dims_differ: bool


def mimo_robustness_factor(channel: MimoChannel, *, details: bool = False):
    """Guaranteed fraction of capacity for a white Gaussian input, sum-power constrained.

    ``snr_M det(HH^T)^{1/d_r} / (snr_M (2 tr(HH^T) + det(HH^T)^{1/d_r}) + 2)``.
    Singular ``HH^T`` gives 0. With ``details=True`` returns a
    :class:`FactorResult` that also flags singularity and ``d_t != d_r``.
    """
    G = channel.H @ channel.H.T
    root = psd_det_root(G)
    snr = channel.snr_m
    value = snr * root / (snr * (2.0 * float(np.trace(G)) + root) + 2.0)
    if details:
        return FactorResult(value, root == 0.0, channel.d_t != channel.d_r)
    return value


def philosof_zamir_additive_loss(d_r: int, d_t: int) -> float:
    """Additive rate loss of white Gaussian inputs, in bits."""
    if isinstance(d_r, bool) or isinstance(d_t, bool) or int(d_r) != d_r or int(d_t) != d_t:
        raise ValueError("dimensions must be integers")
    if d_r < 1 or d_t < 1:
        raise ValueError("dimensions must be positive")
    if d_r <= d_t:
        return 0.5 * d_r * math.log2(1.0 + d_t / d_r)
    return 0.5 * d_t


@dataclass(frozen=True)
class BoundComparison:
    multiplicative_factor: float
    additive_loss_bits: float
    stronger_bound_at: str
    multiplicative_bound: float | None = None
    additive_bound: float | None = None
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {
            "multiplicative_factor": self.multiplicative_factor,
            "additive_loss_bits": self.additive_loss_bits,
            "stronger_bound_at": self.stronger_bound_at,
            "multiplicative_bound": self.multiplicative_bound,
            "additive_bound": self.additive_bound,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundComparison":
        return cls(
            d["multiplicative_factor"],
            d["additive_loss_bits"],
            d["stronger_bound_at"],
            d.get("multiplicative_bound"),
            d.get("additive_bound"),
            tuple(d.get("flags", ())),
        )


def compare_bounds(channel: MimoChannel, capacity_nats: float | None = None) -> BoundComparison:
    """Both lower bounds on the Gaussian-input rate and which is larger.

    ``stronger_bound_at`` is ``"multiplicative"``, ``"additive"``, ``"equal"``
    or ``"unknown"`` when no capacity is supplied.
    """
    res = mimo_robustness_factor(channel, details=True)
    loss = philosof_zamir_additive_loss(channel.d_r, channel.d_t)
    flags = tuple(f for f, on in (("singular_HHt", res.singular), ("d_t_ne_d_r", res.dims_differ)) if on)
    if capacity_nats is None:
        return BoundComparison(res.value, loss, "unknown", flags=flags)
    if capacity_nats < 0:
        raise ValueError("capacity must be non-negative")
    mult = res.value * capacity_nats
    add = capacity_nats - loss * LN2
    if math.isclose(mult, add, rel_tol=0, abs_tol=1e-15):
        which = "equal"
    else:
        which = "multiplicative" if mult > add else "additive"
    return BoundComparison(res.value, loss, which, mult, add, flags)
