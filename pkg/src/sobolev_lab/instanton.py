"""The instanton family U_{eps,y} and the Sobolev constant S it realizes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gamma as gamma_fn

from .domain import DiscreteDomain, Field, sphere_area

MIN_QUAD_POINTS = 4096
MIN_TRUNCATION = 1e3
_PANEL = 8  # Gauss-Legendre nodes per panel in log r


@dataclass(frozen=True)
class InstantonSpec:
    epsilon: float
    center: tuple[float, ...]
    cutoff_radius: Optional[float] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.cutoff_radius is not None and not self.cutoff_radius > 4 * self.epsilon:
            raise ValueError("cutoff_radius must exceed 4*epsilon")


def instanton_profile(N: int, r) -> np.ndarray:
    """U as a function of |x|."""
    c = N * (N - 2.0)
    r = np.asarray(r, dtype=float)
    return (c / (c + r * r)) ** ((N - 2) / 2)


def instanton_value(N: int, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(instanton_profile(N, math.sqrt(float(np.dot(x, x)))))


def _profile_slope(N: int, rho: np.ndarray) -> np.ndarray:
    c = N * (N - 2.0)
    return -(N - 2) * rho * c ** ((N - 2) / 2) * (c + rho * rho) ** (-N / 2)


def _log_radial_nodes(quad_points: int, r_min: float, r_max: float):
    """Composite Gauss-Legendre nodes/weights for dr on [r_min, r_max], uniform in log r."""
    panels = max(quad_points // _PANEL, 1)
    x, w = np.polynomial.legendre.leggauss(_PANEL)
    edges = np.linspace(math.log(r_min), math.log(r_max), panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    r = np.exp(s)
    return r, ws * r


def radial_quotient_parts(
    N: int, epsilon: float, quad_points: int, truncation_radius: float
) -> tuple[float, float]:
    """(|grad U_eps|_2^2, |U_eps|_{2*}^{2*}) over R^N with closed-form tails beyond R."""
    c = N * (N - 2.0)
    two_star = 2.0 * N / (N - 2)
    omega = sphere_area(N)
    R = float(truncation_radius)
    r, w = _log_radial_nodes(quad_points, 1e-8 * min(epsilon, 1.0), R)
    rho = r / epsilon
    du = epsilon ** (-(N - 2) / 2 - 1) * _profile_slope(N, rho)
    u = epsilon ** (-(N - 2) / 2) * instanton_profile(N, rho)
    rn = r ** (N - 1)
    grad_sq = omega * float(np.sum(w * du * du * rn))
    pow_int = omega * float(np.sum(w * u**two_star * rn))
    # Far field: |U_eps'|^2 r^{N-1} ~ (N-2)^2 c^{N-2} eps^{N-2} r^{1-N},
    # |U_eps|^{2*} r^{N-1} ~ c^N eps^N r^{-N-1}.
    grad_sq += omega * (N - 2) * c ** (N - 2) * epsilon ** (N - 2) * R ** (2 - N)
    pow_int += omega * c**N * epsilon**N * R ** (-N) / N
    return grad_sq, pow_int


def radial_quotient(
    N: int, epsilon: float = 1.0, quad_points: int = 8192, truncation_radius: float = 1e4
) -> float:
    grad_sq, pow_int = radial_quotient_parts(N, epsilon, quad_points, truncation_radius)
    return grad_sq / pow_int ** ((N - 2) / N)


def compute_S(N: int, quad_points: int = 8192, truncation_radius: float = 1e4) -> float:
    """Best Sobolev constant of R^N as the radial quotient of the instanton."""
    if N < 5:
        raise ValueError(f"N={N} is below paper hypothesis N >= 5")
    if quad_points < MIN_QUAD_POINTS or truncation_radius < MIN_TRUNCATION:
        raise ValueError(
            "insufficient resolution: need quad_points >= 4096 and truncation_radius >= 1e3"
        )
    return radial_quotient(N, 1.0, quad_points, truncation_radius)


def S_closed_form(N: int) -> float:
    """pi N (N-2) (Gamma(N/2)/Gamma(N))^{2/N}; used only as a cross-check."""
    return math.pi * N * (N - 2) * (gamma_fn(N / 2) / gamma_fn(N)) ** (2.0 / N)


def boundary_threshold(N: int) -> float:
    """S / 2^{2/N}, recomputed from quadrature on every call."""
    return compute_S(N) / 2.0 ** (2.0 / N)


def cutoff(s: np.ndarray) -> np.ndarray:
    """C^1 cutoff: 1 on [0, 1/2], 0 on [1, inf), cubic Hermite blend between."""
    t = np.clip((np.asarray(s, dtype=float) - 0.5) / 0.5, 0.0, 1.0)
    return 1.0 - 3.0 * t * t + 2.0 * t**3


def face_center(d: DiscreteDomain) -> tuple[float, ...]:
    """Midpoint of the x_1 = 0 face of a box."""
    return (0.0,) + tuple(L / 2 for L in d.extent[1:])


def box_center(d: DiscreteDomain) -> tuple[float, ...]:
    if d.kind == "radial_ball":
        return (0.0,)
    return tuple(L / 2 for L in d.extent)


def sample_instanton(d: DiscreteDomain, spec: InstantonSpec) -> Field:
    N = d.N
    y = tuple(float(c) for c in spec.center)
    if d.kind == "radial_ball":
        if any(c != 0.0 for c in y):
            raise ValueError("radial grids only carry instantons centred at the origin")
        dist = d.axes[0]
    else:
        if len(y) != N:
            raise ValueError(f"center must have {N} coordinates")
        tol = 1e-12 * max(d.extent)
        if any(c < -tol or c > L + tol for c, L in zip(y, d.extent)):
            raise ValueError("instanton center lies outside the closed box")
        sq = np.zeros(d.shape)
        for k, x in enumerate(d.axes):
            shape = [1] * N
            shape[k] = -1
            sq = sq + ((x - y[k]) ** 2).reshape(shape)
        dist = np.sqrt(sq)
    eps = spec.epsilon
    vals = eps ** (-(N - 2) / 2) * instanton_profile(N, dist / eps)
    if spec.cutoff_radius is not None:
        vals = vals * cutoff(dist / spec.cutoff_radius)
    return Field.on(d, vals)
