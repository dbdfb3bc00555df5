"""Scalar functionals of the sharp Sobolev-quotient problem and their derivatives.

Notation used throughout (all integrals are discrete quadratures):

    H = |grad u|_2^2 + a |u|_2^2      (squared H^1 norm)
    P = int |u|^{2*}                   2* = 2N/(N-2)
    Q = int |u|^{2#}                   2# = 2(N-1)/(N-2)

    beta  = H / P^{2/2*}
    delta = Q / (sqrt(H) sqrt(P))
    gamma = Q / P^{2#/2*}
    Psi_alpha = beta (1 + alpha delta)
    Phi_alpha = (H/2 - P/2*) (1 + alpha delta)^{N/2}
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .domain import DiscreteDomain, DomainError, FieldLike, values_of

# |u|_{2*} below this fraction of max|u| * measure^{1/2*} counts as zero.
ZERO_GUARD = 1e-300


class ZeroFieldError(ValueError):
    """The functionals are defined on H^1 minus the origin."""


@dataclass(frozen=True)
class Params:
    a: float
    alpha: float
    N: int

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if int(self.N) != self.N or self.N < 5:
            raise ValueError(f"N={self.N} is below paper hypothesis N >= 5")

    @property
    def two_star(self) -> float:
        return 2.0 * self.N / (self.N - 2)

    @property
    def two_sharp(self) -> float:
        return 2.0 * (self.N - 1) / (self.N - 2)

    def with_alpha(self, alpha: float) -> "Params":
        return Params(a=self.a, alpha=alpha, N=self.N)


@dataclass(frozen=True)
class FunctionalReport:
    h1_norm_sq: float
    l2: float
    l2star: float
    l2sharp_int: float
    delta: float
    beta: float
    gamma: float
    psi: float
    phi: float
    nehari_t: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _Parts:
    G: float
    L2sq: float
    H: float
    P: float
    Q: float


def _check_params(d: DiscreteDomain, p: Params) -> None:
    if d.N != p.N:
        raise DomainError(f"params N={p.N} does not match domain N={d.N}")


def _nonzero(d: DiscreteDomain, u: FieldLike) -> np.ndarray:
    v = values_of(d, u)
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    if not scale > 0 or not np.isfinite(scale):
        raise ZeroFieldError("functional evaluated on the zero field")
    return v


def _parts(d: DiscreteDomain, v: np.ndarray, p: Params) -> _Parts:
    w = d.quad_weights
    grads = d.grad(v)
    gsq = grads[0] * grads[0]
    for g in grads[1:]:
        gsq += g * g
    av = np.abs(v)
    G = float(np.sum(w * gsq))
    L2sq = float(np.sum(w * av * av))
    P = float(np.sum(w * av**p.two_star))
    Q = float(np.sum(w * av**p.two_sharp))
    scale = float(np.max(av)) ** p.two_star * d.measure
    if P < ZERO_GUARD * scale:
        raise ZeroFieldError("|u|_{2*} vanishes to working precision")
    return _Parts(G=G, L2sq=L2sq, H=G + p.a * L2sq, P=P, Q=Q)


def _beta(parts: _Parts, p: Params) -> float:
    return parts.H / parts.P ** (2.0 / p.two_star)


def _delta(parts: _Parts) -> float:
    return float(parts.Q / (np.sqrt(parts.H) * np.sqrt(parts.P)))


def _gamma(parts: _Parts, p: Params) -> float:
    return parts.Q / parts.P ** (p.two_sharp / p.two_star)


def h1_norm_sq(d: DiscreteDomain, u: FieldLike, p: Params) -> float:
    _check_params(d, p)
    return _parts(d, _nonzero(d, u), p).H


def delta(d: DiscreteDomain, u: FieldLike, p: Params) -> float:
    _check_params(d, p)
    return _delta(_parts(d, _nonzero(d, u), p))


def beta(d: DiscreteDomain, u: FieldLike, p: Params) -> float:
    _check_params(d, p)
    return _beta(_parts(d, _nonzero(d, u), p), p)


def gamma(d: DiscreteDomain, u: FieldLike, p: Params) -> float:
    _check_params(d, p)
    return _gamma(_parts(d, _nonzero(d, u), p), p)


def psi_alpha(d: DiscreteDomain, u: FieldLike, p: Params) -> float:
    _check_params(d, p)
    parts = _parts(d, _nonzero(d, u), p)
    return _beta(parts, p) * (1.0 + p.alpha * _delta(parts))


def phi_alpha(d: DiscreteDomain, u: FieldLike, p: Params) -> float:
    _check_params(d, p)
    parts = _parts(d, _nonzero(d, u), p)
    phi0 = 0.5 * parts.H - parts.P / p.two_star
    return phi0 * (1.0 + p.alpha * _delta(parts)) ** (p.N / 2)


def nehari_t(d: DiscreteDomain, u: FieldLike, p: Params) -> float:
    """Scaling t > 0 that puts t*u on the Nehari manifold ||tu||^2 = int|tu|^{2*}."""
    _check_params(d, p)
    parts = _parts(d, _nonzero(d, u), p)
    return (parts.H / parts.P) ** ((p.N - 2) / 4)


def report(d: DiscreteDomain, u: FieldLike, p: Params) -> FunctionalReport:
    _check_params(d, p)
    parts = _parts(d, _nonzero(d, u), p)
    b = _beta(parts, p)
    dl = _delta(parts)
    phi0 = 0.5 * parts.H - parts.P / p.two_star
    return FunctionalReport(
        h1_norm_sq=parts.H,
        l2=float(np.sqrt(parts.L2sq)),
        l2star=parts.P ** (1.0 / p.two_star),
        l2sharp_int=parts.Q,
        delta=dl,
        beta=b,
        gamma=_gamma(parts, p),
        psi=b * (1.0 + p.alpha * dl),
        phi=phi0 * (1.0 + p.alpha * dl) ** (p.N / 2),
        nehari_t=(parts.H / parts.P) ** ((p.N - 2) / 4),
    )


def delta_prime(
    d: DiscreteDomain, u: FieldLike, phi_dir: FieldLike, p: Params
) -> float:
    """Directional derivative of delta at u along phi_dir.

    Three terms: -(delta/H) int(grad u . grad phi + a u phi)
    + 2# (delta/Q) int |u|^{2#-2} u phi - (2*/2)(delta/P) int |u|^{2*-2} u phi.
    The 1/H prefactor (not 1/sqrt(H)) is what the finite-difference
    derivative of delta reproduces.
    """
    _check_params(d, p)
    v = _nonzero(d, u)
    f = values_of(d, phi_dir)
    parts = _parts(d, v, p)
    dl = _delta(parts)
    w = d.quad_weights
    av = np.abs(v)
    dot = sum(np.sum(w * gu * gf) for gu, gf in zip(d.grad(v), d.grad(f)))
    energy = float(dot) + p.a * float(np.sum(w * v * f))
    sharp = float(np.sum(w * av ** (p.two_sharp - 2) * v * f))
    star = float(np.sum(w * av ** (p.two_star - 2) * v * f))
    return (
        -dl / parts.H * energy
        + p.two_sharp * dl / parts.Q * sharp
        - 0.5 * p.two_star * dl / parts.P * star
    )


def _psi_and_gradient(d: DiscreteDomain, v: np.ndarray, p: Params):
    """Psi_alpha and its W-gradient; also returns the parts for reuse."""
    parts = _parts(d, v, p)
    av = np.abs(v)
    b = _beta(parts, p)
    dl = _delta(parts)
    gH = 2.0 * (d.neg_laplacian(v) + p.a * v)
    gP = p.two_star * av ** (p.two_star - 2) * v
    gQ = p.two_sharp * av ** (p.two_sharp - 2) * v
    g_beta = b * (gH / parts.H - (2.0 / p.two_star) * gP / parts.P)
    g_delta = dl * (gQ / parts.Q - 0.5 * gH / parts.H - 0.5 * gP / parts.P)
    psi = b * (1.0 + p.alpha * dl)
    grad = g_beta * (1.0 + p.alpha * dl) + p.alpha * b * g_delta
    return psi, grad, parts, b, dl


def psi_gradient(d: DiscreteDomain, u: FieldLike, p: Params) -> np.ndarray:
    """Field g with sum(w * g * phi) equal to the derivative of Psi_alpha along phi."""
    _check_params(d, p)
    return _psi_and_gradient(d, _nonzero(d, u), p)[1]


def el_residual(d: DiscreteDomain, u: FieldLike, p: Params) -> np.ndarray:
    """Pointwise residual of the Euler-Lagrange system for Phi_alpha.

    (1 + alpha delta/2)(-Lap u + a u) + (2#/2) alpha u^{2#-1}
        - (1 + (2#+1)/2 alpha delta) u^{2*-1}

    These coefficients are the critical-point equation of Phi_alpha restricted
    to the Nehari manifold, where ||u|| = |u|_{2*}^{2*/2}.
    """
    _check_params(d, p)
    v = _nonzero(d, u)
    if np.any(v <= 0):
        raise ValueError("Euler-Lagrange residual requires u > 0")
    dl = _delta(_parts(d, v, p))
    s = p.two_sharp
    return (
        (1.0 + 0.5 * p.alpha * dl) * (d.neg_laplacian(v) + p.a * v)
        + 0.5 * s * p.alpha * v ** (s - 1)
        - (1.0 + 0.5 * (s + 1) * p.alpha * dl) * v ** (p.two_star - 1)
    )


def el_quadratic_ratio(d: DiscreteDomain, u: FieldLike, p: Params) -> float:
    """Positive root r of the quadratic obtained by testing the EL system with u.

    With r = ||u|| / |u|_{2*}^{2*/2} the tested equation reads
    (1 + alpha delta/2) r^2 + (2#/2) alpha delta r - (1 + (2#+1)/2 alpha delta) = 0,
    whose only positive root is r = 1.
    """
    _check_params(d, p)
    dl = delta(d, u, p)
    A = 1.0 + 0.5 * p.alpha * dl
    B = 0.5 * p.two_sharp * p.alpha * dl
    C = -(1.0 + 0.5 * (p.two_sharp + 1) * p.alpha * dl)
    roots = np.roots([A, B, C])
    return float(max(roots.real))


def f_g_profile(
    beta_v: float, gamma_v: float, alpha: float, S_half: float, x: float, N: int = 5
) -> tuple[float, float]:
    """The trial profiles f and g on [0, 1] used to compare a split minimizing
    sequence against full concentration; f >= g with equality at both ends."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if beta_v <= 0 or S_half <= 0 or gamma_v < 0 or alpha < 0:
        raise ValueError("need beta, S_half > 0 and gamma, alpha >= 0")
    two_star = 2.0 * N / (N - 2)
    two_sharp = 2.0 * (N - 1) / (N - 2)
    e2 = 2.0 / two_star
    inner_f = beta_v * x**e2 + S_half * (1.0 - x) ** e2
    f = inner_f + alpha * gamma_v * x ** (two_sharp / two_star) * np.sqrt(inner_f)
    inner_g = beta_v * x + S_half * (1.0 - x)
    g = inner_g + alpha * gamma_v * x * np.sqrt(inner_g)
    return float(f), float(g)
