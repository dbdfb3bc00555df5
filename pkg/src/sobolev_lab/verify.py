"""Sampled checks of the sharp inequality and the inequalities it implies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import DiscreteDomain, gradient_sq_integral, lp_norm
from .functionals import Params, report
from .instanton import InstantonSpec, box_center, face_center, sample_instanton
from .minimize import random_cosine_field

CHERRIER_EPS = (0.1, 1.0, 10.0)
HOLDER_SLACK = 1e-12


@dataclass
class CheckTally:
    name: str
    passed: int = 0
    failed: int = 0
    worst_margin: float = math.inf
    worst_sample: str = ""

    def add(self, label: str, margin: float, tol: float) -> bool:
        ok = margin >= -tol
        if ok:
            self.passed += 1
        else:
            self.failed += 1
        if margin < self.worst_margin:
            self.worst_margin = margin
            self.worst_sample = label
        return ok


@dataclass
class Counterexample:
    check: str
    label: str
    margin: float
    values: np.ndarray = field(repr=False)


@dataclass
class VerifyResult:
    alpha0_proxy: float
    threshold: float
    tol_disc: float
    c_const: float
    n_samples: int
    tallies: dict[str, CheckTally]
    counterexamples: list[Counterexample]


def square_form_constant(a: float, alpha0: float) -> float:
    """c_{a,alpha_0} = max{alpha_0/2, sqrt(a + alpha_0 sqrt(a))}."""
    return max(alpha0 / 2.0, math.sqrt(a + alpha0 * math.sqrt(a)))


def sample_family(d: DiscreteDomain, n: int, seed: int):
    """(label, values) pairs: n seeded random Neumann cosine series plus the
    constant and the resolved (eps >= 2h) instanton families."""
    rng = np.random.default_rng(seed)
    for i in range(n):
        yield f"random[{i}]", random_cosine_field(d, rng)
    yield "constant", np.ones(d.shape)
    for mult in (4, 2):
        eps = mult * d.h
        yield f"interior_instanton(eps={eps:g})", sample_instanton(
            d, InstantonSpec(eps, box_center(d))
        ).values
        if d.kind == "box":
            yield f"boundary_instanton(eps={eps:g})", sample_instanton(
                d, InstantonSpec(eps, face_center(d))
            ).values


def verify_inequalities(
    d: DiscreteDomain,
    a: float,
    alpha0_proxy: float,
    threshold: float,
    n_samples: int,
    seed: int,
    tol_disc: float,
    cherrier_eps=CHERRIER_EPS,
) -> VerifyResult:
    """All margins are relative: (rhs - lhs) / lhs, failing below -tol_disc.

    The Hoelder sub-check delta <= |u|_2/||u|| is exact on the grid and is held
    to 1e-12 instead of tol_disc.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    p = Params(a=a, alpha=alpha0_proxy, N=d.N)
    T = threshold
    c = square_form_constant(a, alpha0_proxy)
    names = ["main", "holder", "sum_form", "square_form"] + [
        f"cherrier(eps={e:g})" for e in cherrier_eps
    ]
    tallies = {k: CheckTally(k) for k in names}
    bad: list[Counterexample] = []

    def check(name, label, margin, tol, values):
        if not tallies[name].add(label, margin, tol):
            bad.append(Counterexample(name, label, margin, values))

    samples = list(sample_family(d, n_samples, seed)) if n_samples > 0 else []
    for label, u in samples:
        rep = report(d, u, p)
        H = rep.h1_norm_sq
        l2 = rep.l2
        grad = math.sqrt(gradient_sq_integral(d, u))
        lhs = T * lp_norm(d, u, p.two_star) ** 2
        check("main", label, (rep.psi - T) / T, tol_disc, u)
        holder_bound = l2 / math.sqrt(H)
        check("holder", label, (holder_bound - rep.delta) / holder_bound, HOLDER_SLACK, u)
        check("sum_form", label, (H + alpha0_proxy * math.sqrt(H) * l2 - lhs) / lhs, tol_disc, u)
        check("square_form", label, ((grad + c * l2) ** 2 - lhs) / lhs, tol_disc, u)
        for e in cherrier_eps:
            rhs = (1.0 + e) * H + alpha0_proxy**2 / (4.0 * e) * l2 * l2
            check(f"cherrier(eps={e:g})", label, (rhs - lhs) / lhs, tol_disc, u)

    if not samples:
        tallies = {}
    return VerifyResult(
        alpha0_proxy=alpha0_proxy,
        threshold=T,
        tol_disc=tol_disc,
        c_const=c,
        n_samples=n_samples,
        tallies=tallies,
        counterexamples=bad,
    )


def constant_main_margin(a: float, measure: float, alpha: float, threshold: float, N: int) -> float:
    """Closed form of the main-inequality margin for u = const."""
    psi = a * measure ** (2.0 / N) * (1.0 + alpha / math.sqrt(a))
    return (psi - threshold) / threshold
