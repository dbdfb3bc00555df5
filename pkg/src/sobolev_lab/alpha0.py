"""Bracketing the critical constant alpha_0 and the Nehari cubic.

alpha_0 is where S_alpha first reaches S / 2^{2/N}.  On a grid equality is
undecidable, so evaluations are classified against ``threshold - margin`` and
the result is a bracket, never a point value.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import DiscreteDomain
from .functionals import Params
from .instanton import compute_S
from .minimize import MinimizeConfig, minimize_psi

log = logging.getLogger(__name__)

ALPHA_CAP = 1e3
BELOW = "below"
AT_OR_ABOVE = "at_or_above"


class ClassificationInversion(RuntimeError):
    """A 'below' alpha sits above an 'at/above' alpha: tol_disc or margin is off."""


def analytic_lower_bound(a: float, omega_measure: float, S: float, N: int = 5) -> float:
    """max{[S/(2|Omega|)^{2/N} - a]/sqrt(a), 0}: the constant-function test."""
    if not (a > 0 and omega_measure > 0 and S > 0):
        raise ValueError("a, |Omega| and S must all be positive")
    return max((S / (2.0 * omega_measure) ** (2.0 / N) - a) / math.sqrt(a), 0.0)


@dataclass(frozen=True)
class Alpha0Evaluation:
    alpha: float
    s_alpha: float
    classification: str
    eps_scale: float
    grid_limited: bool
    converged: bool


@dataclass
class Alpha0Estimate:
    lower: float
    upper: float
    threshold: float
    margin: float
    analytic_lower_bound: float
    evaluations: list[Alpha0Evaluation] = field(default_factory=list)
    upper_found: bool = True


def check_no_inversion(evaluations: list[Alpha0Evaluation]) -> None:
    below = [e.alpha for e in evaluations if e.classification == BELOW]
    above = [e.alpha for e in evaluations if e.classification == AT_OR_ABOVE]
    if below and above and max(below) >= min(above):
        raise ClassificationInversion(
            f"alpha={max(below):.6g} classified below while alpha={min(above):.6g} "
            "classified at/above; increase margin or refine the grid"
        )


def estimate_alpha0(
    d: DiscreteDomain,
    p_base: Params,
    cfg: MinimizeConfig,
    bisect_tol: float,
    margin: float,
    tol_disc: float = 0.0,
) -> Alpha0Estimate:
    """Bisection on alpha between the analytic lower bound and a doubled upper probe.

    The bracket's lower end starts at the analytic bound, which holds for every
    domain; it only moves up on a 'below' evaluation.  An alpha = 0 probe is
    recorded as a sanity anchor.
    """
    if not bisect_tol > 0:
        raise ValueError("bisect_tol must be positive")
    S = compute_S(p_base.N)
    threshold = S / 2.0 ** (2.0 / p_base.N)
    if not margin > tol_disc * threshold:
        raise ValueError(
            f"margin={margin:.3g} must exceed tol_disc*threshold={tol_disc * threshold:.3g}"
        )
    lb = analytic_lower_bound(p_base.a, d.measure, S, p_base.N)
    evaluations: list[Alpha0Evaluation] = []

    def classify(alpha: float) -> str:
        res = minimize_psi(d, p_base.with_alpha(alpha), cfg)
        s = res.s_alpha_estimate
        cls = BELOW if s < threshold - margin else AT_OR_ABOVE
        ev = Alpha0Evaluation(
            alpha=alpha,
            s_alpha=s,
            classification=cls,
            eps_scale=res.concentration.eps_scale,
            grid_limited=res.concentration.eps_scale < 2 * d.h,
            converged=res.converged,
        )
        evaluations.append(ev)
        log.info("alpha=%.6g  S_alpha~%.10g  %s%s", alpha, s, cls,
                 "  (grid-limited)" if ev.grid_limited else "")
        check_no_inversion(evaluations)
        return cls

    classify(0.0)
    lower = lb
    upper = lb + 10.0 * (1.0 + math.sqrt(p_base.a))
    upper_found = True
    while classify(upper) == BELOW:
        lower = upper
        if upper >= ALPHA_CAP:
            upper_found = False
            break
        upper = min(lb + 2.0 * (upper - lb), ALPHA_CAP)

    if upper_found:
        while upper - lower > bisect_tol:
            mid = 0.5 * (lower + upper)
            if classify(mid) == BELOW:
                lower = mid
            else:
                upper = mid
    else:
        upper = math.inf

    return Alpha0Estimate(
        lower=lower,
        upper=upper,
        threshold=threshold,
        margin=margin,
        analytic_lower_bound=lb,
        evaluations=evaluations,
        upper_found=upper_found,
    )


def _cubic(A: float, B: float, C: float, s: float) -> float:
    return A * s + B - C * s**3


def solve_nehari_cubic(A: float, B: float, C: float) -> float:
    """Unique positive root of A s + B - C s^3 = 0 (A, C > 0, B >= 0).

    The cubic is concave on s > 0 with value B >= 0 at the origin, so there
    is exactly one sign change.  Newton starts at ((A+B)/C)^{1/3} + 1 and is
    safeguarded by a bisection bracket.
    """
    if not (A > 0 and C > 0 and B >= 0):
        raise ValueError(f"need A > 0, B >= 0, C > 0; got A={A}, B={B}, C={C}")
    lo = 0.0
    hi = 1.0 + max(A / C, B / C)  # Cauchy bound for s^3 - (A/C) s - B/C
    s = min(((A + B) / C) ** (1.0 / 3.0) + 1.0, hi)
    for _ in range(200):
        h = _cubic(A, B, C, s)
        if h > 0:
            lo = s
        elif h < 0:
            hi = s
        else:
            return s
        dh = A - 3.0 * C * s * s
        nxt = s - h / dh if dh != 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if nxt == s or abs(nxt - s) <= 4 * np.finfo(float).eps * s:
            s = nxt
            break
        s = nxt
    return float(s)
