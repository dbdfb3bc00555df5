"""Multi-start projected gradient descent for S_alpha = inf Psi_alpha."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import betainc

from .domain import DiscreteDomain, Field, FieldLike, values_of
from .functionals import Params, _parts, _psi_and_gradient, _nonzero
from .instanton import InstantonSpec, box_center, face_center, sample_instanton

log = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "iter",
    "start_id",
    "psi",
    "beta",
    "delta",
    "grad_norm",
    "max_value",
    "eps_scale",
    "boundary_distance",
)

POSITIVITY_FLOOR = 1e-14
# Largest relative increase of Psi tolerated from the |u| + floor projection.
PROJECTION_SLACK = 1e-10
START_KINDS = ("constant", "boundary_instanton", "interior_instanton", "random")


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Start:
    kind: str
    epsilon: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in START_KINDS:
            raise ValueError(f"unknown start kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "random":
            return f"random(seed={self.seed})"
        if self.epsilon is not None:
            return f"{self.kind}(eps={self.epsilon:g})"
        return self.kind


@dataclass(frozen=True)
class MinimizeConfig:
    max_iters: int = 400
    grad_tol: float = 1e-4
    step_rule: str = "armijo_backtracking"
    armijo_c: float = 1e-4
    initial_step: float = 1e-3
    starts: Optional[tuple[Start, ...]] = None
    normalize_every: int = 10
    threads: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.step_rule != "armijo_backtracking":
            raise ValueError(f"unsupported step rule {self.step_rule!r}")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.normalize_every < 1:
            raise ValueError("normalize_every must be >= 1")


def default_starts(d: DiscreteDomain) -> tuple[Start, ...]:
    eps = 4 * d.h
    if d.kind == "radial_ball":
        return (
            Start("constant"),
            Start("interior_instanton", epsilon=eps),
            Start("random", seed=1),
        )
    return (
        Start("constant"),
        Start("boundary_instanton", epsilon=eps),
        Start("interior_instanton", epsilon=eps),
        Start("random", seed=1),
    )


@dataclass(frozen=True)
class ConcentrationDiag:
    max_value: float
    eps_scale: float
    argmax_node: tuple[float, ...]
    boundary_distance: float
    mass_in_eps_ball_fraction: float


@dataclass
class StartResult:
    start: Start
    psi: float
    field: np.ndarray
    iterations: int
    converged: bool
    status: str
    trace: list = field(default_factory=list, repr=False)


@dataclass
class MinimizeResult:
    s_alpha_estimate: float
    best_field: Field
    per_start_values: list[float]
    iterations_used: list[int]
    concentration: ConcentrationDiag
    converged: bool
    start_results: list[StartResult] = field(default_factory=list, repr=False)

    @property
    def trace_rows(self) -> list[tuple]:
        return [row for sr in self.start_results for row in sr.trace]


def random_cosine_field(d: DiscreteDomain, rng: np.random.Generator, modes: int = 3) -> np.ndarray:
    """Smooth truncated cosine series; each term has zero normal derivative on the box faces.

    On radial grids the series runs in r/R with the same Neumann property at r = R.
    """
    if d.kind == "radial_ball":
        s = d.axes[0] / d.extent[0]
        out = np.full(d.shape, 1.0 + rng.random())
        for m in range(1, modes + 1):
            out = out + rng.normal(scale=1.0 / m) * np.cos(m * math.pi * s)
        return out
    out = np.full(d.shape, rng.normal())
    for _ in range(modes * d.N):
        ks = rng.integers(0, modes + 1, size=d.N)
        term = rng.normal() / (1.0 + float(np.sum(ks)))
        prod = np.ones(d.shape)
        for k, (x, L, m) in enumerate(zip(d.axes, d.extent, ks)):
            shape = [1] * d.N
            shape[k] = -1
            prod = prod * np.cos(m * math.pi * x / L).reshape(shape)
        out = out + term * prod
    return out


def start_field(d: DiscreteDomain, start: Start) -> np.ndarray:
    if start.kind == "constant":
        return np.ones(d.shape)
    if start.kind == "random":
        rng = np.random.default_rng(start.seed)
        return np.abs(random_cosine_field(d, rng)) + 0.1
    eps = start.epsilon if start.epsilon is not None else 4 * d.h
    if start.kind == "boundary_instanton":
        if d.kind == "radial_ball":
            raise ValueError("boundary instanton starts need a box domain")
        center = face_center(d)
    else:
        center = box_center(d)
    return sample_instanton(d, InstantonSpec(eps, center)).values


def _cap_fraction(N: int, c0: np.ndarray) -> np.ndarray:
    """Fraction of the unit (N-1)-sphere with cos(angle to a pole) >= c0."""
    c0 = np.clip(c0, -1.0, 1.0)
    half = 0.5 * betainc((N - 1) / 2, 0.5, 1.0 - c0 * c0)
    return np.where(c0 >= 0, half, 1.0 - half)


def concentration_diagnostics(d: DiscreteDomain, u: FieldLike) -> ConcentrationDiag:
    """Sup-norm blow-up diagnostics: M = max|u|, eps = M^{-2/(N-2)}, P = argmax."""
    v = _nonzero(d, u)
    av = np.abs(v)
    flat = int(np.argmax(av))  # first occurrence: lowest node index
    M = float(av.flat[flat])
    eps = M ** (-2.0 / (d.N - 2))
    P = d.node_point(flat)
    two_star = 2.0 * d.N / (d.N - 2)
    dens = d.quad_weights * av**two_star
    if d.kind == "radial_ball":
        r = d.axes[0]
        rp = P[0]
        if rp == 0.0:
            frac = (r <= eps).astype(float)
        else:
            # |x - P|^2 = r^2 + rp^2 - 2 r rp cos(theta) <= eps^2
            c0 = (r * r + rp * rp - eps * eps) / (2.0 * r * rp)
            frac = _cap_fraction(d.N, c0)
        inside = float(np.sum(dens * frac))
    else:
        sq = np.zeros(d.shape)
        for k, x in enumerate(d.axes):
            shape = [1] * d.N
            shape[k] = -1
            sq = sq + ((x - P[k]) ** 2).reshape(shape)
        inside = float(np.sum(dens[sq <= eps * eps]))
    return ConcentrationDiag(
        max_value=M,
        eps_scale=eps,
        argmax_node=P,
        boundary_distance=d.boundary_distance(P),
        mass_in_eps_ball_fraction=inside / float(np.sum(dens)),
    )


def _normalize(d: DiscreteDomain, v: np.ndarray, two_star: float) -> np.ndarray:
    P = float(np.sum(d.quad_weights * np.abs(v) ** two_star))
    return v / P ** (1.0 / two_star)


def _wnorm(d: DiscreteDomain, g: np.ndarray) -> float:
    return math.sqrt(float(np.sum(d.quad_weights * g * g)))


def _nehari_diag(d: DiscreteDomain, v: np.ndarray, p: Params) -> ConcentrationDiag:
    parts = _parts(d, v, p)
    t = (parts.H / parts.P) ** ((p.N - 2) / 4)
    return concentration_diagnostics(d, t * v)


def _run_start(
    d: DiscreteDomain, p: Params, cfg: MinimizeConfig, start_id: int, start: Start
) -> StartResult:
    ts = p.two_star
    u0 = np.asarray(start_field(d, start), dtype=float)
    if not np.all(np.isfinite(u0)):
        return StartResult(start, math.nan, u0, 0, False, "diverged", [])
    u = _normalize(d, u0, ts)
    psi, g, parts, b, dl = _psi_and_gradient(d, u, p)
    step = cfg.initial_step
    trace = []
    converged = False
    status = "max_iters"
    it = 0
    prev = None

    def record(it, psi, b, dl, gn, u):
        diag = _nehari_diag(d, u, p)
        trace.append(
            (it, start_id, psi, b, dl, gn, diag.max_value, diag.eps_scale, diag.boundary_distance)
        )

    for it in range(cfg.max_iters + 1):
        # u is normalized to |u|_{2*} = 1, so this is scale-free.
        gn = _wnorm(d, g) / psi
        if not (np.isfinite(psi) and np.isfinite(gn)):
            status = "diverged"
            break
        record(it, psi, b, dl, gn, u)
        if gn <= cfg.grad_tol:
            converged = True
            status = "converged"
            break
        if it == cfg.max_iters:
            break

        slope = -float(np.sum(d.quad_weights * g * g))
        t = step
        accepted = None
        while t > 1e-14 * cfg.initial_step:
            trial = u - t * g
            try:
                psi_t = _psi_and_gradient(d, trial, p)
            except ValueError:
                psi_t = None
            if psi_t is not None and np.isfinite(psi_t[0]) and psi_t[0] <= psi + cfg.armijo_c * t * slope:
                accepted = (trial, psi_t)
                break
            t *= 0.5
        if accepted is None:
            status = "line_search_stalled"
            break

        trial, (psi_n, g_n, parts, b_n, dl_n) = accepted
        # Psi is degree-zero homogeneous, so rescaling leaves psi and g*|u| invariant.
        scale = parts.P ** (1.0 / ts)
        u_new = trial / scale
        g_n = g_n * scale
        if (it + 1) % cfg.normalize_every == 0:
            proj = np.abs(u_new)
            proj = _normalize(d, proj + POSITIVITY_FLOOR * float(np.max(proj)), ts)
            cand = _psi_and_gradient(d, proj, p)
            if cand[0] <= psi_n * (1.0 + PROJECTION_SLACK):
                u_new = proj
                psi_n, g_n, parts, b_n, dl_n = cand

        s_vec = u_new - u
        y_vec = g_n - g
        sy = float(np.sum(d.quad_weights * s_vec * y_vec))
        ss = float(np.sum(d.quad_weights * s_vec * s_vec))
        # Barzilai-Borwein trial step, backtracked by Armijo next iteration.
        step = ss / sy if sy > 0 else 2.0 * t
        step = min(max(step, 1e-6 * cfg.initial_step), 1e6 * cfg.initial_step)

        u, psi, g, b, dl = u_new, psi_n, g_n, b_n, dl_n

    return StartResult(
        start=start,
        psi=float(psi),
        field=u,
        iterations=it,
        converged=converged,
        status=status,
        trace=trace,
    )


def minimize_psi(d: DiscreteDomain, p: Params, cfg: MinimizeConfig) -> MinimizeResult:
    if d.N != p.N:
        raise ValueError(f"params N={p.N} does not match domain N={d.N}")
    starts = cfg.starts if cfg.starts is not None else default_starts(d)
    if not starts:
        raise ValueError("at least one start is required")
    jobs = list(enumerate(starts))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda j: _run_start(d, p, cfg, *j), jobs))
    else:
        results = [_run_start(d, p, cfg, i, s) for i, s in jobs]

    finite = [r for r in results if np.isfinite(r.psi) and r.status != "diverged"]
    if not finite:
        raise SolverFailure(
            "all starts diverged: " + ", ".join(f"{r.start.label}={r.status}" for r in results)
        )
    best = min(finite, key=lambda r: r.psi)
    for r in results:
        log.debug("start %s: psi=%.12g iters=%d %s", r.start.label, r.psi, r.iterations, r.status)
    return MinimizeResult(
        s_alpha_estimate=best.psi,
        best_field=Field.on(d, best.field),
        per_start_values=[r.psi for r in results],
        iterations_used=[r.iterations for r in results],
        concentration=_nehari_diag(d, best.field, p),
        converged=best.converged,
        start_results=results,
    )
