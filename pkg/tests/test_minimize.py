import math
from collections import defaultdict

import numpy as np
import pytest
from scipy.integrate import quad

from sobolev_lab import functionals as fn
from sobolev_lab import minimize as mz
from sobolev_lab.domain import build_box_grid, build_radial_ball_grid
from sobolev_lab.functionals import Params
from sobolev_lab.instanton import InstantonSpec, compute_S, face_center, instanton_profile, sample_instanton
from sobolev_lab.minimize import MinimizeConfig, Start, concentration_diagnostics, minimize_psi
from sobolev_lab.tolerance import discretization_tolerance

THRESHOLD = compute_S(5) / 2**0.4


@pytest.fixture(scope="module")
def large_a_run(box7):
    p = Params(12.0, 0.0, 5)
    return p, minimize_psi(box7, p, MinimizeConfig(max_iters=2000, grad_tol=1e-6))


@pytest.fixture(scope="module")
def small_a_run(box7):
    p = Params(1.0, 0.5, 5)
    return p, minimize_psi(box7, p, MinimizeConfig(max_iters=300))


def _start_values(d, p, starts):
    return [fn.psi_alpha(d, mz.start_field(d, s), p) for s in starts]


def test_config_validation():
    with pytest.raises(ValueError):
        MinimizeConfig(max_iters=0)
    with pytest.raises(ValueError):
        MinimizeConfig(grad_tol=0)
    with pytest.raises(ValueError):
        MinimizeConfig(armijo_c=1.0)
    with pytest.raises(ValueError):
        Start("spiral")


def test_large_a_beats_constant_and_stays_below_threshold(box7, large_a_run):
    p, res = large_a_run
    tol = discretization_tolerance(box7, p.a)
    assert res.s_alpha_estimate < p.a * box7.measure ** 0.4
    assert res.s_alpha_estimate <= THRESHOLD * (1 + tol)
    assert res.converged


def test_small_a_estimate_bounded_by_constant(box7, small_a_run):
    p, res = small_a_run
    const_value = p.a * box7.measure ** 0.4 * (1 + p.alpha / math.sqrt(p.a))
    assert res.s_alpha_estimate <= const_value + 1e-10
    starts = mz.default_starts(box7)
    assert all(res.s_alpha_estimate <= v + 1e-12 for v in _start_values(box7, p, starts))
    assert res.s_alpha_estimate == min(res.per_start_values)
    assert res.s_alpha_estimate > 0


def test_monotone_in_alpha(box7, large_a_run):
    p0, res0 = large_a_run
    res1 = minimize_psi(box7, p0.with_alpha(1.0), MinimizeConfig(max_iters=2000, grad_tol=1e-6))
    assert res0.s_alpha_estimate <= res1.s_alpha_estimate + 1e-6


def test_trace_descent_monotone(large_a_run, small_a_run):
    for _, res in (large_a_run, small_a_run):
        by_start = defaultdict(list)
        for row in res.trace_rows:
            by_start[row[1]].append(row[2])
        for psis in by_start.values():
            psis = np.array(psis)
            assert np.all(psis[1:] <= psis[:-1] * (1 + 1e-10))


def test_trace_columns_and_eps_consistency(large_a_run):
    _, res = large_a_run
    for row in res.trace_rows:
        assert len(row) == len(mz.TRACE_COLUMNS)
        assert row[7] == row[6] ** (-2 / 3)
        assert row[8] >= 0


def test_converged_gradient_and_el_residual(box7, large_a_run):
    p, res = large_a_run
    u = res.best_field.values
    g = fn.psi_gradient(box7, u, p)
    gn = math.sqrt(np.sum(box7.quad_weights * g * g)) / res.s_alpha_estimate
    tol = 1e-6
    assert gn <= tol
    v = fn.nehari_t(box7, u, p) * u
    res_field = fn.el_residual(box7, np.maximum(v, 1e-300), p)
    interior = ~box7.boundary_node_mask
    rel = np.max(np.abs(res_field[interior])) / np.max(v ** (p.two_star - 1))
    assert rel <= 10 * (tol + box7.h**2)


def test_renormalization_is_exact(box7):
    p = Params(2.0, 3.0, 5)
    u = 0.5 + np.random.default_rng(0).random(box7.shape)
    v = mz._normalize(box7, u, p.two_star)
    assert fn.psi_alpha(box7, v, p) == pytest.approx(fn.psi_alpha(box7, u, p), rel=1e-13)
    P = np.sum(box7.quad_weights * v**p.two_star)
    assert P == pytest.approx(1.0, rel=1e-14)


def test_all_starts_diverging_is_reported(box7, monkeypatch):
    monkeypatch.setattr(mz, "start_field", lambda d, s: np.full(d.shape, np.nan))
    with pytest.raises(mz.SolverFailure, match="diverged"):
        minimize_psi(box7, Params(1.0, 0.0, 5), MinimizeConfig(max_iters=5))


def test_threads_do_not_change_result(box7):
    p = Params(1.0, 2.0, 5)
    a = minimize_psi(box7, p, MinimizeConfig(max_iters=40))
    b = minimize_psi(box7, p, MinimizeConfig(max_iters=40, threads=3))
    assert a.per_start_values == b.per_start_values
    assert a.trace_rows == b.trace_rows


def test_radial_default_starts_and_run(ball):
    starts = mz.default_starts(ball)
    assert all(s.kind != "boundary_instanton" for s in starts)
    res = minimize_psi(ball, Params(1.0, 0.0, 5), MinimizeConfig(max_iters=100))
    assert res.s_alpha_estimate <= ball.measure ** 0.4 + 1e-10
    with pytest.raises(ValueError):
        mz.start_field(ball, Start("boundary_instanton", epsilon=0.1))


# concentration diagnostics -------------------------------------------------------


def test_diag_constant_field(box9):
    diag = concentration_diagnostics(box9, np.ones(box9.shape))
    assert diag.max_value == 1.0
    assert diag.eps_scale == 1.0
    assert diag.argmax_node == (0.0,) * 5
    assert diag.boundary_distance == 0.0
    dist2 = sum(x**2 for x in box9.node_coords)
    masked = np.sum(box9.quad_weights[dist2 <= 1.0]) / box9.measure
    assert diag.mass_in_eps_ball_fraction == pytest.approx(masked, rel=1e-13)
    # |B(0,1) cap [0,1]^5| = |B_1| / 32; the node mask is only a coarse proxy
    assert diag.mass_in_eps_ball_fraction == pytest.approx(8 * math.pi**2 / 15 / 32, rel=0.1)


def test_diag_eps_scale_formula(box7):
    u = np.ones(box7.shape)
    u.flat[17] = 16.0
    diag = concentration_diagnostics(box7, u)
    assert diag.eps_scale == pytest.approx(16 ** (-2 / 3), abs=1e-12)
    assert diag.argmax_node == box7.node_point(17)


def test_diag_boundary_instanton(box9):
    eps = 2 * box9.h
    u = sample_instanton(box9, InstantonSpec(eps, face_center(box9))).values
    diag = concentration_diagnostics(box9, u)
    assert diag.boundary_distance <= 2 * box9.h
    assert diag.eps_scale == pytest.approx(eps, rel=1e-12)
    # R^N analogue: share of int U^{2*} inside the unit ball (scale-free)
    dens = lambda r: instanton_profile(5, r) ** (10 / 3) * r**4
    whole = quad(dens, 0, np.inf)[0]
    analogue = quad(dens, 0, 1.0)[0] / whole
    assert diag.mass_in_eps_ball_fraction >= 0.5 * analogue


def test_diag_radial_offcenter_cap():
    d = build_radial_ball_grid(5, 1.0, 2048)
    r = d.axes[0]
    eps = 0.2
    u = eps**-1.5 * (1.0 + 1e-9 * np.exp(-((r - 0.5) ** 2) / 1e-4))
    diag = concentration_diagnostics(d, u)
    assert diag.argmax_node[0] == pytest.approx(0.5, abs=d.h)
    assert diag.eps_scale == pytest.approx(eps, rel=1e-8)
    # nearly uniform density: the fraction is |B(P, eps)| / |B_1| = eps^5
    assert diag.mass_in_eps_ball_fraction == pytest.approx(eps**5, rel=1e-3)
    assert diag.boundary_distance == pytest.approx(0.5, abs=d.h)


def test_cap_fraction_limits():
    c = np.array([-1.0, 0.0, 1.0])
    np.testing.assert_allclose(mz._cap_fraction(5, c), [1.0, 0.5, 0.0], atol=1e-15)
