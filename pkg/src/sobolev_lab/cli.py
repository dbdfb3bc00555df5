"""Command-line front end: report | minimize | alpha0 | verify.

Exit codes: 0 success, 1 validation error, 2 solver failure,
3 counterexample found by ``verify``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from pydantic import ValidationError

from . import functionals as fn
from .alpha0 import ClassificationInversion, estimate_alpha0
from .config import ConstantField, FileField, InstantonField, RunConfig, load_config
from .domain import DiscreteDomain, DomainError
from .instanton import InstantonSpec, box_center, compute_S, face_center, sample_instanton
from .io import FieldFileError, read_field, write_field, write_report, write_trace
from .minimize import TRACE_COLUMNS, SolverFailure, Start, default_starts, minimize_psi
from .tolerance import discretization_tolerance
from .verify import verify_inequalities

log = logging.getLogger("sobolev_lab")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_COUNTEREXAMPLE = 0, 1, 2, 3


def _grid_items(d: DiscreteDomain) -> list[tuple[str, object]]:
    return [
        ("domain_id", d.domain_id),
        ("kind", d.kind),
        ("N", d.N),
        ("resolution", d.shape[0]),
        ("n_nodes", d.n_nodes),
        ("measure", d.measure),
        ("grid_spacing", d.h),
    ]


def _params(cfg: RunConfig, d: DiscreteDomain, alpha=None) -> fn.Params:
    return fn.Params(
        a=cfg.params.a, alpha=cfg.params.alpha if alpha is None else alpha, N=d.N
    )


def _field_values(cfg: RunConfig, d: DiscreteDomain):
    spec = cfg.field
    if isinstance(spec, ConstantField):
        return spec.value + 0.0 * d.quad_weights, f"constant({spec.value:g})"
    if isinstance(spec, InstantonField):
        if spec.center == "face":
            center = face_center(d)
        elif spec.center == "center":
            center = box_center(d)
        else:
            center = tuple(spec.center)
        inst = InstantonSpec(spec.epsilon, center, spec.cutoff_radius)
        return sample_instanton(d, inst).values, f"instanton(eps={spec.epsilon:g})"
    assert isinstance(spec, FileField)
    return read_field(Path(spec.path), d).values, f"file({spec.path})"


def _minimize_config(cfg: RunConfig, d: DiscreteDomain, threads: int):
    mcfg = cfg.minimize_config(threads)
    if mcfg.starts is None:
        # The default random start follows the run seed.
        starts = tuple(
            Start("random", seed=cfg.seed) if s.kind == "random" else s
            for s in default_starts(d)
        )
        mcfg = replace(mcfg, starts=starts)
    return mcfg


def _alpha0_margin(cfg: RunConfig, tol: float, threshold: float) -> float:
    if cfg.alpha0.margin is not None:
        return cfg.alpha0.margin
    return max(4.0 * tol, 1e-3) * threshold


def cmd_report(cfg: RunConfig, out: Path, threads: int) -> int:
    d = cfg.build_domain()
    values, label = _field_values(cfg, d)
    p = _params(cfg, d)
    rep = fn.report(d, values, p)
    items = [("command", "report")] + _grid_items(d)
    items += [("a", p.a), ("alpha", p.alpha), ("field", label)]
    items += list(rep.as_dict().items())
    write_report(out / "report.txt", items)
    return EXIT_OK


def cmd_minimize(cfg: RunConfig, out: Path, threads: int) -> int:
    d = cfg.build_domain()
    p = _params(cfg, d)
    mcfg = _minimize_config(cfg, d, threads)
    tol = discretization_tolerance(d, p.a)
    threshold = compute_S(d.N) / 2.0 ** (2.0 / d.N)
    items = [("command", "minimize")] + _grid_items(d) + [("a", p.a), ("alpha", p.alpha)]
    try:
        res = minimize_psi(d, p, mcfg)
    except SolverFailure as exc:
        write_report(out / "report.txt", items + [("status", "solver_failure"), ("error", exc)])
        log.error("%s", exc)
        return EXIT_SOLVER
    write_trace(out / "trace.csv", TRACE_COLUMNS, res.trace_rows)
    write_field(out / "minimizer.field", d, res.best_field.values)
    c = res.concentration
    items += [
        ("status", "ok"),
        ("s_alpha_estimate", res.s_alpha_estimate),
        ("tol_disc", tol),
        ("threshold", threshold),
        ("below_threshold_upper_bound", res.s_alpha_estimate <= threshold * (1 + tol)),
        ("converged", res.converged),
        ("max_value", c.max_value),
        ("eps_scale", c.eps_scale),
        ("argmax_node", c.argmax_node),
        ("boundary_distance", c.boundary_distance),
        ("mass_in_eps_ball_fraction", c.mass_in_eps_ball_fraction),
        ("grid_limited", c.eps_scale < 2 * d.h),
    ]
    for i, sr in enumerate(res.start_results):
        items += [
            (f"start.{i}.label", sr.start.label),
            (f"start.{i}.psi", sr.psi),
            (f"start.{i}.iterations", sr.iterations),
            (f"start.{i}.status", sr.status),
        ]
    write_report(out / "report.txt", items)
    return EXIT_OK


def _run_alpha0(cfg: RunConfig, d: DiscreteDomain, threads: int):
    p = _params(cfg, d, alpha=0.0)
    tol = discretization_tolerance(d, p.a)
    threshold = compute_S(d.N) / 2.0 ** (2.0 / d.N)
    margin = _alpha0_margin(cfg, tol, threshold)
    est = estimate_alpha0(
        d, p, _minimize_config(cfg, d, threads), cfg.alpha0.bisect_tol, margin, tol_disc=tol
    )
    return est, tol


def cmd_alpha0(cfg: RunConfig, out: Path, threads: int) -> int:
    d = cfg.build_domain()
    items = [("command", "alpha0")] + _grid_items(d) + [("a", cfg.params.a)]
    try:
        est, tol = _run_alpha0(cfg, d, threads)
    except (SolverFailure, ClassificationInversion) as exc:
        write_report(out / "report.txt", items + [("status", "solver_failure"), ("error", exc)])
        log.error("%s", exc)
        return EXIT_SOLVER
    items += [
        ("status", "ok"),
        ("lower", est.lower),
        ("upper", est.upper),
        ("upper_found", est.upper_found),
        ("threshold", est.threshold),
        ("margin", est.margin),
        ("tol_disc", tol),
        ("analytic_lower_bound", est.analytic_lower_bound),
        ("n_evaluations", len(est.evaluations)),
    ]
    for i, ev in enumerate(est.evaluations):
        items += [
            (f"eval.{i}.alpha", ev.alpha),
            (f"eval.{i}.s_alpha", ev.s_alpha),
            (f"eval.{i}.classification", ev.classification),
            (f"eval.{i}.eps_scale", ev.eps_scale),
            (f"eval.{i}.grid_limited", ev.grid_limited),
        ]
    write_report(out / "report.txt", items)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path, threads: int) -> int:
    d = cfg.build_domain()
    items = [("command", "verify")] + _grid_items(d) + [("a", cfg.params.a)]
    tol = discretization_tolerance(d, cfg.params.a)
    threshold = compute_S(d.N) / 2.0 ** (2.0 / d.N)
    if cfg.verify.alpha0_proxy is not None:
        alpha_hat, source = cfg.verify.alpha0_proxy, "config"
    else:
        try:
            est, _ = _run_alpha0(cfg, d, threads)
        except (SolverFailure, ClassificationInversion) as exc:
            write_report(out / "report.txt", items + [("status", "solver_failure"), ("error", exc)])
            return EXIT_SOLVER
        alpha_hat, source = est.upper, "alpha0_bracket_upper"
    res = verify_inequalities(
        d,
        cfg.params.a,
        alpha_hat,
        threshold,
        cfg.verify.n_samples,
        cfg.seed,
        tol,
        cherrier_eps=tuple(cfg.verify.cherrier_eps),
    )
    items += [
        ("alpha0_proxy", alpha_hat),
        ("alpha0_proxy_source", source),
        ("threshold", threshold),
        ("tol_disc", tol),
        ("c_a_alpha0", res.c_const),
        ("n_samples", res.n_samples),
        ("seed", cfg.seed),
    ]
    for name, t in res.tallies.items():
        items += [
            (f"check.{name}.passed", t.passed),
            (f"check.{name}.failed", t.failed),
            (f"check.{name}.worst_margin", t.worst_margin),
            (f"check.{name}.worst_sample", t.worst_sample),
        ]
    items.append(("counterexamples", len(res.counterexamples)))
    for i, ce in enumerate(res.counterexamples):
        path = out / f"counterexample_{i}.field"
        write_field(path, d, ce.values)
        items += [
            (f"counterexample.{i}.check", ce.check),
            (f"counterexample.{i}.sample", ce.label),
            (f"counterexample.{i}.margin", ce.margin),
            (f"counterexample.{i}.file", path.name),
        ]
    write_report(out / "report.txt", items)
    return EXIT_COUNTEREXAMPLE if res.counterexamples else EXIT_OK


COMMANDS = {
    "report": cmd_report,
    "minimize": cmd_minimize,
    "alpha0": cmd_alpha0,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sobolev-lab",
        description="Minimize and verify the sharp Sobolev-quotient functional on discrete domains.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
    parser.add_argument("--threads", type=int, default=1, help="concurrent minimizer starts")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
            cfg = RunConfig.model_validate(cfg.model_dump())
        if args.threads < 1:
            raise ValueError("--threads must be >= 1")
        out = args.out if args.out is not None else Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args.threads)
    except (ValidationError, DomainError, FieldFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
