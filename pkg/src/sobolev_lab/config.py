"""Closed-schema run configuration (JSON) for the command line."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .domain import DiscreteDomain, build_box_grid, build_radial_ball_grid
from .minimize import MinimizeConfig, Start


class _Closed(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BoxDomain(_Closed):
    kind: Literal["box"] = "box"
    N: int = 5
    sides: list[float] = Field(default_factory=lambda: [1.0] * 5)
    points_per_axis: int = 9


class RadialDomain(_Closed):
    kind: Literal["radial_ball"]
    N: int = 5
    radius: float = 1.0
    n_points: int = 256


class ParamsConfig(_Closed):
    a: float = 1.0
    alpha: float = 0.0


class ConstantField(_Closed):
    type: Literal["constant"] = "constant"
    value: float = 1.0


class InstantonField(_Closed):
    type: Literal["instanton"]
    epsilon: float
    center: Union[Literal["face", "center"], list[float]] = "center"
    cutoff_radius: Optional[float] = None


class FileField(_Closed):
    type: Literal["file"]
    path: str


class StartConfig(_Closed):
    kind: Literal["constant", "boundary_instanton", "interior_instanton", "random"]
    epsilon: Optional[float] = None
    seed: Optional[int] = None


class MinimizeSettings(_Closed):
    max_iters: int = 400
    grad_tol: float = 1e-4
    step_rule: Literal["armijo_backtracking"] = "armijo_backtracking"
    armijo_c: float = 1e-4
    initial_step: float = 1e-3
    normalize_every: int = 10
    starts: Optional[list[StartConfig]] = None


class Alpha0Settings(_Closed):
    bisect_tol: float = 0.05
    margin: Optional[float] = None  # default: 4 * tol_disc * threshold

    @field_validator("bisect_tol")
    @classmethod
    def _positive(cls, v):
        if not v > 0:
            raise ValueError("bisect_tol must be positive")
        return v


class VerifySettings(_Closed):
    n_samples: int = 200
    alpha0_proxy: Optional[float] = None  # default: upper end of a fresh alpha0 bracket
    cherrier_eps: list[float] = Field(default_factory=lambda: [0.1, 1.0, 10.0])


class RunConfig(_Closed):
    domain: Union[BoxDomain, RadialDomain] = Field(default_factory=BoxDomain, discriminator="kind")
    params: ParamsConfig = Field(default_factory=ParamsConfig)
    field: Union[ConstantField, InstantonField, FileField] = Field(
        default_factory=ConstantField, discriminator="type"
    )
    minimize: MinimizeSettings = Field(default_factory=MinimizeSettings)
    alpha0: Alpha0Settings = Field(default_factory=Alpha0Settings)
    verify: VerifySettings = Field(default_factory=VerifySettings)
    seed: int = Field(default=1, ge=0, lt=2**64)
    output_dir: str = "out"

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    def build_domain(self) -> DiscreteDomain:
        dom = self.domain
        if isinstance(dom, BoxDomain):
            return build_box_grid(dom.N, dom.sides, dom.points_per_axis)
        return build_radial_ball_grid(dom.N, dom.radius, dom.n_points)

    def minimize_config(self, threads: int = 1) -> MinimizeConfig:
        m = self.minimize
        starts = None
        if m.starts is not None:
            starts = tuple(Start(s.kind, epsilon=s.epsilon, seed=s.seed) for s in m.starts)
        return MinimizeConfig(
            max_iters=m.max_iters,
            grad_tol=m.grad_tol,
            step_rule=m.step_rule,
            armijo_c=m.armijo_c,
            initial_step=m.initial_step,
            starts=starts,
            normalize_every=m.normalize_every,
            threads=threads,
        )


def load_config(path: Union[str, Path, None]) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.model_validate_json(Path(path).read_text())
