"""Discretized bounded domains: tensor boxes and radially reduced balls.

Both kinds carry positive quadrature weights and a per-axis first-derivative
operator (central differences inside, second-order one-sided at the ends).
No boundary condition is imposed on the stencil; Neumann is the natural
condition of the variational problems evaluated on these grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import gamma

MIN_DIMENSION = 5
MIN_RADIAL_POINTS = 16


class DomainError(ValueError):
    """Invalid domain construction or a field that does not fit its domain."""


def sphere_area(N: int) -> float:
    """Surface area of the unit (N-1)-sphere in R^N."""
    return 2.0 * math.pi ** (N / 2) / gamma(N / 2)


def ball_volume(N: int, R: float = 1.0) -> float:
    return math.pi ** (N / 2) / gamma(N / 2 + 1) * R**N


def derivative_matrix(n: int, h: float) -> np.ndarray:
    """Dense 1-D first-derivative matrix, second order everywhere."""
    D = np.zeros((n, n))
    for i in range(1, n - 1):
        D[i, i - 1] = -1.0
        D[i, i + 1] = 1.0
    D[0, :3] = [-3.0, 4.0, -1.0]
    D[-1, -3:] = [1.0, -4.0, 3.0]
    return D / (2.0 * h)


def _apply_along(M: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(M, u, axes=([1], [axis])), 0, axis)


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Quadrature nodes, weights and derivative stencils for Omega in R^N.

    For ``kind == "box"`` values live on an array of shape ``(n,) * N``;
    for ``kind == "radial_ball"`` they are radial profiles of shape ``(n,)``
    and the weights already include the sphere area times ``r**(N-1)``.
    """

    N: int
    kind: str
    axes: tuple[np.ndarray, ...]
    axis_weights: tuple[np.ndarray, ...]
    grid_spacing: tuple[float, ...]
    extent: tuple[float, ...]
    quad_weights: np.ndarray = field(repr=False)
    boundary_node_mask: np.ndarray = field(repr=False)
    _dmats: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.quad_weights.shape

    @property
    def n_nodes(self) -> int:
        return self.quad_weights.size

    @property
    def measure(self) -> float:
        return float(np.sum(self.quad_weights))

    @property
    def h(self) -> float:
        return max(self.grid_spacing)

    @property
    def domain_id(self) -> str:
        ext = ",".join(repr(float(e)) for e in self.extent)
        return f"{self.kind}:N={self.N}:n={self.shape[0]}:extent={ext}"

    @property
    def node_coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcast to the field shape (radii for radial)."""
        if self.kind == "radial_ball":
            return (self.axes[0],)
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def node_point(self, flat_index: int) -> tuple[float, ...]:
        idx = np.unravel_index(flat_index, self.shape)
        return tuple(float(ax[i]) for ax, i in zip(self.axes, idx))

    def boundary_distance(self, point: tuple[float, ...]) -> float:
        if self.kind == "radial_ball":
            return max(self.extent[0] - abs(point[0]), 0.0)
        return max(
            0.0, min(min(x, L - x) for x, L in zip(point, self.extent))
        )

    def grad(self, u: np.ndarray) -> list[np.ndarray]:
        """Per-axis discrete partial derivatives (du/dr for radial grids)."""
        return [_apply_along(D, u, k) for k, D in enumerate(self._dmats)]

    def grad_adjoint(self, comps: list[np.ndarray]) -> np.ndarray:
        """Euclidean transpose of :meth:`grad`: sum_k D_k^T c_k."""
        out = np.zeros(self.shape)
        for k, (D, c) in enumerate(zip(self._dmats, comps)):
            out += _apply_along(D.T, c, k)
        return out

    def neg_laplacian(self, u: np.ndarray) -> np.ndarray:
        """Weighted-adjoint Neumann Laplacian, W^{-1} sum_k D_k^T W D_k u.

        Satisfies ``<-Lap u, v>_W == sum_k <D_k u, D_k v>_W`` exactly, so it is
        the discrete operator whose quadratic form is gradient_sq_integral.
        """
        w = self.quad_weights
        return self.grad_adjoint([w * g for g in self.grad(u)]) / w


@dataclass(frozen=True)
class Field:
    """Node values tied to the domain they were sampled on."""

    values: np.ndarray
    domain_id: str

    @classmethod
    def on(cls, d: DiscreteDomain, values) -> "Field":
        arr = np.asarray(values, dtype=float)
        if arr.size != d.n_nodes:
            raise DomainError(
                f"field has {arr.size} values, domain expects {d.n_nodes}"
            )
        return cls(arr.reshape(d.shape), d.domain_id)


FieldLike = Union[Field, np.ndarray]


def values_of(d: DiscreteDomain, u: FieldLike) -> np.ndarray:
    """Node values of ``u`` shaped for ``d``; rejects foreign fields."""
    if isinstance(u, Field):
        if u.domain_id != d.domain_id:
            raise DomainError(
                f"field lives on {u.domain_id!r}, not on {d.domain_id!r}"
            )
        return u.values
    arr = np.asarray(u, dtype=float)
    if arr.size != d.n_nodes:
        raise DomainError(
            f"field has {arr.size} values, domain expects {d.n_nodes}"
        )
    return arr.reshape(d.shape)


def _check_dimension(N: int) -> None:
    if int(N) != N or N < MIN_DIMENSION:
        raise DomainError(f"N={N} is below paper hypothesis N >= 5")


def build_box_grid(N: int, side_lengths, points_per_axis: int) -> DiscreteDomain:
    """Tensor grid on [0, L_1] x ... x [0, L_N] with trapezoid weights."""
    _check_dimension(N)
    sides = tuple(float(s) for s in side_lengths)
    if len(sides) != N:
        raise DomainError(f"expected {N} side lengths, got {len(sides)}")
    if min(sides) <= 0:
        raise DomainError("side lengths must be positive")
    n = int(points_per_axis)
    if n < 3:
        raise DomainError("points_per_axis must be >= 3 for the gradient stencil")

    axes, wts, hs, dmats = [], [], [], []
    for L in sides:
        x = np.linspace(0.0, L, n)
        h = L / (n - 1)
        w = np.full(n, h)
        w[0] = w[-1] = h / 2
        axes.append(x)
        wts.append(w)
        hs.append(h)
        dmats.append(derivative_matrix(n, h))

    W = wts[0]
    for w in wts[1:]:
        W = np.multiply.outer(W, w)

    mask = np.zeros((n,) * N, dtype=bool)
    for k in range(N):
        idx = [slice(None)] * N
        idx[k] = 0
        mask[tuple(idx)] = True
        idx[k] = -1
        mask[tuple(idx)] = True

    return DiscreteDomain(
        N=int(N),
        kind="box",
        axes=tuple(axes),
        axis_weights=tuple(wts),
        grid_spacing=tuple(hs),
        extent=sides,
        quad_weights=W,
        boundary_node_mask=mask,
        _dmats=tuple(dmats),
    )


def build_radial_ball_grid(N: int, R: float, n_points: int) -> DiscreteDomain:
    """Cell-centred radial grid on the ball B_R.

    Nodes sit at cell midpoints ``(j + 1/2) * dr`` so that every weight
    ``|S^{N-1}| r**(N-1) dr`` is strictly positive.
    """
    _check_dimension(N)
    if R <= 0:
        raise DomainError("radius must be positive")
    n = int(n_points)
    if n < MIN_RADIAL_POINTS:
        raise DomainError(
            f"insufficient radial resolution: n_points={n} < {MIN_RADIAL_POINTS}"
        )
    dr = R / n
    r = (np.arange(n) + 0.5) * dr
    w = sphere_area(N) * r ** (N - 1) * dr
    mask = np.zeros(n, dtype=bool)
    mask[-1] = True
    return DiscreteDomain(
        N=int(N),
        kind="radial_ball",
        axes=(r,),
        axis_weights=(w,),
        grid_spacing=(dr,),
        extent=(float(R),),
        quad_weights=w,
        boundary_node_mask=mask,
        _dmats=(derivative_matrix(n, dr),),
    )


def integrate(d: DiscreteDomain, f: FieldLike) -> float:
    return float(np.sum(d.quad_weights * values_of(d, f)))


def gradient_sq_integral(d: DiscreteDomain, u: FieldLike) -> float:
    """Quadrature of |grad u|^2 with the domain's derivative stencils."""
    v = values_of(d, u)
    total = np.zeros(d.shape)
    for g in d.grad(v):
        total += g * g
    return float(np.sum(d.quad_weights * total))


def lp_norm(d: DiscreteDomain, u: FieldLike, p: float) -> float:
    if p < 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    v = np.abs(values_of(d, u))
    return float(np.sum(d.quad_weights * v**p)) ** (1.0 / p)
