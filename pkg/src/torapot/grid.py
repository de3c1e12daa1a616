"""Grid domains, scalar potentials, discrete measures and integration primitives.

Everything downstream (envelopes, Monge-Ampere operators, energies) consumes
these types.  All objects are immutable after construction; operations are
pure functions, so evaluation over scenario grids can be parallelised freely.

Conventions
-----------
* A potential is a real value per grid node, plus an optional boolean
  ``singular_mask``; masked nodes stand for the -infinity locus and are
  excluded from every measure-theoretic operation (the non-pluripolar
  convention on a grid).
* A measure is a nonnegative weight per node plus a scalar ``singular_mass``
  for mass carried on lower-dimensional subgradient images (atoms) once a
  density split has been performed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "GridDomain",
    "GradientBody",
    "ScalarField",
    "DiscreteMeasure",
    "ModelContext",
    "build_domain",
    "integrate",
    "superlevel_mass",
    "pointwise_max",
    "pointwise_min",
    "shift",
    "sup_rel",
]


def _as_bounds(dim: int, bounds) -> tuple[tuple[float, float], ...]:
    arr = np.asarray(bounds, dtype=float)
    if arr.ndim == 1:
        arr = np.tile(arr, (dim, 1))
    if arr.shape != (dim, 2):
        raise ValueError(f"bounds must be {dim} intervals, got shape {arr.shape}")
    for lo, hi in arr:
        if not hi > lo:
            raise ValueError(f"degenerate bounds [{lo}, {hi}]")
    return tuple((float(lo), float(hi)) for lo, hi in arr)


@dataclass(frozen=True)
class GridDomain:
    """Uniform node lattice on a box in dimension 1 or 2."""

    dim: int
    bounds: tuple[tuple[float, float], ...]
    resolution: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("unsupported dimension")
        if self.resolution < 3:
            raise ValueError("resolution must be at least 3 nodes per axis")

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.linspace(lo, hi, self.resolution) for lo, hi in self.bounds
        )

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (hi - lo) / (self.resolution - 1) for lo, hi in self.bounds
        )

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.dim

    @property
    def size(self) -> int:
        return self.resolution**self.dim

    @cached_property
    def points(self) -> np.ndarray:
        """All nodes as an (size, dim) array, C-order over the axes."""
        if self.dim == 1:
            pts = self.axes[0][:, None]
        else:
            g = np.meshgrid(*self.axes, indexing="ij")
            pts = np.stack([a.ravel() for a in g], axis=1)
        pts.setflags(write=False)
        return pts

    @property
    def diameter(self) -> float:
        return float(
            math.sqrt(sum((hi - lo) ** 2 for lo, hi in self.bounds))
        )

    def boundary_mask(self) -> np.ndarray:
        """True at nodes on the box boundary (the toric-divisor stand-in)."""
        pts = self.points
        out = np.zeros(self.size, dtype=bool)
        for k, (lo, hi) in enumerate(self.bounds):
            out |= np.isclose(pts[:, k], lo) | np.isclose(pts[:, k], hi)
        return out

    def same_as(self, other: "GridDomain") -> bool:
        return (
            self.dim == other.dim
            and self.bounds == other.bounds
            and self.resolution == other.resolution
        )


def build_domain(dim: int, bounds, resolution: int) -> GridDomain:
    """Uniform grid with `resolution` nodes per axis on the given box."""
    if dim not in (1, 2):
        raise ValueError("unsupported dimension")
    return GridDomain(dim=dim, bounds=_as_bounds(dim, bounds), resolution=int(resolution))


def _convex_polygon_ccw(vertices: np.ndarray) -> np.ndarray:
    """Validate and return the vertices of a convex polygon in CCW order."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValueError("polygon needs at least 3 vertices in R^2")
    c = v.mean(axis=0)
    ang = np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0])
    v = v[np.argsort(ang)]
    # convexity: all cross products of consecutive edges nonnegative
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    if np.any(cross < -1e-12 * (np.abs(v).max() + 1) ** 2):
        raise ValueError("gradient body vertices are not convex")
    return v


@dataclass(frozen=True)
class GradientBody:
    """Convex slope polytope containing the origin.

    Dimension 1: an interval [lo, hi].  Dimension 2: a convex polygon given
    by its vertices (stored CCW).  This is the discrete carrier of the
    positivity constraint on potentials: admissible potentials have all
    their subgradients inside the body.
    """

    dim: int
    interval: tuple[float, float] | None = None
    vertices: np.ndarray | None = None

    def __post_init__(self):
        if self.dim == 1:
            lo, hi = self.interval
            if not (lo < 0 < hi or (lo <= 0 <= hi)):
                raise ValueError("gradient body must contain the origin")
            if not hi > lo:
                raise ValueError("degenerate gradient body")
        elif self.dim == 2:
            v = _convex_polygon_ccw(self.vertices)
            object.__setattr__(self, "vertices", v)
            v.setflags(write=False)
            if not self.contains(np.zeros((1, 2)))[0]:
                raise ValueError("gradient body must contain the origin")
        else:
            raise ValueError("unsupported dimension")

    @classmethod
    def from_spec(cls, dim: int, spec) -> "GradientBody":
        """Build from an interval, a per-axis box, or explicit 2-D vertices."""
        arr = np.asarray(spec, dtype=float)
        if dim == 1:
            if arr.shape == (2,):
                return cls(dim=1, interval=(float(arr[0]), float(arr[1])))
            if arr.shape == (1, 2):
                return cls(dim=1, interval=(float(arr[0, 0]), float(arr[0, 1])))
            raise ValueError("1-D gradient body must be an interval")
        if arr.shape == (2, 2):  # per-axis box
            (ax, bx), (ay, by) = arr
            verts = [[ax, ay], [bx, ay], [bx, by], [ax, by]]
            return cls(dim=2, vertices=np.asarray(verts, dtype=float))
        if arr.ndim == 2 and arr.shape[1] == 2 and len(arr) >= 3:
            return cls(dim=2, vertices=arr)
        raise ValueError("2-D gradient body must be a box or vertex list")

    @classmethod
    def box(cls, dim: int, halfwidth: float | Sequence[float]) -> "GradientBody":
        hw = np.broadcast_to(np.asarray(halfwidth, dtype=float), (dim,))
        if dim == 1:
            return cls(dim=1, interval=(-float(hw[0]), float(hw[0])))
        return cls.from_spec(2, [[-hw[0], hw[0]], [-hw[1], hw[1]]])

    @cached_property
    def halfplanes(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with the body equal to {y : A @ y <= b} (dim 2 only)."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)  # outward for CCW
        norms = np.linalg.norm(normals, axis=1)
        normals = normals / norms[:, None]
        offsets = np.einsum("ij,ij->i", normals, v)
        return normals, offsets

    def volume(self) -> float:
        if self.dim == 1:
            lo, hi = self.interval
            return hi - lo
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def contains(self, y: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if self.dim == 1:
            lo, hi = self.interval
            return (y[:, 0] >= lo - tol) & (y[:, 0] <= hi + tol)
        A, b = self.halfplanes
        return np.all(y @ A.T <= b[None, :] + tol, axis=1)

    def support(self, direction: np.ndarray) -> float:
        """Support function max_{y in body} <y, d>."""
        d = np.asarray(direction, dtype=float)
        if self.dim == 1:
            lo, hi = self.interval
            return float(max(lo * d[0], hi * d[0]))
        return float((self.vertices @ d).max())

    def diameter(self) -> float:
        if self.dim == 1:
            lo, hi = self.interval
            return hi - lo
        v = self.vertices
        d2 = ((v[:, None, :] - v[None, :, :]) ** 2).sum(-1)
        return float(np.sqrt(d2.max()))

    def scale(self, t: float) -> "GradientBody":
        if t <= 0:
            raise ValueError("scale factor must be positive")
        if self.dim == 1:
            lo, hi = self.interval
            return GradientBody(dim=1, interval=(t * lo, t * hi))
        return GradientBody(dim=2, vertices=t * self.vertices)

    def minkowski(self, other: "GradientBody") -> "GradientBody":
        """Minkowski sum with another body (edge-vector merge in dim 2)."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        if self.dim == 1:
            a, b = self.interval
            c, d = other.interval
            return GradientBody(dim=1, interval=(a + c, b + d))
        sums = (self.vertices[:, None, :] + other.vertices[None, :, :]).reshape(-1, 2)
        from scipy.spatial import ConvexHull

        hull = ConvexHull(sums)
        return GradientBody(dim=2, vertices=sums[hull.vertices])


@dataclass(frozen=True)
class ScalarField:
    """A grid potential: values per node plus an optional singular mask."""

    domain: GridDomain
    values: np.ndarray
    singular_mask: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.shape[0] != self.domain.size:
            raise ValueError("values shape does not match domain")
        m = self.singular_mask
        if m is not None:
            m = np.asarray(m, dtype=bool).reshape(-1)
            if m.shape[0] != self.domain.size:
                raise ValueError("mask shape does not match domain")
            if not m.any():
                m = None
        if m is not None and not np.all(np.isfinite(v[~m])):
            raise ValueError("values must be finite outside the singular mask")
        if m is None and not np.all(np.isfinite(v)):
            raise ValueError("values must be finite outside the singular mask")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if m is not None:
            m = m.copy()
            m.setflags(write=False)
        object.__setattr__(self, "singular_mask", m)

    @property
    def mask(self) -> np.ndarray:
        """Boolean mask, always an array (all-False when no singular locus)."""
        if self.singular_mask is None:
            return np.zeros(self.domain.size, dtype=bool)
        return self.singular_mask

    @property
    def unmasked(self) -> np.ndarray:
        return ~self.mask

    def with_values(self, values, mask=None) -> "ScalarField":
        return ScalarField(self.domain, values, mask)

    def finite_values(self) -> np.ndarray:
        """Values with masked entries replaced by -inf (for max-like ops)."""
        v = self.values.copy()
        if self.singular_mask is not None:
            v[self.singular_mask] = -np.inf
        return v


def field_from_function(domain: GridDomain, fn) -> ScalarField:
    """Sample a callable on the node lattice."""
    pts = domain.points
    vals = np.asarray([fn(p) for p in pts], dtype=float)
    return ScalarField(domain, vals)


def field_from_values(domain: GridDomain, values, mask=None) -> ScalarField:
    return ScalarField(domain, np.asarray(values, dtype=float), mask)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Node-weighted measure with optional density bookkeeping.

    ``weights`` is the node-supported part (which may contain atoms);
    ``singular_mass`` collects mass classified as singular by a density
    split.  When ``density_wrt`` is set, ``density`` holds the
    node-wise Radon-Nikodym derivative against it.
    """

    domain: GridDomain
    weights: np.ndarray
    singular_mass: float = 0.0
    density_wrt: "DiscreteMeasure | None" = None
    density: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != self.domain.size:
            raise ValueError("weights shape does not match domain")
        if np.any(w < -1e-15 * max(1.0, abs(w).max() if w.size else 1.0)):
            raise ValueError("weights must be nonnegative")
        w = np.maximum(w, 0.0)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.singular_mass < 0:
            raise ValueError("singular mass must be nonnegative")
        if self.density is not None:
            d = np.asarray(self.density, dtype=float).reshape(-1)
            d.setflags(write=False)
            object.__setattr__(self, "density", d)

    @property
    def total(self) -> float:
        return float(math.fsum(self.weights) + self.singular_mass)

    def normalized(self) -> "DiscreteMeasure":
        t = self.total
        if t <= 0:
            raise ValueError("cannot normalize a zero measure")
        return DiscreteMeasure(
            self.domain, self.weights / t, self.singular_mass / t
        )

    def is_probability(self, tol: float = 1e-10) -> bool:
        return abs(self.total - 1.0) <= tol

    def rescaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.domain, c * self.weights, c * self.singular_mass)


def uniform_measure(domain: GridDomain, total: float = 1.0) -> DiscreteMeasure:
    w = np.full(domain.size, total / domain.size)
    return DiscreteMeasure(domain, w)


@dataclass(frozen=True)
class ModelContext:
    """The toric stand-in for (X, theta, omega).

    * ``gradient_body`` plays the cohomology class: admissible potentials
      have subgradients inside it, and its volume is the total mass of the
      minimal-singularity potential.
    * ``reference_potential`` / ``reference_density`` play omega and the
      normalized volume form omega^n (total mass one).
    """

    domain: GridDomain
    gradient_body: GradientBody
    reference_potential: ScalarField
    reference_density: DiscreteMeasure

    def __post_init__(self):
        if self.gradient_body.dim != self.domain.dim:
            raise ValueError("body dimension does not match domain")
        rho = self.reference_density
        if not rho.domain.same_as(self.domain):
            raise ValueError("reference density lives on a different domain")
        if rho.singular_mass > 1e-12:
            raise ValueError("reference density must have no singular part")
        if abs(rho.total - 1.0) > 1e-12:
            raise ValueError("reference density must have total mass one")
        interior = ~self.domain.boundary_mask()
        if np.any(rho.weights[interior] <= 0):
            raise ValueError("reference density must be positive at interior nodes")

    @property
    def dim(self) -> int:
        return self.domain.dim

    def zero_field(self) -> ScalarField:
        return ScalarField(self.domain, np.zeros(self.domain.size))

    def quadratic_field(self, scale: float = 1.0) -> ScalarField:
        pts = self.domain.points
        return ScalarField(self.domain, 0.5 * scale * (pts**2).sum(axis=1))

    def with_body(self, body: GradientBody) -> "ModelContext":
        # reference data is kept: it is tied to the reference potential,
        # not to the class polytope
        return ModelContext(self.domain, body, self.reference_potential, self.reference_density)


def _check_same_domain(*objs):
    d0 = objs[0].domain
    for o in objs[1:]:
        if not o.domain.same_as(d0):
            raise ValueError("domain mismatch")


def integrate(g, mu: DiscreteMeasure, singular_value: float | None = None) -> float:
    """Integral of a node function against a discrete measure.

    ``g`` may be a ScalarField or a plain value array.  Masked nodes of g
    must carry no mu-mass (the non-pluripolar convention); the singular part
    of mu contributes only when an explicit ``singular_value`` is supplied.
    """
    if isinstance(g, ScalarField):
        _check_same_domain(g, mu)
        vals = g.values
        bad = g.mask & (mu.weights > 0)
        if bad.any():
            raise ValueError("integrand is singular on a node of positive mass")
    else:
        vals = np.asarray(g, dtype=float).reshape(-1)
        if vals.shape[0] != mu.domain.size:
            raise ValueError("domain mismatch")
    live = mu.weights > 0
    if not np.all(np.isfinite(vals[live])):
        raise ValueError("integrand is infinite on a node of positive mass")
    out = math.fsum(vals[live] * mu.weights[live])
    if mu.singular_mass > 0 and singular_value is not None:
        out += singular_value * mu.singular_mass
    return float(out)


def superlevel_mass(
    u: ScalarField,
    phi: ScalarField,
    t: float,
    mu: DiscreteMeasure,
    strict: bool = True,
) -> float:
    """Mass of {u < phi - t} (strict) or of {phi - u >= t}.

    Monotone nonincreasing in t; masked u-nodes count as -infinity.
    """
    if t < 0:
        raise ValueError("threshold t must be nonnegative")
    _check_same_domain(u, phi, mu)
    uu = u.finite_values()
    pp = phi.finite_values()
    if strict:
        sel = uu < pp - t
    else:
        sel = pp - uu >= t
    return float(math.fsum(mu.weights[sel]))


def pointwise_max(u: ScalarField, v: ScalarField) -> ScalarField:
    _check_same_domain(u, v)
    vals = np.maximum(u.finite_values(), v.finite_values())
    mask = u.mask & v.mask
    out = vals.copy()
    out[mask] = 0.0  # placeholder under the mask
    return ScalarField(u.domain, out, mask if mask.any() else None)


def pointwise_min(u: ScalarField, v: ScalarField) -> ScalarField:
    _check_same_domain(u, v)
    vals = np.minimum(u.finite_values(), v.finite_values())
    mask = u.mask | v.mask
    out = vals.copy()
    out[mask] = 0.0
    return ScalarField(u.domain, out, mask if mask.any() else None)


def shift(u: ScalarField, c: float) -> ScalarField:
    """u + c; the mask is unchanged (adding a finite constant, or -inf for
    c = -inf which masks everything and is rejected)."""
    if not np.isfinite(c):
        raise ValueError("shift constant must be finite")
    vals = u.values.copy()
    vals[u.unmasked] += c
    return ScalarField(u.domain, vals, u.singular_mask)


def sup_rel(u: ScalarField, phi: ScalarField) -> float:
    """sup over unmasked-u nodes of (u - phi)."""
    _check_same_domain(u, phi)
    live = u.unmasked & phi.unmasked
    if not live.any():
        raise ValueError("no common unmasked nodes")
    return float((u.values[live] - phi.values[live]).max())
