"""Discrete Monge-Ampere operators: Alexandrov measures, masses, densities,
mixed and perturbed measures.

The measure of a convex grid potential assigns to each node the volume of
its subgradient cell, clipped to the gradient body.  Masked nodes carry no
mass and impose no constraints (non-pluripolar convention).  Domain-boundary
nodes keep their outward normal cones, so the minimal-singularity potential
carries the full body volume; atoms appear at kinks as positive cell volumes
concentrated on single nodes.

Perturbations u + t*r live in the dilated body (1+t)*body: adding t copies
of the reference form enlarges the class polytope accordingly, which is what
makes the binomial expansion into mixed measures exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convex import HullStructure, hull_structure
from .grid import (
    DiscreteMeasure,
    GradientBody,
    ModelContext,
    ScalarField,
    build_domain,
)

__all__ = [
    "ma_measure",
    "mass",
    "ma_density",
    "mixed_ma",
    "perturbed_ma",
    "PerturbedMA",
    "slope_excess",
    "plurifine_restriction",
    "build_context",
]

CONVEXITY_TOL = 1e-10
ATOM_FACTOR = 50.0


def _checked_structure(
    ctx: ModelContext, u: ScalarField, with_components: bool = False
) -> HullStructure:
    if not u.domain.same_as(ctx.domain):
        raise ValueError("domain mismatch")
    hs = hull_structure(u, ctx.gradient_body, with_components)
    live = u.unmasked
    gap = np.abs(u.values[live] - hs.envelope_values[live]).max()
    if gap > CONVEXITY_TOL:
        raise ValueError(f"non-convex input (envelope defect {gap:.3e})")
    return hs


def ma_measure(ctx: ModelContext, u: ScalarField) -> DiscreteMeasure:
    """Alexandrov Monge-Ampere measure of a convex admissible potential.

    Slopes leaving the body are projected by the body clipping itself; use
    :func:`slope_excess` to detect and report such clamping.
    """
    hs = _checked_structure(ctx, u)
    return DiscreteMeasure(ctx.domain, hs.cell_weights)


def mass(ctx: ModelContext, u: ScalarField) -> float:
    return ma_measure(ctx, u).total


def slope_excess(ctx: ModelContext, u: ScalarField) -> float:
    """How far the hull slopes of u exit the gradient body (0 when inside)."""
    hs = hull_structure(u, ctx.gradient_body)
    return hs.slope_excess


def ma_density(
    ctx: ModelContext, u: ScalarField, atom_factor: float = ATOM_FACTOR
) -> DiscreteMeasure:
    """Split MA(u) into an absolutely continuous part and singular atoms.

    A node is singular when its cell mass exceeds ``atom_factor`` times the
    reference cell mass there; its mass moves to ``singular_mass`` and its
    density is reported as zero.
    """
    mu = ma_measure(ctx, u)
    ref = ctx.reference_density.weights
    w = mu.weights
    singular = w > atom_factor * ref
    density = np.zeros_like(w)
    ac = ~singular & (ref > 0)
    density[ac] = w[ac] / ref[ac]
    weights_ac = np.where(singular, 0.0, w)
    s_mass = float(math.fsum(w[singular]))
    return DiscreteMeasure(
        ctx.domain,
        weights_ac,
        singular_mass=s_mass,
        density_wrt=ctx.reference_density,
        density=density,
    )


def _add_fields(u: ScalarField, v: ScalarField, cu: float = 1.0, cv: float = 1.0) -> ScalarField:
    vals = cu * u.finite_values() + cv * v.finite_values()
    mask = u.mask | v.mask
    vals = np.where(mask, 0.0, vals)
    return ScalarField(u.domain, vals, mask if mask.any() else None)


def mixed_ma(ctx: ModelContext, u: ScalarField, v: ScalarField, j: int) -> DiscreteMeasure:
    """Mixed Alexandrov measure with j copies of u and (dim - j) of v.

    Computed by polarization; the (u + v)-measure is taken in the Minkowski
    sum of the bodies (= the doubled body), which preserves total-mass
    multilinearity exactly.
    """
    n = ctx.dim
    if not 0 <= j <= n:
        raise ValueError(f"mixed index j={j} out of range 0..{n}")
    if j == n:
        return ma_measure(ctx, u)
    if j == 0:
        return ma_measure(ctx, v)
    ctx2 = ctx.with_body(ctx.gradient_body.scale(2.0))
    w_uv = ma_measure(ctx2, _add_fields(u, v)).weights
    w_u = ma_measure(ctx, u).weights
    w_v = ma_measure(ctx, v).weights
    w = 0.5 * (w_uv - w_u - w_v)
    return DiscreteMeasure(ctx.domain, np.maximum(w, 0.0))


@dataclass(frozen=True)
class PerturbedMA:
    """Direct and expanded measures of u + t*(reference potential)."""

    t: float
    direct: DiscreteMeasure
    expansion: DiscreteMeasure
    density: np.ndarray  # density S(t) of the direct measure w.r.t. reference
    singular_mass: float


def mixed_family(ctx: ModelContext, u: ScalarField) -> list[np.ndarray]:
    """Weights of the mixed measures mu_j = mixed(u[j], r[dim-j]), j = 0..dim."""
    r = ctx.reference_potential
    return [mixed_ma(ctx, u, r, j).weights for j in range(ctx.dim + 1)]


def perturbed_ma(
    ctx: ModelContext,
    u: ScalarField,
    t: float,
    mixed: list[np.ndarray] | None = None,
) -> PerturbedMA:
    """MA(u + t*r) in the dilated body, plus its binomial expansion.

    Both are returned for cross-checking; the expansion is
    sum_j C(n, j) t^(n-j) * mixed(u[j], r[n-j]).  Pass a precomputed
    ``mixed_family`` when scanning many t values.
    """
    if t < 0:
        raise ValueError("perturbation parameter t must be nonnegative")
    n = ctx.dim
    r = ctx.reference_potential
    if t == 0:
        direct = ma_measure(ctx, u)
    else:
        ctx_t = ctx.with_body(ctx.gradient_body.scale(1.0 + t))
        direct = ma_measure(ctx_t, _add_fields(u, r, 1.0, t))
    if mixed is None:
        mixed = mixed_family(ctx, u)
    w = np.zeros(ctx.domain.size)
    for j in range(n + 1):
        w += math.comb(n, j) * t ** (n - j) * mixed[j]
    expansion = DiscreteMeasure(ctx.domain, w)
    ref = ctx.reference_density.weights
    dw = direct.weights
    singular = dw > ATOM_FACTOR * ref * (1.0 + t) ** n
    density = np.zeros_like(dw)
    ac = ~singular & (ref > 0)
    density[ac] = dw[ac] / ref[ac]
    s_mass = float(math.fsum(dw[singular]))
    return PerturbedMA(t, direct, expansion, density, s_mass)


def plurifine_restriction(
    ctx: ModelContext,
    u: ScalarField,
    u_cut: ScalarField,
    in_set: np.ndarray,
):
    """Restriction data for the locality check on the open node set.

    Returns ``(interior, w_u, w_cut)``: the discrete interior of ``in_set``
    (nodes all of whose binding-constraint neighbors, under either hull,
    stay inside the set) and the two weight vectors.
    """
    hs_u = _checked_structure(ctx, u, with_components=True)
    hs_c = _checked_structure(ctx, u_cut, with_components=True)
    interior = in_set.copy()
    for hs in (hs_u, hs_c):
        indptr, indices = hs.neighbor_indptr, hs.neighbor_indices
        for i in np.nonzero(in_set)[0]:
            nb = indices[indptr[i] : indptr[i + 1]]
            if len(nb) and not in_set[nb].all():
                interior[i] = False
        # a flat supporting plane couples every node it carries: if part of
        # it leaves the set, no cell on it is determined locally
        for comp in hs.flat_components:
            if not in_set[comp].all():
                interior[comp] = False
    return interior, hs_u.cell_weights, hs_c.cell_weights


def build_context(
    dim: int,
    bounds=(-1.0, 1.0),
    resolution: int = 201,
    body: GradientBody | None = None,
    body_halfwidth: float = 2.0,
) -> ModelContext:
    """Default model context: quadratic reference potential on a box, with
    the reference density equal to its normalized Monge-Ampere measure.

    The default body is strictly larger than the reference slope range, so
    the reference measure carries divisor mass at the box boundary and
    minimal-singularity potentials have finite entropy against it.
    """
    domain = build_domain(dim, bounds, resolution)
    if body is None:
        body = GradientBody.box(dim, body_halfwidth)
    pts = domain.points
    r = ScalarField(domain, 0.5 * (pts**2).sum(axis=1))
    hs = hull_structure(r, body)
    w = hs.cell_weights
    total = float(math.fsum(w))
    rho = DiscreteMeasure(domain, w / total)
    return ModelContext(domain, body, r, rho)
