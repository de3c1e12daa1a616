"""Convexity tests, discrete Legendre transforms and constrained envelopes.

The central object is the lower hull of the lifted node values.  It yields,
in one pass:

* the unconstrained convex envelope values at every node (for convexity
  tests),
* the subgradient cell of every node, clipped to the gradient body (the
  Alexandrov weights used by the Monge-Ampere operator),
* the vertices of those cells, which are exactly the candidate maximizer
  slopes for constrained-envelope evaluation (the "correction sweep" that
  augments the fixed slope lattice).

Cells at domain-boundary nodes keep their outward normal cones (clipped to
the body): the box boundary stands in for the toric divisors, so the
minimal-singularity potential absorbs the full body volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .grid import GradientBody, GridDomain, ModelContext, ScalarField

__all__ = [
    "DualGrid",
    "build_dual_grid",
    "HullStructure",
    "hull_structure",
    "is_convex",
    "is_admissible",
    "legendre",
    "biconjugate",
    "p_envelope",
    "contact_set",
]

_VERTICAL_TOL = 1e-9


def _lower_hull_indices(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Monotone-chain lower hull of (x_i, u_i) with x strictly increasing."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (u[i] - u[a]) - (u[b] - u[a]) * (x[i] - x[a])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.intp)


@dataclass(frozen=True)
class HullStructure:
    """Lower-hull data of a field: envelope values, cells, adjacency.

    ``flat_components`` lists groups of nodes supported by one common plane
    (coplanar lower facets).  Their cells are pinned jointly: any value
    change inside a flat component can move the cells of every node it
    touches, so locality arguments must treat a component as one unit.
    """

    domain: GridDomain
    body: GradientBody
    envelope_values: np.ndarray  # unconstrained hull values (valid on unmasked)
    cell_weights: np.ndarray  # body-clipped subgradient cell volume per node
    neighbor_indptr: np.ndarray  # CSR adjacency over binding constraints
    neighbor_indices: np.ndarray
    slope_candidates: np.ndarray  # (M, dim) candidate maximizer slopes in body
    slope_excess: float  # how far hull slopes exit the body (0 if inside)
    unmasked: np.ndarray
    flat_components: tuple = ()

    def neighbors(self, i: int) -> np.ndarray:
        return self.neighbor_indices[self.neighbor_indptr[i] : self.neighbor_indptr[i + 1]]


def _csr_from_sets(n: int, sets: dict[int, set[int]]) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(n + 1, dtype=np.intp)
    chunks = []
    for i in range(n):
        nb = sorted(sets.get(i, ()))
        indptr[i + 1] = indptr[i] + len(nb)
        if nb:
            chunks.append(np.asarray(nb, dtype=np.intp))
    indices = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.intp)
    return indptr, indices


def _hull_structure_1d(field: ScalarField, body: GradientBody, with_components: bool = False) -> HullStructure:
    dom = field.domain
    lo, hi = body.interval
    live = field.unmasked
    idx = np.nonzero(live)[0]
    xs = dom.points[idx, 0]
    us = field.values[idx]
    hull_local = _lower_hull_indices(xs, us)
    hx, hu = xs[hull_local], us[hull_local]
    # envelope values: piecewise-linear interpolation of the hull
    env_live = np.interp(xs, hx, hu)
    env = np.empty(dom.size)
    env[:] = np.interp(dom.points[:, 0], hx, hu)
    env[idx] = env_live
    # chord slopes of the hull
    if len(hx) >= 2:
        slopes = np.diff(hu) / np.diff(hx)
    else:
        slopes = np.empty(0)
    weights = np.zeros(dom.size)
    hull_global = idx[hull_local]
    left = np.concatenate([[-np.inf], slopes])
    right = np.concatenate([slopes, [np.inf]])
    cl = np.maximum(left, lo)
    cr = np.minimum(right, hi)
    weights[hull_global] = np.maximum(0.0, cr - cl)
    excess = 0.0
    if len(slopes):
        excess = max(0.0, float(slopes.max() - hi), float(lo - slopes.min()))
    # binding constraints: immediate unmasked neighbors
    sets: dict[int, set[int]] = {}
    for a, b in zip(idx[:-1], idx[1:]):
        sets.setdefault(int(a), set()).add(int(b))
        sets.setdefault(int(b), set()).add(int(a))
    indptr, indices = _csr_from_sets(dom.size, sets)
    cand = np.unique(np.clip(np.concatenate([slopes, [lo, hi, 0.0]]), lo, hi))
    return HullStructure(
        dom, body, env, weights, indptr, indices, cand[:, None], excess, live
    )


def _affine_fit(points: np.ndarray, values: np.ndarray):
    A = np.column_stack([np.ones(len(points)), points])
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    resid = values - A @ coef
    return coef, float(np.abs(resid).max())


def _hull_structure_2d(field: ScalarField, body: GradientBody, with_components: bool = False) -> HullStructure:
    from scipy.spatial import ConvexHull

    dom = field.domain
    live = field.unmasked
    idx = np.nonzero(live)[0]
    pts = dom.points[idx]
    vals = field.values[idx]
    scale = 1.0 + float(np.abs(vals).max())

    coef, resid = _affine_fit(pts, vals)
    if resid <= 1e-12 * scale:
        # globally affine data: gradient is constant, cells are normal cones
        grad = coef[1:]
        env = np.full(dom.size, np.inf)
        env[idx] = vals
        hull2 = ConvexHull(pts)
        hv = hull2.vertices  # local indices, CCW
        # only extreme points of the node set carry cells (normal cones,
        # pinned by their two ring neighbors); all other cones are flat
        sets: dict[int, set[int]] = {}
        active = [int(h) for h in hv]
        con_for = []
        nv = len(hv)
        for a in range(nv):
            i = int(hv[a])
            jprev, jnext = int(hv[(a - 1) % nv]), int(hv[(a + 1) % nv])
            sets.setdefault(i, set()).update((jprev, jnext))
            con_for.append(np.asarray([jprev, jnext], dtype=np.intp))
        weights_local, cand = _cells_from_constraints(pts, vals, active, con_for, body)
        weights = np.zeros(dom.size)
        weights[idx[np.asarray(active, dtype=np.intp)]] = weights_local
        excess = max(0.0, float(np.max(body.halfplanes[0] @ grad - body.halfplanes[1])))
        indptr, indices = _csr_from_sets(
            dom.size, {int(idx[i]): {int(idx[j]) for j in s} for i, s in sets.items()}
        )
        cand = np.vstack([cand, grad[None, :], body.vertices])
        cand = cand[body.contains(cand, tol=1e-9)]
        return HullStructure(
            dom, body, env, weights, indptr, indices, _dedup(cand), excess, live,
            flat_components=(idx.copy(),),  # one plane supports every node
        )

    lifted = np.column_stack([pts, vals])
    hull = ConvexHull(lifted, qhull_options="Qt")
    eq = hull.equations  # (F, 4): a, b, c, d with outward normal
    lower = eq[:, 2] < -_VERTICAL_TOL
    simpl = hull.simplices[lower]
    eq = eq[lower]
    if len(simpl) == 0:
        raise ValueError("degenerate lifted hull: no lower facets")
    grads = -eq[:, :2] / eq[:, 2:3]
    g0 = -eq[:, 3] / eq[:, 2]

    # unconstrained envelope = max over lower facet planes (live nodes only;
    # masked nodes never participate in convexity checks)
    env_live = _max_over_planes(pts, grads, g0)
    env = np.full(dom.size, np.inf)
    env[idx] = np.minimum(env_live, vals)  # hull <= data, up to rounding

    sets = {}
    for tri in simpl:
        a, b, c = (int(t) for t in tri)
        for i, j in ((a, b), (b, c), (a, c)):
            sets.setdefault(i, set()).add(j)
            sets.setdefault(j, set()).add(i)
    active = sorted(sets.keys())

    # flat regions: a facet plane supporting more nodes than its own
    # triangle couples all of them (nodes interior to the region join no
    # simplex; nodes on degenerate edges are tight with both planes)
    flat_components = []
    if with_components:
        plane_key = np.round(np.column_stack([grads, g0[:, None]]), 9)
        _, first = np.unique(plane_key, axis=0, return_index=True)
        tight_tol = 1e-9 * scale
        for fi in first:
            resid = np.abs(vals - (pts @ grads[fi] + g0[fi]))
            members = idx[resid <= tight_tol]
            if len(members) > 3:
                flat_components.append(members)
    con_for = [np.fromiter(sets[i], dtype=np.intp) for i in active]
    weights_local, cand = _cells_from_constraints(pts, vals, active, con_for, body)
    weights = np.zeros(dom.size)
    weights[idx[active]] = weights_local

    A, b_off = body.halfplanes
    viol = grads @ A.T - b_off[None, :]
    excess = max(0.0, float(viol.max()))

    gsets = {
        int(idx[i]): {int(idx[j]) for j in s} for i, s in sets.items()
    }
    indptr, indices = _csr_from_sets(dom.size, gsets)
    cand = np.vstack([cand, body.vertices, grads[body.contains(grads, tol=1e-9)]])
    return HullStructure(
        dom, body, env, weights, indptr, indices, _dedup(cand), excess, live,
        flat_components=tuple(flat_components),
    )


def _max_over_planes(points: np.ndarray, grads: np.ndarray, g0: np.ndarray) -> np.ndarray:
    out = np.full(len(points), -np.inf)
    step = max(1, 4_000_000 // max(len(grads), 1))
    for i0 in range(0, len(points), step):
        i1 = min(len(points), i0 + step)
        block = points[i0:i1] @ grads.T + g0[None, :]
        out[i0:i1] = block.max(axis=1)
    return out


def _cells_from_constraints(pts, vals, active, con_for, body: GradientBody):
    """Clip the body by each active node's constraints; return weights and
    the stacked vertices of all clipped cells (candidate slopes)."""
    normals_chunks = []
    offsets_chunks = []
    indptr = np.zeros(len(active) + 1, dtype=np.intp)
    for k, (i, nbrs) in enumerate(zip(active, con_for)):
        d = pts[nbrs] - pts[i]
        off = vals[nbrs] - vals[i]
        normals_chunks.append(d)
        offsets_chunks.append(off)
        indptr[k + 1] = indptr[k] + len(nbrs)
    normals = (
        np.ascontiguousarray(np.vstack(normals_chunks))
        if normals_chunks
        else np.empty((0, 2))
    )
    offsets = (
        np.ascontiguousarray(np.concatenate(offsets_chunks))
        if offsets_chunks
        else np.empty(0)
    )
    bx = np.ascontiguousarray(body.vertices[:, 0])
    by = np.ascontiguousarray(body.vertices[:, 1])
    areas, verts = kernels.cell_areas_2d(
        bx, by, normals, np.ascontiguousarray(offsets), indptr, True
    )
    return areas, verts


def _dedup(slopes: np.ndarray, decimals: int = 12) -> np.ndarray:
    if len(slopes) == 0:
        return slopes.reshape(0, 2)
    r = np.round(slopes, decimals)
    _, keep = np.unique(r, axis=0, return_index=True)
    return slopes[np.sort(keep)]


def hull_structure(
    field: ScalarField, body: GradientBody, with_components: bool = False
) -> HullStructure:
    """Lower-hull structure of a field against a gradient body.

    ``with_components`` additionally resolves flat supporting regions
    (needed by locality checks; skipped otherwise since it scans every
    facet plane against every node).
    """
    if not field.unmasked.any():
        raise ValueError("field is masked everywhere")
    if field.domain.dim == 1:
        return _hull_structure_1d(field, body, with_components)
    return _hull_structure_2d(field, body, with_components)


def is_convex(u: ScalarField, tol: float = 1e-10) -> bool:
    """True iff u equals its unconstrained convex envelope on unmasked nodes."""
    body = _free_body(u.domain)
    hs = hull_structure(u, body)
    live = u.unmasked
    return bool(np.max(np.abs(u.values[live] - hs.envelope_values[live])) <= tol)


def _free_body(domain: GridDomain) -> GradientBody:
    # a body large enough to never clip: used for unconstrained envelopes
    big = 1e12
    if domain.dim == 1:
        return GradientBody(dim=1, interval=(-big, big))
    return GradientBody.box(2, big)


def is_admissible(ctx: ModelContext, u: ScalarField, slope_tol: float = 1e-9) -> bool:
    """Convex with all hull slopes inside the gradient body."""
    if not is_convex(u):
        return False
    hs = hull_structure(u, ctx.gradient_body)
    return hs.slope_excess <= slope_tol


@dataclass(frozen=True)
class DualGrid:
    """Slope nodes used by conjugation: a lattice over the body, optionally
    augmented with data-adaptive slopes (cell vertices of the obstacle)."""

    body: GradientBody
    resolution: int
    lattice_axes: tuple[np.ndarray, ...]
    slopes: np.ndarray  # (M, dim); first n_lattice rows are the lattice
    n_lattice: int

    @property
    def dim(self) -> int:
        return self.body.dim

    @cached_property
    def extras(self) -> np.ndarray:
        return self.slopes[self.n_lattice :]


def build_dual_grid(
    body: GradientBody, resolution: int, extra: np.ndarray | None = None
) -> DualGrid:
    if resolution < 2:
        raise ValueError("dual resolution must be at least 2")
    if body.dim == 1:
        lo, hi = body.interval
        base = np.linspace(lo, hi, resolution)
        if not np.any(base == 0.0):
            base = np.sort(np.append(base, 0.0))
        axes = (base,)
        lattice = base[:, None]
    else:
        v = body.vertices
        lo = v.min(axis=0)
        hi = v.max(axis=0)
        ax0 = np.linspace(lo[0], hi[0], resolution)
        ax1 = np.linspace(lo[1], hi[1], resolution)
        if not np.any(ax0 == 0.0):
            ax0 = np.sort(np.append(ax0, 0.0))
        if not np.any(ax1 == 0.0):
            ax1 = np.sort(np.append(ax1, 0.0))
        axes = (ax0, ax1)
        g = np.meshgrid(ax0, ax1, indexing="ij")
        lattice = np.stack([a.ravel() for a in g], axis=1)
        lattice = lattice[body.contains(lattice, tol=1e-12)]
        if not np.any(np.all(lattice == 0.0, axis=1)):
            lattice = np.vstack([lattice, np.zeros((1, 2))])
    n_lat = len(lattice)
    slopes = lattice
    if extra is not None and len(extra):
        extra = np.atleast_2d(np.asarray(extra, dtype=float))
        if body.dim == 1:
            lo_, hi_ = body.interval
            extra = np.clip(extra, lo_, hi_)
        else:
            extra = extra[body.contains(extra, tol=1e-9)]
        if len(extra):
            slopes = np.vstack([lattice, _dedup(extra) if body.dim == 2 else extra])
    slopes = np.ascontiguousarray(slopes, dtype=float)
    return DualGrid(body, resolution, axes, slopes, n_lat)


def legendre(u: ScalarField, dual: DualGrid) -> np.ndarray:
    """Exact discrete conjugate u*(y) = max over unmasked nodes of <x,y> - u(x),
    evaluated at the dual slope nodes.

    Dimension 1 runs the linear-time lower-hull sweep; dimension 2 factors
    the lattice part into per-axis passes and finishes the adaptive slopes
    with a dense correction sweep.
    """
    if not u.unmasked.any():
        raise ValueError("all nodes masked")
    dom = u.domain
    vals = u.values.copy()
    vals[u.mask] = np.inf  # kernel convention: masked nodes never win
    if dom.dim == 1:
        y = np.ascontiguousarray(dual.slopes[:, 0])
        return kernels.conjugate_1d(
            np.ascontiguousarray(dom.points[:, 0]), np.ascontiguousarray(vals), y
        )
    out = np.empty(len(dual.slopes))
    n_lat = dual.n_lattice
    U = vals.reshape(dom.shape)
    ax1, ax2 = dom.axes
    ys1, ys2 = dual.lattice_axes
    if n_lat:
        # pass over the second axis, then the first
        G = kernels.conjugate_1d_batch(
            np.ascontiguousarray(ax2), np.ascontiguousarray(U), np.ascontiguousarray(ys2)
        )  # (n1, m2): max_x2 (x2*y2 - u)
        G = np.ascontiguousarray(-G.T)  # rows per y2; +inf marks dead columns
        F = kernels.conjugate_1d_batch(
            np.ascontiguousarray(ax1), G, np.ascontiguousarray(ys1)
        )  # (m2, m1)
        full = F.T.reshape(-1)  # (m1*m2) in lattice product order
        mask_in = _lattice_membership(dual)
        out[:n_lat] = full[mask_in]
    if len(dual.slopes) > n_lat:
        pts = dom.points[u.unmasked]
        uv = u.values[u.unmasked]
        ys = dual.slopes[n_lat:]
        out[n_lat:] = _dense_conjugate(pts, uv, ys)
    return out


def _lattice_membership(dual: DualGrid) -> np.ndarray:
    # positions of the body-filtered lattice rows inside the full axis
    # product (the axes always contain the origin by construction)
    ys1, ys2 = dual.lattice_axes
    g = np.meshgrid(ys1, ys2, indexing="ij")
    prod = np.stack([a.ravel() for a in g], axis=1)
    flat = np.nonzero(dual.body.contains(prod, tol=1e-12))[0]
    if len(flat) != dual.n_lattice:
        raise AssertionError("dual lattice out of sync with its axis product")
    return flat


def _dense_conjugate(pts: np.ndarray, vals: np.ndarray, ys: np.ndarray) -> np.ndarray:
    out = np.empty(len(ys))
    step = max(1, 4_000_000 // max(len(pts), 1))
    for j0 in range(0, len(ys), step):
        j1 = min(len(ys), j0 + step)
        block = ys[j0:j1] @ pts.T - vals[None, :]
        out[j0:j1] = block.max(axis=1)
    return out


def biconjugate(u: ScalarField, dual: DualGrid) -> ScalarField:
    """Double conjugate restricted to the dual slope nodes."""
    ustar = legendre(u, dual)
    dom = u.domain
    env = _dense_conjugate(dual.slopes, ustar, dom.points)
    return ScalarField(dom, env)


def p_envelope(
    ctx: ModelContext,
    f: ScalarField,
    base_resolution: int | None = None,
) -> ScalarField:
    """Largest convex minorant of f with all subgradients in the body.

    Computed as the double conjugate with the intermediate conjugate
    restricted to the dual grid: the slope lattice of the body, augmented
    with the obstacle's own hull slopes and their body intersections (cell
    vertices), which makes the result exact for the discrete data.
    """
    if not f.unmasked.any():
        raise ValueError("no admissible minorant: field is masked everywhere")
    body = ctx.gradient_body
    hs = hull_structure(f, body)
    res = base_resolution or ctx.domain.resolution
    dual = build_dual_grid(body, res, extra=hs.slope_candidates)
    ustar = legendre(f, dual)
    env = _dense_conjugate(dual.slopes, ustar, ctx.domain.points)
    return ScalarField(ctx.domain, env)


def contact_set(f: ScalarField, env: ScalarField, tol: float | None = None) -> np.ndarray:
    """Mask of nodes where the envelope touches the obstacle."""
    if not f.domain.same_as(env.domain):
        raise ValueError("domain mismatch")
    live = f.unmasked & env.unmasked
    if tol is None:
        tol = 1e-8 * (1.0 + float(np.abs(f.values[live]).max()))
    diff = f.values[live] - env.values[live]
    if np.any(diff < -tol):
        raise ValueError("envelope exceeds the obstacle: contract broken upstream")
    out = np.zeros(f.domain.size, dtype=bool)
    if math.isinf(tol):
        out[live] = True
        return out
    out[live] = np.abs(diff) <= tol
    return out
