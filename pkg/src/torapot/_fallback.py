"""Pure numpy implementations of the hot kernels.

These are the reference semantics for the compiled extension: dense
O(N*M) conjugates and a python-loop polygon clipper.  `torapot.kernels`
selects between this module and `torapot._core` at import time.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_CHUNK = 4_000_000  # cap on the size of the dense (N, M) product blocks


def conjugate_1d(x: np.ndarray, u: np.ndarray, y: np.ndarray) -> np.ndarray:
    """max_i (x_i * y - u_i) for each query slope y (dense max)."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = len(x), len(y)
    if n == 0:
        raise ValueError("conjugate of an empty node set")
    out = np.empty(m)
    step = max(1, _CHUNK // max(n, 1))
    for j0 in range(0, m, step):
        j1 = min(m, j0 + step)
        block = x[None, :] * y[j0:j1, None] - u[None, :]
        out[j0:j1] = block.max(axis=1)
    return out


def conjugate_1d_batch(x: np.ndarray, U: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise conjugates: out[b, j] = max_i (x_i * y_j - U[b, i]).

    Rows may contain -inf entries (masked nodes); a row of all -inf yields
    -inf outputs.
    """
    x = np.asarray(x, dtype=float)
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float)
    b, n = U.shape
    m = len(y)
    out = np.empty((b, m))
    step = max(1, _CHUNK // max(n * m, 1))
    xy = x[None, :] * y[:, None]  # (m, n)
    for b0 in range(0, b, step):
        b1 = min(b, b0 + step)
        block = xy[None, :, :] - U[b0:b1, None, :]  # (bb, m, n)
        out[b0:b1] = block.max(axis=2)
    return out


def clip_polygon_halfplane(poly_x, poly_y, a0, a1, b):
    """Sutherland-Hodgman clip of a convex polygon by {a0*x + a1*y <= b}.

    Takes and returns plain Python lists of coordinates.
    """
    n = len(poly_x)
    if n == 0:
        return [], []
    out_x: list[float] = []
    out_y: list[float] = []
    px, py = poly_x[n - 1], poly_y[n - 1]
    pv = a0 * px + a1 * py - b
    for i in range(n):
        cx, cy = poly_x[i], poly_y[i]
        cv = a0 * cx + a1 * cy - b
        if cv <= 0.0:
            if pv > 0.0:
                t = pv / (pv - cv)
                out_x.append(px + t * (cx - px))
                out_y.append(py + t * (cy - py))
            out_x.append(cx)
            out_y.append(cy)
        elif pv <= 0.0:
            t = pv / (pv - cv)
            out_x.append(px + t * (cx - px))
            out_y.append(py + t * (cy - py))
        px, py, pv = cx, cy, cv
    return out_x, out_y


def polygon_area(poly_x, poly_y) -> float:
    n = len(poly_x)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        j = (i + 1) % n
        s += poly_x[i] * poly_y[j] - poly_x[j] * poly_y[i]
    return 0.5 * abs(s)


def cell_areas_2d(
    body_x: np.ndarray,
    body_y: np.ndarray,
    normals: np.ndarray,
    offsets: np.ndarray,
    indptr: np.ndarray,
    collect_vertices: bool = False,
):
    """Areas of subgradient cells clipped to the body polygon.

    Cell k is the body polygon clipped by the halfplanes
    ``normals[indptr[k]:indptr[k+1]] . y <= offsets[...]``.
    When ``collect_vertices`` is true, also returns the stacked vertex
    coordinates of every clipped cell (used to seed adaptive slope sets).
    """
    bx = list(map(float, body_x))
    by = list(map(float, body_y))
    ncells = len(indptr) - 1
    areas = np.zeros(ncells)
    verts_x: list[float] = []
    verts_y: list[float] = []
    for k in range(ncells):
        px, py = bx, by
        for j in range(indptr[k], indptr[k + 1]):
            px, py = clip_polygon_halfplane(
                px, py, float(normals[j, 0]), float(normals[j, 1]), float(offsets[j])
            )
            if not px:
                break
        areas[k] = polygon_area(px, py)
        if collect_vertices and px:
            verts_x.extend(px)
            verts_y.extend(py)
    if collect_vertices:
        if verts_x:
            vv = np.column_stack([np.asarray(verts_x), np.asarray(verts_y)])
        else:
            vv = np.empty((0, 2))
        return areas, vv
    return areas
