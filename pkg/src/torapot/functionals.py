"""Weights, weighted energies, entropies and conjugate-pair helpers.

A weight is a continuous strictly increasing function chi on [0, inf) with
chi(0) = 0 and chi(inf) = inf.  Power weights carry exact closed forms;
table weights are piecewise-linear in their samples and extend linearly
past the last sample (the monotone chi(inf) = inf proxy).

Infinite results are first-class values (math.inf), never overflow
artifacts; all measure sums use exact accumulation (math.fsum) so they are
invariant under node relabeling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .envelopes import SingularityOrder, singularity_cmp
from .grid import DiscreteMeasure, ModelContext, ScalarField, sup_rel
from .ma import ma_density, ma_measure

__all__ = [
    "Weight",
    "weight_power",
    "weight_from_table",
    "chi2_from_chi1",
    "tau2_at_one",
    "energy_chi",
    "entropy",
    "rel_entropy",
    "construct_weight",
    "conj_pair",
    "conj_chi",
    "conj_inequality_check",
]


@dataclass(frozen=True)
class Weight:
    """Strictly increasing weight with a numeric inverse.

    kind "power": chi(t) = coeff * t**p, exact inverse and derivative.
    kind "table": piecewise-linear through (ts, vals) with linear extension.
    ``meta`` carries derivation info (e.g. the chi1 a chi2 was built from).
    """

    kind: str
    p: float | None = None
    coeff: float = 1.0
    ts: np.ndarray | None = None
    vals: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "power":
            if self.p is None or self.p <= 0 or self.coeff <= 0:
                raise ValueError("power weight needs p > 0 and coeff > 0")
        elif self.kind == "table":
            ts = np.asarray(self.ts, dtype=float)
            vals = np.asarray(self.vals, dtype=float)
            if ts.ndim != 1 or ts.shape != vals.shape or len(ts) < 2:
                raise ValueError("table weight needs matching 1-D samples")
            if ts[0] != 0.0 or vals[0] != 0.0:
                raise ValueError("weight must start at chi(0) = 0")
            if np.any(np.diff(ts) <= 0) or np.any(np.diff(vals) <= 0):
                raise ValueError("weight samples must be strictly increasing")
            ts.setflags(write=False)
            vals.setflags(write=False)
            object.__setattr__(self, "ts", ts)
            object.__setattr__(self, "vals", vals)
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < -1e-12):
            raise ValueError("weights are defined on t >= 0")
        arr = np.maximum(arr, 0.0)
        if self.kind == "power":
            out = self.coeff * arr**self.p
        elif "derived_from" in self.meta:
            out = self._eval_antiderivative(arr)
        else:
            out = np.interp(arr, self.ts, self.vals)
            last_slope = (self.vals[-1] - self.vals[-2]) / (self.ts[-1] - self.ts[-2])
            over = arr > self.ts[-1]
            if np.any(over):
                out = np.where(over, self.vals[-1] + (arr - self.ts[-1]) * last_slope, out)
        return float(out) if np.isscalar(t) else out

    def _eval_antiderivative(self, arr: np.ndarray) -> np.ndarray:
        """Exact between-node values for chi2-style tables: nodal value plus
        the closed-form segment integral of the underlying chi1**(1/n)."""
        chi1: Weight = self.meta["derived_from"]
        n: int = self.meta["n"]
        flat = np.atleast_1d(arr).astype(float)
        idx = np.clip(np.searchsorted(self.ts, flat, side="right") - 1, 0, len(self.ts) - 1)
        t0 = self.ts[idx]
        base = self.vals[idx]
        w = flat - t0
        a = np.asarray(chi1(t0))
        c = np.asarray(chi1(flat))
        out = base.copy()
        pos = w > 0
        if np.any(pos):
            slope = np.zeros_like(w)
            slope[pos] = (c[pos] - a[pos]) / w[pos]
            q = 1.0 + 1.0 / n
            lin = np.abs(slope) < 1e-300
            seg = np.where(
                lin,
                a ** (1.0 / n) * w,
                ((a + slope * w) ** q - a**q) / np.where(lin, 1.0, slope * q),
            )
            out = np.where(pos, base + seg, out)
        return out.reshape(np.shape(arr))

    def _invert_antiderivative(self, y: np.ndarray) -> np.ndarray:
        """Exact inverse of the antiderivative table by safeguarded Newton
        (the derivative chi1**(1/n) is known in closed form)."""
        chi1: Weight = self.meta["derived_from"]
        n: int = self.meta["n"]
        flat = np.atleast_1d(y).astype(float)
        # bracket from the nodal table, with linear extension beyond it
        t = np.interp(flat, self.vals, self.ts)
        last_slope = (self.vals[-1] - self.vals[-2]) / (self.ts[-1] - self.ts[-2])
        over = flat > self.vals[-1]
        if np.any(over):
            t = np.where(over, self.ts[-1] + (flat - self.vals[-1]) / last_slope, t)
        lo = np.zeros_like(flat)
        hi = np.maximum(t * 2.0 + 1.0, self.ts[-1] * 2.0 + 1.0)
        for _ in range(60):
            f = self._eval_antiderivative(t) - flat
            hi = np.where(f > 0, t, hi)
            lo = np.where(f <= 0, t, lo)
            d = np.maximum(np.asarray(chi1(np.maximum(t, 0.0))) ** (1.0 / n), 1e-300)
            step = f / d
            cand = t - step
            outside = (cand <= lo) | (cand >= hi)
            cand = np.where(outside, 0.5 * (lo + hi), cand)
            if np.max(np.abs(cand - t)) <= 1e-16 * (1.0 + np.max(np.abs(t))):
                t = cand
                break
            t = cand
        return t.reshape(np.shape(y))

    def inverse(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr < -1e-12):
            raise ValueError("inverse defined on y >= 0")
        arr = np.maximum(arr, 0.0)
        if self.kind == "power":
            out = (arr / self.coeff) ** (1.0 / self.p)
        elif "derived_from" in self.meta:
            out = self._invert_antiderivative(arr)
        else:
            out = np.interp(arr, self.vals, self.ts)
            last_slope = (self.vals[-1] - self.vals[-2]) / (self.ts[-1] - self.ts[-2])
            over = arr > self.vals[-1]
            if np.any(over):
                out = np.where(over, self.ts[-1] + (arr - self.vals[-1]) / last_slope, out)
        return float(out) if np.isscalar(y) else out

    def derivative(self, t):
        arr = np.asarray(t, dtype=float)
        if self.kind == "power":
            out = self.coeff * self.p * np.maximum(arr, 0.0) ** (self.p - 1.0)
        elif "derived_from" in self.meta:
            chi1: Weight = self.meta["derived_from"]
            n: int = self.meta["n"]
            out = np.asarray(chi1(arr)) ** (1.0 / n)
        else:
            idx = np.clip(np.searchsorted(self.ts, arr, side="right") - 1, 0, len(self.ts) - 2)
            out = (self.vals[idx + 1] - self.vals[idx]) / (self.ts[idx + 1] - self.ts[idx])
        return float(out) if np.isscalar(t) else out

    def scaled(self, alpha: float) -> "Weight":
        if alpha <= 0:
            raise ValueError("scaling must be positive")
        if self.kind == "power":
            return Weight("power", p=self.p, coeff=self.coeff * alpha, meta=dict(self.meta))
        return Weight("table", ts=self.ts, vals=alpha * self.vals, meta=dict(self.meta))

    def to_json(self) -> dict:
        if self.kind == "power":
            out = {"kind": "power", "p": self.p}
            if self.coeff != 1.0:
                out["coeff"] = self.coeff
            return out
        return {"kind": "table", "samples": np.column_stack([self.ts, self.vals]).tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Weight":
        if data["kind"] == "power":
            return cls("power", p=float(data["p"]), coeff=float(data.get("coeff", 1.0)))
        samples = np.asarray(data["samples"], dtype=float)
        return cls("table", ts=samples[:, 0], vals=samples[:, 1])


def weight_power(p: float) -> Weight:
    """chi(t) = t**p."""
    if p <= 0:
        raise ValueError("power weight needs p > 0")
    return Weight("power", p=float(p))


def weight_from_table(ts, vals) -> Weight:
    return Weight("table", ts=np.asarray(ts, float), vals=np.asarray(vals, float))


def _segment_integral(a: float, b: float, w: float, n: int) -> float:
    """Integral of (a + b*u)^(1/n) for u in [0, w] (a >= 0, a + b*w >= 0)."""
    if w <= 0:
        return 0.0
    q = 1.0 + 1.0 / n
    if abs(b) < 1e-300:
        return a ** (1.0 / n) * w
    return ((a + b * w) ** q - a**q) / (b * q)


def chi2_from_chi1(chi1: Weight, n: int, refine: int = 8) -> Weight:
    """chi2(t) = integral of chi1(s)^(1/n) from 0 to t; convex by construction.

    Power weights keep an exact closed form; table weights are integrated
    segment-exactly against their piecewise-linear interpolant on a refined
    sample grid.
    """
    if n < 1:
        raise ValueError("dimension n must be at least 1")
    meta = {"derived_from": chi1, "n": n}
    if chi1.kind == "power":
        q = 1.0 + chi1.p / n
        coeff = chi1.coeff ** (1.0 / n) / q
        return Weight("power", p=q, coeff=coeff, meta=meta)
    ts = chi1.ts
    fine = [np.linspace(ts[i], ts[i + 1], refine + 1)[:-1] for i in range(len(ts) - 1)]
    fine = np.concatenate(fine + [ts[-1:]])
    out = np.zeros(len(fine))
    acc = 0.0
    for i in range(len(fine) - 1):
        t0, t1 = fine[i], fine[i + 1]
        v0, v1 = chi1(t0), chi1(t1)
        b = (v1 - v0) / (t1 - t0)
        acc += _segment_integral(v0, b, t1 - t0, n)
        out[i + 1] = acc
    return Weight("table", ts=fine, vals=out, meta=meta)


def tau2_at_one(chi2: Weight, a: float) -> float:
    """tau2(1) = chi2(s) / chi2'(s) with s = chi1^{-1}(a^{-n}).

    chi2 must carry its chi1 derivation; for power weights this equals
    a^(-n/p) / q with q = 1 + p/n.
    """
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    if "derived_from" not in chi2.meta:
        raise ValueError("chi2 does not carry a chi1 derivation")
    chi1: Weight = chi2.meta["derived_from"]
    n: int = chi2.meta["n"]
    s = chi1.inverse(a ** (-n))
    return float(chi2(s) / chi2.derivative(s))


def _relative_gap(u: ScalarField, phi: ScalarField) -> np.ndarray:
    live = u.unmasked
    return np.abs(u.values[live] - phi.values[live])


def energy_chi(ctx: ModelContext, u: ScalarField, phi: ScalarField, chi: Weight) -> float:
    """E_chi(u, phi) = integral of chi(|u - phi|) against MA(u).

    Requires u to be at least as singular as phi with matching total mass
    (membership in the relative full-mass class).
    """
    order = singularity_cmp(u, phi)
    if order not in (SingularityOrder.SAME, SingularityOrder.MORE_SINGULAR):
        raise ValueError("u must be at least as singular as phi")
    mu = ma_measure(ctx, u)
    m_phi = ma_measure(ctx, phi).total
    if abs(mu.total - m_phi) > 1e-8 * max(mu.total, m_phi, 1e-300):
        raise ValueError("mass mismatch: u is not in the relative full-mass class")
    live = u.unmasked
    w = mu.weights[live]
    gap = np.abs(u.values[live] - phi.values[live])
    sel = w > 0
    return float(math.fsum(np.asarray(chi(gap[sel])) * w[sel]))


def entropy(
    ctx: ModelContext,
    u: ScalarField,
    reference: DiscreteMeasure | None = None,
    singular_rel_tol: float = 1e-8,
) -> float:
    """Entropy of the normalized MA measure against the reference density.

    +inf when the measure carries a relative singular part beyond tolerance
    (absolute continuity fails); otherwise
    m^{-1} * sum f log f dref - log m, which is nonnegative by Jensen.
    """
    if reference is None:
        dens = ma_density(ctx, u)
        ref_w = ctx.reference_density.weights
    else:
        mu = ma_measure(ctx, u)
        ref_w = reference.weights
        singular = mu.weights > 50.0 * ref_w
        density = np.zeros_like(mu.weights)
        ac = ~singular & (ref_w > 0)
        density[ac] = mu.weights[ac] / ref_w[ac]
        dens = DiscreteMeasure(
            ctx.domain,
            np.where(singular, 0.0, mu.weights),
            singular_mass=float(math.fsum(mu.weights[singular])),
            density_wrt=reference,
            density=density,
        )
    m = dens.total
    if m <= 0:
        raise ValueError("zero-mass potential has no entropy")
    if dens.singular_mass > singular_rel_tol * m:
        return math.inf
    f = dens.density
    sel = f > 0
    raw = math.fsum(f[sel] * np.log(f[sel]) * ref_w[sel])
    return raw / m - math.log(m)


def rel_entropy(mu: DiscreteMeasure, nu: DiscreteMeasure, normalize: bool = False) -> float:
    """Relative entropy of two probability measures on the same grid.

    +inf when mu charges a node where nu vanishes, or when mu carries
    singular mass.  Sums are exactly rounded, hence invariant under any
    node relabeling applied to both measures.
    """
    if not mu.domain.same_as(nu.domain):
        raise ValueError("domain mismatch")
    if normalize:
        mu = mu.normalized()
        nu = nu.normalized()
    if not (mu.is_probability() and nu.is_probability()):
        raise ValueError("measures must be probability (or pass normalize=True)")
    if mu.singular_mass > 0:
        return math.inf
    w, v = mu.weights, nu.weights
    if np.any((w > 0) & (v == 0)):
        return math.inf
    sel = w > 0
    return float(math.fsum(w[sel] * np.log(w[sel] / v[sel])))


def construct_weight(
    ctx: ModelContext,
    u: ScalarField,
    phi: ScalarField,
    mu: DiscreteMeasure,
):
    """Constructive weight making the energy of u finite against mu.

    Follows the union-of-energy-classes construction: from the survival
    profile psi(t) = 1 / mu({u < phi - t}) pick levels t_k with
    psi(t_k) >= k (t_1 = 1), set h = k^{-2} (t_{k+1} - t_k)^{-1} on
    [t_k, t_{k+1}), and return chi(t) = integral of h * psi.  The piecewise
    structure is exact, so integral identities hold to rounding.  Bounded
    gaps truncate the level sequence and extend chi linearly (the
    degenerate branch).
    """
    if not mu.is_probability():
        raise ValueError("mu must be a probability measure")
    s = sup_rel(u, phi)
    u = ScalarField(u.domain, np.where(u.mask, 0.0, u.values - (s + 1.0)), u.singular_mask)
    live = u.unmasked
    gaps = phi.values[live] - u.values[live]
    wts = mu.weights[live]

    uniq, inv = np.unique(gaps, return_inverse=True)
    w_per = np.zeros(len(uniq))
    np.add.at(w_per, inv, wts)
    total = float(math.fsum(wts))
    tail_above = total - np.cumsum(w_per)  # mu({gap > uniq[j]})

    def tail(t: float) -> float:
        j = np.searchsorted(uniq, t, side="right") - 1
        if j < 0:
            return total
        return float(tail_above[j])

    t_max = float(uniq[-1])

    # level sequence: t_1 = 1, then the smallest grid t with psi(t) >= k
    levels = [1.0]
    k = 2
    for t in uniq:
        t = float(t)
        if t <= levels[-1] or t >= t_max:
            continue
        mt = tail(t)
        if mt <= 0:
            break
        if 1.0 / mt >= k:
            levels.append(t)
            k += 1
    K = len(levels)
    # the truncated final interval ends at the gap supremum
    edges = levels + [t_max] if t_max > levels[-1] else levels

    def h_of(t: float) -> float:
        if t < 1.0:
            return 1.0
        for i in range(len(edges) - 1):
            if edges[i] <= t < edges[i + 1]:
                return (i + 1) ** (-2) / (edges[i + 1] - edges[i])
        return 1.0  # unreachable within the table range

    # integrate the piecewise-constant h * psi exactly over the breakpoints
    bps = np.unique(np.concatenate([[0.0, 1.0], uniq, np.asarray(edges)]))
    bps = bps[bps <= t_max]
    ts_out = [0.0]
    vals_out = [0.0]
    acc = 0.0
    for i in range(len(bps) - 1):
        t0, t1 = float(bps[i]), float(bps[i + 1])
        mt = tail(t0)
        if mt <= 0:
            break
        acc += h_of(t0) * (1.0 / mt) * (t1 - t0)
        ts_out.append(t1)
        vals_out.append(acc)
    if len(ts_out) < 2:  # all gaps exactly at the minimum: single linear piece
        ts_out.append(max(t_max, 1.0))
        vals_out.append(max(t_max, 1.0))
    return Weight(
        "table",
        ts=np.asarray(ts_out),
        vals=np.asarray(vals_out),
        meta={
            "constructed": True,
            "levels": list(levels),
            "K": K,
            "sum_k2": float(math.fsum((kk + 1.0) ** (-2) for kk in range(K))),
        },
    )


def conj_pair(t: float) -> float:
    """chi*(t) = e^t - t - 1, the convex conjugate of (s+1)log(s+1) - s."""
    if t < 0:
        raise ValueError("conjugate weight defined on t >= 0")
    return float(math.expm1(t) - t)


def conj_chi(s) -> float | np.ndarray:
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0):
        raise ValueError("conjugate weight defined on s >= 0")
    out = (arr + 1.0) * np.log1p(arr) - arr
    return float(out) if np.isscalar(s) else out


def conj_inequality_check(s: float, t: float) -> bool:
    """st <= chi(s) + chi*(t) (Young's inequality for the conjugate pair)."""
    if s < 0 or t < 0:
        raise ValueError("inequality defined on s, t >= 0")
    return s * t <= conj_chi(s) + conj_pair(t) + 1e-12 * (1.0 + s * t)
