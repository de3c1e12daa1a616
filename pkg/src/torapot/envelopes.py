"""Rooftop and model-potential envelopes, cutoffs, singularity comparison.

On a bounded grid with a bounded slope body, potentials cannot have genuine
interior poles; the singular mask is a formal exclusion device and the
envelope operators ignore masked obstacle nodes.  Model envelopes are
computed through the defining limit: rooftops of psi + C for doubling C
until stabilization, which a bounded grid reaches at finite C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .convex import p_envelope
from .grid import ModelContext, ScalarField, pointwise_max, pointwise_min, shift
from .ma import mass

__all__ = [
    "rooftop",
    "model_envelope",
    "ModelCheck",
    "is_model",
    "cutoff",
    "SingularityOrder",
    "singularity_cmp",
    "StabilizationError",
]


class StabilizationError(RuntimeError):
    """The C-doubling limit failed to stabilize within the doubling budget."""


def rooftop(ctx: ModelContext, psi: ScalarField, phi: ScalarField) -> ScalarField:
    """Largest admissible potential below min(psi, phi)."""
    return p_envelope(ctx, pointwise_min(psi, phi))


def model_envelope(
    ctx: ModelContext,
    psi: ScalarField,
    phi: ScalarField,
    tol: float = 1e-10,
    max_doublings: int = 60,
) -> ScalarField:
    """Envelope of the singularity type of psi relative to phi.

    Doubles the lift constant C from 1 until two consecutive rooftops agree
    within ``tol`` in sup norm; depends only on the singularity type of psi
    (invariant under psi -> psi + const).
    """
    c = 1.0
    prev = rooftop(ctx, shift(psi, c), phi)
    for _ in range(max_doublings):
        c *= 2.0
        cur = rooftop(ctx, shift(psi, c), phi)
        if float(np.abs(cur.values - prev.values).max()) < tol:
            return cur
        prev = cur
    raise StabilizationError(
        f"model envelope did not stabilize after {max_doublings} doublings"
    )


@dataclass(frozen=True)
class ModelCheck:
    is_model: bool
    sup_defect: float
    mass_input: float
    mass_envelope: float

    @property
    def mass_match(self) -> bool:
        scale = max(abs(self.mass_input), abs(self.mass_envelope), 1e-300)
        return abs(self.mass_input - self.mass_envelope) <= 1e-8 * scale

    def __bool__(self) -> bool:  # allows `if is_model(ctx, phi):`
        return self.is_model


def is_model(ctx: ModelContext, phi: ScalarField, tol: float = 1e-8) -> ModelCheck:
    """Whether phi equals the envelope of its own singularity type.

    Also reports the mass comparison between phi and its model envelope
    (equal for true singularity-type envelopes).
    """
    v_theta = ctx.zero_field()
    env = model_envelope(ctx, phi, v_theta)
    live = phi.unmasked
    defect = float(np.abs(phi.values[live] - env.values[live]).max())
    return ModelCheck(
        is_model=defect <= tol,
        sup_defect=defect,
        mass_input=mass(ctx, phi),
        mass_envelope=mass(ctx, env),
    )


def cutoff(u: ScalarField, phi: ScalarField, j: float) -> ScalarField:
    """max(u, phi - j); unmasks nodes where phi - j is finite."""
    if j < 0:
        raise ValueError("cutoff level j must be nonnegative")
    if math.isinf(j):
        return u
    return pointwise_max(u, shift(phi, -j))


class SingularityOrder(Enum):
    SAME = "same"
    MORE_SINGULAR = "more_singular"
    LESS_SINGULAR = "less_singular"
    INCOMPARABLE = "incomparable"


def singularity_cmp(
    u: ScalarField, v: ScalarField, threshold: float | None = None
) -> SingularityOrder:
    """Classify u against v by boundedness of their difference.

    "Bounded" at a fixed resolution is a threshold proxy (default
    1e3 * domain diameter * body-free scale of the values); refinement scans
    back the classification where it matters.
    """
    if not u.domain.same_as(v.domain):
        raise ValueError("domain mismatch")
    if threshold is None:
        threshold = 1e3 * u.domain.diameter * max(
            1.0,
            float(np.abs(u.values[u.unmasked]).max(initial=0.0)),
            float(np.abs(v.values[v.unmasked]).max(initial=0.0)),
        )
    mask_u, mask_v = u.mask, v.mask
    both = ~mask_u & ~mask_v
    # u more singular than v needs mask_v subset of mask_u and u <= v + C
    u_below = bool(np.all(mask_v <= mask_u))  # mask_v implies mask_u
    v_below = bool(np.all(mask_u <= mask_v))
    if both.any():
        d = u.values[both] - v.values[both]
        u_below = u_below and float(d.max()) <= threshold
        v_below = v_below and float((-d).max()) <= threshold
    if u_below and v_below:
        return SingularityOrder.SAME
    if u_below:
        return SingularityOrder.MORE_SINGULAR
    if v_below:
        return SingularityOrder.LESS_SINGULAR
    return SingularityOrder.INCOMPARABLE
