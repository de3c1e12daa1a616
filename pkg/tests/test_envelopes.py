import math

import numpy as np
import pytest

from torapot import (
    ScalarField,
    SingularityOrder,
    StabilizationError,
    cutoff,
    entropy,
    is_model,
    mass,
    model_envelope,
    p_envelope,
    rooftop,
    shift,
    singularity_cmp,
)
from torapot.certificates import normalized_below, random_admissible


def affine_minorant_oracle(ctx, obstacle_vals, slopes):
    pts = ctx.domain.points
    best = np.full(ctx.domain.size, -np.inf)
    for y in np.atleast_2d(slopes):
        intercept = np.min(obstacle_vals - pts @ y)
        best = np.maximum(best, pts @ y + intercept)
    return best


def test_rooftop_identity_cases(ctx1, rng):
    phi = p_envelope(ctx1, random_admissible(ctx1, rng))
    assert np.abs(rooftop(ctx1, phi, phi).values - phi.values).max() <= 1e-12
    r3 = rooftop(ctx1, shift(phi, -3.0), phi)
    assert np.abs(r3.values - (phi.values - 3.0)).max() <= 1e-12


def test_rooftop_tilted_quadratics_vs_oracle(ctx1):
    from torapot.convex import build_dual_grid, hull_structure
    from torapot.grid import pointwise_min

    x = ctx1.domain.points[:, 0]
    psi = ScalarField(ctx1.domain, 0.8 * (x - 0.3) ** 2 - 0.5)
    phi = ScalarField(ctx1.domain, 0.6 * (x + 0.4) ** 2 - 0.7)
    rt = rooftop(ctx1, psi, phi)
    obstacle = pointwise_min(psi, phi)
    hs = hull_structure(obstacle, ctx1.gradient_body)
    dual = build_dual_grid(ctx1.gradient_body, ctx1.domain.resolution, extra=hs.slope_candidates)
    oracle = affine_minorant_oracle(ctx1, obstacle.values, dual.slopes)
    assert np.abs(rt.values - oracle).max() <= 1e-9


def test_model_envelope_of_bounded_is_minimal(ctx1, rng):
    psi = random_admissible(ctx1, rng)
    v = ctx1.zero_field()
    env = model_envelope(ctx1, psi, v)
    assert np.abs(env.values).max() <= 1e-12


def test_model_envelope_depends_on_type_only(ctx1, rng):
    psi = random_admissible(ctx1, rng)
    v = ctx1.zero_field()
    e1 = model_envelope(ctx1, psi, v)
    e2 = model_envelope(ctx1, shift(psi, 5.0), v)
    assert np.abs(e1.values - e2.values).max() <= 1e-10


def test_model_envelope_idempotent(ctx1, rng):
    psi = random_admissible(ctx1, rng)
    v = ctx1.zero_field()
    e1 = model_envelope(ctx1, psi, v)
    e2 = model_envelope(ctx1, e1, v)
    assert np.abs(e1.values - e2.values).max() <= 1e-10


def test_model_envelope_stabilization_budget(ctx1, rng):
    psi = random_admissible(ctx1, rng)
    with pytest.raises(StabilizationError):
        model_envelope(ctx1, shift(psi, -1e9), ctx1.zero_field(), max_doublings=3)


def test_is_model_examples(ctx1, rng):
    v = ctx1.zero_field()
    chk = is_model(ctx1, v)
    assert chk.is_model and chk.mass_match
    chk_shift = is_model(ctx1, shift(v, -1.0))
    assert not chk_shift.is_model
    assert chk_shift.sup_defect == pytest.approx(1.0)
    psi = random_admissible(ctx1, rng)
    env = model_envelope(ctx1, psi, v)
    assert mass(ctx1, psi) > 0
    assert is_model(ctx1, env).is_model


def test_model_envelope_preserves_mass(ctx1, rng):
    psi = random_admissible(ctx1, rng)
    env = model_envelope(ctx1, psi, ctx1.zero_field())
    m_psi, m_env = mass(ctx1, psi), mass(ctx1, env)
    assert abs(m_psi - m_env) <= 1e-8 * max(m_psi, m_env)


def test_model_potential_entropy_finite_1d(ctx1):
    # envelope density bound: the minimal model potential has finite entropy
    assert math.isfinite(entropy(ctx1, ctx1.zero_field()))


def test_cutoff_examples(ctx1, rng):
    phi = p_envelope(ctx1, random_admissible(ctx1, rng))
    u = shift(phi, -2.0)
    c0 = cutoff(u, phi, 0.0)
    assert np.array_equal(c0.values, phi.values)
    cinf = cutoff(u, phi, math.inf)
    assert np.array_equal(cinf.values, u.values)
    mask = np.zeros(ctx1.domain.size, bool)
    mask[7] = True
    um = ScalarField(ctx1.domain, u.values, mask)
    c5 = cutoff(um, phi, 5.0)
    assert c5.singular_mask is None
    assert c5.values[7] == phi.values[7] - 5.0
    with pytest.raises(ValueError):
        cutoff(u, phi, -1.0)


def test_singularity_cmp_examples(ctx1, rng):
    u = random_admissible(ctx1, rng)
    assert singularity_cmp(shift(u, 9.0), u) is SingularityOrder.SAME
    n = ctx1.domain.size
    mask = np.zeros(n, bool)
    mask[0] = True
    um = ScalarField(ctx1.domain, u.values, mask)
    assert singularity_cmp(um, u) is SingularityOrder.MORE_SINGULAR
    assert singularity_cmp(u, um) is SingularityOrder.LESS_SINGULAR
    mask2 = np.zeros(n, bool)
    mask2[n - 1] = True
    um2 = ScalarField(ctx1.domain, u.values, mask2)
    assert singularity_cmp(um, um2) is SingularityOrder.INCOMPARABLE


def test_cutoff_energy_monotone(ctx1, ctx2, rng):
    from torapot.certificates import energy_monotone_certificate
    from torapot.functionals import weight_power

    for ctx in (ctx1, ctx2):
        phi = ctx.zero_field()
        u = normalized_below(random_admissible(ctx, rng), phi, -1.0)
        rep = energy_monotone_certificate(ctx, u, phi, weight_power(2.0))
        assert rep.passed, rep.to_dict()
