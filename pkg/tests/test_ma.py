import numpy as np
import pytest

from torapot import (
    ScalarField,
    build_context,
    ma_density,
    ma_measure,
    mass,
    mixed_ma,
    perturbed_ma,
    shift,
    slope_excess,
)


def slope_jump_oracle(ctx, u):
    """Independent per-node slope-jump weights (same float expressions)."""
    lo, hi = ctx.gradient_body.interval
    x = ctx.domain.points[:, 0]
    v = u.values
    n = len(x)
    w = np.zeros(n)
    for i in range(n):
        s_left = (v[i] - v[i - 1]) / (x[i] - x[i - 1]) if i > 0 else -np.inf
        s_right = (v[i + 1] - v[i]) / (x[i + 1] - x[i]) if i < n - 1 else np.inf
        w[i] = max(0.0, min(s_right, hi) - max(s_left, lo))
    return w


def strictly_convex_sample(ctx, rng, atom_at=None):
    """Random strictly grid-convex potential; optional big slope jump."""
    n = ctx.domain.size
    lo, hi = ctx.gradient_body.interval
    incr = rng.uniform(1e-4, 1.0, n - 1)
    if atom_at is not None:
        incr[atom_at] += 50.0
    slopes = lo + (hi - lo) * np.cumsum(incr) / incr.sum()
    h = ctx.domain.spacing[0]
    vals = np.concatenate([[0.0], np.cumsum(slopes * h)])
    return ScalarField(ctx.domain, vals - vals.mean())


def test_ma_quadratic_unit_body(ctx2_unit):
    r = ctx2_unit.quadratic_field()
    mu = ma_measure(ctx2_unit, r)
    assert abs(mu.total - 4.0) <= 1e-10
    h = ctx2_unit.domain.spacing[0]
    interior = ~ctx2_unit.domain.boundary_mask()
    dens = mu.weights[interior] / h**2
    assert np.abs(dens - 1.0).max() <= 1e-10


def test_ma_abs_atom(ctx1_narrow):
    x = ctx1_narrow.domain.points[:, 0]
    mu = ma_measure(ctx1_narrow, ScalarField(ctx1_narrow.domain, np.abs(x)))
    i0 = int(np.argmin(np.abs(x)))
    assert mu.weights[i0] == pytest.approx(2.0)
    assert mu.total == pytest.approx(2.0)
    assert mu.weights.sum() - mu.weights[i0] == pytest.approx(0.0)


def test_ma_slope_jump_exactness(ctx1, rng):
    for k in range(10):
        u = strictly_convex_sample(ctx1, rng, atom_at=(100 if k % 3 == 0 else None))
        mu = ma_measure(ctx1, u)
        oracle = slope_jump_oracle(ctx1, u)
        assert np.array_equal(mu.weights, oracle)


def test_ma_truncated_quadratic_matches_oracle(ctx1_narrow):
    x = ctx1_narrow.domain.points[:, 0]
    u = ScalarField(ctx1_narrow.domain, np.maximum(0.5 * x**2 - 0.125, 0.0))
    mu = ma_measure(ctx1_narrow, u)
    oracle = slope_jump_oracle(ctx1_narrow, u)
    assert np.abs(mu.weights - oracle).max() <= 1e-15
    flat = np.abs(x) < 0.4
    assert mu.weights[flat].max() == 0.0
    assert mu.total == pytest.approx(2.0)


def test_ma_rejects_nonconvex(ctx1):
    x = ctx1.domain.points[:, 0]
    with pytest.raises(ValueError, match="non-convex"):
        ma_measure(ctx1, ScalarField(ctx1.domain, -(x**2)))


def test_ma_all_masked_rejected(ctx1):
    mask = np.ones(ctx1.domain.size, bool)
    f = ScalarField(ctx1.domain, np.zeros(ctx1.domain.size), mask)
    with pytest.raises(ValueError, match="masked"):
        ma_measure(ctx1, f)


def test_mass_examples(ctx1_narrow):
    assert mass(ctx1_narrow, ctx1_narrow.zero_field()) == pytest.approx(2.0)
    x = ctx1_narrow.domain.points[:, 0]
    # boundary normal cones absorb the body: every unmasked admissible
    # potential carries the full body volume
    assert mass(ctx1_narrow, ScalarField(ctx1_narrow.domain, 0.25 * x**2)) == pytest.approx(2.0)


def test_mass_invariant_under_constants(ctx1, rng):
    from torapot.certificates import random_admissible

    u = random_admissible(ctx1, rng)
    assert mass(ctx1, u) == mass(ctx1, shift(u, 3.3))


def test_mass_continuous_along_affine_family(ctx1):
    x = ctx1.domain.points[:, 0]
    u1 = ScalarField(ctx1.domain, 0.1 * x**2)
    vals = [mass(ctx1, ScalarField(ctx1.domain, t * u1.values)) for t in np.linspace(0, 1, 9)]
    assert max(vals) - min(vals) <= 1e-12  # constant at the body volume


def test_slope_excess_flags_clamping(ctx1_narrow):
    x = ctx1_narrow.domain.points[:, 0]
    assert slope_excess(ctx1_narrow, ScalarField(ctx1_narrow.domain, 0.5 * x**2)) <= 1e-12
    steep = ScalarField(ctx1_narrow.domain, 3.0 * np.abs(x))
    assert slope_excess(ctx1_narrow, steep) == pytest.approx(2.0)
    assert mass(ctx1_narrow, steep) == pytest.approx(2.0)  # clipped, not an error


def test_ma_density_reference(ctx1):
    dens = ma_density(ctx1, ctx1.reference_potential)
    assert dens.singular_mass == 0.0
    m = mass(ctx1, ctx1.reference_potential)
    assert np.abs(dens.density - m).max() <= 1e-9


def test_ma_density_atom_split(ctx1):
    x = ctx1.domain.points[:, 0]
    u = ScalarField(ctx1.domain, np.abs(x))
    dens = ma_density(ctx1, u)
    assert dens.singular_mass == pytest.approx(2.0)
    i0 = int(np.argmin(np.abs(x)))
    assert dens.density[i0] == 0.0


def test_ma_density_quartic_refinement():
    # f should match the second derivative profile, tighter at finer grids
    sups = []
    for res in (201, 401):
        ctx = build_context(1, (-1, 1), res)
        x = ctx.domain.points[:, 0]
        u = ScalarField(ctx.domain, 0.25 * x**4)
        dens = ma_density(ctx, u)
        vol = ctx.gradient_body.volume()
        interior = ~ctx.domain.boundary_mask()
        expected = 3.0 * x[interior] ** 2 * vol
        sups.append(np.abs(dens.density[interior] - expected).max())
    assert sups[0] <= 0.05
    assert sups[1] <= 0.6 * sups[0]


def test_mixed_endpoints(ctx2, rng):
    from torapot.certificates import random_admissible

    u = random_admissible(ctx2, rng)
    v = random_admissible(ctx2, rng)
    assert np.array_equal(mixed_ma(ctx2, u, v, 2).weights, ma_measure(ctx2, u).weights)
    assert np.array_equal(mixed_ma(ctx2, u, v, 0).weights, ma_measure(ctx2, v).weights)
    with pytest.raises(ValueError, match="out of range"):
        mixed_ma(ctx2, u, v, 3)


def test_mixed_quadratic_polarization(ctx2_unit):
    r = ctx2_unit.quadratic_field()
    mu = mixed_ma(ctx2_unit, r, r, 1)
    assert mu.total == pytest.approx(4.0, abs=1e-9)


def test_perturbed_quadratic_profile(ctx2):
    r = ctx2.reference_potential
    vol = ctx2.gradient_body.volume()
    for t in (0.0, 0.5, 2.0):
        pm = perturbed_ma(ctx2, r, t)
        live = pm.density > 0
        assert np.abs(pm.density[live] - (1 + t) ** 2 * vol).max() <= 1e-8 * vol
        assert abs(pm.direct.total - pm.expansion.total) <= 1e-9 * max(1.0, pm.direct.total)


def test_perturbed_1d_linearity(ctx1, rng):
    from torapot.certificates import random_admissible

    u = random_admissible(ctx1, rng, delta=0.2)
    f0 = ma_density(ctx1, u).density
    vol = ctx1.gradient_body.volume()
    for t in (0.25, 1.0, 4.0):
        pm = perturbed_ma(ctx1, u, t)
        assert np.abs(pm.direct.weights - pm.expansion.weights).max() <= 1e-12
        # S(t) = f + t * (normalization) away from the boundary cones
        interior = ~ctx1.domain.boundary_mask()
        assert np.abs(pm.density[interior] - (f0[interior] + t * vol)).max() <= 1e-8 * vol


def test_perturbed_rejects_negative_t(ctx1):
    with pytest.raises(ValueError):
        perturbed_ma(ctx1, ctx1.reference_potential, -0.5)


def test_plurifine_locality(ctx1, ctx2, rng):
    from torapot.certificates import plurifine_certificate, random_admissible
    from torapot.certificates import normalized_below

    for ctx in (ctx1, ctx2):
        phi = ctx.zero_field()
        for _ in range(5):
            u = normalized_below(random_admissible(ctx, rng), phi, -1.0)
            j = float(rng.uniform(0.4, 3.0))
            rep = plurifine_certificate(ctx, u, phi, j)
            assert rep.passed, rep.to_dict()
