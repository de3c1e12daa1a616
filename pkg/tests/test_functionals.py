import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torapot import (
    DiscreteMeasure,
    ScalarField,
    Weight,
    build_context,
    chi2_from_chi1,
    conj_chi,
    conj_inequality_check,
    conj_pair,
    construct_weight,
    energy_chi,
    entropy,
    ma_measure,
    rel_entropy,
    shift,
    tau2_at_one,
    uniform_measure,
    weight_from_table,
    weight_power,
)
from torapot.certificates import normalized_below, random_admissible


def test_weight_power_examples():
    w = weight_power(1.0)
    assert w(3.0) == 3.0
    w2 = weight_power(2.0)
    assert w2.inverse(9.0) == pytest.approx(3.0)
    n = 2
    p = n / (n - 1)
    assert weight_power(p)(4.0) == pytest.approx(16.0)
    with pytest.raises(ValueError):
        weight_power(0.0)


def test_weight_table_roundtrip():
    ts = np.linspace(0, 10, 41)
    w = weight_from_table(ts, ts**1.5 + ts)
    probes = np.linspace(0, 25, 57)  # beyond the table: linear extension
    vals = np.asarray(w(probes))
    assert np.all(np.diff(vals) > 0)
    assert np.abs(np.asarray(w(w.inverse(vals))) - vals).max() <= 1e-9


def test_weight_serialization_roundtrip():
    w = weight_power(1.5)
    w2 = Weight.from_json(w.to_json())
    assert w2(2.0) == w(2.0)
    ts = np.linspace(0, 5, 11)
    t = weight_from_table(ts, np.expm1(ts))
    t2 = Weight.from_json(t.to_json())
    assert np.array_equal(np.asarray(t2(ts)), np.asarray(t(ts)))


def test_chi2_power_closed_form():
    n = 2
    p = 3.0
    chi2 = chi2_from_chi1(weight_power(p), n)
    q = 1 + p / n
    t = np.linspace(0, 5, 21)
    assert np.abs(np.asarray(chi2(t)) - t**q / q).max() <= 1e-12
    chi2_lin = chi2_from_chi1(weight_power(1.0), 1)
    assert float(np.asarray(chi2_lin(3.0))) == pytest.approx(4.5)


def test_chi2_table_vs_quadrature_oracle():
    ts = np.linspace(0.0, 6.0, 25)
    chi1 = weight_from_table(ts, ts * np.exp(0.2 * ts))
    n = 2
    chi2 = chi2_from_chi1(chi1, n)

    def oracle(t):
        # adaptive quadrature over the interpolant, split at its kinks
        # (sqrt(chi1) is not smooth at 0, so fixed-order refinement stalls)
        import mpmath as mp

        edges = np.unique(np.concatenate([ts[ts < t], [0.0, t]])).tolist()
        return float(mp.quad(lambda s: mp.sqrt(float(np.asarray(chi1(float(s))))), edges))

    for t in (0.5, 1.7, 3.3, 5.9):
        assert float(np.asarray(chi2(t))) == pytest.approx(oracle(t), rel=1e-8)


def test_tau2_power_closed_form():
    for n in (1, 2):
        for p in (1.0, 2.0, 3.5):
            chi2 = chi2_from_chi1(weight_power(p), n)
            q = 1 + p / n
            for a in (0.2, 0.5, 0.9):
                assert tau2_at_one(chi2, a) == pytest.approx(a ** (-n / p) / q, rel=1e-12)


def test_tau2_special_value():
    # p = n, n = 1, a = 1/2: q = 2 and tau2(1) = 2 * 1/2 = 1
    chi2 = chi2_from_chi1(weight_power(1.0), 1)
    assert tau2_at_one(chi2, 0.5) == pytest.approx(1.0)


def test_tau2_table_cross_validates():
    # independent numeric route on the same tabulated weight: root-find the
    # level s, then evaluate chi2(s) / chi1(s)**(1/n) directly
    from scipy.optimize import brentq

    n = 2
    ts = np.linspace(0.0, 60.0, 1201)
    chi1_tab = weight_from_table(ts, ts**2)
    chi2_tab = chi2_from_chi1(chi1_tab, n)
    for a in (0.35, 0.6, 0.85):
        target = a ** (-n)
        s = brentq(lambda t: float(np.asarray(chi1_tab(t))) - target, 1e-9, 59.0, xtol=1e-14)
        expected = float(np.asarray(chi2_tab(s))) / float(np.asarray(chi1_tab(s))) ** (1.0 / n)
        assert tau2_at_one(chi2_tab, a) == pytest.approx(expected, rel=1e-8)


def test_tau2_requires_derivation_and_range():
    with pytest.raises(ValueError, match="derivation"):
        tau2_at_one(weight_power(2.0), 0.5)
    chi2 = chi2_from_chi1(weight_power(1.0), 1)
    with pytest.raises(ValueError):
        tau2_at_one(chi2, 1.5)


def test_energy_constant_gap(ctx1, rng):
    phi = ctx1.zero_field()
    u = shift(phi, -1.7)
    chi = weight_power(2.0)
    m = ma_measure(ctx1, phi).total
    assert energy_chi(ctx1, u, phi, chi) == pytest.approx(float(np.asarray(chi(1.7))) * m)
    assert energy_chi(ctx1, phi, phi, chi) == 0.0


def test_energy_matches_node_sum(ctx1, rng):
    phi = ctx1.zero_field()
    u = normalized_below(random_admissible(ctx1, rng), phi, -1.0)
    chi = weight_power(1.5)
    mu = ma_measure(ctx1, u)
    gap = np.abs(u.values - phi.values)
    expected = float(np.sum(np.asarray(chi(gap)) * mu.weights))
    assert energy_chi(ctx1, u, phi, chi) == pytest.approx(expected, rel=1e-13)


def test_energy_rejects_less_singular(ctx1):
    phi = ctx1.zero_field()
    mask = np.zeros(ctx1.domain.size, bool)
    mask[0] = True
    phi_m = ScalarField(ctx1.domain, phi.values, mask)
    with pytest.raises(ValueError, match="singular"):
        energy_chi(ctx1, phi, phi_m, weight_power(1.0))


def test_entropy_of_reference_is_zero(ctx1):
    # MA(u) proportional to the reference: entropy is exactly zero
    assert entropy(ctx1, ctx1.reference_potential) == 0.0
    assert entropy(ctx1, shift(ctx1.reference_potential, 2.5)) == 0.0


def test_entropy_atom_infinite(ctx1):
    x = ctx1.domain.points[:, 0]
    assert math.isinf(entropy(ctx1, ScalarField(ctx1.domain, np.abs(x))))


def test_entropy_nonnegative(ctx1, rng):
    for _ in range(5):
        u = random_admissible(ctx1, rng, delta=0.3)
        e = entropy(ctx1, u)
        if math.isfinite(e):
            assert e >= -1e-10


def test_entropy_finiteness_invariant_under_reference_swap(ctx1, rng):
    u = random_admissible(ctx1, rng, delta=0.3)
    e0 = entropy(ctx1, u)
    if not math.isfinite(e0):
        return
    # bounded-ratio density swap changes the value by at most log of the
    # ratio bounds, two-sided
    f = 1.0 + 0.5 * np.sin(3 * ctx1.domain.points[:, 0])
    w = f * ctx1.reference_density.weights
    other = DiscreteMeasure(ctx1.domain, w / w.sum())
    e1 = entropy(ctx1, u, reference=other)
    assert math.isfinite(e1)
    ratio = (f / w.sum()) if False else f
    hi = math.log((ratio.max()) / (w.sum() / 1.0))
    # two-sided bound with the normalized ratio bounds
    g = other.weights / ctx1.reference_density.weights
    assert e0 - math.log(g.max()) - 1e-9 <= e1 <= e0 - math.log(g.min()) + 1e-9


def test_rel_entropy_examples(ctx1):
    mu = ctx1.reference_density
    assert rel_entropy(mu, mu) == 0.0
    w = mu.weights.copy()
    nu_w = w.copy()
    nu_w[0] = 0.0
    nu = DiscreteMeasure(ctx1.domain, nu_w / nu_w.sum())
    assert math.isinf(rel_entropy(mu, nu))
    with pytest.raises(ValueError, match="probability"):
        rel_entropy(mu.rescaled(2.0), mu)
    assert rel_entropy(mu.rescaled(2.0), mu, normalize=True) == 0.0


def test_rel_entropy_half_density():
    dom = build_context(1, (-1, 1), 4).domain
    nu = uniform_measure(dom)
    f = np.array([2.0, 2.0, 0.0, 0.0])
    mu = DiscreteMeasure(dom, f * nu.weights)
    assert mu.is_probability()
    assert rel_entropy(mu, nu) == pytest.approx(math.log(2.0), rel=1e-14)


def test_rel_entropy_two_level_density():
    dom = build_context(1, (-1, 1), 4).domain
    nu = uniform_measure(dom)
    f = np.array([0.5, 0.5, 1.5, 1.5])
    mu = DiscreteMeasure(dom, f * nu.weights)
    expected = 0.5 * math.log(0.5) / 2 + 1.5 * math.log(1.5) / 2
    assert rel_entropy(mu, nu) == pytest.approx(expected, rel=1e-14)


def test_rel_entropy_singular_mass_infinite(ctx1):
    mu = DiscreteMeasure(ctx1.domain, ctx1.reference_density.weights * 0.5, singular_mass=0.5)
    assert math.isinf(rel_entropy(mu, ctx1.reference_density))


def test_construct_weight_constant_gap(ctx1):
    phi = ctx1.zero_field()
    u = shift(phi, -1.0)
    mu = ma_measure(ctx1, u).normalized()
    chi = construct_weight(ctx1, u, phi, mu)
    # degenerate branch: chi is linear beyond t = 1
    t = np.asarray([1.0, 2.0, 3.0, 5.0])
    v = np.asarray(chi(t))
    slopes = np.diff(v) / np.diff(t)
    assert np.abs(slopes - slopes[0]).max() <= 1e-12
    assert float(np.asarray(chi(0.0))) == 0.0


def test_construct_weight_exponential_tail(ctx1):
    phi = ctx1.zero_field()
    x = ctx1.domain.points[:, 0]
    gap = 1.0 + 4.0 * (x + 1.0) / 2.0  # admissible: u = -gap has slopes in the body
    u = ScalarField(ctx1.domain, -gap)
    w = np.exp(-(gap - 1.0))
    mu = DiscreteMeasure(ctx1.domain, w / w.sum())
    chi = construct_weight(ctx1, u, phi, mu)
    levels = chi.meta["levels"]
    # levels grow like log k against the exponential tail
    ks = np.arange(1, len(levels) + 1)
    assert np.corrcoef(np.log(ks[2:]), np.asarray(levels)[2:])[0, 1] > 0.99
    # the layer-cake identity: integral h over [1, t_max] equals the k^-2 sum
    lhs = float(np.sum(np.asarray(chi(gap)) * mu.weights))
    assert lhs <= float(np.asarray(chi(1.0))) + chi.meta["sum_k2"] + 1e-6


def test_construct_weight_fuzz_strictly_increasing(ctx1, rng):
    phi = ctx1.zero_field()
    for _ in range(5):
        u = normalized_below(random_admissible(ctx1, rng), phi, -1.0)
        mu = ma_measure(ctx1, u).normalized()
        chi = construct_weight(ctx1, u, phi, mu)
        probe = np.linspace(0.0, float(chi.ts[-1]) + 2.0, 301)
        vals = np.asarray(chi(probe))
        assert vals[0] == 0.0
        assert np.diff(vals).min() > 0


def test_conj_pair_values():
    assert conj_pair(0.0) == 0.0
    assert conj_pair(1.0) == pytest.approx(math.e - 2.0)
    assert conj_chi(0.0) == 0.0
    with pytest.raises(ValueError):
        conj_pair(-1.0)


def test_conj_inequality_fuzz(rng):
    s = rng.uniform(0, 50, 10_000)
    t = rng.uniform(0, 50, 10_000)
    chi_s = np.asarray(conj_chi(s))
    chi_t = np.expm1(t) - t
    assert np.all(s * t <= chi_s + chi_t + 1e-12 * (1 + s * t))


@given(
    s=st.floats(0, 50, allow_nan=False),
    t=st.floats(0, 50, allow_nan=False),
)
@settings(max_examples=200, deadline=None)
def test_conj_inequality_property(s, t):
    assert conj_inequality_check(s, t)
