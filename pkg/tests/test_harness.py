import numpy as np
import pytest

from torapot import build_context, random_admissible
from torapot.harness import ConfigError, context_from_config, run_sweep, run_verify
from torapot.ma import mixed_family, perturbed_ma


def test_context_from_config_bodies():
    ctx = context_from_config({"dim": 1, "resolution": 41, "gradient_body": [-1.5, 2.5]})
    assert ctx.gradient_body.interval == (-1.5, 2.5)
    ctx2 = context_from_config({"dim": 2, "resolution": 9, "gradient_body": [[-1, 1], [-2, 2]]})
    assert ctx2.gradient_body.volume() == pytest.approx(8.0)
    with pytest.raises(ConfigError, match="unsupported dimension"):
        context_from_config({"dim": 0})


def test_run_verify_rejects_unknown_kind():
    with pytest.raises(ConfigError, match="unknown certificate kind"):
        run_verify({"context": {"dim": 1, "resolution": 11}, "certificates": [{"kind": "nope"}]})


def test_run_verify_requires_blocks():
    with pytest.raises(ConfigError, match="nonempty"):
        run_verify({"context": {"dim": 1, "resolution": 11}, "certificates": []})


def test_sweep_entropy_stable_under_refinement():
    rows = run_sweep(
        {
            "seed": 11,
            "context": {"dim": 1},
            "skoda": {"n_probes": 20},
            "sweep": {"resolution": [101, 201, 401], "p": [1.0], "beta": [2.0], "t": [0.0]},
        }
    )
    ents = [r["entropy"] for r in rows]
    assert (max(ents) - min(ents)) / max(ents) <= 0.05


def test_perturbed_density_monotone_in_t():
    ctx = build_context(1, (-1, 1), 101)
    rng = np.random.default_rng(4)
    u = random_admissible(ctx, rng, delta=0.25)
    mixed = mixed_family(ctx, u)
    prev = None
    for t in (0.0, 0.25, 1.0, 4.0):
        S = perturbed_ma(ctx, u, t, mixed).density
        if prev is not None:
            assert np.all(S >= prev - 1e-12)
        prev = S
