"""Scenario runners: turn a JSON config into certificate reports and CSV rows.

One config describes one experiment: a model context (or several), the
certificate blocks to run, a seed, and an output directory.  Runs are
deterministic given (config, seed): every random draw comes from a
SeedSequence spawned per block, and report assembly is order-stable, so the
emitted CSV and JSON are byte-identical across reruns.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .convex import p_envelope
from .functionals import chi2_from_chi1, energy_chi, entropy, tau2_at_one, weight_from_table, weight_power
from .grid import DiscreteMeasure, GradientBody, ModelContext, ScalarField, shift
from .ma import build_context, ma_measure
from .certificates import (
    CertificateReport,
    atomic_entropy_demo,
    energy_monotone_certificate,
    fit_skoda,
    inclusion_check,
    mass_profile_bound,
    mt_certificate,
    normalized_below,
    perturbation_scan,
    plurifine_certificate,
    random_admissible,
    subentropy_check,
    weight_construction_certificate,
)

__all__ = ["ConfigError", "load_config", "context_from_config", "run_verify", "run_sweep", "write_reports"]

CSV_HEADER = "# torapot-report v1"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc


def context_from_config(cfg: dict) -> ModelContext:
    dim = int(cfg.get("dim", 1))
    if dim not in (1, 2):
        raise ConfigError("unsupported dimension")
    bounds = cfg.get("bounds", [-1.0, 1.0])
    resolution = int(cfg.get("resolution", 201 if dim == 1 else 33))
    if resolution < 3:
        raise ConfigError("resolution must be at least 3")
    body_spec = cfg.get("gradient_body", 2.0)
    if isinstance(body_spec, (int, float)):
        body = GradientBody.box(dim, float(body_spec))
    else:
        body = GradientBody.from_spec(dim, body_spec)
    return build_context(dim, bounds, resolution, body=body)


def _named_weight(name):
    if name in ("t", "p1", 1):
        return weight_power(1.0)
    if name in ("t^2", "t2", "p2", 2):
        return weight_power(2.0)
    if name == "table":
        ts = np.linspace(0.0, 40.0, 161)
        return weight_from_table(ts, ts + 0.5 * ts**2)
    if isinstance(name, (int, float)):
        return weight_power(float(name))
    raise ConfigError(f"unknown weight {name!r}")


def _model_side(ctx, rng, flavor: str):
    v = ctx.zero_field()
    if flavor == "minimal":
        return v
    g = random_admissible(ctx, rng)
    phi = p_envelope(ctx, g)
    return shift(phi, -float(phi.values.max()))


def _block_mt(ctx, block, rng, skoda):
    reports = []
    count = int(block.get("count", 5))
    betas = [float(b) for b in block.get("betas", [1.5, 2.0, 4.0])]
    for b in betas:
        if b <= 1:
            raise ConfigError("beta must exceed 1")
    weights = [_named_weight(w) for w in block.get("weights", ["t", "t^2", "table"])]
    profile = bool(block.get("mass_profile", False))
    for k in range(count):
        phi = _model_side(ctx, rng, "minimal" if k % 2 == 0 else "random")
        u = random_admissible(ctx, rng, delta=(0.15 if k % 3 == 0 else None))
        u = normalized_below(u, phi, -1.0)
        for chi in weights:
            for beta in betas:
                reports.append(mt_certificate(ctx, u, phi, chi, beta, skoda))
            if profile:
                reports.append(mass_profile_bound(ctx, u, phi, chi, skoda))
    return reports


def _block_plurifine(ctx, block, rng, skoda):
    reports = []
    for _ in range(int(block.get("count", 20))):
        phi = ctx.zero_field()
        u = random_admissible(ctx, rng)
        u = normalized_below(u, phi, -1.0)
        j = float(rng.uniform(0.5, 4.0))
        reports.append(plurifine_certificate(ctx, u, phi, j))
    return reports


def _block_energy_monotone(ctx, block, rng, skoda):
    reports = []
    names = block.get("weights", ["t", "t^2", "constructed"])
    for _ in range(int(block.get("count", 6))):
        phi = ctx.zero_field()
        u = random_admissible(ctx, rng)
        u = normalized_below(u, phi, -1.0)
        for name in names:
            if name == "constructed":
                from .functionals import construct_weight

                mu = ma_measure(ctx, u).normalized()
                chi = construct_weight(ctx, u, phi, mu)
            else:
                chi = _named_weight(name)
            reports.append(energy_monotone_certificate(ctx, u, phi, chi))
    return reports


def _block_weight_construction(ctx, block, rng, skoda):
    reports = []
    pts = ctx.domain.points
    for _ in range(int(block.get("count", 5))):
        phi = ctx.zero_field()
        # concave gap profile keeps u = phi - gap admissible; the synthetic
        # measure puts an exponential tail on the gap distribution
        if ctx.dim == 1:
            amp = float(rng.uniform(0.6, 1.0))  # keeps slopes inside the body
            gap = 1.0 + 2.0 * amp * (1.0 - ((pts[:, 0] + 1.0) / 2.0) ** 2)
        else:
            amp = float(rng.uniform(0.4, 0.7))
            gap = 1.0 + 2.0 * amp * (1.0 - 0.25 * (pts**2).sum(axis=1))
        u = ScalarField(ctx.domain, phi.values - gap)
        tau = float(rng.uniform(0.8, 1.5))
        w = np.exp(-tau * (gap - 1.0))
        mu = DiscreteMeasure(ctx.domain, w / w.sum())
        reports.append(weight_construction_certificate(ctx, u, phi, mu))
    return reports


def _block_inclusion(ctx, block, rng, skoda):
    reports = []
    if ctx.dim == 2:
        budget = float(block.get("entropy_budget", 5.0))
        epsilons = block.get("epsilons", [0.4, 0.3, 0.22, 0.16, 0.12])
        pts = ctx.domain.points
        r2 = (pts**2).sum(axis=1)
        phi = ctx.zero_field()
        for eps in epsilons:
            s = 1.5 * float(eps)
            u = ScalarField(ctx.domain, s * np.sqrt(float(eps) ** 2 + r2) + 0.5 * r2)
            if entropy(ctx, u) > budget:
                continue
            u = normalized_below(u, phi, -1.0)
            reports.append(inclusion_check(ctx, u, phi))
    else:
        u_fn = lambda p: 0.5 * p[0] ** 2 - 1.5
        phi_fn = lambda p: 0.0
        u = ScalarField(ctx.domain, np.asarray([u_fn(p) for p in ctx.domain.points]))
        reports.append(
            inclusion_check(
                ctx,
                u,
                ctx.zero_field(),
                u_fn=u_fn,
                phi_fn=phi_fn,
                resolutions=tuple(block.get("resolutions", (101, 201, 401))),
            )
        )
    return reports


def _block_perturbation(ctx, block, rng, skoda):
    t_values = [float(t) for t in block.get("t_values", [0.0, 0.25, 1.0, 4.0])]
    if any(t < 0 for t in t_values):
        raise ConfigError("perturbation times must be nonnegative")
    reports = []
    pts = ctx.domain.points
    if ctx.dim == 2:
        fams = [
            ScalarField(ctx.domain, 0.25 * (pts**2 @ np.array([1.0, 0.6]))),
            ScalarField(ctx.domain, 0.35 * (pts**2).sum(axis=1) + 0.1 * pts[:, 0]),
        ]
    else:
        u = random_admissible(ctx, rng, delta=0.2)
        fams = [u, ScalarField(ctx.domain, 0.3 * pts[:, 0] ** 2)]
    for u in fams:
        if math.isinf(entropy(ctx, u)):
            continue
        reports.append(perturbation_scan(ctx, u, t_values))
    return reports


def _block_subentropy(ctx, block, rng, skoda):
    reports = []
    n = ctx.domain.size
    for k in range(int(block.get("count", 100))):
        w3 = rng.uniform(0.5, 1.5, n)
        w3 /= w3.sum()
        f2 = rng.uniform(0.25, 4.0, n)
        w2 = f2 * w3
        w2 /= w2.sum()
        w1 = rng.uniform(0.1, 1.0, n)
        w1 /= w1.sum()
        reports.append(
            subentropy_check(
                DiscreteMeasure(ctx.domain, w1),
                DiscreteMeasure(ctx.domain, w2),
                DiscreteMeasure(ctx.domain, w3),
                seed=k,
            )
        )
    return reports


def _block_no_ent(ctx, block, rng, skoda):
    if ctx.dim != 1:
        ctx = build_context(1, (-1.0, 1.0), 201)
    return [atomic_entropy_demo(ctx)]


_BLOCKS = {
    "moser_trudinger": _block_mt,
    "plurifine": _block_plurifine,
    "energy_monotone": _block_energy_monotone,
    "weight_construction": _block_weight_construction,
    "inclusion": _block_inclusion,
    "perturbation": _block_perturbation,
    "subentropy": _block_subentropy,
    "no_ent": _block_no_ent,
}


def run_verify(config: dict, jobs: int = 1) -> list[CertificateReport]:
    seed = int(config.get("seed", 0))
    base_ctx_cfg = config.get("context", {})
    blocks = config.get("certificates", [])
    if not isinstance(blocks, list) or not blocks:
        raise ConfigError("config must declare a nonempty certificates list")
    tasks = []
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(len(blocks))
    ctx_cache: dict[str, tuple[ModelContext, object]] = {}
    for i, block in enumerate(blocks):
        kind = block.get("kind")
        if kind not in _BLOCKS:
            raise ConfigError(f"unknown certificate kind {kind!r}")
        ctx_cfg = {**base_ctx_cfg, **block.get("context", {})}
        key = json.dumps(ctx_cfg, sort_keys=True)
        if key not in ctx_cache:
            ctx = context_from_config(ctx_cfg)
            sk_cfg = config.get("skoda", {})
            skoda = fit_skoda(
                ctx,
                seed=seed,
                n_probes=int(sk_cfg.get("n_probes", 200)),
                budget=float(sk_cfg.get("budget", 1e3)),
            )
            ctx_cache[key] = (ctx, skoda)
        ctx, skoda = ctx_cache[key]
        tasks.append((i, kind, ctx, block, children[i], skoda))

    def run_one(task):
        i, kind, ctx, block, child, skoda = task
        rng = np.random.default_rng(child)
        return i, _BLOCKS[kind](ctx, block, rng, skoda)

    results: dict[int, list[CertificateReport]] = {}
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for i, reps in pool.map(run_one, tasks):
                results[i] = reps
    else:
        for t in tasks:
            i, reps = run_one(t)
            results[i] = reps
    out: list[CertificateReport] = []
    for i in sorted(results):
        out.extend(results[i])
    for rep in out:
        if rep.seed is None:
            rep.seed = seed
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "INF" if v > 0 else "-INF"
        if math.isnan(v):
            raise ValueError("NaN is never emitted")
        return repr(v)
    return str(v)


def write_reports(reports: list[CertificateReport], out_dir: str, stem: str = "report"):
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, f"{stem}.json")
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    payload = [r.to_dict() for r in reports]
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")
    cols = ["theorem", "inputs", "seed", "name", "lhs", "rhs", "slack", "tol", "passed", "empirical", "note"]
    lines = [CSV_HEADER, ",".join(cols)]
    for r in reports:
        for row in r.csv_rows():
            lines.append(",".join(_fmt(row.get(c, "")).replace(",", ";") for c in cols))
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return json_path, csv_path


def run_sweep(config: dict) -> list[dict]:
    """Cross-product sweep; one row of certificate scalars per cell."""
    axes = config.get("sweep", {})
    resolutions = [int(r) for r in axes.get("resolution", [101])]
    ps = [float(p) for p in axes.get("p", [1.0])]
    betas = [float(b) for b in axes.get("beta", [2.0])]
    t_values = [float(t) for t in axes.get("t", [0.0])]
    for b in betas:
        if b <= 1:
            raise ConfigError("beta must exceed 1")
    base = config.get("context", {})
    dim = int(base.get("dim", 1))
    if dim not in (1, 2):
        raise ConfigError("unsupported dimension")
    seed = int(config.get("seed", 0))
    rows = []
    for res in resolutions:
        ctx = context_from_config({**base, "resolution": res})
        skoda = fit_skoda(ctx, seed=seed, n_probes=int(config.get("skoda", {}).get("n_probes", 100)))
        phi = ctx.zero_field()
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        u = random_admissible(ctx, rng, delta=0.25)
        u = normalized_below(u, phi, -1.0)
        ent = entropy(ctx, u)
        for p in ps:
            chi1 = weight_power(p)
            chi2 = chi2_from_chi1(chi1, ctx.dim)
            E = energy_chi(ctx, u, phi, chi1)
            for beta in betas:
                m_phi = ma_measure(ctx, phi).total
                a = (m_phi / (beta * E)) ** (1.0 / ctx.dim)
                tau = tau2_at_one(chi2, a)
                for t in t_values:
                    pm_density_max = None
                    if t > 0:
                        from .ma import perturbed_ma

                        pm = perturbed_ma(ctx, u, t)
                        pm_density_max = float(pm.density.max())
                    live = u.unmasked
                    gap = phi.values[live] - u.values[live]
                    w = ctx.reference_density.weights[live]
                    profile = float(np.sum(w * np.asarray(chi2(gap))))
                    rows.append(
                        {
                            "resolution": res,
                            "p": p,
                            "beta": beta,
                            "t": t,
                            "energy": E,
                            "entropy": ent,
                            "tau2_1": tau,
                            "profile_integral": profile,
                            "S_surrogate": skoda.S_constant(ctx.dim),
                            "perturbed_density_max": pm_density_max if pm_density_max is not None else 0.0,
                        }
                    )
    return rows


def write_sweep(rows: list[dict], out_dir: str, stem: str = "sweep"):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{stem}.csv")
    cols = [
        "resolution",
        "p",
        "beta",
        "t",
        "energy",
        "entropy",
        "tau2_1",
        "profile_integral",
        "S_surrogate",
        "perturbed_density_max",
    ]
    lines = [CSV_HEADER, ",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
