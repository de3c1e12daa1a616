"""Command-line entry point: verify / sweep / demo.

Exit codes: 0 all assertions passed, 1 assertion failures (reports are
still written), 2 configuration errors.  Output directory precedence:
--out flag, then the TORAPOT_OUT environment variable, then the config's
output_dir field.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from importlib import resources

import numpy as np

from . import harness
from .certificates import atomic_entropy_demo, fit_skoda, mt_certificate, normalized_below, perturbation_scan, random_admissible
from .functionals import construct_weight, weight_power
from .grid import ScalarField
from .harness import ConfigError
from .ma import build_context

DEMOS = ("no-ent", "mt", "inclusion", "weight-construct", "perturb")


def _resolve_config(path: str) -> str:
    if os.path.exists(path):
        return path
    # bundled configs may be named directly, e.g. `torapot verify default.json`
    name = os.path.basename(path)
    ref = resources.files("torapot").joinpath("configs", name)
    if ref.is_file():
        return str(ref)
    raise ConfigError(f"config file not found: {path}")


def _out_dir(args, config) -> str:
    if args.out:
        return args.out
    env = os.environ.get("TORAPOT_OUT")
    if env:
        return env
    return config.get("output_dir", "torapot-out")


def cmd_verify(args) -> int:
    try:
        config = harness.load_config(_resolve_config(args.config))
        if args.seed is not None:
            config["seed"] = args.seed
        reports = harness.run_verify(config, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _out_dir(args, config)
    json_path, csv_path = harness.write_reports(reports, out)
    n_ass = sum(len(r.assertions) for r in reports)
    n_fail = sum(1 for r in reports for a in r.assertions if not a.passed)
    print(f"{len(reports)} certificates, {n_ass} assertions, {n_fail} failures")
    print(f"reports: {json_path} {csv_path}")
    if n_fail:
        for r in reports:
            for a in r.assertions:
                if not a.passed:
                    print(f"FAIL {r.theorem}/{a.name}: lhs={a.lhs} rhs={a.rhs} slack={a.slack}")
        return 1
    return 0


def cmd_sweep(args) -> int:
    try:
        config = harness.load_config(_resolve_config(args.config))
        if args.seed is not None:
            config["seed"] = args.seed
        rows = harness.run_sweep(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _out_dir(args, config)
    path = harness.write_sweep(rows, out)
    print(f"{len(rows)} sweep rows -> {path}")
    return 0


def _fmt_inf(x: float) -> str:
    if math.isinf(x):
        return "+INF" if x > 0 else "-INF"
    return f"{x:.6g}"


def cmd_demo(args) -> int:
    name = args.name
    if name not in DEMOS:
        print(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    if name == "no-ent":
        ctx = build_context(1, (-1, 1), 201)
        rep = atomic_entropy_demo(ctx)
        ent = rep.constants["entropy_atomic"]
        print(f"entropy = {_fmt_inf(ent)}, singularity type = same")
        print(f"mollified entropy = {_fmt_inf(rep.constants['entropy_mollified'])}")
        print("passed" if rep.passed else "FAILED")
        return 0 if rep.passed else 1
    if name == "mt":
        ctx = build_context(2, (-1, 1), 33)
        skoda = fit_skoda(ctx, seed=seed, n_probes=200)
        phi = ctx.zero_field()
        u = normalized_below(random_admissible(ctx, rng), phi, -1.0)
        rep = mt_certificate(ctx, u, phi, weight_power(2.0), 2.0, skoda)
        for a in rep.assertions:
            print(f"{'ok ' if a.passed else 'FAIL'} {a.name}: lhs={_fmt_inf(a.lhs)} rhs={_fmt_inf(a.rhs)} slack={_fmt_inf(a.slack)}")
        print(f"a = {rep.constants['a']:.6g}, tau2(1) = {rep.constants['tau2_1']:.6g}")
        return 0 if rep.passed else 1
    if name == "inclusion":
        ctx = build_context(2, (-1, 1), 33, body_halfwidth=1.25)
        pts = ctx.domain.points
        r2 = (pts**2).sum(axis=1)
        u = ScalarField(ctx.domain, 0.3 * np.sqrt(0.04 + r2) + 0.5 * r2)
        phi = ctx.zero_field()
        from .certificates import inclusion_check
        from .functionals import entropy

        print(f"entropy = {_fmt_inf(entropy(ctx, u))}")
        rep = inclusion_check(ctx, normalized_below(u, phi, -1.0), phi)
        for a in rep.assertions:
            print(f"{'ok ' if a.passed else 'FAIL'} {a.name}")
        print(f"E_p = {rep.constants['E_p']:.6g} (p = {rep.constants['p']:.3g})")
        return 0 if rep.passed else 1
    if name == "weight-construct":
        ctx = build_context(1, (-1, 1), 201)
        x = ctx.domain.points[:, 0]
        gap = 1.0 + 4.0 * (x + 1.0) / 2.0
        u = ScalarField(ctx.domain, -gap)
        phi = ctx.zero_field()
        w = np.exp(-(gap - 1.0))
        from .grid import DiscreteMeasure

        mu = DiscreteMeasure(ctx.domain, w / w.sum())
        chi = construct_weight(ctx, u, phi, mu)
        levels = chi.meta["levels"]
        print("k    t_k")
        for k, t in enumerate(levels[:12], start=1):
            print(f"{k:<4d} {t:.6g}")
        if len(levels) > 12:
            print(f"...  ({len(levels)} levels total)")
        lhs = float(np.sum(np.asarray(chi(gap)) * mu.weights))
        bound = float(np.asarray(chi(1.0))) + chi.meta["sum_k2"]
        print(f"sum k^-2 = {chi.meta['sum_k2']:.6g}")
        print(f"energy integral {lhs:.6g} <= chi(1) + sum k^-2 = {bound:.6g}: {lhs <= bound + 1e-6}")
        return 0 if lhs <= bound + 1e-6 else 1
    if name == "perturb":
        ctx = build_context(2, (-1, 1), 33)
        pts = ctx.domain.points
        u = ScalarField(ctx.domain, 0.25 * (pts**2 @ np.array([1.0, 0.6])))
        rep = perturbation_scan(ctx, u, [0.0, 0.25, 1.0, 4.0])
        for a in rep.assertions:
            print(f"{'ok ' if a.passed else 'FAIL'} {a.name}")
        return 0 if rep.passed else 1
    return 2


def cmd_experiment(args) -> int:
    """Exploratory search, never pass/fail: scan random finite-entropy
    potentials for perturbed measures whose density split degrades."""
    if args.name != "entropy-stability":
        print(f"unknown experiment {args.name!r}; available: entropy-stability", file=sys.stderr)
        return 2
    from .functionals import entropy as _entropy
    from .ma import perturbed_ma

    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    ctx = build_context(2, (-1, 1), 25, body_halfwidth=1.25)
    print("EXPLORATORY: searching for entropy-stability counterexample candidates")
    print("EXPLORATORY: (a candidate is suggestive only, never a verdict)")
    print(f"{'case':<6}{'entropy':>12}{'worst t':>9}{'singular frac':>15}{'density max':>13}")
    found = 0
    cases = 0
    pts = ctx.domain.points
    background = 0.45 * (pts**2).sum(axis=1)
    for k in range(args.count):
        g = random_admissible(ctx, rng, delta=float(rng.uniform(0.3, 0.6)))
        lam = float(rng.uniform(0.15, 0.45))
        u = ScalarField(ctx.domain, lam * g.values + (1.0 - lam) * background)
        ent = _entropy(ctx, u)
        if not math.isfinite(ent):
            continue
        cases += 1
        worst_frac, worst_t, dmax = 0.0, 0.0, 0.0
        for t in (0.05, 0.25, 1.0):
            pm = perturbed_ma(ctx, u, t)
            frac = pm.singular_mass / max(pm.direct.total, 1e-300)
            if frac > worst_frac:
                worst_frac, worst_t = frac, t
            dmax = max(dmax, float(pm.density.max()))
        flag = " <- candidate" if worst_frac > 1e-8 else ""
        if flag:
            found += 1
        print(f"{cases:<6}{ent:>12.4f}{worst_t:>9.2f}{worst_frac:>15.3e}{dmax:>13.2f}{flag}")
    print(f"EXPLORATORY: {found} candidate(s) among {cases} finite-entropy samples")
    print("EXPLORATORY: output is descriptive; no assertion is made either way")
    return 0


def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", type=str, default=None, help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker pool size for verify")
    parser = argparse.ArgumentParser(
        prog="torapot",
        description="Certificates and sweeps for convex-grid pluripotential objects",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", parents=[common], help="run the certificate suite from a config")
    p_verify.add_argument("config")
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", parents=[common], help="cross-product sweep to CSV")
    p_sweep.add_argument("config")
    p_sweep.set_defaults(func=cmd_sweep)

    p_demo = sub.add_parser("demo", parents=[common], help=f"run a bundled demo: {', '.join(DEMOS)}")
    p_demo.add_argument("name")
    p_demo.set_defaults(func=cmd_demo)

    p_exp = sub.add_parser(
        "experiment",
        parents=[common],
        help="exploratory scans (entropy-stability); output is never pass/fail",
    )
    p_exp.add_argument("name")
    p_exp.add_argument("--count", type=int, default=12)
    p_exp.set_defaults(func=cmd_experiment)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
