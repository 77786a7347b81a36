"""Command-line interface: ``simulate``, ``fit``, ``forecast``, ``summarize``, ``prior-check``.

Every command accepts ``--config FILE``, an INI file whose section named
after the command supplies defaults for the command's options (option names
with ``-`` or ``_``).  Command-line flags override the file; unknown keys are
rejected.  Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

import argparse
import configparser
import json
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analysis import (ForecastResult, functional_summary, misclassification, prior_excitation_draws,
                       rho_summary, write_report)
from .catalog import CatalogError, load_catalog, save_catalog, split_at
from .excitation import BasisGrid, GammaProcessHyper, prior_alpha_moments
from .kernels import seeded_rng
from .sampler import ChainConfig, ChainOutput, NumericalError, preset, run_chain
from .sampler.models import MODELS
from .sampler.priors import PRESETS
from .simulate import SimulationError, continue_process, scenario, simulate_mhp

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _floats(text):
    """Comma-separated floats, or ``start:stop:num`` for an even grid."""
    if ":" in text:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    return np.array([float(v) for v in text.split(",") if v.strip()])


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {text!r}")


def _threads(args):
    return args.threads if args.threads else (os.cpu_count() or 1)


def _pool_map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


def _write_manifest(path, command, args, extra=None):
    manifest = {
        "command": command,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "args": {k: v for k, v in vars(args).items() if k != "func"},
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=_json_default)


def _json_default(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return str(v)


def _out_dir(args):
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args):
    spec = scenario(args.scenario, seed=args.seed, T=args.T, allow_unstable=args.unstable,
                    max_events=args.max_events)
    print(f"branching ratio rho = {spec.rho:.4f}")
    if spec.rho >= 1 and not args.unstable:
        raise ValidationError(f"unstable specification: rho = {spec.rho:.4f} >= 1 (use --unstable)")
    out = _out_dir(args)
    labeled, y = simulate_mhp(spec, seeded_rng(args.seed))
    save_catalog(labeled, os.path.join(out, "catalog.csv"))
    if args.emit_branching:
        with open(os.path.join(out, "branching.csv"), "w", encoding="utf-8") as fh:
            fh.write("index,parent_index\n")
            for i, p in enumerate(y, start=1):
                fh.write(f"{i},{int(p)}\n")
    _write_manifest(os.path.join(out, "manifest.json"), "simulate", args,
                    {"rho": spec.rho, "n": labeled.n, "immigrants": int(np.sum(y == 0))})
    print(f"{labeled.n} events ({int(np.sum(y == 0))} immigrants) written to {out}")


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def _load_for_fit(args):
    rng = seeded_rng(args.seed, 2**32) if args.jitter else None
    kappa_max = np.inf if args.kappa_max is None else args.kappa_max
    labeled = load_catalog(args.catalog, args.kappa0, kappa_max, T=args.T, margin=args.margin,
                           jitter=args.jitter, clamp=args.clamp, rng=rng)
    if args.t_split is not None:
        labeled = split_at(labeled, args.t_split)[0]
    return labeled


def _chain_config(args, stream):
    pre = preset(args.preset)
    priors = dict(pre["priors"])
    for item in args.prior or []:
        name, spec = item.split("=", 1)
        parts = spec.split(":")
        priors[name] = (parts[0], *map(float, parts[1:]))
    return ChainConfig(
        iterations=args.iterations, burn_in=args.burn_in, thin=args.thin, seed=args.seed,
        stream=stream, L=args.L or pre["L"], M=args.M or pre["M"], J=args.J or pre.get("J", 100),
        n_atoms=args.atoms, priors=priors, check_invariants=args.check_invariants,
    )


def _fit_one(job):
    args, pattern, stream = job
    cfg = _chain_config(args, stream)
    ckpt = os.path.join(args.out_dir, f"checkpoint-{stream}.pkl") if args.checkpoint_every else None
    chain = run_chain(args.model, pattern, cfg, checkpoint_path=ckpt,
                      checkpoint_every=args.checkpoint_every, resume=args.resume)
    return chain


def cmd_fit(args):
    args.catalog = os.path.abspath(args.catalog)
    labeled = _load_for_fit(args)
    out = _out_dir(args)
    pattern = labeled.pattern
    if args.model.startswith("nonpar") and not np.isfinite(pattern.kappa_max):
        raise ValidationError("nonparametric models need --kappa-max")
    jobs = [(args, pattern, k) for k in range(args.chains)]
    chains = _pool_map(_fit_one, jobs, _threads(args))
    files = []
    for k, chain in enumerate(chains):
        snap, man = os.path.join(out, f"chain-{k}.jsonl"), os.path.join(out, f"chain-{k}.json")
        chain.write(snap, man, extra={"catalog": os.path.abspath(args.catalog)})
        files.append([os.path.basename(snap), os.path.basename(man)])
    rho = np.concatenate([c.rho_samples() for c in chains])
    p_above = float(np.mean(rho > 1.0))
    if p_above > 0.01:
        _warn(f"posterior mass of rho above 1 is {p_above:.3f} (> 1%)")
    _write_manifest(os.path.join(out, "manifest.json"), "fit", args,
                    {"chains": files, "n": pattern.n, "T": pattern.T,
                     "config": chains[0].config, "acceptance": [c.acceptance for c in chains],
                     "wall_time": [c.timings.get("wall") for c in chains]})
    print(f"fitted {args.model} to {pattern.n} events; rho mean {rho.mean():.4f}; output in {out}")


def load_chains(fit_dir):
    """Read every chain listed in a fit directory's manifest and pool the snapshots."""
    man_path = os.path.join(fit_dir, "manifest.json")
    if not os.path.exists(man_path):
        raise ValidationError(f"no fit manifest in {fit_dir}")
    with open(man_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    chains = []
    for snap, man in manifest["chains"]:
        sp, mp = os.path.join(fit_dir, snap), os.path.join(fit_dir, man)
        if not os.path.exists(sp):
            raise ValidationError(f"missing chain file {sp}")
        chains.append(ChainOutput.read(sp, mp))
    first = chains[0]
    pooled = ChainOutput(first.model, first.meta, [s for c in chains for s in c.snapshots],
                         np.concatenate([c.rho_trace for c in chains]), first.acceptance,
                         first.timings, first.config)
    return pooled, manifest


# ---------------------------------------------------------------------------
# forecast
# ---------------------------------------------------------------------------


def _forecast_one(job):
    chain, s, hist_t, hist_k, start, end, seed, max_events = job
    background, excitation, marks = chain.process_at(s)
    t, _ = continue_process(seeded_rng(seed, s), background, excitation, marks, hist_t, hist_k,
                            start, end, max_events)
    return t.size


def cmd_forecast(args):
    chain, manifest = load_chains(args.fit_dir)
    if len(chain) == 0:
        raise ValidationError("fitted chain has no snapshots")
    out = _out_dir(args)
    fa = manifest["args"]
    kappa_max = np.inf if fa["kappa_max"] is None else fa["kappa_max"]
    full = load_catalog(fa["catalog"], fa["kappa0"], kappa_max, T=fa["T"], margin=fa["margin"], jitter=fa["jitter"],
                        clamp=fa["clamp"],
                        rng=seeded_rng(fa["seed"], 2**32) if fa["jitter"] else None)
    start = float(manifest["T"])
    if args.t_end <= start:
        raise ValidationError("forecast horizon must end after the fitted window (overlap)")
    times, marks = np.asarray(full.pattern.times), np.asarray(full.pattern.marks)
    hist = times < start
    observed = args.observed
    if observed is None and full.pattern.T >= args.t_end:
        observed = int(np.sum((times >= start) & (times < args.t_end)))
    jobs = [(chain, s, times[hist], marks[hist], start, args.t_end, args.seed, args.max_events)
            for s in range(len(chain))]
    draws = np.array(_pool_map(_forecast_one, jobs, _threads(args)), dtype=int)
    res = ForecastResult(draws, args.level, observed)
    np.savetxt(os.path.join(out, "forecast_draws.csv"), draws, fmt="%d", header="count", comments="")
    extra = {"interval": res.interval, "observed": observed, "interval_score": res.interval_score,
             "horizon": [start, args.t_end], "mean": float(draws.mean())}
    _write_manifest(os.path.join(out, "forecast.json"), "forecast", args, extra)
    msg = f"predictive {int(args.level * 100)}% interval ({res.interval[0]:.0f}, {res.interval[1]:.0f})"
    if res.interval_score is not None:
        msg += f"; observed {observed}; interval score {res.interval_score:.1f}"
    print(msg)


# ---------------------------------------------------------------------------
# summarize
# ---------------------------------------------------------------------------


def cmd_summarize(args):
    chain, manifest = load_chains(args.fit_dir)
    if len(chain) == 0:
        raise ValidationError("fitted chain has no snapshots")
    out = _out_dir(args)
    meta = chain.meta
    k0 = meta["kappa0"]
    kmax = meta["kappa_max"] if np.isfinite(meta["kappa_max"]) else k0 + 5.0
    kgrid = args.kappa_grid if args.kappa_grid is not None else np.linspace(k0, kmax, 52)[1:-1]
    xgrid = args.x_grid if args.x_grid is not None else np.linspace(0.01, 5.0, 100)
    tgrid = args.t_grid if args.t_grid is not None else np.linspace(0.0, meta["T"], 101)[1:]
    written = []

    def emit(summary, name):
        summary.to_csv(os.path.join(out, name))
        written.append(name)

    emit(functional_summary(chain, "alpha", kgrid), "alpha.csv")
    emit(functional_summary(chain, "mark_density", kgrid), "mark_density.csv")
    emit(functional_summary(chain, "background", tgrid), "background.csv")
    for k in args.kappa_density if args.kappa_density is not None else [kgrid[len(kgrid) // 4]]:
        emit(functional_summary(chain, "offspring_density", xgrid, kappa=k), f"offspring_density_k{k:g}.csv")
        emit(functional_summary(chain, "tail_prob", xgrid, kappa=k), f"tail_prob_k{k:g}.csv")
    np.savetxt(os.path.join(out, "rho_trace.csv"), chain.rho_trace, header="rho", comments="")
    extra = {}
    labels_path = args.labels or manifest.get("args", {}).get("catalog")
    if labels_path:
        fa = manifest["args"]
        full = load_catalog(labels_path, fa["kappa0"], np.inf if fa["kappa_max"] is None else fa["kappa_max"],
                            T=fa["T"], margin=fa["margin"], clamp=fa["clamp"], jitter=fa["jitter"],
                            rng=seeded_rng(fa["seed"], 2**32) if fa["jitter"] else None)
        if full.labels is not None:
            n = meta["n"]
            score = misclassification(chain.values("y"), full.labels[:n])
            extra["misclassification mean"] = f"{score.mean:.4f}"
            extra["misclassification sd"] = f"{score.sd:.4f}"
    if args.forecast:
        with open(args.forecast, encoding="utf-8") as fh:
            fc = json.load(fh)
        extra["interval score"] = fc.get("interval_score")
    lines = write_report(os.path.join(out, "report.txt"), chain, extra)
    rs = rho_summary(chain)
    if rs["prob_above_one"] > 0.01:
        _warn(f"posterior mass of rho above 1 is {rs['prob_above_one']:.3f} (> 1%)")
    print("\n".join(lines))


# ---------------------------------------------------------------------------
# prior-check
# ---------------------------------------------------------------------------


def cmd_prior_check(args):
    out = _out_dir(args)
    grid = BasisGrid(args.L, args.M, args.theta, args.d)
    hyper = GammaProcessHyper(args.c0, args.b1, args.b2)
    k0, kmax = args.kappa0, args.kappa_max
    kgrid = args.kappa_grid if args.kappa_grid is not None else np.linspace(k0, kmax, 52)[1:-1]
    xgrid = args.x_grid if args.x_grid is not None else np.linspace(0.01, 2.0, 100)
    rng = seeded_rng(args.seed)
    alpha, dens = [], []
    for exc in prior_excitation_draws(rng, args.draws, grid, hyper, k0, kmax):
        alpha.append(exc.alpha(kgrid))
        dens.append(exc.density(xgrid, args.kappa))
    alpha, dens = np.array(alpha), np.array(dens)
    mean_a, var_a = prior_alpha_moments(kgrid, grid, hyper, k0, kmax)
    with open(os.path.join(out, "prior_alpha.csv"), "w", encoding="utf-8") as fh:
        fh.write("grid_point,mean,q025,q975,analytic_mean,analytic_sd\n")
        lo, hi = np.quantile(alpha, [0.025, 0.975], axis=0)
        for row in zip(kgrid, alpha.mean(0), lo, hi, mean_a, np.sqrt(var_a)):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(os.path.join(out, "prior_offspring_density.csv"), "w", encoding="utf-8") as fh:
        fh.write("grid_point,mean,q025,q975,kappa\n")
        lo, hi = np.nanquantile(dens, [0.025, 0.975], axis=0)
        for row in zip(xgrid, np.nanmean(dens, 0), lo, hi):
            fh.write(",".join(repr(float(v)) for v in row) + f",{args.kappa!r}\n")
    _write_manifest(os.path.join(out, "manifest.json"), "prior-check", args)
    print(f"prior bands from {args.draws} weight draws written to {out}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; the section named after the command sets defaults")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=0, help="worker cap (default: all cores)")
    common.add_argument("--out-dir", default="out")

    p = argparse.ArgumentParser(prog="mhpbayes", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate a marked Hawkes pattern")
    s.add_argument("--scenario", default="mark-lomax", choices=["lomax", "mark-lomax", "lomax-mixture"])
    s.add_argument("--T", type=float, default=5000.0)
    s.add_argument("--max-events", type=int, default=10**6)
    s.add_argument("--unstable", action="store_true", help="allow rho >= 1")
    s.add_argument("--emit-branching", action="store_true", help="write branching.csv sidecar")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", parents=[common], help="run MCMC on a catalog")
    f.add_argument("catalog", nargs="?")
    f.add_argument("--model", default="nonpar", choices=MODELS)
    f.add_argument("--preset", default="s42", choices=sorted(PRESETS))
    f.add_argument("--prior", action="append", help="override a prior, e.g. theta=lomax:2:0.1")
    f.add_argument("--kappa0", type=float, required=False)
    f.add_argument("--kappa-max", type=float, default=None)
    f.add_argument("--T", type=float, default=None, help="window end (default: last time + margin)")
    f.add_argument("--margin", type=float, default=1.0)
    f.add_argument("--t-split", type=float, default=None, help="fit only events before this time")
    f.add_argument("--jitter", type=float, default=None)
    f.add_argument("--clamp", action="store_true")
    f.add_argument("--iterations", type=int, default=20000)
    f.add_argument("--burn-in", type=int, default=10000)
    f.add_argument("--thin", type=int, default=5)
    f.add_argument("--chains", type=int, default=1)
    f.add_argument("--L", type=int, default=None)
    f.add_argument("--M", type=int, default=None)
    f.add_argument("--J", type=int, default=None)
    f.add_argument("--atoms", type=int, default=50)
    f.add_argument("--checkpoint-every", type=int, default=None)
    f.add_argument("--resume", action="store_true")
    f.add_argument("--check-invariants", action="store_true")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("forecast", parents=[common], help="posterior predictive counts")
    c.add_argument("fit_dir", nargs="?")
    c.add_argument("--t-end", type=float, required=False)
    c.add_argument("--observed", type=int, default=None)
    c.add_argument("--level", type=float, default=0.95)
    c.add_argument("--max-events", type=int, default=10**6)
    c.set_defaults(func=cmd_forecast)

    m = sub.add_parser("summarize", parents=[common], help="posterior functional summaries")
    m.add_argument("fit_dir", nargs="?")
    m.add_argument("--kappa-grid", type=_floats, default=None)
    m.add_argument("--x-grid", type=_floats, default=None)
    m.add_argument("--t-grid", type=_floats, default=None)
    m.add_argument("--kappa-density", type=_floats, default=None, help="parent marks for g and tail")
    m.add_argument("--labels", default=None, help="labeled catalog for the misclassification rate")
    m.add_argument("--forecast", default=None, help="forecast.json whose interval score goes in the report")
    m.set_defaults(func=cmd_summarize)

    q = sub.add_parser("prior-check", parents=[common], help="prior bands for alpha and g")
    q.add_argument("--L", type=int, default=10)
    q.add_argument("--M", type=int, default=5)
    q.add_argument("--theta", type=float, default=0.1)
    q.add_argument("--d", type=float, default=1.0)
    q.add_argument("--c0", type=float, default=1.0)
    q.add_argument("--b1", type=float, default=0.7)
    q.add_argument("--b2", type=float, default=0.2)
    q.add_argument("--kappa0", type=float, default=4.0)
    q.add_argument("--kappa-max", type=float, default=10.0)
    q.add_argument("--kappa", type=float, default=5.5, help="parent mark for the density band")
    q.add_argument("--kappa-grid", type=_floats, default=None)
    q.add_argument("--x-grid", type=_floats, default=None)
    q.add_argument("--draws", type=int, default=1000)
    q.set_defaults(func=cmd_prior_check)
    return p


def _apply_config(parser, argv):
    """Re-parse with defaults from the config file section of the chosen command."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep case: L, M, J and T are distinct options
    if not cp.read(args.config, encoding="utf-8"):
        raise ValidationError(f"cannot read config file {args.config}")
    unknown_sections = set(cp.sections()) - {"simulate", "fit", "forecast", "summarize", "prior-check"}
    if unknown_sections:
        raise ValidationError(f"unknown config sections: {sorted(unknown_sections)}")
    if not cp.has_section(args.command):
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    folded = {d.lower(): d for d in actions}
    defaults = {}
    for key, raw in cp.items(args.command):
        dest = key.replace("-", "_")
        dest = dest if dest in actions else folded.get(dest.lower(), dest)
        if dest not in actions:
            raise ValidationError(f"unknown config key {key!r} in section [{args.command}]")
        act = actions[dest]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[dest] = _bool(raw)
        elif isinstance(act, argparse._AppendAction):
            defaults[dest] = [v.strip() for v in raw.split(";") if v.strip()]
        else:
            try:
                defaults[dest] = act.type(raw) if act.type else raw
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"bad value for {key!r}: {raw!r}") from exc
            if act.choices is not None and defaults[dest] not in act.choices:
                raise ValidationError(f"{key!r} must be one of {list(act.choices)}")
    # Positional arguments cannot take parser defaults, so fill them directly.
    sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    for dest, val in defaults.items():
        if actions[dest].option_strings == [] and getattr(args, dest, None) is None:
            setattr(args, dest, val)
    return args


def _check_required(args):
    if args.command == "fit" and args.catalog is None:
        raise ValidationError("fit needs a catalog path")
    if args.command in ("forecast", "summarize") and args.fit_dir is None:
        raise ValidationError(f"{args.command} needs a fit directory")
    if args.command == "fit" and args.kappa0 is None:
        raise ValidationError("fit needs --kappa0")
    if args.command == "forecast" and args.t_end is None:
        raise ValidationError("forecast needs --t-end")


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        _check_required(args)
        args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION if "unstable" in str(exc) else EXIT_NUMERICAL
    except (ValidationError, CatalogError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
