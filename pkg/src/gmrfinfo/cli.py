"""Command line entry point: ``gmrfinfo <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 degenerate data,
4 I/O error.  Printed numbers carry 6 significant digits; CSV files carry
full double precision.
"""
from __future__ import annotations

import argparse
import os
import secrets
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as gio
from .analysis import VARIANCE_MODES, summarize
from .entropy import histogram_entropy
from .errors import DegenerateError, InvalidArgumentError, PGMError
from .estimation import ModelParams, fit
from .field import BOUNDARIES, TOROIDAL, make_neighborhood
from .fisher import l_information_map, local_phi_map, local_psi_map
from .imaging import add_gaussian_noise, encode_pgm, laplacian_map, normalize_map
from .sampler import (
    BETA_STAR_MIN,
    GIBBS,
    METROPOLIS,
    RANDOM,
    RASTER,
    ZERO,
    Chain,
    ScheduleConfig,
    TrajectoryRecord,
    _white_noise,
    perturb_experiment,
    run_schedule,
)

EXIT_USAGE, EXIT_DEGENERATE, EXIT_IO = 2, 3, 4


class UsageError(Exception):
    pass


def fmt(value) -> str:
    return "" if value is None else f"{value:.6g}"


def _emit(out, **values):
    for key, value in values.items():
        print(f"{key}={fmt(value) if isinstance(value, float) else value}", file=out)


def _resolve_seed(args, err):
    if args.seed is None:
        args.seed = secrets.randbits(64)
        print(f"seed={args.seed} (drawn from system entropy)", file=err)
    if not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    return args.seed


def _suffixed(path, r, replicates):
    if replicates == 1:
        return Path(path)
    p = Path(path)
    return p.with_name(f"{p.stem}_r{r:03d}{p.suffix}")


def _positive_int(name, value):
    if value < 1:
        raise UsageError(f"{name} must be at least 1, got {value}")


# ---------------------------------------------------------------- sample

def _sample_job(job):
    args, seed = job
    rng = np.random.default_rng(seed)
    model = ModelParams(args.mu, args.sigma2, args.beta)
    nbhd = make_neighborhood(args.order)
    chain = Chain(_white_noise(rng, args.height, args.width, args.mu, args.sigma2), nbhd, rng,
                  args.mode, args.tau, args.scan)
    for _ in range(args.sweeps):
        chain.sweep(model)
    return chain.field


def cmd_sample(args, out, err):
    for name in ("width", "height", "sweeps", "replicates"):
        _positive_int(f"--{name}", getattr(args, name))
    if args.width < 3 or args.height < 3:
        raise UsageError("--width and --height must be at least 3")
    ModelParams(args.mu, args.sigma2, args.beta)
    if args.tau is not None and args.tau < 0:
        raise UsageError("--tau must be non-negative")
    seed = _resolve_seed(args, err)
    jobs = [(args, seed + r) for r in range(args.replicates)]
    fields = _map_jobs(_sample_job, jobs)
    nbhd = make_neighborhood(args.order)
    reports = [fit(f, nbhd) for f in fields]
    for r, (field, report) in enumerate(zip(fields, reports)):
        if args.out:
            stem = _suffixed(args.out, r, args.replicates)
            gio.save_field_csv(field, stem.with_suffix(".csv"))
            gio.atomic_write_bytes(stem.with_suffix(".pgm"), encode_pgm(normalize_map(field)))
        if args.replicates > 1:
            print(f"replicate={r} seed={seed + r}", file=out)
        p = report.params
        _emit(out, n=report.n_sites, k=report.k, mu=p.mu, sigma2=p.sigma2, beta=p.beta,
              score=report.score_at_beta)


def _map_jobs(func, jobs):
    if len(jobs) == 1:
        return [func(jobs[0])]
    workers = min(len(jobs), os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs))


# ---------------------------------------------------------------- estimate

def cmd_estimate(args, out, err):
    field = gio.load_field(args.input)
    nbhd = make_neighborhood(args.order, args.boundary)
    if args.refine_mu:
        report = fit(field, nbhd, refine_mu=True)
        p = report.params
        _emit(out, n=report.n_sites, k=report.k, mu=p.mu, sigma2=p.sigma2, beta=p.beta,
              score=report.score_at_beta)
        return
    report, _, info = summarize(field, nbhd, args.variance)
    p = report.params
    _emit(out, n=report.n_sites, k=report.k, mu=p.mu, sigma2=p.sigma2, beta=p.beta,
          score=report.score_at_beta, phi=info.phi_expected, psi=info.psi_expected, gap=info.gap,
          linfo=info.l_global, entropy=info.entropy, var=info.asym_var,
          beta_star_lo=info.beta_star_lo, beta_star_hi=info.beta_star_hi)
    if args.csv:
        gio.atomic_write_text(args.csv, f"{report.CSV_HEADER},{info.CSV_HEADER}\n"
                                        f"{report.to_csv_row()},{info.to_csv_row()}\n")


# ---------------------------------------------------------------- infomap

def _parse_params(text):
    try:
        mu, sigma2, beta = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--params must be 'auto' or 'mu,sigma2,beta', got {text!r}") from None
    return ModelParams(mu, sigma2, beta)


def cmd_infomap(args, out, err):
    params = None if args.params == "auto" else _parse_params(args.params)
    field = gio.load_field(args.input)
    nbhd = make_neighborhood(args.order, args.boundary)
    if params is None:
        params = fit(field, nbhd).params
    phi = local_phi_map(field, nbhd, params)
    if args.measure == "phi":
        result = phi
    elif args.measure == "psi":
        result = local_psi_map(field, nbhd, params)
    else:
        result = l_information_map(phi, local_psi_map(field, nbhd, params), args.eps)
    _emit(out, mu=params.mu, sigma2=params.sigma2, beta=params.beta)
    print(f"global_{args.measure}={fmt(result.mean())}", file=out)
    print(f"undefined_sites={int((~result.defined).sum())}", file=out)
    if args.out:
        stem = Path(args.out)
        gio.atomic_write_text(stem.with_suffix(".csv"), gio.map_to_csv(result.values))
        gio.atomic_write_bytes(stem.with_suffix(".pgm"), encode_pgm(normalize_map(result.values, args.norm)))


# ---------------------------------------------------------------- trajectory / perturb

def _schedule_from(args):
    for name in ("width", "height", "replicates"):
        _positive_int(f"--{name.replace('_', '-')}", getattr(args, name))
    if args.width < 3 or args.height < 3:
        raise UsageError("--width and --height must be at least 3")
    if args.snapshots is not None and args.snapshots < 1:
        raise UsageError("--snapshots must be at least 1")
    model = ModelParams(args.mu, args.sigma2, 0.0)
    config = ScheduleConfig(args.beta_start, args.beta_max, args.dbeta, args.sweeps,
                            args.record_every, 0 if args.seed is None else args.seed)
    return model, config


def _collect_snapshots(args, store):
    if args.snapshots is None:
        return None

    def snapshot(iteration, n_records, field):
        if (n_records - 1) % args.snapshots == 0:
            store.append((iteration, field))
    return snapshot


def _write_snapshots(args, store, stem):
    for iteration, field in store:
        base = stem.with_name(f"{stem.stem}_it{iteration:06d}")
        gio.save_field_csv(field, base.with_suffix(".csv"))
        gio.atomic_write_bytes(base.with_suffix(".pgm"), encode_pgm(normalize_map(field)))


def _trajectory_job(job):
    args, seed = job
    model, config = _schedule_from(args)
    config = ScheduleConfig(config.beta_start, config.beta_max, config.d_beta, config.sweeps,
                            config.record_every, seed)
    store = []
    records = run_schedule(config, model, (args.height, args.width), make_neighborhood(args.order),
                           args.sampler, args.variance, _collect_snapshots(args, store))
    return records, store


def cmd_trajectory(args, out, err):
    _schedule_from(args)
    seed = _resolve_seed(args, err)
    results = _map_jobs(_trajectory_job, [(args, seed + r) for r in range(args.replicates)])
    for r, (records, store) in enumerate(results):
        target = _suffixed(args.out, r, args.replicates) if args.out else None
        text = gio.records_to_csv(records, TrajectoryRecord.CSV_HEADER)
        if target is None:
            out.write(text)
        else:
            gio.atomic_write_text(target, text)
            _write_snapshots(args, store, target)
            print(f"wrote {len(records)} records to {target}", file=out)


def _recovery_summary(records, at, hold):
    by_iter = {r.iteration: r for r in records}
    pre = by_iter.get(at - 1)
    window = [by_iter[t] for t in range(at, at + hold) if t in by_iter]
    gaps = [abs(r.phi - r.psi) / r.psi for r in window if r.psi > 0]
    recovery = None
    if pre is not None:
        after = [r for r in records if r.iteration >= at + hold]
        for r in after:
            if abs(r.beta_hat - pre.beta_hat) <= 0.1 * abs(pre.beta_hat):
                recovery = r.iteration - (at + hold)
                break
    return pre, gaps, recovery


def cmd_perturb(args, out, err):
    model, config = _schedule_from(args)
    if args.hold < 0:
        raise UsageError("--hold must be non-negative")
    if not 0 <= args.at < args.sweeps:
        raise UsageError(f"--at must lie in [0, {args.sweeps})")
    seed = _resolve_seed(args, err)
    config = ScheduleConfig(config.beta_start, config.beta_max, config.d_beta, config.sweeps,
                            config.record_every, seed)
    store = []
    mode = BETA_STAR_MIN if args.mode == "beta-star" else ZERO
    result = perturb_experiment(config, model, (args.height, args.width), mode, args.at, args.hold,
                                make_neighborhood(args.order), args.sampler, args.variance,
                                _collect_snapshots(args, store))
    if result.fell_back:
        print(f"warning: no real beta* at iteration {args.at}; perturbed with beta=0 instead", file=err)
    text = gio.records_to_csv(result.records, TrajectoryRecord.CSV_HEADER)
    if args.out:
        gio.atomic_write_text(args.out, text)
        _write_snapshots(args, store, Path(args.out))
    else:
        out.write(text)
    pre, gaps, recovery = _recovery_summary(result.records, args.at, args.hold)
    print(
        "summary: mode={} beta_override={} pre_beta_hat={} min_rel_gap_hold={} recovery_sweeps={}".format(
            result.mode_used, fmt(result.beta_override), fmt(pre.beta_hat) if pre else "",
            fmt(min(gaps)) if gaps else "", "" if recovery is None else recovery),
        file=err if not args.out else out,
    )


# ---------------------------------------------------------------- imaging

def cmd_noise(args, out, err):
    if args.sigma < 0:
        raise UsageError("--sigma must be non-negative")
    seed = _resolve_seed(args, err)
    image = gio.load_field(args.input)
    gio.atomic_write_bytes(args.out, encode_pgm(add_gaussian_noise(image, args.sigma, seed)))


def cmd_laplacian(args, out, err):
    result = laplacian_map(gio.load_field(args.input))
    print(f"mean_abs_laplacian={fmt(float(result.mean()))}", file=out)
    if args.out:
        stem = Path(args.out)
        gio.atomic_write_text(stem.with_suffix(".csv"), gio.map_to_csv(result))
        gio.atomic_write_bytes(stem.with_suffix(".pgm"), encode_pgm(normalize_map(result, args.norm)))


def cmd_hist_entropy(args, out, err):
    if args.bins < 2:
        raise UsageError("--bins must be at least 2")
    print(f"hist_entropy={fmt(histogram_entropy(gio.load_field(args.input), args.bins))}", file=out)


# ---------------------------------------------------------------- parser

TRAJECTORY_FORMAT = ("Trajectory CSV header: " + TrajectoryRecord.CSV_HEADER
                     + " (one row per recorded sweep, full precision, empty cells when beta* is absent).")
SEED_HELP = "64-bit generator seed; drawn from system entropy and printed when omitted"


def _add_lattice_flags(p, size, sweeps):
    p.add_argument("--width", type=int, default=size, help=f"lattice columns (default {size})")
    p.add_argument("--height", type=int, default=size, help=f"lattice rows (default {size})")
    p.add_argument("--order", type=int, choices=(1, 2), default=2,
                   help="neighbourhood order: 1 = 4 neighbours, 2 = 8 neighbours (default 2)")
    p.add_argument("--mu", type=float, default=0.0, help="model mean (default 0)")
    p.add_argument("--sigma2", type=float, default=5.0, help="conditional variance, > 0 (default 5)")
    p.add_argument("--sweeps", type=int, default=sweeps, help=f"full lattice sweeps, >= 1 (default {sweeps})")
    p.add_argument("--seed", type=int, help=SEED_HELP)


def _add_input_flags(p):
    p.add_argument("--input", required=True, help="field as CSV (comma separated rows) or binary P5 PGM")
    p.add_argument("--order", type=int, choices=(1, 2), default=2, help="neighbourhood order (default 2)")
    p.add_argument("--boundary", choices=BOUNDARIES, default=TOROIDAL,
                   help="toroidal wraps the lattice; interior drops the border sites (default toroidal)")


def _add_schedule_flags(p):
    p.add_argument("--config", help="flat key=value file (keys are flag names); explicit flags override it")
    _add_lattice_flags(p, 64, 300)
    p.add_argument("--beta-start", type=float, default=0.0, help="beta at sweep 0 (default 0)")
    p.add_argument("--beta-max", type=float, default=0.15, help="turning point of the beta ramp (default 0.15)")
    p.add_argument("--dbeta", type=float, default=0.001, help="beta increment per sweep (default 0.001)")
    p.add_argument("--record-every", type=int, default=1, help="record measures every N sweeps (default 1)")
    p.add_argument("--sampler", choices=(GIBBS, METROPOLIS), default=GIBBS,
                   help="site update rule (default gibbs)")
    p.add_argument("--variance", choices=VARIANCE_MODES, default="central",
                   help="variance scaling the expected information measures (default central)")
    p.add_argument("--out", help="trajectory CSV path (written to stdout when omitted)")
    p.add_argument("--snapshots", type=int, metavar="S",
                   help="also write the field every S records as OUT_itNNNNNN.csv and .pgm")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gmrfinfo", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, helptext, description):
        return sub.add_parser(name, help=helptext, description=description,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    p = add("sample", "simulate a GMRF outcome and fit it",
            "Start from white noise, run full-lattice sweeps, fit the result and print\n"
            "n, k, mu, sigma2, beta and score as key=value lines.\n"
            "Files: OUT.csv (field, full precision) and OUT.pgm (min-max scaled P5).")
    _add_lattice_flags(p, 128, 1000)
    p.add_argument("--beta", type=float, default=0.125, help="inverse temperature (default 0.125)")
    p.add_argument("--mode", choices=(GIBBS, METROPOLIS), default=GIBBS, help="site update rule (default gibbs)")
    p.add_argument("--tau", type=float, help="Metropolis proposal scale (default sqrt(sigma2))")
    p.add_argument("--scan", choices=(RASTER, RANDOM), default=RASTER, help="site visiting order (default raster)")
    p.add_argument("--replicates", type=int, default=1,
                   help="independent runs with seeds seed, seed+1, ...; files get an _rNNN suffix")
    p.add_argument("--out", help="output path prefix; nothing is written when omitted")
    p.set_defaults(func=cmd_sample)

    p = add("estimate", "pseudo-likelihood fit and global information measures",
            "Print the fit (n, k, mu, sigma2, beta, score) and the global measures\n"
            "(phi, psi, gap, linfo, entropy, var, beta_star_lo, beta_star_hi) as key=value lines.")
    _add_input_flags(p)
    p.add_argument("--variance", choices=VARIANCE_MODES, default="central",
                   help="variance scaling the expected information measures (default central)")
    p.add_argument("--refine-mu", action="store_true",
                   help="alternate the mean and beta estimators to a fixed point (fit only)")
    p.add_argument("--csv", help="also write one CSV row: " + "n,k,mu,sigma2,beta,score,"
                   + "phi,psi,gap,linfo,entropy,var,beta_star_lo,beta_star_hi")
    p.set_defaults(func=cmd_estimate)

    p = add("infomap", "local phi / psi / L-information map",
            "Compute a per-site information map and print its mean.\n"
            "Files: OUT.csv (float map, nan at undefined sites) and OUT.pgm (scaled P5).")
    _add_input_flags(p)
    p.add_argument("--measure", choices=("phi", "psi", "linfo"), default="linfo", help="map to compute (default linfo)")
    p.add_argument("--params", default="auto", help="'auto' (fit the input first) or 'mu,sigma2,beta'")
    p.add_argument("--eps", type=float, default=1e-10, help="L-information guard; psi <= eps is undefined")
    p.add_argument("--norm", choices=("linear", "log"), default="linear", help="PGM scaling (default linear)")
    p.add_argument("--out", help="output path prefix")
    p.set_defaults(func=cmd_infomap)

    p = add("trajectory", "triangle beta schedule with per-sweep measures",
            "Ramp beta up by dbeta per sweep to beta-max and back to 0, repeatedly, and\n"
            "record the global measures of each configuration.\n" + TRAJECTORY_FORMAT)
    _add_schedule_flags(p)
    p.add_argument("--replicates", type=int, default=1,
                   help="independent runs with seeds seed, seed+1, ...; files get an _rNNN suffix")
    p.set_defaults(func=cmd_trajectory)

    p = add("perturb", "force beta to 0 or beta* for a few sweeps",
            "Run the trajectory but override beta for --hold sweeps starting at --at.\n"
            + TRAJECTORY_FORMAT + "\nA summary line reports the override, the beta estimate before it, the\n"
            "smallest |phi - psi|/psi during the hold and the sweeps needed to bring beta_hat\n"
            "back within 10% of its earlier value.")
    _add_schedule_flags(p)
    p.add_argument("--mode", choices=("zero", "beta-star"), default="zero",
                   help="override with 0 or with the smaller root beta* of the current field")
    p.add_argument("--at", type=int, default=180, help="first perturbed sweep (default 180)")
    p.add_argument("--hold", type=int, default=5, help="number of perturbed sweeps (default 5; 0 = none)")
    p.set_defaults(func=cmd_perturb, replicates=1)

    p = add("noise", "add seeded Gaussian noise to an image",
            "Add N(0, sigma^2) noise, round half away from zero and clamp to 0..255; writes P5.")
    p.add_argument("--input", required=True, help="P5 PGM (or CSV) image")
    p.add_argument("--sigma", type=float, required=True, help="noise standard deviation, >= 0")
    p.add_argument("--seed", type=int, help=SEED_HELP)
    p.add_argument("--out", required=True, help="output PGM path")
    p.set_defaults(func=cmd_noise)

    p = add("laplacian", "absolute Laplacian edge map",
            "4-neighbour Laplacian with wrap-around borders, absolute value; prints its mean.\n"
            "Files: OUT.csv (float map) and OUT.pgm (scaled P5).")
    p.add_argument("--input", required=True, help="P5 PGM (or CSV) image")
    p.add_argument("--norm", choices=("linear", "log"), default="linear", help="PGM scaling (default linear)")
    p.add_argument("--out", help="output path prefix")
    p.set_defaults(func=cmd_laplacian)

    p = add("hist-entropy", "gray-level histogram entropy in bits",
            "Round to gray levels, histogram them and print the entropy in bits.")
    p.add_argument("--input", required=True, help="P5 PGM (or CSV) image")
    p.add_argument("--bins", type=int, default=256, help="histogram bins over 0..255 (default 256)")
    p.set_defaults(func=cmd_hist_entropy)
    return parser, sub


def _apply_config(parser, sub, argv):
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    values = gio.parse_key_values(Path(path).read_text())
    subparser = sub.choices[args.command]
    known = {a.dest for a in subparser._actions}
    unknown = sorted(set(values) - known - {"config"})
    if unknown:
        raise UsageError(f"unknown keys in {path}: {', '.join(unknown)}")
    subparser.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser, sub = build_parser()
    try:
        args = _apply_config(parser, sub, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_IO
    try:
        args.func(args, out, err)
    except (UsageError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except DegenerateError as exc:
        print(f"degenerate data: {exc}", file=err)
        return EXIT_DEGENERATE
    except (OSError, PGMError) as exc:
        print(f"I/O error: {exc}", file=err)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
