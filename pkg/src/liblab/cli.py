"""Experiment runner.

Subcommands: ubm-moments, liberation-convergence, chi-orb, heat-kernel,
prop81-check, rate-minimizer, bounds-51, metric.

Every output file is self-describing: a ``#``-prefixed header echoes the tool
version, schema version, and the full resolved configuration (including the
seed). Config files are INI-style (one section per subcommand); command-line
flags override config values.

Exit codes: 0 success, 2 configuration error, 3 numeric domain error, 4 I/O.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from fractions import Fraction

from . import __version__, ncalg, ratefn, rmt
from .errors import ConfigError, DomainError, GridMiss, IncompatibleN, LiblabError
from .freestate import (
    InitialLaw,
    LiberationState,
    MarginalLaw,
    free_product_limit_state,
    lemma51_bound_check,
)
from .ncalg import Word, Xs

SCHEMA_VERSION = 1


def _apply_thread_cap():
    cap = os.environ.get("LIBLAB_THREADS")
    if not cap:
        return
    try:
        limit = int(cap)
    except ValueError:
        raise ConfigError("LIBLAB_THREADS must be an integer, got %r" % cap)
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=limit)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(limit))


# ---------------------------------------------------------------------------
# Shared fixtures


def two_free_projections() -> InitialLaw:
    """sigma0 = two free trace-1/2 projections, generator ids (1,1), (2,1)."""
    return InitialLaw.free_product(
        [
            MarginalLaw(1, atoms=[1, 0], weights=[Fraction(1, 2), Fraction(1, 2)]),
            MarginalLaw(2, atoms=[1, 0], weights=[Fraction(1, 2), Fraction(1, 2)]),
        ]
    )


def projection_test_words(times, max_len=4):
    """Alternating words in x_{11}, x_{21} up to max_len, at the given times."""
    words = []
    for t in times:
        t = Fraction(t)
        for length in range(1, max_len + 1):
            for start in (1, 2):
                letters = tuple(
                    Xs(start if q % 2 == 0 else 3 - start, 1, t) for q in range(length)
                )
                words.append(Word(letters))
    return words


# ---------------------------------------------------------------------------
# Output plumbing


def _write_csv(path, config_echo, columns, rows):
    def emit(fh):
        fh.write("# liberation-lab %s\n" % __version__)
        fh.write("# schema = %d\n" % SCHEMA_VERSION)
        for key, val in sorted(config_echo.items()):
            fh.write("# %s = %s\n" % (key, val))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)

    if path is None or path == "-":
        emit(sys.stdout)
    else:
        with open(path, "w", newline="") as fh:
            emit(fh)


def _complex_cols(name):
    return ["%s_re" % name, "%s_im" % name]


def _split_complex(z):
    z = complex(z)
    return [repr(z.real), repr(z.imag)]


# ---------------------------------------------------------------------------
# Experiments


def run_ubm_moments(cfg):
    rows = rmt.finite_n_moment_ode_check(
        n_max=cfg["n_max"],
        T=Fraction(cfg["T"]),
        N=cfg["N"],
        paths=cfg["paths"],
        h=Fraction(cfg["T"]) / cfg["steps"],
        base_seed=cfg["seed"],
    )
    return ["n", "t", "empirical", "ode", "gap", "stderr"], [
        (n, t, repr(emp), repr(ode), repr(gap), repr(se)) for n, t, emp, ode, gap, se in rows
    ]


def run_heat_kernel(cfg):
    from . import heatkern

    t_min, t_max, points, eps = cfg["t_min"], cfg["t_max"], cfg["points"], cfg["eps"]
    rows = []
    for q in range(points):
        T = t_min + (t_max - t_min) * q / max(points - 1, 1)
        pt = heatkern.FreeEnergyPoint(T)
        low, high = heatkern.liyau_sandwich(T, eps)
        rows.append((repr(T), repr(pt.k), repr(pt.F), repr(low), repr(high)))
    return ["T", "k", "F", "low", "high"], rows


def run_chi_orb(cfg):
    sigma0 = two_free_projections()
    sigma = free_product_limit_state(sigma0, n_motions=2)
    spec = ratefn.NeighborhoodSpec(cfg["m"], cfg["delta"])
    rows = []
    for N in cfg["N_list"]:
        family = rmt.build_initial_family(
            [
                MarginalLaw(1, atoms=[1, 0], weights=[Fraction(1, 2), Fraction(1, 2)]),
                MarginalLaw(2, atoms=[1, 0], weights=[Fraction(1, 2), Fraction(1, 2)]),
            ],
            N,
        )
        logf, hits, samples = ratefn.chi_orb_mc(
            sigma, family, N, spec, cfg["samples"], cfg["seed"], n_motions=2
        )
        rows.append(
            (
                N,
                hits,
                samples,
                repr(hits / samples),
                ratefn.NEG_INF if logf == ratefn.NEG_INF else repr(logf),
            )
        )
    return ["N", "hits", "samples", "fraction", "log_fraction"], rows


def _empirical_liberation(N, seed, grid, steps_per_unit=50):
    sigma0 = two_free_projections()
    family = rmt.build_initial_family(sigma0, N, strict=False)
    h = Fraction(1, steps_per_unit)
    times = [Fraction(t) for t in grid if Fraction(t) > 0]
    traj = rmt.simulate_trajectory(N, 2, times, h, seed)
    return ratefn.EmpiricalTrajectory(family, [traj])


def run_liberation_convergence(cfg):
    sigma0 = two_free_projections()
    oracle = LiberationState(sigma0, 2)
    grid = [Fraction(t) for t in cfg["grid"]]
    gen_ids = [(1, 1), (2, 1)]
    rows = []
    for N in cfg["N_list"]:
        for s in range(cfg["seeds"]):
            emp = _empirical_liberation(N, cfg["seed"] ^ (s * 7919), grid)
            d = ratefn.trajectory_metric_d(
                emp, oracle, cfg["m_max"], cfg["l_max"], grid, gen_ids=gen_ids
            )
            rows.append((N, s, repr(d)))
    return ["N", "seed_index", "d"], rows


def run_metric(cfg):
    sigma0 = two_free_projections()
    oracle = LiberationState(sigma0, 2)
    grid = [Fraction(t) for t in cfg["grid"]]
    emp = _empirical_liberation(cfg["N"], cfg["seed"], grid)
    d = ratefn.trajectory_metric_d(
        emp, oracle, cfg["m_max"], cfg["l_max"], grid, gen_ids=[(1, 1), (2, 1)]
    )
    return ["N", "d"], [(cfg["N"], repr(d))]


def run_prop81_check(cfg):
    from .freestate import conditional_expectation_prop81

    sigma0 = two_free_projections()
    tau = LiberationState(sigma0, cfg["n_motions"])
    s_vals = [Fraction(x) for x in cfg["s_list"]]
    p_words = projection_test_words([1], max_len=2)[: cfg["n_words"]]
    y_words = projection_test_words([Fraction(1, 2)], max_len=2)[: cfg["n_words"]]
    rows = []
    for P in p_words:
        for y in y_words:
            for k in range(1, cfg["n_motions"] + 1):
                for s in s_vals:
                    dP = ncalg.cyclic_derivative(ncalg.NCPolynomial.from_word(P), k, s)
                    lhs = tau.extended_moment(
                        ncalg.pi_s_substitution(dP, s, tau.n) * ncalg.NCPolynomial.from_word(y)
                    )
                    E = conditional_expectation_prop81(P, k, s, tau)
                    rhs = tau.extended_moment(E * ncalg.NCPolynomial.from_word(y))
                    rows.append(
                        (
                            ncalg.format_word(P),
                            ncalg.format_word(y),
                            k,
                            str(s),
                            repr(abs(lhs - rhs)),
                        )
                    )
    return ["P", "y", "k", "s", "residual"], rows


def run_rate_minimizer(cfg):
    sigma0 = two_free_projections()
    tau = LiberationState(sigma0, 2)
    words = projection_test_words(cfg["word_times"], max_len=cfg["max_len"])
    rows = []
    for t in cfg["t_list"]:
        for w in words:
            value, br = ratefn.rate_integrand_eq9(tau, w, Fraction(t))
            rows.append(
                (
                    ncalg.format_word(w),
                    str(t),
                    repr(value),
                    repr(br["shifted"]),
                    repr(br["reference"]),
                    repr(br["quadratic"]),
                )
            )
    return ["P", "t", "value", "shifted", "reference", "quadratic"], rows


def run_bounds_51(cfg):
    # Perfectly correlated projections across the two rows: the decay bound is
    # then nontrivial (the free case has lhs identically 0).
    from .freestate import AtomicComponent

    sigma0 = InitialLaw(
        [
            AtomicComponent(
                [(1, 1), (2, 1)], [(1, 1), (0, 0)], [Fraction(1, 2), Fraction(1, 2)]
            )
        ]
    )
    rows = []
    for m in cfg["m_list"]:
        entries = [(1, 1) if q % 2 == 0 else (2, 1) for q in range(m)]
        for T in cfg["T_list"]:
            lhs, rhs = lemma51_bound_check(sigma0, entries, Fraction(T))
            rows.append((m, str(T), repr(lhs), repr(rhs), repr(rhs - lhs)))
    return ["m", "T", "lhs", "rhs", "margin"], rows


# ---------------------------------------------------------------------------
# Argument handling


def _int_list(text):
    return [int(x) for x in str(text).split(",") if x]


def _frac_list(text):
    return [Fraction(x) for x in str(text).split(",") if x]


_EXPERIMENTS = {
    "ubm-moments": (
        run_ubm_moments,
        {
            "N": (int, 64),
            "paths": (int, 400),
            "T": (Fraction, Fraction(1)),
            "n_max": (int, 4),
            "steps": (int, 200),
            "seed": (int, 0),
        },
    ),
    "liberation-convergence": (
        run_liberation_convergence,
        {
            "N_list": (_int_list, [16, 128]),
            "seeds": (int, 10),
            "grid": (_frac_list, [Fraction(0), Fraction(1, 2), Fraction(1)]),
            "m_max": (int, 2),
            "l_max": (int, 3),
            "seed": (int, 0),
        },
    ),
    "chi-orb": (
        run_chi_orb,
        {
            "N_list": (_int_list, [8, 16, 32, 64]),
            "m": (int, 2),
            "delta": (float, 0.1),
            "samples": (int, 500),
            "seed": (int, 0),
        },
    ),
    "heat-kernel": (
        run_heat_kernel,
        {
            "t_min": (float, 12.0),
            "t_max": (float, 400.0),
            "points": (int, 50),
            "eps": (float, 0.9),
            "seed": (int, 0),
        },
    ),
    "prop81-check": (
        run_prop81_check,
        {
            "n_motions": (int, 2),
            "n_words": (int, 4),
            "s_list": (_frac_list, [Fraction(1, 4), Fraction(3, 4)]),
            "seed": (int, 0),
        },
    ),
    "rate-minimizer": (
        run_rate_minimizer,
        {
            "t_list": (_frac_list, [Fraction(1, 2), Fraction(1)]),
            "word_times": (_frac_list, [Fraction(1, 2)]),
            "max_len": (int, 2),
            "seed": (int, 0),
        },
    ),
    "bounds-51": (
        run_bounds_51,
        {
            "m_list": (_int_list, [1, 2, 3]),
            "T_list": (_frac_list, [Fraction(1, 2), Fraction(1), Fraction(2)]),
            "seed": (int, 0),
        },
    ),
    "metric": (
        run_metric,
        {
            "N": (int, 64),
            "grid": (_frac_list, [Fraction(0), Fraction(1, 2), Fraction(1)]),
            "m_max": (int, 2),
            "l_max": (int, 3),
            "seed": (int, 0),
        },
    ),
}


def _build_parser():
    parser = argparse.ArgumentParser(prog="liberation-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, (_, schema) in _EXPERIMENTS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        for key, (typ, _default) in schema.items():
            p.add_argument(
                "--%s" % key.replace("_", "-"),
                dest=key,
                type=typ,
                default=argparse.SUPPRESS,
            )
    return parser


def _resolve_config(args):
    name = args.experiment
    _, schema = _EXPERIMENTS[name]
    cfg = {key: default for key, (_t, default) in schema.items()}
    config_path = getattr(args, "config", None)
    if config_path:
        if not os.path.exists(config_path):
            raise ConfigError("config file %s does not exist" % config_path)
        ini = configparser.ConfigParser()
        try:
            ini.read(config_path)
        except configparser.Error as exc:
            raise ConfigError("bad config file: %s" % exc)
        if ini.has_section(name):
            for key, raw in ini.items(name):
                key = key.replace("-", "_")
                if key not in schema:
                    raise ConfigError("unknown config key %r for %s" % (key, name))
                typ = schema[key][0]
                try:
                    cfg[key] = typ(raw)
                except (ValueError, ZeroDivisionError) as exc:
                    raise ConfigError("bad value for %s: %s" % (key, exc))
    for key in schema:
        if hasattr(args, key):  # explicit flag wins over config
            cfg[key] = getattr(args, key)
    _validate(cfg)
    return cfg


def _validate(cfg):
    for key in ("N", "paths", "samples", "seeds", "steps"):
        if key in cfg and cfg[key] < 1:
            raise ConfigError("%s must be >= 1" % key)
    if "N_list" in cfg and (not cfg["N_list"] or min(cfg["N_list"]) < 1):
        raise ConfigError("N list must be nonempty with N >= 1")
    if "delta" in cfg and not cfg["delta"] > 0:
        raise ConfigError("delta must be > 0")


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        _apply_thread_cap()
        cfg = _resolve_config(args)
        runner, _ = _EXPERIMENTS[args.experiment]
        columns, rows = runner(cfg)
        echo = {"experiment": args.experiment}
        echo.update({k: v for k, v in cfg.items()})
        _write_csv(getattr(args, "out", None), echo, columns, rows)
    except ConfigError as exc:
        print("error: config: %s" % exc, file=sys.stderr)
        return 2
    except (DomainError, GridMiss, IncompatibleN) as exc:
        print("error: domain: %s" % exc, file=sys.stderr)
        return 3
    except OSError as exc:
        print("error: io: %s" % exc, file=sys.stderr)
        return 4
    except LiblabError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
