"""Command line front end: ``starkwannier run`` and ``starkwannier verify``.

Configs are INI files read with ``configparser``.  Each section is one
experiment; the section name is ``<kind>`` or ``<kind>.<label>`` with kind
one of ``deviation_scan``, ``decay_fit``, ``acceleration``, ``bound_state``.
Example::

    [decay_fit.positive]
    potential.cosine = 1:2
    lambda = 0.25
    n_list = 4, 6, 8, 12, 16, 24, 32
    t_max = 8
    k_grid = 17
    exponent_min = 0.7
    exponent_max = 1.3

Exit codes: 0 success, 1 internal error, 2 bad config, 3 a tolerance,
leakage or threshold check failed.
"""

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .bloch import PropagatorConfig
from .checks import run_suite
from .errors import ConfigError, LeakageExceeded, StarkWannierError, StepUnderflow
from .experiments import (
    ExperimentSpec,
    bound_state_probe,
    decay_exponent_fit,
    reduce_cells,
    scan_cells,
    window_ensemble,
    window_minima,
)
from .potential import FourierPotential, coefficients_from_samples, sobolev_norm

log = logging.getLogger("starkwannier")

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2, 3

KINDS = ("deviation_scan", "decay_fit", "acceleration", "bound_state")
CSV_HEADER = "experiment,n,k,t,window_prob,dev_norm,err,leak,valid"

_COMMON_KEYS = {
    "potential.coeffs",
    "potential.samples_file",
    "potential.cosine",
    "lambda",
    "alpha",
    "N",
    "buffer",
    "tol",
    "leak_max",
    "t_max",
    "n_list",
    "k_grid",
    "scheme",
    "refine",
}
_KIND_KEYS = {
    "deviation_scan": set(),
    "decay_fit": {"exponent_min", "exponent_max"},
    "acceleration": {"epsilon", "expect_found"},
    "bound_state": set(),
}


@dataclass(frozen=True)
class RunManifest:
    config: str
    out: str
    names: tuple
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True)
class Experiment:
    name: str
    kind: str
    spec: ExperimentSpec
    alpha: float
    options: dict


def parse_coeffs(text):
    """``"m re im; m re im; ..."`` into ``{m: re + i im}``."""
    coeffs = {}
    for item in text.replace("\n", ";").split(";"):
        item = item.strip()
        if not item:
            continue
        parts = item.split()
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad coefficient entry {item!r}; expected 'm re [im]'")
        m = int(parts[0])
        coeffs[m] = complex(float(parts[1]), float(parts[2]) if len(parts) == 3 else 0.0)
    return coeffs


def _parse_cosine(text):
    amps = {}
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if item:
            m, a = item.split(":")
            amps[int(m)] = float(a)
    return amps


def _potential(section, base_dir, check=True):
    sources = [k for k in ("potential.coeffs", "potential.samples_file", "potential.cosine") if k in section]
    if len(sources) > 1:
        raise ConfigError(f"give exactly one of potential.coeffs / samples_file / cosine, got {sources}")
    if not sources:
        return FourierPotential.zero()
    key = sources[0]
    try:
        if key == "potential.coeffs":
            return FourierPotential(parse_coeffs(section[key]), check=check)
        if key == "potential.cosine":
            return FourierPotential.cosine(_parse_cosine(section[key]))
        path = os.path.join(base_dir, section[key])
        pot, _ = coefficients_from_samples(np.loadtxt(path, ndmin=1))
        return pot
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def _number(section, key, cast, default):
    if key not in section:
        return default
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {section[key]!r}") from exc


def _bool(section, key, default=False):
    if key not in section:
        return default
    value = section[key].strip().lower()
    if value not in ("true", "false", "1", "0", "yes", "no"):
        raise ConfigError(f"key {key!r}: expected a boolean, got {section[key]!r}")
    return value in ("true", "1", "yes")


def _int_list(text):
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


def parse_experiment(name, section, base_dir, threads=1):
    """Validate one config section and build its ``Experiment``."""
    kind = name.split(".", 1)[0]
    if kind not in KINDS:
        raise ConfigError(f"section [{name}]: unknown experiment kind {kind!r}; expected one of {KINDS}")
    unknown = sorted(set(section) - _COMMON_KEYS - _KIND_KEYS[kind])
    if unknown:
        raise ConfigError(f"section [{name}]: unknown keys {unknown}")
    pot = _potential(section, base_dir)
    N = _number(section, "N", int, None)
    B = _number(section, "buffer", int, None)
    if N is not None and B is None:
        B = 4 * max(1, pot.bandwidth)
    cfg = PropagatorConfig(
        N=N,
        B=B,
        tol=_number(section, "tol", float, 1e-10),
        leak_max=_number(section, "leak_max", float, 1e-6),
        scheme=section.get("scheme", "interaction_picture_rk"),
    )
    try:
        n_list = _int_list(section["n_list"]) if "n_list" in section else (4, 6, 8, 12, 16, 24, 32)
    except ValueError as exc:
        raise ConfigError(f"section [{name}]: bad n_list") from exc
    try:
        spec = ExperimentSpec(
            name=name,
            potential=pot,
            lam=_number(section, "lambda", float, 1.0),
            n_list=n_list,
            t_max=_number(section, "t_max", float, 8.0),
            cfg=cfg,
            k_grid=_number(section, "k_grid", int, 17),
            refine=_number(section, "refine", int, 8),
            workers=threads,
        )
        for n in spec.n_list:
            spec.config_for(n)
    except ConfigError as exc:
        raise ConfigError(f"section [{name}]: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"section [{name}]: {exc}") from exc
    options = {}
    if kind == "decay_fit":
        options["exponent_min"] = _number(section, "exponent_min", float, -math.inf)
        options["exponent_max"] = _number(section, "exponent_max", float, math.inf)
    if kind == "acceleration":
        eps = _number(section, "epsilon", float, 0.2)
        if not 0 <= eps < 1:
            raise ConfigError(f"section [{name}]: epsilon must lie in [0, 1)")
        options["epsilon"] = eps
        options["expect_found"] = _bool(section, "expect_found")
    alpha = _number(section, "alpha", float, 1.0)
    if alpha < 0:
        raise ConfigError(f"section [{name}]: alpha must be nonnegative")
    return Experiment(name, kind, spec, alpha, options)


def load_config(path, threads=1):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case sensitive (N)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = os.path.dirname(os.path.abspath(path))
    experiments = [parse_experiment(name, parser[name], base, threads) for name in parser.sections()]
    if not experiments:
        raise ConfigError(f"config {path} defines no experiments")
    return experiments


def _fmt(x):
    return "%.17g" % x


def write_rows(path, name, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fields = [name, str(r[0])] + [_fmt(x) for x in r[1:7]] + ["true" if r[7] else "false"]
            fh.write(",".join(fields) + "\n")


def _cell_rows(cells):
    return [(c.n, c.k, c.t, c.window_prob, c.dev_norm, c.err, c.leak, c.valid) for c in cells]


def execute(exp, out_dir, seed=0):
    """Run one experiment, write its CSV and return ``(passed, summary_line)``."""
    spec = exp.spec
    pot = spec.scaled_potential
    head = f"{exp.name} kind={exp.kind} sobolev_norm={_fmt(sobolev_norm(pot, exp.alpha))}"
    csv_path = os.path.join(out_dir, f"{exp.name}.csv")
    if exp.kind in ("deviation_scan", "decay_fit"):
        cells = scan_cells(spec)
        write_rows(csv_path, exp.name, _cell_rows(cells))
        reports = reduce_cells(cells, spec.k_grid)
        valid = all(r.valid for r in reports)
        sups = " ".join(f"sup[{r.n}]={_fmt(r.dev_norm)}+-{_fmt(r.err)}" for r in reports)
        if exp.kind == "deviation_scan":
            return valid, f"{head} {sups} valid={valid}"
        exponent, ci = decay_exponent_fit(reports, seed=seed)
        lo, hi = exp.options["exponent_min"], exp.options["exponent_max"]
        ok = valid and lo <= exponent <= hi
        return ok, f"{head} exponent={exponent:.6f} ci={ci:.6f} range=[{lo}, {hi}] valid={valid}"
    if exp.kind == "acceleration":
        cells = scan_cells(spec)
        write_rows(csv_path, exp.name, _cell_rows(cells))
        eps = exp.options["epsilon"]
        minima = {}
        for c in cells:
            minima[c.n] = min(minima.get(c.n, math.inf), math.sqrt(c.window_prob) - c.err)
        found = next((n for n in sorted(minima) if minima[n] >= 1.0 - eps), None)
        valid = all(c.valid for c in cells)
        ok = valid and (found is not None or not exp.options["expect_found"])
        mins = " ".join(f"min[{n}]={_fmt(minima[n])}" for n in sorted(minima))
        return ok, f"{head} epsilon={eps} found_n={'none' if found is None else found} {mins} valid={valid}"
    # bound_state: window-state ensemble at the largest n, RMS over fibers
    n_ref = max(spec.n_list, key=abs)
    cfg = spec.config_for(n_ref)
    probes = bound_state_probe(window_ensemble(n_ref, cfg.N, spec.k_grid), spec)
    rows = []
    for n, res in sorted(probes.items()):
        for t, v in zip(res.times, res.values):
            rows.append((n, math.nan, t, v * v, math.nan, math.nan, math.nan, not res.inconclusive))
    write_rows(csv_path, exp.name, rows)
    verdicts = " ".join(
        f"decaying[{n}]={'inconclusive' if r.inconclusive else r.decaying}" for n, r in sorted(probes.items())
    )
    return True, f"{head} {verdicts} heuristic='{next(iter(probes.values())).heuristic}'"


def run(manifest):
    """Execute the experiments of ``manifest``; returns the exit status."""
    experiments = load_config(manifest.config, manifest.threads)
    by_name = {e.name: e for e in experiments}
    names = manifest.names or tuple(by_name)
    missing = [n for n in names if n not in by_name]
    if missing:
        raise ConfigError(f"--only names not in config: {missing}")
    os.makedirs(manifest.out, exist_ok=True)
    status = EXIT_OK
    lines = []
    for name in names:
        try:
            ok, line = execute(by_name[name], manifest.out, manifest.seed)
        except (LeakageExceeded, StepUnderflow) as exc:
            ok, line = False, f"{name} error={type(exc).__name__}: {exc}"
        lines.append(f"{'PASS' if ok else 'FAIL'} {line}")
        print(lines[-1])
        if not ok:
            status = EXIT_FAILED
    with open(os.path.join(manifest.out, "summary.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return status


def verify(pot=None, seed=0):
    results = run_suite(pot, seed=seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def _verify_potential(args):
    if args.coeffs is not None:
        return FourierPotential(parse_coeffs(args.coeffs), check=False)
    if args.config is None:
        return None
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(args.config, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not parser.sections():
        raise ConfigError(f"config {args.config} defines no sections")
    section = parser[parser.sections()[0]]
    pot = _potential(section, os.path.dirname(os.path.abspath(args.config)), check=False)
    return pot.scaled(_number(section, "lambda", float, 1.0))


def build_parser():
    parser = argparse.ArgumentParser(prog="starkwannier", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiments of a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default="results")
    p_run.add_argument("--only", default="", help="comma separated experiment names")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=0)
    p_ver = sub.add_parser("verify", help="run the built-in identity suite")
    p_ver.add_argument("--config", help="take the potential from the first section of this config")
    p_ver.add_argument("--coeffs", help="potential coefficients 'm re im; ...' (not symmetry checked)")
    p_ver.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            if args.threads < 1 or not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--threads must be >= 1 and --seed a u64")
            names = tuple(x.strip() for x in args.only.split(",") if x.strip())
            manifest = RunManifest(args.config, args.out, names, args.seed, args.threads)
            return run(manifest)
        return verify(_verify_potential(args), seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StarkWannierError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except Exception as exc:  # noqa: BLE001 - last-resort exit status
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
