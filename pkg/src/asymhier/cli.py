"""Command-line entry point: run a convergence experiment from a config file.

Config files are INI text with three sections::

    [experiment]
    name = smooth_1d_v1
    family = smooth_1d

    [sweep]
    eps = 0.2, 0.1, 0.05
    sigma = 0.001            # families with a second parameter only
    norms = Linf, L2

    [params]
    n = 65                   # family parameters, see --list

Exit codes: 0 success, 1 a rate outside its expected window, 2 config
error, 3 solver or module error.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from .errors import AsymError, ConfigError, UnsupportedError
from .harness import FAMILIES, NORMS, ExperimentConfig, get_family, run_convergence

log = logging.getLogger("asymhier")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _parse_value(text: str):
    t = text.strip()
    if t.lower() in ("", "none"):
        return None
    if "," in t:
        return [_parse_value(x) for x in t.split(",") if x.strip()]
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def _tuple(v) -> tuple | None:
    if v is None:
        return None
    return tuple(v) if isinstance(v, list) else (v,)


def load_config(path) -> ExperimentConfig:
    """Parse and check an experiment config file."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigError("config needs an [experiment] section")
    unknown = set(cp.sections()) - {"experiment", "sweep", "params"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    exp = cp["experiment"]
    family = exp.get("family")
    if not family:
        raise ConfigError("[experiment] needs a family")
    try:
        fam = get_family(family)
    except UnsupportedError as exc:
        raise ConfigError(str(exc)) from None
    name = exp.get("name", family)
    sweep = cp["sweep"] if cp.has_section("sweep") else {}
    eps = _tuple(_parse_value(sweep.get("eps", "")))
    sigma = _tuple(_parse_value(sweep.get("sigma", "")))
    norms = _tuple(_parse_value(sweep.get("norms", ""))) or ("Linf",)
    for n in norms:
        if n not in NORMS:
            raise ConfigError(f"unknown norm {n!r}; choose from {NORMS}")
    if eps is not None and (len(eps) < 1 or any(not isinstance(e, (int, float)) or e <= 0 for e in eps)):
        raise ConfigError("eps must be a list of positive numbers")
    params = {}
    if cp.has_section("params"):
        for k, v in cp["params"].items():
            if k not in fam.defaults:
                raise ConfigError(f"family {family} has no parameter {k!r}")
            params[k] = _parse_value(v)
    if family == "two_param_case_iii":
        c = params.get("c", fam.defaults.get("c"))
        if not isinstance(c, (int, float)) or c <= 0:
            raise ConfigError("two_param_case_iii requires c > 0")
    if family == "two_param_case_ii2":
        for k in ("h0", "h1"):
            v = params.get(k, fam.defaults[k])
            if not isinstance(v, (int, float)) or v <= 0:
                raise ConfigError("two_param_case_ii2 requires h strictly positive")
    return ExperimentConfig(name, family, params, eps, sigma, norms)


def bundled_configs() -> list[str]:
    """Names of the config files shipped with the package."""
    root = resources.files("asymhier") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def bundled_config_path(name: str) -> Path:
    root = resources.files("asymhier") / "configs"
    return Path(str(root / name))


def list_experiments() -> str:
    """Families with their required parameters, and the bundled configs."""
    lines = ["families:"]
    for name in sorted(FAMILIES):
        lines.append(f"  {name} ({FAMILIES[name].requires})")
    lines.append("bundled configs:")
    lines.extend(f"  {c}" for c in bundled_configs())
    return "\n".join(lines)


def _summary(report) -> str:
    out = [f"experiment {report.experiment} ({report.family})"]
    for q, per in report.rates.items():
        for norm, r in per.items():
            if r.status == "exact":
                txt = "exact to resolution"
            elif r.rate is None:
                txt = "unresolved"
            else:
                txt = f"rate {r.rate:.3f} (residual {r.residual:.2e}, {r.status})"
            exp = "" if r.expected is None else f", expected {r.expected}"
            mark = "" if r.within_window is None else (" ok" if r.within_window else " MISS")
            out.append(f"  {q:8s} {norm:5s} {txt}{exp}{mark}")
    for k, v in report.scalars.items():
        out.append(f"  {k}: {v}")
    return "\n".join(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asymhier", description="Run expansion convergence experiments.")
    p.add_argument("--config", help="experiment config file (or the name of a bundled config)")
    p.add_argument("--out", default=".", help="directory for the CSV and JSON reports")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="sweep points evaluated in parallel")
    p.add_argument("--norms", help="comma-separated norms, overriding the config (Linf, L2, H1)")
    p.add_argument("--list", action="store_true", help="list families and bundled configs")
    p.add_argument("--verbose", action="store_true", help="log progress")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.list:
        print(list_experiments())
        return EXIT_OK
    if not args.config:
        parser.print_usage(sys.stderr)
        print("asymhier: error: --config or --list is required", file=sys.stderr)
        return EXIT_CONFIG
    path = args.config
    if not os.path.exists(path) and path in bundled_configs():
        path = str(bundled_config_path(path))
    try:
        cfg = load_config(path)
        if args.norms:
            norms = tuple(n.strip() for n in args.norms.split(",") if n.strip())
            bad = [n for n in norms if n not in NORMS]
            if bad:
                raise ConfigError(f"unknown norms {bad}; choose from {NORMS}")
            cfg.norms = norms
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
    except ConfigError as exc:
        print(f"config error (ConfigError): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s (%s)", cfg.name, cfg.family)
    try:
        report = run_convergence(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"config error (ConfigError): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AsymError as exc:
        print(f"solver error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / f"{cfg.name}.csv")
    report.to_json(out / f"{cfg.name}.json")
    print(_summary(report))
    log.info("wrote %s and %s", out / f"{cfg.name}.csv", out / f"{cfg.name}.json")
    return EXIT_FAIL if report.failures() else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
