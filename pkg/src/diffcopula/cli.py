"""Command-line front end.

Subcommands: ``simulate``, ``fit``, ``lr-test``, ``mc`` and ``export``.
Settings come from an optional YAML/JSON config file; command-line flags
override it.  Exit codes: 0 success, 2 config, 3 data, 4 convergence, 5 IO.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np
import yaml

from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateSampleError,
    DiffCopulaError,
    DomainError,
    NonConvergenceError,
)
from .estimate import (
    FitOptions,
    estimate_drift_diffusion,
    fit_euler_pmle,
    fit_parametric,
    fit_pmle,
    fit_ppmle,
    fit_smle,
    parametric_structure,
)
from .inference_mc import (
    KAPPA_FACTORS,
    SAMPLE_SIZES,
    SKST_PHI,
    Scenario,
    mc_experiment,
    pseudo_lr_test,
    rows_to_csv,
)
from .marginals import Skst
from .sieve import SieveSpec
from .simulate import PathConfig, simulate_transformed, write_path_csv
from .transform_copula import (
    Structure,
    build_marginal_induced_transform,
    identity_transform,
    transformed_drift_diffusion,
)
from .upd_models import normalized_cir, normalized_ou

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4, 5
log = logging.getLogger("diffcopula")

# parameter estimates reported for daily VIX data
REFERENCE_THETA = {"DO": [4.4888, 2.8890, 1.0818], "EW": [4.0741, 0.0524, 0.0695, 0.1916, 0.0072]}
MODELS = ("OU-SKST", "CIR-SKST", "DO", "EW", "OU", "CIR", "NPTOU", "NPTCIR")
ESTIMATORS = ("PMLE", "PPMLE", "SMLE", "EulerPMLE", "MLE")


@dataclass
class RunConfig:
    """Settings for one CLI run; every field can come from file or flag."""

    subcommand: str = ""
    model: str = "OU-SKST"
    theta: Optional[list] = None
    kappa_factor: int = 20
    phi: Optional[list] = None
    delta: Optional[float] = None
    n: int = 2202
    seed: Optional[int] = None
    estimator: str = "PMLE"
    bandwidth_factor: float = 1.5
    knots: int = 8
    B: int = 99
    R: int = 10
    restarts: int = 2
    input: Optional[str] = None
    out_dir: str = "out"
    threads: int = 1
    kappa_factors: list = field(default_factory=lambda: list(KAPPA_FACTORS))
    sample_sizes: list = field(default_factory=lambda: list(SAMPLE_SIZES))
    grid_points: int = 41
    oracle_marginal: bool = False

    def validate(self):
        if self.model.upper() not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}")
        self.model = self.model.upper()
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}")
        if self.n < 1 or self.B < 0 or (self.subcommand == "mc" and self.R < 2):
            raise ConfigError("n >= 1, B >= 0 and R >= 2 are required")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("delta must be positive")
        if self.bandwidth_factor <= 0 or self.knots < 2 or self.threads < 1:
            raise ConfigError("bandwidth_factor > 0, knots >= 2, threads >= 1 required")
        if self.kappa_factor not in KAPPA_FACTORS:
            raise ConfigError(f"kappa_factor must be one of {KAPPA_FACTORS}")
        if self.subcommand in ("mc", "lr-test") and self.seed is None:
            raise ConfigError(f"{self.subcommand} requires an explicit seed")
        if self.input is not None and not os.path.exists(self.input):
            raise ConfigError(f"input file {self.input} does not exist")
        return self


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def read_series(path):
    """Read one observation per row; a ``value`` column is used when present,
    otherwise the last column.  Other columns (such as dates) are ignored."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    values = []
    with fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path} is empty")
    col, start = -1, 0
    header = [c.strip().lower() for c in rows[0]]
    if not _is_number(rows[0][-1]):
        col = header.index("value") if "value" in header else len(header) - 1
        start = 1
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            values.append(float(row[col]))
        except (ValueError, IndexError):
            raise DataError(f"{path}: malformed row at line {lineno}: {row!r}") from None
    if len(values) < 3:
        raise DataError(f"{path}: need at least three observations")
    return np.array(values)


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


# ------------------------------------------------------------- helpers
def _default_delta(cfg: RunConfig) -> float:
    if cfg.delta is not None:
        return float(cfg.delta)
    if cfg.model in ("OU-SKST", "CIR-SKST"):
        return Scenario(cfg.model, cfg.kappa_factor, cfg.n).sampling_interval
    return 1.0 / 252


def _structure(cfg: RunConfig) -> Structure:
    """Data-generating structure for the configured model."""
    m = cfg.model
    if m in ("DO", "EW"):
        return parametric_structure(m, cfg.theta or REFERENCE_THETA[m])
    if m in ("OU-SKST", "CIR-SKST"):
        scen = Scenario(m, cfg.kappa_factor, cfg.n)
        if cfg.theta is None and cfg.phi is None:
            return scen.structure()
        th = cfg.theta or list(scen.theta)
        model = normalized_ou(th[0]) if m == "OU-SKST" else normalized_cir(*th)
        return Structure(model, build_marginal_induced_transform(Skst(cfg.phi or SKST_PHI), model))
    th = cfg.theta or ([1.0] if m in ("OU", "NPTOU") else [1.0, 2.0])
    model = normalized_ou(th[0]) if m in ("OU", "NPTOU") else normalized_cir(*th)
    return Structure(model, identity_transform())


def _family(cfg):
    return {"OU-SKST": "NPTOU", "OU": "NPTOU", "CIR-SKST": "NPTCIR", "CIR": "NPTCIR"}.get(
        cfg.model, cfg.model)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)


def _load_or_simulate(cfg: RunConfig, delta):
    if cfg.input:
        return read_series(cfg.input)
    seed = 0 if cfg.seed is None else cfg.seed
    return simulate_transformed(_structure(cfg), PathConfig(cfg.n, delta, seed=seed))


# ---------------------------------------------------------- subcommands
def cmd_simulate(cfg: RunConfig) -> str:
    delta = _default_delta(cfg)
    seed = 0 if cfg.seed is None else cfg.seed
    y = simulate_transformed(_structure(cfg), PathConfig(cfg.n, delta, seed=seed))
    path = os.path.join(cfg.out_dir, "simulated.csv")
    write_path_csv(path, y, delta)
    echo = {**asdict(cfg), "delta": delta, "seed": seed}
    _write_json(os.path.join(cfg.out_dir, "simulate_config.json"), echo)
    log.info("effective config: %s", json.dumps(echo, default=_json_default))
    return path


def _fit(cfg: RunConfig, y, delta):
    opts = FitOptions(restarts=cfg.restarts, bandwidth_factor=cfg.bandwidth_factor)
    fam = _family(cfg)
    est = cfg.estimator
    if cfg.model in ("DO", "EW") or est == "MLE":
        if cfg.model not in ("DO", "EW"):
            raise ConfigError("MLE is available for the DO and EW models")
        return fit_parametric(y, cfg.model, delta, opts)
    if est == "PPMLE":
        return fit_ppmle(y, fam, delta, opts)
    if est == "SMLE":
        return fit_smle(y, fam, delta, SieveSpec(knots=cfg.knots), opts)
    if est == "EulerPMLE":
        return fit_euler_pmle(y, fam, delta, opts)
    return fit_pmle(y, fam, delta, opts)


def cmd_fit(cfg: RunConfig) -> str:
    delta = _default_delta(cfg)
    y = _load_or_simulate(cfg, delta)
    res = _fit(cfg, y, delta)
    report = {"config": asdict(cfg), "delta": delta, "fit": res.to_dict(),
              "LL": res.loglik}
    path = os.path.join(cfg.out_dir, "fit_report.json")
    _write_json(path, report)
    return path


def cmd_lr_test(cfg: RunConfig) -> str:
    delta = cfg.delta if cfg.delta is not None else 1.0 / 252
    if cfg.model not in ("DO", "EW"):
        raise ConfigError("lr-test needs model DO or EW")
    y = _load_or_simulate(cfg, delta)
    rep = pseudo_lr_test(y, cfg.model, None, delta, cfg.B, cfg.seed, cfg.bandwidth_factor,
                         FitOptions(restarts=cfg.restarts, compute_se=False), cfg.threads)
    path = os.path.join(cfg.out_dir, "lr_report.json")
    _write_json(path, {"config": asdict(cfg), **rep.to_dict()})
    return path


def cmd_mc_tables(cfg: RunConfig) -> str:
    if cfg.model not in ("OU-SKST", "CIR-SKST"):
        raise ConfigError("mc needs model OU-SKST or CIR-SKST")
    rows = []
    for n in cfg.sample_sizes:
        for f in cfg.kappa_factors:
            log.info("scenario %s n=%d factor=%d", cfg.model, n, f)
            rows += mc_experiment(cfg.model, int(f), int(n), cfg.R, cfg.seed,
                                  FitOptions(restarts=cfg.restarts, compute_se=False,
                                             tolerance=1e-8),
                                  delta=cfg.delta, workers=cfg.threads)
    path = os.path.join(cfg.out_dir, "mc_table.csv")
    rows_to_csv(rows, path)
    _write_json(os.path.join(cfg.out_dir, "mc_config.json"), asdict(cfg))
    return path


def cmd_export_functions(cfg: RunConfig) -> str:
    delta = _default_delta(cfg)
    s = _structure(cfg)
    y = _load_or_simulate(cfg, delta)
    u = np.linspace(0.01, 0.99, cfg.grid_points)
    grid = np.quantile(y, u) if cfg.input else s.transform.V(s.model.stationary_quantile(u))
    if cfg.oracle_marginal:
        # true UPD and true marginal of Y plugged into the same estimator
        marg = _true_marginal(cfg, s)
        if marg is None:
            mu_hat, s2_hat = transformed_drift_diffusion(s, grid)
        else:
            dd = estimate_drift_diffusion(y, s.model, grid, marginal=marg)
            mu_hat, s2_hat = dd.mu_hat, dd.sigma2_hat
    else:
        fit = _fit(cfg, y, delta)
        dd = estimate_drift_diffusion(y, fit, grid, bandwidth_factor=cfg.bandwidth_factor)
        mu_hat, s2_hat = dd.mu_hat, dd.sigma2_hat
    cols = [grid, mu_hat, s2_hat]
    header = ["y", "mu_hat", "sigma2_hat"]
    if not cfg.input:
        mu_t, s2_t = transformed_drift_diffusion(s, grid)
        cols += [mu_t, s2_t]
        header += ["mu_true", "sigma2_true"]
    path = os.path.join(cfg.out_dir, "functions.csv")
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(header),
               comments="", fmt="%.17g")
    _write_json(os.path.join(cfg.out_dir, "export_config.json"), {**asdict(cfg), "delta": delta})
    return path


def _true_marginal(cfg: RunConfig, s: Structure):
    if cfg.model in ("OU-SKST", "CIR-SKST"):
        return Skst(cfg.phi or SKST_PHI)
    if cfg.model in ("OU", "CIR", "NPTOU", "NPTCIR"):
        return s.model.stationary
    return None


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "lr-test": cmd_lr_test,
            "mc": cmd_mc_tables, "export": cmd_export_functions}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diffcopula", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--model")
        sp.add_argument("--theta", type=float, nargs="+")
        sp.add_argument("--phi", type=float, nargs=4)
        sp.add_argument("--kappa-factor", dest="kappa_factor", type=int)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--estimator")
        sp.add_argument("--bandwidth-factor", dest="bandwidth_factor", type=float)
        sp.add_argument("--knots", type=int)
        sp.add_argument("--B", type=int)
        sp.add_argument("--R", type=int)
        sp.add_argument("--restarts", type=int)
        sp.add_argument("--input")
        sp.add_argument("--kappa-factors", dest="kappa_factors", type=int, nargs="+")
        sp.add_argument("--sample-sizes", dest="sample_sizes", type=int, nargs="+")
        sp.add_argument("--grid-points", dest="grid_points", type=int)
        sp.add_argument("--oracle-marginal", dest="oracle_marginal", action="store_true",
                        default=None)
    return p


def make_config(argv) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    data = load_config(args.pop("config")) if args.get("config") else {}
    data.update({k: v for k, v in args.items() if v is not None})
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(argv)
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = COMMANDS[cfg.subcommand](cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DataError, DegenerateSampleError, DomainError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except (ConvergenceError, NonConvergenceError) as exc:
        log.error("convergence error: %s", exc)
        return EXIT_CONVERGENCE
    except OSError as exc:
        log.error("IO error: %s", exc)
        return EXIT_IO
    except DiffCopulaError as exc:
        log.error("error: %s", exc)
        return EXIT_CONVERGENCE
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
