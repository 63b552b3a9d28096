"""Path simulation for UPDs and transformed processes.

Every path draws from a Philox counter-based stream keyed by
``(seed, replication)``, so results never depend on worker scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DomainEscapeError, ParamError
from .transform_copula import Structure
from .upd_models import Kind, UpdModel

STATIONARY = "stationary"


@dataclass(frozen=True)
class PathConfig:
    """Sampling design for one path.

    ``init`` is ``"stationary"`` or a fixed starting value.  ``burn_in``
    defaults to 1000 steps for fixed starts and 0 for stationary draws.
    """

    n: int
    delta: float
    seed: int = 0
    burn_in: Optional[int] = None
    init: Union[str, float] = STATIONARY
    substeps: int = 1
    replication: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ParamError("n must be >= 1")
        if not self.delta > 0:
            raise ParamError("delta must be positive")
        if self.substeps < 1:
            raise ParamError("substeps must be >= 1")
        if self.init != STATIONARY and not isinstance(self.init, (int, float)):
            raise ParamError(f"init must be 'stationary' or a number, got {self.init!r}")

    @property
    def n_burn(self) -> int:
        if self.burn_in is not None:
            return int(self.burn_in)
        return 0 if self.init == STATIONARY else 1000


def make_rng(seed: int, replication: int = 0) -> np.random.Generator:
    """Philox stream for ``(seed, replication)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replication),))
    return np.random.Generator(np.random.Philox(ss))


def _rng(cfg: PathConfig):
    return make_rng(cfg.seed, cfg.replication)


def simulate_ou_exact(kappa, alpha, sigma, cfg: PathConfig):
    """Exact AR(1) sampling of the OU process; returns ``n + 1`` points."""
    if cfg.init == STATIONARY and not kappa > 0:
        raise ParamError("stationary start needs kappa > 0")
    rng = _rng(cfg)
    total = cfg.n + cfg.n_burn
    if kappa > 0:
        e = math.exp(-kappa * cfg.delta)
        sd = sigma * math.sqrt(-math.expm1(-2 * kappa * cfg.delta) / (2 * kappa))
    else:
        e, sd = 1.0, sigma * math.sqrt(cfg.delta)
    if cfg.init == STATIONARY:
        x0 = alpha + sigma / math.sqrt(2 * kappa) * rng.standard_normal()
    else:
        x0 = float(cfg.init)
    eps = sd * rng.standard_normal(total)
    out = np.empty(total + 1)
    out[0] = x0
    # the recursion is sequential; a python loop over floats is fastest here
    x = x0
    for i in range(total):
        x = alpha + (x - alpha) * e + eps[i]
        out[i + 1] = x
    return out[cfg.n_burn:]


def simulate_cir_exact(kappa, alpha, sigma, cfg: PathConfig):
    """Exact CIR sampling through the Poisson-Gamma form of the noncentral chi-square."""
    if not (kappa > 0 and alpha > 0 and sigma > 0):
        raise ParamError("CIR needs positive kappa, alpha, sigma")
    rng = _rng(cfg)
    total = cfg.n + cfg.n_burn
    nu = 2 * kappa * alpha / sigma**2
    c = 2 * kappa / (sigma**2 * -math.expm1(-kappa * cfg.delta))
    e = math.exp(-kappa * cfg.delta)
    if cfg.init == STATIONARY:
        x = rng.gamma(nu, sigma**2 / (2 * kappa))
    else:
        x = float(cfg.init)
    out = np.empty(total + 1)
    out[0] = x
    for i in range(total):
        k = rng.poisson(c * x * e)
        x = rng.gamma(nu + k) / c
        out[i + 1] = x
    return out[cfg.n_burn:]


def simulate_euler(model: UpdModel, cfg: PathConfig, max_reflect=0.01):
    """Euler-Maruyama with ``cfg.substeps`` steps per interval.

    Half-line or bounded domains reflect at a small interior buffer; more
    than ``max_reflect`` reflections per step raises ``DomainEscapeError``.
    """
    rng = _rng(cfg)
    m = cfg.substeps
    dt = cfg.delta / m
    total = cfg.n + cfg.n_burn
    if cfg.init == STATIONARY:
        x = float(model.stationary_quantile(rng.uniform()))
    else:
        x = float(cfg.init)
    lo, hi = model.domain
    buf_lo = lo + 1e-8 * max(1.0, abs(lo)) if math.isfinite(lo) else -math.inf
    buf_hi = hi - 1e-8 * max(1.0, abs(hi)) if math.isfinite(hi) else math.inf
    z = rng.standard_normal((total, m)) * math.sqrt(dt)
    out = np.empty(total + 1)
    out[0] = x
    reflections = 0
    for i in range(total):
        for j in range(m):
            x = x + float(model.drift(x)) * dt + math.sqrt(float(model.diffusion2(x))) * z[i, j]
            if x <= buf_lo:
                x = 2 * buf_lo - x
                reflections += 1
            elif x >= buf_hi:
                x = 2 * buf_hi - x
                reflections += 1
        out[i + 1] = x
    if reflections > max_reflect * total * m:
        raise DomainEscapeError(f"{reflections} reflections in {total * m} steps")
    return out[cfg.n_burn:]


def simulate_model(model: UpdModel, cfg: PathConfig):
    """Best available simulator: exact for OU/CIR, Euler otherwise."""
    if model.reflected:
        return -simulate_model(model.base, cfg)
    if model.kind is Kind.OU:
        return simulate_ou_exact(*model.theta, cfg)
    if model.kind is Kind.CIR:
        return simulate_cir_exact(*model.theta, cfg)
    return simulate_euler(model, cfg)


def simulate_transformed(s: Structure, cfg: PathConfig):
    """Simulate ``X`` and return ``Y = V(X)`` pointwise."""
    return s.transform.V(simulate_model(s.model, cfg))


def write_path_csv(path, values, delta):
    """Write ``index,time,value`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,time,value\n")
        for i, v in enumerate(values):
            fh.write(f"{i},{i * delta:.12g},{v:.17g}\n")
