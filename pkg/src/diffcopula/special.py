"""Log-space special functions."""

import numpy as np
from scipy import special as sc

from .errors import BesselOverflowError


def _log_iv_series(nu, z, terms=400):
    # log of sum_k (z/2)^(2k+nu) / (k! Gamma(k+nu+1)), summed in log space
    k = np.arange(terms)[:, None]
    half = np.log(z / 2.0)
    logt = (2 * k + nu) * half - sc.gammaln(k + 1) - sc.gammaln(k + nu + 1)
    return sc.logsumexp(logt, axis=0)


def log_iv(nu, z):
    """Natural log of the modified Bessel function of the first kind.

    Uses the exponentially scaled routine ``scipy.special.ive`` so that
    large arguments never overflow, and falls back to a log-space power
    series where the scaled value underflows (small ``z``, large ``nu``).

    Parameters
    ----------
    nu : float or ndarray
        Order, ``nu > -1``.
    z : float or ndarray
        Nonnegative argument.

    Returns
    -------
    ndarray
        ``log I_nu(z)``.
    """
    nu, z = np.broadcast_arrays(np.asarray(nu, float), np.asarray(z, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(sc.ive(nu, z)) + z
    bad = ~np.isfinite(out) & (z > 0)
    if np.any(bad):
        out = np.array(out, copy=True)
        out[bad] = _log_iv_series(nu[bad], z[bad])
    if np.any(np.isnan(out)):
        raise BesselOverflowError("log I_nu(z) could not be evaluated")
    return out
