"""Log-spline sieve densities on a bounded support."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import BSpline
from scipy.special import logsumexp


@dataclass(frozen=True)
class SieveSpec:
    """``knots`` equally spaced knots (ends included) of a cubic log-spline
    on the data range widened by ``padding`` times the range on each side."""

    knots: int = 8
    padding: float = 0.05
    degree: int = 3
    cells: int = 200
    gauss_nodes: int = 8

    def __post_init__(self):
        if self.knots < 2:
            raise ValueError("need at least two knots")


class LogSplineBasis:
    """Fixed evaluation design for ``f(y) = exp(B(y) c) / Z(c)``.

    All design matrices are built once for the sample, the normalisation
    nodes and the partial-cell nodes used by the cdf, so each likelihood
    call reduces to sparse matrix-vector products.
    """

    def __init__(self, data, spec: SieveSpec = SieveSpec()):
        y = np.asarray(data, float)
        span = float(y.max() - y.min()) or 1.0
        lo = float(y.min()) - spec.padding * span
        hi = float(y.max()) + spec.padding * span
        k = spec.degree
        inner = np.linspace(lo, hi, spec.knots)
        self.t = np.r_[[lo] * k, inner, [hi] * k]
        self.k = k
        self.lo, self.hi = lo, hi
        self.n_basis = len(self.t) - k - 1
        self.spec = spec

        gx, gw = np.polynomial.legendre.leggauss(spec.gauss_nodes)
        self._gx, self._gw = gx, gw
        edges = np.linspace(lo, hi, spec.cells + 1)
        self.edges = edges
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        self._node_logw = np.log((half[:, None] * gw[None, :]).ravel())
        self._B_nodes = self.design(nodes)
        self._B_data = self.design(y)
        self.data = y
        cell = np.clip(np.searchsorted(edges, y, side="right") - 1, 0, spec.cells - 1)
        self._cell = cell
        left = edges[cell]
        h2 = 0.5 * (y - left)
        sub = ((left + h2)[:, None] + h2[:, None] * gx[None, :]).ravel()
        self._B_sub = self.design(sub)
        with np.errstate(divide="ignore"):
            self._sub_logw = np.log(np.maximum(h2[:, None] * gw[None, :], 0.0))

    def design(self, x):
        x = np.clip(np.asarray(x, float), self.lo, self.hi)
        return BSpline.design_matrix(x, self.t, self.k)

    def full_coefs(self, free):
        return np.r_[0.0, np.asarray(free, float)]

    def log_norm(self, c):
        return float(logsumexp(self._B_nodes @ c + self._node_logw))

    def logpdf_data(self, c):
        return self._B_data @ c - self.log_norm(c)

    def cdf_data(self, c):
        """Sieve cdf at the sample points."""
        lz = self.log_norm(c)
        cells = self.spec.cells
        node_mass = np.exp(self._B_nodes @ c + self._node_logw - lz).reshape(cells, -1).sum(1)
        cum = np.r_[0.0, np.cumsum(node_mass)]
        part = np.exp(((self._B_sub @ c).reshape(len(self.data), -1) - lz) + self._sub_logw).sum(1)
        return cum[self._cell] + part

    def cdf(self, y, c):
        """Sieve cdf at arbitrary points: whole cells plus Gauss nodes on the partial cell."""
        y = np.asarray(y, float)
        v = np.clip(np.atleast_1d(y).ravel(), self.lo, self.hi)
        lz = self.log_norm(c)
        cells = self.spec.cells
        node_mass = np.exp(self._B_nodes @ c + self._node_logw - lz).reshape(cells, -1).sum(1)
        cum = np.r_[0.0, np.cumsum(node_mass)]
        cell = np.clip(np.searchsorted(self.edges, v, side="right") - 1, 0, cells - 1)
        left = self.edges[cell]
        h2 = 0.5 * (v - left)
        sub = (left + h2)[:, None] + h2[:, None] * self._gx[None, :]
        dens = np.exp((self.design(sub.ravel()) @ c).reshape(sub.shape) - lz)
        part = (dens * h2[:, None] * self._gw[None, :]).sum(1)
        return np.minimum(cum[cell] + part, 1.0).reshape(y.shape)

    def logpdf(self, y, c):
        y = np.asarray(y, float)
        out = (self.design(np.atleast_1d(y).ravel()) @ c - self.log_norm(c)).reshape(y.shape)
        return np.where((y >= self.lo) & (y <= self.hi), out, -np.inf)

    def pdf(self, y, c):
        return np.exp(self.logpdf(y, c))

    def fit_iid(self):
        """Maximum-likelihood coefficients for an i.i.d. sample (concave problem)."""
        def nll(free):
            return -float(np.mean(self.logpdf_data(self.full_coefs(free))))

        res = optimize.minimize(nll, np.zeros(self.n_basis - 1), method="BFGS")
        return res.x


class SieveDensity:
    """Fitted sieve density with the marginal-source API."""

    def __init__(self, basis: LogSplineBasis, coefs):
        self.basis = basis
        self.coefs = np.asarray(coefs, float)

    def logpdf(self, y):
        return self.basis.logpdf(y, self.coefs)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        return self.basis.cdf(y, self.coefs)

    def pdf_derivs(self, y, order=2):
        """``[f, f', ..., f^(order)]`` from derivatives of the log-spline."""
        y = np.asarray(y, float)
        f = self.pdf(y)
        spl = BSpline(self.basis.t, self.coefs, self.basis.k)
        yc = np.clip(y, self.basis.lo, self.basis.hi)
        s1, s2, s3 = (spl.derivative(k)(yc) for k in (1, 2, 3))
        out = [f, f * s1, f * (s1 * s1 + s2), f * (s1**3 + 3 * s1 * s2 + s3)]
        return out[: order + 1]

    def quantile(self, u):
        u = np.asarray(u, float)
        out = np.empty(u.shape)
        for i, v in np.ndenumerate(u):
            out[i] = optimize.brentq(lambda z: float(self.cdf(z)) - v, self.basis.lo,
                                     self.basis.hi, xtol=1e-13)
        return out

    def integral(self):
        """Mass over the support by adaptive quadrature (independent of the cell rule)."""
        b = self.basis
        return float(integrate.quad(lambda z: float(self.pdf(z)), b.lo, b.hi,
                                    points=list(b.t[b.k:-b.k]), limit=400, epsabs=1e-13)[0])
