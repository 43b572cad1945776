"""Brute-force reference computations.

Everything here is written from scratch on purpose: sphere draws, Dirichlet
densities and the arcsine-type integrals are recomputed locally rather than
borrowed from the modules these routines are used to check.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import DomainError, ValidationError
from .rng import as_generator

HIGH_VARIANCE_LEVEL = 0.10
_GL_INNER = np.polynomial.legendre.leggauss(20)
_GL_OUTER = np.polynomial.legendre.leggauss(48)


class ZnEstimate(NamedTuple):
    log_z_over_n: float
    stderr: float
    high_variance: bool
    rel_var: float


def zn_direct_mc(s, beta, samples, rng, chunk=200_000):
    """log E_uniform[exp(beta H_n)] / n from independent uniform-sphere draws.

    The standard error comes from the delta method; ``high_variance`` is set
    when the relative variance of the sample mean exceeds 10%.
    """
    if int(samples) != samples or samples < 2:
        raise ValidationError(f"samples must be an integer >= 2, got {samples}", "samples")
    rng = as_generator(rng)
    n = s.n
    lam = np.asarray(s.eigenvalues, dtype=float)
    if beta == 0:
        return ZnEstimate(0.0, 0.0, False, 0.0)
    logs = np.empty(int(samples))
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        g = rng.standard_normal((m, n))
        y = g * g
        y /= y.sum(axis=1, keepdims=True)
        logs[done:done + m] = 0.5 * n * beta * (y @ lam)
        done += m
    top = logs.max()
    w = np.exp(logs - top)
    mean = w.mean()
    rel_var = float(w.var(ddof=1) / (samples * mean * mean))
    log_mean = top + math.log(mean)
    stderr = math.sqrt(rel_var) / n
    return ZnEstimate(log_mean / n, stderr, rel_var > HIGH_VARIANCE_LEVEL, rel_var)


def _log_dirichlet_density(point, alphas):
    point = np.asarray(point, dtype=float)
    norm = math.lgamma(sum(alphas)) - sum(math.lgamma(a) for a in alphas)
    return norm + sum((a - 1.0) * math.log(p) for a, p in zip(alphas, point))


def blocked_expectation_quadrature(K, n, beta, lambda_tilde, spike):
    """(1/n) log E[exp((n beta / 2)(spike r0 + sum_i lt_i r_i))], r ~ Dir(1, a, ..., a).

    a = (n - 2) / (2K). Nested adaptive quadrature over the simplex, K <= 3.
    """
    if int(K) != K or not 1 <= K <= 3:
        raise DomainError(f"quadrature oracle supports K in 1..3, got {K}", "K")
    K = int(K)
    lt = np.asarray(lambda_tilde, dtype=float)
    if lt.shape != (K,):
        raise ValidationError(f"lambda_tilde must have {K} entries", "lambda_tilde")
    alpha = (n - 2) / (2.0 * K)
    alphas = [1.0] + [alpha] * K
    weights = np.concatenate([[spike], lt])
    t = 0.5 * n * beta
    shift = t * float(weights.max())

    def integrand(*free):
        last = 1.0 - sum(free)
        if last <= 0.0 or min(free) <= 0.0:
            return 0.0
        point = list(free) + [last]
        return math.exp(_log_dirichlet_density(point, alphas) + t * float(np.dot(weights, point)) - shift)

    def bounds(*outer):
        return [0.0, max(0.0, 1.0 - sum(outer))]

    ranges = [bounds] * K
    opts = {"epsabs": 0.0, "epsrel": 1e-11, "limit": 200}
    val, _ = integrate.nquad(integrand, ranges, opts=[opts] * K)
    return (math.log(val) + shift) / n


def _arcsine_product_integral(R, lams, t, nodes, weights):
    """int over {y >= 0, sum y = R} of prod y_i^(-1/2) exp(t sum lam_i y_i).

    Peels off one coordinate at a time with y = R sin^2(theta); vectorised
    over ``R``.
    """
    R = np.asarray(R, dtype=float)
    if len(lams) == 1:
        return np.exp(t * lams[0] * R) / np.sqrt(R)
    theta = 0.25 * math.pi * (nodes + 1.0)
    w = 0.25 * math.pi * weights
    sin2, cos2 = np.sin(theta) ** 2, np.cos(theta) ** 2
    Rx = R[..., None]
    rest = Rx * cos2
    if len(lams) == 2:
        # R^(1/2) cos(theta) cancels the R'^(-1/2) of the last coordinate
        body = 2.0 * np.exp(t * (lams[0] * Rx * sin2 + lams[1] * rest))
    else:
        inner = _arcsine_product_integral(rest, lams[1:], t, nodes, weights)
        body = 2.0 * np.sqrt(Rx) * np.sqrt(cos2) * np.exp(t * lams[0] * Rx * sin2) * inner
    return body @ w


class MarginalDensity:
    """Density and distribution function of eta_coord^2 under the Gibbs law."""

    def __init__(self, lam, beta, coord):
        self.lam = np.asarray(lam, dtype=float)
        self.t = 0.5 * self.lam.size * beta
        self.coord = coord
        self.others = [float(v) for k, v in enumerate(self.lam) if k != coord]
        self.norm = 1.0
        self.norm = float(self._phi_integral(np.array([0.5 * math.pi]))[0])

    def _phi_integrand(self, phi):
        # y = sin^2(phi): dy / sqrt(y) = 2 cos(phi) dphi
        y = np.sin(phi) ** 2
        rest = np.cos(phi) ** 2
        lam_c = self.lam[self.coord]
        if len(self.others) == 1:
            return 2.0 * np.exp(self.t * (lam_c * y + self.others[0] * rest))
        inner = _arcsine_product_integral(rest, self.others, self.t, *_GL_INNER)
        return 2.0 * np.cos(phi) * np.exp(self.t * lam_c * y) * inner

    def _phi_integral(self, upper):
        nodes, weights = _GL_OUTER
        out = np.empty(upper.shape)
        for k, u in enumerate(upper):
            half = 0.5 * u
            out[k] = half * (self._phi_integrand(half * (nodes + 1.0)) @ weights)
        return out / self.norm

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.zeros(flat.shape)
        inside = (flat > 0) & (flat < 1)
        y = flat[inside]
        phi = np.arcsin(np.sqrt(y))
        # density in y = integrand in phi / (dy/dphi) = integrand / (2 sqrt(y) cos(phi))
        vals = np.array([self._phi_integrand(np.array([p]))[0] for p in phi])
        out[inside] = vals / (2.0 * np.sqrt(y) * np.cos(phi)) / self.norm
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.clip(x.reshape(-1), 0.0, 1.0)
        out = self._phi_integral(np.arcsin(np.sqrt(flat)))
        out = np.clip(out, 0.0, 1.0)
        return out.reshape(x.shape) if x.ndim else float(out[0])


def exact_density_small_n(s, beta, coord):
    """Exact marginal of eta_coord^2 for n <= 6 by nested Gauss-Legendre quadrature."""
    if s.n > 6:
        raise DomainError(f"exact marginal supports n <= 6, got n={s.n}", "n")
    if not 0 <= coord < s.n:
        raise DomainError(f"coordinate index {coord} out of range", "coord")
    return MarginalDensity(s.eigenvalues, beta, int(coord))


def bessel_i0(x):
    """Modified Bessel function I0: power series up to 20, asymptotic expansion above."""
    if x < 0:
        raise DomainError(f"bessel_i0 needs x >= 0, got {x}", "x")
    x = float(x)
    if x <= 20.0:
        q = 0.25 * x * x
        term = total = 1.0
        k = 0
        while term > 1e-17 * total:
            k += 1
            term *= q / (k * k)
            total += term
        return total
    term = total = 1.0
    k = 0
    while True:
        k += 1
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        if nxt > term or nxt < 1e-17 * total:
            break
        term = nxt
        total += term
    return math.exp(x) / math.sqrt(2.0 * math.pi * x) * total
