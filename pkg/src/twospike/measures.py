"""Dirichlet, sphere and tilted-arcsine measures.

The tilted arcsine law, density proportional to exp(-a x) / sqrt(x (r - x))
on (0, r), is both the conditional law of the second outlier coordinate
given the pair mass and the building block of the limiting overlap law.
All integrals against it use the substitution x = r sin^2(theta), which
turns the two endpoint singularities into the smooth integrand
2 exp(-a r sin^2 theta) on [0, pi/2].
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, special

from .errors import BlockMismatch, DomainError, SamplerStall, ValidationError
from .rng import as_generator

LARGE_TILT = 50.0
MAX_ROUNDS = 10_000


# -- Dirichlet ---------------------------------------------------------------

@dataclass(frozen=True)
class DirichletParams:
    alphas: tuple

    def __post_init__(self):
        alphas = tuple(float(a) for a in np.atleast_1d(self.alphas))
        if not alphas:
            raise DomainError("Dirichlet needs at least one parameter", "alphas")
        if any(not a > 0 for a in alphas):
            raise DomainError(f"Dirichlet parameters must be positive, got {alphas}", "alphas")
        object.__setattr__(self, "alphas", alphas)

    @property
    def k(self):
        return len(self.alphas)

    def mean(self):
        a = np.asarray(self.alphas)
        return a / a.sum()


def check_simplex(values, tol=1e-12):
    """Validate and return ``values`` as a point of the probability simplex."""
    r = np.asarray(values, dtype=float)
    if np.any(r < 0) or abs(r.sum() - 1.0) > tol * max(1, r.size):
        raise ValidationError("not a point of the probability simplex", "r")
    return r


def sample_gamma(alpha, tau, rng, size=None):
    """Gamma(shape=alpha, scale=tau) draws."""
    if not (alpha > 0 and tau > 0):
        raise DomainError(f"gamma parameters must be positive, got alpha={alpha}, tau={tau}", "alpha")
    return as_generator(rng).gamma(alpha, tau, size=size)


def sample_dirichlet(p, rng, size=None):
    """Dirichlet draws as independent common-scale gammas divided by their sum.

    Returns shape ``(k,)`` for ``size=None``, else ``(size, k)``.
    """
    rng = as_generator(rng)
    shape = (p.k,) if size is None else (size, p.k)
    g = np.empty(shape)
    for i, a in enumerate(p.alphas):
        g[..., i] = sample_gamma(a, 1.0, rng, size=None if size is None else size)
    return g / g.sum(axis=-1, keepdims=True)


def dirichlet_log_pdf(p, y):
    """Log density w.r.t. Lebesgue measure on the first k-1 coordinates."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != p.k:
        raise ValidationError(f"point has {y.shape[-1]} coordinates, Dirichlet has {p.k}", "y")
    if np.any(y <= 0):
        raise DomainError("Dirichlet log density needs a strictly interior point", "y")
    a = np.asarray(p.alphas)
    if p.k == 1:
        return 0.0
    norm = special.gammaln(a.sum()) - special.gammaln(a).sum()
    return norm + np.sum((a - 1.0) * np.log(y), axis=-1)


# -- sphere ----------------------------------------------------------------

def sample_uniform_sphere(n, rng, size=None):
    if int(n) != n or n < 2:
        raise DomainError(f"sphere dimension must be an integer >= 2, got {n}", "n")
    rng = as_generator(rng)
    shape = (int(n),) if size is None else (size, int(n))
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def block_coarsen(eta_sq, K):
    """Coarsen squared coordinates to (r0, r1, ..., rK).

    r0 is the mass on the two leading coordinates; r_i sums block i of the
    remaining n-2 coordinates, blocks taken in index order. Works on the last
    axis, so a stack of states coarsens in one call.
    """
    eta_sq = np.asarray(eta_sq, dtype=float)
    n = eta_sq.shape[-1]
    if int(K) != K or K < 1 or n < 3 or (n - 2) % int(K):
        raise BlockMismatch(f"K={K} does not divide n-2={n - 2}", "K")
    K = int(K)
    bulk = eta_sq[..., 2:].reshape(eta_sq.shape[:-1] + (K, (n - 2) // K))
    out = np.empty(eta_sq.shape[:-1] + (K + 1,))
    out[..., 0] = eta_sq[..., 0] + eta_sq[..., 1]
    out[..., 1:] = bulk.sum(axis=-1)
    return out


# -- tilted arcsine -------------------------------------------------------------

def _theta_integral(ar, lo, hi, rel=1e-13):
    f = lambda t: 2.0 * math.exp(-ar * math.sin(t) ** 2)
    val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rel, limit=400)
    return val


@dataclass(frozen=True)
class TiltedArcsine:
    """Density exp(-a x) / (norm sqrt(x (r - x))) on (0, r)."""

    r: float
    a: float
    norm: float
    mass_low: float   # unnormalised mass on (0, r/2]
    mass_high: float  # unnormalised mass on (r/2, r)

    @property
    def tilt(self):
        return self.a * self.r

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x < self.r)
        xs = np.where(inside, x, 0.5 * self.r)
        out = np.where(inside, np.exp(-self.a * xs) / np.sqrt(xs * (self.r - xs)) / self.norm, 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        """Distribution function by composite Gauss-Legendre in theta."""
        x = np.asarray(x, dtype=float)
        theta = np.arcsin(np.sqrt(np.clip(x / self.r, 0.0, 1.0)))
        ar = self.tilt
        width = min(math.pi / 16, 0.5 / math.sqrt(ar + 1.0))
        panels = int(math.ceil((math.pi / 2) / width))
        nodes, weights = np.polynomial.legendre.leggauss(16)
        # panel-local nodes on [0, 1]
        u = ((np.arange(panels)[:, None] + 0.5 * (nodes[None, :] + 1.0)) / panels).ravel()
        w = np.tile(0.5 * weights / panels, panels)
        flat = theta.reshape(-1)
        vals = np.empty_like(flat)
        step = max(1, 2_000_000 // u.size)
        for lo in range(0, flat.size, step):
            th = flat[lo:lo + step]
            vals[lo:lo + step] = (2.0 * np.exp(-ar * np.sin(th[:, None] * u[None, :]) ** 2)) @ w * th
        out = np.clip(vals / self.norm, 0.0, 1.0).reshape(theta.shape)
        return out if out.ndim else float(out)

    def mean(self):
        f = lambda t: 2.0 * self.r * math.sin(t) ** 2 * math.exp(-self.tilt * math.sin(t) ** 2)
        val, _ = integrate.quad(f, 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-13, limit=400)
        return val / self.norm

    def bessel_norm(self):
        """Closed form pi exp(-ar/2) I0(ar/2), for cross-checking ``norm``."""
        return math.pi * float(special.i0e(0.5 * self.tilt))


def make_tilted_arcsine(r, a):
    if not (r > 0 and math.isfinite(r)):
        raise DomainError(f"range bound r must be positive, got {r}", "r")
    if not (a >= 0 and math.isfinite(a)):
        raise DomainError(f"tilt a must be >= 0, got {a}", "a")
    ar = float(a) * float(r)
    low = _theta_integral(ar, 0.0, math.pi / 4)
    high = _theta_integral(ar, math.pi / 4, math.pi / 2)
    return TiltedArcsine(float(r), float(a), low + high, low, high)


def sample_tilted_arcsine(law, rng, size=None):
    """Exact draws from a :class:`TiltedArcsine` law.

    For a*r <= 50: arcsine proposals x = r sin^2(theta), theta uniform, kept
    with probability exp(-a x). Above that the acceptance rate would decay
    like (a r)^(-1/2), so the range is split at r/2 and each half is sampled
    from its own envelope:

    * (0, r/2]: x = G/a, G ~ Gamma(1/2, 1), truncated; accept with
      sqrt(r / (2 (r - x))) >= 1/sqrt(2).
    * (r/2, r): y = r - x has envelope y^(-1/2) on (0, r/2); accept with
      sqrt(r / (2 (r - y))) exp(-a (r/2 - y)).

    The half is picked with probability proportional to its exact mass.
    """
    rng = as_generator(rng)
    count = 1 if size is None else int(size)
    if law.tilt <= LARGE_TILT:
        out = _fill(count, rng, lambda m: _propose_arcsine(law, rng, m), law)
    else:
        n_low = int(rng.binomial(count, law.mass_low / law.norm))
        low = _fill(n_low, rng, lambda m: _propose_low(law, rng, m), law)
        high = _fill(count - n_low, rng, lambda m: _propose_high(law, rng, m), law)
        out = rng.permutation(np.concatenate([low, high]))
    return float(out[0]) if size is None else out


def _fill(count, rng, propose, law):
    out = np.empty(count)
    filled = 0
    for _ in range(MAX_ROUNDS):
        need = count - filled
        if need <= 0:
            return out
        x, keep = propose(max(16, int(need * 1.5) + 8))
        got = x[keep][:need]
        out[filled:filled + got.size] = got
        filled += got.size
    if filled < count:
        raise SamplerStall(f"tilted arcsine sampler stalled (r={law.r}, a={law.a})")
    return out


def _propose_arcsine(law, rng, m):
    x = law.r * np.sin(rng.uniform(0.0, math.pi / 2, m)) ** 2
    return x, rng.uniform(size=m) < np.exp(-law.a * x)


def _propose_low(law, rng, m):
    r = law.r
    g = rng.gamma(0.5, 1.0 / law.a, size=m)
    inside = g <= 0.5 * r
    g = np.where(inside, g, 0.25 * r)
    return g, inside & (rng.uniform(size=m) < np.sqrt(r / (2.0 * (r - g))))


def _propose_high(law, rng, m):
    r = law.r
    y = 0.5 * r * rng.uniform(size=m) ** 2
    accept = np.sqrt(r / (2.0 * (r - y))) * np.exp(-law.a * (0.5 * r - y))
    return r - y, rng.uniform(size=m) < accept
