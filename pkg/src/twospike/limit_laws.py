"""Large-n law of the replica overlap in the two-spike model.

    Ov = sqrt(s1 s2) z1 + sqrt((r0 - s1)(r0 - s2)) z2

with r0 = 1 - 1/(beta J), s1, s2 i.i.d. tilted arcsine on (0, r0) with tilt
a = c beta / 2, and z1, z2 independent fair signs.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, RegimeViolation, ValidationError
from .measures import TiltedArcsine, make_tilted_arcsine, sample_tilted_arcsine
from .rng import as_generator, stream

CDF_SEED = 20_240_601
MIN_CDF_SAMPLES = 100_000
DKW_ALPHA = 0.001


@dataclass(frozen=True)
class OverlapLimitLaw:
    beta: float
    J: float
    c: float
    r0_hat: float
    a: float
    fs: TiltedArcsine


def make_limit_law(beta, J, c):
    if not J > 1:
        raise RegimeViolation(f"need J > 1, got J={J}", "J")
    if not beta * J > 1:
        raise RegimeViolation(f"need beta*J > 1, got beta*J={beta * J}", "beta")
    if not c >= 0:
        raise DomainError(f"gap scale c must be >= 0, got {c}", "c")
    r0 = 1.0 - 1.0 / (beta * J)
    a = 0.5 * c * beta
    return OverlapLimitLaw(float(beta), float(J), float(c), r0, a, make_tilted_arcsine(r0, a))


def sample_limit_overlap(law, rng, size=None):
    rng = as_generator(rng)
    m = 1 if size is None else int(size)
    s1 = sample_tilted_arcsine(law.fs, rng, m)
    s2 = sample_tilted_arcsine(law.fs, rng, m)
    z = rng.integers(0, 2, size=(2, m)) * 2 - 1
    r = law.r0_hat
    ov = np.sqrt(s1 * s2) * z[0] + np.sqrt(np.clip((r - s1) * (r - s2), 0.0, None)) * z[1]
    return float(ov[0]) if size is None else ov


def dkw_halfwidth(samples, alpha=DKW_ALPHA):
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * samples))


class AbsOverlapCDF:
    """Seeded Monte Carlo distribution function of |Ov|, reusable across queries."""

    def __init__(self, law, mc_samples=1_000_000, seed=CDF_SEED):
        if mc_samples < MIN_CDF_SAMPLES:
            raise ValidationError(f"mc_samples must be >= {MIN_CDF_SAMPLES}, got {mc_samples}", "mc_samples")
        self.law = law
        self.samples = int(mc_samples)
        self.sorted = np.sort(np.abs(sample_limit_overlap(law, stream(seed, 0, "limit"), self.samples)))
        self.halfwidth = dkw_halfwidth(self.samples)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(self.sorted, x, side="right") / self.samples
        out = np.where(x >= self.law.r0_hat, 1.0, out)
        return out if out.ndim else float(out)


def limit_cdf_abs(law, x, mc_samples=1_000_000):
    """P(|Ov| <= x) by seeded Monte Carlo; returns ``(value, dkw_halfwidth)``."""
    cdf = AbsOverlapCDF(law, mc_samples)
    return cdf(x), cdf.halfwidth


def ks_distance(empirical, law_cdf):
    """sup |F_emp - F| evaluated on both sides of each jump of F_emp."""
    x = np.sort(np.asarray(empirical, dtype=float))
    m = x.size
    if m < 100:
        raise ValidationError(f"KS distance needs at least 100 samples, got {m}", "empirical")
    f = np.asarray(law_cdf(x), dtype=float)
    upper = np.arange(1, m + 1) / m - f
    lower = f - np.arange(m) / m
    return float(max(upper.max(), lower.max()))


def uniform_cdf(x):
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
