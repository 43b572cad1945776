"""Semicircle-law analytics and eigenvalue sequences for the interaction matrix.

Nothing here ever builds a dense matrix: every observable of the model is
basis-free, so a model is fully described by its ordered eigenvalues.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .errors import BlockMismatch, DomainError, RegimeViolation, ValidationError
from . import kernel
from .rng import as_generator

QUANTILE_TOL = 1e-12


class Mode(str, Enum):
    TWO_SPIKE = "TwoSpike"
    ONE_SPIKE = "OneSpike"
    GOE = "GOE"
    FROM_FILE = "FromFile"


@dataclass(frozen=True)
class SemicircleQuantiles:
    """Bin edges 2 = edges[0] >= ... >= edges[K] = -2, each bin of semicircle mass 1/K."""

    K: int
    edges: np.ndarray

    @property
    def upper_edges(self):
        """Bin representatives: the upper edge of each of the K bins."""
        return self.edges[:-1]

    @property
    def widths(self):
        return self.edges[:-1] - self.edges[1:]


@dataclass(frozen=True)
class Spectrum:
    n: int
    eigenvalues: np.ndarray
    mode: Mode
    J: float = float("nan")
    c: float = float("nan")
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.shape[0] != self.n:
            raise ValidationError(f"expected {self.n} eigenvalues, got shape {lam.shape}", "eigenvalues")
        if np.any(np.diff(lam) > 0):
            raise ValidationError("eigenvalues must be sorted non-increasing", "eigenvalues")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def n_outliers(self):
        """Leading eigenvalues treated as spikes by the sampler's move classes."""
        if self.mode is Mode.TWO_SPIKE:
            return 2
        if self.mode is Mode.ONE_SPIKE:
            return 1
        if self.mode is Mode.GOE:
            return 0
        return int(np.count_nonzero(self.eigenvalues > 2.0))

    def __len__(self):
        return self.n


# -- semicircle law ---------------------------------------------------------

def sc_density(x):
    """Semicircle density (1/2pi) sqrt(4 - x^2) on [-2, 2], zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi)
    return out if out.ndim else float(out)


def sc_cdf(x):
    """Semicircle distribution function, clamped to 0 / 1 outside [-2, 2]."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    out = 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def sc_quantile(levels, tol=QUANTILE_TOL):
    """Invert :func:`sc_cdf` by vectorised bisection on [-2, 2]."""
    levels = np.asarray(levels, dtype=float)
    if np.any((levels < 0) | (levels > 1)):
        raise DomainError("quantile levels must lie in [0, 1]", "levels")
    lo = np.full(levels.shape, -2.0)
    hi = np.full(levels.shape, 2.0)
    # 4 / 2**43 < 1e-12, a few extra halvings cost nothing
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = sc_cdf(mid) < levels
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo < tol):
            break
    out = 0.5 * (lo + hi)
    out = np.where(levels <= 0.0, -2.0, np.where(levels >= 1.0, 2.0, out))
    return out if out.ndim else float(out)


def sc_quantiles(K):
    if int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K}", "K")
    K = int(K)
    levels = 1.0 - np.arange(K + 1) / K
    edges = sc_quantile(levels)
    # exact symmetry; bisection noise would otherwise break it at the 1e-13 level
    edges = 0.5 * (edges - edges[::-1])
    edges[0], edges[-1] = 2.0, -2.0
    return SemicircleQuantiles(K, edges)


def stieltjes_sc(z):
    """Stieltjes transform of the semicircle law for real z > 2."""
    if not z > 2.0:
        raise DomainError(f"stieltjes_sc needs z > 2, got {z}", "z")
    # (-z + sqrt(z^2 - 4)) / 2 rewritten to avoid cancellation at large z
    return -2.0 / (z + math.sqrt((z - 2.0) * (z + 2.0)))


# -- spectra ----------------------------------------------------------------

def _bulk_midpoints(m):
    # descending midpoint quantiles at levels (m - k + 1/2) / m, k = 1..m
    levels = (m - np.arange(1, m + 1) + 0.5) / m
    return sc_quantile(levels)


def build_two_spike_spectrum(n, J, c):
    """Top pair J + 1/J and J + 1/J - c/n over a deterministic semicircle bulk."""
    if int(n) != n or n < 4:
        raise DomainError(f"n must be an integer >= 4, got {n}", "n")
    if not J > 1:
        raise RegimeViolation(f"spike strength J must exceed 1, got {J}", "J")
    if not c >= 0:
        raise DomainError(f"gap scale c must be >= 0, got {c}", "c")
    n = int(n)
    top = J + 1.0 / J
    lam = np.empty(n)
    lam[0] = top
    lam[1] = top - c / n
    lam[2:] = _bulk_midpoints(n - 2)
    return Spectrum(n, lam, Mode.TWO_SPIKE, float(J), float(c))


def build_one_spike_spectrum(n, J):
    if int(n) != n or n < 3:
        raise DomainError(f"n must be an integer >= 3, got {n}", "n")
    if not J > 1:
        raise RegimeViolation(f"spike strength J must exceed 1, got {J}", "J")
    n = int(n)
    lam = np.empty(n)
    lam[0] = J + 1.0 / J
    lam[1:] = _bulk_midpoints(n - 1)
    return Spectrum(n, lam, Mode.ONE_SPIKE, float(J), float("nan"))


def tridiagonal_goe(n, rng):
    """Diagonal and off-diagonal of the beta = 1 tridiagonal model, scaled by 1/sqrt(n).

    Householder reduction of the GOE (off-diagonal variance 1, diagonal
    variance 2) leaves N(0, 2) on the diagonal and chi_{n-k} below it.
    """
    diag = rng.normal(0.0, math.sqrt(2.0), size=n)
    off = np.sqrt(rng.chisquare(np.arange(n - 1, 0, -1))) if n > 1 else np.empty(0)
    scale = 1.0 / math.sqrt(n)
    return diag * scale, off * scale


def tridiagonal_eigenvalues(diag, off, tol=1e-12, backend=None):
    """All eigenvalues of a symmetric tridiagonal matrix by Sturm-sequence bisection."""
    diag = np.ascontiguousarray(diag, dtype=float)
    off = np.ascontiguousarray(off, dtype=float)
    n = diag.shape[0]
    offsq = np.ascontiguousarray(off * off)
    # Gershgorin interval
    radius = np.zeros(n)
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    lo = np.full(n, float(np.min(diag - radius)))
    hi = np.full(n, float(np.max(diag + radius)))
    k = np.arange(n)  # k-th smallest eigenvalue: count(< x) <= k  <=>  x <= lambda_k
    counts = np.empty(n, dtype=np.int64)
    sturm = kernel.get_backend(backend).sturm_counts
    span = max(hi[0] - lo[0], 1.0)
    iters = int(math.ceil(math.log2(span / tol))) + 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        sturm(diag, offsq, np.ascontiguousarray(mid), counts)
        right = counts <= k
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    return np.sort(0.5 * (lo + hi))[::-1]


def sample_goe_spectrum(n, seed, backend=None):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}", "n")
    rng = as_generator(seed) if isinstance(seed, np.random.Generator) else as_generator(int(seed))
    diag, off = tridiagonal_goe(int(n), rng)
    lam = tridiagonal_eigenvalues(diag, off, backend=backend)
    return Spectrum(int(n), lam, Mode.GOE)


def check_rigidity(s, K, eps):
    """Worst |lambda_j - upper edge of bin i| over bulk blocks; pass iff <= eps.

    Bulk indices 3..n are split into K consecutive equal blocks; block i is
    compared against the upper edge of semicircle bin i.
    """
    n_bulk = s.n - 2
    if int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K}", "K")
    if n_bulk <= 0 or n_bulk % K:
        raise BlockMismatch(f"K={K} does not divide n-2={n_bulk}", "K")
    q = sc_quantiles(int(K))
    rep = np.repeat(q.upper_edges, n_bulk // int(K))
    worst = float(np.max(np.abs(s.eigenvalues[2:] - rep)))
    return {"pass": bool(worst <= eps), "worst_deviation": worst}


# -- file format --------------------------------------------------------------

def write_spectrum(s, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={s.n} mode={s.mode.value} J={s.J!r} c={s.c!r}\n")
        for v in s.eigenvalues:
            fh.write(f"{v:.17g}\n")


def read_spectrum(path):
    """Read the text spectrum format; files without a header load as FromFile."""
    header = {}
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        header[key] = val
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: not a number: {line!r}", "spectrum_file") from None
    lam = np.asarray(values, dtype=float)
    if "n" in header and int(header["n"]) != lam.size:
        raise ValidationError(f"header says n={header['n']} but file holds {lam.size} values", "spectrum_file")
    if np.any(np.diff(lam) > 0):
        lam = np.sort(lam)[::-1]
    mode = header.get("mode", Mode.FROM_FILE.value)
    J = float(header.get("J", "nan"))
    c = float(header.get("c", "nan"))
    return Spectrum(lam.size, lam, Mode(mode), J, c)
