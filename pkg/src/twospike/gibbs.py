"""Gibbs-measure sampling in the eigenbasis.

In the eigenbasis the Gibbs weight is exp((n beta / 2) sum_i lam_i eta_i^2)
times the uniform measure on the sphere, and every observable used here
(energy, overlap, coordinate masses) is rotation invariant, so the sampler
works directly on eta.

Moves are Givens rotations of a coordinate pair by an angle
phi ~ N(0, sigma^2), accepted with min(1, exp(beta * dH)). Rotations preserve
the norm and the uniform measure, and the pair choice does not depend on the
state, so any fixed pair-selection law keeps detailed balance. The chain
therefore picks pairs by class:

* ``TT``: both coordinates among the outliers (the near-degenerate top pair),
* ``TB``: one outlier, one bulk coordinate,
* ``BB``: two bulk coordinates,

with fixed class weights and a separate step size per class. The outliers
carry O(1) mass while bulk coordinates carry O(1/n), so a single step size
cannot serve both kinds of pair, and uniform pair selection would touch the
top pair only O(1/n^2) of the time.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import DimensionMismatch, DomainError, EmptySelection, ValidationError
from . import kernel
from .measures import block_coarsen, sample_uniform_sphere
from .rng import kernel_state, stream

CLASS_WEIGHTS = (0.05, 0.15, 0.80)
CLASS_NAMES = ("TT", "TB", "BB")
TARGET_ACCEPT = 0.4
SIGMA_BOUNDS = (1e-7, math.pi)
MIN_BATCHES = 20


@dataclass(frozen=True)
class ChainConfig:
    beta: float
    sweeps: int
    burnin: int
    thin: int = 1
    step_sigma: float = 1.0
    seed: int = 0
    chain_id: int = 0
    backend: str = None

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValidationError(f"beta must be >= 0, got {self.beta}", "beta")
        if int(self.sweeps) != self.sweeps or self.sweeps < 1:
            raise ValidationError(f"sweeps must be a positive integer, got {self.sweeps}", "sweeps")
        if int(self.burnin) != self.burnin or not 0 <= self.burnin < self.sweeps:
            raise ValidationError(f"need 0 <= burnin < sweeps, got burnin={self.burnin}", "burnin")
        if int(self.thin) != self.thin or self.thin < 1:
            raise ValidationError(f"thin must be >= 1, got {self.thin}", "thin")
        if not self.step_sigma > 0:
            raise ValidationError(f"step_sigma must be positive, got {self.step_sigma}", "step_sigma")

    @property
    def production(self):
        return self.sweeps - self.burnin


def energy(s, eta):
    """H_n = (n/2) sum lam_i eta_i^2 (last axis)."""
    eta = np.asarray(eta, dtype=float)
    if eta.shape[-1] != s.n:
        raise DimensionMismatch(f"state has dimension {eta.shape[-1]}, spectrum has {s.n}", "eta")
    return 0.5 * s.n * ((eta * eta) @ s.eigenvalues)


def mcmc_step(state, s, cfg, rng, pair=None):
    """One Givens-rotation Metropolis update with a uniformly chosen pair.

    Reference single step; :class:`Chain` runs the same move in the compiled
    kernel with class-weighted pair selection.
    """
    eta = np.array(state, dtype=float)
    n = eta.shape[0]
    if n != s.n:
        raise DimensionMismatch(f"state has dimension {n}, spectrum has {s.n}", "state")
    if pair is None:
        i, j = rng.choice(n, size=2, replace=False)
    else:
        i, j = pair
    phi = cfg.step_sigma * rng.standard_normal()
    c, sn = math.cos(phi), math.sin(phi)
    ni = c * eta[i] - sn * eta[j]
    nj = sn * eta[i] + c * eta[j]
    lam = s.eigenvalues
    dh = 0.5 * n * (lam[i] * (ni * ni - eta[i] ** 2) + lam[j] * (nj * nj - eta[j] ** 2))
    x = cfg.beta * dh
    if x >= 0 or rng.uniform() < math.exp(x):
        eta[i], eta[j] = ni, nj
    return eta


def emit_sample(state, rng):
    """Re-randomise every sign; the Gibbs law only sees squared coordinates."""
    state = np.asarray(state, dtype=float)
    signs = rng.integers(0, 2, size=state.shape) * 2 - 1
    return state * signs


def move_classes(s):
    """Class-selection CDF and the number of leading (outlier) coordinates."""
    top = s.n_outliers
    bulk = s.n - top
    avail = (top >= 2, top >= 1 and bulk >= 1, bulk >= 2)
    w = np.array([wt if ok else 0.0 for wt, ok in zip(CLASS_WEIGHTS, avail)])
    if w.sum() == 0:
        raise DomainError("need at least two coordinates to move", "n")
    cdf = np.cumsum(w / w.sum())
    # exact 1.0 from the last available class on, so rounding never selects
    # an empty class
    last = max(k for k in range(3) if avail[k])
    cdf[last:] = 1.0
    return cdf, top


class Chain:
    """A single Metropolis chain with its own random stream."""

    def __init__(self, s, cfg, eta0=None):
        self.spectrum = s
        self.cfg = cfg
        self.lam = np.ascontiguousarray(s.eigenvalues, dtype=float)
        self.n = s.n
        self.props_per_sweep = max(1, s.n // 2)
        self.class_cdf, self.n_top = move_classes(s)
        if eta0 is None:
            eta0 = sample_uniform_sphere(s.n, stream(cfg.seed, cfg.chain_id, "init"))
        self.eta = np.array(eta0, dtype=float)
        if self.eta.shape != (s.n,):
            raise DimensionMismatch(f"initial state has shape {self.eta.shape}", "eta0")
        self.eta /= np.linalg.norm(self.eta)
        bulk_scale = cfg.step_sigma
        self.sigma = np.array([bulk_scale, min(bulk_scale, 2.0 / math.sqrt(s.n)), bulk_scale])
        self.rng_state = kernel_state(cfg.seed, cfg.chain_id, "chain")
        self.spare = np.zeros(2)
        self.counter = np.zeros(1, dtype=np.int64)
        self.esum = np.array([float(self.eta ** 2 @ self.lam)])
        self.accepts = np.zeros(3, dtype=np.int64)
        self.proposals = np.zeros(3, dtype=np.int64)
        self._kernel = kernel.get_backend(cfg.backend)

    def advance(self, sweeps, beta=None):
        """Run ``sweeps`` sweeps; returns H/n after each sweep."""
        out = np.empty(sweeps)
        if sweeps:
            self._kernel.run_sweeps(
                self.eta, self.lam, float(self.cfg.beta if beta is None else beta),
                self.sigma, self.class_cdf, self.n_top, self.props_per_sweep, sweeps,
                self.rng_state, self.spare, out, self.accepts, self.proposals,
                self.counter, self.esum)
        return out

    def adapt(self, sweeps):
        """Burn-in with Robbins-Monro tuning of log sigma per class toward 40% acceptance."""
        if sweeps <= 0:
            return
        blocks = min(sweeps, 200)
        base, extra = divmod(sweeps, blocks)
        for b in range(blocks):
            acc0, prop0 = self.accepts.copy(), self.proposals.copy()
            self.advance(base + (1 if b < extra else 0))
            dp = self.proposals - prop0
            rate = np.where(dp > 0, (self.accepts - acc0) / np.maximum(dp, 1), TARGET_ACCEPT)
            gain = 1.0 / (1.0 + b) ** 0.6
            self.sigma = np.clip(self.sigma * np.exp(2.0 * gain * (rate - TARGET_ACCEPT)), *SIGMA_BOUNDS)
        self.accepts[:] = 0
        self.proposals[:] = 0

    @property
    def acceptance(self):
        return {name: (float(a / p) if p else float("nan"))
                for name, a, p in zip(CLASS_NAMES, self.accepts, self.proposals)}

    @property
    def norm_error(self):
        return abs(float(np.linalg.norm(self.eta)) - 1.0)


@dataclass
class ChainRun:
    states: np.ndarray      # (snapshots, n), thinned production states
    energies: np.ndarray    # H/n at each snapshot
    trace: np.ndarray       # H/n after every production sweep
    sigma: np.ndarray
    acceptance: dict = field(default_factory=dict)

    @property
    def r0(self):
        return self.states[:, 0] ** 2 + self.states[:, 1] ** 2

    def simplex(self, K):
        return block_coarsen(self.states ** 2, K)


def run_chain(s, cfg, eta0=None):
    """Burn in (adapting step sizes), then record every ``thin``-th sweep."""
    chain = Chain(s, cfg, eta0)
    chain.adapt(cfg.burnin)
    snaps = cfg.production // cfg.thin
    states = np.empty((snaps, s.n))
    energies = np.empty(snaps)
    trace = np.empty(snaps * cfg.thin)
    for k in range(snaps):
        seg = chain.advance(cfg.thin)
        trace[k * cfg.thin:(k + 1) * cfg.thin] = seg
        states[k] = chain.eta
        energies[k] = seg[-1]
    return ChainRun(states, energies, trace, chain.sigma.copy(), chain.acceptance)


# -- overlaps ---------------------------------------------------------------

@dataclass(frozen=True)
class OverlapSample:
    ov: float
    r0_pair: tuple
    eta2_sq_pair: tuple


@dataclass
class OverlapSamples:
    """Column store of overlap samples; indexing yields :class:`OverlapSample`."""

    ov: np.ndarray
    r0_1: np.ndarray
    r0_2: np.ndarray
    eta2sq_1: np.ndarray
    eta2sq_2: np.ndarray
    acceptance: list = field(default_factory=list)

    def __len__(self):
        return self.ov.shape[0]

    def __getitem__(self, k):
        return OverlapSample(float(self.ov[k]), (float(self.r0_1[k]), float(self.r0_2[k])),
                             (float(self.eta2sq_1[k]), float(self.eta2sq_2[k])))

    @property
    def abs_ov(self):
        return np.abs(self.ov)

    @classmethod
    def concat(cls, parts):
        cols = ("ov", "r0_1", "r0_2", "eta2sq_1", "eta2sq_2")
        return cls(*(np.concatenate([getattr(p, c) for p in parts]) for c in cols),
                   acceptance=[a for p in parts for a in p.acceptance])


def overlap(eta_a, eta_b):
    return float(np.dot(eta_a, eta_b))


def _pair_run(s, cfg, pairs, chain_a, chain_b):
    ca = Chain(s, replace(cfg, chain_id=chain_a))
    cb = Chain(s, replace(cfg, chain_id=chain_b))
    ca.adapt(cfg.burnin)
    cb.adapt(cfg.burnin)
    emit_a = stream(cfg.seed, chain_a, "emit")
    emit_b = stream(cfg.seed, chain_b, "emit")
    cols = np.empty((5, pairs))
    for k in range(pairs):
        ca.advance(cfg.thin)
        cb.advance(cfg.thin)
        a = emit_sample(ca.eta, emit_a)
        b = emit_sample(cb.eta, emit_b)
        cols[:, k] = (a @ b, a[0] ** 2 + a[1] ** 2, b[0] ** 2 + b[1] ** 2, a[1] ** 2, b[1] ** 2)
    return OverlapSamples(*cols, acceptance=[ca.acceptance, cb.acceptance])


def sample_overlaps(s, cfg, pairs, chains=1, threads=1):
    """Overlaps of independent replica pairs.

    ``chains`` independent pairs of chains share the work; replica ``a`` of
    pair ``k`` uses chain id ``cfg.chain_id + 2k`` and replica ``b`` the next
    id. Each chain burns in for ``cfg.burnin`` sweeps and then emits one
    sign-randomised snapshot every ``cfg.thin`` sweeps (``cfg.sweeps`` is
    ignored beyond validating ``burnin``).
    """
    if int(pairs) != pairs or pairs < 1:
        raise ValidationError(f"pairs must be a positive integer, got {pairs}", "pairs")
    chains = max(1, min(int(chains), int(pairs)))
    sizes = [pairs // chains + (1 if k < pairs % chains else 0) for k in range(chains)]
    jobs = [(s, cfg, m, cfg.chain_id + 2 * k, cfg.chain_id + 2 * k + 1) for k, m in enumerate(sizes)]
    if threads > 1 and chains > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _pair_run(*job), jobs))
    else:
        parts = [_pair_run(*job) for job in jobs]
    return OverlapSamples.concat(parts)


def conditional_eta2_samples(samples, r0_window, r0_hat):
    """Second-outlier masses from snapshots with |r0 - r0_hat| <= window.

    Both replicas of every pair are pooled. Returns ``(eta2_sq, r0)`` so each
    value can be compared with the tilted arcsine on (0, r0) of its own
    snapshot.
    """
    if not r0_window > 0:
        raise ValidationError(f"window must be positive, got {r0_window}", "r0_window")
    r0 = np.concatenate([samples.r0_1, samples.r0_2])
    e2 = np.concatenate([samples.eta2sq_1, samples.eta2sq_2])
    keep = np.abs(r0 - r0_hat) <= r0_window
    if not keep.any():
        raise EmptySelection(f"no snapshot has |r0 - {r0_hat:g}| <= {r0_window:g}")
    return e2[keep], r0[keep]


# -- energies and free energy --------------------------------------------------

def batch_means(x, batches=MIN_BATCHES):
    x = np.asarray(x, dtype=float)
    if x.size < batches:
        raise ValidationError(f"need at least {batches} samples for batch means, got {x.size}", "sweeps")
    size = x.size // batches
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(batches))


def estimate_mean_energy(s, beta, cfg):
    """Batch-means estimate of <H_n>/n at inverse temperature ``beta``.

    Returns ``(mean, stderr)``. At beta = 0 the uniform-measure value
    sum(lam) / (2n) is exact and returned with zero error.
    """
    if not beta >= 0:
        raise ValidationError(f"beta must be >= 0, got {beta}", "beta")
    if beta == 0:
        return float(np.sum(s.eigenvalues) / (2.0 * s.n)), 0.0
    chain = Chain(s, replace(cfg, beta=float(beta)))
    chain.adapt(cfg.burnin)
    trace = chain.advance(cfg.production)
    return batch_means(trace)


@dataclass(frozen=True)
class TIResult:
    value: float
    stderr: float
    betas: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray

    def __float__(self):
        return self.value


def trapezoid_weights(betas):
    h = np.diff(betas)
    w = np.zeros_like(betas)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def free_energy_ti(s, beta, grid_points, cfg, threads=1):
    """log Z_n / n by thermodynamic integration of <H_n/n> over [0, beta].

    Uniform grid, trapezoid rule; grid point k runs its own chain with
    chain id ``cfg.chain_id + k``.
    """
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}", "beta")
    if int(grid_points) != grid_points or grid_points < 8:
        raise ValidationError(f"grid_points must be >= 8, got {grid_points}", "grid_points")
    betas = np.linspace(0.0, beta, int(grid_points))

    def point(k):
        return estimate_mean_energy(s, betas[k], replace(cfg, chain_id=cfg.chain_id + k))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, range(len(betas))))
    else:
        results = [point(k) for k in range(len(betas))]
    means = np.array([m for m, _ in results])
    errs = np.array([e for _, e in results])
    w = trapezoid_weights(betas)
    return TIResult(float(w @ means), float(math.sqrt(np.sum((w * errs) ** 2))), betas, means, errs)


# -- replica-structure heuristic ---------------------------------------------------

@dataclass(frozen=True)
class OverlapClass:
    kind: str              # "RS", "kRSB" or "FullRSB"
    k: int                 # number of breaking steps for kRSB, else 0
    std: float
    modes: tuple
    cluster_stds: tuple
    bandwidth: float

    def __str__(self):
        return f"kRSB({self.k})" if self.kind == "kRSB" else self.kind


def classify_overlap(abs_ov, threshold=0.05, min_samples=1000):
    """Heuristic replica-structure label for samples of |overlap|.

    RS when the sample standard deviation is below ``threshold``; kRSB(k)
    when a Gaussian KDE shows k+1 separated modes whose clusters each have
    standard deviation below ``threshold``; FullRSB otherwise.
    """
    x = np.asarray(abs_ov, dtype=float)
    if x.size < min_samples:
        raise ValidationError(f"need at least {min_samples} samples, got {x.size}", "abs_ov")
    std = float(x.std(ddof=1))
    iqr = float(np.subtract(*np.percentile(x, [75, 25])))
    spread = min(std, iqr / 1.349) if iqr > 0 else std
    bw = 0.9 * spread * x.size ** -0.2 if spread > 0 else 1e-12
    lo, hi = x.min() - 3 * bw, x.max() + 3 * bw
    grid = np.linspace(lo, hi, 1024)
    dens = np.zeros_like(grid)
    for start in range(0, x.size, 4096):
        chunk = x[start:start + 4096]
        dens += np.exp(-0.5 * ((grid[:, None] - chunk[None, :]) / bw) ** 2).sum(axis=1)
    peaks = [k for k in range(1, grid.size - 1)
             if dens[k] >= dens[k - 1] and dens[k] > dens[k + 1] and dens[k] >= 0.05 * dens.max()]
    # cut between neighbouring peaks at the valley floor; merge shallow valleys
    cuts, kept = [], [peaks[0]] if peaks else []
    for pk in peaks[1:]:
        a = kept[-1]
        valley = a + int(np.argmin(dens[a:pk + 1]))
        if dens[valley] < 0.5 * min(dens[a], dens[pk]):
            cuts.append(grid[valley])
            kept.append(pk)
        elif dens[pk] > dens[a]:
            kept[-1] = pk
    labels = np.searchsorted(np.asarray(cuts), x)
    cluster_stds = tuple(float(x[labels == c].std()) for c in range(len(kept)))
    modes = tuple(float(grid[k]) for k in kept)
    if std < threshold:
        return OverlapClass("RS", 0, std, modes, cluster_stds, bw)
    if len(kept) >= 2 and all(cs < threshold for cs in cluster_stds):
        return OverlapClass("kRSB", len(kept) - 1, std, modes, cluster_stds, bw)
    return OverlapClass("FullRSB", 0, std, modes, cluster_stds, bw)
