"""Discretised free-energy optimisation on the simplex.

All values are per coordinate (the n-scaled objective divided by n), so n
never appears in this module. Slot 0 of every simplex point carries the
mass r0 on the two outlier directions, weighted by the spike eigenvalue
J + 1/J; slots 1..K carry the semicircle bins, each represented by its upper
edge.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import optimize

from .errors import DomainError, KTooSmall, RegimeViolation
from .rng import as_generator
from .spectrum import sc_quantiles

KKT_TOL = 1e-10


def _check_regime(beta, J):
    if not J > 1:
        raise RegimeViolation(f"need J > 1, got J={J}", "J")
    if not beta * J > 1:
        raise RegimeViolation(f"need beta*J > 1, got beta*J={beta * J}", "beta")


@dataclass(frozen=True)
class VariationalProblem:
    K: int
    beta: float
    J: float
    lambda_tilde: np.ndarray  # length K+1: spike slot, then bin upper edges

    @property
    def spike(self):
        return self.J + 1.0 / self.J


def make_problem(K, beta, J):
    _check_regime(beta, J)
    lt = np.concatenate([[J + 1.0 / J], sc_quantiles(K).upper_edges])
    return VariationalProblem(int(K), float(beta), float(J), lt)


@dataclass(frozen=True)
class VariationalSolution:
    r_hat: np.ndarray
    gamma: float
    f_opt: float
    kkt_residual: float
    stieltjes_err: float

    @property
    def r0_hat(self):
        return float(self.r_hat[0])


def objective_f(p, r):
    """(beta/2) sum lt_i r_i + (1/2) log K + (1/(2K)) sum_{i>=1} log r_i."""
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != p.K + 1:
        raise DomainError(f"expected {p.K + 1} coordinates, got {r.shape[-1]}", "r")
    if np.any(r[..., 1:] <= 0):
        raise DomainError("objective needs r_i > 0 for every bin", "r")
    return (0.5 * p.beta * (r @ p.lambda_tilde)
            + 0.5 * math.log(p.K)
            + np.log(r[..., 1:]).sum(axis=-1) / (2.0 * p.K))


def gradient_f(p, r):
    r = np.asarray(r, dtype=float)
    g = 0.5 * p.beta * p.lambda_tilde.copy()
    g[1:] += 1.0 / (2.0 * p.K * r[1:])
    return g


def solve_lagrange(p):
    """Stationary point of the objective on the simplex.

    Gamma = beta (J + 1/J) and r_i = 1 / (K (Gamma - beta lt_i)); r0 takes
    the remaining mass, which must be positive.
    """
    _check_regime(p.beta, p.J)
    gamma = p.beta * p.spike
    bulk = 1.0 / (p.K * (gamma - p.beta * p.lambda_tilde[1:]))
    r0 = 1.0 - bulk.sum()
    if not r0 > 0:
        raise KTooSmall(f"no interior stationary point at K={p.K}: bins already carry mass {bulk.sum():.6g} > 1", "K")
    r_hat = np.concatenate([[r0], bulk])
    grad = gradient_f(p, r_hat)
    kkt = float(max(np.max(np.abs(grad - 0.5 * gamma)), abs(r_hat.sum() - 1.0)))
    stieltjes_err = abs(float(bulk.sum()) - 1.0 / (p.beta * p.J))
    return VariationalSolution(r_hat, gamma, float(objective_f(p, r_hat)), kkt, stieltjes_err)


def free_energy_limit(beta, J):
    _check_regime(beta, J)
    return (0.5 * beta * (J + 1.0 / J) * (1.0 - 1.0 / (beta * J))
            + 0.5 * math.log(1.0 / (beta * J))
            + 1.0 / (4.0 * J * J))


def objective_gap(p, sol, r):
    """f(r) - f(r_hat) computed from the displacement (log K cancels)."""
    e = np.asarray(r, dtype=float) - sol.r_hat
    return (0.5 * p.beta * (e @ p.lambda_tilde)
            + np.log1p(e[..., 1:] / sol.r_hat[1:]).sum(axis=-1) / (2.0 * p.K))


@dataclass(frozen=True)
class GapReport:
    gamma_fit: float
    violations: int
    worst_margin: float
    per_delta: tuple  # (delta, min drop / delta^2, samples)


def _gap_directions(p, sol, rng, count):
    """Simplex targets y; points r_hat + t (y - r_hat) stay inside for t < 1."""
    k = p.K + 1
    kinds = rng.integers(0, 5, size=count)
    ys = np.empty((count, k))
    flat = rng.gamma(1.0, size=(count, k))
    sharp = rng.gamma(0.2, size=(count, k))
    for row, kind in enumerate(kinds):
        if kind == 0:
            y = flat[row]
        elif kind == 1:
            y = sharp[row]
        elif kind == 2:
            y = np.zeros(k)
            y[rng.integers(0, k)] = 1.0
        elif kind == 3:
            # r0 moves, bins keep their relative shape
            y = np.zeros(k)
            if rng.uniform() < 0.5:
                y[0] = 1.0
            else:
                y[1:] = sol.r_hat[1:]
        else:
            y = sol.r_hat * np.exp(0.5 * rng.standard_normal(k))
        ys[row] = y / y.sum()
    return ys


def gap_scan(p, sol, deltas, samples_per_delta, rng):
    """Sample simplex points at sup-distance delta from r_hat and measure the drop.

    A violation is a point with f(r) >= f(r_hat). ``gamma_fit`` is the
    largest gamma with f(r) <= f(r_hat) - gamma delta^2 on every sample.
    """
    rng = as_generator(rng)
    violations = 0
    worst = math.inf
    fit = math.inf
    per_delta = []
    for delta in deltas:
        if not delta > 0:
            raise DomainError(f"deltas must be positive, got {delta}", "deltas")
        drops = []
        while len(drops) < samples_per_delta:
            ys = _gap_directions(p, sol, rng, samples_per_delta)
            dist = np.max(np.abs(ys - sol.r_hat), axis=1)
            ok = dist > delta
            t = delta / dist[ok]
            pts = sol.r_hat + t[:, None] * (ys[ok] - sol.r_hat)
            drops.extend(-objective_gap(p, sol, pts))
        drops = np.asarray(drops[:samples_per_delta])
        violations += int(np.count_nonzero(drops <= 0.0))
        worst = min(worst, float(drops.min()))
        ratio = float(drops.min()) / delta ** 2
        fit = min(fit, ratio)
        per_delta.append((float(delta), ratio, int(drops.size)))
    return GapReport(fit, violations, worst, tuple(per_delta))


def bulk_profile(p, r0):
    """Max of the objective over the bins with r0 held fixed (finite-K profile)."""
    if not 0 < r0 < 1:
        raise DomainError(f"r0 must lie in (0, 1), got {r0}", "r0")
    lt = p.lambda_tilde[1:]
    mass = 1.0 - r0

    def excess(mu):
        return np.sum(1.0 / (p.K * (mu - p.beta * lt))) - mass

    # excess falls monotonically from +inf at the pole to -mass at infinity
    pole = p.beta * lt.max()
    lo = pole + 1e-14 * max(1.0, abs(pole))
    hi = pole + 1.0
    while excess(hi) > 0:
        hi = pole + 2.0 * (hi - pole)
    mu = optimize.brentq(excess, lo, hi, xtol=1e-15, rtol=1e-15)
    bulk = 1.0 / (p.K * (mu - p.beta * lt))
    bulk *= mass / bulk.sum()
    return float(objective_f(p, np.concatenate([[r0], bulk])))


@dataclass(frozen=True)
class TildeProfile:
    r0: np.ndarray
    value: np.ndarray
    low_temperature: np.ndarray  # True where beta (1 - r0) > 1

    @property
    def argmax(self):
        return float(self.r0[int(np.argmax(self.value))])

    @property
    def max(self):
        return float(np.max(self.value))

    def pairs(self):
        return np.column_stack([self.r0, self.value])


def profile_tilde_f(beta, J, r0_grid):
    """K -> infinity profile of the objective at fixed r0.

    High-temperature branch (beta (1 - r0) < 1):
        (beta/2)(J + 1/J) r0 + (1/2) log(1 - r0) + beta^2 (1 - r0)^2 / 4
    Low-temperature branch (beta (1 - r0) > 1), affine in r0:
        (beta/2)(J + 1/J - 2) r0 + beta - 3/4 - (1/2) log beta
    The branches meet continuously at beta (1 - r0) = 1.
    """
    if not J > 1:
        raise RegimeViolation(f"need J > 1, got J={J}", "J")
    r0 = np.asarray(r0_grid, dtype=float)
    if np.any((r0 <= 0) | (r0 >= 1)):
        raise DomainError("r0 grid must lie in (0, 1)", "r0_grid")
    z = J + 1.0 / J
    low = beta * (1.0 - r0) > 1.0
    high_val = 0.5 * beta * z * r0 + 0.5 * np.log1p(-r0) + 0.25 * (beta * (1.0 - r0)) ** 2
    low_val = 0.5 * beta * (z - 2.0) * r0 + beta - 0.75 - 0.5 * math.log(beta)
    return TildeProfile(r0, np.where(low, low_val, high_val), low)
