"""Command-line experiment driver.

    twospike <group> <action> --config run.json [--out DIR] [--strict] [--threads T]

Every numeric parameter comes from the JSON config; see docs/config.md for the
schema and one example per subcommand. Each run writes its CSV files and a
``run.json`` manifest into the output directory. Exit status is 0 on
success, 2 for invalid input and 3 for numerical failures.
"""

import argparse
import csv
import json
import math
import os
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__, gibbs, kernel, limit_laws, oracle, spectrum, variational
from .errors import HighVariance, NumericalError, TwoSpikeError, ValidationError
from .rng import stream

COMMANDS = {
    "spectrum": ("build",),
    "variational": ("solve", "gap", "profile"),
    "mcmc": ("sample",),
    "free-energy": ("ti",),
    "overlap": ("compare",),
    "limit": ("sample", "density"),
    "oracle": ("zn", "marginal"),
}

_MISSING = object()


class Config:
    """Read-only view of the JSON config with field-path validation."""

    def __init__(self, data):
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object", "config")
        self.data = data

    def raw(self, path, default=_MISSING):
        node = self.data
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is _MISSING:
                    raise ValidationError(f"missing required field {path}", path)
                return default
            node = node[part]
        return node

    def number(self, path, default=_MISSING, low=None, high=None, strict_low=False):
        value = self.raw(path, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValidationError(f"{path} must be a finite number, got {value!r}", path)
        if low is not None and (value <= low if strict_low else value < low):
            raise ValidationError(f"{path} must be {'>' if strict_low else '>='} {low}, got {value}", path)
        if high is not None and value > high:
            raise ValidationError(f"{path} must be <= {high}, got {value}", path)
        return float(value)

    def integer(self, path, default=_MISSING, low=None):
        value = self.raw(path, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ValidationError(f"{path} must be an integer, got {value!r}", path)
        if low is not None and value < low:
            raise ValidationError(f"{path} must be >= {low}, got {value}", path)
        return int(value)

    def integers(self, path, low=None):
        value = self.raw(path)
        items = value if isinstance(value, list) else [value]
        if not items:
            raise ValidationError(f"{path} must not be empty", path)
        return [_as_int(path, v, low) for v in items]


def _as_int(path, v, low):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v):
        raise ValidationError(f"{path} entries must be integers, got {v!r}", path)
    if low is not None and v < low:
        raise ValidationError(f"{path} entries must be >= {low}, got {v}", path)
    return int(v)


def _relabel(exc, path):
    """Re-raise a library validation error under the config path it came from."""
    if isinstance(exc, ValidationError) and exc.field and "." not in exc.field:
        exc.field = f"{path}.{exc.field}"
    return exc


# -- builders ------------------------------------------------------------------

def build_spectrum(cfg, n=None):
    mode = cfg.raw("model.mode", "TwoSpike")
    try:
        mode = spectrum.Mode(mode)
    except ValueError:
        raise ValidationError(f"model.mode must be one of {[m.value for m in spectrum.Mode]}, got {mode!r}",
                              "model.mode") from None
    if mode is spectrum.Mode.FROM_FILE:
        return spectrum.read_spectrum(cfg.raw("model.spectrum_file"))
    n = cfg.integer("model.n", low=3) if n is None else n
    try:
        if mode is spectrum.Mode.TWO_SPIKE:
            J = cfg.number("model.J", low=1, strict_low=True)
            c = cfg.number("model.c", low=0)
            return spectrum.build_two_spike_spectrum(n, J, c)
        if mode is spectrum.Mode.ONE_SPIKE:
            return spectrum.build_one_spike_spectrum(n, cfg.number("model.J", low=1, strict_low=True))
        return spectrum.sample_goe_spectrum(n, stream(cfg.integer("mcmc.seed", 0), 0, "goe"))
    except ValidationError as exc:
        raise _relabel(exc, "model")


def chain_config(cfg, beta=None, **overrides):
    sweeps = cfg.integer("mcmc.sweeps", low=1)
    burnin = cfg.integer("mcmc.burnin", low=0)
    if burnin >= sweeps:
        raise ValidationError(f"mcmc.burnin ({burnin}) must be < mcmc.sweeps ({sweeps})", "mcmc.burnin")
    values = dict(
        beta=cfg.number("model.beta", low=0) if beta is None else beta,
        sweeps=sweeps,
        burnin=burnin,
        thin=cfg.integer("mcmc.thin", 1, low=1),
        step_sigma=cfg.number("mcmc.step_sigma", 1.0, low=0, strict_low=True),
        seed=cfg.integer("mcmc.seed", 0, low=0),
    )
    values.update(overrides)
    try:
        return gibbs.ChainConfig(**values)
    except ValidationError as exc:
        raise _relabel(exc, "mcmc")


def _regime(cfg):
    J = cfg.number("model.J", low=1, strict_low=True)
    beta = cfg.number("model.beta", low=0, strict_low=True)
    if beta * J <= 1:
        raise ValidationError(f"model.beta * model.J must exceed 1, got {beta * J}", "model.beta")
    return beta, J


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Run:
    """Output directory, artifact list and manifest for one invocation."""

    def __init__(self, out_dir, command, cfg, args):
        self.out = out_dir
        self.command = command
        self.cfg = cfg
        self.args = args
        self.files = []
        self.results = {}
        self.warnings = []
        os.makedirs(out_dir, exist_ok=True)

    def csv(self, name, header, rows):
        path = os.path.join(self.out, name)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(name)
        return path

    def warn(self, code, message):
        self.warnings.append({"code": code, "message": message})
        if self.args.strict and code == HighVariance.code:
            raise HighVariance(message)
        print(f"warning [{code}] {message}", file=sys.stderr)

    def manifest(self, wall, status):
        doc = {
            "command": self.command,
            "status": status,
            "config": self.cfg.data,
            "seed": self.cfg.raw("mcmc.seed", 0),
            "strict": bool(self.args.strict),
            "threads": int(self.args.threads),
            "versions": {
                "twospike": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "kernel_backend": kernel.BACKEND,
            },
            "wall_time_s": wall,
            "outputs": self.files,
            "results": self.results,
            "warnings": self.warnings,
        }
        with open(os.path.join(self.out, "run.json"), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, default=_fmt)
            fh.write("\n")


# -- subcommands ---------------------------------------------------------------

def cmd_spectrum_build(cfg, run):
    s = build_spectrum(cfg)
    K = cfg.raw("discretization.K", None)
    eps = None
    if K is not None:
        K = cfg.integer("discretization.K", low=1)
        eps = cfg.number("discretization.epsilon", low=0, strict_low=True)
        if (s.n - 2) % K:
            raise ValidationError(f"discretization.K={K} must divide model.n - 2 = {s.n - 2}", "discretization.K")
    path = os.path.join(run.out, "spectrum.txt")
    spectrum.write_spectrum(s, path)
    run.files.append("spectrum.txt")
    run.results.update(n=s.n, mode=s.mode.value, top=float(s.eigenvalues[0]))
    if K is not None:
        rig = spectrum.check_rigidity(s, K, eps)
        run.csv("rigidity.csv", ["K", "epsilon", "worst_deviation", "pass"],
                [(K, eps, rig["worst_deviation"], rig["pass"])])
        run.results["rigidity"] = rig


def _k_list(cfg):
    return cfg.integers("discretization.K", low=1)


def cmd_variational_solve(cfg, run):
    beta, J = _regime(cfg)
    ks = _k_list(cfg)
    limit = variational.free_energy_limit(beta, J)
    rows = []
    for K in ks:
        sol = variational.solve_lagrange(variational.make_problem(K, beta, J))
        rows.append((K, beta, J, sol.r0_hat, sol.f_opt, limit, abs(sol.f_opt - limit), sol.stieltjes_err))
    run.csv("variational.csv", ["K", "beta", "J", "r0_hat", "f_opt", "limit", "abs_gap", "stieltjes_err"], rows)
    run.results["abs_gap"] = {str(r[0]): r[6] for r in rows}


def cmd_variational_gap(cfg, run):
    beta, J = _regime(cfg)
    K = cfg.integer("discretization.K", low=1)
    deltas = cfg.raw("gap.deltas", [0.002, 0.005, 0.01])
    if not isinstance(deltas, list) or not deltas:
        raise ValidationError("gap.deltas must be a non-empty list", "gap.deltas")
    deltas = [Config({"d": d}).number("d", low=0, strict_low=True) for d in deltas]
    per = cfg.integer("gap.samples_per_delta", 1000, low=1)
    p = variational.make_problem(K, beta, J)
    sol = variational.solve_lagrange(p)
    rep = variational.gap_scan(p, sol, deltas, per, stream(cfg.integer("mcmc.seed", 0, low=0), 0, "gap"))
    run.csv("gap.csv", ["delta", "min_drop_over_delta_sq", "samples"], rep.per_delta)
    run.csv("gap_summary.csv", ["K", "gamma_fit", "violations", "worst_margin"],
            [(K, rep.gamma_fit, rep.violations, rep.worst_margin)])
    run.results.update(gamma_fit=rep.gamma_fit, violations=rep.violations)


def cmd_variational_profile(cfg, run):
    J = cfg.number("model.J", low=1, strict_low=True)
    beta = cfg.number("model.beta", low=0, strict_low=True)
    lo = cfg.number("profile.r0_min", 0.01, low=0, strict_low=True)
    hi = cfg.number("profile.r0_max", 0.99, high=1)
    pts = cfg.integer("profile.points", 99, low=2)
    if not lo < hi < 1:
        raise ValidationError("need profile.r0_min < profile.r0_max < 1", "profile.r0_max")
    prof = variational.profile_tilde_f(beta, J, np.linspace(lo, hi, pts))
    run.csv("profile.csv", ["r0", "tilde_f", "low_temperature"],
            zip(prof.r0, prof.value, prof.low_temperature))
    run.results.update(argmax=prof.argmax, max=prof.max)


def _overlap_rows(ov):
    return ((k, ov.ov[k], ov.r0_1[k], ov.r0_2[k], ov.eta2sq_1[k], ov.eta2sq_2[k]) for k in range(len(ov)))


OVERLAP_HEADER = ["pair_id", "ov", "r0_1", "r0_2", "eta2sq_1", "eta2sq_2"]


def cmd_mcmc_sample(cfg, run):
    s = build_spectrum(cfg)
    ccfg = chain_config(cfg)
    pairs = cfg.integer("mcmc.pairs", low=1)
    chains = cfg.integer("mcmc.chains", 1, low=1)
    ov = gibbs.sample_overlaps(s, ccfg, pairs, chains=chains, threads=run.args.threads)
    run.csv("overlaps.csv", OVERLAP_HEADER, _overlap_rows(ov))
    if len(ov) >= 1000:
        cls = gibbs.classify_overlap(ov.abs_ov)
        run.results["classification"] = {"label": str(cls), "std": cls.std, "modes": list(cls.modes),
                                         "bandwidth": cls.bandwidth}
    run.results["acceptance"] = ov.acceptance


def cmd_free_energy_ti(cfg, run):
    s = build_spectrum(cfg)
    beta = cfg.number("model.beta", low=0, strict_low=True)
    ccfg = chain_config(cfg, beta=beta)
    points = cfg.integer("ti.grid_points", 16, low=8)
    res = gibbs.free_energy_ti(s, beta, points, ccfg, threads=run.args.threads)
    run.csv("energies.csv", ["beta", "mean_energy", "stderr"], zip(res.betas, res.means, res.stderrs))
    row = [s.n, beta, res.value, res.stderr]
    header = ["n", "beta", "log_z_over_n", "stderr"]
    if s.mode is spectrum.Mode.TWO_SPIKE and beta * s.J > 1:
        lim = variational.free_energy_limit(beta, s.J)
        row += [lim, abs(res.value - lim)]
        header += ["limit", "abs_gap"]
    run.csv("free_energy.csv", header, [row])
    run.results.update(log_z_over_n=res.value, stderr=res.stderr)


def cmd_overlap_compare(cfg, run):
    beta, J = _regime(cfg)
    c = cfg.number("model.c", low=0)
    ns = cfg.integers("model.n", low=4)
    ccfg = chain_config(cfg, beta=beta)
    pairs = cfg.integer("mcmc.pairs", low=100)
    chains = cfg.integer("mcmc.chains", 1, low=1)
    tol = cfg.number("overlap.ks_tolerance", 0.08, low=0, strict_low=True)
    mc = cfg.integer("limit.mc_samples", 1_000_000, low=limit_laws.MIN_CDF_SAMPLES)
    spectra = [build_spectrum(cfg, n) for n in ns]
    law = limit_laws.make_limit_law(beta, J, c)
    cdf = limit_laws.AbsOverlapCDF(law, mc)
    rows = []
    for n, s in zip(ns, spectra):
        ov = gibbs.sample_overlaps(s, ccfg, pairs, chains=chains, threads=run.args.threads)
        run.csv(f"overlaps_n{n}.csv", OVERLAP_HEADER, _overlap_rows(ov))
        rows.append((n, pairs, limit_laws.ks_distance(ov.abs_ov, cdf), tol))
    run.csv("overlap_compare.csv", ["n", "pairs", "ks", "ks_tolerance"], rows)
    run.results.update(ks={str(r[0]): r[2] for r in rows}, dkw_halfwidth=cdf.halfwidth)


def _limit_law(cfg):
    beta, J = _regime(cfg)
    return limit_laws.make_limit_law(beta, J, cfg.number("model.c", low=0))


def cmd_limit_sample(cfg, run):
    law = _limit_law(cfg)
    m = cfg.integer("limit.samples", low=1)
    ov = limit_laws.sample_limit_overlap(law, stream(cfg.integer("mcmc.seed", 0, low=0), 0, "limit"), m)
    run.csv("limit_samples.csv", ["ov"], ((v,) for v in ov))
    run.results.update(r0_hat=law.r0_hat, a=law.a)


def cmd_limit_density(cfg, run):
    law = _limit_law(cfg)
    pts = cfg.integer("limit.points", 200, low=2)
    x = (np.arange(pts) + 0.5) / pts * law.r0_hat
    run.csv("limit_density.csv", ["x", "fs_density"], zip(x, law.fs.pdf(x)))
    run.results.update(r0_hat=law.r0_hat, a=law.a, norm=law.fs.norm)


def cmd_oracle_zn(cfg, run):
    s = build_spectrum(cfg)
    beta = cfg.number("model.beta", low=0)
    m = cfg.integer("oracle.samples", 1_000_000, low=2)
    est = oracle.zn_direct_mc(s, beta, m, stream(cfg.integer("mcmc.seed", 0, low=0), 0, "oracle"))
    run.csv("zn.csv", ["n", "beta", "log_z_over_n", "stderr", "high_variance"],
            [(s.n, beta, est.log_z_over_n, est.stderr, est.high_variance)])
    run.results.update(log_z_over_n=est.log_z_over_n, stderr=est.stderr)
    if est.high_variance:
        run.warn(HighVariance.code, f"relative variance of the mean is {est.rel_var:.3g}")


def cmd_oracle_marginal(cfg, run):
    s = build_spectrum(cfg)
    if s.n > 6:
        raise ValidationError(f"model.n must be <= 6 for the exact marginal, got {s.n}", "model.n")
    beta = cfg.number("model.beta", low=0)
    coord = cfg.integer("oracle.coord", 0, low=0)
    if coord >= s.n:
        raise ValidationError(f"oracle.coord must be < model.n, got {coord}", "oracle.coord")
    pts = cfg.integer("oracle.points", 200, low=2)
    dens = oracle.exact_density_small_n(s, beta, coord)
    x = (np.arange(pts) + 0.5) / pts
    run.csv("marginal.csv", ["x", "density", "cdf"], zip(x, dens(x), dens.cdf(x)))


HANDLERS = {
    ("spectrum", "build"): cmd_spectrum_build,
    ("variational", "solve"): cmd_variational_solve,
    ("variational", "gap"): cmd_variational_gap,
    ("variational", "profile"): cmd_variational_profile,
    ("mcmc", "sample"): cmd_mcmc_sample,
    ("free-energy", "ti"): cmd_free_energy_ti,
    ("overlap", "compare"): cmd_overlap_compare,
    ("limit", "sample"): cmd_limit_sample,
    ("limit", "density"): cmd_limit_density,
    ("oracle", "zn"): cmd_oracle_zn,
    ("oracle", "marginal"): cmd_oracle_marginal,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (UTF-8 JSON)")
    common.add_argument("--out", default=None, help="output directory (overrides outputs.directory)")
    common.add_argument("--strict", action="store_true", help="escalate warnings such as HIGH_VARIANCE to errors")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent chains")
    parser = argparse.ArgumentParser(prog="twospike", description="Two-spike spherical spin-glass experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)
    for group, actions in COMMANDS.items():
        gp = groups.add_parser(group)
        acts = gp.add_subparsers(dest="action", required=True)
        for action in actions:
            acts.add_parser(action, parents=[common])
    return parser


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return Config(json.load(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}", "config") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}", "config") from None


def run(group, action, cfg, args):
    out = args.out or cfg.raw("outputs.directory", "out")
    if args.threads < 1:
        raise ValidationError("--threads must be >= 1", "threads")
    r = Run(out, f"{group} {action}", cfg, args)
    start = time.perf_counter()
    HANDLERS[(group, action)](cfg, r)
    r.manifest(time.perf_counter() - start, "ok")
    return r


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        run(args.group, args.action, cfg, args)
    except ValidationError as exc:
        where = f" ({exc.field})" if exc.field else ""
        print(f"error [{exc.code}]{where}: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 3
    except TwoSpikeError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
