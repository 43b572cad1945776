"""Spherical 2-spin glass with two near-degenerate outlier eigenvalues.

Free-energy variational analysis, Gibbs sampling in the eigenbasis, the
limiting replica-overlap law and brute-force oracles.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlockMismatch, DimensionMismatch, DomainError, EmptySelection, HighVariance,
    KTooSmall, NumericalError, RegimeViolation, SamplerStall, TwoSpikeError, ValidationError,
)
from .kernel import BACKEND  # noqa: E402
from .spectrum import (  # noqa: E402
    Mode, Spectrum, build_one_spike_spectrum, build_two_spike_spectrum, sample_goe_spectrum,
)
from .variational import free_energy_limit, make_problem, solve_lagrange  # noqa: E402
from .gibbs import ChainConfig, free_energy_ti, run_chain, sample_overlaps  # noqa: E402
from .limit_laws import make_limit_law, sample_limit_overlap  # noqa: E402

__all__ = [
    "BACKEND", "BlockMismatch", "ChainConfig", "DimensionMismatch", "DomainError", "EmptySelection",
    "HighVariance", "KTooSmall", "Mode", "NumericalError", "RegimeViolation", "SamplerStall", "Spectrum",
    "TwoSpikeError", "ValidationError", "build_one_spike_spectrum", "build_two_spike_spectrum",
    "free_energy_limit", "free_energy_ti", "make_limit_law", "make_problem", "run_chain",
    "sample_goe_spectrum", "sample_limit_overlap", "sample_overlaps", "solve_lagrange",
]
