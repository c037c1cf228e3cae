"""Spatio-temporal determinantal point processes.

Models are plain dicts such as ``{"family": "sep_gauss_exp", "rho": 0.1,
"alpha_s": 1, "alpha_t": 1}``. Windows are ``(x_extent, y_extent, t_extent)``
tuples. Point patterns are ``(n, 3)`` float arrays of ``x, y, t``.
"""

import json as _json

from . import _stdpp
from ._stdpp import (
    DomainError,
    Error,
    GridTooCoarse,
    InfeasibleBounds,
    InvalidParameter,
    ParseError,
    RejectionBudgetExceeded,
    SizeLimitError,
    TruncationError,
    Unsupported,
)

__version__ = _stdpp.version()

__all__ = [
    "DomainError",
    "Error",
    "GridTooCoarse",
    "InfeasibleBounds",
    "InvalidParameter",
    "ParseError",
    "RejectionBudgetExceeded",
    "SizeLimitError",
    "TruncationError",
    "Unsupported",
    "estimate_intensity",
    "estimate_kfun",
    "estimate_pcf",
    "fit",
    "kernel_value",
    "kfun",
    "normalize_model",
    "pcf",
    "product_density",
    "simulate",
    "simulate_poisson",
    "spectral_density",
    "suggest_cutoff",
    "validate",
]


def _m(model):
    return _json.dumps(model)


def normalize_model(model):
    """Return the model with defaults filled in."""
    return _json.loads(_stdpp.normalize_model(_m(model)))


def validate(model):
    """Existence report: ``valid``, ``rho``, ``rho_max``, ``phi_max``, ``intensity``."""
    return _stdpp.validate(_m(model))


def kernel_value(model, r, t):
    return _stdpp.kernel_value(_m(model), r, t)


def spectral_density(model, omega, tau):
    return _stdpp.spectral_density(_m(model), omega, tau)


def product_density(model, points):
    return _stdpp.product_density(_m(model), points)


def pcf(model, spatial, temporal):
    """Theoretical pair correlation on the grid, shape ``(len(spatial), len(temporal))``."""
    return _stdpp.pcf(_m(model), list(spatial), list(temporal))


def kfun(model, spatial, temporal, method="quadrature"):
    """Theoretical K-function; ``method`` is ``"quadrature"`` or ``"closed_form"``."""
    return _stdpp.kfun(_m(model), list(spatial), list(temporal), method)


def suggest_cutoff(model, window, tolerance=1e-3, enlargement=0.2):
    return _stdpp.suggest_cutoff(_m(model), tuple(window), tolerance, enlargement)


def simulate(model, window, seed, replicates=1, cutoff=None, tolerance=1e-3, enlargement=0.2):
    """Spectral simulation; ``cutoff=None`` picks one meeting ``tolerance``."""
    if isinstance(cutoff, int):
        cutoff = (cutoff, cutoff, cutoff)
    return _stdpp.simulate(_m(model), tuple(window), seed, replicates, cutoff, tolerance, enlargement)


def simulate_poisson(rho, window, seed, replicates=1):
    return _stdpp.simulate_poisson(rho, tuple(window), seed, replicates)


def _patterns(patterns):
    if hasattr(patterns, "ndim") and patterns.ndim == 2:
        return [patterns]
    return list(patterns)


def estimate_intensity(patterns, window):
    return _stdpp.estimate_intensity(_patterns(patterns), tuple(window))


def estimate_kfun(patterns, window, spatial, temporal):
    """Pooled edge-corrected K estimate over one or more patterns."""
    return _stdpp.estimate_kfun(_patterns(patterns), tuple(window), list(spatial), list(temporal))


def estimate_pcf(patterns, window, spatial, temporal, bandwidth=None):
    """Pooled kernel pcf estimate; ``bandwidth`` is ``(spatial, temporal)`` or ``None``."""
    return _stdpp.estimate_pcf(
        _patterns(patterns), tuple(window), list(spatial), list(temporal), bandwidth
    )


def fit(patterns, window, family, bounds, spatial, temporal, statistic="K", max_evaluations=2000, seed=1):
    """Minimum-contrast fit.

    ``bounds`` is ``{"alpha_s": (lo, hi), "alpha_t": (lo, hi)}``. Returns the
    result as a dict with ``family``, ``parameters``, ``contrast`` and
    ``converged``.
    """
    b = (bounds["alpha_s"][0], bounds["alpha_s"][1], bounds["alpha_t"][0], bounds["alpha_t"][1])
    text = _stdpp.fit(
        _patterns(patterns),
        tuple(window),
        family,
        b,
        list(spatial),
        list(temporal),
        statistic,
        max_evaluations,
        seed,
    )
    return _json.loads(text)
