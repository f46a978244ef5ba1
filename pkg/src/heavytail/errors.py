"""Exception hierarchy shared by every module in the package.

All failures raised deliberately by this package derive from
:class:`HeavytailError`, so callers can catch one type at the boundary.
The subclasses separate the three failure families that matter
operationally: a caller handed us an invalid object or parameter
(:class:`DomainError` and friends), a numerical routine could not meet
its advertised tolerance (:class:`NumericError`), or a configuration
file failed validation (:class:`ConfigError`).
"""

from __future__ import annotations


class HeavytailError(Exception):
    """Base class for all package-raised errors."""


class DomainError(HeavytailError, ValueError):
    """A parameter or state lies outside its documented domain."""


class SingularStateError(DomainError):
    """A state was passed at which the model is singular.

    The momentum chain has a single singular point at ``k = 0`` where the
    total scattering rate vanishes and the waiting time diverges; state
    validation raises this rather than returning an infinity.
    """


class NumericError(HeavytailError, ArithmeticError):
    """A numerical routine failed to meet its accuracy contract.

    Raised when quadrature cross-checks disagree beyond tolerance, when an
    iteration fails to converge within its budget, or when a spectral
    resolution check indicates the requested computation would be
    untrustworthy at the given discretization.
    """


class ResolutionError(NumericError):
    """A grid or transform resolution is insufficient for the request."""


class ConfigError(HeavytailError, ValueError):
    """An experiment configuration file is malformed or inconsistent."""
