"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class AsymError(Exception):
    """Base class for all errors raised by asymhier."""


class GeometryError(AsymError):
    """Invalid geometry: bad lengths, corner queries, folded layers."""


class EllipticityError(AsymError):
    """An operator coefficient fails to be positive definite."""


class CoverageError(AsymError):
    """A boundary segment has no condition, or more than one."""


class CompatibilityMissing(AsymError):
    """A pure Neumann problem was posed without a pin for its constant."""


class CompatibilityError(AsymError):
    """Neumann data violates the solvability identity."""

    def __init__(self, message: str, residual: float | None = None) -> None:
        super().__init__(message)
        self.residual = residual


class GridError(AsymError):
    """Grids or traces that do not fit together."""


class DataError(AsymError):
    """Required boundary or right-hand-side data is missing or malformed."""


class UnsupportedError(AsymError):
    """A request outside the implemented orders or configurations."""


class SolverError(AsymError):
    """A discrete solve failed (singular system, Newton divergence...)."""


class OracleError(AsymError):
    """A validation oracle could not extract a trustworthy value."""


class DegenerateError(AsymError):
    """A quotient whose denominator vanishes."""


class FlooredError(AsymError):
    """Errors sit at round-off level, so no rate can be fitted."""


class ConfigError(AsymError):
    """Experiment configuration cannot be parsed or is inconsistent."""
