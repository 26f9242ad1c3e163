"""Exception types raised by the numerical routines.

All of them derive from :class:`NumericalError` so the CLI can map the whole
family onto a single exit code.
"""

from __future__ import annotations


class NumericalError(Exception):
    """Base class for recoverable numerical failures."""

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class NoConvergence(NumericalError):
    """Eigenvalue iteration failed or returned eigenvalues that do not check out."""


class NearSpectrum(NumericalError):
    """A resolvent was requested too close to an eigenvalue."""


class DegenerateGap(NumericalError):
    """Two eigenvalue clusters are too close to separate with a contour."""


class InsufficientHorizon(NumericalError):
    """The sampled sequence is too short for the requested computation.

    ``required`` is the horizon that would have sufficed (when known) and
    ``largest_usable_j`` the deepest ray-grid index the data supports.
    """

    def __init__(self, message: str, required: int | None = None,
                 largest_usable_j: int | None = None):
        super().__init__(message)
        self.required = required
        self.largest_usable_j = largest_usable_j

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["required_horizon"] = self.required
        out["largest_usable_j"] = self.largest_usable_j
        return out


class QuadratureBlowup(NumericalError):
    """A contour node landed on (or next to) a singularity."""


class ResolutionError(NumericalError):
    """Frequencies are closer than the Fourier resolution of the data."""
