"""Exception hierarchy shared by the library and the CLI.

Exit-code mapping used by the command line driver:
  2 -> ConfigError (bad flags, bad config file, inconsistent dimensions)
  3 -> NumericalError and subclasses (factorization failures, hypothesis violations)
  4 -> IOFailure (missing/corrupt files, unwritable output directories)
"""


class RandneError(Exception):
    """Base class for everything raised on purpose by this package."""

    exit_code = 1


class ConfigError(RandneError):
    """Invalid configuration, flag values, or argument combinations."""

    exit_code = 2


class NumericalError(RandneError):
    """A numerical operation failed or a required hypothesis does not hold."""

    exit_code = 3


class IOFailure(RandneError):
    """File reading/writing failed or the on-disk format is corrupt."""

    exit_code = 4


class SingularTriangular(NumericalError):
    """A triangular solve hit an (effectively) zero diagonal entry."""


class SingularSystem(NumericalError):
    """LU elimination produced a pivot below the singularity threshold."""


class NotPositiveDefinite(NumericalError):
    """Cholesky failed: the matrix is not numerically positive definite."""


class RankDeficient(NumericalError):
    """A matrix required to have full column rank does not."""


class RankDeficientSketch(NumericalError):
    """The sampled sketch lost rank; resample or increase the sample count."""


class NotOrthonormal(NumericalError):
    """An input that must have orthonormal columns fails the check."""


class DegenerateResidual(NumericalError):
    """Could not draw a usable direction orthogonal to the column range."""


class EtaUndefined(NumericalError):
    """kappa(R_s) * eps >= 1, so the perturbation amplifier eta is undefined."""


class ZeroSolution(NumericalError):
    """A computed solution has zero norm; relative quantities are undefined."""


class HypothesisViolated(NumericalError):
    """A perturbation check was asked to run outside its stated hypotheses."""
