"""Exception hierarchy; each family maps onto one CLI exit code."""


class AimGFTError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 2


class InputError(AimGFTError, ValueError):
    """Malformed input: unparsable files, bad shapes, invalid parameters."""

    exit_code = 1


class ParseError(InputError):
    """A graph or signal file could not be parsed.

    ``line`` holds the 1-based line number when the failure is tied to one.
    """

    def __init__(self, msg, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {msg}" if where else msg)
        self.line = line
        self.path = path


class NumericalError(AimGFTError, ArithmeticError):
    """Rank, solve or convergence failure."""

    exit_code = 2


class ChainError(NumericalError):
    """Jordan-chain construction could not produce the predicted chains.

    ``level`` is the chain length that could not be reached and ``partial``
    the chains that were accepted before giving up.
    """

    def __init__(self, msg, level=None, partial=None):
        super().__init__(msg)
        self.level = level
        self.partial = partial


class SpectralAmbiguityError(AimGFTError):
    """Clustering or multiplicities are inconsistent with the available vectors."""

    exit_code = 3


class IllConditionedBasisWarning(UserWarning):
    """The Fourier basis is close to singular; projections lose digits."""


class AmbiguousClusterWarning(UserWarning):
    """An eigenvalue was within the cluster radius of more than one centroid."""


class BasisRankError(NumericalError):
    """Basis vectors do not span the space.

    ``missing`` maps each short eigenvalue to the number of absent vectors.
    """

    def __init__(self, msg, missing=None):
        super().__init__(msg)
        self.missing = dict(missing or {})
