"""Exception hierarchy shared across the package."""


class VisDiagError(Exception):
    """Base class for all errors raised by visdiag."""


class RleDecodeError(VisDiagError):
    def __init__(self, message, track=None):
        self.track = track
        if track is not None:
            message = f"{message} (track {track})"
        super().__init__(message)


class DimensionMismatchError(VisDiagError, ValueError):
    pass


class DatasetError(VisDiagError):
    """Input files could not be turned into a valid dataset.

    ``issues`` holds one human-readable line per offending entry.
    """

    def __init__(self, message, issues=()):
        self.issues = list(issues)
        if self.issues:
            shown = "\n  ".join(self.issues[:20])
            more = len(self.issues) - 20
            if more > 0:
                shown += f"\n  ... and {more} more"
            message = f"{message}:\n  {shown}"
        super().__init__(message)


class TaxonomyError(VisDiagError):
    """A false positive fell through every error branch."""


class OracleError(VisDiagError):
    """An oracle fix produced an impossible AP change."""


class PerturbError(VisDiagError):
    """A synthetic injection could not be realized."""
