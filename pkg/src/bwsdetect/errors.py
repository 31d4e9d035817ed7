"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3. Plain ValueError/TypeError signal contract violations
(programmer errors) and are not caught by the CLI.
"""


class BwsError(Exception):
    """Base class for all package errors."""


class ConfigError(BwsError):
    """Invalid configuration, usage, or incompatible model/feature setup."""


class DimensionMismatchError(ConfigError):
    """Weight / feature vector dimensions disagree."""


class FingerprintMismatchError(ConfigError):
    """Model was trained under a different feature configuration."""

    def __init__(self, model_fingerprint: str, data_fingerprint: str):
        super().__init__(
            f"feature fingerprint mismatch: model={model_fingerprint!r} "
            f"data={data_fingerprint!r}"
        )
        self.model_fingerprint = model_fingerprint
        self.data_fingerprint = data_fingerprint


class DataError(BwsError):
    """Unusable input data (unreadable image, empty bag, bad manifest...)."""


class ImageReadError(DataError):
    """Image file missing or undecodable."""


class EmptyLesionError(DataError):
    """Lesion detection failed (degenerate image)."""


class EmptyBagError(DataError):
    """No usable region survived extraction for an image."""


class TrainingDataError(DataError):
    """Training set lacks one of the two classes."""


class InfeasibleInferenceError(BwsError):
    """Every instance-count combination is forbidden for the requested bag label."""


class NumericalError(BwsError):
    """Optimization produced a non-finite quantity."""


class DegenerateFeatureWarning(UserWarning):
    """A feature block collapsed to all zeros (flat texture, empty interior)."""
