"""Exception taxonomy shared across the toolkit.

Precondition violations on in-memory values raise plain ``ValueError``;
the classes here cover byte-level and environment failures that callers
may want to catch separately.
"""


class MscError(Exception):
    """Base class for toolkit-specific errors."""


class FormatError(MscError):
    """Malformed or inconsistent serialized data (files, sections, headers)."""


class DecodeError(FormatError):
    """Corrupt or truncated entropy-coded payload."""


class CapabilityError(MscError):
    """A requested optional capability (e.g. external encoder) is unavailable."""


class IncompleteGridError(MscError):
    """A sweep grid is missing (image, configuration) results."""
