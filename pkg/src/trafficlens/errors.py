"""Exception types shared across the toolkit."""


class TrafficLensError(Exception):
    """Base class for all trafficlens errors."""


class InvalidBox(TrafficLensError):
    """A box violates the invariants of its format."""


class InvalidImageSize(TrafficLensError):
    """Image width or height is not positive."""


class ParseError(TrafficLensError):
    """Malformed annotation document or label line."""


class UnknownClass(TrafficLensError):
    """Class name or index not present in the class map."""

    def __init__(self, name, message=None):
        self.name = name
        super().__init__(message or f"unknown class: {name!r}")


class InvalidAnnotation(TrafficLensError):
    """Annotation box out of bounds beyond the clamping tolerance."""


class InvalidFractions(TrafficLensError):
    """Split fractions are non-positive or do not sum to 1."""


class InvalidInput(TrafficLensError):
    """Operation input violates a precondition."""


class DuplicateNode(TrafficLensError):
    """Node id already present in the graph."""


class UnknownNode(TrafficLensError):
    """Node id not present in the graph."""


class SelfLoop(TrafficLensError):
    """Road edge with identical endpoints."""


class InvalidLength(TrafficLensError):
    """Road length is not positive."""


class ClassMapMismatch(TrafficLensError):
    """Count vector length differs from the graph's class count."""


class SnapshotError(TrafficLensError):
    """Snapshot file is corrupt or has an unsupported version."""


class WireError(TrafficLensError):
    """Malformed wire record.

    ``offset`` is the byte offset of the failure when known: within the
    record for a bare decode, within the stream when a reader adds context.
    """

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class VersionError(WireError):
    """Wire record with an unsupported schema version."""
