"""Exception hierarchy shared across the toolkit."""


class SsmarkError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedFormat(SsmarkError):
    pass


class CorruptData(SsmarkError):
    pass


class IoFailure(SsmarkError):
    pass


class DimensionMismatch(SsmarkError):
    pass


class ImageTooSmall(SsmarkError):
    pass


class BandOutOfRange(SsmarkError):
    pass


class LengthMismatch(SsmarkError):
    pass


class MessageOutOfRange(SsmarkError):
    pass


class CapacityExceeded(SsmarkError):
    pass


class RangeOverflow(SsmarkError):
    pass


class RegistrationFailed(SsmarkError):
    pass


class StoreLocked(SsmarkError):
    pass


class StoreUnavailable(SsmarkError):
    pass


class RegistryUnavailable(SsmarkError):
    pass


class InvalidSpec(SsmarkError):
    pass


class EmptyCorpus(SsmarkError):
    pass
