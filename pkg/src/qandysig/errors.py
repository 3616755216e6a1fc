class QandySigException(Exception):
    """Generic parent class for exceptions thrown by qandysig."""


class ParameterError(QandySigException, ValueError):
    """A protocol, channel or experiment parameter failed validation."""


class AlreadyConsumed(QandySigException):
    """A qandy (or qandy string) was used after it had been measured
    or moved elsewhere."""


class NoCloning(QandySigException):
    """An attempt was made to duplicate a live qandy handle."""


class PadExhausted(QandySigException):
    """A one-time pad does not hold enough unused bits for the requested message."""


class KeyAlreadyUsed(QandySigException):
    """A one-time signing key was asked to sign a second time."""


class InsufficientSample(QandySigException):
    """A TEST produced no matching-basis reveals, so no noise rate can be estimated."""


class QkdAbort(QandySigException):
    """The TEST stage of a key distribution session estimated a noise rate
    above the abort threshold."""

    def __init__(self, qber: float, threshold: float):
        self.qber = qber
        self.threshold = threshold
        super().__init__(
            f"QKD aborted: estimated QBER {qber:.4f} exceeds the threshold {threshold:.4f}"
        )


class KeyTooShort(QandySigException):
    """Post-processing (or a key budget) leaves no usable key material."""


class BudgetOutOfRange(QandySigException, ValueError):
    """A deliberate-mismatch budget lies outside of [0, n]."""


class InsufficientData(QandySigException):
    """Too few usable grid points to fit an exponential decay."""


class InvalidGap(QandySigException, ValueError):
    """Threshold optimization requires ``0 <= p_e < p_f``."""
