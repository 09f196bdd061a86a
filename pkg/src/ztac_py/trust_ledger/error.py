class TrustLedgerException(Exception):
    """
    Generic exception for the ztac trust ledger
    """


class EmptyDeviceId(TrustLedgerException):
    """
    A trust tree can not be seeded without a device id
    """


class NonMonotonicEpoch(TrustLedgerException):
    """
    Trust tree updates must strictly increase the epoch
    """

    def __init__(self, current: int, requested: int):
        message = f"Trust tree update to epoch {requested} does not follow epoch {current}"
        super().__init__(message)
        self.current = current
        self.requested = requested


class InvalidWeights(TrustLedgerException):
    """
    Scoring weights must be non-negative and sum to one
    """
