class PairingSchemeException(Exception):
    """
    Generic exception for the ztac pairing schemes
    """


class InvalidGroupElement(PairingSchemeException):
    """
    A serialized group element does not decode to a valid point
    """

    def __init__(self, group: str, detail: str):
        message = f"Invalid {group} element: {detail}"
        super().__init__(message)
        self.group = group


class EmptyUniverse(PairingSchemeException):
    """
    KP-ABE setup over an attribute universe without attributes
    """


class UnknownAttribute(PairingSchemeException):
    """
    An attribute label is not part of the universe the key material covers
    """

    def __init__(self, attribute: str):
        message = f"Attribute {attribute!r} is not in the attribute universe"
        super().__init__(message)
        self.attribute = attribute


class EmptyAttributeSet(PairingSchemeException):
    """
    KP-ABE encryption under an empty attribute set
    """


class PolicyNotSatisfied(PairingSchemeException):
    """
    The ciphertext attributes do not satisfy the access tree of the key
    """


class PolicySyntaxError(PairingSchemeException):
    """
    An access tree is malformed or a policy expression does not parse
    """


class InvalidParams(PairingSchemeException):
    """
    IBBE setup parameters out of range
    """


class IdTooLong(PairingSchemeException):
    """
    An identity is longer than the IBBE identity length bound
    """

    def __init__(self, identity: str, limit: int):
        message = f"Identity {identity!r} exceeds {limit} bytes"
        super().__init__(message)
        self.identity = identity
        self.limit = limit


class TooManyReceivers(PairingSchemeException):
    """
    A receiver set is larger than the IBBE setup supports
    """

    def __init__(self, size: int, limit: int):
        message = f"Receiver set of {size} identities exceeds the maximum of {limit}"
        super().__init__(message)
        self.size = size
        self.limit = limit


class EmptySet(PairingSchemeException):
    """
    IBBE encryption to an empty receiver set
    """


class NotAReceiver(PairingSchemeException):
    """
    The decrypting identity is not a member of the receiver set
    """


class KeyMismatch(PairingSchemeException):
    """
    An identity key is not valid for the identity or the public key
    """
